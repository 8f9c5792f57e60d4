#pragma once

// Finite-dimensional Hermitian matrix core: strong types for Hermitian /
// positive semidefinite / positive definite matrices, spectral calculus,
// Loewner-order comparison with explicit numerical margins, spectral
// projections, and seeded random generation.
//
// All comparisons are tolerance-based.  A "margin" is always the smallest
// eigenvalue of a difference, divided by max(1, norms of the operands), so
// that verdicts are scale-invariant.

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace opmeans {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

// Point mass of a discrete measure on [0, infinity).
struct Atom {
  double lambda = 0.0;
  double weight = 0.0;
};

// Tolerances used throughout.  All order/PSD checks are relative to
// max(1, spectral norms of the operands).
struct ToleranceConfig {
  double tol_order = 1e-9;  // Loewner comparison slack
  double tol_proj = 1e-8;   // projection / support eigenvalue cutoff
  double tol_recon = 1e-10; // eigendecomposition reconstruction residual
  double tol_root = 1e-12;  // scalar root finding
  double tol_pd = 1e-12;    // strict positivity floor (relative)
};

// Scale factor for relative comparisons: max(1, |A|, |B|) in spectral norm.
double comparison_scale(double norm_a, double norm_b);

class HermitianMatrix {
 public:
  HermitianMatrix() = default;

  // Symmetrizes on construction: stores (m + m*)/2, so the diagonal is
  // exactly real.  Throws std::invalid_argument if m is not square.
  explicit HermitianMatrix(const CMatrix& m);

  static HermitianMatrix identity(int dim);
  static HermitianMatrix zero(int dim);
  static HermitianMatrix diagonal(const std::vector<double>& entries);

  int dim() const { return static_cast<int>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }

  // Largest absolute eigenvalue.
  double spectral_norm() const;

  HermitianMatrix operator+(const HermitianMatrix& o) const;
  HermitianMatrix operator-(const HermitianMatrix& o) const;
  HermitianMatrix scaled(double c) const;

 private:
  CMatrix m_;
};

// PSD wrapper: validated at construction, min eigenvalue cached.
// Accepts min_eig >= -tol_order * max(1, |A|) and remembers the true value.
class PsdMatrix {
 public:
  explicit PsdMatrix(const HermitianMatrix& a, const ToleranceConfig& tol = {});

  const HermitianMatrix& hermitian() const { return h_; }
  const CMatrix& matrix() const { return h_.matrix(); }
  int dim() const { return h_.dim(); }
  double min_eig() const { return min_eig_; }
  double spectral_norm() const { return h_.spectral_norm(); }

 private:
  HermitianMatrix h_;
  double min_eig_;
};

// PD wrapper: min eigenvalue must clear a strictly positive floor.
class PdMatrix {
 public:
  explicit PdMatrix(const HermitianMatrix& a, const ToleranceConfig& tol = {});

  static PdMatrix identity(int dim);
  static PdMatrix diagonal(const std::vector<double>& entries);

  const HermitianMatrix& hermitian() const { return h_; }
  const CMatrix& matrix() const { return h_.matrix(); }
  int dim() const { return h_.dim(); }
  double min_eig() const { return min_eig_; }
  double spectral_norm() const { return h_.spectral_norm(); }
  PsdMatrix as_psd(const ToleranceConfig& tol = {}) const;

 private:
  HermitianMatrix h_;
  double min_eig_;
};

// Eigenvalues ascending; columns of eigenvectors are the matching
// orthonormal eigenvectors.  Reconstruction U diag(w) U* is validated
// against the input within tol_recon * max(1, |A|).
struct SpectralDecomposition {
  RVector eigenvalues;
  CMatrix eigenvectors;
};

SpectralDecomposition spectral_decompose(const HermitianMatrix& a,
                                         const ToleranceConfig& tol = {});

// f applied through the spectral decomposition.  Any eigenvalue that f maps
// to a non-finite value is reported as a domain error naming the eigenvalue.
HermitianMatrix apply_function(const std::function<double(double)>& f,
                               const HermitianMatrix& a,
                               const ToleranceConfig& tol = {});
HermitianMatrix apply_function(const std::function<double(double)>& f,
                               const PdMatrix& a,
                               const ToleranceConfig& tol = {});

enum class LownerRelation { GEQ, LEQ, EQ, INCOMPARABLE };

std::string to_string(LownerRelation r);

// margin_ab = min eig(A - B) / scale, margin_ba = min eig(B - A) / scale.
// relation: GEQ iff margin_ab >= -tol_order, LEQ iff margin_ba >= -tol_order,
// EQ iff both, INCOMPARABLE iff neither.  margin reports the deciding value:
// the winning direction's margin, min of both for EQ, max of both (least
// violated direction) for INCOMPARABLE.
struct LownerVerdict {
  LownerRelation relation = LownerRelation::INCOMPARABLE;
  double margin = 0.0;
  double margin_ab = 0.0;
  double margin_ba = 0.0;
};

LownerVerdict lowner_compare(const HermitianMatrix& a, const HermitianMatrix& b,
                             const ToleranceConfig& tol = {});

// True iff A >= B up to tolerance (relation GEQ or EQ).
bool lowner_geq(const HermitianMatrix& a, const HermitianMatrix& b,
                const ToleranceConfig& tol = {});

PdMatrix sqrt_pd(const PdMatrix& a, const ToleranceConfig& tol = {});
PdMatrix inv_pd(const PdMatrix& a, const ToleranceConfig& tol = {});

// PSD square root (eigenvalues clamped at zero before the root).
PsdMatrix sqrt_psd(const PsdMatrix& a, const ToleranceConfig& tol = {});

// X* A X for invertible X.  Throws std::domain_error when X is singular or
// its condition number exceeds cond_cap.
HermitianMatrix congruence(const CMatrix& x, const HermitianMatrix& a,
                           double cond_cap = 1e12);

// Validated orthogonal projection: Hermitian, P^2 = P within tol_proj.
class OrthProjection {
 public:
  explicit OrthProjection(const HermitianMatrix& p,
                          const ToleranceConfig& tol = {});

  const HermitianMatrix& hermitian() const { return p_; }
  const CMatrix& matrix() const { return p_.matrix(); }
  int dim() const { return p_.dim(); }
  int rank() const { return rank_; }

 private:
  HermitianMatrix p_;
  int rank_;
};

// Projection onto the range: eigenvalues above tol_proj * max eigenvalue
// count as the range.  The zero matrix maps to the zero projection.
OrthProjection support_projection(const PsdMatrix& a,
                                  const ToleranceConfig& tol = {});

// S = S_plus - S_minus with S_plus S_minus = 0, both PSD.
std::pair<PsdMatrix, PsdMatrix> jordan_decompose(const HermitianMatrix& s,
                                                 const ToleranceConfig& tol = {});

// Projection onto range(P) intersect range(Q): the spectral projection of
// P + Q onto its eigenvalue-2 eigenspace (eigenvalues within tol_proj of 2).
OrthProjection projection_meet(const OrthProjection& p, const OrthProjection& q,
                               const ToleranceConfig& tol = {});

// Deterministic random stream.  Same (seed, salts) always reproduce the same
// sequence; Gaussian values are derived from raw 53-bit uniforms so results
// do not depend on the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  Rng(std::uint64_t seed, std::uint64_t salt1, std::uint64_t salt2);

  double uniform();               // [0, 1)
  double uniform(double lo, double hi);
  std::uint64_t below(std::uint64_t n);
  double gaussian();              // standard normal
  cplx complex_gaussian();        // complex, E|z|^2 = 1

 private:
  std::mt19937_64 gen_;
};

// G G* + delta I with complex Gaussian G, then shifted so the condition
// number is at most cond_cap.  Deterministic under the stream.
PdMatrix random_pd(int dim, Rng& rng, double cond_cap = 1e3,
                   const ToleranceConfig& tol = {});
PdMatrix random_pd(int dim, std::uint64_t seed, double cond_cap = 1e3,
                   const ToleranceConfig& tol = {});

// Random PSD Gram matrix of rank 1..dim, scaled by a uniform factor in
// [0, 2); can be arbitrarily close to zero.
PsdMatrix random_psd(int dim, Rng& rng, const ToleranceConfig& tol = {});

// Unnormalized complex Gaussian vector.
CVector random_vector(int dim, Rng& rng);
CVector random_vector(int dim, std::uint64_t seed);

// Random invertible matrix with singular values in [1/s_cap, s_cap].
CMatrix random_invertible(int dim, Rng& rng, double s_cap = 4.0);

// min eig [[X, Z], [Z, Y]] / max(1, |X|, |Y|, |Z|); the block passes as PSD
// iff this margin clears -tol_order.
double block2_margin(const HermitianMatrix& x, const HermitianMatrix& z,
                     const HermitianMatrix& y);

bool block2_psd(const HermitianMatrix& x, const HermitianMatrix& z,
                const HermitianMatrix& y, const ToleranceConfig& tol = {});

}  // namespace opmeans
