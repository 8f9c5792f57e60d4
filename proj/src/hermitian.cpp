#include "opmeans/hermitian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace opmeans {

double comparison_scale(double norm_a, double norm_b) {
  return std::max({1.0, norm_a, norm_b});
}

HermitianMatrix::HermitianMatrix(const CMatrix& m) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << "HermitianMatrix: input is " << m.rows() << "x" << m.cols()
       << ", expected square";
    throw std::invalid_argument(os.str());
  }
  m_ = 0.5 * (m + m.adjoint());
}

HermitianMatrix HermitianMatrix::identity(int dim) {
  return HermitianMatrix(CMatrix::Identity(dim, dim));
}

HermitianMatrix HermitianMatrix::zero(int dim) {
  return HermitianMatrix(CMatrix::Zero(dim, dim));
}

HermitianMatrix HermitianMatrix::diagonal(const std::vector<double>& entries) {
  const int n = static_cast<int>(entries.size());
  CMatrix m = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = entries[i];
  return HermitianMatrix(m);
}

double HermitianMatrix::spectral_norm() const {
  if (m_.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m_, Eigen::EigenvaluesOnly);
  const RVector& w = es.eigenvalues();
  return std::max(std::abs(w(0)), std::abs(w(w.size() - 1)));
}

HermitianMatrix HermitianMatrix::operator+(const HermitianMatrix& o) const {
  return HermitianMatrix(m_ + o.m_);
}

HermitianMatrix HermitianMatrix::operator-(const HermitianMatrix& o) const {
  return HermitianMatrix(m_ - o.m_);
}

HermitianMatrix HermitianMatrix::scaled(double c) const {
  return HermitianMatrix(c * m_);
}

namespace {

double min_eigenvalue(const HermitianMatrix& a) {
  if (a.dim() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace

PsdMatrix::PsdMatrix(const HermitianMatrix& a, const ToleranceConfig& tol)
    : h_(a), min_eig_(min_eigenvalue(a)) {
  const double scale = std::max(1.0, h_.spectral_norm());
  if (min_eig_ < -tol.tol_order * scale) {
    std::ostringstream os;
    os << "PsdMatrix: min eigenvalue " << min_eig_ << " below -"
       << tol.tol_order << " * " << scale;
    throw std::domain_error(os.str());
  }
}

PdMatrix::PdMatrix(const HermitianMatrix& a, const ToleranceConfig& tol)
    : h_(a), min_eig_(min_eigenvalue(a)) {
  const double scale = std::max(1.0, h_.spectral_norm());
  if (!(min_eig_ > tol.tol_pd * scale)) {
    std::ostringstream os;
    os << "PdMatrix: min eigenvalue " << min_eig_
       << " does not clear the positivity floor " << tol.tol_pd << " * "
       << scale;
    throw std::domain_error(os.str());
  }
}

PdMatrix PdMatrix::identity(int dim) {
  return PdMatrix(HermitianMatrix::identity(dim));
}

PdMatrix PdMatrix::diagonal(const std::vector<double>& entries) {
  return PdMatrix(HermitianMatrix::diagonal(entries));
}

PsdMatrix PdMatrix::as_psd(const ToleranceConfig& tol) const {
  return PsdMatrix(h_, tol);
}

SpectralDecomposition spectral_decompose(const HermitianMatrix& a,
                                         const ToleranceConfig& tol) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a.matrix());
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("spectral_decompose: eigensolver failed to converge");
  }
  SpectralDecomposition d{es.eigenvalues(), es.eigenvectors()};
  const CMatrix recon = d.eigenvectors *
                        d.eigenvalues.asDiagonal().toDenseMatrix().cast<cplx>() *
                        d.eigenvectors.adjoint();
  const double scale = std::max(1.0, a.spectral_norm());
  const double resid = (recon - a.matrix()).cwiseAbs().maxCoeff();
  if (resid > tol.tol_recon * scale) {
    std::ostringstream os;
    os << "spectral_decompose: reconstruction residual " << resid
       << " exceeds " << tol.tol_recon << " * " << scale;
    throw std::runtime_error(os.str());
  }
  return d;
}

HermitianMatrix apply_function(const std::function<double(double)>& f,
                               const HermitianMatrix& a,
                               const ToleranceConfig& tol) {
  SpectralDecomposition d = spectral_decompose(a, tol);
  RVector w(d.eigenvalues.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double y = f(d.eigenvalues(i));
    if (!std::isfinite(y)) {
      std::ostringstream os;
      os << "apply_function: f(" << d.eigenvalues(i)
         << ") is not finite; eigenvalue outside the function's domain";
      throw std::domain_error(os.str());
    }
    w(i) = y;
  }
  return HermitianMatrix(d.eigenvectors *
                         w.asDiagonal().toDenseMatrix().cast<cplx>() *
                         d.eigenvectors.adjoint());
}

HermitianMatrix apply_function(const std::function<double(double)>& f,
                               const PdMatrix& a, const ToleranceConfig& tol) {
  return apply_function(f, a.hermitian(), tol);
}

std::string to_string(LownerRelation r) {
  switch (r) {
    case LownerRelation::GEQ: return "GEQ";
    case LownerRelation::LEQ: return "LEQ";
    case LownerRelation::EQ: return "EQ";
    case LownerRelation::INCOMPARABLE: return "INCOMPARABLE";
  }
  return "INCOMPARABLE";
}

LownerVerdict lowner_compare(const HermitianMatrix& a, const HermitianMatrix& b,
                             const ToleranceConfig& tol) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("lowner_compare: dimension mismatch");
  }
  const double scale = comparison_scale(a.spectral_norm(), b.spectral_norm());
  const HermitianMatrix diff = a - b;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(diff.matrix(), Eigen::EigenvaluesOnly);
  const RVector& w = es.eigenvalues();
  LownerVerdict v;
  v.margin_ab = w(0) / scale;
  v.margin_ba = -w(w.size() - 1) / scale;
  const bool geq = v.margin_ab >= -tol.tol_order;
  const bool leq = v.margin_ba >= -tol.tol_order;
  if (geq && leq) {
    v.relation = LownerRelation::EQ;
    v.margin = std::min(v.margin_ab, v.margin_ba);
  } else if (geq) {
    v.relation = LownerRelation::GEQ;
    v.margin = v.margin_ab;
  } else if (leq) {
    v.relation = LownerRelation::LEQ;
    v.margin = v.margin_ba;
  } else {
    v.relation = LownerRelation::INCOMPARABLE;
    v.margin = std::max(v.margin_ab, v.margin_ba);
  }
  return v;
}

bool lowner_geq(const HermitianMatrix& a, const HermitianMatrix& b,
                const ToleranceConfig& tol) {
  const LownerVerdict v = lowner_compare(a, b, tol);
  return v.relation == LownerRelation::GEQ || v.relation == LownerRelation::EQ;
}

PdMatrix sqrt_pd(const PdMatrix& a, const ToleranceConfig& tol) {
  return PdMatrix(apply_function([](double x) { return std::sqrt(x); },
                                 a.hermitian(), tol),
                  tol);
}

PdMatrix inv_pd(const PdMatrix& a, const ToleranceConfig& tol) {
  return PdMatrix(apply_function([](double x) { return 1.0 / x; },
                                 a.hermitian(), tol),
                  tol);
}

PsdMatrix sqrt_psd(const PsdMatrix& a, const ToleranceConfig& tol) {
  return PsdMatrix(
      apply_function([](double x) { return std::sqrt(std::max(x, 0.0)); },
                     a.hermitian(), tol),
      tol);
}

HermitianMatrix congruence(const CMatrix& x, const HermitianMatrix& a,
                           double cond_cap) {
  if (x.rows() != x.cols() || x.rows() != a.dim()) {
    throw std::invalid_argument("congruence: dimension mismatch");
  }
  Eigen::JacobiSVD<CMatrix> svd(x);
  const RVector& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  const double smax = s(0);
  if (smin <= 0.0 || smax / smin > cond_cap) {
    std::ostringstream os;
    os << "congruence: transform is singular or ill-conditioned (cond="
       << (smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity())
       << ", cap=" << cond_cap << ")";
    throw std::domain_error(os.str());
  }
  return HermitianMatrix(x.adjoint() * a.matrix() * x);
}

OrthProjection::OrthProjection(const HermitianMatrix& p,
                               const ToleranceConfig& tol)
    : p_(p), rank_(0) {
  const double resid =
      (p.matrix() * p.matrix() - p.matrix()).cwiseAbs().maxCoeff();
  if (resid > tol.tol_proj) {
    std::ostringstream os;
    os << "OrthProjection: |P^2 - P| = " << resid << " exceeds " << tol.tol_proj;
    throw std::domain_error(os.str());
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(p.matrix(), Eigen::EigenvaluesOnly);
  const RVector& w = es.eigenvalues();
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) > 0.5) ++rank_;
  }
}

OrthProjection support_projection(const PsdMatrix& a,
                                  const ToleranceConfig& tol) {
  SpectralDecomposition d = spectral_decompose(a.hermitian(), tol);
  const double cutoff = tol.tol_proj * std::max(0.0, d.eigenvalues(d.eigenvalues.size() - 1));
  CMatrix p = CMatrix::Zero(a.dim(), a.dim());
  for (Eigen::Index i = 0; i < d.eigenvalues.size(); ++i) {
    if (d.eigenvalues(i) > cutoff && d.eigenvalues(i) > 0.0) {
      p += d.eigenvectors.col(i) * d.eigenvectors.col(i).adjoint();
    }
  }
  return OrthProjection(HermitianMatrix(p), tol);
}

std::pair<PsdMatrix, PsdMatrix> jordan_decompose(const HermitianMatrix& s,
                                                 const ToleranceConfig& tol) {
  HermitianMatrix plus =
      apply_function([](double x) { return std::max(x, 0.0); }, s, tol);
  HermitianMatrix minus =
      apply_function([](double x) { return std::max(-x, 0.0); }, s, tol);
  return {PsdMatrix(plus, tol), PsdMatrix(minus, tol)};
}

OrthProjection projection_meet(const OrthProjection& p, const OrthProjection& q,
                               const ToleranceConfig& tol) {
  if (p.dim() != q.dim()) {
    throw std::invalid_argument("projection_meet: dimension mismatch");
  }
  const HermitianMatrix sum = p.hermitian() + q.hermitian();
  SpectralDecomposition d = spectral_decompose(sum, tol);
  CMatrix m = CMatrix::Zero(p.dim(), p.dim());
  for (Eigen::Index i = 0; i < d.eigenvalues.size(); ++i) {
    if (d.eigenvalues(i) >= 2.0 - tol.tol_proj) {
      m += d.eigenvectors.col(i) * d.eigenvectors.col(i).adjoint();
    }
  }
  return OrthProjection(HermitianMatrix(m), tol);
}

Rng::Rng(std::uint64_t seed) : gen_(seed) {}

Rng::Rng(std::uint64_t seed, std::uint64_t salt1, std::uint64_t salt2) {
  // SplitMix-style mixing so that nearby (seed, salt) tuples give
  // uncorrelated streams.
  std::uint64_t z = seed;
  z += 0x9e3779b97f4a7c15ull * (salt1 + 1);
  z += 0xbf58476d1ce4e5b9ull * (salt2 + 1);
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  gen_.seed(z);
}

double Rng::uniform() {
  // 53 random bits; independent of library distribution internals.
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::below(std::uint64_t n) {
  // Desk-scale n; modulo bias is negligible for n << 2^64.
  return gen_() % n;
}

double Rng::gaussian() {
  // Box-Muller; consumes exactly two uniforms per value.
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
}

cplx Rng::complex_gaussian() {
  const double re = gaussian();
  const double im = gaussian();
  return cplx(re * 0x1.6a09e667f3bcdp-1, im * 0x1.6a09e667f3bcdp-1);  // 1/sqrt(2)
}

PdMatrix random_pd(int dim, Rng& rng, double cond_cap,
                   const ToleranceConfig& tol) {
  if (dim < 1) throw std::invalid_argument("random_pd: dim must be positive");
  if (cond_cap < 1.0) throw std::invalid_argument("random_pd: cond_cap < 1");
  CMatrix g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) g(i, j) = rng.complex_gaussian();
  }
  CMatrix a0 = g * g.adjoint();
  a0 += 1e-3 * CMatrix::Identity(dim, dim);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a0, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(dim - 1);
  if (hi > cond_cap * lo) {
    const double shift = (hi - cond_cap * lo) / (cond_cap - 1.0);
    a0 += shift * CMatrix::Identity(dim, dim);
  }
  return PdMatrix(HermitianMatrix(a0), tol);
}

PdMatrix random_pd(int dim, std::uint64_t seed, double cond_cap,
                   const ToleranceConfig& tol) {
  Rng rng(seed, static_cast<std::uint64_t>(dim), 0);
  return random_pd(dim, rng, cond_cap, tol);
}

PsdMatrix random_psd(int dim, Rng& rng, const ToleranceConfig& tol) {
  const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(dim)));
  CMatrix v(dim, k);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < k; ++j) v(i, j) = rng.complex_gaussian();
  }
  const double s = rng.uniform(0.0, 2.0);
  return PsdMatrix(HermitianMatrix(s * (v * v.adjoint())), tol);
}

CVector random_vector(int dim, Rng& rng) {
  CVector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.complex_gaussian();
  return v;
}

CVector random_vector(int dim, std::uint64_t seed) {
  Rng rng(seed, static_cast<std::uint64_t>(dim), 1);
  return random_vector(dim, rng);
}

CMatrix random_invertible(int dim, Rng& rng, double s_cap) {
  CMatrix g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) g(i, j) = rng.complex_gaussian();
  }
  Eigen::JacobiSVD<CMatrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  RVector s(dim);
  for (int i = 0; i < dim; ++i) s(i) = rng.uniform(1.0 / s_cap, s_cap);
  return svd.matrixU() * s.asDiagonal().toDenseMatrix().cast<cplx>() *
         svd.matrixV().adjoint();
}

double block2_margin(const HermitianMatrix& x, const HermitianMatrix& z,
                     const HermitianMatrix& y) {
  const int n = x.dim();
  if (z.dim() != n || y.dim() != n) {
    throw std::invalid_argument("block2_margin: dimension mismatch");
  }
  CMatrix blk(2 * n, 2 * n);
  blk.topLeftCorner(n, n) = x.matrix();
  blk.topRightCorner(n, n) = z.matrix();
  blk.bottomLeftCorner(n, n) = z.matrix().adjoint();
  blk.bottomRightCorner(n, n) = y.matrix();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(blk, Eigen::EigenvaluesOnly);
  const double scale = std::max(
      {1.0, x.spectral_norm(), y.spectral_norm(), z.spectral_norm()});
  return es.eigenvalues()(0) / scale;
}

bool block2_psd(const HermitianMatrix& x, const HermitianMatrix& z,
                const HermitianMatrix& y, const ToleranceConfig& tol) {
  return block2_margin(x, z, y) >= -tol.tol_order;
}

}  // namespace opmeans
