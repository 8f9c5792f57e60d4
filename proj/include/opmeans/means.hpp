#pragma once

// Operator means on positive definite matrices.
//
// A mean is determined by its representing function h on [0, infinity):
// h is operator monotone, h(1) = 1, and the mean acts as
//   A sigma B = A^{1/2} h(A^{-1/2} B A^{-1/2}) A^{1/2}.
// Symmetric means satisfy h(x) = x h(1/x); every mean with h'(1) = w sits
// between the w-weighted arithmetic and harmonic means.  Symmetric means
// also admit a discrete-measure form
//   A sigma B = (alpha/2)(A + B)
//             + sum_i w_i ((l_i+1)/(2 l_i)) { (l_i A):B + A:(l_i B) },
// with alpha + sum_i w_i = 1, where ":" is the parallel sum.
//
// Positive semidefinite inputs are handled by shrinking regularization:
// A sigma B = lim_{e -> 0} (A + eI) sigma (B + eI).

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "opmeans/hermitian.hpp"

namespace opmeans {

// Scalar representing function with cached endpoint data.  Construction
// validates: h(1) = 1, h'(1) in [0, 1], the weighted arithmetic/harmonic
// sandwich on a grid, and that the symmetry flag matches h(x) = x h(1/x).
class RepresentingFunction {
 public:
  RepresentingFunction(std::string name,
                       std::function<double(double)> eval_positive,
                       double h_at_0, double deriv_at_1, bool is_symmetric,
                       const ToleranceConfig& tol = {});

  // x >= 0; x == 0 returns the stored limit value.
  double operator()(double x) const;

  const std::string& name() const { return name_; }
  double h_at_0() const { return h_at_0_; }
  double deriv_at_1() const { return deriv_at_1_; }
  bool is_symmetric() const { return is_symmetric_; }

 private:
  std::string name_;
  std::function<double(double)> eval_;
  double h_at_0_;
  double deriv_at_1_;
  bool is_symmetric_;
};

// Discrete measure datum (alpha, {(lambda_i, w_i)}) for a symmetric mean.
// Requires alpha >= 0, lambda_i > 0, w_i > 0, alpha + sum w_i = 1.
class SymmetricMeanMeasure {
 public:
  SymmetricMeanMeasure(double alpha, std::vector<Atom> atoms);

  double alpha() const { return alpha_; }
  const std::vector<Atom>& atoms() const { return atoms_; }

 private:
  double alpha_;
  std::vector<Atom> atoms_;
};

class OperatorMean {
 public:
  enum class Kind { Generic, Arithmetic, Harmonic, Geometric, Measure };

  const RepresentingFunction& representing_function() const { return h_; }
  const std::string& name() const { return h_.name(); }
  Kind kind() const { return kind_; }
  double weight() const { return weight_; }
  bool is_symmetric() const { return h_.is_symmetric(); }
  const std::optional<SymmetricMeanMeasure>& measure() const { return measure_; }

  // Evaluates the mean, dispatching to the closed form for the built-in
  // kinds and to the spectral construction otherwise.
  PdMatrix apply(const PdMatrix& a, const PdMatrix& b,
                 const ToleranceConfig& tol = {}) const;

  friend OperatorMean arithmetic_mean(double weight);
  friend OperatorMean harmonic_mean(double weight);
  friend OperatorMean geometric_mean(double weight);
  friend OperatorMean measure_mean(const SymmetricMeanMeasure& m);
  friend OperatorMean custom_mean(RepresentingFunction h);
  friend OperatorMean adjoint_mean(const OperatorMean& sigma);

 private:
  OperatorMean(RepresentingFunction h, Kind kind, double weight,
               std::optional<SymmetricMeanMeasure> measure);

  RepresentingFunction h_;
  Kind kind_;
  double weight_;
  std::optional<SymmetricMeanMeasure> measure_;
};

// Built-in registry.  Weights live in [0, 1]; 1/2 gives the symmetric mean.
OperatorMean arithmetic_mean(double weight = 0.5);
OperatorMean harmonic_mean(double weight = 0.5);
OperatorMean geometric_mean(double weight = 0.5);
OperatorMean measure_mean(const SymmetricMeanMeasure& m);
OperatorMean custom_mean(RepresentingFunction h);

// (A sigma* B) = (A^{-1} sigma B^{-1})^{-1}; representing function
// h*(x) = 1 / h(1/x).  Involutive up to numerics; swaps arithmetic and
// harmonic, fixes the geometric mean.
OperatorMean adjoint_mean(const OperatorMean& sigma);

// Mean ids: "arith", "harm", "geom" (optionally ":<weight>"),
// "measure:<json>" with {"alpha": a, "atoms": [[lambda, w], ...]},
// "adjoint:<id>".  Unknown ids throw std::invalid_argument.
OperatorMean make_mean(const std::string& id);

// Direct formulas.
PdMatrix arithmetic(const PdMatrix& a, const PdMatrix& b, double weight = 0.5,
                    const ToleranceConfig& tol = {});
PdMatrix harmonic(const PdMatrix& a, const PdMatrix& b, double weight = 0.5,
                  const ToleranceConfig& tol = {});
PdMatrix geometric(const PdMatrix& a, const PdMatrix& b, double weight = 0.5,
                   const ToleranceConfig& tol = {});

// (A^{-1} + B^{-1})^{-1}; half the harmonic mean.
PdMatrix parallel_sum(const PdMatrix& a, const PdMatrix& b,
                      const ToleranceConfig& tol = {});

// Spectral construction A^{1/2} h(A^{-1/2} B A^{-1/2}) A^{1/2}.
PdMatrix kubo_ando(const OperatorMean& sigma, const PdMatrix& a,
                   const PdMatrix& b, const ToleranceConfig& tol = {});

// Discrete-measure form evaluated literally through parallel sums.
PdMatrix mean_from_measure(const SymmetricMeanMeasure& m, const PdMatrix& a,
                           const PdMatrix& b, const ToleranceConfig& tol = {});

std::vector<double> default_eps_schedule();

// Result of the shrinking regularization: the final iterate plus the
// norm gaps between successive iterates (monotonically shrinking when the
// extension converges).
struct PsdExtendResult {
  PsdMatrix value;
  std::vector<double> gaps;
};

PsdExtendResult psd_extend(const OperatorMean& sigma, const PsdMatrix& a,
                           const PsdMatrix& b,
                           const std::vector<double>& eps_schedule = default_eps_schedule(),
                           const ToleranceConfig& tol = {});

// Same regularization for an arbitrary operation continuous from above,
// e.g. the parallel sum or a rescaled parallel sum.
PsdExtendResult psd_extend(
    const std::function<PdMatrix(const PdMatrix&, const PdMatrix&)>& op,
    const PsdMatrix& a, const PsdMatrix& b,
    const std::vector<double>& eps_schedule = default_eps_schedule(),
    const ToleranceConfig& tol = {});

// n-variable means.
PdMatrix n_arithmetic(const std::vector<PdMatrix>& as,
                      const ToleranceConfig& tol = {});
PdMatrix n_harmonic(const std::vector<PdMatrix>& as,
                    const ToleranceConfig& tol = {});

// Symmetrization-iteration geometric mean of n >= 2 matrices: every matrix
// is replaced by the geometric mean of the other n-1 until the tuple is
// stationary within tol (spectral norm, relative); permutation invariant,
// coincides with the eigenvalue-wise geometric mean on commuting tuples.
PdMatrix alm_geometric(const std::vector<PdMatrix>& as, double tol_iter = 1e-10,
                       int max_iter = 500, const ToleranceConfig& tol = {});

}  // namespace opmeans
