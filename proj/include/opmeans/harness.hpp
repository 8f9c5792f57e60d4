#pragma once

// Numerical verification harness.
//
// Each condition id names one testable statement about a continuous
// nonnegative function f on (0, infinity).  The a-side conditions are the
// characterizations equivalent to "f is operator monotone decreasing"
// (equivalently, operator log-convex); the b-side conditions are the
// mirror characterizations equivalent to "f is operator monotone"
// (equivalently, operator log-concave).  A check samples random trials,
// computes a scale-normalized margin per trial (negative = violated), and
// reports the worst margin together with a replayable witness when the
// statement fails.
//
//   a1  f(A) <= f(B) whenever A >= B > 0
//   a2  f(A nabla B) <= f(A) sigma f(B) for every symmetric mean sigma
//   a3  f(A nabla B) <= f(A) # f(B)
//   a4  f(A nabla B) <= f(A) sigma f(B) for one chosen symmetric sigma
//   a5  [[f(A), f(A nabla B)], [f(A nabla B), f(B)]] >= 0
//   a6  f(A nabla B) f(B)^{-1} f(A nabla B) <= f(A)
//   a7  f(A nabla B) <= (1/2){t f(A) + t^{-1} f(B)} for all t > 0
//   a8  A -> log <v, f(A) v> is convex
//   a9  (A, v) -> <v, f(A) v> is jointly convex
//   a10 f operator convex and log f convex (scalar)
//   a11 f operator convex and log f operator convex
//   a12 f operator convex and f non-increasing (scalar)
//   a13 membership: supplied decreasing-form representation matches f
//   b1  f(A) >= f(B) whenever A >= B > 0
//   b2  f(A nabla B) >= f(A) sigma f(B) for every symmetric mean sigma
//   b3  f(A nabla B) >= f(A) # f(B)
//   b4  f(A nabla B) >= f(A) sigma f(B) for one chosen symmetric sigma
//   b5  [[f(A), f(A ! B)], [f(A ! B), f(B)]] >= 0
//   b6  f(A nabla B) f(B)^{-1} f(A nabla B) >= f(A)
//   b7  f(A ! B) <= (1/2){t f(A) + t^{-1} f(B)} for all t > 0
//   b8  f operator concave
//   b9  membership: supplied increasing-form representation matches f
//   b10 A -> log <v, f(A) v> is concave
//   prop1_1      log omega(f(A)) is convex for positive functionals omega
//   prop4_1_fwd  f(A nabla B) >= f(A sigma B) for the chosen sigma
//   f2_14        f(A nabla_t B) <= f(A) #_t f(B) over the weight grid
//
// Beyond condition checks, this header exposes the two explicit
// counterexample constructions on rank-one projections, the scalar
// boundary data gamma0 / phi of a mean, the decomposition writing a
// sandwiched pair (X, Y) as (A nabla B, A sigma B), and the contraction
// chain that iterates that decomposition.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opmeans/hermitian.hpp"
#include "opmeans/means.hpp"
#include "opmeans/repr.hpp"

namespace opmeans {

enum class ConditionId {
  a1, a2, a3, a4, a5, a6, a7, a8, a9, a10, a11, a12, a13,
  b1, b2, b3, b4, b5, b6, b7, b8, b9, b10,
  prop1_1, prop4_1_fwd, f2_14,
};

std::string to_string(ConditionId c);
ConditionId parse_condition(const std::string& text);
std::vector<ConditionId> all_conditions();

enum class Outcome { pass, fail, inconclusive };

std::string to_string(Outcome o);

struct TrialConfig {
  std::vector<int> dims = {2, 3, 4, 6};
  int trials_per_dim = 50;
  std::uint64_t seed = 20240901;
  double cond_cap = 1e3;
  ToleranceConfig tol;
  std::vector<double> weight_grid = {0.25, 0.5, 0.75};
  // Symmetric means quantified over by a2 / b2.
  std::vector<std::string> mean_ids = {"arith", "harm", "geom"};
  // The single chosen mean of a4 (must not be the arithmetic mean) and of
  // b4 (must not be the harmonic mean); prop4_1_fwd uses mean_for_a4.
  std::string mean_for_a4 = "harm";
  std::string mean_for_b4 = "arith";
  // Representation payload for a13 / b9 when the function id carries none.
  std::optional<DecreasingRepr> decreasing_payload;
  std::optional<MonotoneRepr> monotone_payload;
};

// Everything needed to replay one trial: named matrices, vectors, scalars.
struct Witness {
  std::map<std::string, HermitianMatrix> matrices;
  std::map<std::string, CVector> vectors;
  std::map<std::string, double> scalars;
};

struct ConditionReport {
  ConditionId condition;
  std::string function;
  Outcome outcome = Outcome::pass;
  bool pass = true;
  int trials = 0;
  double worst_margin = 0.0;
  std::optional<Witness> witness;
  std::string note;
};

// Verdict bands: pass at worst_margin >= -tol_order, fail below
// -10 * tol_order, inconclusive in between.
Outcome outcome_for_margin(double worst_margin, const ToleranceConfig& tol);

ConditionReport check_condition(ConditionId c, const CatalogFunction& f,
                                const TrialConfig& cfg = {});

// Recomputes the margin of a recorded trial; matches the recorded value to
// 1e-12 when replayed under the same config.
double replay_margin(ConditionId c, const CatalogFunction& f, const Witness& w,
                     const TrialConfig& cfg = {});

// Rank-one projection pair with principal angle theta:
// P = diag(1, 0), Q = [[c^2, cs], [cs, s^2]].  Their meet is zero, so any
// symmetric mean built from measure mass alpha gives P sigma Q =
// (alpha/2)(P + Q), and squaring the midpoint forces
// 2 alpha - 1 >= 2 c^2 / (1 + c^2).  The witness records the bound and a
// verified violation of (P nabla Q + eps I)^2 <= (P + eps I) sigma (Q + eps I)
// for the supplied mean at the given regularization.
Witness lemma22_witness(double theta, double eps,
                        const OperatorMean& sigma = harmonic_mean(),
                        const ToleranceConfig& tol = {});

// Strict 2x2 order H > K whose positive parts have incomparable supports:
// H = diag(1, 0), K = eps Q - (I - Q) with Q the projection onto
// span(1, 1).  det(H - K) = (1 - 3 eps)/2, so H > K for eps < 1/3, yet
// s(H_+) = H and s(K_+) = Q are incomparable.  Requires eps in (0, 1/3).
Witness lemma24_witness(double eps, const ToleranceConfig& tol = {});

// gamma0 = 2 h(0) = sigma applied to the scalar pair (2, 0).
double gamma0(const OperatorMean& sigma);

// phi(t) = t sigma (2 - t) on [0, 1]; strictly increasing from gamma0 to 1
// for any mean other than the arithmetic one.
double phi(const OperatorMean& sigma, double t);

// Inverse of phi by bisection to tol_root; y must lie in [gamma0, 1].
double phi_inverse(const OperatorMean& sigma, double y, double tol_root = 1e-12);

// Writes a sandwiched pair X >= Y >= gamma X (gamma > gamma0(sigma)) as
// X = A nabla B, Y = A sigma B:  reduce Y' = X^{-1/2} Y X^{-1/2}, apply
// phi^{-1} through the spectral calculus, set B' = 2I - A', map back.
// Throws std::domain_error when the sandwich fails.
std::pair<PdMatrix, PdMatrix> decompose_mean_pair(const OperatorMean& sigma,
                                                  const PdMatrix& x,
                                                  const PdMatrix& y,
                                                  const ToleranceConfig& tol = {});

// Closed forms for the symmetric harmonic and geometric means:
//   harmonic:  A, B = X -+ X # (X - Y)
//   geometric: A, B = X -+ X # (X - Y X^{-1} Y)
std::pair<PdMatrix, PdMatrix> decompose_closed_form(const OperatorMean& sigma,
                                                    const PdMatrix& x,
                                                    const PdMatrix& y,
                                                    const ToleranceConfig& tol = {});

struct ChainStep {
  double order_margin = 0.0;        // X_k >= X_{k+1}
  double sandwich_margin = 0.0;     // X_{k+1} >= gamma X_k
  double resid_x = 0.0;             // |A nabla B - X_k| / scale
  double resid_y = 0.0;             // |A sigma B - X_{k+1}| / scale
  double f_monotone_margin = 0.0;   // f(X_k) >= f(X_{k+1})
  double dist_to_limit = 0.0;       // |X_k - Y|
  double expected_dist = 0.0;       // gamma^k |X - Y|
};

struct ChainReport {
  std::vector<ChainStep> steps;
  bool ok = true;
};

// Interpolating chain X_k = gamma^k X + (1 - gamma^k) Y between X and Y.
// Each consecutive pair is sandwiched with ratio gamma, is decomposed
// through the given mean, and the images f(X_k) are compared in the
// Loewner order.
ChainReport prop41_chain(const OperatorMean& sigma, const CatalogFunction& f,
                         const PdMatrix& x, const PdMatrix& y, double gamma,
                         int k_max, const ToleranceConfig& tol = {});

// Searches for a violating witness of the given condition template
// ("a1".."b10", "prop1_1", "prop4_1_fwd", "f2_14", or "f2_13" for the
// support-order statement falsified by the lemma24 construction).
// Structured families (projection pairs, commuting pairs, ordered pairs)
// run before seeded random search; deterministic under cfg.seed.
std::optional<Witness> falsify(const std::string& template_id,
                               const CatalogFunction& f,
                               const TrialConfig& cfg = {});

}  // namespace opmeans
