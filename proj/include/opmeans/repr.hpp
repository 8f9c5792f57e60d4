#pragma once

// Discrete integral representations of the scalar function classes the
// harness certifies, plus a catalog of stock test functions with their
// known operator properties.
//
// The three representation forms, all with nonnegative alpha/beta/gamma and
// positive atom weights:
//   general convex:      f(x) = alpha + beta x + gamma x^2
//                               + sum_i w_i (l_i + 1) x^2 / (l_i + x)
//   monotone decreasing: f(x) = alpha + sum_i w_i (l_i + 1) / (l_i + x),
//                        atoms at l_i = 0 allowed (the 1/x component)
//   monotone increasing: f(x) = alpha + beta x
//                               + sum_i w_i (l_i + 1) x / (l_i + x)
//
// A decreasing-form f and the increasing-form data of x -> f(1/x) carry the
// same information; the transform below converts exactly atom by atom.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "opmeans/hermitian.hpp"

namespace opmeans {

struct GeneralConvexRepr {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  std::vector<Atom> atoms;  // lambda > 0
};

struct DecreasingRepr {
  double alpha = 0.0;
  std::vector<Atom> atoms;  // lambda >= 0
};

struct MonotoneRepr {
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<Atom> atoms;  // lambda > 0
};

// Structural validation: nonnegative coefficients, positive weights,
// admissible atom locations.  Throws std::invalid_argument.
void validate(const GeneralConvexRepr& r);
void validate(const DecreasingRepr& r);
void validate(const MonotoneRepr& r);

// Evaluation at x > 0 (x <= 0 is a domain error).
double eval_repr(const GeneralConvexRepr& r, double x);
double eval_repr(const DecreasingRepr& r, double x);
double eval_repr(const MonotoneRepr& r, double x);

// Given increasing-form data (alpha, beta, nu) for g(x) = f(1/x), returns
// the decreasing form of f: atoms (1/l_i, w_i), plus an atom at 0 of weight
// beta when beta > 0.  Exact, atom by atom.
DecreasingRepr decreasing_to_monotone_transform(const std::vector<Atom>& nu,
                                                double alpha, double beta);

enum class Tristate { yes, no, unknown };

std::string to_string(Tristate t);

// Stock scalar function with its operator-level properties where they are
// settled; `unknown` where this library takes no position.
struct CatalogFunction {
  std::string name;
  std::function<double(double)> eval;  // defined on (0, infinity)
  Tristate op_monotone = Tristate::unknown;
  Tristate op_monotone_decreasing = Tristate::unknown;
  Tristate op_convex = Tristate::unknown;
  Tristate op_concave = Tristate::unknown;
  Tristate op_log_convex = Tristate::unknown;
  Tristate op_log_concave = Tristate::unknown;
  std::optional<DecreasingRepr> decreasing_repr;
  std::optional<MonotoneRepr> monotone_repr;
};

// All built-in functions.
std::vector<CatalogFunction> catalog();

// Function ids: "pow:<alpha>" with alpha in [-1, 2]; "log1p";
// "recip-shift:<lambda>" for 1/(x + lambda), lambda > 0; "exp"; "xlog"
// for (x - 1)/log x; "ratio" for x/(1 + x); "repr:<json>" where the json
// is {"kind": "decreasing"|"monotone"|"convex", "alpha": ..., "beta": ...,
// "gamma": ..., "atoms": [[lambda, w], ...]} (coefficients optional).
// Unknown ids throw std::invalid_argument.
CatalogFunction resolve_function(const std::string& id);

}  // namespace opmeans
