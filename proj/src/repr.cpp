#include "opmeans/repr.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace opmeans {

namespace {

void check_atoms(const std::vector<Atom>& atoms, bool allow_zero_lambda,
                 const char* who) {
  for (const Atom& a : atoms) {
    if (a.lambda < 0.0 || (!allow_zero_lambda && a.lambda == 0.0)) {
      std::ostringstream os;
      os << who << ": atom location " << a.lambda << " not admissible";
      throw std::invalid_argument(os.str());
    }
    if (!(a.weight > 0.0)) {
      std::ostringstream os;
      os << who << ": atom weight " << a.weight << " must be positive";
      throw std::invalid_argument(os.str());
    }
  }
}

void check_nonneg(double v, const char* name, const char* who) {
  if (v < 0.0) {
    std::ostringstream os;
    os << who << ": " << name << " = " << v << " must be nonnegative";
    throw std::invalid_argument(os.str());
  }
}

void check_positive_arg(double x, const char* who) {
  if (!(x > 0.0)) {
    std::ostringstream os;
    os << who << ": argument " << x << " is outside (0, infinity)";
    throw std::domain_error(os.str());
  }
}

}  // namespace

void validate(const GeneralConvexRepr& r) {
  check_nonneg(r.alpha, "alpha", "GeneralConvexRepr");
  check_nonneg(r.beta, "beta", "GeneralConvexRepr");
  check_nonneg(r.gamma, "gamma", "GeneralConvexRepr");
  check_atoms(r.atoms, false, "GeneralConvexRepr");
}

void validate(const DecreasingRepr& r) {
  check_nonneg(r.alpha, "alpha", "DecreasingRepr");
  check_atoms(r.atoms, true, "DecreasingRepr");
}

void validate(const MonotoneRepr& r) {
  check_nonneg(r.alpha, "alpha", "MonotoneRepr");
  check_nonneg(r.beta, "beta", "MonotoneRepr");
  check_atoms(r.atoms, false, "MonotoneRepr");
}

double eval_repr(const GeneralConvexRepr& r, double x) {
  check_positive_arg(x, "GeneralConvexRepr");
  double v = r.alpha + r.beta * x + r.gamma * x * x;
  for (const Atom& a : r.atoms) {
    v += a.weight * (a.lambda + 1.0) * x * x / (a.lambda + x);
  }
  return v;
}

double eval_repr(const DecreasingRepr& r, double x) {
  check_positive_arg(x, "DecreasingRepr");
  double v = r.alpha;
  for (const Atom& a : r.atoms) {
    v += a.weight * (a.lambda + 1.0) / (a.lambda + x);
  }
  return v;
}

double eval_repr(const MonotoneRepr& r, double x) {
  check_positive_arg(x, "MonotoneRepr");
  double v = r.alpha + r.beta * x;
  for (const Atom& a : r.atoms) {
    v += a.weight * (a.lambda + 1.0) * x / (a.lambda + x);
  }
  return v;
}

DecreasingRepr decreasing_to_monotone_transform(const std::vector<Atom>& nu,
                                                double alpha, double beta) {
  check_nonneg(alpha, "alpha", "decreasing_to_monotone_transform");
  check_nonneg(beta, "beta", "decreasing_to_monotone_transform");
  check_atoms(nu, false, "decreasing_to_monotone_transform");
  DecreasingRepr out;
  out.alpha = alpha;
  if (beta > 0.0) out.atoms.push_back(Atom{0.0, beta});
  for (const Atom& a : nu) {
    // w (l+1) x / (l+x) at 1/x equals w (1/l + 1) / (1/l + x): the atom
    // moves to 1/l with the same weight.
    out.atoms.push_back(Atom{1.0 / a.lambda, a.weight});
  }
  validate(out);
  return out;
}

std::string to_string(Tristate t) {
  switch (t) {
    case Tristate::yes: return "yes";
    case Tristate::no: return "no";
    case Tristate::unknown: return "unknown";
  }
  return "unknown";
}

namespace {

CatalogFunction power_function(double p) {
  if (p < -1.0 || p > 2.0) {
    std::ostringstream os;
    os << "pow: exponent " << p << " outside [-1, 2]";
    throw std::invalid_argument(os.str());
  }
  CatalogFunction f;
  std::ostringstream name;
  name << "pow:" << p;
  f.name = name.str();
  f.eval = [p](double x) { return std::pow(x, p); };
  auto flag = [](bool b) { return b ? Tristate::yes : Tristate::no; };
  f.op_monotone = flag(p >= 0.0 && p <= 1.0);
  f.op_monotone_decreasing = flag(p >= -1.0 && p <= 0.0);
  f.op_convex = flag((p >= -1.0 && p <= 0.0) || (p >= 1.0 && p <= 2.0));
  f.op_concave = flag(p >= 0.0 && p <= 1.0);
  f.op_log_convex = flag(p >= -1.0 && p <= 0.0);
  f.op_log_concave = flag(p >= 0.0 && p <= 1.0);
  if (p == -1.0) {
    f.decreasing_repr = DecreasingRepr{0.0, {Atom{0.0, 1.0}}};
  }
  if (p == 0.0) {
    f.decreasing_repr = DecreasingRepr{1.0, {}};
    f.monotone_repr = MonotoneRepr{1.0, 0.0, {}};
  }
  if (p == 1.0) {
    f.monotone_repr = MonotoneRepr{0.0, 1.0, {}};
  }
  return f;
}

CatalogFunction log1p_function() {
  CatalogFunction f;
  f.name = "log1p";
  f.eval = [](double x) { return std::log1p(x); };
  f.op_monotone = Tristate::yes;
  f.op_monotone_decreasing = Tristate::no;
  f.op_convex = Tristate::no;
  f.op_concave = Tristate::yes;
  f.op_log_convex = Tristate::no;
  f.op_log_concave = Tristate::yes;
  return f;
}

CatalogFunction recip_shift_function(double lambda) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("recip-shift: shift must be positive");
  }
  CatalogFunction f;
  std::ostringstream name;
  name << "recip-shift:" << lambda;
  f.name = name.str();
  f.eval = [lambda](double x) { return 1.0 / (x + lambda); };
  f.op_monotone = Tristate::no;
  f.op_monotone_decreasing = Tristate::yes;
  f.op_convex = Tristate::yes;
  f.op_concave = Tristate::no;
  f.op_log_convex = Tristate::yes;
  f.op_log_concave = Tristate::no;
  f.decreasing_repr = DecreasingRepr{0.0, {Atom{lambda, 1.0 / (lambda + 1.0)}}};
  return f;
}

CatalogFunction exp_function() {
  CatalogFunction f;
  f.name = "exp";
  f.eval = [](double x) { return std::exp(x); };
  f.op_monotone = Tristate::no;
  f.op_monotone_decreasing = Tristate::no;
  f.op_convex = Tristate::no;
  f.op_concave = Tristate::no;
  f.op_log_convex = Tristate::no;
  f.op_log_concave = Tristate::no;
  return f;
}

CatalogFunction xlog_function() {
  CatalogFunction f;
  f.name = "xlog";
  f.eval = [](double x) {
    const double d = x - 1.0;
    if (std::abs(d) < 1e-5) {
      // (x-1)/log x = 1 + d/2 - d^2/12 + d^3/24 + O(d^4) near x = 1.
      return 1.0 + d * (0.5 + d * (-1.0 / 12.0 + d / 24.0));
    }
    return d / std::log(x);
  };
  f.op_monotone = Tristate::yes;
  f.op_monotone_decreasing = Tristate::no;
  f.op_convex = Tristate::no;
  f.op_concave = Tristate::yes;
  f.op_log_convex = Tristate::no;
  f.op_log_concave = Tristate::yes;
  return f;
}

CatalogFunction ratio_function() {
  CatalogFunction f;
  f.name = "ratio";
  f.eval = [](double x) { return x / (1.0 + x); };
  f.op_monotone = Tristate::yes;
  f.op_monotone_decreasing = Tristate::no;
  f.op_convex = Tristate::no;
  f.op_concave = Tristate::yes;
  f.op_log_convex = Tristate::no;
  f.op_log_concave = Tristate::yes;
  // x/(1+x) = (1/2) (l+1) x / (l+x) at l = 1.
  f.monotone_repr = MonotoneRepr{0.0, 0.0, {Atom{1.0, 0.5}}};
  return f;
}

std::vector<Atom> atoms_from_json(const nlohmann::json& j) {
  std::vector<Atom> atoms;
  if (!j.is_array()) {
    throw std::invalid_argument("repr json: atoms must be an array");
  }
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() ||
        !e[1].is_number()) {
      throw std::invalid_argument("repr json: each atom must be [lambda, w]");
    }
    atoms.push_back(Atom{e[0].get<double>(), e[1].get<double>()});
  }
  return atoms;
}

CatalogFunction repr_function(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("repr json: ") + e.what());
  }
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw std::invalid_argument("repr json: missing \"kind\"");
  }
  const std::string kind = j["kind"].get<std::string>();
  const double alpha = j.value("alpha", 0.0);
  const double beta = j.value("beta", 0.0);
  const double gamma = j.value("gamma", 0.0);
  std::vector<Atom> atoms;
  if (j.contains("atoms")) atoms = atoms_from_json(j["atoms"]);

  CatalogFunction f;
  f.name = "repr:" + kind;
  if (kind == "decreasing") {
    DecreasingRepr r{alpha, atoms};
    validate(r);
    f.eval = [r](double x) { return eval_repr(r, x); };
    f.op_monotone_decreasing = Tristate::yes;
    f.op_convex = Tristate::yes;
    f.op_log_convex = Tristate::yes;
    f.op_monotone = atoms.empty() ? Tristate::yes : Tristate::no;
    f.op_concave = atoms.empty() ? Tristate::yes : Tristate::no;
    f.op_log_concave = atoms.empty() ? Tristate::yes : Tristate::no;
    f.decreasing_repr = r;
  } else if (kind == "monotone") {
    MonotoneRepr r{alpha, beta, atoms};
    validate(r);
    f.eval = [r](double x) { return eval_repr(r, x); };
    f.op_monotone = Tristate::yes;
    f.op_concave = Tristate::yes;
    f.op_log_concave = Tristate::yes;
    f.op_monotone_decreasing =
        (atoms.empty() && beta == 0.0) ? Tristate::yes : Tristate::no;
    f.op_convex = (atoms.empty()) ? Tristate::yes : Tristate::no;
    f.op_log_convex =
        (atoms.empty() && beta == 0.0) ? Tristate::yes : Tristate::no;
    f.monotone_repr = r;
  } else if (kind == "convex") {
    GeneralConvexRepr r{alpha, beta, gamma, atoms};
    validate(r);
    f.eval = [r](double x) { return eval_repr(r, x); };
    f.op_convex = Tristate::yes;
    f.op_monotone = Tristate::unknown;
    f.op_monotone_decreasing =
        (atoms.empty() && beta == 0.0 && gamma == 0.0) ? Tristate::yes
                                                       : Tristate::unknown;
  } else {
    throw std::invalid_argument("repr json: unknown kind '" + kind + "'");
  }
  return f;
}

double parse_number(const std::string& text, const char* who) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string(who) + ": bad number '" + text + "'");
  }
  if (used != text.size()) {
    throw std::invalid_argument(std::string(who) + ": bad number '" + text + "'");
  }
  return v;
}

}  // namespace

std::vector<CatalogFunction> catalog() {
  std::vector<CatalogFunction> fs;
  for (double p : {-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0}) {
    fs.push_back(power_function(p));
  }
  fs.push_back(log1p_function());
  fs.push_back(recip_shift_function(1.0));
  fs.push_back(recip_shift_function(2.0));
  fs.push_back(exp_function());
  fs.push_back(xlog_function());
  fs.push_back(ratio_function());
  return fs;
}

CatalogFunction resolve_function(const std::string& id) {
  if (id.rfind("pow:", 0) == 0) {
    return power_function(parse_number(id.substr(4), "pow"));
  }
  if (id == "log1p") return log1p_function();
  if (id.rfind("recip-shift:", 0) == 0) {
    return recip_shift_function(parse_number(id.substr(12), "recip-shift"));
  }
  if (id == "exp") return exp_function();
  if (id == "xlog") return xlog_function();
  if (id == "ratio") return ratio_function();
  if (id.rfind("repr:", 0) == 0) return repr_function(id.substr(5));
  throw std::invalid_argument("unknown function id '" + id + "'");
}

}  // namespace opmeans
