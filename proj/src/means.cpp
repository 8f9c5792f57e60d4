#include "opmeans/means.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

namespace opmeans {

namespace {

// Grid used by registration checks; spans both tails.
std::vector<double> validation_grid() {
  std::vector<double> g;
  for (int k = -6; k <= 6; ++k) g.push_back(std::ldexp(1.0, k));
  return g;
}

double weighted_upper(double x, double w) { return (1.0 - w) + w * x; }
double weighted_lower(double x, double w) { return x / ((1.0 - w) * x + w); }

}  // namespace

RepresentingFunction::RepresentingFunction(
    std::string name, std::function<double(double)> eval_positive,
    double h_at_0, double deriv_at_1, bool is_symmetric,
    const ToleranceConfig& tol)
    : name_(std::move(name)),
      eval_(std::move(eval_positive)),
      h_at_0_(h_at_0),
      deriv_at_1_(deriv_at_1),
      is_symmetric_(is_symmetric) {
  if (!eval_) {
    throw std::invalid_argument("RepresentingFunction: empty evaluator");
  }
  const double at1 = eval_(1.0);
  if (!(std::abs(at1 - 1.0) <= 1e-12)) {
    std::ostringstream os;
    os << "RepresentingFunction '" << name_ << "': h(1) = " << at1
       << ", must be 1";
    throw std::invalid_argument(os.str());
  }
  if (!(deriv_at_1_ >= 0.0 && deriv_at_1_ <= 1.0)) {
    std::ostringstream os;
    os << "RepresentingFunction '" << name_ << "': h'(1) = " << deriv_at_1_
       << " outside [0, 1]";
    throw std::invalid_argument(os.str());
  }
  if (h_at_0_ < -1e-12 || h_at_0_ > 1.0 + 1e-12) {
    std::ostringstream os;
    os << "RepresentingFunction '" << name_ << "': h(0) = " << h_at_0_
       << " outside [0, 1]";
    throw std::invalid_argument(os.str());
  }
  const double w = deriv_at_1_;
  double max_asym = 0.0;
  for (double x : validation_grid()) {
    const double hx = eval_(x);
    if (!std::isfinite(hx) || hx < -1e-12) {
      std::ostringstream os;
      os << "RepresentingFunction '" << name_ << "': h(" << x << ") = " << hx;
      throw std::invalid_argument(os.str());
    }
    const double slack = 1e-9 * std::max(1.0, std::abs(hx));
    if (hx > weighted_upper(x, w) + slack ||
        hx < weighted_lower(x, w) - slack) {
      std::ostringstream os;
      os << "RepresentingFunction '" << name_ << "': h(" << x << ") = " << hx
         << " escapes the weighted arithmetic/harmonic sandwich for weight "
         << w;
      throw std::invalid_argument(os.str());
    }
    const double asym = std::abs(hx - x * eval_(1.0 / x)) / std::max(1.0, hx);
    max_asym = std::max(max_asym, asym);
  }
  if (is_symmetric_ && max_asym > 1e-9) {
    std::ostringstream os;
    os << "RepresentingFunction '" << name_
       << "': flagged symmetric but h(x) - x h(1/x) deviates by " << max_asym;
    throw std::invalid_argument(os.str());
  }
  if (!is_symmetric_ && max_asym <= 1e-9) {
    std::ostringstream os;
    os << "RepresentingFunction '" << name_
       << "': h satisfies h(x) = x h(1/x) on the grid; flag it symmetric";
    throw std::invalid_argument(os.str());
  }
}

double RepresentingFunction::operator()(double x) const {
  if (x < 0.0) {
    std::ostringstream os;
    os << "RepresentingFunction '" << name_ << "': argument " << x
       << " is negative";
    throw std::domain_error(os.str());
  }
  if (x == 0.0) return h_at_0_;
  return eval_(x);
}

SymmetricMeanMeasure::SymmetricMeanMeasure(double alpha, std::vector<Atom> atoms)
    : alpha_(alpha), atoms_(std::move(atoms)) {
  if (alpha_ < 0.0) {
    throw std::invalid_argument("SymmetricMeanMeasure: alpha < 0");
  }
  double total = alpha_;
  for (const Atom& at : atoms_) {
    if (!(at.lambda > 0.0)) {
      throw std::invalid_argument(
          "SymmetricMeanMeasure: atom locations must be positive");
    }
    if (!(at.weight > 0.0)) {
      throw std::invalid_argument(
          "SymmetricMeanMeasure: atom weights must be positive");
    }
    total += at.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "SymmetricMeanMeasure: alpha + sum of weights = " << total
       << ", must be 1";
    throw std::invalid_argument(os.str());
  }
}

namespace {

double scalar_parallel(double a, double b) {
  if (a == 0.0 || b == 0.0) return 0.0;
  return a * b / (a + b);
}

double measure_h(const SymmetricMeanMeasure& m, double x) {
  double v = m.alpha() * 0.5 * (1.0 + x);
  for (const Atom& at : m.atoms()) {
    const double l = at.lambda;
    v += at.weight * (l + 1.0) / (2.0 * l) *
         (scalar_parallel(l, x) + scalar_parallel(1.0, l * x));
  }
  return v;
}

RepresentingFunction arithmetic_h(double w, const std::string& name) {
  return RepresentingFunction(
      name, [w](double x) { return (1.0 - w) + w * x; }, 1.0 - w, w,
      w == 0.5);
}

RepresentingFunction harmonic_h(double w, const std::string& name) {
  return RepresentingFunction(
      name, [w](double x) { return x / ((1.0 - w) * x + w); },
      w == 0.0 ? 1.0 : 0.0, w, w == 0.5);
}

RepresentingFunction geometric_h(double w, const std::string& name) {
  return RepresentingFunction(
      name, [w](double x) { return std::pow(x, w); }, w == 0.0 ? 1.0 : 0.0, w,
      w == 0.5);
}

void check_weight(double w) {
  if (!(w >= 0.0 && w <= 1.0)) {
    std::ostringstream os;
    os << "mean weight " << w << " outside [0, 1]";
    throw std::invalid_argument(os.str());
  }
}

std::string weight_suffix(double w) {
  if (w == 0.5) return "";
  std::ostringstream os;
  os << ":" << w;
  return os.str();
}

}  // namespace

OperatorMean::OperatorMean(RepresentingFunction h, Kind kind, double weight,
                           std::optional<SymmetricMeanMeasure> measure)
    : h_(std::move(h)), kind_(kind), weight_(weight),
      measure_(std::move(measure)) {}

PdMatrix OperatorMean::apply(const PdMatrix& a, const PdMatrix& b,
                             const ToleranceConfig& tol) const {
  switch (kind_) {
    case Kind::Arithmetic: return arithmetic(a, b, weight_, tol);
    case Kind::Harmonic: return harmonic(a, b, weight_, tol);
    case Kind::Geometric: return geometric(a, b, weight_, tol);
    case Kind::Measure: return mean_from_measure(*measure_, a, b, tol);
    case Kind::Generic: return kubo_ando(*this, a, b, tol);
  }
  return kubo_ando(*this, a, b, tol);
}

OperatorMean arithmetic_mean(double weight) {
  check_weight(weight);
  return OperatorMean(arithmetic_h(weight, "arith" + weight_suffix(weight)),
                      OperatorMean::Kind::Arithmetic, weight, std::nullopt);
}

OperatorMean harmonic_mean(double weight) {
  check_weight(weight);
  return OperatorMean(harmonic_h(weight, "harm" + weight_suffix(weight)),
                      OperatorMean::Kind::Harmonic, weight, std::nullopt);
}

OperatorMean geometric_mean(double weight) {
  check_weight(weight);
  return OperatorMean(geometric_h(weight, "geom" + weight_suffix(weight)),
                      OperatorMean::Kind::Geometric, weight, std::nullopt);
}

OperatorMean measure_mean(const SymmetricMeanMeasure& m) {
  std::ostringstream name;
  name << "measure:alpha=" << m.alpha();
  for (const Atom& at : m.atoms()) {
    name << ",(" << at.lambda << "," << at.weight << ")";
  }
  RepresentingFunction h(
      name.str(), [m](double x) { return measure_h(m, x); }, m.alpha() * 0.5,
      0.5, true);
  return OperatorMean(std::move(h), OperatorMean::Kind::Measure, 0.5, m);
}

OperatorMean custom_mean(RepresentingFunction h) {
  const double w = h.deriv_at_1();
  return OperatorMean(std::move(h), OperatorMean::Kind::Generic, w,
                      std::nullopt);
}

OperatorMean adjoint_mean(const OperatorMean& sigma) {
  const RepresentingFunction h = sigma.representing_function();
  // h*(0) = 1 / lim_{t->inf} h(t); infinite limits flush to 0.
  const double h_tail = h(1e300);
  const double h_star_0 = h_tail > 1e15 ? 0.0 : 1.0 / h_tail;
  RepresentingFunction h_star(
      "adjoint:" + h.name(), [h](double x) { return 1.0 / h(1.0 / x); },
      h_star_0, h.deriv_at_1(), h.is_symmetric());
  return OperatorMean(std::move(h_star), OperatorMean::Kind::Generic,
                      sigma.weight(), std::nullopt);
}

namespace {

SymmetricMeanMeasure measure_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("measure json: ") + e.what());
  }
  if (!j.is_object() || !j.contains("alpha") || !j["alpha"].is_number()) {
    throw std::invalid_argument(
        "measure json: expected {\"alpha\": a, \"atoms\": [[lambda, w], ...]}");
  }
  std::vector<Atom> atoms;
  if (j.contains("atoms")) {
    if (!j["atoms"].is_array()) {
      throw std::invalid_argument("measure json: atoms must be an array");
    }
    for (const auto& e : j["atoms"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() ||
          !e[1].is_number()) {
        throw std::invalid_argument(
            "measure json: each atom must be [lambda, weight]");
      }
      atoms.push_back(Atom{e[0].get<double>(), e[1].get<double>()});
    }
  }
  return SymmetricMeanMeasure(j["alpha"].get<double>(), std::move(atoms));
}

double parse_weight(const std::string& text) {
  std::size_t used = 0;
  double w = 0.0;
  try {
    w = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("mean id: bad weight '" + text + "'");
  }
  if (used != text.size()) {
    throw std::invalid_argument("mean id: bad weight '" + text + "'");
  }
  return w;
}

}  // namespace

OperatorMean make_mean(const std::string& id) {
  if (id == "arith") return arithmetic_mean();
  if (id == "harm") return harmonic_mean();
  if (id == "geom") return geometric_mean();
  if (id.rfind("arith:", 0) == 0) return arithmetic_mean(parse_weight(id.substr(6)));
  if (id.rfind("harm:", 0) == 0) return harmonic_mean(parse_weight(id.substr(5)));
  if (id.rfind("geom:", 0) == 0) return geometric_mean(parse_weight(id.substr(5)));
  if (id.rfind("measure:", 0) == 0) {
    return measure_mean(measure_from_json(id.substr(8)));
  }
  if (id.rfind("adjoint:", 0) == 0) return adjoint_mean(make_mean(id.substr(8)));
  throw std::invalid_argument("unknown mean id '" + id + "'");
}

namespace {

void check_same_dim(const PdMatrix& a, const PdMatrix& b, const char* who) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
  }
}

}  // namespace

PdMatrix arithmetic(const PdMatrix& a, const PdMatrix& b, double weight,
                    const ToleranceConfig& tol) {
  check_same_dim(a, b, "arithmetic");
  check_weight(weight);
  return PdMatrix(
      HermitianMatrix((1.0 - weight) * a.matrix() + weight * b.matrix()), tol);
}

PdMatrix harmonic(const PdMatrix& a, const PdMatrix& b, double weight,
                  const ToleranceConfig& tol) {
  check_same_dim(a, b, "harmonic");
  check_weight(weight);
  if (weight == 0.0) return a;
  if (weight == 1.0) return b;
  const PdMatrix ia = inv_pd(a, tol);
  const PdMatrix ib = inv_pd(b, tol);
  return inv_pd(
      PdMatrix(HermitianMatrix((1.0 - weight) * ia.matrix() +
                               weight * ib.matrix()),
               tol),
      tol);
}

PdMatrix geometric(const PdMatrix& a, const PdMatrix& b, double weight,
                   const ToleranceConfig& tol) {
  check_same_dim(a, b, "geometric");
  check_weight(weight);
  const PdMatrix ra = sqrt_pd(a, tol);
  const PdMatrix ira = inv_pd(ra, tol);
  const HermitianMatrix inner =
      HermitianMatrix(ira.matrix() * b.matrix() * ira.matrix());
  const HermitianMatrix powed = apply_function(
      [weight](double x) { return std::pow(x, weight); }, inner, tol);
  return PdMatrix(
      HermitianMatrix(ra.matrix() * powed.matrix() * ra.matrix()), tol);
}

PdMatrix parallel_sum(const PdMatrix& a, const PdMatrix& b,
                      const ToleranceConfig& tol) {
  check_same_dim(a, b, "parallel_sum");
  const PdMatrix ia = inv_pd(a, tol);
  const PdMatrix ib = inv_pd(b, tol);
  return inv_pd(
      PdMatrix(HermitianMatrix(ia.matrix() + ib.matrix()), tol), tol);
}

PdMatrix kubo_ando(const OperatorMean& sigma, const PdMatrix& a,
                   const PdMatrix& b, const ToleranceConfig& tol) {
  check_same_dim(a, b, "kubo_ando");
  const PdMatrix ra = sqrt_pd(a, tol);
  const PdMatrix ira = inv_pd(ra, tol);
  const HermitianMatrix inner =
      HermitianMatrix(ira.matrix() * b.matrix() * ira.matrix());
  const RepresentingFunction& h = sigma.representing_function();
  const HermitianMatrix mapped =
      apply_function([&h](double x) { return h(x); }, inner, tol);
  return PdMatrix(
      HermitianMatrix(ra.matrix() * mapped.matrix() * ra.matrix()), tol);
}

PdMatrix mean_from_measure(const SymmetricMeanMeasure& m, const PdMatrix& a,
                           const PdMatrix& b, const ToleranceConfig& tol) {
  check_same_dim(a, b, "mean_from_measure");
  CMatrix acc = m.alpha() * 0.5 * (a.matrix() + b.matrix());
  for (const Atom& at : m.atoms()) {
    const double l = at.lambda;
    const PdMatrix la(HermitianMatrix(l * a.matrix()), tol);
    const PdMatrix lb(HermitianMatrix(l * b.matrix()), tol);
    const PdMatrix left = parallel_sum(la, b, tol);
    const PdMatrix right = parallel_sum(a, lb, tol);
    acc += at.weight * (l + 1.0) / (2.0 * l) *
           (left.matrix() + right.matrix());
  }
  return PdMatrix(HermitianMatrix(acc), tol);
}

std::vector<double> default_eps_schedule() { return {1e-4, 1e-6, 1e-8}; }

PsdExtendResult psd_extend(
    const std::function<PdMatrix(const PdMatrix&, const PdMatrix&)>& op,
    const PsdMatrix& a, const PsdMatrix& b,
    const std::vector<double>& eps_schedule, const ToleranceConfig& tol) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("psd_extend: dimension mismatch");
  }
  if (eps_schedule.empty()) {
    throw std::invalid_argument("psd_extend: empty schedule");
  }
  const CMatrix id = CMatrix::Identity(a.dim(), a.dim());
  std::vector<double> gaps;
  std::optional<HermitianMatrix> prev;
  HermitianMatrix last;
  for (double eps : eps_schedule) {
    if (!(eps > 0.0)) {
      throw std::invalid_argument("psd_extend: schedule entries must be positive");
    }
    const PdMatrix ae(HermitianMatrix(a.matrix() + eps * id), tol);
    const PdMatrix be(HermitianMatrix(b.matrix() + eps * id), tol);
    last = op(ae, be).hermitian();
    if (prev) gaps.push_back((last - *prev).spectral_norm());
    prev = last;
  }
  for (std::size_t i = 1; i < gaps.size(); ++i) {
    if (gaps[i] > gaps[i - 1] && gaps[i] > tol.tol_order) {
      std::ostringstream os;
      os << "psd_extend: iterate gaps grow (" << gaps[i - 1] << " -> "
         << gaps[i] << "); regularization is not converging";
      throw std::runtime_error(os.str());
    }
  }
  return PsdExtendResult{PsdMatrix(last, tol), gaps};
}

PsdExtendResult psd_extend(const OperatorMean& sigma, const PsdMatrix& a,
                           const PsdMatrix& b,
                           const std::vector<double>& eps_schedule,
                           const ToleranceConfig& tol) {
  return psd_extend(
      [&sigma, &tol](const PdMatrix& x, const PdMatrix& y) {
        return sigma.apply(x, y, tol);
      },
      a, b, eps_schedule, tol);
}

PdMatrix n_arithmetic(const std::vector<PdMatrix>& as,
                      const ToleranceConfig& tol) {
  if (as.empty()) throw std::invalid_argument("n_arithmetic: empty input");
  CMatrix acc = CMatrix::Zero(as[0].dim(), as[0].dim());
  for (const PdMatrix& a : as) {
    if (a.dim() != as[0].dim()) {
      throw std::invalid_argument("n_arithmetic: dimension mismatch");
    }
    acc += a.matrix();
  }
  return PdMatrix(HermitianMatrix(acc / static_cast<double>(as.size())), tol);
}

PdMatrix n_harmonic(const std::vector<PdMatrix>& as,
                    const ToleranceConfig& tol) {
  if (as.empty()) throw std::invalid_argument("n_harmonic: empty input");
  CMatrix acc = CMatrix::Zero(as[0].dim(), as[0].dim());
  for (const PdMatrix& a : as) {
    if (a.dim() != as[0].dim()) {
      throw std::invalid_argument("n_harmonic: dimension mismatch");
    }
    acc += inv_pd(a, tol).matrix();
  }
  return inv_pd(
      PdMatrix(HermitianMatrix(acc / static_cast<double>(as.size())), tol),
      tol);
}

PdMatrix alm_geometric(const std::vector<PdMatrix>& as, double tol_iter,
                       int max_iter, const ToleranceConfig& tol) {
  const std::size_t n = as.size();
  if (n < 2) {
    throw std::invalid_argument("alm_geometric: need at least two matrices");
  }
  for (const PdMatrix& a : as) {
    if (a.dim() != as[0].dim()) {
      throw std::invalid_argument("alm_geometric: dimension mismatch");
    }
  }
  if (n == 2) return geometric(as[0], as[1], 0.5, tol);

  double scale = 1.0;
  for (const PdMatrix& a : as) scale = std::max(scale, a.spectral_norm());

  std::vector<PdMatrix> cur = as;
  for (int it = 0; it < max_iter; ++it) {
    std::vector<PdMatrix> next;
    next.reserve(n);
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<PdMatrix> others;
      others.reserve(n - 1);
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) others.push_back(cur[j]);
      }
      // Inner recursion runs tighter so its error does not dominate.
      PdMatrix g = alm_geometric(others, std::max(tol_iter * 0.1, 1e-14),
                                 max_iter, tol);
      diff = std::max(diff,
                      (g.hermitian() - cur[i].hermitian()).spectral_norm());
      next.push_back(std::move(g));
    }
    cur = std::move(next);
    if (diff < tol_iter * scale) return n_arithmetic(cur, tol);
  }
  std::ostringstream os;
  os << "alm_geometric: no convergence within " << max_iter << " iterations";
  throw std::runtime_error(os.str());
}

}  // namespace opmeans
