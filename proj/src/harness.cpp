#include "opmeans/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace opmeans {

namespace {

const std::pair<ConditionId, const char*> kConditionNames[] = {
    {ConditionId::a1, "a1"},   {ConditionId::a2, "a2"},
    {ConditionId::a3, "a3"},   {ConditionId::a4, "a4"},
    {ConditionId::a5, "a5"},   {ConditionId::a6, "a6"},
    {ConditionId::a7, "a7"},   {ConditionId::a8, "a8"},
    {ConditionId::a9, "a9"},   {ConditionId::a10, "a10"},
    {ConditionId::a11, "a11"}, {ConditionId::a12, "a12"},
    {ConditionId::a13, "a13"}, {ConditionId::b1, "b1"},
    {ConditionId::b2, "b2"},   {ConditionId::b3, "b3"},
    {ConditionId::b4, "b4"},   {ConditionId::b5, "b5"},
    {ConditionId::b6, "b6"},   {ConditionId::b7, "b7"},
    {ConditionId::b8, "b8"},   {ConditionId::b9, "b9"},
    {ConditionId::b10, "b10"}, {ConditionId::prop1_1, "prop1_1"},
    {ConditionId::prop4_1_fwd, "prop4_1_fwd"},
    {ConditionId::f2_14, "f2_14"},
};

}  // namespace

std::string to_string(ConditionId c) {
  for (const auto& [id, name] : kConditionNames) {
    if (id == c) return name;
  }
  return "?";
}

ConditionId parse_condition(const std::string& text) {
  for (const auto& [id, name] : kConditionNames) {
    if (text == name) return id;
  }
  throw std::invalid_argument("unknown condition id '" + text + "'");
}

std::vector<ConditionId> all_conditions() {
  std::vector<ConditionId> out;
  for (const auto& [id, name] : kConditionNames) out.push_back(id);
  return out;
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::pass: return "pass";
    case Outcome::fail: return "fail";
    case Outcome::inconclusive: return "inconclusive";
  }
  return "?";
}

Outcome outcome_for_margin(double worst_margin, const ToleranceConfig& tol) {
  if (worst_margin >= -tol.tol_order) return Outcome::pass;
  if (worst_margin < -10.0 * tol.tol_order) return Outcome::fail;
  return Outcome::inconclusive;
}

namespace {

constexpr double kErrorMargin = -std::numeric_limits<double>::max();

// Margin of X >= Y: min eig(X - Y) / max(1, |X|, |Y|).
double geq_margin(const HermitianMatrix& x, const HermitianMatrix& y,
                  const ToleranceConfig& tol) {
  return lowner_compare(x, y, tol).margin_ab;
}

std::vector<double> scalar_grid() {
  std::vector<double> g;
  for (int k = -6; k <= 6; ++k) g.push_back(std::ldexp(1.0, k));
  return g;
}

// Resolved quantifiers and payloads shared by all trials of one check.
struct CheckContext {
  std::vector<OperatorMean> quantified;     // a2 / b2
  std::optional<OperatorMean> mean_a4;      // a4, prop4_1_fwd
  std::optional<OperatorMean> mean_b4;      // b4
  std::optional<DecreasingRepr> dec_repr;   // a13
  std::optional<MonotoneRepr> mono_repr;    // b9
};

CheckContext build_context(ConditionId c, const CatalogFunction& f,
                           const TrialConfig& cfg) {
  CheckContext ctx;
  if (c == ConditionId::a2 || c == ConditionId::b2) {
    for (const std::string& id : cfg.mean_ids) {
      OperatorMean m = make_mean(id);
      if (!m.is_symmetric()) {
        throw std::invalid_argument("mean '" + id +
                                    "' is not symmetric; a2/b2 quantify over "
                                    "symmetric means only");
      }
      ctx.quantified.push_back(std::move(m));
    }
    if (ctx.quantified.empty()) {
      throw std::invalid_argument("a2/b2 need at least one symmetric mean");
    }
  }
  if (c == ConditionId::a4 || c == ConditionId::prop4_1_fwd) {
    OperatorMean m = make_mean(cfg.mean_for_a4);
    if (!m.is_symmetric() || m.kind() == OperatorMean::Kind::Arithmetic) {
      throw std::invalid_argument(
          "mean_for_a4 must be a symmetric mean other than the arithmetic one");
    }
    ctx.mean_a4 = std::move(m);
  }
  if (c == ConditionId::b4) {
    OperatorMean m = make_mean(cfg.mean_for_b4);
    if (!m.is_symmetric() || m.kind() == OperatorMean::Kind::Harmonic) {
      throw std::invalid_argument(
          "mean_for_b4 must be a symmetric mean other than the harmonic one");
    }
    ctx.mean_b4 = std::move(m);
  }
  if (c == ConditionId::a13) {
    if (cfg.decreasing_payload) {
      ctx.dec_repr = cfg.decreasing_payload;
    } else if (f.decreasing_repr) {
      ctx.dec_repr = f.decreasing_repr;
    } else {
      throw std::invalid_argument(
          "a13 needs a decreasing-form representation payload");
    }
    validate(*ctx.dec_repr);
  }
  if (c == ConditionId::b9) {
    if (cfg.monotone_payload) {
      ctx.mono_repr = cfg.monotone_payload;
    } else if (f.monotone_repr) {
      ctx.mono_repr = f.monotone_repr;
    } else {
      throw std::invalid_argument(
          "b9 needs an increasing-form representation payload");
    }
    validate(*ctx.mono_repr);
  }
  for (double w : cfg.weight_grid) {
    if (!(w > 0.0 && w < 1.0)) {
      throw std::invalid_argument("weight_grid entries must lie in (0, 1)");
    }
  }
  return ctx;
}

struct TrialPieces {
  std::optional<PdMatrix> a;
  std::optional<PdMatrix> b;
  std::optional<CVector> xi;
  std::optional<CVector> eta;
  std::optional<PsdMatrix> w;
};

bool needs_vector(ConditionId c) {
  return c == ConditionId::a8 || c == ConditionId::a9 ||
         c == ConditionId::b10 || c == ConditionId::prop1_1;
}

TrialPieces make_pieces(ConditionId c, int dim, Rng& rng,
                        const TrialConfig& cfg) {
  TrialPieces p;
  if (c == ConditionId::a1 || c == ConditionId::b1) {
    PdMatrix b = random_pd(dim, rng, cfg.cond_cap, cfg.tol);
    PsdMatrix r = random_psd(dim, rng, cfg.tol);
    p.a = PdMatrix(b.hermitian() + r.hermitian(), cfg.tol);
    p.b = b;
    return p;
  }
  if (c == ConditionId::a13 || c == ConditionId::b9) {
    p.a = random_pd(dim, rng, cfg.cond_cap, cfg.tol);
    return p;
  }
  p.a = random_pd(dim, rng, cfg.cond_cap, cfg.tol);
  p.b = random_pd(dim, rng, cfg.cond_cap, cfg.tol);
  if (needs_vector(c)) p.xi = random_vector(dim, rng);
  if (c == ConditionId::a9) p.eta = random_vector(dim, rng);
  if (c == ConditionId::prop1_1) p.w = random_psd(dim, rng, cfg.tol);
  return p;
}

struct TrialResult {
  double margin = 0.0;
  std::map<std::string, double> aux;
};

double quad_form(const CVector& v, const HermitianMatrix& m) {
  return (v.adjoint() * m.matrix() * v)(0, 0).real();
}

double safe_log(double v) {
  if (!(v > 0.0)) {
    std::ostringstream os;
    os << "logarithm of non-positive value " << v;
    throw std::domain_error(os.str());
  }
  return std::log(v);
}

// Grid values of t for the t f(A) + t^{-1} f(B) bounds: the weight grid,
// its reciprocals, 1, and the adversarial t* = sqrt(|f(B)| / |f(A)|).
std::vector<double> t_grid(const TrialConfig& cfg, double norm_fa,
                           double norm_fb) {
  std::vector<double> ts;
  for (double w : cfg.weight_grid) {
    ts.push_back(w);
    ts.push_back(1.0 / w);
  }
  ts.push_back(1.0);
  if (norm_fa > 0.0 && norm_fb > 0.0) {
    ts.push_back(std::sqrt(norm_fb / norm_fa));
  }
  return ts;
}

double opconvex_margin(const CatalogFunction& f, const PdMatrix& a,
                       const PdMatrix& b, const TrialConfig& cfg) {
  const HermitianMatrix fa = apply_function(f.eval, a, cfg.tol);
  const HermitianMatrix fb = apply_function(f.eval, b, cfg.tol);
  const HermitianMatrix fm =
      apply_function(f.eval, arithmetic(a, b, 0.5, cfg.tol), cfg.tol);
  const HermitianMatrix mid = (fa + fb).scaled(0.5);
  return geq_margin(mid, fm, cfg.tol);
}

double scalar_logconvex_margin(const CatalogFunction& f) {
  const std::vector<double> g = scalar_grid();
  double worst = std::numeric_limits<double>::max();
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = i + 1; j < g.size(); ++j) {
      const double lhs = safe_log(f.eval(0.5 * (g[i] + g[j])));
      const double rhs = 0.5 * (safe_log(f.eval(g[i])) + safe_log(f.eval(g[j])));
      worst = std::min(worst, rhs - lhs);
    }
  }
  return worst;
}

double scalar_nonincreasing_margin(const CatalogFunction& f) {
  const std::vector<double> g = scalar_grid();
  double worst = std::numeric_limits<double>::max();
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    const double fi = f.eval(g[i]);
    const double fj = f.eval(g[i + 1]);
    worst = std::min(worst, (fi - fj) / std::max({1.0, std::abs(fi),
                                                  std::abs(fj)}));
  }
  return worst;
}

TrialResult trial_margin(ConditionId c, const CatalogFunction& f,
                         const TrialPieces& p, const CheckContext& ctx,
                         const TrialConfig& cfg) {
  const ToleranceConfig& tol = cfg.tol;
  TrialResult r;
  switch (c) {
    case ConditionId::a1:
    case ConditionId::b1: {
      const HermitianMatrix fa = apply_function(f.eval, *p.a, tol);
      const HermitianMatrix fb = apply_function(f.eval, *p.b, tol);
      r.margin = c == ConditionId::a1 ? geq_margin(fb, fa, tol)
                                      : geq_margin(fa, fb, tol);
      return r;
    }
    case ConditionId::a2:
    case ConditionId::b2: {
      const PdMatrix fa(apply_function(f.eval, *p.a, tol), tol);
      const PdMatrix fb(apply_function(f.eval, *p.b, tol), tol);
      const HermitianMatrix fm =
          apply_function(f.eval, arithmetic(*p.a, *p.b, 0.5, tol), tol);
      double worst = std::numeric_limits<double>::max();
      double worst_idx = 0.0;
      for (std::size_t i = 0; i < ctx.quantified.size(); ++i) {
        const HermitianMatrix mixed =
            ctx.quantified[i].apply(fa, fb, tol).hermitian();
        const double m = c == ConditionId::a2 ? geq_margin(mixed, fm, tol)
                                              : geq_margin(fm, mixed, tol);
        if (m < worst) {
          worst = m;
          worst_idx = static_cast<double>(i);
        }
      }
      r.margin = worst;
      r.aux["mean_index"] = worst_idx;
      return r;
    }
    case ConditionId::a3:
    case ConditionId::b3: {
      const PdMatrix fa(apply_function(f.eval, *p.a, tol), tol);
      const PdMatrix fb(apply_function(f.eval, *p.b, tol), tol);
      const HermitianMatrix fm =
          apply_function(f.eval, arithmetic(*p.a, *p.b, 0.5, tol), tol);
      const HermitianMatrix gm = geometric(fa, fb, 0.5, tol).hermitian();
      r.margin = c == ConditionId::a3 ? geq_margin(gm, fm, tol)
                                      : geq_margin(fm, gm, tol);
      return r;
    }
    case ConditionId::a4:
    case ConditionId::b4: {
      const PdMatrix fa(apply_function(f.eval, *p.a, tol), tol);
      const PdMatrix fb(apply_function(f.eval, *p.b, tol), tol);
      const HermitianMatrix fm =
          apply_function(f.eval, arithmetic(*p.a, *p.b, 0.5, tol), tol);
      const OperatorMean& sigma =
          c == ConditionId::a4 ? *ctx.mean_a4 : *ctx.mean_b4;
      const HermitianMatrix mixed = sigma.apply(fa, fb, tol).hermitian();
      r.margin = c == ConditionId::a4 ? geq_margin(mixed, fm, tol)
                                      : geq_margin(fm, mixed, tol);
      return r;
    }
    case ConditionId::a5:
    case ConditionId::b5: {
      const HermitianMatrix fa = apply_function(f.eval, *p.a, tol);
      const HermitianMatrix fb = apply_function(f.eval, *p.b, tol);
      const PdMatrix inner = c == ConditionId::a5
                                 ? arithmetic(*p.a, *p.b, 0.5, tol)
                                 : harmonic(*p.a, *p.b, 0.5, tol);
      const HermitianMatrix fi = apply_function(f.eval, inner, tol);
      r.margin = block2_margin(fa, fi, fb);
      return r;
    }
    case ConditionId::a6:
    case ConditionId::b6: {
      const HermitianMatrix fa = apply_function(f.eval, *p.a, tol);
      const PdMatrix fb(apply_function(f.eval, *p.b, tol), tol);
      const HermitianMatrix fm =
          apply_function(f.eval, arithmetic(*p.a, *p.b, 0.5, tol), tol);
      const HermitianMatrix ifb = inv_pd(fb, tol).hermitian();
      const HermitianMatrix sandwich(fm.matrix() * ifb.matrix() * fm.matrix());
      r.margin = c == ConditionId::a6 ? geq_margin(fa, sandwich, tol)
                                      : geq_margin(sandwich, fa, tol);
      return r;
    }
    case ConditionId::a7:
    case ConditionId::b7: {
      const HermitianMatrix fa = apply_function(f.eval, *p.a, tol);
      const HermitianMatrix fb = apply_function(f.eval, *p.b, tol);
      const PdMatrix inner = c == ConditionId::a7
                                 ? arithmetic(*p.a, *p.b, 0.5, tol)
                                 : harmonic(*p.a, *p.b, 0.5, tol);
      const HermitianMatrix fi = apply_function(f.eval, inner, tol);
      double worst = std::numeric_limits<double>::max();
      double worst_t = 1.0;
      for (double t : t_grid(cfg, fa.spectral_norm(), fb.spectral_norm())) {
        const HermitianMatrix combo =
            fa.scaled(0.5 * t) + fb.scaled(0.5 / t);
        const double m = geq_margin(combo, fi, tol);
        if (m < worst) {
          worst = m;
          worst_t = t;
        }
      }
      r.margin = worst;
      r.aux["t"] = worst_t;
      return r;
    }
    case ConditionId::a8:
    case ConditionId::b10: {
      const HermitianMatrix fa = apply_function(f.eval, *p.a, tol);
      const HermitianMatrix fb = apply_function(f.eval, *p.b, tol);
      const HermitianMatrix fm =
          apply_function(f.eval, arithmetic(*p.a, *p.b, 0.5, tol), tol);
      const double la = safe_log(quad_form(*p.xi, fa));
      const double lb = safe_log(quad_form(*p.xi, fb));
      const double lm = safe_log(quad_form(*p.xi, fm));
      r.margin = c == ConditionId::a8 ? 0.5 * (la + lb) - lm
                                      : lm - 0.5 * (la + lb);
      return r;
    }
    case ConditionId::a9: {
      const HermitianMatrix fa = apply_function(f.eval, *p.a, tol);
      const HermitianMatrix fb = apply_function(f.eval, *p.b, tol);
      const HermitianMatrix fm =
          apply_function(f.eval, arithmetic(*p.a, *p.b, 0.5, tol), tol);
      const CVector mid = 0.5 * (*p.xi + *p.eta);
      const double va = quad_form(*p.xi, fa);
      const double vb = quad_form(*p.eta, fb);
      const double vm = quad_form(mid, fm);
      r.margin = (0.5 * (va + vb) - vm) / std::max({1.0, va, vb});
      return r;
    }
    case ConditionId::a10: {
      r.margin = std::min(opconvex_margin(f, *p.a, *p.b, cfg),
                          scalar_logconvex_margin(f));
      return r;
    }
    case ConditionId::a11: {
      const double oc = opconvex_margin(f, *p.a, *p.b, cfg);
      auto logf = [&f](double x) { return std::log(f.eval(x)); };
      const HermitianMatrix lfa = apply_function(logf, *p.a, tol);
      const HermitianMatrix lfb = apply_function(logf, *p.b, tol);
      const HermitianMatrix lfm =
          apply_function(logf, arithmetic(*p.a, *p.b, 0.5, tol), tol);
      const HermitianMatrix mid = (lfa + lfb).scaled(0.5);
      r.margin = std::min(oc, geq_margin(mid, lfm, tol));
      return r;
    }
    case ConditionId::a12: {
      r.margin = std::min(opconvex_margin(f, *p.a, *p.b, cfg),
                          scalar_nonincreasing_margin(f));
      return r;
    }
    case ConditionId::a13:
    case ConditionId::b9: {
      double max_dev = 0.0;
      for (double x : scalar_grid()) {
        const double fx = f.eval(x);
        const double rx = c == ConditionId::a13 ? eval_repr(*ctx.dec_repr, x)
                                                : eval_repr(*ctx.mono_repr, x);
        max_dev = std::max(max_dev,
                           std::abs(fx - rx) / std::max(1.0, std::abs(fx)));
      }
      const HermitianMatrix fa = apply_function(f.eval, *p.a, tol);
      const double psd_margin =
          geq_margin(fa, HermitianMatrix::zero(fa.dim()), tol);
      r.margin = std::min(-max_dev, psd_margin);
      r.aux["match_dev"] = max_dev;
      return r;
    }
    case ConditionId::b8: {
      const HermitianMatrix fa = apply_function(f.eval, *p.a, tol);
      const HermitianMatrix fb = apply_function(f.eval, *p.b, tol);
      const HermitianMatrix fm =
          apply_function(f.eval, arithmetic(*p.a, *p.b, 0.5, tol), tol);
      const HermitianMatrix mid = (fa + fb).scaled(0.5);
      r.margin = geq_margin(fm, mid, tol);
      return r;
    }
    case ConditionId::prop1_1: {
      const HermitianMatrix fa = apply_function(f.eval, *p.a, tol);
      const HermitianMatrix fb = apply_function(f.eval, *p.b, tol);
      const HermitianMatrix fm =
          apply_function(f.eval, arithmetic(*p.a, *p.b, 0.5, tol), tol);
      double worst = std::numeric_limits<double>::max();
      double worst_idx = 0.0;
      const auto consider = [&](double va, double vb, double vm, double idx) {
        const double m = 0.5 * (safe_log(va) + safe_log(vb)) - safe_log(vm);
        if (m < worst) {
          worst = m;
          worst_idx = idx;
        }
      };
      consider(fa.matrix().trace().real(), fb.matrix().trace().real(),
               fm.matrix().trace().real(), 0.0);
      consider(quad_form(*p.xi, fa), quad_form(*p.xi, fb), quad_form(*p.xi, fm),
               1.0);
      consider((p.w->matrix() * fa.matrix()).trace().real(),
               (p.w->matrix() * fb.matrix()).trace().real(),
               (p.w->matrix() * fm.matrix()).trace().real(), 2.0);
      r.margin = worst;
      r.aux["omega_index"] = worst_idx;
      return r;
    }
    case ConditionId::prop4_1_fwd: {
      const HermitianMatrix fm =
          apply_function(f.eval, arithmetic(*p.a, *p.b, 0.5, tol), tol);
      const HermitianMatrix fs =
          apply_function(f.eval, ctx.mean_a4->apply(*p.a, *p.b, tol), tol);
      r.margin = geq_margin(fm, fs, tol);
      return r;
    }
    case ConditionId::f2_14: {
      const PdMatrix fa(apply_function(f.eval, *p.a, tol), tol);
      const PdMatrix fb(apply_function(f.eval, *p.b, tol), tol);
      double worst = std::numeric_limits<double>::max();
      double worst_w = 0.5;
      for (double w : cfg.weight_grid) {
        const HermitianMatrix fm =
            apply_function(f.eval, arithmetic(*p.a, *p.b, w, tol), tol);
        const HermitianMatrix gw = geometric(fa, fb, w, tol).hermitian();
        const double m = geq_margin(gw, fm, tol);
        if (m < worst) {
          worst = m;
          worst_w = w;
        }
      }
      r.margin = worst;
      r.aux["weight"] = worst_w;
      return r;
    }
  }
  throw std::logic_error("trial_margin: unhandled condition");
}

Witness pieces_to_witness(const TrialPieces& p) {
  Witness w;
  if (p.a) w.matrices.emplace("A", p.a->hermitian());
  if (p.b) w.matrices.emplace("B", p.b->hermitian());
  if (p.xi) w.vectors.emplace("xi", *p.xi);
  if (p.eta) w.vectors.emplace("eta", *p.eta);
  if (p.w) w.matrices.emplace("W", p.w->hermitian());
  return w;
}

TrialPieces witness_to_pieces(ConditionId c, const Witness& w,
                              const TrialConfig& cfg) {
  TrialPieces p;
  const auto matrix = [&](const char* name) -> HermitianMatrix {
    auto it = w.matrices.find(name);
    if (it == w.matrices.end()) {
      throw std::invalid_argument(std::string("witness missing matrix '") +
                                  name + "'");
    }
    return it->second;
  };
  const auto vector = [&](const char* name) -> CVector {
    auto it = w.vectors.find(name);
    if (it == w.vectors.end()) {
      throw std::invalid_argument(std::string("witness missing vector '") +
                                  name + "'");
    }
    return it->second;
  };
  p.a = PdMatrix(matrix("A"), cfg.tol);
  if (c != ConditionId::a13 && c != ConditionId::b9) {
    p.b = PdMatrix(matrix("B"), cfg.tol);
  }
  if (needs_vector(c)) p.xi = vector("xi");
  if (c == ConditionId::a9) p.eta = vector("eta");
  if (c == ConditionId::prop1_1) p.w = PsdMatrix(matrix("W"), cfg.tol);
  return p;
}

}  // namespace

ConditionReport check_condition(ConditionId c, const CatalogFunction& f,
                                const TrialConfig& cfg) {
  if (cfg.dims.empty() || cfg.trials_per_dim < 1) {
    throw std::invalid_argument("check_condition: empty trial plan");
  }
  const CheckContext ctx = build_context(c, f, cfg);

  ConditionReport report;
  report.condition = c;
  report.function = f.name;

  double worst = std::numeric_limits<double>::max();
  std::optional<TrialPieces> worst_pieces;
  std::map<std::string, double> worst_aux;
  int error_trials = 0;
  std::string first_error;

  for (int dim : cfg.dims) {
    if (dim < 1) throw std::invalid_argument("check_condition: dim < 1");
    for (int t = 0; t < cfg.trials_per_dim; ++t) {
      Rng rng(cfg.seed, static_cast<std::uint64_t>(dim),
              static_cast<std::uint64_t>(t));
      TrialPieces p = make_pieces(c, dim, rng, cfg);
      double margin;
      std::map<std::string, double> aux;
      try {
        TrialResult res = trial_margin(c, f, p, ctx, cfg);
        margin = res.margin;
        aux = std::move(res.aux);
      } catch (const std::exception& e) {
        margin = kErrorMargin;
        ++error_trials;
        if (first_error.empty()) first_error = e.what();
      }
      ++report.trials;
      if (margin < worst) {
        worst = margin;
        worst_pieces = std::move(p);
        worst_aux = std::move(aux);
        worst_aux["dim"] = static_cast<double>(dim);
        worst_aux["trial"] = static_cast<double>(t);
      }
    }
  }

  report.worst_margin = worst;
  report.outcome = outcome_for_margin(worst, cfg.tol);
  report.pass = report.outcome == Outcome::pass;
  if (error_trials > 0) {
    std::ostringstream os;
    os << error_trials << " trial(s) aborted with a domain error: "
       << first_error;
    report.note = os.str();
  }
  if (!report.pass && worst_pieces) {
    Witness w = pieces_to_witness(*worst_pieces);
    for (const auto& [k, v] : worst_aux) w.scalars[k] = v;
    w.scalars["margin"] = worst;
    report.witness = std::move(w);
  }
  return report;
}

double replay_margin(ConditionId c, const CatalogFunction& f, const Witness& w,
                     const TrialConfig& cfg) {
  const CheckContext ctx = build_context(c, f, cfg);
  const TrialPieces p = witness_to_pieces(c, w, cfg);
  return trial_margin(c, f, p, ctx, cfg).margin;
}

namespace {

HermitianMatrix projection_pair_p() {
  return HermitianMatrix::diagonal({1.0, 0.0});
}

HermitianMatrix projection_pair_q(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  CMatrix q(2, 2);
  q << c * c, c * s, c * s, s * s;
  return HermitianMatrix(q);
}

}  // namespace

Witness lemma22_witness(double theta, double eps, const OperatorMean& sigma,
                        const ToleranceConfig& tol) {
  if (!(theta > 0.0 && theta < 1.5707963267948966)) {
    throw std::invalid_argument("lemma22_witness: theta must lie in (0, pi/2)");
  }
  if (!(eps > 0.0)) {
    throw std::invalid_argument("lemma22_witness: eps must be positive");
  }
  const HermitianMatrix p = projection_pair_p();
  const HermitianMatrix q = projection_pair_q(theta);
  const HermitianMatrix mid = (p + q).scaled(0.5);
  const HermitianMatrix mid_sq(mid.matrix() * mid.matrix());

  // (P nabla Q)^2 = (P + Q + PQ + QP) / 4; record the identity residual.
  const CMatrix anti = p.matrix() * q.matrix() + q.matrix() * p.matrix();
  const HermitianMatrix quarter(
      0.25 * (p.matrix() + q.matrix() + anti));
  const double identity_resid =
      (mid_sq.matrix() - quarter.matrix()).cwiseAbs().maxCoeff();

  const double c2 = std::cos(theta) * std::cos(theta);
  const double bound = 2.0 * c2 / (1.0 + c2);
  const double alpha_min = 0.5 * (bound + 1.0);

  const OrthProjection meet = projection_meet(
      OrthProjection(p, tol), OrthProjection(q, tol), tol);

  const CMatrix id = CMatrix::Identity(2, 2);
  const PdMatrix pe(HermitianMatrix(p.matrix() + eps * id), tol);
  const PdMatrix qe(HermitianMatrix(q.matrix() + eps * id), tol);
  const HermitianMatrix lhs(
      (mid.matrix() + eps * id) * (mid.matrix() + eps * id));
  const HermitianMatrix rhs = sigma.apply(pe, qe, tol).hermitian();
  const double violation = geq_margin(rhs, lhs, tol);

  Witness w;
  w.matrices.emplace("P", p);
  w.matrices.emplace("Q", q);
  w.matrices.emplace("midpoint_squared", mid_sq);
  w.matrices.emplace("lhs", lhs);
  w.matrices.emplace("rhs", rhs);
  w.scalars["theta"] = theta;
  w.scalars["eps"] = eps;
  w.scalars["bound_2am1"] = bound;
  w.scalars["alpha_min"] = alpha_min;
  w.scalars["identity_resid"] = identity_resid;
  w.scalars["meet_rank"] = static_cast<double>(meet.rank());
  w.scalars["margin"] = violation;
  return w;
}

Witness lemma24_witness(double eps, const ToleranceConfig& tol) {
  if (!(eps > 0.0 && eps < 1.0 / 3.0)) {
    throw std::invalid_argument("lemma24_witness: eps must lie in (0, 1/3)");
  }
  const HermitianMatrix h = projection_pair_p();
  CMatrix qm(2, 2);
  qm << 0.5, 0.5, 0.5, 0.5;
  const HermitianMatrix q(qm);
  const CMatrix id = CMatrix::Identity(2, 2);
  const HermitianMatrix k(eps * q.matrix() - (id - q.matrix()));

  const HermitianMatrix diff = h - k;
  const double det = diff.matrix().determinant().real();
  const double expected_det = 0.5 * (1.0 - 3.0 * eps);
  const LownerVerdict order = lowner_compare(h, k, tol);

  const auto [h_plus, h_minus] = jordan_decompose(h, tol);
  const auto [k_plus, k_minus] = jordan_decompose(k, tol);
  const OrthProjection sh = support_projection(h_plus, tol);
  const OrthProjection sk = support_projection(k_plus, tol);
  const LownerVerdict support = lowner_compare(sh.hermitian(), sk.hermitian(), tol);
  const OrthProjection meet = projection_meet(sh, sk, tol);

  Witness w;
  w.matrices.emplace("H", h);
  w.matrices.emplace("K", k);
  w.matrices.emplace("support_H_plus", sh.hermitian());
  w.matrices.emplace("support_K_plus", sk.hermitian());
  w.scalars["eps"] = eps;
  w.scalars["det_diff"] = det;
  w.scalars["expected_det"] = expected_det;
  w.scalars["order_margin"] = order.margin_ab;
  w.scalars["support_geq"] =
      (support.relation == LownerRelation::GEQ ||
       support.relation == LownerRelation::EQ)
          ? 1.0
          : 0.0;
  w.scalars["support_margin"] = support.margin_ab;
  w.scalars["meet_rank"] = static_cast<double>(meet.rank());
  w.scalars["margin"] = support.margin_ab;
  return w;
}

double gamma0(const OperatorMean& sigma) {
  return 2.0 * sigma.representing_function().h_at_0();
}

double phi(const OperatorMean& sigma, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    std::ostringstream os;
    os << "phi: t = " << t << " outside [0, 1]";
    throw std::invalid_argument(os.str());
  }
  if (t == 0.0) return gamma0(sigma);
  return t * sigma.representing_function()((2.0 - t) / t);
}

double phi_inverse(const OperatorMean& sigma, double y, double tol_root) {
  const double g0 = gamma0(sigma);
  if (g0 > 1.0 - 1e-9) {
    throw std::invalid_argument(
        "phi_inverse: the boundary curve of this mean is constant; the "
        "decomposition needs a mean other than the arithmetic one");
  }
  if (y < g0 - 1e-9 || y > 1.0 + 1e-9) {
    std::ostringstream os;
    os << "phi_inverse: y = " << y << " outside [" << g0 << ", 1]";
    throw std::domain_error(os.str());
  }
  const double target = std::min(std::max(y, g0), 1.0);
  double lo = 0.0, hi = 1.0;
  while (hi - lo > tol_root) {
    const double mid = 0.5 * (lo + hi);
    if (phi(sigma, mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::pair<PdMatrix, PdMatrix> decompose_mean_pair(const OperatorMean& sigma,
                                                  const PdMatrix& x,
                                                  const PdMatrix& y,
                                                  const ToleranceConfig& tol) {
  if (x.dim() != y.dim()) {
    throw std::invalid_argument("decompose_mean_pair: dimension mismatch");
  }
  if (!sigma.is_symmetric()) {
    throw std::invalid_argument("decompose_mean_pair: mean must be symmetric");
  }
  const double g0 = gamma0(sigma);
  if (g0 > 1.0 - 1e-9) {
    throw std::invalid_argument(
        "decompose_mean_pair: mean must differ from the arithmetic one");
  }
  const PdMatrix rx = sqrt_pd(x, tol);
  const PdMatrix irx = inv_pd(rx, tol);
  const HermitianMatrix yp(irx.matrix() * y.matrix() * irx.matrix());
  SpectralDecomposition d = spectral_decompose(yp, tol);
  const double lo = d.eigenvalues(0);
  const double hi = d.eigenvalues(d.eigenvalues.size() - 1);
  if (!(lo > g0)) {
    std::ostringstream os;
    os << "decompose_mean_pair: sandwich violated below; min eig of the "
          "reduced middle term is "
       << lo << ", needs to exceed gamma0 = " << g0;
    throw std::domain_error(os.str());
  }
  if (hi > 1.0 + tol.tol_order) {
    std::ostringstream os;
    os << "decompose_mean_pair: sandwich violated above; max eig of the "
          "reduced middle term is "
       << hi << ", exceeds 1";
    throw std::domain_error(os.str());
  }
  RVector ts(d.eigenvalues.size());
  for (Eigen::Index i = 0; i < ts.size(); ++i) {
    ts(i) = phi_inverse(sigma, std::min(d.eigenvalues(i), 1.0), tol.tol_root);
  }
  const CMatrix ap = d.eigenvectors *
                     ts.asDiagonal().toDenseMatrix().cast<cplx>() *
                     d.eigenvectors.adjoint();
  const CMatrix bp = 2.0 * CMatrix::Identity(x.dim(), x.dim()) - ap;
  PdMatrix a(HermitianMatrix(rx.matrix() * ap * rx.matrix()), tol);
  PdMatrix b(HermitianMatrix(rx.matrix() * bp * rx.matrix()), tol);
  return {std::move(a), std::move(b)};
}

namespace {

// X # D for positive definite X and positive semidefinite D.
HermitianMatrix geometric_pd_psd(const PdMatrix& x, const HermitianMatrix& d,
                                 const ToleranceConfig& tol) {
  const PdMatrix rx = sqrt_pd(x, tol);
  const PdMatrix irx = inv_pd(rx, tol);
  const HermitianMatrix inner(irx.matrix() * d.matrix() * irx.matrix());
  const HermitianMatrix root = apply_function(
      [](double v) { return std::sqrt(std::max(v, 0.0)); }, inner, tol);
  return HermitianMatrix(rx.matrix() * root.matrix() * rx.matrix());
}

}  // namespace

std::pair<PdMatrix, PdMatrix> decompose_closed_form(const OperatorMean& sigma,
                                                    const PdMatrix& x,
                                                    const PdMatrix& y,
                                                    const ToleranceConfig& tol) {
  if (x.dim() != y.dim()) {
    throw std::invalid_argument("decompose_closed_form: dimension mismatch");
  }
  const bool harmonic_kind =
      sigma.kind() == OperatorMean::Kind::Harmonic && sigma.weight() == 0.5;
  const bool geometric_kind =
      sigma.kind() == OperatorMean::Kind::Geometric && sigma.weight() == 0.5;
  if (!harmonic_kind && !geometric_kind) {
    throw std::invalid_argument(
        "decompose_closed_form: closed forms exist for the symmetric "
        "harmonic and geometric means only");
  }
  HermitianMatrix gap;
  if (harmonic_kind) {
    gap = x.hermitian() - y.hermitian();
  } else {
    const HermitianMatrix ix = inv_pd(x, tol).hermitian();
    gap = HermitianMatrix(x.matrix() -
                          y.matrix() * ix.matrix() * y.matrix());
  }
  const LownerVerdict v =
      lowner_compare(gap, HermitianMatrix::zero(x.dim()), tol);
  if (!(v.relation == LownerRelation::GEQ || v.relation == LownerRelation::EQ)) {
    std::ostringstream os;
    os << "decompose_closed_form: sandwich violated; the gap term has "
          "margin "
       << v.margin_ab;
    throw std::domain_error(os.str());
  }
  const HermitianMatrix g = geometric_pd_psd(x, gap, tol);
  PdMatrix a(x.hermitian() - g, tol);
  PdMatrix b(x.hermitian() + g, tol);
  return {std::move(a), std::move(b)};
}

ChainReport prop41_chain(const OperatorMean& sigma, const CatalogFunction& f,
                         const PdMatrix& x, const PdMatrix& y, double gamma,
                         int k_max, const ToleranceConfig& tol) {
  if (k_max < 1) throw std::invalid_argument("prop41_chain: k_max < 1");
  const double g0 = gamma0(sigma);
  if (!(gamma > g0 && gamma < 1.0)) {
    std::ostringstream os;
    os << "prop41_chain: gamma = " << gamma << " outside (" << g0 << ", 1)";
    throw std::invalid_argument(os.str());
  }
  if (!lowner_geq(x.hermitian(), y.hermitian(), tol)) {
    throw std::domain_error("prop41_chain: X >= Y fails");
  }
  const double dist0 = (x.hermitian() - y.hermitian()).spectral_norm();

  ChainReport report;
  double gk = 1.0;
  for (int k = 0; k < k_max; ++k) {
    const double gk1 = gk * gamma;
    const HermitianMatrix xk =
        x.hermitian().scaled(gk) + y.hermitian().scaled(1.0 - gk);
    const HermitianMatrix xk1 =
        x.hermitian().scaled(gk1) + y.hermitian().scaled(1.0 - gk1);
    const PdMatrix xkp(xk, tol);
    const PdMatrix xk1p(xk1, tol);

    ChainStep step;
    step.order_margin = geq_margin(xk, xk1, tol);
    step.sandwich_margin = geq_margin(xk1, xk.scaled(gamma), tol);
    const auto [a, b] = decompose_mean_pair(sigma, xkp, xk1p, tol);
    const double scale = comparison_scale(xk.spectral_norm(), xk1.spectral_norm());
    step.resid_x =
        (arithmetic(a, b, 0.5, tol).hermitian() - xk).spectral_norm() / scale;
    step.resid_y =
        (sigma.apply(a, b, tol).hermitian() - xk1).spectral_norm() / scale;
    const HermitianMatrix fk = apply_function(f.eval, xkp, tol);
    const HermitianMatrix fk1 = apply_function(f.eval, xk1p, tol);
    step.f_monotone_margin = geq_margin(fk, fk1, tol);
    step.dist_to_limit = (xk - y.hermitian()).spectral_norm();
    step.expected_dist = gk * dist0;
    report.steps.push_back(step);

    report.ok = report.ok && step.order_margin >= -tol.tol_order &&
                step.sandwich_margin >= -tol.tol_order &&
                step.f_monotone_margin >= -tol.tol_order &&
                step.resid_x <= 1e-7 && step.resid_y <= 1e-6;
    gk = gk1;
  }
  return report;
}

namespace {

struct Candidate {
  TrialPieces pieces;
  double family = 0.0;
};

void push_pair_candidates(std::vector<Candidate>& out, const HermitianMatrix& a,
                          const HermitianMatrix& b, double family, Rng& rng,
                          ConditionId c, const TrialConfig& cfg) {
  for (double scale : {1.0, 4.0, 16.0, 64.0}) {
    for (bool swap : {false, true}) {
      try {
        Candidate cand;
        cand.family = family;
        const HermitianMatrix& first = swap ? b : a;
        const HermitianMatrix& second = swap ? a : b;
        cand.pieces.a = PdMatrix(first.scaled(scale), cfg.tol);
        cand.pieces.b = PdMatrix(second.scaled(scale), cfg.tol);
        if (needs_vector(c)) cand.pieces.xi = random_vector(a.dim(), rng);
        if (c == ConditionId::a9) cand.pieces.eta = random_vector(a.dim(), rng);
        if (c == ConditionId::prop1_1) {
          cand.pieces.w = random_psd(a.dim(), rng, cfg.tol);
        }
        out.push_back(std::move(cand));
      } catch (const std::exception&) {
        // Candidate outside the PD domain; skip it.
      }
    }
  }
}

bool ordered_precondition(ConditionId c) {
  return c == ConditionId::a1 || c == ConditionId::b1;
}

}  // namespace

std::optional<Witness> falsify(const std::string& template_id,
                               const CatalogFunction& f,
                               const TrialConfig& cfg) {
  if (template_id == "f2_13") {
    for (double eps : {0.05, 0.1, 0.2}) {
      Witness w = lemma24_witness(eps, cfg.tol);
      if (w.scalars.at("support_geq") == 0.0) {
        w.scalars["family"] = 2.0;
        return w;
      }
    }
    return std::nullopt;
  }

  const ConditionId c = parse_condition(template_id);
  const CheckContext ctx = build_context(c, f, cfg);
  const double fail_at = -10.0 * cfg.tol.tol_order;
  Rng rng(cfg.seed, 0x5eedfa15, 0);

  std::vector<Candidate> candidates;

  if (!ordered_precondition(c)) {
    // Projection pairs with a small regularization, both orders, several
    // overall scales: the geometry that collapses meets and parallel sums.
    for (double theta : {0.2, 0.4, 0.7, 1.0, 1.3}) {
      for (double eps : {1e-3, 1e-4}) {
        const CMatrix id = CMatrix::Identity(2, 2);
        const HermitianMatrix pe(projection_pair_p().matrix() + eps * id);
        const HermitianMatrix qe(projection_pair_q(theta).matrix() + eps * id);
        push_pair_candidates(candidates, pe, qe, 1.0, rng, c, cfg);
      }
    }
    // Commuting pairs: scalar-level violations.
    for (int dim : cfg.dims) {
      for (int t = 0; t < 10; ++t) {
        std::vector<double> da(dim), db(dim);
        for (int i = 0; i < dim; ++i) {
          da[i] = std::exp(rng.uniform(std::log(0.01), std::log(100.0)));
          db[i] = std::exp(rng.uniform(std::log(0.01), std::log(100.0)));
        }
        push_pair_candidates(candidates, HermitianMatrix::diagonal(da),
                             HermitianMatrix::diagonal(db), 3.0, rng, c, cfg);
      }
    }
  } else {
    // Ordered pairs A = B + bump, structured then commuting.
    for (double theta : {0.2, 0.4, 0.7, 1.0, 1.3}) {
      for (double eps : {1e-2, 1e-3}) {
        for (double t : {0.5, 1.0, 2.0}) {
          const CMatrix id = CMatrix::Identity(2, 2);
          const HermitianMatrix b(projection_pair_q(theta).matrix() + eps * id);
          const HermitianMatrix a =
              b + projection_pair_p().scaled(t);
          for (double scale : {1.0, 8.0}) {
            try {
              Candidate cand;
              cand.family = 1.0;
              cand.pieces.a = PdMatrix(a.scaled(scale), cfg.tol);
              cand.pieces.b = PdMatrix(b.scaled(scale), cfg.tol);
              candidates.push_back(std::move(cand));
            } catch (const std::exception&) {
            }
          }
        }
      }
    }
    for (int dim : cfg.dims) {
      for (int t = 0; t < 10; ++t) {
        std::vector<double> db(dim), bump(dim);
        for (int i = 0; i < dim; ++i) {
          db[i] = std::exp(rng.uniform(std::log(0.01), std::log(100.0)));
          bump[i] = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0.0, 10.0);
        }
        const HermitianMatrix b = HermitianMatrix::diagonal(db);
        std::vector<double> da(dim);
        for (int i = 0; i < dim; ++i) da[i] = db[i] + bump[i];
        try {
          Candidate cand;
          cand.family = 3.0;
          cand.pieces.a = PdMatrix(HermitianMatrix::diagonal(da), cfg.tol);
          cand.pieces.b = PdMatrix(b, cfg.tol);
          candidates.push_back(std::move(cand));
        } catch (const std::exception&) {
        }
      }
    }
  }

  // Seeded random search, scaled variants included.
  for (int dim : cfg.dims) {
    for (int t = 0; t < cfg.trials_per_dim; ++t) {
      Rng trial_rng(cfg.seed, static_cast<std::uint64_t>(dim),
                    static_cast<std::uint64_t>(t) + 0x800000);
      TrialPieces p = make_pieces(c, dim, trial_rng, cfg);
      for (double scale : {1.0, 16.0}) {
        Candidate cand;
        cand.family = 4.0;
        cand.pieces.a = PdMatrix(p.a->hermitian().scaled(scale), cfg.tol);
        cand.pieces.b =
            p.b ? std::optional<PdMatrix>(
                      PdMatrix(p.b->hermitian().scaled(scale), cfg.tol))
                : std::nullopt;
        cand.pieces.xi = p.xi;
        cand.pieces.eta = p.eta;
        cand.pieces.w = p.w;
        candidates.push_back(std::move(cand));
      }
    }
  }

  for (const Candidate& cand : candidates) {
    double margin;
    std::map<std::string, double> aux;
    try {
      TrialResult res = trial_margin(c, f, cand.pieces, ctx, cfg);
      margin = res.margin;
      aux = std::move(res.aux);
    } catch (const std::exception&) {
      continue;
    }
    if (margin < fail_at) {
      Witness w = pieces_to_witness(cand.pieces);
      for (const auto& [k, v] : aux) w.scalars[k] = v;
      w.scalars["margin"] = margin;
      w.scalars["family"] = cand.family;
      return w;
    }
  }
  return std::nullopt;
}

}  // namespace opmeans
