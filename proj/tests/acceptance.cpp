// Release gate: one line per criterion, nonzero exit when any of them fails.
// Every threshold below is pinned; loosening one is a release decision, not a
// test fix.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "opmeans/harness.hpp"
#include "opmeans/hermitian.hpp"
#include "opmeans/means.hpp"
#include "opmeans/repr.hpp"

using namespace opmeans;

namespace {

int g_failures = 0;

void report(int idx, const std::string& label, bool ok,
            const std::string& detail) {
  std::ostringstream os;
  os << (ok ? "[PASS]" : "[FAIL]") << " " << idx << ". " << label;
  if (!detail.empty()) os << " — " << detail;
  std::cout << os.str() << "\n";
  if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

int run_cli_code(const std::string& args) {
  const std::string cmd =
      std::string(OPMEANS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ---- 1. ordering of the three classical means ------------------------------

void criterion_agh() {
  const ToleranceConfig tol;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = std::numeric_limits<double>::max();
  for (int dim : {2, 3, 4, 6}) {
    for (int t = 0; t < 200; ++t) {
      Rng rng(0xACCE5501, static_cast<std::uint64_t>(dim),
              static_cast<std::uint64_t>(t));
      const PdMatrix a = random_pd(dim, rng);
      const PdMatrix b = random_pd(dim, rng);
      const HermitianMatrix am = arithmetic(a, b, 0.5, tol).hermitian();
      const HermitianMatrix gm = geometric(a, b, 0.5, tol).hermitian();
      const HermitianMatrix hm = harmonic(a, b, 0.5, tol).hermitian();
      worst = std::min(worst, lowner_compare(am, gm, tol).margin_ab);
      worst = std::min(worst, lowner_compare(gm, hm, tol).margin_ab);
    }
  }
  const double elapsed = seconds_since(t0);
  std::ostringstream os;
  os << "worst margin " << worst << ", " << elapsed << " s";
  report(1, "arithmetic-geometric-harmonic ordering", worst >= -1e-9 && elapsed < 5.0,
         os.str());
}

// ---- 2. congruence transformer identity ------------------------------------

void criterion_transformer() {
  const ToleranceConfig tol;
  const std::vector<OperatorMean> sigmas = {
      arithmetic_mean(), harmonic_mean(), geometric_mean(),
      measure_mean(SymmetricMeanMeasure(0.25, {Atom{0.5, 0.25}, Atom{2.0, 0.5}})),
      measure_mean(SymmetricMeanMeasure(0.5, {Atom{3.0, 0.5}}))};
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int dim = 2 + t % 3;
    Rng rng(0xACCE5502, static_cast<std::uint64_t>(dim),
            static_cast<std::uint64_t>(t));
    const PdMatrix a = random_pd(dim, rng);
    const PdMatrix b = random_pd(dim, rng);
    const CMatrix x = random_invertible(dim, rng);
    for (const OperatorMean& sigma : sigmas) {
      const HermitianMatrix lhs =
          congruence(x, sigma.apply(a, b, tol).hermitian());
      const PdMatrix xa(congruence(x, a.hermitian()), tol);
      const PdMatrix xb(congruence(x, b.hermitian()), tol);
      const HermitianMatrix rhs = sigma.apply(xa, xb, tol).hermitian();
      const double scale =
          comparison_scale(lhs.spectral_norm(), rhs.spectral_norm());
      worst = std::max(worst, (lhs - rhs).spectral_norm() / scale);
    }
  }
  std::ostringstream os;
  os << "worst relative deviation " << worst;
  report(2, "congruence invariance of the means", worst < 1e-8, os.str());
}

// ---- 3/4. coherence of the two condition families --------------------------

struct CoherenceOutcome {
  bool ok = true;
  std::ostringstream detail;
};

void expect_pass(CoherenceOutcome& out, ConditionId c, const std::string& fn) {
  const ConditionReport r = check_condition(c, resolve_function(fn), TrialConfig{});
  if (!r.pass) {
    out.ok = false;
    out.detail << " " << fn << "/" << to_string(c) << " margin "
               << r.worst_margin << ";";
  }
}

bool expect_fail_with_replay(CoherenceOutcome& out, ConditionId c,
                             const std::string& fn) {
  const TrialConfig cfg{};
  const CatalogFunction f = resolve_function(fn);
  const ConditionReport r = check_condition(c, f, cfg);
  if (r.outcome != Outcome::fail || !r.witness.has_value()) {
    out.ok = false;
    out.detail << " " << fn << "/" << to_string(c) << " did not fail;";
    return false;
  }
  const double replay = replay_margin(c, f, *r.witness, cfg);
  const double dev = std::abs(replay - r.worst_margin) /
                     std::max(1.0, std::abs(r.worst_margin));
  if (dev > 1e-12) {
    out.ok = false;
    out.detail << " " << fn << "/" << to_string(c) << " replay off by " << dev
               << ";";
    return false;
  }
  return true;
}

void criterion_a_coherence() {
  CoherenceOutcome out;
  const std::vector<std::string> good = {"pow:-1", "pow:-0.5", "recip-shift:1",
                                         "pow:0"};
  const std::vector<ConditionId> conds = {
      ConditionId::a1, ConditionId::a3, ConditionId::a5,  ConditionId::a6,
      ConditionId::a7, ConditionId::a8, ConditionId::a11, ConditionId::a12};
  for (const std::string& fn : good) {
    for (ConditionId c : conds) expect_pass(out, c, fn);
  }
  for (const std::string& fn : {"pow:2", "pow:1.5", "exp"}) {
    expect_fail_with_replay(out, ConditionId::a3, fn);
  }
  if (run_cli_code("check --cond a3 --fn pow:-1 --dims 2,3 --trials 10") != 0) {
    out.ok = false;
    out.detail << " cli exit for passing combo != 0;";
  }
  if (run_cli_code("check --cond a3 --fn pow:2 --dims 2,3 --trials 10") != 1) {
    out.ok = false;
    out.detail << " cli exit for failing combo != 1;";
  }
  report(3, "order-reversing family coherence", out.ok,
         out.ok ? "4 functions x 8 conditions, 3 falsified, exit codes match"
                : out.detail.str());
}

void criterion_b_coherence() {
  CoherenceOutcome out;
  for (const std::string& fn : {"pow:0.5", "log1p", "pow:1"}) {
    for (ConditionId c : {ConditionId::b1, ConditionId::b3, ConditionId::b5,
                          ConditionId::b6, ConditionId::b8}) {
      expect_pass(out, c, fn);
    }
  }
  expect_fail_with_replay(out, ConditionId::b3, "pow:2");
  report(4, "order-preserving family coherence", out.ok,
         out.ok ? "3 functions x 5 conditions, squaring falsified"
                : out.detail.str());
}

// ---- 5/6. the two explicit counterexample constructions --------------------

void criterion_angle_witness() {
  const Witness w = lemma22_witness(0.05, 1e-4, harmonic_mean());
  const double bound = w.scalars.at("bound_2am1");
  const double margin = w.scalars.at("margin");
  std::ostringstream os;
  os << "bound " << bound << ", regularized margin " << margin;
  report(5, "small-angle projection witness", bound >= 0.995 && margin < -1e-3,
         os.str());
}

void criterion_support_witness() {
  bool ok = true;
  std::ostringstream os;
  for (double eps : {0.05, 0.1, 0.2}) {
    const Witness w = lemma24_witness(eps);
    const double det_dev =
        std::abs(w.scalars.at("det_diff") - 0.5 * (1.0 - 3.0 * eps));
    const bool pd = w.scalars.at("order_margin") > 0.0;
    const bool support_false = w.scalars.at("support_geq") == 0.0;
    if (det_dev > 1e-12 || !pd || !support_false) {
      ok = false;
      os << " eps " << eps << ": det_dev " << det_dev << " pd " << pd
         << " support_geq " << w.scalars.at("support_geq") << ";";
    }
  }
  report(6, "strict order without support order", ok,
         ok ? "det to 1e-12, difference PD, support comparison false"
            : os.str());
}

// ---- 7. sandwich decomposition ---------------------------------------------

void criterion_decomposition() {
  const ToleranceConfig tol;
  const int dims[] = {2, 3, 4, 6};
  bool ok = true;
  std::ostringstream os;
  double worst_x = 0.0, worst_y = 0.0, worst_gap = 0.0;
  for (const OperatorMean& sigma : {harmonic_mean(), geometric_mean()}) {
    for (int t = 0; t < 50; ++t) {
      const int dim = dims[t % 4];
      Rng rng(0xACCE5507, static_cast<std::uint64_t>(dim),
              static_cast<std::uint64_t>(t));
      const PdMatrix x = random_pd(dim, rng);
      // Middle term with spectrum inside (gamma0, 1]: the pair (X, Y) then
      // sits strictly inside the decomposable sandwich.
      const PdMatrix seed = random_pd(dim, rng);
      SpectralDecomposition frame = spectral_decompose(seed.hermitian(), tol);
      RVector vals(dim);
      for (int i = 0; i < dim; ++i) vals(i) = 0.2 + 0.8 * rng.uniform();
      const CMatrix mid = frame.eigenvectors *
                          vals.asDiagonal().toDenseMatrix().cast<cplx>() *
                          frame.eigenvectors.adjoint();
      const PdMatrix rx = sqrt_pd(x, tol);
      const PdMatrix y(HermitianMatrix(rx.matrix() * mid * rx.matrix()), tol);

      const auto [a, b] = decompose_mean_pair(sigma, x, y, tol);
      const double scale = comparison_scale(x.spectral_norm(), y.spectral_norm());
      const double rx_resid =
          (arithmetic(a, b, 0.5, tol).hermitian() - x.hermitian())
              .spectral_norm() / scale;
      const double ry_resid =
          (sigma.apply(a, b, tol).hermitian() - y.hermitian()).spectral_norm() /
          scale;
      const auto [a2, b2] = decompose_closed_form(sigma, x, y, tol);
      const double gap =
          std::max((a.hermitian() - a2.hermitian()).spectral_norm(),
                   (b.hermitian() - b2.hermitian()).spectral_norm()) / scale;
      worst_x = std::max(worst_x, rx_resid);
      worst_y = std::max(worst_y, ry_resid);
      worst_gap = std::max(worst_gap, gap);
    }
  }
  ok = worst_x < 1e-9 && worst_y < 1e-7 && worst_gap < 1e-6;
  os << "resid_x " << worst_x << ", resid_y " << worst_y << ", path gap "
     << worst_gap;
  report(7, "two-sided mean decomposition", ok, os.str());
}

// ---- 8. geometric interpolation chain --------------------------------------

void criterion_chain() {
  const ToleranceConfig tol;
  const OperatorMean sigma = geometric_mean();
  const CatalogFunction f = resolve_function("pow:0.5");
  bool ok = true;
  std::ostringstream os;
  for (int t = 0; t < 20; ++t) {
    const int dim = 2 + t % 3;
    Rng rng(0xACCE5508, static_cast<std::uint64_t>(dim),
            static_cast<std::uint64_t>(t));
    const PdMatrix y = random_pd(dim, rng);
    const PdMatrix x(y.hermitian() + random_psd(dim, rng).hermitian() +
                     HermitianMatrix::identity(dim).scaled(0.05));
    const ChainReport r = prop41_chain(sigma, f, x, y, 0.6, 6, tol);
    const double dist0 = (x.hermitian() - y.hermitian()).spectral_norm();
    bool decay_ok = true;
    for (const ChainStep& s : r.steps) {
      if (std::abs(s.dist_to_limit - s.expected_dist) > 1e-12 * dist0) {
        decay_ok = false;
      }
    }
    if (!r.ok || !decay_ok) {
      ok = false;
      os << " trial " << t << (r.ok ? " decay off" : " step check failed")
         << ";";
    }
  }
  report(8, "monotone interpolation chain", ok,
         ok ? "20 pairs, 6 steps each, exact geometric decay" : os.str());
}

// ---- 9. representation machinery -------------------------------------------

void criterion_representations() {
  bool ok = true;
  std::ostringstream os;

  const DecreasingRepr inv_repr{0.0, {Atom{0.0, 1.0}}};
  for (int k = -6; k <= 6; ++k) {
    const double x = std::pow(2.0, k);
    if (std::abs(eval_repr(inv_repr, x) - 1.0 / x) > 1e-12) {
      ok = false;
      os << " eval mismatch at 2^" << k << ";";
    }
  }

  int lifts = 0;
  for (const CatalogFunction& f : catalog()) {
    if (!f.decreasing_repr.has_value()) continue;
    ++lifts;
    // Express g(x) = f(1/x) in increasing form, map it back, and compare.
    const DecreasingRepr& d = *f.decreasing_repr;
    std::vector<Atom> nu;
    double beta = 0.0;
    for (const Atom& a : d.atoms) {
      if (a.lambda == 0.0) {
        beta += a.weight;
      } else {
        nu.push_back(Atom{1.0 / a.lambda, a.weight});
      }
    }
    const DecreasingRepr round =
        decreasing_to_monotone_transform(nu, d.alpha, beta);
    for (int k = -6; k <= 6; ++k) {
      const double x = std::pow(2.0, k);
      const double direct = eval_repr(d, x);
      const double via = eval_repr(round, x);
      if (std::abs(via - direct) / std::max(1.0, std::abs(direct)) > 1e-12) {
        ok = false;
        os << " transform mismatch for " << f.name << " at 2^" << k << ";";
      }
    }
    const ConditionReport r = check_condition(ConditionId::a1, f, TrialConfig{});
    if (!r.pass) {
      ok = false;
      os << " " << f.name << " fails the order-reversal check, margin "
         << r.worst_margin << ";";
    }
  }
  if (lifts == 0) {
    ok = false;
    os << " no stored decreasing-form representations found;";
  }
  std::ostringstream good;
  good << lifts << " stored lifts verified";
  report(9, "representation machinery", ok, ok ? good.str() : os.str());
}

// ---- 10. semidefinite extension --------------------------------------------

void criterion_psd_extension() {
  const ToleranceConfig tol;
  bool ok = true;
  std::ostringstream os;
  std::vector<std::pair<HermitianMatrix, HermitianMatrix>> pairs;
  for (double theta : {0.3, 0.7, 1.2}) {
    const double c = std::cos(theta), s = std::sin(theta);
    CMatrix q(2, 2);
    q << c * c, c * s, c * s, s * s;
    pairs.emplace_back(HermitianMatrix::diagonal({1.0, 0.0}),
                       HermitianMatrix(q));
  }
  {
    CMatrix q(3, 3);
    const double third = 1.0 / 3.0;
    q << third, third, third, third, third, third, third, third, third;
    pairs.emplace_back(HermitianMatrix::diagonal({1.0, 0.0, 0.0}),
                       HermitianMatrix(q));
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const OrthProjection p(pairs[i].first, tol);
    const OrthProjection q(pairs[i].second, tol);
    if (projection_meet(p, q, tol).rank() != 0) {
      ok = false;
      os << " pair " << i << " has a nonzero meet;";
      continue;
    }
    const PsdExtendResult res =
        psd_extend(harmonic_mean(), PsdMatrix(pairs[i].first),
                   PsdMatrix(pairs[i].second));
    const double norm = res.value.spectral_norm();
    bool shrinking = true;
    for (std::size_t g = 1; g < res.gaps.size(); ++g) {
      if (res.gaps[g] >= res.gaps[g - 1]) shrinking = false;
    }
    if (norm >= 1e-5 || !shrinking) {
      ok = false;
      os << " pair " << i << ": norm " << norm << " shrinking " << shrinking
         << ";";
    }
  }
  report(10, "semidefinite extension by regularization", ok,
         ok ? "4 meet-zero projection pairs collapse to zero" : os.str());
}

// ---- 11. recursive n-variable geometric mean -------------------------------

void criterion_alm() {
  const ToleranceConfig tol;
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::ostringstream os;

  Rng rng(0xACCE5511);
  const HermitianMatrix frame_seed = random_pd(3, rng).hermitian();
  const SpectralDecomposition frame = spectral_decompose(frame_seed, tol);
  const std::vector<std::vector<double>> spectra = {
      {1.0, 2.0, 3.0}, {4.0, 0.5, 1.5}, {2.0, 2.0, 0.25}};
  std::vector<PdMatrix> commuting;
  for (const auto& vals : spectra) {
    RVector v(3);
    for (int i = 0; i < 3; ++i) v(i) = vals[i];
    commuting.emplace_back(
        HermitianMatrix(frame.eigenvectors *
                        v.asDiagonal().toDenseMatrix().cast<cplx>() *
                        frame.eigenvectors.adjoint()),
        tol);
  }
  const PdMatrix g = alm_geometric(commuting, 1e-10, 500, tol);
  RVector expected(3);
  for (int i = 0; i < 3; ++i) {
    expected(i) =
        std::cbrt(spectra[0][i] * spectra[1][i] * spectra[2][i]);
  }
  const HermitianMatrix g_expected(
      frame.eigenvectors * expected.asDiagonal().toDenseMatrix().cast<cplx>() *
      frame.eigenvectors.adjoint());
  const double commuting_dev =
      (g.hermitian() - g_expected).spectral_norm() /
      std::max(1.0, g_expected.spectral_norm());
  if (commuting_dev > 1e-10) {
    ok = false;
    os << " commuting deviation " << commuting_dev << ";";
  }

  double worst = std::numeric_limits<double>::max();
  for (int dim : {2, 3, 4}) {
    for (int t = 0; t < 10; ++t) {
      Rng trial_rng(0xACCE5511, static_cast<std::uint64_t>(dim),
                    static_cast<std::uint64_t>(t));
      std::vector<PdMatrix> as;
      for (int i = 0; i < 3; ++i) as.push_back(random_pd(dim, trial_rng));
      const PdMatrix gm = alm_geometric(as, 1e-10, 500, tol);
      const HermitianMatrix am = n_arithmetic(as, tol).hermitian();
      const HermitianMatrix hm = n_harmonic(as, tol).hermitian();
      worst = std::min(worst,
                       lowner_compare(am, gm.hermitian(), tol).margin_ab);
      worst = std::min(worst,
                       lowner_compare(gm.hermitian(), hm, tol).margin_ab);
    }
  }
  if (worst < -1e-8) {
    ok = false;
    os << " sandwich margin " << worst << ";";
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= 10.0) {
    ok = false;
    os << " runtime " << elapsed << " s;";
  }
  std::ostringstream good;
  good << "commuting dev " << commuting_dev << ", sandwich margin " << worst
       << ", " << elapsed << " s";
  report(11, "recursive three-variable geometric mean", ok,
         ok ? good.str() : os.str());
}

}  // namespace

int main() {
  criterion_agh();
  criterion_transformer();
  criterion_a_coherence();
  criterion_b_coherence();
  criterion_angle_witness();
  criterion_support_witness();
  criterion_decomposition();
  criterion_chain();
  criterion_representations();
  criterion_psd_extension();
  criterion_alm();
  if (g_failures == 0) {
    std::cout << "all 11 criteria satisfied\n";
  } else {
    std::cout << g_failures << " criteria failed\n";
  }
  return g_failures == 0 ? 0 : 1;
}
