#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "opmeans/harness.hpp"
#include "opmeans/json_io.hpp"

using namespace opmeans;

namespace {

// Small plan so single checks stay fast inside the unit suite.
TrialConfig quick_config() {
  TrialConfig cfg;
  cfg.dims = {2, 3};
  cfg.trials_per_dim = 10;
  return cfg;
}

}  // namespace

TEST_CASE("condition ids round-trip through their names") {
  for (ConditionId c : all_conditions()) {
    CHECK(parse_condition(to_string(c)) == c);
  }
  CHECK(all_conditions().size() == 26);
  CHECK_THROWS_AS(parse_condition("a99"), std::invalid_argument);
}

TEST_CASE("outcome bands around the tolerance") {
  const ToleranceConfig tol;  // tol_order = 1e-9
  CHECK(outcome_for_margin(0.5, tol) == Outcome::pass);
  CHECK(outcome_for_margin(-0.5e-9, tol) == Outcome::pass);
  CHECK(outcome_for_margin(-1e-9, tol) == Outcome::pass);
  CHECK(outcome_for_margin(-5e-9, tol) == Outcome::inconclusive);
  CHECK(outcome_for_margin(-1.1e-8, tol) == Outcome::fail);
}

TEST_CASE("check_condition is deterministic and reports witnesses on failure") {
  const TrialConfig cfg = quick_config();
  const CatalogFunction sq = resolve_function("pow:2");
  ConditionReport r1 = check_condition(ConditionId::a3, sq, cfg);
  ConditionReport r2 = check_condition(ConditionId::a3, sq, cfg);
  CHECK(r1.outcome == Outcome::fail);
  CHECK_FALSE(r1.pass);
  CHECK(r1.trials == 20);
  CHECK(r1.worst_margin == r2.worst_margin);  // bit-identical reruns
  REQUIRE(r1.witness.has_value());
  // Witness present iff not pass.
  ConditionReport ok = check_condition(
      ConditionId::a3, resolve_function("pow:-1"), cfg);
  CHECK(ok.pass);
  CHECK_FALSE(ok.witness.has_value());
}

TEST_CASE("witness replay reproduces the recorded margin") {
  const TrialConfig cfg = quick_config();
  // One failing pair per witness shape: plain pair, ordered pair, pair with
  // one vector, pair with two vectors, pair with a weight matrix.
  const std::pair<ConditionId, const char*> cases[] = {
      {ConditionId::a3, "pow:2"},    {ConditionId::a1, "exp"},
      {ConditionId::a8, "pow:2"},    {ConditionId::a9, "pow:1"},
      {ConditionId::prop1_1, "pow:2"}};
  for (const auto& [c, fn] : cases) {
    const CatalogFunction f = resolve_function(fn);
    ConditionReport r = check_condition(c, f, cfg);
    REQUIRE_MESSAGE(r.witness.has_value(), to_string(c));
    const double recorded = r.witness->scalars.at("margin");
    CHECK(recorded == r.worst_margin);
    CHECK(replay_margin(c, f, *r.witness, cfg) ==
          doctest::Approx(recorded).epsilon(1e-13));
    // The round trip through JSON preserves every bit.
    Witness rt = witness_from_json(witness_to_json(*r.witness));
    CHECK(replay_margin(c, f, rt, cfg) == replay_margin(c, f, *r.witness, cfg));
  }
  // A stripped witness is rejected rather than silently reinterpreted.
  Witness empty;
  CHECK_THROWS_AS(
      replay_margin(ConditionId::a3, resolve_function("pow:2"), empty, cfg),
      std::invalid_argument);
}

TEST_CASE("a failed trial surfaces as a diagnostic, not a pass") {
  // The zero function is a valid representation datum but its operator
  // lift is singular, so conditions that invert f(B) must abort.
  const CatalogFunction zero =
      resolve_function("repr:{\"kind\":\"decreasing\",\"alpha\":0.0}");
  TrialConfig cfg = quick_config();
  ConditionReport r = check_condition(ConditionId::a3, zero, cfg);
  CHECK_FALSE(r.pass);
  CHECK(r.outcome == Outcome::fail);
  CHECK(!r.note.empty());
}

TEST_CASE("payload plumbing for the membership conditions") {
  TrialConfig cfg = quick_config();
  const CatalogFunction inv = resolve_function("pow:-1");
  // The catalog carries the exact representation: clean pass.
  CHECK(check_condition(ConditionId::a13, inv, cfg).pass);
  // A slightly wrong payload lands in the inconclusive band...
  cfg.decreasing_payload = DecreasingRepr{3e-9, {Atom{0.0, 1.0}}};
  ConditionReport off = check_condition(ConditionId::a13, inv, cfg);
  CHECK(off.outcome == Outcome::inconclusive);
  // ...and a clearly wrong one fails.
  cfg.decreasing_payload = DecreasingRepr{0.5, {Atom{0.0, 1.0}}};
  CHECK(check_condition(ConditionId::a13, inv, cfg).outcome == Outcome::fail);
  // No payload anywhere: not checkable.
  cfg = quick_config();
  CHECK_THROWS_AS(
      check_condition(ConditionId::a13, resolve_function("pow:2"), cfg),
      std::invalid_argument);
  CHECK_THROWS_AS(
      check_condition(ConditionId::b9, resolve_function("pow:2"), cfg),
      std::invalid_argument);
}

TEST_CASE("quantifier configuration is validated") {
  TrialConfig cfg = quick_config();
  cfg.mean_ids = {"arith:0.3"};  // not symmetric
  CHECK_THROWS_AS(
      check_condition(ConditionId::a2, resolve_function("pow:-1"), cfg),
      std::invalid_argument);
  cfg = quick_config();
  cfg.mean_for_a4 = "arith";  // must differ from the arithmetic mean
  CHECK_THROWS_AS(
      check_condition(ConditionId::a4, resolve_function("pow:-1"), cfg),
      std::invalid_argument);
  cfg = quick_config();
  cfg.mean_for_b4 = "harm";  // must differ from the harmonic mean
  CHECK_THROWS_AS(
      check_condition(ConditionId::b4, resolve_function("pow:1"), cfg),
      std::invalid_argument);
  cfg = quick_config();
  cfg.weight_grid = {0.5, 1.0};
  CHECK_THROWS_AS(
      check_condition(ConditionId::f2_14, resolve_function("pow:-1"), cfg),
      std::invalid_argument);
}

TEST_CASE("projection-pair witness carries the angle geometry") {
  const double theta = 1.0471975511965976;  // pi/3
  Witness w = lemma22_witness(theta, 1e-4);
  CHECK(w.scalars.at("bound_2am1") == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(w.scalars.at("alpha_min") == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(w.scalars.at("identity_resid") < 1e-14);
  CHECK(w.scalars.at("meet_rank") == 0.0);
  CHECK(w.scalars.at("margin") < -1e-3);

  // The bound tends to 1 as the angle closes.
  CHECK(lemma22_witness(0.05, 1e-4).scalars.at("bound_2am1") > 0.995);
  CHECK_THROWS_AS(lemma22_witness(0.0, 1e-4), std::invalid_argument);
  CHECK_THROWS_AS(lemma22_witness(2.0, 1e-4), std::invalid_argument);
  CHECK_THROWS_AS(lemma22_witness(0.3, 0.0), std::invalid_argument);
}

TEST_CASE("strict-order witness has incomparable support projections") {
  for (double eps : {0.05, 0.1, 0.2}) {
    Witness w = lemma24_witness(eps);
    CHECK(w.scalars.at("det_diff") ==
          doctest::Approx(0.5 * (1.0 - 3.0 * eps)).epsilon(1e-12));
    CHECK(w.scalars.at("order_margin") > 0.0);
    CHECK(w.scalars.at("support_geq") == 0.0);
    CHECK(w.scalars.at("meet_rank") == 0.0);
  }
  // The support of the positive part of K is the rank-one projection Q.
  Witness w = lemma24_witness(0.1);
  const HermitianMatrix& sk = w.matrices.at("support_K_plus");
  CHECK(sk.matrix()(0, 0).real() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sk.matrix()(0, 1).real() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(lemma24_witness(0.34), std::invalid_argument);
  CHECK_THROWS_AS(lemma24_witness(0.0), std::invalid_argument);
}

TEST_CASE("gamma0 reads the boundary value of the mean") {
  CHECK(gamma0(harmonic_mean()) == 0.0);
  CHECK(gamma0(geometric_mean()) == 0.0);
  CHECK(gamma0(arithmetic_mean()) == 1.0);
  OperatorMean m =
      measure_mean(SymmetricMeanMeasure(0.5, {Atom{1.0, 0.5}}));
  CHECK(gamma0(m) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("phi and its inverse match the closed forms") {
  const OperatorMean harm = harmonic_mean();
  const OperatorMean geom = geometric_mean();
  for (double t : {0.1, 0.3, 0.5, 0.9, 1.0}) {
    CHECK(phi(harm, t) == doctest::Approx(t * (2.0 - t)).epsilon(1e-12));
    CHECK(phi(geom, t) ==
          doctest::Approx(std::sqrt(t * (2.0 - t))).epsilon(1e-12));
  }
  CHECK(phi(harm, 0.0) == 0.0);
  CHECK(phi(harm, 0.5) == doctest::Approx(0.75));
  CHECK_THROWS_AS(phi(harm, 1.5), std::invalid_argument);

  for (double y : {0.1, 0.4, 0.75, 0.99}) {
    CHECK(phi_inverse(harm, y) ==
          doctest::Approx(1.0 - std::sqrt(1.0 - y)).epsilon(1e-9));
    CHECK(phi(geom, phi_inverse(geom, y)) == doctest::Approx(y).epsilon(1e-10));
  }
  CHECK_THROWS_AS(phi_inverse(harm, -0.1), std::domain_error);
  CHECK_THROWS_AS(phi_inverse(arithmetic_mean(), 0.5), std::invalid_argument);
}

TEST_CASE("mean-pair decomposition recomposes the sandwich") {
  const ToleranceConfig tol;
  SUBCASE("scalar oracle for the harmonic mean") {
    auto [a, b] = decompose_mean_pair(harmonic_mean(), PdMatrix::diagonal({1.0}),
                                      PdMatrix::diagonal({0.75}));
    CHECK(a.matrix()(0, 0).real() == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(b.matrix()(0, 0).real() == doctest::Approx(1.5).epsilon(1e-9));
  }
  SUBCASE("x equals y returns the pair (x, x)") {
    Rng rng(71);
    PdMatrix x = random_pd(3, rng);
    auto [a, b] = decompose_mean_pair(geometric_mean(), x, x);
    CHECK((a.hermitian() - x.hermitian()).spectral_norm() <
          1e-6 * std::max(1.0, x.spectral_norm()));
    CHECK((b.hermitian() - x.hermitian()).spectral_norm() <
          1e-6 * std::max(1.0, x.spectral_norm()));
  }
  SUBCASE("random sandwiched pairs recompose through both means") {
    Rng rng(73);
    for (const OperatorMean& sigma : {harmonic_mean(), geometric_mean()}) {
      PdMatrix x = random_pd(3, rng);
      const HermitianMatrix y_h =
          x.hermitian().scaled(0.9) +
          HermitianMatrix::identity(3).scaled(0.05 * x.min_eig());
      PdMatrix y(y_h);
      auto [a, b] = decompose_mean_pair(sigma, x, y);
      const double scale = comparison_scale(x.spectral_norm(), y.spectral_norm());
      CHECK((arithmetic(a, b).hermitian() - x.hermitian()).spectral_norm() /
                scale < 1e-9);
      CHECK((sigma.apply(a, b).hermitian() - y.hermitian()).spectral_norm() /
                scale < 1e-7);
    }
  }
  SUBCASE("sandwich violations are rejected with a domain error") {
    PdMatrix x = PdMatrix::identity(2);
    CHECK_THROWS_AS(decompose_mean_pair(harmonic_mean(), x,
                                        PdMatrix::diagonal({1.2, 0.5})),
                    std::domain_error);
    // gamma0 of this measure mean is 1/2; an eigenvalue below it fails.
    OperatorMean m = measure_mean(SymmetricMeanMeasure(0.5, {Atom{1.0, 0.5}}));
    CHECK_THROWS_AS(
        decompose_mean_pair(m, x, PdMatrix::diagonal({0.4, 0.9})),
        std::domain_error);
    CHECK_THROWS_AS(decompose_mean_pair(arithmetic_mean(), x, x),
                    std::invalid_argument);
  }
}

TEST_CASE("closed-form decompositions match their scalar oracles") {
  SUBCASE("harmonic: X=1, Y=3/4 gives (1/2, 3/2)") {
    auto [a, b] = decompose_closed_form(harmonic_mean(), PdMatrix::diagonal({1.0}),
                                        PdMatrix::diagonal({0.75}));
    CHECK(a.matrix()(0, 0).real() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(b.matrix()(0, 0).real() == doctest::Approx(1.5).epsilon(1e-12));
  }
  SUBCASE("geometric: X=1, Y=1/2 gives 1 -+ sqrt(3)/2") {
    auto [a, b] = decompose_closed_form(geometric_mean(), PdMatrix::diagonal({1.0}),
                                        PdMatrix::diagonal({0.5}));
    CHECK(a.matrix()(0, 0).real() ==
          doctest::Approx(1.0 - std::sqrt(3.0) / 2.0).epsilon(1e-12));
    CHECK(b.matrix()(0, 0).real() ==
          doctest::Approx(1.0 + std::sqrt(3.0) / 2.0).epsilon(1e-12));
  }
  SUBCASE("the two construction paths agree") {
    Rng rng(79);
    for (const OperatorMean& sigma : {harmonic_mean(), geometric_mean()}) {
      PdMatrix x = random_pd(2, rng);
      PdMatrix y(x.hermitian().scaled(0.8) +
                 HermitianMatrix::identity(2).scaled(0.1 * x.min_eig()));
      auto [a1, b1] = decompose_mean_pair(sigma, x, y);
      auto [a2, b2] = decompose_closed_form(sigma, x, y);
      const double scale = std::max(1.0, x.spectral_norm());
      CHECK((a1.hermitian() - a2.hermitian()).spectral_norm() / scale < 1e-6);
      CHECK((b1.hermitian() - b2.hermitian()).spectral_norm() / scale < 1e-6);
    }
  }
  CHECK_THROWS_AS(decompose_closed_form(arithmetic_mean(),
                                        PdMatrix::identity(2),
                                        PdMatrix::identity(2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(decompose_closed_form(harmonic_mean(), PdMatrix::identity(2),
                                        PdMatrix::diagonal({1.5, 1.0})),
                  std::domain_error);
}

TEST_CASE("interpolating chain contracts geometrically") {
  SUBCASE("scalar chain 2 -> 1 at ratio 1/2") {
    ChainReport r = prop41_chain(harmonic_mean(), resolve_function("pow:0.5"),
                                 PdMatrix::diagonal({2.0}),
                                 PdMatrix::diagonal({1.0}), 0.5, 3);
    CHECK(r.ok);
    REQUIRE(r.steps.size() == 3);
    for (int k = 0; k < 3; ++k) {
      CHECK(r.steps[k].dist_to_limit ==
            doctest::Approx(std::pow(0.5, k)).epsilon(1e-12));
      CHECK(r.steps[k].dist_to_limit ==
            doctest::Approx(r.steps[k].expected_dist).epsilon(1e-12));
      CHECK(r.steps[k].order_margin >= -1e-9);
      CHECK(r.steps[k].sandwich_margin >= -1e-9);
      CHECK(r.steps[k].f_monotone_margin >= -1e-9);
    }
  }
  SUBCASE("constant chain when x equals y") {
    Rng rng(83);
    PdMatrix x = random_pd(2, rng);
    ChainReport r = prop41_chain(geometric_mean(), resolve_function("pow:0.5"),
                                 x, x, 0.6, 2);
    CHECK(r.ok);
    CHECK(r.steps[0].dist_to_limit == 0.0);
  }
  SUBCASE("preconditions") {
    PdMatrix x = PdMatrix::identity(2);
    PdMatrix big = PdMatrix::diagonal({2.0, 2.0});
    CHECK_THROWS_AS(prop41_chain(harmonic_mean(), resolve_function("pow:0.5"),
                                 x, big, 0.5, 2),
                    std::domain_error);
    CHECK_THROWS_AS(prop41_chain(harmonic_mean(), resolve_function("pow:0.5"),
                                 big, x, 1.0, 2),
                    std::invalid_argument);
  }
}

TEST_CASE("falsifier finds the known violations and nothing else") {
  TrialConfig cfg = quick_config();
  SUBCASE("convex powers violate the log-convexity template") {
    for (const char* fn : {"pow:2", "pow:1.5", "exp"}) {
      auto w = falsify("a3", resolve_function(fn), cfg);
      REQUIRE_MESSAGE(w.has_value(), fn);
      CHECK(w->scalars.at("margin") < -1e-8);
      // The recorded margin replays exactly.
      CHECK(replay_margin(ConditionId::a3, resolve_function(fn), *w, cfg) ==
            doctest::Approx(w->scalars.at("margin")).epsilon(1e-13));
    }
  }
  SUBCASE("the squaring map violates the log-concavity template") {
    auto w = falsify("b3", resolve_function("pow:2"), cfg);
    REQUIRE(w.has_value());
    CHECK(replay_margin(ConditionId::b3, resolve_function("pow:2"), *w, cfg) ==
          doctest::Approx(w->scalars.at("margin")).epsilon(1e-13));
  }
  SUBCASE("monotone functions violate the order-reversal template") {
    CHECK(falsify("a1", resolve_function("exp"), cfg).has_value());
    CHECK(falsify("b1", resolve_function("pow:2"), cfg).has_value());
  }
  SUBCASE("operator monotone decreasing functions survive the search") {
    CHECK_FALSE(falsify("a3", resolve_function("pow:-1"), cfg).has_value());
    CHECK_FALSE(falsify("a1", resolve_function("pow:-0.5"), cfg).has_value());
  }
  SUBCASE("the support-order template is falsified by construction") {
    auto w = falsify("f2_13", resolve_function("pow:1"), cfg);
    REQUIRE(w.has_value());
    CHECK(w->scalars.at("support_geq") == 0.0);
    CHECK(w->scalars.at("margin") ==
          doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(falsify("q7", resolve_function("pow:1"), cfg),
                  std::invalid_argument);
}
