// Command-line front end: compute means, run condition checks, search for
// violations, emit counterexample witnesses and decomposition reports.
//
// Exit codes: 0 success/pass, 1 fail/violation-not-found, 2 parse error or
// unknown id, 3 domain error, 4 inconclusive verdict.  Stdout carries one
// JSON object on every success path; stderr carries diagnostics only.
// Identical flags and seed produce byte-identical output.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "opmeans/harness.hpp"
#include "opmeans/hermitian.hpp"
#include "opmeans/json_io.hpp"
#include "opmeans/means.hpp"
#include "opmeans/repr.hpp"

namespace {

using nlohmann::json;
using namespace opmeans;

void emit(const json& j, const std::string& output_path) {
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (!output_path.empty()) {
    std::ofstream f(output_path);
    if (!f) {
      throw std::invalid_argument("cannot write output file '" + output_path +
                                  "'");
    }
    f << text;
  }
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

std::vector<int> parse_dims(const std::string& text) {
  std::vector<int> dims;
  std::stringstream ss(text);
  std::string piece;
  while (std::getline(ss, piece, ',')) {
    std::size_t pos = 0;
    int v;
    try {
      v = std::stoi(piece, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("--dims entries must be integers");
    }
    if (pos != piece.size() || v < 1) {
      throw std::invalid_argument("--dims entries must be positive integers");
    }
    dims.push_back(v);
  }
  if (dims.empty()) throw std::invalid_argument("--dims must be non-empty");
  return dims;
}

std::vector<double> parse_weights(const std::string& text) {
  std::vector<double> ws;
  std::stringstream ss(text);
  std::string piece;
  while (std::getline(ss, piece, ',')) {
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(piece, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("--weights entries must be numbers");
    }
    if (pos != piece.size()) {
      throw std::invalid_argument("--weights entries must be numbers");
    }
    ws.push_back(v);
  }
  if (ws.empty()) throw std::invalid_argument("--weights must be non-empty");
  return ws;
}

std::uint64_t resolve_seed(bool seed_given, std::uint64_t seed_flag,
                           std::uint64_t fallback) {
  if (seed_given) return seed_flag;
  if (const char* env = std::getenv("OPMEANS_SEED")) {
    const std::string s(env);
    std::size_t pos = 0;
    std::uint64_t v;
    try {
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("OPMEANS_SEED must be an unsigned integer");
    }
    if (pos != s.size()) {
      throw std::invalid_argument("OPMEANS_SEED must be an unsigned integer");
    }
    return v;
  }
  return fallback;
}

OperatorMean resolve_mean_arg(const std::string& id,
                              std::optional<double> lambda) {
  OperatorMean m = make_mean(id);
  if (!lambda) return m;
  switch (m.kind()) {
    case OperatorMean::Kind::Arithmetic:
      return arithmetic_mean(*lambda);
    case OperatorMean::Kind::Harmonic:
      return harmonic_mean(*lambda);
    case OperatorMean::Kind::Geometric:
      return geometric_mean(*lambda);
    default:
      throw std::invalid_argument(
          "--lambda applies to the arith/harm/geom families only");
  }
}

const char* tristate_text(Tristate t) {
  switch (t) {
    case Tristate::yes: return "yes";
    case Tristate::no: return "no";
    case Tristate::unknown: return "unknown";
  }
  return "unknown";
}

struct TrialFlags {
  std::string dims = "2,3,4,6";
  int trials = 50;
  std::uint64_t seed = 0;
  bool seed_given = false;
  double tol = 1e-9;
  std::string weights = "0.25,0.5,0.75";
  std::vector<std::string> means;
  std::string mean_for_a4 = "harm";
  std::string mean_for_b4 = "arith";

  TrialConfig to_config() const {
    TrialConfig cfg;
    cfg.dims = parse_dims(dims);
    if (trials < 1) throw std::invalid_argument("--trials must be >= 1");
    cfg.trials_per_dim = trials;
    cfg.seed = resolve_seed(seed_given, seed, cfg.seed);
    if (!(tol > 0.0)) throw std::invalid_argument("--tol must be positive");
    cfg.tol.tol_order = tol;
    cfg.weight_grid = parse_weights(weights);
    if (!means.empty()) cfg.mean_ids = means;
    cfg.mean_for_a4 = mean_for_a4;
    cfg.mean_for_b4 = mean_for_b4;
    return cfg;
  }
};

void add_trial_flags(CLI::App* cmd, TrialFlags& tf) {
  cmd->add_option("--dims", tf.dims, "Comma-separated trial dimensions");
  cmd->add_option("--trials", tf.trials, "Trials per dimension");
  auto* seed_opt = cmd->add_option("--seed", tf.seed, "Random seed");
  cmd->parse_complete_callback(
      [&tf, seed_opt]() { tf.seed_given = seed_opt->count() > 0; });
  cmd->add_option("--tol", tf.tol, "Order-comparison tolerance");
  cmd->add_option("--weights", tf.weights, "Comma-separated weight grid");
  cmd->add_option("--mean", tf.means,
                  "Symmetric mean id (repeatable; quantifier set of a2/b2)");
  cmd->add_option("--mean-for-a4", tf.mean_for_a4,
                  "Chosen mean of a4 / prop4_1_fwd");
  cmd->add_option("--mean-for-b4", tf.mean_for_b4, "Chosen mean of b4");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Operator means, order comparisons, and the operator log-convexity "
      "check harness"};
  app.require_subcommand(1);
  std::string output_path;

  // mean
  auto* mean_cmd =
      app.add_subcommand("mean", "Evaluate an operator mean on a pair");
  std::string mean_id, mean_a, mean_b;
  std::optional<double> mean_lambda;
  bool mean_psd = false;
  int mean_dim = 2;
  mean_cmd->add_option("--mean", mean_id, "Mean id")->required();
  mean_cmd->add_option("--a", mean_a, "Left argument")->required();
  mean_cmd->add_option("--b", mean_b, "Right argument")->required();
  mean_cmd->add_option("--lambda", mean_lambda, "Weight override");
  mean_cmd->add_flag("--psd", mean_psd,
                     "Accept semidefinite inputs via shrinking "
                     "regularization; appends the convergence gaps");
  mean_cmd->add_option("--dim", mean_dim, "Dimension of I / cI shorthands");

  // check
  auto* check_cmd =
      app.add_subcommand("check", "Run one condition check and report");
  std::string check_cond, check_fn;
  TrialFlags check_tf;
  check_cmd->add_option("--cond", check_cond, "Condition id")->required();
  check_cmd->add_option("--fn", check_fn, "Function id")->required();
  std::string check_payload;
  check_cmd->add_option("--payload", check_payload,
                        "Representation JSON for the membership conditions");
  add_trial_flags(check_cmd, check_tf);

  // falsify
  auto* falsify_cmd = app.add_subcommand(
      "falsify", "Search for a violating witness of a condition template");
  std::string falsify_template, falsify_fn;
  TrialFlags falsify_tf;
  falsify_cmd->add_option("--template", falsify_template, "Condition template")
      ->required();
  falsify_cmd->add_option("--fn", falsify_fn, "Function id")->required();
  add_trial_flags(falsify_cmd, falsify_tf);

  // witness
  auto* witness_cmd = app.add_subcommand(
      "witness", "Emit one of the explicit counterexample constructions");
  std::string witness_family, witness_mean = "harm";
  std::optional<double> witness_theta, witness_eps;
  witness_cmd->add_option("--family", witness_family, "lemma22 or lemma24")
      ->required();
  witness_cmd->add_option("--theta", witness_theta,
                          "Principal angle (lemma22)");
  witness_cmd->add_option("--eps", witness_eps, "Regularization parameter");
  witness_cmd->add_option("--mean", witness_mean,
                          "Mean violated by the lemma22 pair");

  // catalog
  auto* catalog_cmd = app.add_subcommand(
      "catalog", "List the built-in functions and their settled properties");

  // decompose
  auto* decompose_cmd = app.add_subcommand(
      "decompose", "Write a sandwiched pair (X, Y) as (A nabla B, A sigma B)");
  std::string dec_mean, dec_x, dec_y;
  int dec_dim = 2;
  decompose_cmd->add_option("--mean", dec_mean, "Mean id")->required();
  decompose_cmd->add_option("--x", dec_x, "Outer matrix X")->required();
  decompose_cmd->add_option("--y", dec_y, "Inner matrix Y")->required();
  decompose_cmd->add_option("--dim", dec_dim, "Dimension of I / cI shorthands");

  // chain
  auto* chain_cmd = app.add_subcommand(
      "chain", "Iterate the decomposition along the interpolating chain");
  std::string chain_mean, chain_fn = "pow:0.5", chain_x, chain_y;
  double chain_gamma = 0.0;
  int chain_k = 1, chain_dim = 2;
  chain_cmd->add_option("--mean", chain_mean, "Mean id")->required();
  chain_cmd->add_option("--fn", chain_fn, "Monotone function to track");
  chain_cmd->add_option("--x", chain_x, "Start matrix X")->required();
  chain_cmd->add_option("--y", chain_y, "Limit matrix Y")->required();
  chain_cmd->add_option("--gamma", chain_gamma, "Contraction ratio")
      ->required();
  chain_cmd->add_option("--k", chain_k, "Number of chain steps")->required();
  chain_cmd->add_option("--dim", chain_dim, "Dimension of I / cI shorthands");

  for (CLI::App* sub : {mean_cmd, check_cmd, falsify_cmd, witness_cmd,
                        catalog_cmd, decompose_cmd, chain_cmd}) {
    sub->add_option("--output", output_path,
                    "Also write the JSON to this file");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (mean_cmd->parsed()) {
    return guarded([&]() {
      const OperatorMean sigma = resolve_mean_arg(mean_id, mean_lambda);
      const HermitianMatrix a = parse_matrix_arg(mean_a, mean_dim);
      const HermitianMatrix b = parse_matrix_arg(mean_b, mean_dim);
      json j;
      if (mean_psd) {
        const PsdExtendResult res =
            psd_extend(sigma, PsdMatrix(a), PsdMatrix(b));
        j = matrix_to_json(res.value.hermitian());
        j["gaps"] = res.gaps;
      } else {
        j = matrix_to_json(sigma.apply(PdMatrix(a), PdMatrix(b)).hermitian());
      }
      j["sigma"] = sigma.name();
      j["version"] = kOutputVersion;
      emit(j, output_path);
      return 0;
    });
  }

  if (check_cmd->parsed()) {
    return guarded([&]() {
      const ConditionId cond = parse_condition(check_cond);
      const CatalogFunction fn = resolve_function(check_fn);
      TrialConfig cfg = check_tf.to_config();
      if (!check_payload.empty()) {
        const CatalogFunction payload = resolve_function("repr:" + check_payload);
        cfg.decreasing_payload = payload.decreasing_repr;
        cfg.monotone_payload = payload.monotone_repr;
      }
      const ConditionReport report = check_condition(cond, fn, cfg);
      json j = report_to_json(report);
      j["version"] = kOutputVersion;
      emit(j, output_path);
      switch (report.outcome) {
        case Outcome::pass: return 0;
        case Outcome::fail: return 1;
        case Outcome::inconclusive: return 4;
      }
      return 0;
    });
  }

  if (falsify_cmd->parsed()) {
    return guarded([&]() {
      const CatalogFunction fn = resolve_function(falsify_fn);
      const TrialConfig cfg = falsify_tf.to_config();
      const std::optional<Witness> w = falsify(falsify_template, fn, cfg);
      json j;
      j["template"] = falsify_template;
      j["function"] = fn.name;
      j["found"] = w.has_value();
      if (w) j["witness"] = witness_to_json(*w);
      j["version"] = kOutputVersion;
      emit(j, output_path);
      return w ? 0 : 1;
    });
  }

  if (witness_cmd->parsed()) {
    return guarded([&]() {
      Witness w;
      if (witness_family == "lemma22") {
        if (!witness_theta) {
          throw std::invalid_argument("lemma22 needs --theta");
        }
        const double eps = witness_eps.value_or(1e-4);
        w = lemma22_witness(*witness_theta, eps, make_mean(witness_mean));
      } else if (witness_family == "lemma24") {
        if (!witness_eps) {
          throw std::invalid_argument("lemma24 needs --eps");
        }
        w = lemma24_witness(*witness_eps);
      } else {
        throw std::invalid_argument("--family must be lemma22 or lemma24");
      }
      json j = witness_to_json(w);
      j["family"] = witness_family;
      j["version"] = kOutputVersion;
      emit(j, output_path);
      return 0;
    });
  }

  if (catalog_cmd->parsed()) {
    return guarded([&]() {
      json fns = json::array();
      for (const CatalogFunction& f : catalog()) {
        json fj;
        fj["name"] = f.name;
        fj["op_monotone"] = tristate_text(f.op_monotone);
        fj["op_monotone_decreasing"] = tristate_text(f.op_monotone_decreasing);
        fj["op_convex"] = tristate_text(f.op_convex);
        fj["op_concave"] = tristate_text(f.op_concave);
        fj["op_log_convex"] = tristate_text(f.op_log_convex);
        fj["op_log_concave"] = tristate_text(f.op_log_concave);
        fj["has_decreasing_repr"] = f.decreasing_repr.has_value();
        fj["has_monotone_repr"] = f.monotone_repr.has_value();
        fns.push_back(std::move(fj));
      }
      json j;
      j["functions"] = std::move(fns);
      j["version"] = kOutputVersion;
      emit(j, output_path);
      return 0;
    });
  }

  if (decompose_cmd->parsed()) {
    return guarded([&]() {
      const OperatorMean sigma = make_mean(dec_mean);
      const PdMatrix x(parse_matrix_arg(dec_x, dec_dim));
      const PdMatrix y(parse_matrix_arg(dec_y, dec_dim));
      const auto [a, b] = decompose_mean_pair(sigma, x, y);
      const ToleranceConfig tol;
      const double scale =
          comparison_scale(x.spectral_norm(), y.spectral_norm());
      json j;
      j["sigma"] = sigma.name();
      j["A"] = matrix_to_json(a.hermitian());
      j["B"] = matrix_to_json(b.hermitian());
      j["resid_x"] =
          (arithmetic(a, b, 0.5, tol).hermitian() - x.hermitian())
              .spectral_norm() /
          scale;
      j["resid_y"] =
          (sigma.apply(a, b, tol).hermitian() - y.hermitian()).spectral_norm() /
          scale;
      const bool closed =
          (sigma.kind() == OperatorMean::Kind::Harmonic ||
           sigma.kind() == OperatorMean::Kind::Geometric) &&
          sigma.weight() == 0.5;
      if (closed) {
        const auto [a2, b2] = decompose_closed_form(sigma, x, y);
        j["closed_form_a"] = matrix_to_json(a2.hermitian());
        j["closed_form_b"] = matrix_to_json(b2.hermitian());
        j["path_gap"] =
            std::max((a.hermitian() - a2.hermitian()).spectral_norm(),
                     (b.hermitian() - b2.hermitian()).spectral_norm()) /
            scale;
      }
      j["version"] = kOutputVersion;
      emit(j, output_path);
      return 0;
    });
  }

  if (chain_cmd->parsed()) {
    return guarded([&]() {
      const OperatorMean sigma = make_mean(chain_mean);
      const CatalogFunction fn = resolve_function(chain_fn);
      const PdMatrix x(parse_matrix_arg(chain_x, chain_dim));
      const PdMatrix y(parse_matrix_arg(chain_y, chain_dim));
      const ChainReport report =
          prop41_chain(sigma, fn, x, y, chain_gamma, chain_k);
      json j = chain_to_json(report);
      json xs = json::array();
      double gk = 1.0;
      for (int k = 0; k <= chain_k; ++k) {
        const HermitianMatrix xk =
            x.hermitian().scaled(gk) + y.hermitian().scaled(1.0 - gk);
        xs.push_back(matrix_to_json(xk));
        gk *= chain_gamma;
      }
      j["x_k"] = std::move(xs);
      j["sigma"] = sigma.name();
      j["function"] = fn.name;
      j["version"] = kOutputVersion;
      emit(j, output_path);
      return report.ok ? 0 : 1;
    });
  }

  std::cerr << "error: no subcommand\n";
  return 2;
}
