#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mdpdist/errors.hpp"
#include "mdpdist/gw.hpp"
#include "mdpdist/hitting.hpp"
#include "mdpdist/io.hpp"
#include "mdpdist/mdp.hpp"
#include "mdpdist/restart.hpp"
#include "mdpdist/simulate.hpp"

namespace {

using nlohmann::ordered_json;
using namespace mdpdist;

// Exit codes are a stable contract:
//   0 ok / equivalent          1 not equivalent        2 invalid model
//   3 parse error              4 infeasible coupling   5 all episodes censored
constexpr int kExitNotEquivalent = 1;
constexpr int kExitInvalidModel = 2;
constexpr int kExitParseError = 3;
constexpr int kExitInfeasible = 4;
constexpr int kExitAllCensored = 5;
constexpr int kExitUsage = 64;
constexpr int kExitInternal = 70;

void emit(const ordered_json& report) { std::cout << report.dump(2) << "\n"; }

void emit_error(const ordered_json& report) { std::cerr << report.dump(2) << "\n"; }

MdpSpec load_mdp(const std::string& path) { return validate(parse_mdp(read_file(path))); }

Index resolve_pair_argument(const StateActionIndex& idx, const std::string& arg,
                            const char* what) {
  if (!arg.empty() && arg.find_first_not_of("0123456789") == std::string::npos) {
    try {
      const Index i = static_cast<Index>(std::stoll(arg));
      if (i < idx.size()) return i;
    } catch (const std::out_of_range&) {
    }
    throw ParseError(std::string(what) + ": pair index " + arg + " out of range");
  }
  const std::vector<Index> hits = idx.find_pairs(arg);
  if (hits.empty())
    throw ParseError(std::string(what) + ": unknown state-action pair \"" + arg + "\"");
  if (hits.size() > 1)
    throw ParseError(std::string(what) + ": ambiguous state-action pair \"" + arg + "\"");
  return hits.front();
}

int run_validate(const std::string& path) {
  const MdpSpec spec = load_mdp(path);
  ordered_json report;
  report["valid"] = true;
  if (!spec.name.empty()) report["name"] = spec.name;
  report["states"] = spec.num_states();
  report["actions"] = spec.num_actions();
  report["pairs"] = spec.num_pairs();
  report["gamma"] = spec.gamma;
  report["warnings"] = spec.warnings;
  emit(report);
  return 0;
}

int run_occupancy(const std::string& path, bool normalized) {
  const MdpSpec spec = load_mdp(path);
  const OccupancyVector occ = occupancy_measure(spec);
  Vector values = occ.values;
  if (normalized) values *= (1.0 - spec.gamma);
  MatrixDocument doc;
  doc.row_labels = spec.pair_index().pair_labels();
  doc.col_labels = {"rho"};
  doc.entries = values;
  doc.metadata["gamma"] = spec.gamma;
  doc.metadata["normalized"] = normalized;
  doc.metadata["sum"] = values.sum();
  std::cout << serialize_matrix(doc);
  return 0;
}

int run_hitting(const std::string& path, const std::string& kind) {
  const MdpSpec spec = load_mdp(path);
  const Matrix p = induced_transition(spec);
  HittingMatrix result{Matrix(), HittingKind::kRestart};
  if (kind == "plain") {
    result = hitting_plain(p);
  } else if (kind == "restart") {
    const Vector rho0 = initial_pair_distribution(spec);
    const SupportSet supp = support_set(occupancy_measure(p, rho0, spec.gamma));
    result = hitting_restart(p, rho0, spec.gamma, supp);
  } else if (kind == "discounted") {
    result = hitting_discounted(p, spec.gamma);
  } else {
    throw ParseError("unknown hitting kind \"" + kind + "\"");
  }
  MatrixDocument doc;
  doc.row_labels = spec.pair_index().pair_labels();
  doc.col_labels = doc.row_labels;
  doc.entries = result.entries;
  doc.metadata["kind"] = kind;
  doc.metadata["gamma"] = spec.gamma;
  std::cout << serialize_matrix(doc);
  return 0;
}

int run_gw(const std::string& path_a, const std::string& path_b, bool exact,
           int restarts, std::uint64_t seed, bool no_normalize,
           const std::string& coupling_out) {
  const MdpSpec spec_a = load_mdp(path_a);
  const MdpSpec spec_b = load_mdp(path_b);
  const MetricMeasureTriple tx = build_triple(spec_a, !no_normalize);
  const MetricMeasureTriple ty = build_triple(spec_b, !no_normalize);
  const Scalar mass_x = tx.measure.sum();
  const Scalar mass_y = ty.measure.sum();
  if (std::abs(mass_x - mass_y) > kCouplingFeasibilityTol) {
    ordered_json report;
    report["error"] = "infeasible_coupling";
    report["message"] = "no coupling exists: total masses differ";
    report["mass_x"] = mass_x;
    report["mass_y"] = mass_y;
    emit_error(report);
    return kExitInfeasible;
  }

  GwResult result;
  if (exact) {
    result = gw_exhaustive(tx, ty);
  } else {
    GwSolveParams params;
    params.restarts = restarts;
    params.seed = seed;
    result = gw_solve(tx, ty, params);
  }

  ordered_json report;
  report["value"] = result.value;
  report["status"] = (result.status == GwStatus::kExact) ? "exact" : "upper_bound";
  report["restarts_used"] = result.restarts_used;
  report["mass_x"] = mass_x;
  report["mass_y"] = mass_y;
  if (!coupling_out.empty()) {
    MatrixDocument doc;
    doc.row_labels = tx.labels;
    doc.col_labels = ty.labels;
    doc.entries = result.coupling.matrix;
    doc.metadata["value"] = result.value;
    doc.metadata["status"] = report["status"];
    if (!exact) doc.metadata["seed"] = seed;
    write_file(coupling_out, serialize_matrix(doc));
    report["coupling_path"] = coupling_out;
  }
  emit(report);
  return 0;
}

int run_equiv(const std::string& path_a, const std::string& path_b, Scalar tol) {
  const MetricMeasureTriple tx = build_triple(load_mdp(path_a));
  const MetricMeasureTriple ty = build_triple(load_mdp(path_b));
  std::optional<std::vector<Index>> phi;
  try {
    phi = equivalence_check(tx, ty, tol);
  } catch (const SizeMismatchError& e) {
    std::cout << "equivalent: false (" << e.what() << ")\n";
    return kExitNotEquivalent;
  }
  if (!phi) {
    std::cout << "equivalent: false\n";
    return kExitNotEquivalent;
  }
  std::cout << "equivalent: true\n";
  for (Index i = 0; i < tx.size(); ++i) {
    std::cout << tx.labels[static_cast<std::size_t>(i)] << " -> "
              << ty.labels[static_cast<std::size_t>((*phi)[static_cast<std::size_t>(i)])]
              << "\n";
  }
  return 0;
}

int run_simulate(const std::string& path, const std::string& target_arg,
                 const std::string& start_arg, long episodes, long steps,
                 std::uint64_t seed) {
  const MdpSpec spec = load_mdp(path);
  const StateActionIndex idx = spec.pair_index();
  const Index target = resolve_pair_argument(idx, target_arg, "--target");
  const Index start = resolve_pair_argument(idx, start_arg, "--start");
  const RestartChain chain = build_restart_chain(spec);
  SimConfig config;
  config.seed = seed;
  config.episodes = episodes;
  if (steps > 0) {
    config.max_steps = steps;
  } else {
    const Scalar cap = std::min(1.0e7, 1.0e6 / (1.0 - spec.gamma));
    config.max_steps = static_cast<long>(cap);
  }
  const Estimate est = estimate_hitting(chain.matrix, target, start, config);
  ordered_json report;
  report["mean"] = est.mean;
  report["std_error"] = est.std_error;
  report["samples"] = est.samples;
  report["censored"] = est.censored;
  report["seed"] = seed;
  report["target"] = idx.pair_label(target);
  report["start"] = idx.pair_label(start);
  emit(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hitting-time quasi-distances and Gromov-Wasserstein distances for finite MDPs"};
  app.require_subcommand(1);

  std::string path, path_b, kind = "restart", target, start, coupling_out, tol_unused;
  bool normalized = false, exact = false, solver = false, no_normalize = false;
  int restarts = 16;
  std::uint64_t seed = 0;
  long episodes = 100000, steps = 0;
  double tol = kEquivalenceTol;

  auto* cmd_validate = app.add_subcommand("validate", "Parse and validate an MDP document");
  cmd_validate->add_option("path", path, "MDP document")->required();

  auto* cmd_occupancy =
      app.add_subcommand("occupancy", "Discounted occupancy measure over state-action pairs");
  cmd_occupancy->add_option("path", path, "MDP document")->required();
  cmd_occupancy->add_flag("--normalized", normalized, "emit (1-gamma) rho_pi");

  auto* cmd_hitting = app.add_subcommand("hitting", "First-hitting-time matrix");
  cmd_hitting->add_option("path", path, "MDP document")->required();
  cmd_hitting->add_option("--kind", kind, "plain|restart|discounted")
      ->check(CLI::IsMember({"plain", "restart", "discounted"}))
      ->capture_default_str();

  auto* cmd_gw = app.add_subcommand("gw", "Gromov-Wasserstein distance between two MDPs");
  cmd_gw->add_option("pathA", path, "first MDP document")->required();
  cmd_gw->add_option("pathB", path_b, "second MDP document")->required();
  auto* exact_flag = cmd_gw->add_flag("--exact", exact, "exhaustive oracle (small supports)");
  cmd_gw->add_flag("--solver", solver, "entropic multi-restart solver (default)")
      ->excludes(exact_flag);
  cmd_gw->add_option("--restarts", restarts, "solver restarts")->capture_default_str();
  cmd_gw->add_option("--seed", seed, "solver seed")->capture_default_str();
  cmd_gw->add_flag("--no-normalize", no_normalize,
                   "keep raw occupancy masses (no coupling exists when gammas differ)");
  cmd_gw->add_option("--coupling-out", coupling_out, "write the coupling here");

  auto* cmd_equiv = app.add_subcommand("equiv", "Test two MDPs for triple equivalence");
  cmd_equiv->add_option("pathA", path, "first MDP document")->required();
  cmd_equiv->add_option("pathB", path_b, "second MDP document")->required();
  cmd_equiv->add_option("--tol", tol, "comparison tolerance")->capture_default_str();

  auto* cmd_simulate =
      app.add_subcommand("simulate", "Monte Carlo hitting-time estimate on the restart chain");
  cmd_simulate->add_option("path", path, "MDP document")->required();
  cmd_simulate->add_option("--target", target, "target pair (index or \"state,action\")")
      ->required();
  cmd_simulate->add_option("--start", start, "start pair (index or \"state,action\")")
      ->required();
  cmd_simulate->add_option("--episodes", episodes, "episode count")->capture_default_str();
  cmd_simulate->add_option("--steps", steps, "per-episode step cap (0: auto)");
  cmd_simulate->add_option("--seed", seed, "simulation seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (cmd_validate->parsed()) return run_validate(path);
    if (cmd_occupancy->parsed()) return run_occupancy(path, normalized);
    if (cmd_hitting->parsed()) return run_hitting(path, kind);
    if (cmd_gw->parsed())
      return run_gw(path, path_b, exact, restarts, seed, no_normalize, coupling_out);
    if (cmd_equiv->parsed()) return run_equiv(path, path_b, tol);
    if (cmd_simulate->parsed())
      return run_simulate(path, target, start, episodes, steps, seed);
  } catch (const ParseError& e) {
    emit_error({{"error", "parse"}, {"message", e.what()}});
    return kExitParseError;
  } catch (const NonStochasticRowError& e) {
    emit_error({{"error", "non_stochastic_row"},
                {"location", e.location},
                {"deficit", e.deficit},
                {"message", e.what()}});
    return kExitInvalidModel;
  } catch (const NegativeEntryError& e) {
    emit_error(
        {{"error", "negative_entry"}, {"location", e.location}, {"message", e.what()}});
    return kExitInvalidModel;
  } catch (const GammaOutOfRangeError& e) {
    emit_error({{"error", "gamma_out_of_range"}, {"gamma", e.gamma}, {"message", e.what()}});
    return kExitInvalidModel;
  } catch (const ValidationError& e) {
    emit_error({{"error", "validation"}, {"message", e.what()}});
    return kExitInvalidModel;
  } catch (const InfeasibleCouplingError& e) {
    emit_error({{"error", "infeasible_coupling"},
                {"max_marginal_gap", e.max_marginal_gap},
                {"message", e.what()}});
    return kExitInfeasible;
  } catch (const AllCensoredError& e) {
    emit_error({{"error", "all_censored"}, {"message", e.what()}});
    return kExitAllCensored;
  } catch (const TooLargeError& e) {
    emit_error({{"error", "too_large"}, {"message", e.what()}});
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    emit_error({{"error", "usage"}, {"message", e.what()}});
    return kExitUsage;
  } catch (const std::exception& e) {
    emit_error({{"error", "internal"}, {"message", e.what()}});
    return kExitInternal;
  }
  return kExitInternal;
}
