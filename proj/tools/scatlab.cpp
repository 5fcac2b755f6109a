#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "scatlab/config.hpp"

namespace fs = std::filesystem;
using namespace scatlab;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitHeuristic = 4;

struct PipelinePaths {
  fs::path dir;
  fs::path final_state() const { return dir / "final_state.mps"; }
  fs::path reference_state() const { return dir / "reference_state.mps"; }
  fs::path vacuum_state() const { return dir / "vacuum_state.mps"; }
  fs::path energy_density() const { return dir / "energy_density.csv"; }
  fs::path diagnostics() const { return dir / "diagnostics.jsonl"; }
  fs::path dispersion() const { return dir / "dispersion.csv"; }
  fs::path channel_report() const { return dir / "channel_report.json"; }
  fs::path channels_en() const { return dir / "channels_en.csv"; }
  fs::path classification() const { return dir / "classification.csv"; }
};

PipelinePaths make_paths(const RunConfig& cfg) {
  PipelinePaths p{fs::path(cfg.output_dir)};
  fs::create_directories(p.dir);
  return p;
}

DispersionTable obtain_dispersion(const RunConfig& cfg, const PipelinePaths& paths) {
  if (fs::exists(paths.dispersion())) {
    return read_dispersion_csv(paths.dispersion().string());
  }
  EdOptions opts;
  opts.bands = cfg.ed_bands;
  opts.k_grid_points = cfg.ed_k_grid_points;
  opts.threads = cfg.ed_threads;
  auto table = dispersion_from_ed(cfg.couplings, cfg.ed_L_list, opts);
  write_dispersion_csv(paths.dispersion().string(), table);
  return table;
}

int cmd_validate(const std::string& config_path) {
  load_config(config_path);
  std::cout << "config ok: " << config_path << "\n";
  return 0;
}

int cmd_vacuum(const std::string& config_path) {
  const auto cfg = load_config(config_path);
  const auto paths = make_paths(cfg);
  auto res = prepare_vacuum(cfg.couplings, cfg.vacuum);
  res.state.save(paths.vacuum_state().string());
  std::cout << "vacuum energy " << res.energy << "  variance " << res.variance << "  sweeps "
            << res.sweeps << "  max bond " << res.state.max_bond_dim() << "\n"
            << "wrote " << paths.vacuum_state() << "\n";
  return 0;
}

int cmd_dispersion(const std::string& config_path) {
  const auto cfg = load_config(config_path);
  const auto paths = make_paths(cfg);
  EdOptions opts;
  opts.bands = cfg.ed_bands;
  opts.k_grid_points = cfg.ed_k_grid_points;
  opts.threads = cfg.ed_threads;
  const auto table = dispersion_from_ed(cfg.couplings, cfg.ed_L_list, opts);
  write_dispersion_csv(paths.dispersion().string(), table);
  std::cout << "m1 = " << table.m1;
  if (std::isfinite(table.m2)) std::cout << "  m2 = " << table.m2;
  if (std::isfinite(table.k_thr)) std::cout << "  k_thr = " << table.k_thr / M_PI << " pi";
  std::cout << "\nwrote " << paths.dispersion() << "\n";
  return 0;
}

int cmd_scatter(const std::string& config_path) {
  const auto cfg = load_config(config_path);
  const auto paths = make_paths(cfg);

  TwoPacketOptions prep;
  prep.substeps = cfg.layer_substeps;
  if (!cfg.layers_enabled) prep.layers.clear();
  else prep.layers = cfg.layer_schedule;

  std::cout << "preparing two-packet initial state (L=" << cfg.couplings.length << ")\n";
  auto prepared =
      prepare_two_wavepacket_initial_state(cfg.couplings, cfg.left_spec(), cfg.right_spec(), prep);
  prepared.reference.save(paths.reference_state().string());

  auto vac_energies = site_energies(prepared.reference, cfg.couplings);
  auto gates = build_trotter_gates(cfg.couplings, cfg.evolution.dt, 2, false);
  auto schedule = cfg.expanded_schedule();

  std::cout << "evolving to t=" << schedule.t_end << " (dt=" << schedule.dt << ")\n";
  auto records = evolve(prepared.state, gates, schedule, vac_energies, cfg.couplings);

  prepared.state.save(paths.final_state().string());
  write_energy_density_csv(paths.energy_density().string(), records);
  write_diagnostics_jsonl(paths.diagnostics().string(), records);
  if (!records.empty()) {
    const auto& last = records.back();
    std::cout << "final norm_sq " << last.norm_sq << "  max bond " << last.max_bond_used
              << "  discarded " << last.cumulative_discarded_weight << "\n";
  }
  std::cout << "wrote " << paths.final_state() << ", " << paths.energy_density() << ", "
            << paths.diagnostics() << "\n";
  return 0;
}

struct IsolateArtifacts {
  ChannelReport report;
  std::vector<ClassificationRecord> classifications;
};

IsolateArtifacts run_isolation(const RunConfig& cfg, const PipelinePaths& paths,
                               MatrixProductState& final_state,
                               MatrixProductState& reference) {
  const auto table = obtain_dispersion(cfg, paths);
  const int L = cfg.couplings.length;
  const int x_c = L / 2;

  auto vac_energies = site_energies(reference, cfg.couplings);
  final_state.normalize_to_unit();
  auto e_final = energy_density(final_state, vac_energies, cfg.couplings);

  // kinematics: incoming velocity + slow outgoing velocity from 2 E1(ki) budget
  const double ki = cfg.k_i_over_pi * M_PI;
  const double v_fast = std::abs(group_velocity(table, 1, ki));
  double v_slow = 0.5 * v_fast;
  bool inelastic_open = false;
  if (std::isfinite(table.m2) && std::isfinite(table.k_thr) && ki > table.k_thr) {
    // solve E1(kf) + E2(kf) = 2 E1(ki) for the outgoing pair momentum
    const double budget = 2.0 * dispersion_energy(table, 1, ki);
    double lo = 0.0, hi = table.k.back();
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (dispersion_energy(table, 1, mid) + dispersion_energy(table, 2, mid) < budget ? lo : hi) =
          mid;
    }
    const double kf = 0.5 * (lo + hi);
    v_slow = std::abs(group_velocity(table, 2, kf));
    inelastic_open = true;
  }

  // collision time from the elastic track: centroid of the fast-right lump
  const double t_end = cfg.evolution.t_end;
  auto windows0 = kinematic_windows(L, x_c, v_fast, inelastic_open ? v_slow : 0.5 * v_fast,
                                    0.75 * t_end);
  std::vector<EnergySnapshot> final_series{{t_end, e_final}};
  const double t0 = calibrate_t0(final_series, windows0.fast_right, v_fast, x_c);
  auto windows = kinematic_windows(L, x_c, v_fast, inelastic_open ? v_slow : 0.5 * v_fast,
                                   t_end - t0);

  int n_l = cfg.n_l, n_r = cfg.n_r;
  if (cfg.cuts_auto) {
    if (inelastic_open) {
      std::tie(n_l, n_r) = choose_cut_sites(e_final, windows);
    } else {
      n_l = (windows.fast_left.second + x_c) / 2;
      n_r = (windows.fast_right.first + x_c) / 2;
    }
  }
  std::cout << "cuts n_l=" << n_l << " n_r=" << n_r << "  t0=" << t0 << "  v_fast=" << v_fast
            << " v_slow=" << v_slow << "\n";

  IsolateArtifacts out;
  out.report = isolate_channels(final_state, n_l, n_r, windows, vac_energies, cfg.couplings,
                                cfg.analysis);

  ClassificationOptions copts;
  copts.max_relative_error = cfg.max_relative_error;
  for (const auto& m : measure_excitations(out.report, t_end, t0, x_c)) {
    auto rec = classify_excitation(m.velocity, m.e_wp, table, copts);
    rec.excitation_label = m.channel + ":" + m.side;
    out.classifications.push_back(std::move(rec));
  }
  return out;
}

int cmd_isolate(const std::string& config_path, std::string state_path, std::string ref_path) {
  const auto cfg = load_config(config_path);
  const auto paths = make_paths(cfg);
  if (state_path.empty()) state_path = paths.final_state().string();
  if (ref_path.empty()) ref_path = paths.reference_state().string();
  auto final_state = MatrixProductState::load(state_path);
  auto reference = MatrixProductState::load(ref_path);

  auto artifacts = run_isolation(cfg, paths, final_state, reference);
  write_channel_report_json(paths.channel_report().string(), artifacts.report,
                            artifacts.classifications);
  write_channel_energy_csv(paths.channels_en().string(), artifacts.report);
  write_classification_csv(paths.classification().string(), artifacts.classifications);

  std::cout << "P(11) = " << artifacts.report.p_elastic
            << "  P(12)+P(21) = " << artifacts.report.p_inelastic
            << "  residual = " << artifacts.report.residual_probability << "\n";
  for (const auto& ch : artifacts.report.channels) {
    std::cout << "  channel " << ch.label << "  p = " << ch.probability << "\n";
  }
  for (const auto& w : artifacts.report.warnings) std::cout << "  warning: " << w << "\n";
  std::cout << "wrote " << paths.channel_report() << ", " << paths.channels_en() << ", "
            << paths.classification() << "\n";
  if (!artifacts.report.warnings.empty()) return kExitHeuristic;
  return 0;
}

int cmd_classify(const std::string& config_path, double velocity, double e_wp) {
  const auto cfg = load_config(config_path);
  const auto paths = make_paths(cfg);
  const auto table = obtain_dispersion(cfg, paths);
  ClassificationOptions copts;
  copts.max_relative_error = cfg.max_relative_error;
  auto rec = classify_excitation(velocity, e_wp, table, copts);
  rec.excitation_label = "cli";
  write_classification_csv(paths.classification().string(), {rec});
  std::cout << "species " << rec.chosen_species << "  k = " << rec.chosen_k / M_PI
            << " pi  E = " << rec.chosen_e << "  rel err = " << rec.relative_error << "  status "
            << (rec.status == ClassificationRecord::Status::ok ? "ok" : "not-ok") << "\n";
  return rec.status == ClassificationRecord::Status::unclassifiable ? kExitHeuristic : 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<double>& ki_list, int jobs) {
  const auto base = load_config(config_path);
  const auto paths = make_paths(base);
  std::ofstream summary(paths.dir / "sweep_summary.csv");
  summary.precision(12);
  summary << "k_i_over_pi,norm_sq,midpoint_entropy,midpoint_antiflatness,significant_components\n";

  auto run_one = [&](double ki) {
    RunConfig cfg = base;
    cfg.k_i_over_pi = ki;
    cfg.output_dir = (paths.dir / ("ki_" + std::to_string(ki))).string();
    const auto sub = make_paths(cfg);

    TwoPacketOptions prep;
    prep.substeps = cfg.layer_substeps;
    if (!cfg.layers_enabled) prep.layers.clear();
    auto prepared = prepare_two_wavepacket_initial_state(cfg.couplings, cfg.left_spec(),
                                                         cfg.right_spec(), prep);
    auto vac_energies = site_energies(prepared.reference, cfg.couplings);
    auto gates = build_trotter_gates(cfg.couplings, cfg.evolution.dt, 2, false);
    auto records = evolve(prepared.state, gates, cfg.expanded_schedule(), vac_energies,
                          cfg.couplings);
    prepared.state.save(sub.final_state().string());
    prepared.reference.save(sub.reference_state().string());
    write_energy_density_csv(sub.energy_density().string(), records);
    write_diagnostics_jsonl(sub.diagnostics().string(), records);

    prepared.state.normalize_to_unit();
    auto spec = prepared.state.schmidt_spectrum(cfg.couplings.length / 2 - 1);
    int significant = 0;
    for (double v : spec.values) significant += v >= 0.05;
    return std::tuple<double, double, double, int>(
        records.empty() ? 0.0 : records.back().norm_sq, entanglement_entropy(spec),
        antiflatness(spec, std::max(spec.chi, 1)), significant);
  };

  (void)jobs;  // sweeps run sequentially; memory per job dominates
  for (double ki : ki_list) {
    std::cout << "sweep: k_i = " << ki << " pi\n";
    auto [norm_sq, entropy, flat, nsig] = run_one(ki);
    summary << ki << ',' << norm_sq << ',' << entropy << ',' << flat << ',' << nsig << "\n";
    summary.flush();
  }
  std::cout << "wrote " << (paths.dir / "sweep_summary.csv") << "\n";
  return 0;
}

int cmd_check(const std::vector<std::string>& files) {
  int bad = 0;
  for (const auto& f : files) {
    const auto msg = check_emitted_file(f);
    if (msg.empty()) {
      std::cout << f << ": ok\n";
    } else {
      std::cout << f << ": FAIL (" << msg << ")\n";
      ++bad;
    }
  }
  return bad == 0 ? 0 : kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tensor-network scattering laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string state_path, ref_path;
  std::vector<double> ki_list{0.18, 0.20, 0.24, 0.28, 0.32, 0.36};
  std::vector<std::string> files;
  double velocity = 0.0, e_wp = 0.0;
  int jobs = 1;

  auto* validate_cmd = app.add_subcommand("validate", "validate a run configuration");
  validate_cmd->add_option("config", config_path)->required();

  auto* vacuum_cmd = app.add_subcommand("vacuum", "prepare the variational vacuum");
  vacuum_cmd->add_option("config", config_path)->required();

  auto* disp_cmd = app.add_subcommand("dispersion", "dispersion table from exact diagonalization");
  disp_cmd->add_option("config", config_path)->required();

  auto* scatter_cmd = app.add_subcommand("scatter", "run the collision simulation");
  scatter_cmd->add_option("config", config_path)->required();

  auto* isolate_cmd = app.add_subcommand("isolate", "exclusive-channel isolation");
  isolate_cmd->add_option("config", config_path)->required();
  isolate_cmd->add_option("--state", state_path, "final-state snapshot (.mps)");
  isolate_cmd->add_option("--reference", ref_path, "reference-state snapshot (.mps)");

  auto* classify_cmd = app.add_subcommand("classify", "classify one excitation");
  classify_cmd->add_option("config", config_path)->required();
  classify_cmd->add_option("--velocity", velocity)->required();
  classify_cmd->add_option("--energy", e_wp)->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "scan over incoming momenta");
  sweep_cmd->add_option("config", config_path)->required();
  sweep_cmd->add_option("--ki", ki_list, "momenta in units of pi");
  sweep_cmd->add_option("--jobs", jobs);

  auto* check_cmd = app.add_subcommand("check", "schema-check emitted files");
  check_cmd->add_option("files", files)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate_cmd->parsed()) return cmd_validate(config_path);
    if (vacuum_cmd->parsed()) return cmd_vacuum(config_path);
    if (disp_cmd->parsed()) return cmd_dispersion(config_path);
    if (scatter_cmd->parsed()) return cmd_scatter(config_path);
    if (isolate_cmd->parsed()) return cmd_isolate(config_path, state_path, ref_path);
    if (classify_cmd->parsed()) return cmd_classify(config_path, velocity, e_wp);
    if (sweep_cmd->parsed()) return cmd_sweep(config_path, ki_list, jobs);
    if (check_cmd->parsed()) return cmd_check(files);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const HeuristicError& e) {
    std::cerr << "physics-heuristic failure: " << e.what() << "\n";
    return kExitHeuristic;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
