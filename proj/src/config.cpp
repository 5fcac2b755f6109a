#include "scatlab/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace scatlab {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + "." + key + ": wrong type");
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

WavepacketSpec RunConfig::left_spec() const {
  WavepacketSpec s;
  s.k_i = k_i_over_pi * M_PI;
  s.sigma_k = sigma_k_over_pi * M_PI;
  s.d = packet_width;
  s.n0 = left_center >= 0 ? left_center : couplings.length / 4;
  return s;
}

WavepacketSpec RunConfig::right_spec() const {
  WavepacketSpec s = left_spec();
  s.k_i = -s.k_i;
  s.n0 = right_center >= 0 ? right_center : couplings.length - 1 - left_spec().n0;
  return s;
}

EvolutionSchedule RunConfig::expanded_schedule() const {
  EvolutionSchedule s = evolution;
  if (s.snapshot_times.empty() && snapshot_interval > 0.0) {
    for (double t = 0.0; t <= s.t_end + 1e-9; t += snapshot_interval) {
      s.snapshot_times.push_back(std::min(t, s.t_end));
    }
  }
  return s;
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c;

  require(j.contains("couplings"), "couplings: missing");
  const auto& jc = j.at("couplings");
  require(jc.contains("g_x"), "couplings.g_x: missing");
  require(jc.contains("g_z"), "couplings.g_z: missing");
  c.couplings.g_x = get_or<double>(jc, "g_x", 1.25, "couplings");
  c.couplings.g_z = get_or<double>(jc, "g_z", 0.15, "couplings");
  require(j.contains("lattice") && j.at("lattice").contains("length"),
          "lattice.length: missing");
  c.couplings.length = j.at("lattice").at("length").get<int>();
  require(c.couplings.length >= 4, "lattice.length: must be >= 4");

  if (j.contains("wavepackets")) {
    const auto& jw = j.at("wavepackets");
    c.k_i_over_pi = get_or<double>(jw, "k_i_over_pi", c.k_i_over_pi, "wavepackets");
    c.sigma_k_over_pi = get_or<double>(jw, "sigma_k_over_pi", c.sigma_k_over_pi, "wavepackets");
    c.packet_width = get_or<int>(jw, "d", c.packet_width, "wavepackets");
    c.left_center = get_or<int>(jw, "left_center", c.left_center, "wavepackets");
    c.right_center = get_or<int>(jw, "right_center", c.right_center, "wavepackets");
    require(c.k_i_over_pi > 0.0 && c.k_i_over_pi < 1.0,
            "wavepackets.k_i_over_pi: must be in (0, 1)");
    require(c.sigma_k_over_pi > 0.0, "wavepackets.sigma_k_over_pi: must be positive");
    require(c.packet_width >= 1 && c.packet_width % 2 == 1,
            "wavepackets.d: must be odd and >= 1");
  }

  if (j.contains("layers")) {
    const auto& jl = j.at("layers");
    c.layers_enabled = get_or<bool>(jl, "enabled", true, "layers");
    c.layer_substeps = get_or<int>(jl, "substeps", 8, "layers");
    require(c.layer_substeps >= 1, "layers.substeps: must be >= 1");
    if (jl.contains("schedule")) {
      c.layer_schedule.clear();
      for (const auto& row : jl.at("schedule")) {
        require(row.is_array() && row.size() == 2, "layers.schedule: rows must be [op, angle]");
        c.layer_schedule.push_back({row[0].get<std::string>(), row[1].get<double>()});
      }
    }
  }

  require(j.contains("evolution"), "evolution: missing");
  const auto& je = j.at("evolution");
  c.evolution.dt = get_or<double>(je, "dt", 1.0 / 32.0, "evolution");
  require(je.contains("t_end"), "evolution.t_end: missing");
  c.evolution.t_end = je.at("t_end").get<double>();
  c.snapshot_interval = get_or<double>(je, "snapshot_interval", 1.0, "evolution");
  c.evolution.norm_floor = get_or<double>(je, "norm_floor", 0.5, "evolution");
  if (je.contains("stages")) {
    for (const auto& row : je.at("stages")) {
      TruncationStage st;
      st.t_from = get_or<double>(row, "t_from", 0.0, "evolution.stages");
      st.policy.max_bond = get_or<int>(row, "max_bond", 1 << 28, "evolution.stages");
      st.policy.cutoff = get_or<double>(row, "cutoff", 1e-9, "evolution.stages");
      st.policy.renormalize_after_truncation =
          get_or<bool>(row, "renormalize", false, "evolution.stages");
      c.evolution.stages.push_back(st);
    }
  }
  try {
    validate(c.expanded_schedule());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("evolution: ") + e.what());
  }

  if (j.contains("cuts")) {
    const auto& jq = j.at("cuts");
    const std::string mode = get_or<std::string>(jq, "mode", "auto", "cuts");
    require(mode == "auto" || mode == "manual", "cuts.mode: must be auto or manual");
    c.cuts_auto = mode == "auto";
    if (!c.cuts_auto) {
      require(jq.contains("n_l") && jq.contains("n_r"), "cuts: manual mode needs n_l and n_r");
      c.n_l = jq.at("n_l").get<int>();
      c.n_r = jq.at("n_r").get<int>();
      require(c.n_l >= 0 && c.n_r > c.n_l && c.n_r < c.couplings.length - 1,
              "cuts: need 0 <= n_l < n_r < L-1");
    }
  }

  if (j.contains("ed")) {
    const auto& jd = j.at("ed");
    if (jd.contains("L_list")) {
      c.ed_L_list = jd.at("L_list").get<std::vector<int>>();
      require(!c.ed_L_list.empty(), "ed.L_list: must not be empty");
      for (int L : c.ed_L_list) {
        require(L >= 4 && L <= 18, "ed.L_list: entries must be in [4, 18]");
      }
    }
    c.ed_bands = get_or<int>(jd, "bands", 2, "ed");
    c.ed_k_grid_points = get_or<int>(jd, "k_grid_points", 201, "ed");
    c.ed_threads = get_or<int>(jd, "threads", 1, "ed");
    require(c.ed_bands >= 1 && c.ed_bands <= 4, "ed.bands: must be in [1, 4]");
    require(c.ed_k_grid_points >= 16, "ed.k_grid_points: must be >= 16");
  }

  if (j.contains("vacuum")) {
    const auto& jv = j.at("vacuum");
    c.vacuum.max_bond = get_or<int>(jv, "max_bond", 32, "vacuum");
    c.vacuum.variance_tol = get_or<double>(jv, "variance_tol", 1e-8, "vacuum");
    c.vacuum.max_sweeps = get_or<int>(jv, "max_sweeps", 24, "vacuum");
    require(c.vacuum.max_bond >= 2, "vacuum.max_bond: must be >= 2");
  }

  if (j.contains("analysis")) {
    const auto& ja = j.at("analysis");
    c.analysis.significance = get_or<double>(ja, "significance", 1e-2, "analysis");
    c.analysis.min_capture = get_or<double>(ja, "min_capture", 0.5, "analysis");
    c.analysis.vacuum_side_max = get_or<double>(ja, "vacuum_side_max", 0.1, "analysis");
    c.max_relative_error = get_or<double>(ja, "max_relative_error", 0.15, "analysis");
    require(c.analysis.significance > 0.0 && c.analysis.significance < 1.0,
            "analysis.significance: must be in (0, 1)");
  }

  c.output_dir = get_or<std::string>(j, "output_dir", "out", "");
  c.seed = get_or<uint64_t>(j, "seed", 12345, "");
  c.threads = get_or<int>(j, "threads", 1, "");

  // cross-field checks
  try {
    validate(c.left_spec(), c.couplings.length);
    validate(c.right_spec(), c.couplings.length);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("wavepackets: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string default_config_json() {
  json j;
  j["couplings"] = {{"g_x", 1.25}, {"g_z", 0.15}};
  j["lattice"] = {{"length", 400}};
  j["wavepackets"] = {{"k_i_over_pi", 0.36},
                      {"sigma_k_over_pi", 0.059},
                      {"d", 21},
                      {"left_center", 100},
                      {"right_center", 299}};
  j["layers"] = {{"enabled", true}, {"substeps", 8}};
  j["evolution"] = {{"dt", 1.0 / 32.0},
                    {"t_end", 120.0},
                    {"snapshot_interval", 1.0},
                    {"norm_floor", 0.5},
                    {"stages", json::array({json{{"t_from", 0.0}, {"max_bond", 600}, {"cutoff", 1e-9}},
                                            json{{"t_from", 40.0}, {"max_bond", 350}, {"cutoff", 1e-9}}})}};
  j["cuts"] = {{"mode", "auto"}};
  j["ed"] = {{"L_list", {10, 12, 14, 16, 18}}, {"bands", 2}, {"k_grid_points", 201}, {"threads", 1}};
  j["vacuum"] = {{"max_bond", 32}, {"variance_tol", 1e-8}, {"max_sweeps", 24}};
  j["analysis"] = {{"significance", 1e-2},
                   {"min_capture", 0.5},
                   {"vacuum_side_max", 0.1},
                   {"max_relative_error", 0.15}};
  j["output_dir"] = "out";
  j["seed"] = 12345;
  j["threads"] = 1;
  return j.dump(2);
}

}  // namespace scatlab
