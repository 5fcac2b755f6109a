#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "scatlab/config.hpp"

namespace scatlab {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw NumericalError("cannot open " + path + " for writing");
  f.precision(12);
  return f;
}

json spectrum_to_json(const SchmidtSpectrum& s) {
  return json{{"cut_site", s.cut_site}, {"chi", s.chi}, {"values", s.values}};
}

json classification_to_json(const ClassificationRecord& r) {
  const char* status = r.status == ClassificationRecord::Status::ok
                           ? "ok"
                           : (r.status == ClassificationRecord::Status::rejected ? "rejected"
                                                                                 : "unclassifiable");
  return json{{"excitation", r.excitation_label},
              {"velocity", r.measured_velocity},
              {"k1_candidates", r.k1_candidates},
              {"k2_candidates", r.k2_candidates},
              {"E1_candidates", r.e1_candidates},
              {"E2_candidates", r.e2_candidates},
              {"E_wp", r.e_wp},
              {"chosen_species", r.chosen_species},
              {"chosen_k", r.chosen_k},
              {"chosen_E", r.chosen_e},
              {"relative_error", r.relative_error},
              {"status", status}};
}

}  // namespace

void write_energy_density_csv(const std::string& path,
                              const std::vector<SnapshotRecord>& records) {
  auto f = open_out(path);
  f << "t,n,E_n\n";
  for (const auto& r : records) {
    for (size_t n = 0; n < r.energy_density.size(); ++n) {
      f << r.t << ',' << n << ',' << r.energy_density[n] << '\n';
    }
  }
}

void write_diagnostics_jsonl(const std::string& path,
                             const std::vector<SnapshotRecord>& records) {
  auto f = open_out(path);
  for (const auto& r : records) {
    json j{{"t", r.t},
           {"norm_sq", r.norm_sq},
           {"max_bond", r.max_bond_used},
           {"discarded_weight", r.cumulative_discarded_weight},
           {"midpoint_entropy", entanglement_entropy(r.midpoint_spectrum)},
           {"midpoint_chi", r.midpoint_spectrum.chi}};
    f << j.dump() << '\n';
  }
}

void write_dispersion_csv(const std::string& path, const DispersionTable& t) {
  auto f = open_out(path);
  f << "k,E1,E2,v1,v2\n";
  for (size_t i = 0; i < t.k.size(); ++i) {
    f << t.k[i] << ',' << t.e1[i] << ',';
    f << (t.e2.empty() ? std::nan("") : t.e2[i]) << ',';
    f << t.v1[i] << ',';
    f << (t.v2.empty() ? std::nan("") : t.v2[i]) << '\n';
  }
}

DispersionTable read_dispersion_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw NumericalError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line) || line.rfind("k,E1,E2,v1,v2", 0) != 0) {
    throw NumericalError(path + ": not a dispersion table");
  }
  DispersionTable t;
  bool any2 = false;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      row.push_back(cell == "nan" || cell == "-nan" ? std::nan("") : std::stod(cell));
    }
    if (row.size() != 5) throw NumericalError(path + ": malformed row");
    t.k.push_back(row[0]);
    t.e1.push_back(row[1]);
    t.e2.push_back(row[2]);
    t.v1.push_back(row[3]);
    t.v2.push_back(row[4]);
    any2 = any2 || std::isfinite(row[2]);
  }
  if (t.k.size() < 2) throw NumericalError(path + ": empty table");
  if (!any2) {
    t.e2.clear();
    t.v2.clear();
  }
  t.m1 = t.e1.front();
  t.m2 = any2 ? t.e2.front() : std::nan("");
  t.source.method = "loaded from " + path;
  if (std::isfinite(t.m2)) {
    PchipInterpolant fe1(t.k, t.e1, true);
    const double target = t.m1 + t.m2;
    double lo = 0.0, hi = t.k.back();
    t.k_thr = std::nan("");
    if (2.0 * t.e1.front() < target && 2.0 * t.e1.back() > target) {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (2.0 * fe1.value(mid) < target ? lo : hi) = mid;
      }
      t.k_thr = 0.5 * (lo + hi);
    }
  }
  return t;
}

void write_channel_energy_csv(const std::string& path, const ChannelReport& report) {
  auto f = open_out(path);
  f << "channel,n,E_n\n";
  for (const auto& ch : report.channels) {
    for (size_t n = 0; n < ch.energy_density.size(); ++n) {
      f << ch.label << ',' << n << ',' << ch.energy_density[n] << '\n';
    }
  }
}

void write_channel_report_json(const std::string& path, const ChannelReport& report,
                               const std::vector<ClassificationRecord>& classifications) {
  json j;
  j["cut_positions"] = {report.cut_positions.first, report.cut_positions.second};
  j["residual_probability"] = report.residual_probability;
  j["P_elastic"] = report.p_elastic;
  j["P_inelastic"] = report.p_inelastic;
  j["spectrum_left"] = spectrum_to_json(report.spectrum_left);
  j["spectrum_right_kept"] = spectrum_to_json(report.spectrum_right_kept);
  j["spectrum_right_slow"] = spectrum_to_json(report.spectrum_right_slow);
  j["warnings"] = report.warnings;
  j["channels"] = json::array();
  for (const auto& ch : report.channels) {
    j["channels"].push_back(json{{"label", ch.label},
                                 {"probability", ch.probability},
                                 {"schmidt_indices", {ch.schmidt_indices.first,
                                                      ch.schmidt_indices.second}}});
  }
  j["classifications"] = json::array();
  for (const auto& r : classifications) j["classifications"].push_back(classification_to_json(r));
  auto f = open_out(path);
  f << j.dump(2) << '\n';
}

void write_classification_csv(const std::string& path,
                              const std::vector<ClassificationRecord>& records) {
  auto f = open_out(path);
  f << "excitation,velocity,E_wp,chosen_species,chosen_k_over_pi,chosen_E,relative_error,status\n";
  for (const auto& r : records) {
    const char* status = r.status == ClassificationRecord::Status::ok
                             ? "ok"
                             : (r.status == ClassificationRecord::Status::rejected
                                    ? "rejected"
                                    : "unclassifiable");
    f << r.excitation_label << ',' << r.measured_velocity << ',' << r.e_wp << ','
      << r.chosen_species << ',' << r.chosen_k / M_PI << ',' << r.chosen_e << ','
      << r.relative_error << ',' << status << '\n';
  }
}

namespace {

std::string check_csv_header(const std::string& path, const std::string& header) {
  std::ifstream f(path);
  if (!f) return "cannot open file";
  std::string line;
  if (!std::getline(f, line)) return "empty file";
  if (line.rfind(header, 0) != 0) return "expected header '" + header + "', found '" + line + "'";
  int rows = 0;
  const auto cols = static_cast<size_t>(std::count(header.begin(), header.end(), ',')) + 1;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto found = static_cast<size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (found != cols) {
      return "row " + std::to_string(rows + 2) + " has " + std::to_string(found) + " columns";
    }
    ++rows;
  }
  if (rows == 0) return "no data rows";
  return {};
}

std::string check_json_file(const std::string& path, const std::vector<std::string>& keys) {
  std::ifstream f(path);
  if (!f) return "cannot open file";
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    return std::string("invalid JSON: ") + e.what();
  }
  for (const auto& k : keys) {
    if (!j.contains(k)) return "missing key '" + k + "'";
  }
  return {};
}

std::string check_jsonl_file(const std::string& path, const std::vector<std::string>& keys) {
  std::ifstream f(path);
  if (!f) return "cannot open file";
  std::string line;
  int rows = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      return "line " + std::to_string(rows + 1) + ": " + e.what();
    }
    for (const auto& k : keys) {
      if (!j.contains(k)) return "line " + std::to_string(rows + 1) + ": missing key '" + k + "'";
    }
    ++rows;
  }
  if (rows == 0) return "no records";
  return {};
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::string check_emitted_file(const std::string& path) {
  if (ends_with(path, "energy_density.csv")) return check_csv_header(path, "t,n,E_n");
  if (ends_with(path, "dispersion.csv")) return check_csv_header(path, "k,E1,E2,v1,v2");
  if (ends_with(path, "channels_en.csv")) return check_csv_header(path, "channel,n,E_n");
  if (ends_with(path, "classification.csv")) {
    return check_csv_header(
        path, "excitation,velocity,E_wp,chosen_species,chosen_k_over_pi,chosen_E");
  }
  if (ends_with(path, "diagnostics.jsonl")) {
    return check_jsonl_file(path, {"t", "norm_sq", "max_bond", "discarded_weight"});
  }
  if (ends_with(path, "channel_report.json")) {
    return check_json_file(
        path, {"channels", "residual_probability", "cut_positions", "P_elastic", "P_inelastic"});
  }
  if (ends_with(path, ".mps")) {
    try {
      MatrixProductState::load(path).check_structure();
      return {};
    } catch (const std::exception& e) {
      return e.what();
    }
  }
  if (ends_with(path, ".json")) {
    try {
      load_config(path);
      return {};
    } catch (const std::exception& e) {
      return e.what();
    }
  }
  return "unrecognized file kind";
}

}  // namespace scatlab
