#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "scatlab/dynamics.hpp"
#include "scatlab/entanglement.hpp"
#include "scatlab/spectroscopy.hpp"
#include "scatlab/state_prep.hpp"

namespace scatlab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct HeuristicError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  IsingCouplings couplings;                  // includes lattice length

  // wavepackets; centers default to mirrored quarter positions when < 0
  double k_i_over_pi = 0.36;
  double sigma_k_over_pi = 0.059;
  int packet_width = 21;
  int left_center = -1;
  int right_center = -1;

  bool layers_enabled = true;
  int layer_substeps = 8;
  VariationalLayerSchedule layer_schedule = reference_layer_schedule();

  EvolutionSchedule evolution;
  double snapshot_interval = 1.0;            // expanded into snapshot_times

  bool cuts_auto = true;
  int n_l = -1;
  int n_r = -1;

  std::vector<int> ed_L_list = {10, 12, 14, 16, 18};
  int ed_bands = 2;
  int ed_k_grid_points = 201;
  int ed_threads = 1;

  VacuumOptions vacuum;
  ChannelOptions analysis;
  double max_relative_error = 0.15;

  std::string output_dir = "out";
  uint64_t seed = 12345;
  int threads = 1;

  WavepacketSpec left_spec() const;
  WavepacketSpec right_spec() const;
  EvolutionSchedule expanded_schedule() const;  // snapshot_times filled in
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);
std::string default_config_json();

// ---------------------------------------------------------------------------
// emitted-file writers and the bundled schema checkers
// ---------------------------------------------------------------------------

void write_energy_density_csv(const std::string& path,
                              const std::vector<SnapshotRecord>& records);
void write_diagnostics_jsonl(const std::string& path,
                             const std::vector<SnapshotRecord>& records);
void write_dispersion_csv(const std::string& path, const DispersionTable& table);
DispersionTable read_dispersion_csv(const std::string& path);
void write_channel_energy_csv(const std::string& path, const ChannelReport& report);
void write_channel_report_json(const std::string& path, const ChannelReport& report,
                               const std::vector<ClassificationRecord>& classifications);
void write_classification_csv(const std::string& path,
                              const std::vector<ClassificationRecord>& records);

// Returns a human-readable failure reason, or empty when the file passes its
// schema check. The kind is inferred from the file name.
std::string check_emitted_file(const std::string& path);

}  // namespace scatlab
