#pragma once

#include <vector>

#include "scatlab/ising.hpp"

namespace scatlab {

struct TruncationStage {
  double t_from = 0.0;
  TruncationPolicy policy;
};

struct EvolutionSchedule {
  double t_end = 120.0;
  double dt = 1.0 / 32.0;
  std::vector<double> snapshot_times;       // must sit on the dt grid
  std::vector<TruncationStage> stages;      // time-ordered; first applies from t=0
  double norm_floor = 0.5;
};

void validate(const EvolutionSchedule& s);

struct SnapshotRecord {
  double t = 0.0;
  std::vector<double> energy_density;
  SchmidtSpectrum midpoint_spectrum;
  double norm_sq = 0.0;
  int max_bond_used = 0;                    // largest bond seen since the last record
  double cumulative_discarded_weight = 0.0;
};

// Trotter evolution with staged truncation and snapshot capture. The state is
// advanced in place; when a stage activates, the state is compressed down to
// the new policy immediately (the compression loss is counted). Aborts when
// the squared norm falls below schedule.norm_floor.
std::vector<SnapshotRecord> evolve(MatrixProductState& state, const TrotterGateSet& gates,
                                   const EvolutionSchedule& schedule,
                                   const std::vector<double>& vacuum_site_energies,
                                   const IsingCouplings& couplings);

}  // namespace scatlab
