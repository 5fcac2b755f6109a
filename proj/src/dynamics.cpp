#include "scatlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace scatlab {

namespace {

bool on_grid(double t, double dt) {
  const double steps = t / dt;
  return std::abs(steps - std::round(steps)) <= 1e-9 * std::max(1.0, std::abs(steps));
}

struct SweepAccumulator {
  double discarded = 0.0;
  int max_bond = 1;

  void absorb(const GateResult& r, const MatrixProductState& psi) {
    discarded += r.discarded_weight;
    (void)psi;
  }
};

void sweep_even(MatrixProductState& psi, const std::vector<Gate2>& gates,
                const TruncationPolicy& pol, SweepAccumulator& acc) {
  const int L = psi.length();
  for (int b = 0; b + 1 < L; b += 2) {
    acc.absorb(psi.apply_two_site_gate(b, gates[b / 2], pol, true), psi);
  }
}

void sweep_odd(MatrixProductState& psi, const std::vector<Gate2>& gates,
               const TruncationPolicy& pol, SweepAccumulator& acc) {
  const int L = psi.length();
  int b = (L - 2) % 2 == 1 ? L - 2 : L - 3;
  for (; b >= 1; b -= 2) {
    acc.absorb(psi.apply_two_site_gate(b, gates[(b - 1) / 2], pol, false), psi);
  }
}

}  // namespace

void validate(const EvolutionSchedule& s) {
  if (s.dt <= 0.0 || s.t_end < 0.0) {
    throw std::invalid_argument("EvolutionSchedule: dt must be positive and t_end >= 0");
  }
  if (!on_grid(s.t_end, s.dt)) {
    throw std::invalid_argument("EvolutionSchedule: t_end must be a multiple of dt");
  }
  for (double t : s.snapshot_times) {
    if (t < 0.0 || t > s.t_end + 1e-12) {
      throw std::invalid_argument("EvolutionSchedule: snapshot time outside [0, t_end]");
    }
    if (!on_grid(t, s.dt)) {
      throw std::invalid_argument("EvolutionSchedule: snapshot times must sit on the dt grid");
    }
  }
  for (size_t i = 1; i < s.stages.size(); ++i) {
    if (s.stages[i].t_from <= s.stages[i - 1].t_from) {
      throw std::invalid_argument("EvolutionSchedule: stages must be strictly time-ordered");
    }
  }
  if (s.norm_floor < 0.0 || s.norm_floor >= 1.0) {
    throw std::invalid_argument("EvolutionSchedule: norm_floor must be in [0, 1)");
  }
}

std::vector<SnapshotRecord> evolve(MatrixProductState& state, const TrotterGateSet& gates,
                                   const EvolutionSchedule& schedule,
                                   const std::vector<double>& vacuum_site_energies,
                                   const IsingCouplings& couplings) {
  validate(schedule);
  if (gates.lattice_length != state.length()) {
    throw std::invalid_argument("evolve: gate set was built for a different lattice length");
  }

  const long total_steps = std::lround(schedule.t_end / schedule.dt);

  // segment boundaries: snapshots, stage activations, and the end time
  std::set<long> boundaries;
  boundaries.insert(total_steps);
  for (double t : schedule.snapshot_times) boundaries.insert(std::lround(t / schedule.dt));
  for (const auto& st : schedule.stages) {
    if (!on_grid(st.t_from, schedule.dt)) {
      throw std::invalid_argument("evolve: stage trigger must sit on the dt grid");
    }
    boundaries.insert(std::lround(st.t_from / schedule.dt));
  }
  std::set<long> snapshot_steps;
  for (double t : schedule.snapshot_times) snapshot_steps.insert(std::lround(t / schedule.dt));

  TruncationPolicy pol;  // unbounded until the first stage activates
  size_t next_stage = 0;

  std::vector<SnapshotRecord> records;
  double cumulative_discarded = 0.0;
  int max_bond_window = state.max_bond_dim();

  auto maybe_record = [&](long step) {
    if (snapshot_steps.count(step) == 0) return;
    SnapshotRecord r;
    r.t = step * schedule.dt;
    r.energy_density = energy_density(state, vacuum_site_energies, couplings);
    r.midpoint_spectrum = state.schmidt_spectrum(state.length() / 2 - 1);
    r.norm_sq = state.norm_sq();
    r.max_bond_used = std::max(max_bond_window, state.max_bond_dim());
    r.cumulative_discarded_weight = cumulative_discarded;
    records.push_back(std::move(r));
    max_bond_window = state.max_bond_dim();
  };

  auto check_floor = [&](long step) {
    const double n2 = state.norm_sq();
    if (n2 < schedule.norm_floor) {
      throw std::runtime_error(
          "evolve: squared norm " + std::to_string(n2) + " fell below the floor " +
          std::to_string(schedule.norm_floor) + " at t=" + std::to_string(step * schedule.dt) +
          " (max bond " + std::to_string(state.max_bond_dim()) + ", discarded " +
          std::to_string(cumulative_discarded) + ")");
    }
  };

  auto activate_stages = [&](long step) {
    const double t = step * schedule.dt;
    while (next_stage < schedule.stages.size() &&
           schedule.stages[next_stage].t_from <= t + 1e-12) {
      pol = schedule.stages[next_stage].policy;
      validate(pol);
      ++next_stage;
      cumulative_discarded += state.compress(pol);
    }
  };

  activate_stages(0);
  maybe_record(0);

  long step = 0;
  SweepAccumulator acc;
  while (step < total_steps) {
    const long seg_end = *boundaries.upper_bound(step);
    const long m = seg_end - step;
    acc.discarded = 0.0;

    if (gates.order == 2) {
      sweep_even(state, gates.even_bond_half_gates, pol, acc);
      for (long s = 0; s < m; ++s) {
        sweep_odd(state, gates.odd_bond_gates, pol, acc);
        if (s + 1 < m) {
          sweep_even(state, gates.even_bond_gates, pol, acc);
        } else {
          sweep_even(state, gates.even_bond_half_gates, pol, acc);
        }
        if (gates.imaginary_time) state.normalize_center();
        max_bond_window = std::max(max_bond_window, state.max_bond_dim());
      }
    } else {
      for (long s = 0; s < m; ++s) {
        sweep_even(state, gates.even_bond_gates, pol, acc);
        sweep_odd(state, gates.odd_bond_gates, pol, acc);
        if (gates.imaginary_time) state.normalize_center();
        max_bond_window = std::max(max_bond_window, state.max_bond_dim());
      }
    }
    cumulative_discarded += acc.discarded;
    step = seg_end;
    check_floor(step);
    activate_stages(step);
    maybe_record(step);
  }
  return records;
}

}  // namespace scatlab
