#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scatlab/ising.hpp"

namespace scatlab {

// S = -sum_i lambda_i ln(lambda_i), evaluated on the spectrum as given so that
// component entropies of an unnormalized decomposition add up.
double entanglement_entropy(const SchmidtSpectrum& spectrum);

// Sample variance of the spectrum padded with zeros to length chi:
// F = (1/chi) sum lambda_i^2 - ((1/chi) sum lambda_i)^2.
double antiflatness(const SchmidtSpectrum& spectrum, int chi);

// Spatial windows the outgoing excitations are expected to occupy, derived
// from group velocities and elapsed time. Half-open [first, second) ranges.
struct SeparationWindows {
  std::pair<int, int> fast_left;
  std::pair<int, int> slow_left;
  std::pair<int, int> slow_right;
  std::pair<int, int> fast_right;
};

SeparationWindows kinematic_windows(int lattice_length, int collision_site, double v_fast,
                                    double v_slow, double elapsed_time);

struct ChannelOptions {
  double significance = 1e-2;   // lambda threshold relative to the input norm^2
  double min_capture = 0.5;     // template energy fraction required for a label
  double vacuum_side_max = 0.1; // "vacuum-like" side: at most this energy fraction
  TruncationPolicy component_compression{.max_bond = 1 << 28, .cutoff = 1e-12};
};

struct ExclusiveChannel {
  std::string label;            // "11", "12", "21", "higher-order"
  double probability = 0.0;
  MatrixProductState state;     // unnormalized exclusive component
  std::vector<double> energy_density;
  std::pair<int, int> schmidt_indices{-1, -1};  // indices picked at (n_l, n_r)
};

struct ChannelReport {
  std::vector<ExclusiveChannel> channels;
  double residual_probability = 0.0;
  std::pair<int, int> cut_positions{0, 0};
  SchmidtSpectrum spectrum_left;        // at n_l on the input state
  SchmidtSpectrum spectrum_right_kept;  // at n_r on the fast-left remainder
  SchmidtSpectrum spectrum_right_slow;  // at n_r on the slow-left component
  double p_elastic = 0.0;               // P(11)
  double p_inelastic = 0.0;             // P(12) + P(21)
  std::vector<std::string> warnings;
};

// Two-cut exclusive-channel isolation. The input should be renormalized to
// unity; outgoing packets must be spatially separated per the windows.
ChannelReport isolate_channels(MatrixProductState& final_state, int n_l, int n_r,
                               const SeparationWindows& windows,
                               const std::vector<double>& vacuum_site_energies,
                               const IsingCouplings& couplings,
                               const ChannelOptions& opts = {});

SchmidtSpectrum vacuum_spectrum_baseline(MatrixProductState& vacuum, int cut);

// Picks n_l at the energy-density minimum between the slow and fast left
// lumps (and mirrors it for n_r) when no explicit override is configured.
std::pair<int, int> choose_cut_sites(const std::vector<double>& energy_density,
                                     const SeparationWindows& windows);

}  // namespace scatlab
