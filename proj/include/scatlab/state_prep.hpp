#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scatlab/ising.hpp"

namespace scatlab {

struct WavepacketSpec {
  double k_i = 0.36 * M_PI;       // radians per site; sign = direction
  double sigma_k = 0.059 * M_PI;  // momentum-space width
  int n0 = 0;                     // center site
  int d = 21;                     // spatial truncation width, odd
};

void validate(const WavepacketSpec& spec, int lattice_length);

struct VacuumOptions {
  int max_bond = 32;
  double cutoff = 1e-12;
  double variance_tol = 1e-8;
  int max_sweeps = 24;
};

// Ground state via alternating two-site energy-minimization sweeps; converged
// when the energy variance <H^2>-<H>^2 drops below variance_tol.
struct VacuumResult {
  MatrixProductState state;
  double energy = 0.0;
  double variance = 0.0;
  int sweeps = 0;
};

VacuumResult prepare_vacuum(const IsingCouplings& c, const VacuumOptions& opts = {});

// Single-flip momentum superposition over the all-up reference,
// |k> = (1/sqrt(L)) sum_n e^{ikn} |flip at n>.
MatrixProductState plane_wave_state(double k, int length);

// Single-flip superposition with arbitrary window coefficients; sites outside
// [window_start, window_start + coeffs.size()) stay spin-up.
MatrixProductState single_flip_superposition(int length, int window_start,
                                             const std::vector<cplx>& coeffs);

// Rotation-angle cascade for preparing a real-amplitude single-flip window
// state. Forward evaluation reproduces |c_i|; phases are applied separately.
std::vector<double> w_state_angles(const std::vector<double>& coefficients, int peak_index);
std::vector<double> w_state_forward(const std::vector<double>& angles, int peak_index);

struct WavepacketReference {
  MatrixProductState state;            // packet over the all-up reference
  std::vector<cplx> window_coefficients;
  int window_start = 0;
  double norm_retained = 0.0;          // kept fraction of the untruncated packet
};

WavepacketReference wavepacket_reference(const WavepacketSpec& spec, const IsingCouplings& c);

// Translationally invariant dressing layer exp(i theta O) with O one of the
// operator-pool sums; labels: "Y", "YZ", "YX", "ZYZ", "ZXY".
struct VariationalLayer {
  std::string op;
  double theta = 0.0;
};
using VariationalLayerSchedule = std::vector<VariationalLayer>;

// The fixed schedule used for k_i = 0.36*pi packets.
const VariationalLayerSchedule& reference_layer_schedule();

void apply_variational_layers(MatrixProductState& state, const VariationalLayerSchedule& schedule,
                              int substeps, const TruncationPolicy& policy);

struct TwoPacketOptions {
  VariationalLayerSchedule layers = reference_layer_schedule();
  int substeps = 8;
  TruncationPolicy policy{.max_bond = 1 << 20, .cutoff = 1e-12};
};

struct PreparedScatteringState {
  MatrixProductState state;           // two dressed packets on the dressed background
  MatrixProductState reference;       // identically dressed packet-free background
  double norm_retained_left = 0.0;
  double norm_retained_right = 0.0;
};

PreparedScatteringState prepare_two_wavepacket_initial_state(const IsingCouplings& c,
                                                             const WavepacketSpec& left,
                                                             const WavepacketSpec& right,
                                                             const TwoPacketOptions& opts = {});

}  // namespace scatlab
