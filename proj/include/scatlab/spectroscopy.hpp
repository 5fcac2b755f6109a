#pragma once

#include <string>
#include <vector>

#include "scatlab/entanglement.hpp"
#include "scatlab/ising.hpp"

namespace scatlab {

// Monotone cubic (Fritsch-Carlson) interpolant with optional pinned endpoint
// derivatives; used for dispersion curves and their k-derivatives.
class PchipInterpolant {
 public:
  PchipInterpolant() = default;
  PchipInterpolant(std::vector<double> x, std::vector<double> y, bool pin_endpoint_derivs = false);

  double value(double x) const;
  double derivative(double x) const;
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

 private:
  std::vector<double> x_, y_, d_;
  int interval(double x) const;
};

struct DispersionTable {
  std::vector<double> k;   // ascending grid on [0, pi]; parity extends to -k
  std::vector<double> e1;  // energies above the vacuum
  std::vector<double> e2;  // empty when no stable second particle exists
  std::vector<double> v1;
  std::vector<double> v2;
  double m1 = 0.0;
  double m2 = 0.0;            // NaN when absent
  double k_thr = 0.0;         // NaN when absent

  struct RawBand {
    int L = 0;
    std::vector<double> k, e1, e2;  // e2 entries NaN where unidentified
  };
  struct Source {
    std::vector<int> L_list;
    int bands = 2;
    bool twisted_reference = false;
    std::string method;
    std::vector<RawBand> raw;
  };
  Source source;
};

struct EdOptions {
  int bands = 2;
  int sparse_limit = 18;       // largest allowed ring
  int k_grid_points = 201;     // uniform part of the final grid
  double continuum_margin = 0.05;
  int threads = 1;
};

// Translation-sector exact diagonalization on periodic rings, extrapolated in
// L (exponential tail through the three largest sizes) and interpolated onto
// the final grid. With g_z == 0 the one-particle band is referenced to the
// bond-twisted ring's ground state, which removes the fermion-sector constant.
DispersionTable dispersion_from_ed(const IsingCouplings& c, const std::vector<int>& L_list,
                                   const EdOptions& opts = {});

// Sector eigenvalues for one ring; exposed for oracle tests.
std::vector<double> sector_eigenvalues(int L, double g_x, double g_z, int momentum_index,
                                       int nev);
double twisted_ground_energy(int L, double g_x, double g_z);

double group_velocity(const DispersionTable& table, int species, double k);
double dispersion_energy(const DispersionTable& table, int species, double k);

// All momenta on the signed grid with v_species(k) = v; empty when out of range.
std::vector<double> invert_velocity(const DispersionTable& table, int species, double v);

struct EnergySnapshot {
  double t = 0.0;
  std::vector<double> e;
};

// Slope of the energy-weighted lump position within the window, fitted over
// snapshots with t >= t0.
double track_peak_velocity(const std::vector<EnergySnapshot>& series, std::pair<int, int> window,
                           double t0);

// Collision-time calibration against a reference of known velocity: the lump
// centroid x(t) should obey x = x_c + v_ref (t - t0).
double calibrate_t0(const std::vector<EnergySnapshot>& series, std::pair<int, int> window,
                    double v_ref, double collision_site);

double wavepacket_energy(const std::vector<double>& energy_density, std::pair<int, int> window);

struct ClassificationOptions {
  double max_relative_error = 0.15;
};

struct ClassificationRecord {
  enum class Status { ok, rejected, unclassifiable };
  std::string excitation_label;
  double measured_velocity = 0.0;
  std::vector<double> k1_candidates, k2_candidates;
  std::vector<double> e1_candidates, e2_candidates;
  double e_wp = 0.0;
  int chosen_species = 0;  // 0 = unclassified
  double chosen_k = 0.0;
  double chosen_e = 0.0;
  double relative_error = 0.0;
  Status status = Status::unclassifiable;
};

ClassificationRecord classify_excitation(double velocity, double e_wp,
                                         const DispersionTable& table,
                                         const ClassificationOptions& opts = {});

// Lump measurements on exclusive states at the final time: centroid-derived
// velocity anchored at (t0, collision_site) and the windowed energy.
struct ExcitationMeasurement {
  std::string channel;
  std::string side;  // "left" or "right"
  double velocity = 0.0;
  double e_wp = 0.0;
  std::pair<int, int> window{0, 0};
};

std::vector<ExcitationMeasurement> measure_excitations(const ChannelReport& report,
                                                       double t_final, double t0,
                                                       int collision_site,
                                                       double support_fraction = 0.1);

// Squared overlaps of the windowed state with single-flip plane waves,
// normalized over the supplied grid.
std::vector<double> momentum_overlap(const MatrixProductState& state, std::pair<int, int> window,
                                     const std::vector<double>& k_grid);

// Cyclic-orbit Fourier unitary on an n-site window (dimension 2^n); maps the
// flip at position n to the plane wave of momentum 2*pi*n/N within each
// Hamming-weight orbit.
Matrix window_momentum_transform(int n_sites);

}  // namespace scatlab
