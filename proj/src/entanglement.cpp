#include "scatlab/entanglement.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scatlab {

double entanglement_entropy(const SchmidtSpectrum& spectrum) {
  double s = 0.0;
  for (double l : spectrum.values) {
    if (l < 0.0) {
      throw std::invalid_argument("entanglement_entropy: negative Schmidt value");
    }
    if (l > 0.0) s -= l * std::log(l);
  }
  return s;
}

double antiflatness(const SchmidtSpectrum& spectrum, int chi) {
  int nonzero = 0;
  for (double l : spectrum.values) {
    if (l < 0.0) {
      throw std::invalid_argument("antiflatness: negative Schmidt value");
    }
    if (l > 0.0) ++nonzero;
  }
  if (chi < nonzero) {
    throw std::invalid_argument("antiflatness: chi smaller than the nonzero spectrum count");
  }
  double s1 = 0.0, s2 = 0.0;
  for (double l : spectrum.values) {
    s1 += l;
    s2 += l * l;
  }
  const double inv = 1.0 / chi;
  return inv * s2 - (inv * s1) * (inv * s1);
}

SeparationWindows kinematic_windows(int lattice_length, int collision_site, double v_fast,
                                    double v_slow, double elapsed_time) {
  if (v_fast <= v_slow || v_slow < 0.0) {
    throw std::invalid_argument("kinematic_windows: need v_fast > v_slow >= 0");
  }
  const double xc = collision_site;
  const double xfl = xc - v_fast * elapsed_time;
  const double xsl = xc - v_slow * elapsed_time;
  const double xsr = xc + v_slow * elapsed_time;
  const double xfr = xc + v_fast * elapsed_time;
  auto clampi = [&](double x) {
    return std::min(lattice_length, std::max(0, static_cast<int>(std::lround(x))));
  };
  const int m1 = clampi(0.5 * (xfl + xsl));
  const int mc = clampi(xc);
  const int m4 = clampi(0.5 * (xsr + xfr));
  SeparationWindows w;
  w.fast_left = {0, m1};
  w.slow_left = {m1, mc};
  w.slow_right = {mc, m4};
  w.fast_right = {m4, lattice_length};
  return w;
}

namespace {

double window_mass(const std::vector<double>& e, std::pair<int, int> win) {
  double m = 0.0;
  const int a = std::max(0, win.first);
  const int b = std::min<int>(static_cast<int>(e.size()), win.second);
  for (int n = a; n < b; ++n) m += std::abs(e[n]);
  return m;
}

struct WindowFractions {
  double fl = 0.0, sl = 0.0, sr = 0.0, fr = 0.0;
  double total = 0.0;
};

WindowFractions fractions(const std::vector<double>& e, const SeparationWindows& w) {
  WindowFractions f;
  for (double v : e) f.total += std::abs(v);
  if (f.total <= 0.0) return f;
  f.fl = window_mass(e, w.fast_left) / f.total;
  f.sl = window_mass(e, w.slow_left) / f.total;
  f.sr = window_mass(e, w.slow_right) / f.total;
  f.fr = window_mass(e, w.fast_right) / f.total;
  return f;
}

}  // namespace

std::pair<int, int> choose_cut_sites(const std::vector<double>& e,
                                     const SeparationWindows& w) {
  auto peak_in = [&](std::pair<int, int> win) {
    int best = std::max(0, win.first);
    double bv = -1.0;
    for (int n = std::max(0, win.first); n < std::min<int>(e.size(), win.second); ++n) {
      if (std::abs(e[n]) > bv) {
        bv = std::abs(e[n]);
        best = n;
      }
    }
    return best;
  };
  auto valley = [&](int a, int b) {
    int best = a;
    double bv = std::numeric_limits<double>::infinity();
    for (int n = a; n <= b && n < static_cast<int>(e.size()); ++n) {
      if (std::abs(e[n]) < bv) {
        bv = std::abs(e[n]);
        best = n;
      }
    }
    return best;
  };
  const int pfl = peak_in(w.fast_left);
  const int psl = peak_in(w.slow_left);
  const int psr = peak_in(w.slow_right);
  const int pfr = peak_in(w.fast_right);
  if (pfl >= psl || psr >= pfr) {
    throw std::runtime_error("choose_cut_sites: lumps are not ordered; packets not separated yet");
  }
  return {valley(pfl + 1, psl - 1), valley(psr + 1, pfr - 1)};
}

ChannelReport isolate_channels(MatrixProductState& final_state, int n_l, int n_r,
                               const SeparationWindows& windows,
                               const std::vector<double>& vacuum_site_energies,
                               const IsingCouplings& couplings, const ChannelOptions& opts) {
  const int L = final_state.length();
  if (n_l < 0 || n_r <= n_l || n_r >= L - 1) {
    throw std::invalid_argument("isolate_channels: need 0 <= n_l < n_r < L-1");
  }
  ChannelReport report;
  report.cut_positions = {n_l, n_r};
  const double total = final_state.norm_sq();
  const double threshold = opts.significance * total;

  report.spectrum_left = final_state.schmidt_spectrum(n_l);
  std::vector<int> significant;
  for (int i = 0; i < report.spectrum_left.chi; ++i) {
    if (report.spectrum_left.values[i] >= threshold) significant.push_back(i);
  }
  if (significant.empty()) {
    report.warnings.push_back("no significant Schmidt component at the left cut");
    significant.push_back(0);
  }

  // split the significant components into fast-left-occupied and vacuum-left
  std::vector<int> fast_group, slow_group;
  for (int i : significant) {
    auto comp = final_state.project_schmidt_component(n_l, {i});
    comp.compress(opts.component_compression);
    auto e = energy_density(comp, vacuum_site_energies, couplings);
    const auto f = fractions(e, windows);
    if (f.total <= 1e-12) {
      report.warnings.push_back("left-cut component " + std::to_string(i) +
                                " carries no excitation energy");
      slow_group.push_back(i);
    } else if (f.fl > opts.vacuum_side_max) {
      fast_group.push_back(i);
    } else {
      slow_group.push_back(i);
    }
  }
  if (fast_group.empty()) {
    report.warnings.push_back("no fast-left component found at the left cut");
  }
  if (slow_group.empty()) {
    report.warnings.push_back(
        "no slow-left component at the left cut (below-threshold or unseparated state)");
  }

  auto add_channel = [&](const std::string& label, double prob, MatrixProductState&& st,
                         std::pair<int, int> idx) {
    ExclusiveChannel ch;
    ch.label = label;
    ch.probability = prob;
    ch.energy_density = energy_density(st, vacuum_site_energies, couplings);
    ch.state = std::move(st);
    ch.schmidt_indices = idx;
    report.channels.push_back(std::move(ch));
  };

  // second cut on the fast-left remainder: separates 11 from 12
  if (!fast_group.empty()) {
    auto f02 = final_state.project_schmidt_component(n_l, fast_group);
    f02.compress(opts.component_compression);
    report.spectrum_right_kept = f02.schmidt_spectrum(n_r);
    for (int j = 0; j < report.spectrum_right_kept.chi; ++j) {
      const double lam = report.spectrum_right_kept.values[j];
      if (lam < threshold) break;
      auto comp = f02.project_schmidt_component(n_r, {j});
      comp.compress(opts.component_compression);
      auto e = energy_density(comp, vacuum_site_energies, couplings);
      const auto f = fractions(e, windows);
      std::string label = "higher-order";
      if (f.fr > opts.vacuum_side_max && f.fl + f.fr >= opts.min_capture) {
        label = "11";
      } else if (f.fr <= opts.vacuum_side_max && f.fl + f.sr >= opts.min_capture) {
        label = "12";
      }
      add_channel(label, lam, std::move(comp), {fast_group.front(), j});
    }
  }

  // the slow-left component: 21 plus higher-order admixture
  if (!slow_group.empty()) {
    auto f1 = final_state.project_schmidt_component(n_l, slow_group);
    f1.compress(opts.component_compression);
    report.spectrum_right_slow = f1.schmidt_spectrum(n_r);
    for (int j = 0; j < report.spectrum_right_slow.chi; ++j) {
      const double lam = report.spectrum_right_slow.values[j];
      if (lam < threshold) break;
      auto comp = f1.project_schmidt_component(n_r, {j});
      comp.compress(opts.component_compression);
      auto e = energy_density(comp, vacuum_site_energies, couplings);
      const auto f = fractions(e, windows);
      std::string label = "higher-order";
      if (f.fr > opts.vacuum_side_max && f.sl + f.fr >= opts.min_capture) {
        label = "21";
      }
      add_channel(label, lam, std::move(comp), {slow_group.front(), j});
    }
  }

  double accounted = 0.0;
  for (const auto& ch : report.channels) {
    accounted += ch.probability;
    if (ch.label == "11") report.p_elastic += ch.probability;
    if (ch.label == "12" || ch.label == "21") report.p_inelastic += ch.probability;
  }
  report.residual_probability = total - accounted;

  int n11 = 0, n12 = 0, n21 = 0;
  for (const auto& ch : report.channels) {
    n11 += ch.label == "11";
    n12 += ch.label == "12";
    n21 += ch.label == "21";
  }
  if (n11 != 1) {
    report.warnings.push_back("expected exactly one 11 component, found " + std::to_string(n11));
  }
  if (n12 > 1 || n21 > 1) {
    report.warnings.push_back("multiple components labeled for one inelastic branch");
  }
  return report;
}

SchmidtSpectrum vacuum_spectrum_baseline(MatrixProductState& vacuum, int cut) {
  return vacuum.schmidt_spectrum(cut);
}

}  // namespace scatlab
