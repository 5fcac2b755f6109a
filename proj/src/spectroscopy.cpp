#include "scatlab/spectroscopy.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>

#include "scatlab/lanczos.hpp"

namespace scatlab {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// monotone cubic interpolation
// ---------------------------------------------------------------------------

PchipInterpolant::PchipInterpolant(std::vector<double> x, std::vector<double> y,
                                   bool pin_endpoint_derivs)
    : x_(std::move(x)), y_(std::move(y)) {
  const int n = static_cast<int>(x_.size());
  if (n < 2 || y_.size() != x_.size()) {
    throw std::invalid_argument("PchipInterpolant: need at least two points");
  }
  for (int i = 1; i < n; ++i) {
    if (!(x_[i] > x_[i - 1])) {
      throw std::invalid_argument("PchipInterpolant: x must be strictly increasing");
    }
  }
  std::vector<double> h(n - 1), delta(n - 1);
  for (int i = 0; i < n - 1; ++i) {
    h[i] = x_[i + 1] - x_[i];
    delta[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  d_.assign(n, 0.0);
  for (int i = 1; i < n - 1; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) {
      d_[i] = 0.0;
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  auto edge = [&](double h0, double h1, double d0, double d1) {
    double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0.0) {
      d = 0.0;
    } else if (d0 * d1 <= 0.0 && std::abs(d) > 3.0 * std::abs(d0)) {
      d = 3.0 * d0;
    }
    return d;
  };
  d_[0] = (n == 2) ? delta[0] : edge(h[0], h[1], delta[0], delta[1]);
  d_[n - 1] = (n == 2) ? delta[n - 2] : edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  if (pin_endpoint_derivs) {
    d_[0] = 0.0;
    d_[n - 1] = 0.0;
  }
}

int PchipInterpolant::interval(double x) const {
  if (x < x_.front() - 1e-12 || x > x_.back() + 1e-12) {
    throw std::out_of_range("PchipInterpolant: query outside the grid");
  }
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  int i = static_cast<int>(it - x_.begin()) - 1;
  return std::clamp(i, 0, static_cast<int>(x_.size()) - 2);
}

double PchipInterpolant::value(double x) const {
  const int i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1;
  const double h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2;
  const double h11 = t3 - t2;
  return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
}

double PchipInterpolant::derivative(double x) const {
  const int i = interval(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t;
  const double dh00 = (6 * t2 - 6 * t) / h;
  const double dh10 = 3 * t2 - 4 * t + 1;
  const double dh01 = (-6 * t2 + 6 * t) / h;
  const double dh11 = 3 * t2 - 2 * t;
  return dh00 * y_[i] + dh10 * d_[i] + dh01 * y_[i + 1] + dh11 * d_[i + 1];
}

// ---------------------------------------------------------------------------
// translation-sector exact diagonalization
// ---------------------------------------------------------------------------

namespace {

struct RingBasis {
  int L = 0;
  std::vector<uint32_t> reps;     // orbit representatives, ascending
  std::vector<int> periods;       // orbit period per representative
};

uint32_t rotate_ring(uint32_t s, int L) {
  return ((s << 1) | (s >> (L - 1))) & ((L == 32) ? 0xffffffffu : ((1u << L) - 1u));
}

RingBasis build_ring_basis(int L) {
  RingBasis rb;
  rb.L = L;
  const uint32_t dim = 1u << L;
  std::vector<bool> seen(dim, false);
  for (uint32_t s = 0; s < dim; ++s) {
    if (seen[s]) continue;
    uint32_t t = s;
    int p = 0;
    uint32_t rep = s;
    do {
      seen[t] = true;
      rep = std::min(rep, t);
      t = rotate_ring(t, L);
      ++p;
    } while (t != s);
    rb.reps.push_back(rep);
    rb.periods.push_back(p);
  }
  // reps were discovered in ascending order of their smallest member
  return rb;
}

std::pair<uint32_t, int> representative_of(uint32_t s, int L) {
  uint32_t best = s, t = s;
  int shift = 0;
  for (int l = 1; l <= L; ++l) {
    t = rotate_ring(t, L);
    if (t < best) {
      best = t;
      shift = l % L;
    }
  }
  return {best, shift};
}

double ring_diag_energy(uint32_t s, int L, double g_z) {
  double e = 0.0;
  for (int n = 0; n < L; ++n) {
    const int zn = 1 - 2 * static_cast<int>((s >> n) & 1u);
    const int znn = 1 - 2 * static_cast<int>((s >> ((n + 1) % L)) & 1u);
    e += -static_cast<double>(zn * znn) - g_z * zn;
  }
  return e;
}

struct SectorMatrix {
  Eigen::Index dim = 0;
  std::vector<double> diag;
  std::vector<std::vector<std::pair<int, cplx>>> offdiag;  // per column

  void matvec(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) const {
    out.setZero(dim);
    for (Eigen::Index i = 0; i < dim; ++i) out[i] = diag[i] * in[i];
    for (Eigen::Index col = 0; col < dim; ++col) {
      const cplx v = in[col];
      if (v == cplx(0.0)) continue;
      for (const auto& [row, amp] : offdiag[col]) out[row] += amp * v;
    }
  }
};

SectorMatrix build_sector(const RingBasis& rb, double g_x, double g_z, int m) {
  const int L = rb.L;
  std::vector<int> sector_index;       // index into sector basis, -1 if absent
  std::vector<uint32_t> basis;
  std::vector<int> period;
  sector_index.assign(rb.reps.size(), -1);
  for (size_t i = 0; i < rb.reps.size(); ++i) {
    if ((static_cast<long>(m) * rb.periods[i]) % L == 0) {
      sector_index[i] = static_cast<int>(basis.size());
      basis.push_back(rb.reps[i]);
      period.push_back(rb.periods[i]);
    }
  }
  auto rep_slot = [&](uint32_t rep) {
    const auto it = std::lower_bound(rb.reps.begin(), rb.reps.end(), rep);
    return static_cast<int>(it - rb.reps.begin());
  };

  const double k = 2.0 * M_PI * m / L;
  SectorMatrix sm;
  sm.dim = static_cast<Eigen::Index>(basis.size());
  sm.diag.resize(sm.dim);
  sm.offdiag.assign(sm.dim, {});
  for (Eigen::Index i = 0; i < sm.dim; ++i) {
    const uint32_t r = basis[i];
    sm.diag[i] = ring_diag_energy(r, L, g_z);
    for (int n = 0; n < L; ++n) {
      const uint32_t flipped = r ^ (1u << n);
      const auto [rep2, shift] = representative_of(flipped, L);
      const int slot = rep_slot(rep2);
      const int j = sector_index[slot];
      if (j < 0) continue;
      const double norm_factor =
          std::sqrt(static_cast<double>(period[i]) / static_cast<double>(period[j]));
      const cplx amp = -g_x * std::exp(cplx(0.0, -k * shift)) * norm_factor;
      sm.offdiag[i].push_back({j, amp});  // H[j, i], bucketed by column i
    }
  }
  return sm;
}

}  // namespace

std::vector<double> sector_eigenvalues(int L, double g_x, double g_z, int momentum_index,
                                       int nev) {
  if (L < 2 || L > 24) {
    throw std::invalid_argument("sector_eigenvalues: ring size out of range");
  }
  const RingBasis rb = build_ring_basis(L);
  const SectorMatrix sm = build_sector(rb, g_x, g_z, ((momentum_index % L) + L) % L);
  LanczosOptions lo;
  lo.max_iter = 500;
  lo.tol = 1e-12;
  lo.dense_cutoff = 600;
  return lanczos_lowest(
      sm.dim, [&](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) { sm.matvec(in, out); },
      nev, lo);
}

double twisted_ground_energy(int L, double g_x, double g_z) {
  if (L < 2 || L > 24) {
    throw std::invalid_argument("twisted_ground_energy: ring size out of range");
  }
  const Eigen::Index dim = Eigen::Index(1) << L;
  std::vector<double> diag(dim);
  for (Eigen::Index s = 0; s < dim; ++s) {
    double e = 0.0;
    for (int n = 0; n < L; ++n) {
      const int zn = 1 - 2 * static_cast<int>((s >> n) & 1);
      const int znn = 1 - 2 * static_cast<int>((s >> ((n + 1) % L)) & 1);
      e += (n == L - 1 ? 1.0 : -1.0) * zn * znn - g_z * zn;
    }
    diag[s] = e;
  }
  LanczosOptions lo;
  lo.max_iter = 500;
  lo.tol = 1e-12;
  lo.dense_cutoff = 256;
  return lanczos_ground(
      dim,
      [&](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
        out.resize(dim);
        for (Eigen::Index s = 0; s < dim; ++s) out[s] = diag[s] * in[s];
        for (Eigen::Index s = 0; s < dim; ++s) {
          const cplx v = in[s];
          if (v == cplx(0.0)) continue;
          for (int n = 0; n < L; ++n) out[s ^ (Eigen::Index(1) << n)] += -g_x * v;
        }
      },
      nullptr, lo);
}

// ---------------------------------------------------------------------------
// dispersion assembly
// ---------------------------------------------------------------------------

namespace {

struct RingBands {
  std::vector<double> k;   // ascending, m = 0..L/2
  std::vector<double> e1;
  std::vector<double> e2;  // NaN where no state below the continuum estimate
};

RingBands ring_bands(int L, const IsingCouplings& c, const EdOptions& opts) {
  const int sectors = L / 2 + 1;
  const int nev = opts.bands + 3;
  std::vector<std::vector<double>> levels(sectors);

  auto solve_range = [&](int begin, int end) {
    for (int m = begin; m < end; ++m) {
      levels[m] = sector_eigenvalues(L, c.g_x, c.g_z, m, nev);
    }
  };
  const int threads = std::max(1, std::min(opts.threads, sectors));
  if (threads == 1) {
    solve_range(0, sectors);
  } else {
    std::vector<std::future<void>> jobs;
    const int chunk = (sectors + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int begin = t * chunk;
      const int end = std::min(sectors, begin + chunk);
      if (begin < end) jobs.push_back(std::async(std::launch::async, solve_range, begin, end));
    }
    for (auto& j : jobs) j.get();
  }

  double e0 = levels[0][0];
  for (const auto& lv : levels) e0 = std::min(e0, lv[0]);
  const bool twisted = (c.g_z == 0.0);
  const double reference = twisted ? twisted_ground_energy(L, c.g_x, c.g_z) : e0;

  RingBands rb;
  rb.k.resize(sectors);
  rb.e1.resize(sectors);
  rb.e2.assign(sectors, kNaN);
  for (int m = 0; m < sectors; ++m) {
    rb.k[m] = 2.0 * M_PI * m / L;
    rb.e1[m] = (m == 0 ? levels[0][1] : levels[m][0]) - reference;
  }
  if (twisted) return rb;  // free theory: no stable second particle

  // two-particle continuum estimate from the same ring's first band
  auto band1_at = [&](int m) {
    const int mm = std::abs(((m % L) + L) % L);
    return rb.e1[std::min(mm, L - mm)];
  };
  for (int m = 0; m < sectors; ++m) {
    double continuum = std::numeric_limits<double>::infinity();
    for (int q = 0; q < L; ++q) {
      continuum = std::min(continuum, band1_at(q) + band1_at(m - q));
    }
    const int first = (m == 0) ? 2 : 1;
    for (size_t idx = first; idx < levels[m].size(); ++idx) {
      const double cand = levels[m][idx] - e0;
      if (cand <= rb.e1[m] + 1e-10) continue;
      if (cand < continuum - opts.continuum_margin) {
        rb.e2[m] = cand;
      }
      break;  // only the lowest candidate is the single-particle state
    }
  }
  return rb;
}

// exponential-tail extrapolation through the three largest sizes
double extrapolate_tail(const std::vector<double>& values) {
  std::vector<double> v;
  for (double x : values) {
    if (std::isfinite(x)) v.push_back(x);
  }
  if (v.empty()) return kNaN;
  if (v.size() < 3) return v.back();
  const double y1 = v[v.size() - 3], y2 = v[v.size() - 2], y3 = v[v.size() - 1];
  const double d1 = y2 - y1, d2 = y3 - y2;
  if (d1 == 0.0 || d1 * d2 <= 0.0) return y3;
  const double r = d2 / d1;
  if (r <= 0.0 || r >= 1.0) return y3;
  return y3 + d2 * r / (1.0 - r);
}

}  // namespace

DispersionTable dispersion_from_ed(const IsingCouplings& c, const std::vector<int>& L_list,
                                   const EdOptions& opts) {
  if (L_list.empty()) {
    throw std::invalid_argument("dispersion_from_ed: empty L list");
  }
  std::vector<int> ls = L_list;
  std::sort(ls.begin(), ls.end());
  for (int L : ls) {
    if (L < 4 || L > opts.sparse_limit) {
      throw std::invalid_argument("dispersion_from_ed: ring size " + std::to_string(L) +
                                  " outside (4, sparse_limit)");
    }
  }

  DispersionTable table;
  table.source.L_list = ls;
  table.source.bands = opts.bands;
  table.source.twisted_reference = (c.g_z == 0.0);
  table.source.method = "translation-sector ED, exponential tail over the three largest L";

  std::vector<RingBands> bands;
  for (int L : ls) {
    auto rb = ring_bands(L, c, opts);
    DispersionTable::RawBand raw;
    raw.L = L;
    raw.k = rb.k;
    raw.e1 = rb.e1;
    raw.e2 = rb.e2;
    table.source.raw.push_back(std::move(raw));
    bands.push_back(std::move(rb));
  }

  // final grid: uniform points plus every commensurate momentum
  std::vector<double> grid;
  for (int i = 0; i < opts.k_grid_points; ++i) {
    grid.push_back(M_PI * i / (opts.k_grid_points - 1));
  }
  for (const auto& rb : bands) {
    for (double k : rb.k) grid.push_back(k);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             grid.end());

  std::vector<PchipInterpolant> interp1;
  std::vector<PchipInterpolant> interp2;
  std::vector<bool> has2;
  for (const auto& rb : bands) {
    interp1.emplace_back(rb.k, rb.e1);
    std::vector<double> k2, e2;
    for (size_t i = 0; i < rb.k.size(); ++i) {
      if (std::isfinite(rb.e2[i])) {
        k2.push_back(rb.k[i]);
        e2.push_back(rb.e2[i]);
      }
    }
    has2.push_back(k2.size() >= 2);
    if (k2.size() >= 2) {
      interp2.emplace_back(std::move(k2), std::move(e2));
    } else {
      interp2.emplace_back();
    }
  }

  table.k = grid;
  table.e1.resize(grid.size());
  bool any2 = std::any_of(has2.begin(), has2.end(), [](bool b) { return b; });
  if (any2) table.e2.resize(grid.size());
  for (size_t gi = 0; gi < grid.size(); ++gi) {
    std::vector<double> v1s, v2s;
    for (size_t bi = 0; bi < bands.size(); ++bi) {
      v1s.push_back(interp1[bi].value(grid[gi]));
      if (has2[bi] && grid[gi] >= interp2[bi].x_min() - 1e-12 &&
          grid[gi] <= interp2[bi].x_max() + 1e-12) {
        v2s.push_back(interp2[bi].value(grid[gi]));
      }
    }
    table.e1[gi] = extrapolate_tail(v1s);
    if (any2) table.e2[gi] = v2s.empty() ? kNaN : extrapolate_tail(v2s);
  }

  // velocities from the final interpolants (parity pins dE/dk = 0 at 0 and pi)
  PchipInterpolant fe1(table.k, table.e1, true);
  table.v1.resize(grid.size());
  for (size_t gi = 0; gi < grid.size(); ++gi) table.v1[gi] = fe1.derivative(grid[gi]);
  if (any2) {
    std::vector<double> k2, e2;
    for (size_t gi = 0; gi < grid.size(); ++gi) {
      if (std::isfinite(table.e2[gi])) {
        k2.push_back(table.k[gi]);
        e2.push_back(table.e2[gi]);
      }
    }
    PchipInterpolant fe2(k2, e2, true);
    table.v2.assign(grid.size(), kNaN);
    for (size_t gi = 0; gi < grid.size(); ++gi) {
      if (std::isfinite(table.e2[gi])) table.v2[gi] = fe2.derivative(table.k[gi]);
    }
    table.m2 = dispersion_energy(table, 2, 0.0);
  } else {
    table.m2 = kNaN;
  }
  table.m1 = table.e1.front();

  // threshold: 2 E1(k_thr) = m1 + m2
  table.k_thr = kNaN;
  if (std::isfinite(table.m2)) {
    const double target = table.m1 + table.m2;
    double lo = 0.0, hi = M_PI;
    if (2.0 * table.e1.front() < target && 2.0 * table.e1.back() > target) {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (2.0 * fe1.value(mid) < target ? lo : hi) = mid;
      }
      table.k_thr = 0.5 * (lo + hi);
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// velocity handling and classification
// ---------------------------------------------------------------------------

namespace {

PchipInterpolant species_interp(const DispersionTable& t, int species) {
  if (species == 1) return PchipInterpolant(t.k, t.e1, true);
  if (species == 2) {
    std::vector<double> k2, e2;
    for (size_t i = 0; i < t.k.size(); ++i) {
      if (i < t.e2.size() && std::isfinite(t.e2[i])) {
        k2.push_back(t.k[i]);
        e2.push_back(t.e2[i]);
      }
    }
    if (k2.size() < 2) {
      throw std::runtime_error("dispersion table has no second-particle band");
    }
    return PchipInterpolant(k2, e2, true);
  }
  throw std::invalid_argument("species must be 1 or 2");
}

}  // namespace

double dispersion_energy(const DispersionTable& table, int species, double k) {
  return species_interp(table, species).value(std::abs(k));
}

double group_velocity(const DispersionTable& table, int species, double k) {
  const auto f = species_interp(table, species);
  const double v = f.derivative(std::abs(k));
  return k < 0.0 ? -v : v;
}

std::vector<double> invert_velocity(const DispersionTable& table, int species, double v) {
  const auto f = species_interp(table, species);
  const double target = std::abs(v);
  const int samples = 2000;
  const double a = f.x_min(), b = f.x_max();
  std::vector<double> roots;
  double prev_k = a, prev_f = f.derivative(a) - target;
  for (int i = 1; i <= samples; ++i) {
    const double k = a + (b - a) * i / samples;
    const double fk = f.derivative(k) - target;
    if (prev_f == 0.0) {
      roots.push_back(prev_k);
    } else if (prev_f * fk < 0.0) {
      double lo = prev_k, hi = k, flo = prev_f;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f.derivative(mid) - target;
        if (flo * fm <= 0.0) {
          hi = mid;
        } else {
          lo = mid;
          flo = fm;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    prev_k = k;
    prev_f = fk;
  }
  std::vector<double> out;
  for (double r : roots) {
    if (!out.empty() && std::abs(out.back() - r) < 1e-6) continue;
    out.push_back(r);
  }
  if (v < 0.0) {
    for (double& r : out) r = -r;
  }
  return out;
}

double track_peak_velocity(const std::vector<EnergySnapshot>& series, std::pair<int, int> window,
                           double t0) {
  std::vector<double> ts, xs;
  for (const auto& snap : series) {
    if (snap.t < t0) continue;
    double w = 0.0, wx = 0.0, peak = -1.0;
    int peak_n = window.first;
    for (int n = std::max(0, window.first);
         n < std::min<int>(static_cast<int>(snap.e.size()), window.second); ++n) {
      const double v = std::max(0.0, snap.e[n]);
      w += v;
      wx += v * n;
      if (v > peak) {
        peak = v;
        peak_n = n;
      }
    }
    if (w <= 0.0) continue;
    if (peak_n <= window.first || peak_n >= window.second - 1) {
      throw std::runtime_error("track_peak_velocity: peak left the window at t=" +
                               std::to_string(snap.t));
    }
    ts.push_back(snap.t);
    xs.push_back(wx / w);
  }
  if (ts.size() < 2) {
    throw std::invalid_argument("track_peak_velocity: need at least two usable snapshots");
  }
  double mt = 0.0, mx = 0.0;
  for (size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    mx += xs[i];
  }
  mt /= ts.size();
  mx /= xs.size();
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < ts.size(); ++i) {
    num += (ts[i] - mt) * (xs[i] - mx);
    den += (ts[i] - mt) * (ts[i] - mt);
  }
  if (den == 0.0) {
    throw std::invalid_argument("track_peak_velocity: degenerate time samples");
  }
  return num / den;
}

double calibrate_t0(const std::vector<EnergySnapshot>& series, std::pair<int, int> window,
                    double v_ref, double collision_site) {
  if (v_ref == 0.0) {
    throw std::invalid_argument("calibrate_t0: reference velocity must be nonzero");
  }
  double acc = 0.0;
  int count = 0;
  for (const auto& snap : series) {
    double w = 0.0, wx = 0.0;
    for (int n = std::max(0, window.first);
         n < std::min<int>(static_cast<int>(snap.e.size()), window.second); ++n) {
      const double v = std::max(0.0, snap.e[n]);
      w += v;
      wx += v * n;
    }
    if (w <= 1e-12) continue;
    acc += snap.t - (wx / w - collision_site) / v_ref;
    ++count;
  }
  if (count == 0) {
    throw std::invalid_argument("calibrate_t0: no usable snapshots in the window");
  }
  return acc / count;
}

double wavepacket_energy(const std::vector<double>& energy_density, std::pair<int, int> window) {
  if (window.first < 0 || window.second > static_cast<int>(energy_density.size()) ||
      window.first >= window.second) {
    throw std::invalid_argument("wavepacket_energy: window outside the lattice");
  }
  double e = 0.0;
  for (int n = window.first; n < window.second; ++n) e += energy_density[n];
  return e;
}

ClassificationRecord classify_excitation(double velocity, double e_wp,
                                         const DispersionTable& table,
                                         const ClassificationOptions& opts) {
  ClassificationRecord rec;
  rec.measured_velocity = velocity;
  rec.e_wp = e_wp;
  rec.k1_candidates = invert_velocity(table, 1, velocity);
  for (double k : rec.k1_candidates) {
    rec.e1_candidates.push_back(dispersion_energy(table, 1, k));
  }
  if (!table.e2.empty()) {
    rec.k2_candidates = invert_velocity(table, 2, velocity);
    for (double k : rec.k2_candidates) {
      rec.e2_candidates.push_back(dispersion_energy(table, 2, k));
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < rec.e1_candidates.size(); ++i) {
    const double err = std::abs(e_wp - rec.e1_candidates[i]);
    if (err < best) {
      best = err;
      rec.chosen_species = 1;
      rec.chosen_k = rec.k1_candidates[i];
      rec.chosen_e = rec.e1_candidates[i];
    }
  }
  for (size_t i = 0; i < rec.e2_candidates.size(); ++i) {
    const double err = std::abs(e_wp - rec.e2_candidates[i]);
    if (err < best) {
      best = err;
      rec.chosen_species = 2;
      rec.chosen_k = rec.k2_candidates[i];
      rec.chosen_e = rec.e2_candidates[i];
    }
  }
  if (rec.chosen_species == 0) {
    rec.status = ClassificationRecord::Status::unclassifiable;
    return rec;
  }
  rec.relative_error = std::abs(e_wp - rec.chosen_e) / std::max(1e-12, std::abs(e_wp));
  rec.status = rec.relative_error <= opts.max_relative_error
                   ? ClassificationRecord::Status::ok
                   : ClassificationRecord::Status::rejected;
  return rec;
}

std::vector<ExcitationMeasurement> measure_excitations(const ChannelReport& report,
                                                       double t_final, double t0,
                                                       int collision_site,
                                                       double support_fraction) {
  if (t_final <= t0) {
    throw std::invalid_argument("measure_excitations: t_final must exceed t0");
  }
  std::vector<ExcitationMeasurement> out;
  for (const auto& ch : report.channels) {
    if (ch.label == "higher-order") continue;
    const auto& e = ch.energy_density;
    const int L = static_cast<int>(e.size());
    for (const auto side : {std::string("left"), std::string("right")}) {
      const int a = side == "left" ? 0 : collision_site;
      const int b = side == "left" ? collision_site : L;
      int peak = a;
      double pv = -1.0;
      for (int n = a; n < b; ++n) {
        if (std::abs(e[n]) > pv) {
          pv = std::abs(e[n]);
          peak = n;
        }
      }
      if (pv <= 0.0) continue;
      int lo = peak, hi = peak;
      const double floor = support_fraction * pv;
      while (lo > a && std::abs(e[lo - 1]) > floor) --lo;
      while (hi + 1 < b && std::abs(e[hi + 1]) > floor) ++hi;
      // pad a little so the gaussian tails count toward E_wp
      lo = std::max(a, lo - 3);
      hi = std::min(b - 1, hi + 3);

      double w = 0.0, wx = 0.0;
      for (int n = lo; n <= hi; ++n) {
        const double v = std::max(0.0, e[n]);
        w += v;
        wx += v * n;
      }
      if (w <= 0.0) continue;
      ExcitationMeasurement m;
      m.channel = ch.label;
      m.side = side;
      m.window = {lo, hi + 1};
      m.velocity = (wx / w - collision_site) / (t_final - t0);
      m.e_wp = wavepacket_energy(e, m.window);
      out.push_back(std::move(m));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// momentum overlaps
// ---------------------------------------------------------------------------

std::vector<double> momentum_overlap(const MatrixProductState& state, std::pair<int, int> window,
                                     const std::vector<double>& k_grid) {
  const int L = state.length();
  if (window.first < 0 || window.second > L || window.first >= window.second) {
    throw std::invalid_argument("momentum_overlap: window outside the lattice");
  }
  // single-flip overlap amplitudes a_n = <flip_n | psi> in one pass
  std::vector<Eigen::RowVectorXcd> pref(L + 1);
  pref[0] = Eigen::RowVectorXcd::Ones(1);
  for (int n = 0; n < L; ++n) pref[n + 1] = pref[n] * state.site(n).m[0];
  std::vector<Eigen::VectorXcd> suff(L + 1);
  suff[L] = Eigen::VectorXcd::Ones(1);
  for (int n = L - 1; n >= 0; --n) suff[n] = state.site(n).m[0] * suff[n + 1];
  const double scale = std::exp(state.log_norm_adjust());
  std::vector<cplx> amp(L);
  for (int n = 0; n < L; ++n) {
    amp[n] = (pref[n] * state.site(n).m[1] * suff[n + 1])(0) * scale;
  }

  const double invsq = 1.0 / std::sqrt(static_cast<double>(window.second - window.first));
  std::vector<double> weights(k_grid.size());
  double total = 0.0;
  for (size_t i = 0; i < k_grid.size(); ++i) {
    cplx overlap = 0.0;
    for (int n = window.first; n < window.second; ++n) {
      overlap += std::exp(cplx(0.0, -k_grid[i] * n)) * amp[n];
    }
    weights[i] = std::norm(overlap * invsq);
    total += weights[i];
  }
  if (total > 0.0) {
    for (double& w : weights) w /= total;
  }
  return weights;
}

Matrix window_momentum_transform(int n_sites) {
  if (n_sites < 1 || n_sites > 16) {
    throw std::invalid_argument("window_momentum_transform: window size out of range");
  }
  const int dim = 1 << n_sites;
  Matrix v = Matrix::Zero(dim, dim);
  auto rot = [&](uint32_t s) { return rotate_ring(s, n_sites); };
  for (uint32_t s = 0; s < static_cast<uint32_t>(dim); ++s) {
    // orbit representative and the shift from it to s
    uint32_t rep = s, t = s;
    for (int l = 1; l <= n_sites; ++l) {
      t = rot(t);
      rep = std::min(rep, t);
    }
    int period = 1;
    t = rot(rep);
    while (t != rep) {
      t = rot(t);
      ++period;
    }
    int shift = 0;
    t = rep;
    while (t != s) {
      t = rot(t);
      ++shift;
    }
    const double k = 2.0 * M_PI * shift / period;
    const double norm = 1.0 / std::sqrt(static_cast<double>(period));
    uint32_t target = rep;
    for (int j = 0; j < period; ++j) {
      v(target, s) += norm * std::exp(cplx(0.0, k * j));
      target = rot(target);
    }
  }
  return v;
}

}  // namespace scatlab
