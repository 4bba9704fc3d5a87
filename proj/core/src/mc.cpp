#include "nld/mc.hpp"

#include <algorithm>
#include <cmath>

#include "nld/errors.hpp"
#include "parallel.hpp"

namespace nld {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform01(uint64_t& s) {
  s = splitmix64(s);
  return double(s >> 11) * 0x1.0p-53;
}

Point random_direction(int dim, uint64_t& s) {
  if (dim == 1) return pt(uniform01(s) < 0.5 ? -1.0 : 1.0);
  double th = 2 * M_PI * uniform01(s);
  return {std::cos(th), std::sin(th)};
}

}  // namespace

JumpProcessSpec JumpProcessSpec::from_measure(const LevyMeasure& nu, double delta) {
  JumpProcessSpec sp;
  sp.dim_ = nu.dim();
  sp.delta_ = delta;

  LevyMeasure sim = nu.truncate_small_jumps(delta);
  if (!sim.finite_mass())
    throw SpecError("simulation requires finite jump rate: truncate small jumps first");

  double cum = 0;
  sim.for_each_component([&](const LevyMeasure& comp) {
    if (comp.kind() == LevyMeasure::Kind::Atomic) {
      for (const auto& p : comp.atom_pairs()) {
        sp.atom_points_.push_back(p.y);
        cum += p.weight;
        sp.atom_cum_.push_back(cum);
        sp.atom_points_.push_back(-p.y);
        cum += p.weight;
        sp.atom_cum_.push_back(cum);
      }
      sp.far_mass_ += comp.far_tail().mass;
      sp.far_radius_ = std::max(sp.far_radius_, comp.far_tail().radius);
      return;
    }
    const RadialKernel& K = comp.kernel();
    RadialSampler rs;
    rs.delta = K.inner_cut();
    rs.mass = K.mass_above(rs.delta);
    if (K.profile() == RadialKernel::Profile::FractionalStable) {
      rs.alpha = K.alpha();  // exact inversion: P(T > t) = (t/delta)^(-alpha)
    } else {
      // tabulated inverse CDF on log-spaced radii
      double tmax = K.support_radius();
      if (!std::isfinite(tmax)) {
        tmax = rs.delta > 0 ? rs.delta : 1.0;
        while (K.mass_above(tmax) > 1e-12 * rs.mass && tmax < 1e18) tmax *= 2;
      }
      double tmin = std::max(rs.delta, 1e-14);
      const int n = 4096;
      rs.radii.resize(n + 1);
      rs.cum.resize(n + 1);
      rs.cum[0] = 0;
      rs.radii[0] = tmin;
      for (int i = 1; i <= n; ++i) {
        rs.radii[i] = tmin * std::pow(tmax / tmin, double(i) / n);
        rs.cum[i] = rs.cum[i - 1] + K.mass_between(rs.radii[i - 1], rs.radii[i]);
      }
      rs.mass = rs.cum[n];
    }
    sp.radial_.push_back(std::move(rs));
  });

  double atoms_mass = sp.atom_cum_.empty() ? 0.0 : sp.atom_cum_.back();
  sp.part_cum_.push_back(atoms_mass);
  sp.part_cum_.push_back(atoms_mass + sp.far_mass_);
  double total = atoms_mass + sp.far_mass_;
  for (const auto& rs : sp.radial_) {
    total += rs.mass;
    sp.part_cum_.push_back(total);
  }
  sp.rate_ = total;
  if (!(sp.rate_ > 0)) throw SpecError("simulation requires a positive jump rate");
  return sp;
}

Point JumpProcessSpec::sample_jump(uint64_t& state) const {
  double u = uniform01(state) * rate_;
  if (u < part_cum_[0]) {
    // atom: binary search in the cumulative weights
    auto it = std::lower_bound(atom_cum_.begin(), atom_cum_.end(), u);
    std::size_t k = std::min<std::size_t>(it - atom_cum_.begin(), atom_points_.size() - 1);
    return atom_points_[k];
  }
  if (u < part_cum_[1]) {
    // far-tail bucket: synthetic destination beyond the stored radius
    double r = 2 * far_radius_ + 1.0;
    return r * random_direction(dim_, state);
  }
  for (std::size_t p = 0; p < radial_.size(); ++p) {
    if (u >= part_cum_[p + 2]) continue;
    const RadialSampler& rs = radial_[p];
    double v = uniform01(state);
    double t;
    if (rs.alpha > 0) {
      t = rs.delta * std::pow(std::max(v, 1e-300), -1.0 / rs.alpha);
    } else {
      double target = v * rs.mass;
      auto it = std::lower_bound(rs.cum.begin(), rs.cum.end(), target);
      std::size_t k = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - rs.cum.begin(), 1),
                                            rs.cum.size() - 1);
      double c0 = rs.cum[k - 1], c1 = rs.cum[k];
      double w = c1 > c0 ? (target - c0) / (c1 - c0) : 0.5;
      t = rs.radii[k - 1] + w * (rs.radii[k] - rs.radii[k - 1]);
    }
    return t * random_direction(dim_, state);
  }
  return atom_points_.empty() ? pt(0) : atom_points_.back();
}

namespace {

struct ChunkStats {
  double sum = 0, sumsq = 0;
  double jumps = 0, max_jumps = 0;
  long aborted = 0;
  long n = 0;
};

McEstimate run_paths(const JumpProcessSpec& spec, const Domain& omega, const Point& x0,
                     const std::function<double(Point)>& f, const std::function<double(Point)>& g,
                     long n_paths, uint64_t seed, long path_cap) {
  const double rate = spec.total_rate();
  const long chunk = 4096;
  const long n_chunks = (n_paths + chunk - 1) / chunk;
  std::vector<ChunkStats> stats(n_chunks);

  par::parallel_for(std::size_t(n_chunks), [&](std::size_t c) {
    ChunkStats& st = stats[c];
    const long lo = long(c) * chunk;
    const long hi = std::min(n_paths, lo + chunk);
    for (long p = lo; p < hi; ++p) {
      uint64_t state = splitmix64(splitmix64(seed) ^ (0x9e3779b97f4a7c15ULL * uint64_t(p + 1)));
      Point x = x0;
      double value = 0;
      long jumps = 0;
      while (omega.contains(x)) {
        if (++jumps > path_cap) {
          ++st.aborted;
          break;
        }
        double hold = -std::log(1.0 - uniform01(state)) / rate;
        value += f(x) * hold;
        x = x + spec.sample_jump(state);
      }
      if (jumps <= path_cap) value += g(x);
      st.sum += value;
      st.sumsq += value * value;
      st.jumps += double(jumps);
      st.max_jumps = std::max(st.max_jumps, double(jumps));
      ++st.n;
    }
  });

  ChunkStats total;
  for (const auto& st : stats) {
    total.sum += st.sum;
    total.sumsq += st.sumsq;
    total.jumps += st.jumps;
    total.max_jumps = std::max(total.max_jumps, st.max_jumps);
    total.aborted += st.aborted;
    total.n += st.n;
  }
  if (total.aborted > 0)
    throw SolverError("path-length cap exceeded on " + std::to_string(total.aborted) +
                      " of " + std::to_string(total.n) + " paths (cap " +
                      std::to_string(path_cap) + ", mean jumps " +
                      std::to_string(total.jumps / double(total.n)) + ")");

  McEstimate est;
  est.n_paths = total.n;
  est.seed = seed;
  est.estimate = total.sum / double(total.n);
  double var = std::max(0.0, total.sumsq / double(total.n) - est.estimate * est.estimate);
  est.std_error = std::sqrt(var / std::max<long>(total.n - 1, 1));
  est.mean_jumps = total.jumps / double(total.n);
  est.max_jumps = total.max_jumps;
  return est;
}

}  // namespace

McEstimate mean_exit_time(const JumpProcessSpec& spec, const Domain& omega, const Point& x0,
                          long n_paths, uint64_t seed, long path_cap) {
  return run_paths(
      spec, omega, x0, [](Point) { return 1.0; }, [](Point) { return 0.0; }, n_paths, seed,
      path_cap);
}

McEstimate feynman_kac(const JumpProcessSpec& spec, const Domain& omega, const Point& x0,
                       const std::function<double(Point)>& f,
                       const std::function<double(Point)>& g, long n_paths, uint64_t seed,
                       long path_cap) {
  return run_paths(spec, omega, x0, f, g, n_paths, seed, path_cap);
}

}  // namespace nld
