#include <doctest.h>

#include <cmath>

#include "nld/extension.hpp"

using namespace nld;

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
double uni(uint64_t& s) {
  s = splitmix64(s);
  return double(s >> 11) * 0x1.0p-53;
}

}  // namespace

TEST_CASE("reflection on the disk: radial formula and involution") {
  auto dom = std::make_shared<Domain>(Domain::disk({0, 0}, 1));
  ReflectionMap map(dom);
  Point t = map.reflect({0.95, 0});
  CHECK(t[0] == doctest::Approx(1.05).epsilon(1e-13));
  CHECK(t[1] == doctest::Approx(0.0));
  // involution over sampled tube points
  uint64_t s = 3;
  double worst = 0;
  int n = 0;
  while (n < 1000) {
    double th = 2 * M_PI * uni(s);
    double r = 1.0 + map.tube_width() * (2 * uni(s) - 1) * 0.999;
    Point x{r * std::cos(th), r * std::sin(th)};
    if (!map.in_tube(x)) continue;
    Point back = map.reflect(map.reflect(x));
    worst = std::max(worst, norm2(back - x));
    ++n;
  }
  CHECK(worst < 1e-12);
  CHECK_THROWS_AS(map.reflect({0, 0}), OutOfTubeError);
}

TEST_CASE("reflection on an interval: fold across the nearer endpoint") {
  auto dom = std::make_shared<Domain>(Domain::interval(0, 1));
  ReflectionMap map(dom);
  Point t = map.reflect(pt(0.05));
  CHECK(t[0] == doctest::Approx(-0.05).epsilon(1e-14));
  CHECK(map.reflect(pt(0.9))[0] == doctest::Approx(1.1).epsilon(1e-14));
  // isometric on pairs folding across the same endpoint
  uint64_t s = 5;
  double eps = map.tube_width();
  for (int k = 0; k < 200; ++k) {
    double x = (2 * uni(s) - 1) * 0.99 * eps;
    double y = (2 * uni(s) - 1) * 0.99 * eps;
    if (x == y || std::abs(x) < 1e-12 || std::abs(y) < 1e-12) continue;
    double d = std::abs(map.reflect(pt(x))[0] - map.reflect(pt(y))[0]);
    CHECK(d == doctest::Approx(std::abs(x - y)).epsilon(1e-12));
  }
  // pairs straddling the two endpoint charts stay uniformly bi-Lipschitz
  LipschitzProbe lip = lipschitz_probe(map, 2000, 5);
  double cross_bound = (1 + 2 * eps) / (1 - 2 * eps);
  CHECK(lip.alpha_hat <= cross_bound * 1.05);
}

TEST_CASE("bi-Lipschitz probe on the disk stays near the annulus distortion") {
  auto dom = std::make_shared<Domain>(Domain::disk({0, 0}, 1));
  ReflectionMap map(dom);
  LipschitzProbe lip = lipschitz_probe(map, 3000, 17);
  CHECK(lip.pairs > 2500);
  CHECK(std::isfinite(lip.alpha_hat));
  // circle reflection distorts by at most (1+eps)/(1-eps) on tube pairs
  double eps = map.tube_width();
  double bound = (1 + eps) / (1 - eps) * 1.05;
  CHECK(lip.expansion <= bound);
  CHECK(lip.contraction <= bound);
}

TEST_CASE("measure distortion probe") {
  auto interval = std::make_shared<Domain>(Domain::interval(0, 1));
  ReflectionMap m1(interval);
  DistortionProbe d1 = measure_distortion_probe(m1, 50, 23);
  CHECK(d1.boxes > 0);
  // 1-D reflection preserves length up to Monte Carlo noise
  CHECK(d1.max_ratio < 1.15);
  CHECK(d1.max_inv_ratio < 1.15);

  auto disk = std::make_shared<Domain>(Domain::disk({0, 0}, 1));
  ReflectionMap m2(disk);
  DistortionProbe d2 = measure_distortion_probe(m2, 60, 29);
  CHECK(d2.boxes > 0);
  double eps = m2.tube_width();
  double bound = (1 + eps) / (1 - eps) * 1.25;  // volume distortion + MC noise
  CHECK(d2.max_ratio < bound);
  CHECK(d2.max_inv_ratio < bound);
}

TEST_CASE("kernel scaling check: power laws pass, hard edges fail") {
  auto stable = RadialKernel::fractional_stable(0.5, 1);
  ScalingCheck sc = kernel_scaling_check(stable, 3.0, 256, 7);
  CHECK(sc.pass);
  // closed form: sup over beta in [1/3, 3] of beta^{-(1+alpha)} = 3^{1.5}
  CHECK(sc.c_alpha == doctest::Approx(std::pow(3.0, 1.5)).epsilon(1e-9));

  auto capped = RadialKernel::compact_quadratic_cap(1.0, 1);
  CHECK_FALSE(kernel_scaling_check(capped, 2.0, 256, 7).pass);

  auto annular = RadialKernel::user_profile(
      [](double t) { return (t >= 0.5 && t <= 1.0) ? 1.0 : 0.0; }, 1, 1.0);
  CHECK_FALSE(kernel_scaling_check(annular, 2.0, 256, 7).pass);
}

TEST_CASE("cutoff: one on the exterior, zero deep inside, linear bound") {
  auto dom = std::make_shared<Domain>(Domain::disk({0, 0}, 1));
  ReflectionMap map(dom);
  auto nu = std::make_shared<LevyMeasure>(
      LevyMeasure::radial(RadialKernel::fractional_stable(0.5, 2)));
  auto grid = std::make_shared<Grid>(make_grid(dom, 0.05, 1.0, Basis::P0, nu.get()));
  CutoffResult cut = build_cutoff(map, grid);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    Point x = grid->coord(i);
    double v = cut.phi.coeffs[i];
    CHECK(v >= 0);
    CHECK(v <= 1);
    if (!dom->contains(x)) CHECK(v == 1.0);
    if (dom->contains(x) && dom->boundary_distance(x) >= map.tube_width()) CHECK(v == 0.0);
  }
  CHECK(std::isfinite(cut.linear_bound));
  CHECK(cut.linear_bound > 0);
  // a too-coarse grid cannot resolve the tube
  auto coarse = std::make_shared<Grid>(make_grid(dom, 0.2, 1.0, Basis::P0, nu.get()));
  CHECK_THROWS_AS(build_cutoff(map, coarse), SpecError);
}

TEST_CASE("extension: zero data, identity on the exterior, finite ratio") {
  auto dom = std::make_shared<Domain>(Domain::disk({0, 0}, 1));
  ReflectionMap map(dom);
  auto nu = std::make_shared<LevyMeasure>(
      LevyMeasure::radial(RadialKernel::fractional_stable(0.5, 2)));
  auto grid = std::make_shared<Grid>(make_grid(dom, 0.05, 1.0, Basis::P0, nu.get()));
  FormMatrix fm = assemble(nu, grid);
  CutoffResult cut = build_cutoff(map, grid);
  ScalingCheck sc = kernel_scaling_check(nu->kernel(), 2.0, 256, 7);
  REQUIRE(sc.pass);

  GridFunction zero = GridFunction::zero(grid);
  ExtensionResult ez = extend(zero, map, cut, fm, sc);
  CHECK(ez.ratio == 0.0);

  GridFunction g = GridFunction::sample_halo(
      grid, [](Point x) { return std::exp(-0.5 * dot(x - Point{1.4, 0.2}, x - Point{1.4, 0.2})); });
  ExtensionResult ex = extend(g, map, cut, fm, sc);
  CHECK(std::isfinite(ex.ratio));
  CHECK(ex.ratio > 0);
  // the extension reproduces g on the exterior
  for (std::size_t i = 0; i < grid->size(); ++i)
    if (!grid->interior[i]) CHECK(ex.g_ext.coeffs[i] == g.coeffs[i]);
  // deep interior stays zero
  for (std::size_t i = 0; i < grid->size(); ++i)
    if (grid->interior[i] && dom->boundary_distance(grid->coord(i)) > map.tube_width())
      CHECK(ex.g_ext.coeffs[i] == 0.0);
  // the two mixed blocks agree (ordered-pair symmetry of the weights)
  CHECK(ex.block_a == doctest::Approx(ex.block_a_prime).epsilon(1e-12));
  // continuity-estimate majorants dominate their blocks
  CHECK(ex.block_a <= ex.a11 + ex.a12 + ex.a2 + 1e-9);
  // a kernel with a hard edge is rejected
  auto bad = ScalingCheck{};
  CHECK_FALSE(bad.pass);
  CHECK_THROWS_AS(extend(g, map, cut, fm, bad), SpecError);
}

TEST_CASE("constant exterior data extends to the cutoff") {
  auto dom = std::make_shared<Domain>(Domain::disk({0, 0}, 1));
  ReflectionMap map(dom);
  auto nu = std::make_shared<LevyMeasure>(
      LevyMeasure::radial(RadialKernel::fractional_stable(0.5, 2)));
  auto grid = std::make_shared<Grid>(make_grid(dom, 0.05, 1.0, Basis::P0, nu.get()));
  FormMatrix fm = assemble(nu, grid);
  CutoffResult cut = build_cutoff(map, grid);
  ScalingCheck sc = kernel_scaling_check(nu->kernel(), 2.0, 256, 7);
  GridFunction one = GridFunction::sample_halo(grid, [](Point) { return 1.0; });
  ExtensionResult ex = extend(one, map, cut, fm, sc);
  // on W the extension is g(Tx) * phi(x) = phi(x)
  for (std::size_t i = 0; i < grid->size(); ++i) {
    Point x = grid->coord(i);
    if (grid->interior[i] && map.in_tube(x))
      CHECK(ex.g_ext.coeffs[i] == doctest::Approx(cut.phi.coeffs[i]).epsilon(1e-9));
  }
  CHECK(std::isfinite(ex.ratio));
}

TEST_CASE("extend-then-restrict is the identity on exterior coefficients") {
  auto dom = std::make_shared<Domain>(Domain::interval(0, 1));
  ReflectionMap map(dom);
  auto nu = std::make_shared<LevyMeasure>(
      LevyMeasure::radial(RadialKernel::fractional_stable(0.5, 1)));
  auto grid = std::make_shared<Grid>(make_grid(dom, 0.03125, 1.0, Basis::P0, nu.get()));
  FormMatrix fm = assemble(nu, grid);
  CutoffResult cut = build_cutoff(map, grid);
  ScalingCheck sc = kernel_scaling_check(nu->kernel(), 1.5, 256, 7);
  GridFunction g = GridFunction::sample_halo(grid, [](Point x) { return 1.0 / (1 + x[0] * x[0]); });
  ExtensionResult ex = extend(g, map, cut, fm, sc);
  for (std::size_t i = 0; i < grid->size(); ++i)
    if (!grid->interior[i]) CHECK(ex.g_ext.coeffs[i] == g.coeffs[i]);
}
