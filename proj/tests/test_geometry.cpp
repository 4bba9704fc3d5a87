#include <doctest.h>

#include <cmath>

#include "nld/errors.hpp"
#include "nld/geometry.hpp"
#include "nld/grid.hpp"
#include "nld/levy.hpp"

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

TEST_CASE("dilation") {
  auto i = Domain::interval(0, 1).dilate(0.25);
  CHECK(i.a() == doctest::Approx(-0.25));
  CHECK(i.b() == doctest::Approx(1.25));
  auto d = Domain::disk({0, 0}, 1).dilate(0.5);
  CHECK(d.radius() == doctest::Approx(1.5));
  auto same = Domain::interval(0, 1).dilate(0.0);
  CHECK(same.a() == 0.0);
  CHECK(same.b() == 1.0);
}

TEST_CASE("dilation is monotone") {
  auto omega = Domain::disk({0.3, -0.2}, 0.8);
  uint64_t s = 7;
  for (int t = 0; t < 200; ++t) {
    double e1 = uni(s), e2 = e1 + uni(s);
    Point p{-2 + 4 * uni(s), -2 + 4 * uni(s)};
    if (omega.dilate(e1).contains(p)) CHECK(omega.dilate(e2).contains(p));
  }
}

TEST_CASE("translate chain length") {
  auto omega = Domain::interval(0, 1);
  CHECK(omega.translate_chain_length(pt(1)) == 1);
  CHECK(omega.translate_chain_length(pt(0.4)) == 3);
  CHECK(Domain::box({0, 0}, {1, 1}).translate_chain_length({2, 0}) == 1);
  CHECK(Domain::disk({0, 0}, 1).translate_chain_length({0.5, 0}) == 4);
  CHECK_THROWS_AS(omega.translate_chain_length(pt(0)), SpecError);
}

TEST_CASE("chain length bounded by diameter over shift") {
  uint64_t s = 11;
  auto check_dom = [&](const Domain& omega) {
    for (int t = 0; t < 100; ++t) {
      Point x0{uni(s) * 2 - 1, omega.dim() == 2 ? uni(s) * 2 - 1 : 0.0};
      if (norm2(x0) < 1e-3) continue;
      int n = omega.translate_chain_length(x0);
      CHECK(n <= int(std::ceil(omega.diameter() / norm2(x0))) + 1);
      CHECK(n >= 1);
    }
  };
  check_dom(Domain::interval(0, 1));
  check_dom(Domain::box({0, 0}, {2, 0.5}));
  check_dom(Domain::disk({1, 1}, 0.7));
}

TEST_CASE("nearest boundary point on a disk") {
  auto d = Domain::disk({0, 0}, 1);
  auto in = d.nearest_boundary_point({0.9, 0});
  CHECK(in.p[0] == doctest::Approx(1.0));
  CHECK(in.p[1] == doctest::Approx(0.0));
  CHECK(in.d == doctest::Approx(0.1));
  CHECK(in.inside);
  auto out = d.nearest_boundary_point({1.05, 0});
  CHECK(out.p[0] == doctest::Approx(1.0));
  CHECK(out.d == doctest::Approx(0.05));
  CHECK_FALSE(out.inside);
  CHECK_THROWS_AS(d.nearest_boundary_point({0, 0}), OutOfTubeError);
}

TEST_CASE("grid construction: interval cell counts and halo") {
  auto dom = std::make_shared<Domain>(Domain::interval(0, 1));
  Grid g = make_grid(dom, 0.1, 3.0, Basis::P0);
  CHECK(g.interior_count() == 10);
  // halo covers dist <= r_trunc on both sides
  CHECK(g.origin[0] <= -3.0 + 1e-12);
  CHECK(g.origin[0] + g.shape[0] * g.h >= 4.0 - 1e-12);
  // every interior center lies in the domain
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.interior[i]) CHECK(dom->contains(g.coord(i)));
}

TEST_CASE("grid rejects P0 for strongly singular measures") {
  auto dom = std::make_shared<Domain>(Domain::interval(0, 1));
  auto strong = LevyMeasure::radial(RadialKernel::fractional_stable(1.5, 1));
  CHECK_THROWS_AS(make_grid(dom, 0.1, 1.0, Basis::P0, &strong), AdmissibilityError);
  CHECK_NOTHROW(make_grid(dom, 0.1, 1.0, Basis::P1, &strong));
  auto mild = LevyMeasure::radial(RadialKernel::fractional_stable(0.5, 1));
  CHECK_NOTHROW(make_grid(dom, 0.1, 1.0, Basis::P0, &mild));
  // finite total mass admits P0 regardless of the flag
  auto finite = LevyMeasure::atomic({{pt(1), 1.0}, {pt(-1), 1.0}}, 1);
  CHECK_NOTHROW(make_grid(dom, 0.1, 1.0, Basis::P0, &finite));
}

TEST_CASE("lattice alignment is exact for lattice-compatible domains") {
  auto dom = std::make_shared<Domain>(Domain::interval(0, 1));
  Grid g = make_grid(dom, 1.0 / 64, 2.0, Basis::P0);
  // shifting any cell center by an integer lands exactly on a cell center
  Point c = g.coord(g.size() / 2);
  double s = (c[0] + 3.0 - g.origin[0]) / g.h - 0.5;
  CHECK(s == doctest::Approx(std::round(s)).epsilon(1e-15));
}

TEST_CASE("C11 data and ball-condition probe") {
  auto d = Domain::disk({0, 0}, 1);
  C11Data c = d.c11_data();
  CHECK(c.r == doctest::Approx(1.0));
  CHECK(c.tube_width() > 0.05);
  // probe the interior/exterior ball conditions on sampled boundary points
  for (int k = 0; k < 64; ++k) {
    double th = 2 * M_PI * k / 64;
    Point p{std::cos(th), std::sin(th)};
    Point nin = (1.0 - 0.5 * c.r) * p;   // center of an interior ball of radius r/2
    Point nout = (1.0 + 0.5 * c.r) * p;  // center of an exterior ball
    CHECK(d.contains(nin));
    CHECK_FALSE(d.contains(nout));
    CHECK(d.boundary_distance(nin) == doctest::Approx(0.5 * c.r).epsilon(1e-12));
    CHECK(d.boundary_distance(nout) == doctest::Approx(0.5 * c.r).epsilon(1e-12));
  }
}

TEST_CASE("polar graph boundary and projection") {
  PolarGraph pg;
  pg.base = 1.0;
  pg.fourier = {{0.0, 0.0}, {0.15, 0.0}};  // rho = 1 + 0.15 cos(2 theta)
  auto d = Domain::polar_graph(pg);
  CHECK(d.contains({0, 0}));
  CHECK_FALSE(d.contains({1.3, 0}));
  C11Data c = d.c11_data();
  CHECK(c.tube_width() > 0);
  // projection: the foot point lies on the boundary and is closest among samples
  Point b0 = pg.boundary_point(0.1);
  Point x = (1.0 - 0.25 * c.tube_width() / norm2(b0)) * b0;  // just inside the tube
  auto proj = d.nearest_boundary_point(x);
  double rho_at = pg.rho(std::atan2(proj.p[1], proj.p[0]));
  CHECK(norm2(proj.p) == doctest::Approx(rho_at).epsilon(1e-9));
  for (int k = 0; k < 128; ++k) {
    Point b = pg.boundary_point(2 * M_PI * k / 128);
    CHECK(norm2(x - b) >= proj.d - 1e-9);
  }
}
