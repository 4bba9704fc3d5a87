#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nld/principles.hpp"

using namespace nld;

namespace {

constexpr double kPi = std::numbers::pi;

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

struct Problem {
  std::shared_ptr<const LevyMeasure> nu;
  std::shared_ptr<Grid> grid;
  FormMatrix fm;
};

Problem make_problem(std::shared_ptr<const LevyMeasure> nu, double a, double b, double h,
                     double rt, Basis basis = Basis::P0) {
  auto dom = std::make_shared<Domain>(Domain::interval(a, b));
  auto grid = std::make_shared<Grid>(make_grid(dom, h, rt, basis, nu.get()));
  FormMatrix fm = assemble(nu, grid);
  return {nu, grid, std::move(fm)};
}

}  // namespace

TEST_CASE("spectral constant of the two-atom instance is exactly 1/2") {
  auto nu = std::make_shared<LevyMeasure>(LevyMeasure::atomic({{pt(1), 1.0}, {pt(-1), 1.0}}, 1));
  auto p = make_problem(nu, 0, 1, 0.0625, 2.0);
  PoincareEstimate est = poincare_spectral(p.fm);
  CHECK(est.lambda_min == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(est.spectral_constant == doctest::Approx(0.5).epsilon(1e-10));
  // doubling the weights doubles lambda_min
  auto nu2 = std::make_shared<LevyMeasure>(LevyMeasure::atomic({{pt(1), 2.0}, {pt(-1), 2.0}}, 1));
  auto p2 = make_problem(nu2, 0, 1, 0.0625, 2.0);
  CHECK(poincare_spectral(p2.fm).lambda_min == doctest::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("spectral constant of the zeta instance") {
  // every integer shift leaves (0,1): the interior block is (pi^2/3) I
  auto nu = std::make_shared<LevyMeasure>(LevyMeasure::zeta_series(100));
  auto p = make_problem(nu, 0, 1, 0.0625, 2.0);
  PoincareEstimate est = poincare_spectral(p.fm);
  CHECK(est.lambda_min == doctest::Approx(kPi * kPi / 3).epsilon(1e-10));
  CHECK(est.spectral_constant == doctest::Approx(3.0 / (kPi * kPi)).epsilon(1e-10));
}

TEST_CASE("spectral constant is invariant under translation and reflection") {
  auto nu = std::make_shared<LevyMeasure>(LevyMeasure::zeta_series(30));
  auto a = make_problem(nu, 0, 1, 0.0625, 1.5);
  auto b = make_problem(nu, 5, 6, 0.0625, 1.5);   // translated domain
  auto c = make_problem(nu, -1, 0, 0.0625, 1.5);  // reflected domain (nu symmetric)
  double la = poincare_spectral(a.fm).lambda_min;
  CHECK(poincare_spectral(b.fm).lambda_min == doctest::Approx(la).epsilon(1e-9));
  CHECK(poincare_spectral(c.fm).lambda_min == doctest::Approx(la).epsilon(1e-9));
}

TEST_CASE("constructive constant bounds the spectral one") {
  auto zeta = std::make_shared<LevyMeasure>(LevyMeasure::zeta_series(50));
  auto frac = std::make_shared<LevyMeasure>(
      LevyMeasure::radial(RadialKernel::fractional_stable(0.5, 1)));
  auto pm1 = std::make_shared<LevyMeasure>(LevyMeasure::atomic({{pt(1), 1.0}, {pt(-1), 1.0}}, 1));
  for (auto nu : {zeta, frac, pm1}) {
    auto p = make_problem(nu, 0, 1, 0.0625, 2.0);
    PoincareEstimate sp = poincare_spectral(p.fm);
    PoincareEstimate co = poincare_constructive(*nu, *p.grid->domain);
    CHECK(co.constructive_constant > 0);
    CHECK(std::isfinite(co.constructive_constant));
    CHECK(sp.spectral_constant <= co.constructive_constant * (1 + 1e-9));
    // the final chain inequality holds on sampled discrete functions
    uint64_t s = 99;
    for (int t = 0; t < 20; ++t) {
      GridFunction u = GridFunction::zero(p.grid);
      for (std::size_t i = 0; i < p.grid->size(); ++i)
        if (p.grid->interior[i]) u.coeffs[i] = 2 * uni(s) - 1;
      double l2 = p.fm.mass_quadratic(u);
      CHECK(l2 <= co.constructive_constant * p.fm.quadratic(u) * (1 + 1e-9));
    }
  }
}

TEST_CASE("constructive chain: worked instances") {
  auto pm1 = LevyMeasure::atomic({{pt(1), 1.0}, {pt(-1), 1.0}}, 1);
  // Omega = (0,1): the chain empties after one step, constant <= 4
  PoincareEstimate a = poincare_constructive(pm1, Domain::interval(0, 1));
  CHECK(a.chain_length == 1);
  CHECK(a.constructive_constant <= 4.0);
  // Omega = (0,2.5): three steps, larger constant
  PoincareEstimate b = poincare_constructive(pm1, Domain::interval(0, 2.5));
  CHECK(b.chain_length == 3);
  CHECK(b.constructive_constant > a.constructive_constant);
  // the half-stable kernel finds the dyadic annulus [1/2, 1)
  auto frac = LevyMeasure::radial(RadialKernel::fractional_stable(0.5, 1));
  PoincareEstimate c = poincare_constructive(frac, Domain::interval(0, 1));
  CHECK(c.annulus_r1 == doctest::Approx(0.5));
  CHECK(c.annulus_r2 == doctest::Approx(1.0));
  CHECK(std::isfinite(c.constructive_constant));
}

TEST_CASE("interior block is an M-matrix for P0 assemblies") {
  auto zeta = std::make_shared<LevyMeasure>(LevyMeasure::zeta_series(50));
  auto frac = std::make_shared<LevyMeasure>(
      LevyMeasure::radial(RadialKernel::fractional_stable(0.5, 1)));
  for (auto nu : {zeta, frac}) {
    auto p = make_problem(nu, 0, 1, 0.1, 1.5, Basis::P0);
    MMatrixReport rep = check_m_matrix(p.fm);
    CHECK(rep.diagonal_nonnegative);
    CHECK(rep.offdiagonal_nonpositive);
    CHECK(rep.row_sums_nonnegative);
    CHECK(rep.pass());
  }
}

TEST_CASE("weak maximum and comparison principles on the solver") {
  auto nu = std::make_shared<LevyMeasure>(LevyMeasure::zeta_series(50));
  auto p = make_problem(nu, 0, 1, 0.0625, 2.0);
  GridFunction f = GridFunction::sample_interior(p.grid, [](Point) { return 1.0; });
  SolveReport rep = solve(p.fm, f, GridFunction::zero(p.grid));
  MaxPrincipleVerdict v = check_weak_max_principle(rep);
  CHECK(v.pass);
  CHECK(v.min_value >= -1e-12);
  // interior values are strictly positive
  for (std::size_t i = 0; i < p.grid->size(); ++i)
    if (p.grid->interior[i]) CHECK(rep.solution.coeffs[i] > 0);

  // ordered data gives ordered solutions
  GridFunction f2 = GridFunction::sample_interior(p.grid, [](Point) { return 2.0; });
  SolveReport rep2 = solve(p.fm, f2, GridFunction::zero(p.grid));
  CHECK(check_comparison(rep2, rep).pass);
  GridFunction g1 = GridFunction::sample_halo(p.grid, [](Point) { return 1.0; });
  SolveReport rep3 = solve(p.fm, f, g1);
  CHECK(check_comparison(rep3, rep).pass);
}

TEST_CASE("barrier for the compactly supported measure") {
  auto nu = std::make_shared<LevyMeasure>(LevyMeasure::atomic({{pt(1), 1.0}, {pt(-1), 1.0}}, 1));
  auto p = make_problem(nu, 0, 1, 0.0625, 3.0);
  Barrier bar = build_barrier(p.fm);
  CHECK(bar.support_case == Barrier::Case::CompactSupport);
  CHECK(bar.certificate);
  // 2 eta(x) - eta(x+1) - eta(x-1) = 2/R^2 with R = 3 and the scale 1/18:
  // every interior row evaluates to exactly 4
  CHECK(bar.lower_lw == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(bar.w.coeffs.minCoeff() >= 0);
  CHECK(bar.w.coeffs.maxCoeff() <= bar.c_sup * (1 + 1e-12));
}

TEST_CASE("barrier for the zeta measure routes to the far-mass case") {
  auto nu = std::make_shared<LevyMeasure>(LevyMeasure::zeta_series(200));
  auto p = make_problem(nu, 0, 1, 0.0625, 2.0);
  Barrier bar = build_barrier(p.fm);
  CHECK(bar.support_case == Barrier::Case::UnboundedSupport);
  CHECK(bar.certificate);
  CHECK(bar.lower_lw >= 1.0);
  CHECK(bar.w.coeffs.minCoeff() >= 0);
}

TEST_CASE("deep domains force the concave-cap barrier") {
  // support radius 1 but a domain of diameter 8: the mollified indicator
  // would see no mass far out and the classification must route to the cap
  auto nu = std::make_shared<LevyMeasure>(LevyMeasure::atomic({{pt(1), 1.0}, {pt(-1), 1.0}}, 1));
  auto dom = std::make_shared<Domain>(Domain::interval(-4, 4));
  auto grid = std::make_shared<Grid>(make_grid(dom, 0.125, 6.0, Basis::P0, nu.get()));
  FormMatrix fm = assemble(nu, grid);
  Barrier bar = build_barrier(fm);
  CHECK(bar.support_case == Barrier::Case::CompactSupport);
  CHECK(bar.certificate);
}

TEST_CASE("sup-norm bound: the zeta worked example and its strict gap") {
  auto nu = std::make_shared<LevyMeasure>(LevyMeasure::zeta_series(200));
  auto p = make_problem(nu, 0, 1, 1.0 / 64, 2.0);
  GridFunction f = GridFunction::sample_interior(p.grid, [](Point) { return 1.0; });
  GridFunction g = GridFunction::zero(p.grid);
  SolveReport rep = solve(p.fm, f, g);
  std::vector<double> eps;
  for (int k = 2; k <= 8; ++k) eps.push_back(std::ldexp(1.0, -k));
  LinfBound lb = linf_bound(rep, p.fm, f, g, eps, 4242);
  for (double c : lb.c_eps_inverse) CHECK(c == doctest::Approx(kPi * kPi / 3 - 1).epsilon(1e-12));
  CHECK(lb.c_eff_inverse == doctest::Approx(kPi * kPi / 3 - 1).epsilon(1e-12));
  CHECK(lb.bj_inf_kappa == doctest::Approx(kPi * kPi / 3).epsilon(1e-12));
  CHECK(lb.gap == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(lb.asserted);
  CHECK(lb.holds);
  // the solution 3/pi^2 also satisfies the sharper undilated bound
  CHECK(lb.max_abs_solution <= 1.0 / lb.bj_inf_kappa + 1e-10);
}

TEST_CASE("sup-norm bound attained exactly for the two-atom instance") {
  auto nu = std::make_shared<LevyMeasure>(LevyMeasure::atomic({{pt(1), 1.0}, {pt(-1), 1.0}}, 1));
  auto p = make_problem(nu, 0, 1, 0.0625, 3.0);
  GridFunction f = GridFunction::sample_interior(p.grid, [](Point) { return 1.0; });
  GridFunction g = GridFunction::zero(p.grid);
  SolveReport rep = solve(p.fm, f, g);
  LinfBound lb = linf_bound(rep, p.fm, f, g, {0.25, 0.125}, 7);
  CHECK(lb.bj_inf_kappa == doctest::Approx(2.0).epsilon(1e-12));
  // u = 1/2 attains the undilated bound ||f||/inf kappa exactly
  CHECK(lb.max_abs_solution == doctest::Approx(1.0 / lb.bj_inf_kappa).epsilon(1e-10));
  CHECK(lb.holds);

  // f = 0 with bounded g: |u| <= ||g||
  GridFunction g1 = GridFunction::sample_halo(p.grid, [](Point x) { return std::cos(x[0]); });
  SolveReport rep2 = solve(p.fm, GridFunction::zero(p.grid), g1);
  LinfBound lb2 = linf_bound(rep2, p.fm, GridFunction::zero(p.grid), g1, {0.25}, 7);
  CHECK(lb2.max_abs_solution <= 1.0 + 1e-10);
  CHECK(lb2.holds);
}

TEST_CASE("dilation infima are monotone along the shrinking schedule") {
  auto nu = std::make_shared<LevyMeasure>(
      LevyMeasure::radial(RadialKernel::fractional_stable(0.5, 1)));
  auto p = make_problem(nu, 0, 1, 0.0625, 1.5);
  GridFunction f = GridFunction::sample_interior(p.grid, [](Point) { return 1.0; });
  GridFunction g = GridFunction::zero(p.grid);
  SolveReport rep = solve(p.fm, f, g);
  std::vector<double> eps = {0.25, 0.125, 0.0625, 0.03125};
  LinfBound lb = linf_bound(rep, p.fm, f, g, eps, 11);
  for (std::size_t k = 1; k < lb.c_eps_inverse.size(); ++k)
    CHECK(lb.c_eps_inverse[k] >= lb.c_eps_inverse[k - 1] * (1 - 1e-9));
  CHECK(lb.gap >= -1e-9);
  CHECK(lb.holds);
}
