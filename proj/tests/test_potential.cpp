#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "ballot/geometry.hpp"
#include "ballot/lattice_solver.hpp"
#include "ballot/potential.hpp"
#include "ballot/rng.hpp"

using namespace ballot;

namespace {
const double kPi = M_PI;
}  // namespace

TEST_CASE("potential kernel closed-form values") {
  CHECK(potential_kernel({0, 0}) == 0.0);
  CHECK(std::abs(potential_kernel({1, 0}) - 1.0) <= 1e-5);
  CHECK(std::abs(potential_kernel({0, -1}) - 1.0) <= 1e-5);
  CHECK(std::abs(potential_kernel({1, 1}) - 4.0 / kPi) <= 1e-5);
  CHECK(std::abs(potential_kernel({2, 0}) - (4.0 - 8.0 / kPi)) <= 1e-5);
  CHECK(std::abs(potential_kernel({2, 1}) - (8.0 / kPi - 1.0)) <= 1e-5);
  CHECK(std::abs(potential_kernel({2, 2}) - 16.0 / (3 * kPi)) <= 1e-5);
  CHECK(std::abs(potential_kernel({3, 3}) - (4.0 / kPi) * (1 + 1.0 / 3 + 1.0 / 5)) <= 1e-5);
  const double a55 = (4.0 / kPi) * (1 + 1.0 / 3 + 1.0 / 5 + 1.0 / 7 + 1.0 / 9);
  CHECK(std::abs(potential_kernel({5, 5}) - a55) <= 1e-5);
  // eightfold symmetry
  CHECK(potential_kernel({3, 1}) == doctest::Approx(potential_kernel({-1, 3})).epsilon(1e-12));
}

TEST_CASE("potential kernel vs independent direct-solve oracle") {
  const int r = 200;
  PointSet box;
  box.reserve((2 * r + 1) * (2 * r + 1));
  for (int x = -r; x <= r; ++x)
    for (int y = -r; y <= r; ++y) box.push_back(Point{x, y});
  sort_unique(box);
  DirichletSolver s(std::move(box));
  const double g = 2.0 / kPi;
  Eigen::VectorXd rhs(s.size());
  for (int64_t i = 0; i < s.size(); ++i) {
    const Point p = s.domain()[i];
    double acc = 0.0;
    for (Point q :
         {Point{p.x + 1, p.y}, Point{p.x - 1, p.y}, Point{p.x, p.y + 1}, Point{p.x, p.y - 1}}) {
      if (s.index_of(q) < 0) acc += 0.5 * g * std::log(double(q.x) * q.x + double(q.y) * q.y);
    }
    rhs[i] = 0.25 * acc - (p.x == 0 && p.y == 0 ? 1.0 : 0.0);
  }
  const Eigen::VectorXd a = s.solve(rhs);
  const double a0 = a[s.index_of({0, 0})];
  for (Point p : PointSet{{1, 0}, {1, 1}, {2, 0}, {5, 5}, {10, 3}, {20, 0}, {40, 17}}) {
    const double oracle = a[s.index_of(p)] - a0;
    // the oracle box carries its own O(r^{-2}) boundary bias of a few 1e-6
    CHECK(std::abs(potential_kernel(p) - oracle) <= 5e-6);
  }
}

TEST_CASE("potential kernel is harmonic off the origin") {
  auto defect = [](Point p) {
    const double mid = potential_kernel(p);
    double acc = 0.0;
    for (Point q :
         {Point{p.x + 1, p.y}, Point{p.x - 1, p.y}, Point{p.x, p.y + 1}, Point{p.x, p.y - 1}})
      acc += potential_kernel(q);
    return 0.25 * acc - mid;
  };
  CHECK(defect({0, 0}) == doctest::Approx(1.0).epsilon(1e-8));
  // bulk of the table, the crossover ring, and the asymptotic region
  for (Point p : PointSet{{3, 2}, {-7, 11}, {50, 0}, {120, -33}, {199, 0}, {200, 0}, {201, 0},
                          {200, 117}, {260, 30}, {400, -400}, {1000, 250}}) {
    CHECK(std::abs(defect(p)) <= 2e-9);
  }
}

TEST_CASE("asymptotic expansion agrees with the table on the overlap ring") {
  const PotentialKernelTable& t = potential_table();
  double worst = 0.0;
  for (int x = 150; x <= 200; x += 7) {
    for (int y = 0; y <= x; y += 11) {
      const double tab = t.at({x, y});
      const double asym = t.asymptotic(x, y);
      worst = std::max(worst, std::abs(tab - asym));
    }
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("green function on singleton and pair domains") {
  DiscreteDomain single;
  single.pts = {{0, 0}};
  GreenOperator g1(single);
  CHECK(g1.green({0, 0}, {0, 0}) == doctest::Approx(1.0).epsilon(1e-12));

  DiscreteDomain pair;
  pair.pts = {{0, 0}, {1, 0}};
  GreenOperator g2(pair);
  // first-step analysis: G(0,0) = 16/15, G(0,e1) = 4/15
  CHECK(g2.green({0, 0}, {0, 0}) == doctest::Approx(16.0 / 15).epsilon(1e-12));
  CHECK(g2.green({1, 0}, {1, 0}) == doctest::Approx(16.0 / 15).epsilon(1e-12));
  CHECK(g2.green({0, 0}, {1, 0}) == doctest::Approx(4.0 / 15).epsilon(1e-12));
  CHECK(g2.green({1, 0}, {0, 0}) == doctest::Approx(4.0 / 15).epsilon(1e-12));
  CHECK_THROWS_WITH_AS(g2.green({5, 5}, {0, 0}), "point outside domain", std::invalid_argument);
}

TEST_CASE("green formula method matches the solve method") {
  std::vector<ShapePtr> shapes = {
      Shape::unit_disk(),
      Shape::disk(0.3, -0.1, 0.7),
      Shape::intersection({Shape::unit_disk(), Shape::complement(Shape::disk(0, 0, 0.25))}),
  };
  Rng rng(99);
  for (const auto& w : shapes) {
    for (double ell : {2.0, 3.0}) {
      DiscreteDomain d = discretize(w, ell);
      if (d.pts.size() > 2000) continue;
      GreenOperator go(d);
      for (int rep = 0; rep < 4; ++rep) {
        const Point x = d.pts[rng.next_u64() % d.pts.size()];
        const Point y = d.pts[rng.next_u64() % d.pts.size()];
        const double gs = go.green(x, y, GreenMethod::Solve);
        const double gf = go.green(x, y, GreenMethod::KernelFormula);
        CHECK(std::abs(gs - gf) <= 1e-5 * (1.0 + std::abs(gs)));
      }
    }
  }
}

TEST_CASE("green symmetry and positivity on a sample domain") {
  DiscreteDomain d = discretize(Shape::unit_disk(), 2.0);
  GreenOperator go(d);
  Rng rng(5);
  for (int rep = 0; rep < 8; ++rep) {
    const Point x = d.pts[rng.next_u64() % d.pts.size()];
    const Point y = d.pts[rng.next_u64() % d.pts.size()];
    const double gxy = go.green(x, y), gyx = go.green(y, x);
    CHECK(gxy == doctest::Approx(gyx).epsilon(1e-10));
    CHECK(gxy >= 0.0);
  }
}

TEST_CASE("poisson kernel from an interior point") {
  DiscreteDomain single;
  single.pts = {{0, 0}};
  GreenOperator g(single);
  PoissonKernel pk = poisson_kernel(g, {0, 0});
  REQUIRE(pk.support.size() == 4);
  for (int k = 0; k < 4; ++k) CHECK(pk.mass[k] == doctest::Approx(0.25).epsilon(1e-12));

  DiscreteDomain d = discretize(Shape::unit_disk(), 2.0);
  GreenOperator gd(d);
  PoissonKernel pk2 = poisson_kernel(gd, {1, 1});
  CHECK(pk2.mass.sum() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(pk2.mass.minCoeff() >= 0.0);
}

TEST_CASE("poisson kernel split on a lattice annulus") {
  // from |x| ≈ e, the walk exits B_2 ∩ B_0^- through the outer ring with
  // probability about 1/2 (drifts of order 1/(n−k) allowed)
  const ShapePtr b = Shape::unit_disk();
  DiscreteDomain ann = annulus_domain(b, 2.0, b, 0.0);
  DiscreteDomain outer = discretize(b, 2.0);
  GreenOperator g(ann);
  PoissonKernel pk = poisson_kernel(g, {3, 0});
  double outer_mass = 0.0;
  for (size_t k = 0; k < pk.support.size(); ++k) {
    if (!outer.contains(pk.support[k])) outer_mass += pk.mass[k];
  }
  CHECK(pk.mass.sum() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(outer_mass - 0.5) <= 0.25);
}

TEST_CASE("poisson kernel from infinity on a cross-shaped hole") {
  // F = {0} ∪ 4 neighbors: the center is shielded, the four arms get equal
  // mass by symmetry
  PointSet f{{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  sort_unique(f);
  PoissonKernel pk = poisson_kernel_from_infinity(f);
  REQUIRE(pk.support.size() == 4);  // the shell excludes nothing here except...
  // all five are shell points except none; center has all neighbors in F
  double arm = -1.0;
  for (size_t k = 0; k < pk.support.size(); ++k) {
    const Point z = pk.support[k];
    if (z == Point{0, 0}) {
      CHECK(pk.mass[k] <= 1e-9);
    } else {
      if (arm < 0) arm = pk.mass[k];
      CHECK(pk.mass[k] == doctest::Approx(arm).epsilon(1e-9));
    }
  }
  CHECK(pk.mass.sum() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("harmonic extension of constants and symmetric data") {
  PointSet a = outer_boundary(discretize(Shape::unit_disk(), 1.0).pts);
  Eigen::VectorXd c37 = Eigen::VectorXd::Constant(a.size(), 3.7);
  HarmonicExtension hc(a, c37);
  CHECK(hc.value({0, 0}) == doctest::Approx(3.7).epsilon(1e-10));
  CHECK(hc.value({40, -3}) == doctest::Approx(3.7).epsilon(1e-10));
  CHECK(hc.value_at_infinity() == doctest::Approx(3.7).epsilon(1e-10));

  Eigen::VectorXd odd(a.size());
  for (size_t i = 0; i < a.size(); ++i) odd[i] = a[i].x;
  HarmonicExtension ho(a, odd);
  CHECK(std::abs(ho.value({0, 0})) <= 1e-9);
  CHECK(std::abs(ho.value_at_infinity()) <= 1e-9);

  PointSet nb{{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  sort_unique(nb);
  Eigen::VectorXd ind = Eigen::VectorXd::Zero(4);
  for (size_t i = 0; i < nb.size(); ++i)
    if (nb[i] == Point{1, 0}) ind[i] = 1.0;
  HarmonicExtension hi(nb, ind);
  CHECK(hi.value({0, 0}) == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("harmonic extension residual, bounds, and infinity weights") {
  PointSet a = outer_boundary(discretize(Shape::disk(0.1, 0, 0.9), 2.0).pts);
  Rng rng(17);
  Eigen::VectorXd f(a.size());
  for (int64_t i = 0; i < f.size(); ++i) f[i] = rng.next_normal();
  HarmonicExtension h(a, f);

  auto val = [&h](Point p) { return h.value(p); };
  for (Point p : PointSet{{0, 0}, {3, 2}, {-5, 1}, {30, 0}, {150, 150}, {210, 0}, {400, 10}}) {
    if (set_contains(a, p)) continue;
    double acc = 0.0;
    for (Point q :
         {Point{p.x + 1, p.y}, Point{p.x - 1, p.y}, Point{p.x, p.y + 1}, Point{p.x, p.y - 1}})
      acc += val(q);
    CHECK(std::abs(0.25 * acc - val(p)) <= 1e-9);
  }

  const double lo = f.minCoeff(), hi = f.maxCoeff();
  for (Point p : PointSet{{0, 0}, {2, -1}, {8, 8}, {100, 40}}) {
    CHECK(val(p) >= lo - 1e-9);
    CHECK(val(p) <= hi + 1e-9);
  }
  CHECK(h.value_at_infinity() >= lo - 1e-9);
  CHECK(h.value_at_infinity() <= hi + 1e-9);

  const Eigen::VectorXd w = HarmonicExtension::infinity_weights(a);
  CHECK(std::abs(w.dot(f) - h.value_at_infinity()) <= 1e-9);
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(w.minCoeff() >= -1e-9);
}

TEST_CASE("far-field infinity estimate agrees with the exact value") {
  PointSet a = outer_boundary(discretize(Shape::unit_disk(), 1.5).pts);
  Rng rng(23);
  Eigen::VectorXd f(a.size());
  for (int64_t i = 0; i < f.size(); ++i) f[i] = rng.next_double() * 2 - 1;
  HarmonicExtension h(a, f);
  InfinityEstimate est = h.far_field_estimate(6);
  CHECK(std::abs(est.value - h.value_at_infinity()) <= std::max(3 * est.error_estimate, 1e-5));
  // doubling the start radius tightens the estimate
  InfinityEstimate est2 = h.far_field_estimate(7);
  CHECK(std::abs(est2.value - h.value_at_infinity()) <=
        std::abs(est.value - h.value_at_infinity()) + est.error_estimate);
}

TEST_CASE("ruin probability midpoint, step bound, and monotonicity") {
  const ShapePtr b = Shape::unit_disk();
  DiscreteDomain ann = annulus_domain(b, 6.0, b, 0.0);
  DiscreteDomain outer = discretize(b, 6.0);
  DirichletSolver s(ann.pts);
  const Eigen::VectorXd ruin = ruin_values(s, outer);

  const Point mid{static_cast<int32_t>(std::lround(std::exp(3.0))), 0};
  CHECK(std::abs(ruin[s.index_of(mid)] - 0.5) <= 0.15);

  // a point adjacent to the outer boundary leaves with probability ≥ 1/4
  Point edge{0, 0};
  for (Point p : ann.pts)
    if (p.y == 0 && p.x > edge.x) edge = p;
  CHECK(ruin[s.index_of(edge)] >= 0.25);

  // monotone along the positive x-ray
  double prev = -1.0;
  for (int32_t x = 2; x <= edge.x; ++x) {
    const int64_t i = s.index_of({x, 0});
    if (i < 0) continue;
    CHECK(ruin[i] >= prev - 1e-12);
    prev = ruin[i];
  }
}

TEST_CASE("oscillation") {
  auto f = [](Point p) { return static_cast<double>(p.x); };
  CHECK(oscillation(f, {{2, 0}, {2, 5}}) == 0.0);
  CHECK(oscillation(f, {{0, 0}, {3, 0}}) == 3.0);
  PointSet small{{0, 0}, {1, 0}};
  PointSet big{{0, 0}, {1, 0}, {5, 0}};
  CHECK(oscillation(f, small) <= oscillation(f, big));
  CHECK(oscillation(f, {{1, 0}}, 7.0) == 6.0);
  CHECK_THROWS_AS(oscillation(f, {}), std::invalid_argument);
}
