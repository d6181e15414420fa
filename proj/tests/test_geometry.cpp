#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "ballot/geometry.hpp"

using namespace ballot;

namespace {

// brute-force lattice ball: all x with |x| <= r_len (non-strict, matching the
// tie-keeping cutoff; the radii used below are irrational so ties never occur)
PointSet brute_ball(double r_len) {
  PointSet out;
  const int m = static_cast<int>(std::ceil(r_len)) + 1;
  for (int x = -m; x <= m; ++x)
    for (int y = -m; y <= m; ++y)
      if (std::hypot(x, y) <= r_len) out.push_back(Point{x, y});
  sort_unique(out);
  return out;
}

// window-enumerated discretization of W^- (unbounded, so clipped to a box)
PointSet complement_window(const ShapePtr& w, double ell, int box) {
  const ShapePtr wm = Shape::complement(w);
  const double f = std::exp(-ell);
  PointSet out;
  for (int x = -box; x <= box; ++x)
    for (int y = -box; y <= box; ++y)
      if (wm->dist_to_complement(f * x, f * y) > f / 2.0 - 1e-12)
        out.push_back(Point{x, y});
  sort_unique(out);
  return out;
}

bool subset_of(const PointSet& a, const PointSet& b) {
  return set_intersect(a, b).size() == a.size();
}

}  // namespace

TEST_CASE("point ordering and set algebra") {
  PointSet s{{2, 1}, {0, 0}, {2, 1}, {-1, 3}};
  sort_unique(s);
  CHECK(s.size() == 3);
  CHECK(s[0] == Point{-1, 3});
  CHECK(set_contains(s, Point{2, 1}));
  CHECK(!set_contains(s, Point{1, 2}));

  PointSet a{{0, 0}, {1, 0}}, b{{1, 0}, {2, 0}};
  CHECK(set_intersect(a, b) == PointSet{{1, 0}});
  CHECK(set_union(a, b) == PointSet{{0, 0}, {1, 0}, {2, 0}});
  CHECK(set_diff(a, b) == PointSet{{0, 0}});
}

TEST_CASE("half-disk at scale zero is the origin") {
  DiscreteDomain d = discretize(Shape::disk(0, 0, 0.5), 0.0);
  CHECK(d.pts == PointSet{{0, 0}});
}

TEST_CASE("unit disk at scale one matches brute force (13 points)") {
  DiscreteDomain d = discretize(Shape::unit_disk(), 1.0);
  CHECK(d.pts.size() == 13);
  CHECK(d.pts == brute_ball(std::exp(1.0) - 0.5));
}

TEST_CASE("unit disk at scale three matches brute-force count") {
  DiscreteDomain d = discretize(Shape::unit_disk(), 3.0);
  CHECK(d.pts == brute_ball(std::exp(3.0) - 0.5));
}

TEST_CASE("discretize rejects unbounded shapes") {
  CHECK_THROWS_WITH_AS(discretize(Shape::complement(Shape::unit_disk()), 1.0),
                       "unbounded discretization", std::runtime_error);
}

TEST_CASE("outer boundary basics") {
  CHECK(outer_boundary({{0, 0}}) == PointSet{{-1, 0}, {0, -1}, {0, 1}, {1, 0}});
  CHECK(outer_boundary({}).empty());
  PointSet two = outer_boundary({{0, 0}, {1, 0}});
  CHECK(two.size() == 6);
  CHECK(two == PointSet{{-1, 0}, {0, -1}, {0, 1}, {1, -1}, {1, 1}, {2, 0}});
  // disjointness from the set itself
  DiscreteDomain b2 = discretize(Shape::unit_disk(), 2.0);
  CHECK(set_intersect(outer_boundary(b2.pts), b2.pts).empty());
}

TEST_CASE("bulk distance functions") {
  const ShapePtr b = Shape::unit_disk();
  const ShapePtr b0 = Shape::bulk(b, 0.0);
  const ShapePtr bh = Shape::bulk(b, 0.5);
  const ShapePtr half = Shape::disk(0, 0, 0.5);
  for (double r : {0.0, 0.2, 0.45, 0.6, 0.9, 1.3}) {
    CHECK(b0->dist_to_complement(r, 0) == doctest::Approx(b->dist_to_complement(r, 0)));
    CHECK(bh->dist_to_complement(r, 0) == doctest::Approx(half->dist_to_complement(r, 0)));
    CHECK(bh->dist_to_set(0, r) == doctest::Approx(half->dist_to_set(0, r)));
  }
  // annulus 0.2 < |x| < 1 shrunk by 0.1 -> radii (0.3, 0.9)
  const ShapePtr ann = Shape::intersection({b, Shape::complement(Shape::disk(0, 0, 0.2))});
  const ShapePtr ann_bulk = Shape::bulk(ann, 0.1);
  auto expected = [](double r) { return std::max(0.0, std::min(r - 0.3, 0.9 - r)); };
  for (double r : {0.0, 0.25, 0.3, 0.5, 0.6, 0.85, 0.95, 1.2}) {
    CHECK(ann_bulk->dist_to_complement(0, r) == doctest::Approx(expected(r)));
  }
}

TEST_CASE("annulus domain and degenerate error") {
  const ShapePtr b = Shape::unit_disk();
  DiscreteDomain a = annulus_domain(b, 2.0, b, 0.0);
  // radii strictly between 1.5 (hole cutoff, ties kept but none integral)
  // and e^2 - 1/2
  PointSet expect = set_diff(brute_ball(std::exp(2.0) - 0.5), brute_ball(1.5));
  CHECK(a.pts == expect);
  CHECK_THROWS_WITH_AS(annulus_domain(b, 1.0, b, 1.0), "degenerate annulus", std::runtime_error);
}

TEST_CASE("complement precedence: scaled bulk of complement") {
  // ∂U_ℓ^{−,η} must parse as ∂(((U^-)^η)_ℓ): shrink the complement, then
  // discretize. For U = B(0,1), (U^-)^η = {|x| > 1+η}.
  const double eta = 0.25, ell = 2.0;
  const ShapePtr shrunk = Shape::bulk(Shape::complement(Shape::unit_disk()), eta);
  const double f = std::exp(-ell);
  const int box = 30;
  PointSet got;
  for (int x = -box; x <= box; ++x)
    for (int y = -box; y <= box; ++y)
      if (shrunk->dist_to_complement(f * x, f * y) > f / 2.0 - 1e-12) got.push_back(Point{x, y});
  sort_unique(got);
  PointSet expect;
  for (int x = -box; x <= box; ++x)
    for (int y = -box; y <= box; ++y)
      if (std::hypot(x, y) >= std::exp(ell) * (1 + eta) + 0.5) expect.push_back(Point{x, y});
  sort_unique(expect);
  CHECK(got == expect);
}

TEST_CASE("boundary split identity over a grid of domains and scales") {
  // outer_boundary(W_l ∪ W_l^-) = outer_boundary(W_l) ∪ outer_boundary(W_l^-),
  // compared inside a window wide enough that clipping cannot interfere
  std::vector<ShapePtr> shapes = {
      Shape::unit_disk(),
      Shape::disk(0.1, -0.2, 0.8),
      Shape::intersection({Shape::unit_disk(), Shape::complement(Shape::disk(0, 0, 0.3))}),
  };
  for (const auto& w : shapes) {
    for (double ell : {0.0, 1.0, 1.7, 2.5}) {
      const int box = static_cast<int>(std::ceil(w->bound_radius() * std::exp(ell))) + 10;
      PointSet wl = discretize(w, ell).pts;
      PointSet wlm = complement_window(w, ell, box);
      PointSet lhs = outer_boundary(set_union(wl, wlm));
      PointSet rhs = set_union(outer_boundary(wl), outer_boundary(wlm));
      // ignore the window rim, an artifact of clipping the unbounded side
      auto trim = [box](const PointSet& s) {
        PointSet out;
        for (Point p : s)
          if (std::abs(p.x) < box - 1 && std::abs(p.y) < box - 1) out.push_back(p);
        return out;
      };
      CHECK(trim(lhs) == trim(rhs));
    }
  }
}

TEST_CASE("scale containment: lattice balls inside shrunk domains") {
  // for U ∈ 𝔘_ε^η with n − l > −log ε: B_l ⊆ U_n^η
  const double eps = 0.4, eta = 0.1;
  const ShapePtr u = Shape::disk(0, 0, 2.0);  // comfortably contains B(0, eps)
  const double n = 4.0;
  for (double l : {0.0, 1.0, 2.0}) {
    if (!(n - l > -std::log(eps))) continue;
    PointSet bl = discretize(Shape::unit_disk(), l).pts;
    PointSet un_eta = discretize(Shape::bulk(u, eta), n).pts;
    CHECK(subset_of(bl, un_eta));
  }
  // for V ∈ 𝔙_ε with l − k > log(ζ + ε^{-1}): B_l^- ⊆ V_k^{-,ζ}
  const double zeta = 0.2, k = 0.0;
  const ShapePtr v = Shape::disk(0, 0, 1.5);
  const ShapePtr v_shrunk = Shape::bulk(Shape::complement(v), zeta);
  for (double l : {1.5, 2.0, 3.0}) {
    if (!(l - k > std::log(zeta + 1.0 / eps))) continue;
    const int box = static_cast<int>(std::exp(l) * 3) + 5;
    const double fk = std::exp(-k), fl = std::exp(-l);
    const ShapePtr bm = Shape::complement(Shape::unit_disk());
    size_t checked = 0;
    for (int x = -box; x <= box; ++x) {
      for (int y = -box; y <= box; ++y) {
        if (bm->dist_to_complement(fl * x, fl * y) > fl / 2.0 - 1e-12) {
          CHECK(v_shrunk->dist_to_complement(fk * x, fk * y) > fk / 2.0 - 1e-12);
          ++checked;
        }
      }
    }
    CHECK(checked > 0);
  }
}

TEST_CASE("discretize is monotone in the shape") {
  const ShapePtr small = Shape::disk(0.2, 0, 0.7);
  const ShapePtr big = Shape::unit_disk();  // contains the small disk
  for (double ell : {0.0, 1.0, 2.0, 2.9}) {
    CHECK(subset_of(discretize(small, ell).pts, discretize(big, ell).pts));
  }
}

TEST_CASE("point count approaches area times e^{2l}") {
  const ShapePtr b = Shape::unit_disk();
  const double area = M_PI;
  const double l = 5.0;
  const double ratio = discretize(b, l).pts.size() / std::exp(2 * l) / area;
  CHECK(std::abs(ratio - 1.0) < 0.05);
}

TEST_CASE("class membership checks") {
  DomainClassParams p;
  p.eps = 0.5;
  CHECK(check_class(Shape::unit_disk(), p, DomainClass::D_eps).ok);

  ClassCheckResult r = check_class(Shape::disk(0, 0, 0.1), p, DomainClass::D_eps);
  CHECK(!r.ok);
  bool found = false;
  for (const auto& s : r.reasons) found = found || s.find("B(0,eps)") != std::string::npos;
  CHECK(found);

  DomainClassParams q;
  q.eps = 0.2;
  q.eta = 0.0;
  const ShapePtr holed =
      Shape::intersection({Shape::unit_disk(), Shape::complement(Shape::disk(0, 0, 0.3))});
  CHECK(!check_class(holed, q, DomainClass::U_eps_eta).ok);

  // honest annulus-with-hole as a V-domain: complement stays connected
  DomainClassParams pv;
  pv.eps = 0.4;
  CHECK(check_class(Shape::disk(0, 0, 1.4), pv, DomainClass::V_eps).ok);
}

TEST_CASE("connectivity probe") {
  CHECK(is_connected({{0, 0}, {1, 0}, {1, 1}}));
  CHECK(!is_connected({{0, 0}, {2, 0}}));
  CHECK(is_connected({}));
}

TEST_CASE("shape json round trip") {
  const ShapePtr s = Shape::scale(
      Shape::bulk(Shape::intersection(
                      {Shape::unit_disk(),
                       Shape::complement(Shape::disk(0.1, 0.2, 0.3)),
                       Shape::union_of({Shape::disk(0, 0, 0.4), Shape::disk(0.5, 0, 0.2)})}),
                  0.05),
      -1.5);
  const nlohmann::json j = s->to_json();
  const ShapePtr back = Shape::from_json(j);
  CHECK(back->to_json() == j);
  // behavioral equality on a sample grid
  for (double x : {-0.3, 0.0, 0.1, 0.25}) {
    for (double y : {-0.2, 0.0, 0.15}) {
      CHECK(back->dist_to_complement(x, y) == doctest::Approx(s->dist_to_complement(x, y)));
    }
  }
  CHECK_THROWS_AS(Shape::from_json(nlohmann::json{{"cone", 1}}), std::runtime_error);
}
