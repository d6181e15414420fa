#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "ballot/gff.hpp"
#include "ballot/stats.hpp"

using namespace ballot;

namespace {

const double kSg = std::sqrt(2.0 / 3.14159265358979323846);

// small annulus used throughout: ball at depth n around a single-point hole
ModelBuild small_annulus(double n, const BoundaryFunc& u, const BoundaryFunc& v) {
  return build_model(Shape::unit_disk(), n, u, Shape::disk(0, 0, 1.3), 0.0, v);
}

}  // namespace

TEST_CASE("running centering scale") {
  CHECK(m_scale(0.0) == 0.0);
  CHECK(m_scale(1.0) == doctest::Approx(2.0 * kSg).epsilon(1e-12));
  // strictly increasing on a grid
  double prev = m_scale(0.25);
  for (double ell = 0.5; ell <= 40.0; ell += 0.25) {
    const double cur = m_scale(ell);
    CHECK(cur > prev);
    prev = cur;
  }
  CHECK_THROWS_AS(m_scale(-0.1), std::invalid_argument);
}

TEST_CASE("interpolated centering stays in the two-sided band") {
  CHECK(mhat(7.0, 7.0, 2.0) == doctest::Approx(m_scale(7.0)).epsilon(1e-12));
  CHECK(mhat(7.0, 2.0, 2.0) == doctest::Approx(m_scale(2.0)).epsilon(1e-12));
  CHECK(mhat(4.0, 4.0, 4.0) == doctest::Approx(m_scale(4.0)).epsilon(1e-12));
  CHECK_THROWS_AS(mhat(3.0, 4.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(mhat(3.0, -1.0, 0.0), std::invalid_argument);

  for (int n = 2; n <= 30; n += 2) {
    for (int k = 0; k < n; k += 2) {
      for (double l = k; l <= n; l += 0.5) {
        const double diff = mhat(n, l, k) - m_scale(l);
        const double upper = 1.5 * kSg * (log_plus(wedge3(n, l, k)) + 1.0);
        CHECK(diff >= -2.0 * kSg);
        CHECK(diff <= upper);
      }
    }
  }
}

TEST_CASE("shell count") {
  CHECK(t_count(10.0, 0.0, std::exp(-1.0), 0.0) == 8);
  CHECK(t_count(12.0, 2.0, std::exp(-1.0), 0.0) == 8);
  // fattening the hole by ζ eats shells
  CHECK(t_count(10.0, 0.0, std::exp(-1.0), 5.0) <= 8);
  CHECK_THROWS_AS(t_count(1.0, 2.0, 0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(t_count(5.0, 0.0, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(t_count(5.0, 0.0, 1.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(t_count(5.0, 0.0, 0.5, -1.0), std::invalid_argument);

  CHECK(wedge(10.0, 3.0) == 3.0);
  CHECK(wedge(10.0, 8.0) == 2.0);
  CHECK(wedge3(10.0, 4.0, 1.0) == 3.0);
}

TEST_CASE("membership test agrees with materialized discretization") {
  auto b = Shape::unit_disk();
  DiscreteDomain d = discretize(b, 2.0);
  for (int x = -9; x <= 9; ++x) {
    for (int y = -9; y <= 9; ++y) {
      Point p{x, y};
      CHECK(lattice_member(b, 2.0, p) == d.contains(p));
    }
  }
  // unbounded complements work without materialization
  auto vminus = Shape::complement(Shape::disk(0, 0, 1.3));
  CHECK(!lattice_member(vminus, 0.0, Point{1, 0}));
  CHECK(lattice_member(vminus, 0.0, Point{2, 0}));
}

TEST_CASE("annulus model with flat data") {
  auto mb = small_annulus(3.0, constant_fn(0.0), constant_fn(0.0));
  CHECK(mb.warnings.empty());
  const GFFModel& m = mb.model;
  CHECK(m.has_hole());

  // the hole blocks every lattice point within distance 1/2 of the disk:
  // the 3×3 block around the origin
  DiscreteDomain full = discretize(Shape::unit_disk(), 3.0);
  CHECK(m.domain().size() == full.size() - 9);
  CHECK(!m.domain().contains(Point{0, 0}));
  CHECK(!m.domain().contains(Point{1, 1}));
  CHECK(m.domain().contains(Point{2, 0}));

  // boundary values: −m(3) on the outer rim, −m(0) = 0 on the hole rim (the
  // 8 blocked points exposed to the annulus; the center is buried)
  const double m3 = m_scale(3.0);
  const PointSet& bd = m.solver().boundary();
  int outer = 0, hole = 0;
  for (size_t i = 0; i < bd.size(); ++i) {
    const double w = m.boundary_values()[static_cast<int64_t>(i)];
    if (std::abs(bd[i].x) <= 1 && std::abs(bd[i].y) <= 1) {
      CHECK(w == 0.0);
      ++hole;
    } else {
      CHECK(w == -m3);
      ++outer;
    }
  }
  CHECK(hole == 8);
  CHECK(outer > 50);
  CHECK(!set_contains(bd, Point{0, 0}));
  CHECK_THROWS_AS(m.mean_at(Point{0, 0}), std::out_of_range);

  // the mean is discrete-harmonic: every interior point averages its neighbors
  for (Point p : {Point{3, 2}, Point{-7, 0}, Point{2, 0}, Point{12, -9}}) {
    const double avg = 0.25 * (m.mean_at({p.x + 1, p.y}) + m.mean_at({p.x - 1, p.y}) +
                               m.mean_at({p.x, p.y + 1}) + m.mean_at({p.x, p.y - 1}));
    CHECK(m.mean_at(p) == doctest::Approx(avg).epsilon(1e-9));
  }
  CHECK_THROWS_AS(m.mean_at(Point{500, 500}), std::out_of_range);

  CHECK(mb.data.u_bar0 == 0.0);
  CHECK(mb.data.osc_u == 0.0);
  CHECK(mb.data.u_star == 0.0);
  CHECK(mb.data.v_bar_inf == 0.0);
  CHECK(mb.data.osc_v == 0.0);
  CHECK(mb.data.has_hole);
}

TEST_CASE("mean profile interpolates the centering between the rims") {
  // deep annulus: outer rim at −m(6), hole at 0; halfway (|x| = e^3) the mean
  // tracks the interpolated centering up to an O(1) lattice correction
  auto mb = build_model(Shape::unit_disk(), 6.0, constant_fn(0.0), Shape::disk(0, 0, 1.3), 0.0,
                        constant_fn(0.0));
  const GFFModel& m = mb.model;
  CHECK(m.domain().size() > 400000);  // exercises the iterative solver path
  const double at_mid = m.mean_at(Point{20, 0});
  CHECK(std::abs(at_mid + mhat(6.0, 3.0, 0.0)) < 1.5);
  // radial monotonicity toward the colder outer rim
  CHECK(m.mean_at(Point{5, 0}) > m.mean_at(Point{50, 0}));
  CHECK(m.mean_at(Point{50, 0}) > m.mean_at(Point{300, 0}));
}

TEST_CASE("boundary summaries for varying data") {
  // linear outer data is discrete-harmonic: the extension reproduces it, the
  // origin average vanishes, and the bulk oscillation is the exact spread
  auto u = [](Point p) { return 0.1 * p.x; };
  auto v = [](Point p) { return static_cast<double>(p.x); };
  auto mb = build_model(Shape::unit_disk(), 2.0, u, Shape::disk(0, 0, 1.9), 0.0, v, 0.3, 0.0);
  CHECK(std::abs(mb.data.u_bar0) < 1e-9);
  CHECK(mb.data.osc_u == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(mb.data.u_star == doctest::Approx(-1.6).epsilon(1e-8));
  // hole data is odd in x, so the average at infinity vanishes; the rim
  // oscillation is strictly positive
  CHECK(std::abs(mb.data.v_bar_inf) < 1e-9);
  CHECK(mb.data.osc_v > 0.1);
  CHECK(mb.data.v_star < mb.data.v_bar_inf);
}

TEST_CASE("singleton sampling matches the unit-variance law") {
  auto mb = build_model(Shape::disk(0, 0, 0.55), 0.0, constant_fn(0.0));
  const GFFModel& m = mb.model;
  CHECK(m.domain().size() == 1);
  CHECK(m.zero_boundary());

  const size_t trials = 100000;
  std::vector<double> draws;
  draws.reserve(trials);
  for (size_t t = 0; t < trials; ++t) draws.push_back(m.sample(42, t).interior[0]);
  MeanCi mc = mean_ci(draws);
  CHECK(std::abs(mc.mean) < 3.0 / std::sqrt(static_cast<double>(trials)));
  double ss = 0.0;
  for (double x : draws) ss += (x - mc.mean) * (x - mc.mean);
  const double var = ss / static_cast<double>(trials - 1);
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / static_cast<double>(trials - 1)));

  // deterministic in (seed, trial); distinct trials differ
  FieldSample a = m.sample(42, 7), b = m.sample(42, 7), c = m.sample(42, 8);
  CHECK(a.interior[0] == b.interior[0]);
  CHECK(a.interior[0] != c.interior[0]);
}

TEST_CASE("constant boundary pins the mean everywhere") {
  auto mb = small_annulus(2.0, constant_fn(m_scale(2.0) + 5.0), constant_fn(5.0));
  const GFFModel& m = mb.model;
  for (int64_t i = 0; i < m.mean().size(); ++i)
    CHECK(m.mean()[i] == doctest::Approx(5.0).epsilon(1e-9));

  const size_t trials = 2000;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(m.mean().size());
  for (size_t t = 0; t < trials; ++t) acc += m.sample(7, t).interior;
  acc /= static_cast<double>(trials);
  for (int64_t i = 0; i < acc.size(); ++i) CHECK(std::abs(acc[i] - 5.0) < 0.25);
}

TEST_CASE("small-domain covariance matches the Green function") {
  auto mb = build_model(Shape::disk(0, 0, 3.7), 0.0, constant_fn(0.0));
  const GFFModel& m = mb.model;
  const int64_t nd = m.solver().size();
  CHECK(nd <= 50);
  CHECK(m.zero_boundary());

  Eigen::MatrixXd g(nd, nd);
  const PointSet& pts = m.domain().pts;
  for (int64_t j = 0; j < nd; ++j) g.col(j) = m.green().green_column(pts[j]);

  const size_t trials = 100000;
  Eigen::MatrixXd sum2 = Eigen::MatrixXd::Zero(nd, nd);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(nd);
  std::vector<double> at_origin;
  at_origin.reserve(trials);
  const int64_t i0 = m.solver().index_of(Point{0, 0});
  for (size_t t = 0; t < trials; ++t) {
    FieldSample s = m.sample(1234, t);
    sum += s.interior;
    sum2 += s.interior * s.interior.transpose();
    at_origin.push_back(s.interior[i0]);
  }
  const double n = static_cast<double>(trials);
  Eigen::MatrixXd cov = (sum2 - sum * sum.transpose() / n) / (n - 1.0);
  for (int64_t i = 0; i < nd; ++i) {
    for (int64_t j = 0; j <= i; ++j) {
      const double se = std::sqrt((g(i, i) * g(j, j) + g(i, j) * g(i, j)) / n);
      CHECK(std::abs(cov(i, j) - g(i, j)) < 4.0 * se);
    }
  }

  // a fixed linear functional of the field is exactly Gaussian
  KsResult ks = ks_test_normal(at_origin, 0.0, std::sqrt(g(i0, i0)));
  CHECK(ks.p_value > 1e-3);
}

TEST_CASE("conditional split into a subdomain") {
  auto mb = build_model(Shape::disk(0, 0, 3.7), 0.0, constant_fn(0.0));
  const GFFModel& m = mb.model;
  PointSet sub = discretize(Shape::disk(0, 0, 2.2), 0.0).pts;

  // exact per-sample identities
  FieldSample s = m.sample(99, 0);
  GibbsMarkov gm = gibbs_markov(m, sub, s);
  const PointSet& sd = gm.sub->domain();
  for (size_t i = 0; i < sd.size(); ++i) {
    const int64_t mi = m.solver().index_of(sd[i]);
    CHECK(gm.phi[mi] + gm.residual[static_cast<int64_t>(i)] ==
          doctest::Approx(s.interior[mi]).epsilon(1e-12));
  }
  // phi equals the sample off the subdomain and is harmonic inside it
  for (Point p : m.domain().pts) {
    const int64_t mi = m.solver().index_of(p);
    if (!set_contains(sd, p)) CHECK(gm.phi[mi] == s.interior[mi]);
  }
  auto phi_at = [&](Point p) {
    const int64_t mi = m.solver().index_of(p);
    return mi >= 0 ? gm.phi[mi] : m.value_at(s, p);
  };
  for (Point p : sd) {
    const double avg = 0.25 * (phi_at({p.x + 1, p.y}) + phi_at({p.x - 1, p.y}) +
                               phi_at({p.x, p.y + 1}) + phi_at({p.x, p.y - 1}));
    CHECK(phi_at(p) == doctest::Approx(avg).epsilon(1e-9));
  }

  // whole-domain split degenerates to mean + fluctuation
  GibbsMarkov whole = gibbs_markov(m, m.domain().pts, s);
  for (int64_t i = 0; i < whole.phi.size(); ++i) {
    CHECK(std::abs(whole.phi[i]) < 1e-9);  // zero boundary data
    CHECK(whole.residual[i] == doctest::Approx(s.interior[i]).epsilon(1e-9));
  }

  PointSet bad = sub;
  bad.push_back(Point{100, 100});
  CHECK_THROWS_AS(gibbs_markov(m, bad, s), std::invalid_argument);
}

TEST_CASE("conditional split: residual law, orthogonality, recombination") {
  auto mb = build_model(Shape::disk(0, 0, 3.7), 0.0, constant_fn(0.0));
  const GFFModel& m = mb.model;
  const int64_t nd = m.solver().size();
  PointSet sub = discretize(Shape::disk(0, 0, 2.2), 0.0).pts;

  const PointSet& pts = m.domain().pts;
  Eigen::MatrixXd g(nd, nd);
  for (int64_t j = 0; j < nd; ++j) g.col(j) = m.green().green_column(pts[j]);

  GibbsMarkov probe = gibbs_markov(m, sub, m.sample(1, 0));
  const DirichletSolver& ss = *probe.sub;
  const int64_t ns = ss.size();
  GreenOperator sub_green(DiscreteDomain{ss.domain(), 0.0, ""});
  Eigen::MatrixXd gs(ns, ns);
  for (int64_t j = 0; j < ns; ++j) gs.col(j) = sub_green.green_column(ss.domain()[j]);

  const size_t trials = 100000;
  Eigen::MatrixXd r_sum2 = Eigen::MatrixXd::Zero(ns, ns);
  Eigen::VectorXd r_sum = Eigen::VectorXd::Zero(ns);
  Eigen::MatrixXd x_sum2 = Eigen::MatrixXd::Zero(nd, ns);  // phi × residual
  Eigen::VectorXd p_sum = Eigen::VectorXd::Zero(nd);
  Eigen::MatrixXd c_sum2 = Eigen::MatrixXd::Zero(nd, nd);  // recombined field
  Eigen::VectorXd c_sum = Eigen::VectorXd::Zero(nd);
  const uint64_t fresh_row = derive_row_seed(555, 2);
  for (size_t t = 0; t < trials; ++t) {
    GibbsMarkov gm = gibbs_markov(m, sub, m.sample(555, t));
    r_sum += gm.residual;
    r_sum2 += gm.residual * gm.residual.transpose();
    x_sum2 += gm.phi * gm.residual.transpose();
    p_sum += gm.phi;
    // recombine with an independently resampled residual
    Rng rng(derive_trial_seed(fresh_row, t));
    Eigen::VectorXd z(ns);
    for (int64_t i = 0; i < ns; ++i) z[i] = rng.next_normal();
    Eigen::VectorXd fresh = ss.white_to_sample(z);
    Eigen::VectorXd rec = gm.phi;
    for (int64_t i = 0; i < ns; ++i) rec[m.solver().index_of(ss.domain()[i])] += fresh[i];
    c_sum += rec;
    c_sum2 += rec * rec.transpose();
  }
  const double n = static_cast<double>(trials);
  Eigen::MatrixXd r_cov = (r_sum2 - r_sum * r_sum.transpose() / n) / (n - 1.0);
  Eigen::MatrixXd x_cov = (x_sum2 - p_sum * r_sum.transpose() / n) / (n - 1.0);
  Eigen::MatrixXd c_cov = (c_sum2 - c_sum * c_sum.transpose() / n) / (n - 1.0);

  // residual covariance is the subdomain Green function
  for (int64_t i = 0; i < ns; ++i) {
    for (int64_t j = 0; j <= i; ++j) {
      const double se = std::sqrt((gs(i, i) * gs(j, j) + gs(i, j) * gs(i, j)) / n);
      CHECK(std::abs(r_cov(i, j) - gs(i, j)) < 4.0 * se);
    }
  }
  // interpolation and residual are uncorrelated; g(i,i) bounds Var(phi_i)
  for (int64_t i = 0; i < nd; ++i) {
    for (int64_t j = 0; j < ns; ++j) {
      const double se = std::sqrt(g(i, i) * gs(j, j) / n);
      CHECK(std::abs(x_cov(i, j)) < 4.0 * se + 1e-12);
    }
  }
  // recombined field has the original covariance
  for (int64_t i = 0; i < nd; ++i) {
    for (int64_t j = 0; j <= i; ++j) {
      const double se = std::sqrt((g(i, i) * g(j, j) + g(i, j) * g(i, j)) / n);
      CHECK(std::abs(c_cov(i, j) - g(i, j)) < 4.0 * se);
    }
  }
}

TEST_CASE("maximum summary over a shallow ball") {
  auto mb = build_model(Shape::unit_disk(), 3.0, constant_fn(m_scale(3.0)));
  const GFFModel& m = mb.model;
  CHECK(m.zero_boundary());

  MaxStatistics st = max_statistics(m, m.domain().pts, 10000, 2024);
  CHECK(std::abs(st.mean) < 2.5);
  CHECK(st.right_tail(2.0) > st.right_tail(4.0));
  // upward excursions of the maximum are far more likely than downward ones
  CHECK(st.left_tail(2.5) < st.right_tail(2.5));
  CHECK(st.quantile(0.1) <= st.quantile(0.5));
  CHECK(st.quantile(0.5) <= st.quantile(0.9));

  auto flat = small_annulus(2.0, constant_fn(0.0), constant_fn(0.0));
  CHECK_THROWS_AS(max_statistics(flat.model, flat.model.domain().pts, 10, 1),
                  std::invalid_argument);
  PointSet off{Point{1000, 0}};
  CHECK_THROWS_AS(max_statistics(m, off, 10, 1), std::invalid_argument);
}

TEST_CASE("sample export round-trips") {
  auto mb = small_annulus(2.0, constant_fn(0.0), constant_fn(0.0));
  const GFFModel& m = mb.model;
  FieldSample s = m.sample(31, 4);
  const std::string base = "gff_export_test";
  export_sample(m, s, base);

  std::ifstream bin(base + ".bin", std::ios::binary);
  REQUIRE(bin.good());
  std::vector<double> back(static_cast<size_t>(s.interior.size() + s.boundary.size()));
  bin.read(reinterpret_cast<char*>(back.data()),
           static_cast<std::streamsize>(back.size() * sizeof(double)));
  REQUIRE(bin.gcount() == static_cast<std::streamsize>(back.size() * sizeof(double)));
  for (int64_t i = 0; i < s.interior.size(); ++i)
    CHECK(back[static_cast<size_t>(i)] == s.interior[i]);
  for (int64_t i = 0; i < s.boundary.size(); ++i)
    CHECK(back[static_cast<size_t>(s.interior.size() + i)] == s.boundary[i]);

  nlohmann::json j;
  std::ifstream js(base + ".json");
  REQUIRE(js.good());
  js >> j;
  CHECK(j.at("domain_hash").get<uint64_t>() == domain_hash(m.domain()));
  CHECK(j.at("seed").get<uint64_t>() == 31);
  CHECK(j.at("trial").get<uint64_t>() == 4);
  CHECK(j.at("interior_count").get<int64_t>() == s.interior.size());

  // fingerprints separate different builds
  auto other = build_model(Shape::disk(0, 0, 3.7), 0.0, constant_fn(0.0));
  CHECK(domain_hash(other.model.domain()) != domain_hash(m.domain()));
  std::remove((base + ".bin").c_str());
  std::remove((base + ".json").c_str());
}
