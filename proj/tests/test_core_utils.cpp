#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "ballot/csvio.hpp"
#include "ballot/parallel.hpp"
#include "ballot/rng.hpp"
#include "ballot/stats.hpp"

using namespace ballot;

TEST_CASE("rng streams are deterministic and decorrelated") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  // different seeds diverge immediately
  Rng a2(42);
  CHECK(a2.next_u64() != c.next_u64());
  // derived seeds differ across rows and trials
  const uint64_t master = 7;
  CHECK(derive_row_seed(master, 0) != derive_row_seed(master, 1));
  CHECK(derive_trial_seed(derive_row_seed(master, 0), 5) !=
        derive_trial_seed(derive_row_seed(master, 1), 5));
  CHECK(derive_trial_seed(derive_row_seed(master, 0), 5) !=
        derive_trial_seed(derive_row_seed(master, 0), 6));
}

TEST_CASE("uniform and normal moments") {
  Rng r(2024);
  const int n = 200000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0, sn4 = 0;
  for (int i = 0; i < n; ++i) {
    double u = r.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    su += u;
    su2 += u * u;
    double z = r.next_normal();
    sn += z;
    sn2 += z * z;
    sn4 += z * z * z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(su2 / n == doctest::Approx(1.0 / 3).epsilon(0.01));
  CHECK(sn / n == doctest::Approx(0.0).scale(1).epsilon(0.01));
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(sn4 / n == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("normal tail via exact cdf") {
  // P(Z > 2) from simulation against std_normal_cdf
  Rng r(7);
  const int n = 400000;
  int hits = 0;
  for (int i = 0; i < n; ++i)
    if (r.next_normal() > 2.0) ++hits;
  const double p = 1.0 - std_normal_cdf(2.0);
  CHECK(static_cast<double>(hits) / n == doctest::Approx(p).epsilon(0.08));
}

TEST_CASE("exponential sampler") {
  Rng r(11);
  const int n = 200000;
  double s = 0;
  for (int i = 0; i < n; ++i) s += r.next_exponential();
  CHECK(s / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("mean confidence interval on a known sample") {
  std::vector<double> xs{1, 2, 3, 4, 5};
  MeanCi ci = mean_ci(xs);
  CHECK(ci.mean == doctest::Approx(3.0));
  // sample sd = sqrt(2.5), se = sqrt(0.5)
  CHECK(ci.stderr_ == doctest::Approx(std::sqrt(0.5)));
  CHECK(ci.lo == doctest::Approx(3.0 - 1.959963984540054 * std::sqrt(0.5)));
  CHECK(ci.n == 5);
}

TEST_CASE("wilson interval matches a hand-checked value") {
  // k=8, n=10, z=1.96: standard worked example
  ProbCi ci = wilson_ci(8, 10, 1.959963984540054);
  CHECK(ci.p_hat == doctest::Approx(0.8));
  CHECK(ci.lo == doctest::Approx(0.4901625).epsilon(1e-4));
  CHECK(ci.hi == doctest::Approx(0.9433178).epsilon(1e-4));
  CHECK_THROWS_AS(wilson_ci(0, 0, 1.96), std::invalid_argument);
  // degenerate counts stay inside [0,1]
  ProbCi z = wilson_ci(0, 50, 1.96);
  CHECK(z.lo == doctest::Approx(0.0));
  CHECK(z.hi > 0.0);
}

TEST_CASE("normality test accepts normals and rejects uniforms") {
  Rng r(5);
  std::vector<double> zs(2000), us(2000);
  for (auto& z : zs) z = r.next_normal();
  for (auto& u : us) u = r.next_double();
  CHECK(ks_test_normal(zs, 0.0, 1.0).p_value > 0.01);
  CHECK(ks_test_normal(us, 0.5, std::sqrt(1.0 / 12)).p_value < 1e-6);
}

TEST_CASE("median") {
  std::vector<double> odd{5, 1, 3};
  CHECK(median_of(odd) == doctest::Approx(3.0));
  std::vector<double> even{4, 1, 3, 2};
  CHECK(median_of(even) == doctest::Approx(2.5));
}

TEST_CASE("csv escaping follows the quoting rules") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("with,comma") == "\"with,comma\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_escape("line\nbreak") == "\"line\nbreak\"");
  CHECK(csv_num(0.1) == "0.1");
  // round-trip precision
  CHECK(std::stod(csv_num(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("csv writer emits header and quoted rows") {
  std::ostringstream os;
  {
    CsvWriter w(os, {"name", "value"});
    w.write_row_strings({"a,b", "1"});
    w.write_row(std::vector<double>{2.5, 3.0});
  }
  CHECK(os.str() == "name,value\n\"a,b\",1\n2.5,3\n");
}

TEST_CASE("trial runner gives identical results for any thread count") {
  const int n = 5000;
  auto work = [](size_t t, std::vector<double>& out) {
    Rng r(derive_trial_seed(123, t));
    double acc = 0;
    for (int i = 0; i < 50; ++i) acc += r.next_normal();
    out[t] = acc;
  };
  std::vector<double> serial(n), one(n), eight(n);
  run_trials_serial(n, [&](size_t t) { work(t, serial); });
  run_trials(n, 1, [&](size_t t) { work(t, one); });
  run_trials(n, 8, [&](size_t t) { work(t, eight); });
  CHECK(serial == one);
  CHECK(serial == eight);
}
