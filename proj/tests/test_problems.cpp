#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "bode/acquisition.hpp"
#include "bode/problems.hpp"
#include "bode/quadrature.hpp"
#include "bode/rng.hpp"

using bode::Problem;
using bode::Vector;

namespace {

Vector vec(std::initializer_list<double> vals) {
  Vector v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

void write_script(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  out << "#!/bin/sh\n" << body;
  out.close();
  std::string cmd = "chmod +x " + path;
  REQUIRE(std::system(cmd.c_str()) == 0);
}

}  // namespace

TEST_CASE("f1: endpoint value and range") {
  CHECK(bode::f1(0.0) == doctest::Approx(3.970820).epsilon(1e-6));
  CHECK(bode::f1(0.0) ==
        doctest::Approx(4.0 * (1.0 - std::sin(8.0 * std::exp(-7.0)))).epsilon(1e-14));
  for (int i = 0; i <= 500; ++i) {
    const double v = bode::f1(i / 500.0);
    CHECK(v >= 0.0);
    CHECK(v <= 8.0);
  }
}

TEST_CASE("f2: peak value and mirror symmetry") {
  const double expected =
      (1.0 + std::exp(-72.0)) / (0.05 * std::sqrt(2.0 * 3.14159265358979323846));
  CHECK(bode::f2(0.2) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(bode::f2(0.2) == doctest::Approx(7.978846).epsilon(1e-6));
  for (double x : {0.1, 0.27, 0.42})
    CHECK(bode::f2(x) == doctest::Approx(bode::f2(1.0 - x)).epsilon(1e-12));
}

TEST_CASE("f3: hand-evaluated points and the sqrt domain boundary") {
  CHECK(bode::f3(vec({2.0, 0.5, 0.5})) == doctest::Approx(17.0).epsilon(1e-12));
  CHECK(bode::f3(vec({0.0, 0.0, 0.0})) == doctest::Approx(41.0).epsilon(1e-12));
  // x2 = 0.75 zeroes the middle term.
  const double at = bode::f3(vec({1.0, 0.75, 0.0}));
  const double a = 1.0 + 8.0 * 0.75 - 8.0 * 0.5625 - 2.0;
  CHECK(at == doctest::Approx(4.0 * a * a + 16.0).epsilon(1e-12));
  CHECK_THROWS_AS(bode::f3(vec({0.0, 0.0, -1.5})), bode::evaluation_error);
}

TEST_CASE("f4: hand-evaluated points and sine roots") {
  CHECK(bode::f4(vec({0.0, 0.3, 0.5, 0.2, 0.4})) == doctest::Approx(409.0).epsilon(1e-12));
  CHECK(bode::f4(vec({0.0, 0.9, 0.5, 0.0, 0.0})) == doctest::Approx(405.0).epsilon(1e-12));
  CHECK(bode::f4(vec({1.0, 1.0, 1.0, 1.0, 1.0})) == doctest::Approx(335.0).epsilon(1e-9));
}

TEST_CASE("true_qoi_oracle: f2 integral and tail mass") {
  const Problem p = bode::make_builtin_problem("f2");
  const auto res = bode::true_qoi_oracle(p);
  CHECK(res.converged);
  CHECK(res.error_estimate < 1e-8);
  // Each bump loses Phi(-4) of mass outside [0,1], so the exact average is
  // 2 - 2 * Phi(-4), within 1e-4 of the reported 2.0.
  const double phi_m4 = 0.5 * std::erfc(4.0 / std::sqrt(2.0));
  CHECK(res.value == doctest::Approx(2.0 - 2.0 * phi_m4).epsilon(1e-9));
  CHECK(std::abs(res.value - 2.0) < 1e-4);
}

TEST_CASE("true_qoi_oracle: constant function is exact at any budget") {
  Problem p;
  p.name = "const";
  p.domain = {{-1.0, 3.0}, {0.0, 2.0}};
  p.builtin = [](const Vector&) { return 4.25; };
  const auto res = bode::true_qoi_oracle(p);
  CHECK(res.converged);
  CHECK(res.value == doctest::Approx(4.25).epsilon(1e-14));
}

TEST_CASE("true_qoi_oracle: quadrature and LHS averaging agree on f1-f3") {
  for (const char* name : {"f1", "f2", "f3"}) {
    const Problem p = bode::make_builtin_problem(name);
    const auto quad = bode::true_qoi_oracle(p);
    REQUIRE(quad.converged);

    // Independent LHS average with a standard error.
    const long m = 1L << 16;
    const bode::Matrix U = bode::lhs(static_cast<int>(m), p.dim(), 991);
    double mean = 0.0;
    std::vector<double> vals(m);
    for (long i = 0; i < m; ++i) {
      vals[i] = p.evaluate(p.to_raw(U.row(i)));
      mean += vals[i];
    }
    mean /= static_cast<double>(m);
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m));
    CHECK(std::abs(quad.value - mean) < 3.0 * se + 1e-9);
  }
}

TEST_CASE("true_qoi_oracle: f4 uses the LHS average with a small standard error") {
  const Problem p = bode::make_builtin_problem("f4");
  const auto res = bode::true_qoi_oracle(p);
  CHECK(res.converged);
  CHECK(res.n_evals >= (1L << 16));
  CHECK(res.error_estimate < 0.5);
  CHECK(res.value > 300.0);  // dominated by the 20 (x3 - 5)^2 term
  CHECK(res.value < 500.0);
}

TEST_CASE("external_blackbox: echo, exit status, parse failure, timeout") {
  const std::string dir = "/tmp/bode_test_ext";
  std::string mk = "mkdir -p " + dir;
  REQUIRE(std::system(mk.c_str()) == 0);

  write_script(dir + "/echo15.sh", "cat > /dev/null\necho 1.5\n");
  bode::ExternalCommand ok{{dir + "/echo15.sh"}, 10.0};
  CHECK(bode::external_blackbox(ok, vec({0.3})) == 1.5);

  write_script(dir + "/fail.sh", "cat > /dev/null\nexit 3\n");
  bode::ExternalCommand fail{{dir + "/fail.sh"}, 10.0};
  CHECK_THROWS_AS(bode::external_blackbox(fail, vec({0.3})), bode::evaluation_error);
  try {
    bode::external_blackbox(fail, vec({0.3}));
  } catch (const bode::evaluation_error& e) {
    CHECK(e.kind == bode::evaluation_error::Kind::exit_status);
  }

  write_script(dir + "/garbage.sh", "cat > /dev/null\necho not-a-number\n");
  bode::ExternalCommand garbage{{dir + "/garbage.sh"}, 10.0};
  try {
    bode::external_blackbox(garbage, vec({0.3}));
    CHECK(false);
  } catch (const bode::evaluation_error& e) {
    CHECK(e.kind == bode::evaluation_error::Kind::parse);
  }

  write_script(dir + "/slow.sh", "cat > /dev/null\nsleep 30\necho 1\n");
  bode::ExternalCommand slow{{dir + "/slow.sh"}, 0.5};
  try {
    bode::external_blackbox(slow, vec({0.3}));
    CHECK(false);
  } catch (const bode::evaluation_error& e) {
    CHECK(e.kind == bode::evaluation_error::Kind::timeout);
  }

  bode::ExternalCommand missing{{dir + "/does_not_exist.sh"}, 10.0};
  try {
    bode::external_blackbox(missing, vec({0.3}));
    CHECK(false);
  } catch (const bode::evaluation_error& e) {
    CHECK(e.kind == bode::evaluation_error::Kind::spawn);
  }
}

TEST_CASE("external_blackbox: full-precision coordinates reach the child") {
  const std::string dir = "/tmp/bode_test_ext";
  REQUIRE(std::system(("mkdir -p " + dir).c_str()) == 0);
  // The child echoes its input back; the round trip must be bit exact.
  write_script(dir + "/identity.sh", "read x\necho $x\n");
  bode::ExternalCommand identity{{dir + "/identity.sh"}, 10.0};
  const double x = 0.12345678901234567;
  CHECK(bode::external_blackbox(identity, Vector::Constant(1, x)) == x);
}

TEST_CASE("f3_paper: published domain clips the sqrt boundary instead of failing") {
  const Problem p = bode::make_builtin_problem("f3_paper");
  CHECK(p.domain[0].first == -2.0);
  CHECK(p.domain[2].second == 6.0);
  CHECK(std::isfinite(p.evaluate(vec({0.0, 0.0, -2.0}))));
  CHECK(p.evaluate(vec({2.0, 0.5, 0.5})) == doctest::Approx(17.0).epsilon(1e-12));
}

TEST_CASE("problem coordinate maps are inverse affine transforms") {
  const Problem p = bode::make_builtin_problem("f3_paper");
  bode::rng::Rng rng(71);
  for (int t = 0; t < 20; ++t) {
    Vector u(3);
    for (int j = 0; j < 3; ++j) u[j] = rng.uniform01();
    const Vector raw = p.to_raw(u);
    for (int j = 0; j < 3; ++j) {
      CHECK(raw[j] >= -2.0);
      CHECK(raw[j] <= 6.0);
    }
    const Vector back = p.to_unit(raw);
    for (int j = 0; j < 3; ++j) CHECK(back[j] == doctest::Approx(u[j]).epsilon(1e-14));
  }
}
