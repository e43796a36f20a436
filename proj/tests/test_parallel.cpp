#include <doctest.h>

#include <cmath>
#include <vector>

#include "bode/acquisition.hpp"
#include "bode/engine.hpp"
#include "bode/hyper.hpp"
#include "bode/parallel.hpp"
#include "bode/qoi.hpp"
#include "oracles.hpp"

using bode::Matrix;
using bode::Vector;
using bode::exec::Mode;

namespace {

// Restores the previous execution mode when the scope ends.
struct ModeGuard {
  Mode saved = bode::exec::mode();
  ~ModeGuard() { bode::exec::set_mode(saved); }
};

template <class F>
auto with_mode(Mode m, F&& f) {
  ModeGuard guard;
  bode::exec::set_mode(m);
  return f();
}

}  // namespace

TEST_CASE("parallel_sum: matches a plain serial loop exactly") {
  ModeGuard guard;
  const auto term = [](std::ptrdiff_t i) {
    return std::sin(0.001 * static_cast<double>(i)) / (1.0 + static_cast<double>(i % 97));
  };
  for (std::ptrdiff_t n : {0L, 1L, 7L, 2048L, 2049L, 100000L}) {
    // Reference: fixed 2048-wide chunks accumulated in order, by hand.
    double expected = 0.0;
    for (std::ptrdiff_t lo = 0; lo < n; lo += 2048) {
      double chunk = 0.0;
      for (std::ptrdiff_t i = lo; i < std::min(n, lo + 2048); ++i) chunk += term(i);
      expected += chunk;
    }
    bode::exec::set_mode(Mode::serial);
    const double serial = bode::exec::parallel_sum(n, term);
    bode::exec::set_mode(Mode::openmp);
    const double openmp = bode::exec::parallel_sum(n, term);
    CHECK(serial == expected);
    CHECK(openmp == expected);
  }
}

TEST_CASE("parallel_for: covers every index exactly once in both modes") {
  ModeGuard guard;
  for (Mode m : {Mode::serial, Mode::openmp}) {
    bode::exec::set_mode(m);
    std::vector<int> hits(1000, 0);
    bode::exec::parallel_for(1000, [&](std::ptrdiff_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
  }
}

TEST_CASE("parallel_for: exceptions from the body propagate") {
  ModeGuard guard;
  for (Mode m : {Mode::serial, Mode::openmp}) {
    bode::exec::set_mode(m);
    CHECK_THROWS_AS(bode::exec::parallel_for(64,
                                             [&](std::ptrdiff_t i) {
                                               if (i == 13) throw bode::contract_error("boom");
                                             }),
                    bode::contract_error);
  }
}

TEST_CASE("sample_posterior: serial and OpenMP paths are bit-identical") {
  bode::rng::Rng rng(501);
  const auto inst = oracle::random_instance(rng, 2, 8, 0.1, 0.8);
  bode::PriorSpec prior;
  bode::McmcSettings settings;
  settings.n_steps = 200;
  settings.burn_in = 100;
  settings.seed = 77;

  const auto serial = with_mode(Mode::serial, [&] {
    return bode::sample_posterior(inst.dataset, prior, settings);
  });
  const auto openmp = with_mode(Mode::openmp, [&] {
    return bode::sample_posterior(inst.dataset, prior, settings);
  });
  REQUIRE(serial.samples.size() == openmp.samples.size());
  for (std::size_t i = 0; i < serial.samples.size(); ++i) {
    CHECK(serial.samples[i].kernel.s2 == openmp.samples[i].kernel.s2);
    CHECK(serial.samples[i].kernel.lengthscales == openmp.samples[i].kernel.lengthscales);
  }
  CHECK(serial.acceptance_rate == openmp.acceptance_rate);
  CHECK(serial.last_walker_state == openmp.last_walker_state);
}

TEST_CASE("ekld batch over candidates: serial and OpenMP paths are bit-identical") {
  bode::rng::Rng rng(502);
  const auto inst = oracle::random_instance(rng, 2, 10, 0.1, 0.6);
  std::vector<bode::GPState> states;
  for (int s = 0; s < 24; ++s) {
    bode::HyperSample t = inst.theta;
    t.kernel.s2 = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
    states.push_back(bode::condition(inst.dataset, t));
  }
  const Matrix candidates = bode::lhs(128, 2, 21);

  const auto eval_all = [&] {
    std::vector<bode::QoiContext> ctxs;
    ctxs.reserve(states.size());
    for (const auto& s : states) ctxs.emplace_back(s);
    Vector out(candidates.rows());
    for (Eigen::Index i = 0; i < candidates.rows(); ++i)
      out[i] = bode::ekld(std::span<const bode::QoiContext>(ctxs), candidates.row(i)).mean_gain;
    return out;
  };
  const Vector serial = with_mode(Mode::serial, eval_all);
  const Vector openmp = with_mode(Mode::openmp, eval_all);
  CHECK(serial == openmp);
}

TEST_CASE("oracle LHS average: serial and OpenMP paths are bit-identical") {
  const bode::Problem p = bode::make_builtin_problem("f4");
  const auto serial = with_mode(Mode::serial, [&] { return bode::true_qoi_oracle(p); });
  const auto openmp = with_mode(Mode::openmp, [&] { return bode::true_qoi_oracle(p); });
  CHECK(serial.value == openmp.value);
  CHECK(serial.error_estimate == openmp.error_estimate);
}

TEST_CASE("full run: serial and OpenMP paths produce identical records") {
  const bode::Problem p = bode::make_builtin_problem("f2");
  bode::EngineConfig cfg;
  cfg.n_initial = 3;
  cfg.n_max = 6;
  cfg.master_seed = 13;
  cfg.mcmc.n_steps = 120;
  cfg.mcmc.burn_in = 60;
  cfg.mcmc.target_samples = 30;
  cfg.bgo.t_max = 8;

  const auto serial = with_mode(Mode::serial, [&] { return bode::run(p, cfg); });
  const auto openmp = with_mode(Mode::openmp, [&] { return bode::run(p, cfg); });
  REQUIRE(serial.iterations.size() == openmp.iterations.size());
  for (std::size_t i = 0; i < serial.iterations.size(); ++i) {
    CHECK(serial.iterations[i].x_unit == openmp.iterations[i].x_unit);
    CHECK(serial.iterations[i].y_raw == openmp.iterations[i].y_raw);
    CHECK(serial.iterations[i].qoi_mean == openmp.iterations[i].qoi_mean);
    CHECK(serial.iterations[i].max_mean_ekld == openmp.iterations[i].max_mean_ekld);
  }
  CHECK(serial.final_belief->qoi_mean == openmp.final_belief->qoi_mean);
}
