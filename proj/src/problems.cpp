#include "bode/problems.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "bode/acquisition.hpp"
#include "bode/parallel.hpp"
#include "bode/quadrature.hpp"
#include "bode/rng.hpp"

namespace bode {

void Problem::validate() const {
  if (domain.empty()) throw contract_error("Problem: empty domain");
  for (const auto& [lo, hi] : domain)
    if (!(lo < hi)) throw contract_error("Problem: each dimension needs lower < upper");
  if (!builtin && !external) throw contract_error("Problem: no evaluator configured");
}

Vector Problem::to_raw(const Eigen::Ref<const Vector>& x_unit) const {
  Vector r(x_unit.size());
  for (Eigen::Index j = 0; j < x_unit.size(); ++j)
    r[j] = domain[j].first + (domain[j].second - domain[j].first) * x_unit[j];
  return r;
}

Vector Problem::to_unit(const Eigen::Ref<const Vector>& x_raw) const {
  Vector u(x_raw.size());
  for (Eigen::Index j = 0; j < x_raw.size(); ++j)
    u[j] = (x_raw[j] - domain[j].first) / (domain[j].second - domain[j].first);
  return u;
}

double Problem::domain_volume() const {
  double v = 1.0;
  for (const auto& [lo, hi] : domain) v *= hi - lo;
  return v;
}

double Problem::evaluate(const Eigen::Ref<const Vector>& x_raw) const {
  if (x_raw.size() != dim()) throw contract_error("Problem::evaluate: dimension mismatch");
  if (external) return external_blackbox(*external, x_raw);
  return builtin(x_raw);
}

double f1(double x) { return 4.0 * (1.0 - std::sin(6.0 * x + 8.0 * std::exp(6.0 * x - 7.0))); }

double f2(double x) {
  const auto pdf = [](double t, double m, double s) {
    const double z = (t - m) / s;
    return std::exp(-0.5 * (z * z)) / (s * std::sqrt(2.0 * 3.14159265358979323846));
  };
  return pdf(x, 0.2, 0.05) + pdf(x, 0.8, 0.05);
}

double f3(const Vector& x) {
  if (x.size() != 3) throw contract_error("f3: expects 3 inputs");
  if (x[2] < -1.0)
    throw evaluation_error(evaluation_error::Kind::domain,
                           "f3: sqrt(x3 + 1) undefined for x3 < -1");
  const double a = x[0] + 8.0 * x[1] - 8.0 * x[1] * x[1] - 2.0;
  const double b = 3.0 - 4.0 * x[1];
  const double c = 2.0 * x[2] - 1.0;
  return 4.0 * a * a + b * b + 16.0 * std::sqrt(x[2] + 1.0) * c * c;
}

double f4(const Vector& x) {
  if (x.size() != 5) throw contract_error("f4: expects 5 inputs");
  return 10.0 * std::sin(3.14159265358979323846 * x[0] * x[1]) +
         20.0 * (x[2] - 5.0) * (x[2] - 5.0) + 10.0 * x[3] + 5.0 * x[4];
}

Problem make_builtin_problem(const std::string& name) {
  Problem p;
  p.name = name;
  if (name == "f1") {
    p.domain = {{0.0, 1.0}};
    p.builtin = [](const Vector& x) { return f1(x[0]); };
    p.default_n_initial = 3;
    p.default_n_max = 28;
    p.reference_qoi = ReferenceQoi{-1.3599, "paper-reported, standardization unknown"};
  } else if (name == "f2") {
    p.domain = {{0.0, 1.0}};
    p.builtin = [](const Vector& x) { return f2(x[0]); };
    p.default_n_initial = 3;
    p.default_n_max = 28;
    p.reference_qoi = ReferenceQoi{2.0, "paper-reported"};
  } else if (name == "f3") {
    p.domain = {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}};
    p.builtin = [](const Vector& x) { return f3(x); };
    p.default_n_initial = 2;
    p.default_n_max = 32;
    p.reference_qoi = ReferenceQoi{-0.7864, "paper-reported, standardization unknown"};
  } else if (name == "f3_paper") {
    // Published domain. The formula needs x3 >= -1, so x3 is clipped just
    // above the boundary; a warning is printed once.
    p.domain = {{-2.0, 6.0}, {-2.0, 6.0}, {-2.0, 6.0}};
    p.builtin = [](const Vector& x) {
      static bool warned = false;
      Vector c = x;
      if (c[2] < -1.0 + 1e-9) {
        if (!warned) {
          std::fprintf(stderr,
                       "warning: f3_paper clips x3 at -1 + 1e-9 (sqrt domain boundary)\n");
          warned = true;
        }
        c[2] = -1.0 + 1e-9;
      }
      return f3(c);
    };
    p.default_n_initial = 2;
    p.default_n_max = 32;
    p.reference_qoi = ReferenceQoi{-0.7864, "paper-reported, standardization unknown"};
  } else if (name == "f4") {
    p.domain = std::vector<std::pair<double, double>>(5, {0.0, 1.0});
    p.builtin = [](const Vector& x) { return f4(x); };
    p.default_n_initial = 20;
    p.default_n_max = 65;
    p.reference_qoi = ReferenceQoi{0.3883, "paper-reported, standardization unknown"};
  } else {
    throw contract_error("unknown built-in problem: " + name);
  }
  return p;
}

std::vector<std::string> builtin_problem_names() { return {"f1", "f2", "f3", "f3_paper", "f4"}; }

double external_blackbox(const ExternalCommand& cmd, const Eigen::Ref<const Vector>& x_raw) {
  using Kind = evaluation_error::Kind;
  if (cmd.argv.empty()) throw evaluation_error(Kind::spawn, "external: empty command");

  // The child may exit without reading stdin; a broken pipe must surface as
  // a write error, not a signal.
  static const bool sigpipe_ignored = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)sigpipe_ignored;

  int in_pipe[2], out_pipe[2];
  if (::pipe(in_pipe) != 0) throw evaluation_error(Kind::spawn, "external: pipe failed");
  if (::pipe(out_pipe) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw evaluation_error(Kind::spawn, "external: pipe failed");
  }

  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    throw evaluation_error(Kind::spawn, "external: fork failed");
  }
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    std::vector<char*> argv;
    argv.reserve(cmd.argv.size() + 1);
    for (const std::string& a : cmd.argv) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    ::execvp(argv[0], argv.data());
    ::_exit(127);
  }

  ::close(in_pipe[0]);
  ::close(out_pipe[1]);

  // One line of full-precision coordinates.
  std::string line;
  char buf[64];
  for (Eigen::Index j = 0; j < x_raw.size(); ++j) {
    std::snprintf(buf, sizeof(buf), "%.17g", x_raw[j]);
    if (j > 0) line += ' ';
    line += buf;
  }
  line += '\n';
  (void)!::write(in_pipe[1], line.data(), line.size());
  ::close(in_pipe[1]);

  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::duration<double>(cmd.timeout_s);
  std::string output;
  bool timed_out = false;
  for (;;) {
    const auto remaining = deadline - std::chrono::steady_clock::now();
    const long ms = std::chrono::duration_cast<std::chrono::milliseconds>(remaining).count();
    if (ms <= 0) {
      timed_out = true;
      break;
    }
    struct pollfd pfd{out_pipe[0], POLLIN, 0};
    const int pr = ::poll(&pfd, 1, static_cast<int>(std::min(ms, 1000L)));
    if (pr < 0) break;
    if (pr == 0) continue;
    char rbuf[4096];
    const ssize_t got = ::read(out_pipe[0], rbuf, sizeof(rbuf));
    if (got <= 0) break;  // EOF
    output.append(rbuf, static_cast<std::size_t>(got));
  }
  ::close(out_pipe[0]);

  int status = 0;
  if (timed_out) {
    ::kill(pid, SIGKILL);
    ::waitpid(pid, &status, 0);
    throw evaluation_error(Kind::timeout, "external: evaluation exceeded " +
                                              std::to_string(cmd.timeout_s) + " s");
  }
  ::waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    if (code == 127) throw evaluation_error(Kind::spawn, "external: command not found");
    throw evaluation_error(Kind::exit_status,
                           "external: command exited with status " + std::to_string(code));
  }

  const char* start = output.c_str();
  char* end = nullptr;
  const double value = std::strtod(start, &end);
  if (end == start || !std::isfinite(value))
    throw evaluation_error(Kind::parse, "external: could not parse a number from \"" +
                                            output.substr(0, 64) + "\"");
  return value;
}

namespace {

double lhs_average(const Problem& problem, const OracleBudget& budget, double* se,
                   long* n_evals) {
  const int d = problem.dim();
  const long m = std::max(budget.lhs_points, 1L << 16);
  const Matrix U = lhs(static_cast<int>(m), d, rng::derive_seed(budget.seed, rng::kOracle));
  std::vector<double> values(static_cast<std::size_t>(m));
  exec::parallel_for(m, [&](std::ptrdiff_t i) {
    values[static_cast<std::size_t>(i)] = problem.evaluate(problem.to_raw(U.row(i)));
  });
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  *se = std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m));
  *n_evals = m;
  return mean;
}

double tensor_average(const Problem& problem, int nodes, long* n_evals) {
  const int d = problem.dim();
  std::vector<std::vector<double>> xs(d), ws(d);
  for (int j = 0; j < d; ++j) {
    auto [x, w] = quad::gauss_legendre(nodes, problem.domain[j].first, problem.domain[j].second);
    xs[j] = std::move(x);
    ws[j] = std::move(w);
  }
  long total = 1;
  for (int j = 0; j < d; ++j) total *= nodes;
  const double integral = exec::parallel_sum(total, [&](std::ptrdiff_t flat) {
    Vector x(d);
    double w = 1.0;
    std::ptrdiff_t rest = flat;
    for (int j = 0; j < d; ++j) {
      const int idx = static_cast<int>(rest % nodes);
      rest /= nodes;
      x[j] = xs[j][idx];
      w *= ws[j][idx];
    }
    return w * problem.evaluate(x);
  });
  *n_evals += total;
  return integral / problem.domain_volume();
}

}  // namespace

OracleResult true_qoi_oracle(const Problem& problem, const OracleBudget& budget) {
  problem.validate();
  OracleResult result;
  const int d = problem.dim();

  if (d > 3) {
    result.value = lhs_average(problem, budget, &result.error_estimate, &result.n_evals);
    result.converged = result.n_evals >= std::max(budget.lhs_points, 1L << 16);
    return result;
  }

  double prev = 0.0;
  bool have_prev = false;
  for (int nodes = 8; nodes <= budget.max_quad_nodes; nodes *= 2) {
    long cost = 1;
    for (int j = 0; j < d; ++j) cost *= nodes;
    if (result.n_evals + cost > budget.max_evals) break;
    const double value = tensor_average(problem, nodes, &result.n_evals);
    if (have_prev) {
      result.error_estimate = std::abs(value - prev);
      if (result.error_estimate < 1e-8 * std::max(1.0, std::abs(value))) {
        result.value = value;
        result.converged = true;
        return result;
      }
    }
    prev = value;
    have_prev = true;
  }
  result.value = prev;
  result.converged = false;  // budget exhausted before two levels agreed
  return result;
}

}  // namespace bode
