#ifndef BODE_PROBLEMS_HPP
#define BODE_PROBLEMS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bode/types.hpp"

namespace bode {

/// External evaluator: one process spawn per evaluation. The point is
/// written to the child's stdin as one line of space-separated decimals in
/// raw-domain coordinates; the child must print one decimal number.
struct ExternalCommand {
  std::vector<std::string> argv;
  double timeout_s = 3600.0;
};

struct ReferenceQoi {
  double value = 0.0;
  std::string provenance;
};

/// A black-box problem: evaluator (built-in function or external command),
/// box domain, budget hints, and optional paper-reported reference value
/// (metadata only, never used as ground truth).
struct Problem {
  std::string name;
  std::vector<std::pair<double, double>> domain;  // per-dimension (lower, upper)
  std::function<double(const Vector&)> builtin;   // raw-domain coordinates
  std::optional<ExternalCommand> external;
  int default_n_initial = 3;
  int default_n_max = 20;
  std::optional<ReferenceQoi> reference_qoi;

  int dim() const { return static_cast<int>(domain.size()); }
  void validate() const;

  Vector to_raw(const Eigen::Ref<const Vector>& x_unit) const;
  Vector to_unit(const Eigen::Ref<const Vector>& x_raw) const;
  double domain_volume() const;

  /// Evaluate at raw-domain coordinates. Throws evaluation_error on failure.
  double evaluate(const Eigen::Ref<const Vector>& x_raw) const;
};

// Built-in benchmark responses (raw-domain coordinates).
double f1(double x);           // [0,1]
double f2(double x);           // [0,1]
double f3(const Vector& x);    // requires x3 >= -1
double f4(const Vector& x);    // [0,1]^5

/// Look up a built-in problem by name: f1, f2, f3, f3_paper, f4.
/// f3 ships on [0,1]^3; f3_paper uses the published [-2,6]^3 domain with x3
/// clipped at -1 + 1e-9 (the formula is undefined below -1) and warns once.
Problem make_builtin_problem(const std::string& name);
std::vector<std::string> builtin_problem_names();

/// Run the external command for one evaluation.
double external_blackbox(const ExternalCommand& cmd, const Eigen::Ref<const Vector>& x_raw);

/// Independent estimate of Q = average of f over the domain. Dimensions up
/// to three use tensor Gauss-Legendre refined until two successive levels
/// agree to 1e-8 relative; higher dimensions use a Latin-hypercube average
/// with a standard-error estimate.
struct OracleBudget {
  int max_quad_nodes = 256;     // per-dimension cap for the tensor rule
  long lhs_points = 1L << 16;   // minimum sample count for d > 3
  long max_evals = 100000000;
  std::uint64_t seed = 12345;
};

struct OracleResult {
  double value = 0.0;
  double error_estimate = 0.0;
  bool converged = false;
  long n_evals = 0;
};

OracleResult true_qoi_oracle(const Problem& problem, const OracleBudget& budget = {});

}  // namespace bode

#endif
