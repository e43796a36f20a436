#ifndef BODE_TYPES_HPP
#define BODE_TYPES_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace bode {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Violated precondition or argument contract.
class contract_error : public std::invalid_argument {
 public:
  explicit contract_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Covariance matrix could not be factorized even at maximum jitter.
class singular_covariance_error : public std::runtime_error {
 public:
  explicit singular_covariance_error(const std::string& what) : std::runtime_error(what) {}
};

/// MCMC ensemble stopped moving (acceptance rate below threshold).
class degenerate_sampling_error : public std::runtime_error {
 public:
  degenerate_sampling_error(const std::string& what, double acceptance)
      : std::runtime_error(what), acceptance_rate(acceptance) {}
  double acceptance_rate;
};

/// Inner-surrogate maximum-likelihood fit failed on every restart.
class degenerate_fit_error : public std::runtime_error {
 public:
  explicit degenerate_fit_error(const std::string& what) : std::runtime_error(what) {}
};

/// Black-box evaluation failed (spawn, timeout, exit status or parse).
class evaluation_error : public std::runtime_error {
 public:
  enum class Kind { spawn, timeout, exit_status, parse, domain };
  evaluation_error(Kind k, const std::string& what) : std::runtime_error(what), kind(k) {}
  Kind kind;
};

}  // namespace bode

#endif
