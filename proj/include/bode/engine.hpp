#ifndef BODE_ENGINE_HPP
#define BODE_ENGINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "bode/acquisition.hpp"
#include "bode/hyper.hpp"
#include "bode/problems.hpp"
#include "bode/qoi.hpp"
#include "bode/types.hpp"

namespace bode {

enum class AcquisitionRule { ekld, us, random };

std::string to_string(AcquisitionRule a);
AcquisitionRule acquisition_from_string(const std::string& s);

struct EngineConfig {
  AcquisitionRule acquisition = AcquisitionRule::ekld;
  int n_initial = 3;
  int n_max = 20;
  std::optional<double> ekld_stop_threshold;
  McmcSettings mcmc;
  BgoSettings bgo;
  PriorSpec prior;
  double noise_var = 1e-6;        // standardized-output space
  int warm_burn_in = 50;          // burn-in after the first iteration
  std::uint64_t master_seed = 0;

  void validate() const;
};

struct IterationDiagnostics {
  double acceptance_rate = 0.0;
  long variance_clamps = 0;
  long sigma2_clamps = 0;
  long belief_saturated = 0;
  bool perturbed_duplicate = false;
  bool mcmc_retried = false;
};

/// One outer-loop step: the belief about Q before the new observation, the
/// design chosen by the acquisition rule, and the observed output.
struct IterationRecord {
  int index = 0;                 // 1-based
  Vector x_unit;
  Vector x_raw;
  double y_raw = 0.0;
  double qoi_mean = 0.0;         // raw output units
  double qoi_variance = 0.0;     // raw output units squared
  double max_mean_ekld = 0.0;    // NaN for non-EKLD acquisitions
  double elapsed_s = 0.0;
  IterationDiagnostics diag;
};

struct FinalBelief {
  double qoi_mean = 0.0;
  double qoi_variance = 0.0;
  double acceptance_rate = 0.0;
};

struct RunRecord {
  EngineConfig config;
  std::string problem_name;
  Matrix initial_X_unit;
  Vector initial_Y_raw;
  std::vector<IterationRecord> iterations;
  Matrix final_X_unit;
  Vector final_Y_raw;
  std::optional<FinalBelief> final_belief;
  std::string termination;       // budget | ekld_threshold | evaluation_failure | degenerate_sampling
  std::string error_message;
  double total_elapsed_s = 0.0;
};

/// Latin hypercube design of the initial experiments.
Matrix initial_design(int n_initial, int d, std::uint64_t seed);

/// Moments of the equally weighted Gaussian mixture over the ensemble:
/// mean of means, mean of variances plus variance of means.
std::pair<double, double> marginal_qoi_belief(const std::vector<QoiBelief>& beliefs);

/// Budget / information-threshold stop test on the record so far.
/// Returns the stop reason, or nullopt to continue.
std::optional<std::string> stopping_check(const RunRecord& record, const EngineConfig& config);

/// Run the full sequential design loop on a problem.
RunRecord run(const Problem& problem, const EngineConfig& config);

}  // namespace bode

#endif
