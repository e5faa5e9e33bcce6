#ifndef RXNSENS_STUDY_HPP
#define RXNSENS_STUDY_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rxnsens/estimators.hpp"
#include "rxnsens/model.hpp"
#include "rxnsens/output.hpp"
#include "rxnsens/paths.hpp"

namespace rxnsens {

/// Where the true sensitivity used for RSD/RB comes from.
enum class Reference {
  /// Closed form or exact law; error if the model has none.
  oracle,
  /// The CGT point estimate at the same N (unbiased, lowest variance).
  cgt,
  /// Report raw variances only.
  none,
};

struct ScalingConfig {
  std::string model_label;
  OutputSpec output;
  Index param_index = 0;
  double t_final = 1.0;
  double h = 0.01;
  std::uint64_t seed = 1;
  std::vector<std::int64_t> n_grid;
  /// One entry, or one per grid point.
  std::vector<std::size_t> ns;
  std::vector<Method> methods;
  /// Fraction of the largest grid points used by the slope fit.
  double slope_window = 0.5;
  Eigen::VectorXd x0;
  Reference reference = Reference::oracle;
  unsigned workers = 1;
  SimulationOptions simulation;

  std::size_t ns_at(std::size_t grid_index) const { return ns.size() == 1 ? ns.front() : ns.at(grid_index); }
  void validate(const ReactionNetwork& network) const;
};

struct ScalingRow {
  std::int64_t N = 0;
  EstimateSummary summary;
  /// True (or reference) sensitivity, when one was available.
  std::optional<double> truth;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t n_points = 0;
};

struct SlopeRow {
  Method method;
  /// Empty when the window holds a nonpositive value (e.g. a degenerate indicator output).
  std::optional<SlopeFit> fit;
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  std::vector<SlopeRow> slopes;
};

/**
 * System-size sweep. For every N: GT and CGT share one set of direct-method
 * paths; each FD method simulates its own coupled pairs. Every trajectory's
 * randomness is keyed by (derived seed, trajectory index), so the report
 * does not depend on the worker count.
 */
ScalingReport run_scaling_study(const ReactionNetwork& network, const ScalingConfig& config);

/// The quantity the slope fit uses for a row: RSD when available, else raw variance.
double scaling_metric(const ScalingRow& row);

/**
 * One estimate at a single system size, with the same seed derivation as the
 * scaling study: GT and CGT at equal seeds consume identical paths, and a
 * study row for (N, method) equals this call at that N.
 */
EstimateSummary run_estimate(const SystemInstance& instance, const OutputSpec& output, Index param_index,
                             Method method, double t_final, std::size_t ns, double h, std::uint64_t seed,
                             unsigned workers = 1, const SimulationOptions& options = {});

/// Least squares on (log N, log value) over the largest max(2, ceil(window * count)) points.
SlopeFit fit_slope(std::span<const std::pair<double, double>> points, double window);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit linear_fit(std::span<const std::pair<double, double>> points);

struct TimeStudyConfig {
  std::string model_label;
  OutputSpec output;
  Index param_index = 0;
  std::int64_t system_size = 1;
  std::vector<double> t_grid;
  std::size_t ns = 1000;
  std::vector<Method> methods;
  double h = 0.01;
  std::uint64_t seed = 1;
  Eigen::VectorXd x0;
  unsigned workers = 1;
  SimulationOptions simulation;

  void validate(const ReactionNetwork& network) const;
};

struct TimeRow {
  double t = 0.0;
  EstimateSummary summary;
};

/// Estimator variance against the time horizon at fixed N. Paths run to the
/// largest T once and are read off at every grid time.
std::vector<TimeRow> run_time_study(const ReactionNetwork& network, const TimeStudyConfig& config);

/// Per-method linear fit of variance against T; nullopt for fewer than 2 grid points.
std::optional<LinearFit> time_variance_fit(std::span<const TimeRow> rows, Method method);

// ---------------------------------------------------------------------------
// Cost proportionalities (unit constants; relative, not absolute).

enum class CostFamily { FD, CGT, GT };

/// Trajectories needed for relative error delta at system size N.
double ns_required(CostFamily family, double delta, double N, double gamma1 = 1.0, double gamma2 = 1.0);

/// RE-minimizing perturbation h for an FD method, up to a constant.
double optimal_h(double N, double Ns, double gamma1, double gamma2);

// ---------------------------------------------------------------------------
// CSV output. `header` is written verbatim first (comment lines).

void write_scaling_csv(std::ostream& out, std::string_view header, const ScalingConfig& config,
                       const ReactionNetwork& network, const ScalingReport& report);
void write_slopes_csv(std::ostream& out, std::string_view header, const ScalingConfig& config,
                      const ScalingReport& report);
void write_time_csv(std::ostream& out, std::string_view header, const TimeStudyConfig& config,
                    const ReactionNetwork& network, std::span<const TimeRow> rows);

/// Runs fn(i) for i in [0, count) on `workers` threads, in contiguous blocks.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t begin, std::size_t end)>& fn);

}  // namespace rxnsens

#endif  // RXNSENS_STUDY_HPP
