#ifndef RXNSENS_ESTIMATORS_HPP
#define RXNSENS_ESTIMATORS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "rxnsens/paths.hpp"

namespace rxnsens {

enum class Method : std::uint8_t { GT, CGT, FD1_IRN, FD1_CRN, FD1_CRP, FD2_IRN, FD2_CRN, FD2_CRP };

std::string_view method_name(Method method);
std::optional<Method> parse_method(std::string_view name);
bool is_finite_difference(Method method);
/// Coupling and scheme of an FD method; throws for GT/CGT.
Coupling coupling_of(Method method);
FdScheme scheme_of(Method method);
Method fd_method(Coupling coupling, FdScheme scheme);

struct EstimateSummary {
  Method method = Method::GT;
  double point = 0.0;
  /// Unbiased variance of the underlying estimator S.
  double sample_variance = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  std::optional<double> h;
  std::optional<double> rsd;
  std::optional<double> rb;
  std::optional<double> re;
};

struct SampleStats {
  std::size_t n = 0;
  double mean = 0.0;
  /// n - 1 denominator.
  double variance = 0.0;
  /// Fourth central moment, 1/n normalization.
  double fourth_central = 0.0;
};

SampleStats sample_stats(std::span<const double> samples);

/// Standard error of the unbiased sample variance, from the sample fourth moment.
double variance_standard_error(const SampleStats& stats);

/// Mean and unbiased variance of a list of estimator samples.
EstimateSummary summarize(Method method, std::span<const double> samples, std::optional<double> h = std::nullopt);

EstimateSummary estimate_gt(std::span<const double> samples);

/// Centered products (f_i - mean(f)) z_i.
std::vector<double> cgt_products(std::span<const double> f_values, std::span<const double> z_values);

/**
 * Centered Girsanov estimate: mean of (f_i - mean(f)) z_i. Its variance is the
 * sample variance of those products.
 */
EstimateSummary estimate_cgt(std::span<const double> f_values, std::span<const double> z_values);

/// One-sided (f+ - f)/h or two-sided (f+ - f-)/(2h).
inline double fd_quotient(double f_upper, double f_lower, double h, FdScheme scheme) {
  return (f_upper - f_lower) / (scheme == FdScheme::two_sided ? 2.0 * h : h);
}

/// Finite-difference estimate from coupled pairs; f is evaluated on the final states.
template <class Output>
EstimateSummary estimate_fd(std::span<const CoupledPair> pairs, Output&& f) {
  if (pairs.size() < 2) throw std::invalid_argument("finite-difference estimate needs at least 2 pairs");
  const auto& first = pairs.front();
  std::vector<double> quotients;
  quotients.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (p.h != first.h || p.coupling != first.coupling || p.scheme != first.scheme ||
        p.param_index != first.param_index)
      throw std::invalid_argument("heterogeneous coupled pairs");
    quotients.push_back(fd_quotient(f(p.upper.final_state), f(p.lower.final_state), p.h, p.scheme));
  }
  return summarize(fd_method(first.coupling, first.scheme), quotients, first.h);
}

/// Fills rsd, rb and re against a known nonzero sensitivity.
EstimateSummary relative_metrics(EstimateSummary summary, double true_sensitivity);

/**
 * Both sides of the GT/CGT variance relation on the empirical measure of a
 * sample set (1/n moments):
 *   Var(S_CGT) = Var(S_GT) - 2 E(f) E(f Z^2) + E(f)^2 E(Z^2)
 *                + 2 E(f) E(f Z) E(Z) - E(f)^2 E(Z)^2.
 * The last two terms vanish when E(Z) = 0.
 */
struct VarianceIdentity {
  double var_gt = 0.0;
  /// Directly from the centered products.
  double var_cgt = 0.0;
  /// From the GT moments through the relation above.
  double var_cgt_from_gt = 0.0;
  /// Relation with the E(Z) terms dropped.
  double var_cgt_zero_mean_form = 0.0;
};

VarianceIdentity gt_cgt_variance_identity(std::span<const double> f_values, std::span<const double> z_values);

}  // namespace rxnsens

#endif  // RXNSENS_ESTIMATORS_HPP
