#include "rxnsens/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace rxnsens {

namespace {

constexpr std::array<std::string_view, 8> kMethodNames = {"GT",      "CGT",     "FD1_IRN", "FD1_CRN",
                                                          "FD1_CRP", "FD2_IRN", "FD2_CRN", "FD2_CRP"};

void require_samples(std::size_t n) {
  if (n < 2) throw std::invalid_argument("estimate needs at least 2 samples, got " + std::to_string(n));
}

}  // namespace

std::string_view method_name(Method method) { return kMethodNames[static_cast<std::size_t>(method)]; }

std::optional<Method> parse_method(std::string_view name) {
  for (std::size_t i = 0; i < kMethodNames.size(); ++i)
    if (kMethodNames[i] == name) return static_cast<Method>(i);
  return std::nullopt;
}

bool is_finite_difference(Method method) { return method != Method::GT && method != Method::CGT; }

Coupling coupling_of(Method method) {
  switch (method) {
    case Method::FD1_IRN:
    case Method::FD2_IRN: return Coupling::IRN;
    case Method::FD1_CRN:
    case Method::FD2_CRN: return Coupling::CRN;
    case Method::FD1_CRP:
    case Method::FD2_CRP: return Coupling::CRP;
    default: throw std::invalid_argument("method has no coupling");
  }
}

FdScheme scheme_of(Method method) {
  if (!is_finite_difference(method)) throw std::invalid_argument("method has no finite-difference scheme");
  return static_cast<int>(method) <= static_cast<int>(Method::FD1_CRP) ? FdScheme::one_sided : FdScheme::two_sided;
}

Method fd_method(Coupling coupling, FdScheme scheme) {
  const int base = scheme == FdScheme::one_sided ? static_cast<int>(Method::FD1_IRN) : static_cast<int>(Method::FD2_IRN);
  return static_cast<Method>(base + static_cast<int>(coupling));
}

SampleStats sample_stats(std::span<const double> samples) {
  require_samples(samples.size());
  SampleStats s;
  s.n = samples.size();
  long double sum = 0.0L;
  for (double v : samples) sum += v;
  const long double mean = sum / static_cast<long double>(s.n);
  long double m2 = 0.0L, m4 = 0.0L;
  for (double v : samples) {
    const long double d = v - mean;
    const long double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  s.mean = static_cast<double>(mean);
  s.variance = static_cast<double>(m2 / static_cast<long double>(s.n - 1));
  s.fourth_central = static_cast<double>(m4 / static_cast<long double>(s.n));
  return s;
}

double variance_standard_error(const SampleStats& stats) {
  const auto n = static_cast<double>(stats.n);
  if (stats.n < 4) return std::numeric_limits<double>::infinity();
  const double sigma4 = stats.variance * stats.variance;
  const double v = (stats.fourth_central - sigma4 * (n - 3.0) / (n - 1.0)) / n;
  return std::sqrt(std::max(v, 0.0));
}

EstimateSummary summarize(Method method, std::span<const double> samples, std::optional<double> h) {
  const SampleStats s = sample_stats(samples);
  EstimateSummary out;
  out.method = method;
  out.point = s.mean;
  out.sample_variance = s.variance;
  out.n_samples = s.n;
  out.std_error = std::sqrt(s.variance / static_cast<double>(s.n));
  out.h = h;
  return out;
}

EstimateSummary estimate_gt(std::span<const double> samples) { return summarize(Method::GT, samples); }

std::vector<double> cgt_products(std::span<const double> f_values, std::span<const double> z_values) {
  if (f_values.size() != z_values.size()) throw std::invalid_argument("f and Z sample lists differ in length");
  require_samples(f_values.size());
  long double sum = 0.0L;
  for (double f : f_values) sum += f;
  const double f_mean = static_cast<double>(sum / static_cast<long double>(f_values.size()));
  std::vector<double> products(f_values.size());
  for (std::size_t i = 0; i < f_values.size(); ++i) products[i] = (f_values[i] - f_mean) * z_values[i];
  return products;
}

EstimateSummary estimate_cgt(std::span<const double> f_values, std::span<const double> z_values) {
  const auto products = cgt_products(f_values, z_values);
  return summarize(Method::CGT, products);
}

EstimateSummary relative_metrics(EstimateSummary summary, double true_sensitivity) {
  if (true_sensitivity == 0.0 || !std::isfinite(true_sensitivity))
    throw std::domain_error("relative metrics need a nonzero true sensitivity; report the raw variance instead");
  const double scale = std::abs(true_sensitivity);
  summary.rsd = std::sqrt(summary.sample_variance) / scale;
  summary.rb = (summary.point - true_sensitivity) / scale;
  summary.re = std::sqrt(*summary.rsd * *summary.rsd / static_cast<double>(summary.n_samples) + *summary.rb * *summary.rb);
  return summary;
}

VarianceIdentity gt_cgt_variance_identity(std::span<const double> f_values, std::span<const double> z_values) {
  if (f_values.size() != z_values.size()) throw std::invalid_argument("f and Z sample lists differ in length");
  require_samples(f_values.size());
  const auto n = static_cast<long double>(f_values.size());
  long double ef = 0, ez = 0, efz = 0, ez2 = 0, efz2 = 0, ef2z2 = 0;
  for (std::size_t i = 0; i < f_values.size(); ++i) {
    const long double f = f_values[i], z = z_values[i];
    ef += f;
    ez += z;
    efz += f * z;
    ez2 += z * z;
    efz2 += f * z * z;
    ef2z2 += f * f * z * z;
  }
  ef /= n;
  ez /= n;
  efz /= n;
  ez2 /= n;
  efz2 /= n;
  ef2z2 /= n;

  long double pc = 0, pc2 = 0;
  for (std::size_t i = 0; i < f_values.size(); ++i) {
    const long double p = (f_values[i] - ef) * z_values[i];
    pc += p;
    pc2 += p * p;
  }
  pc /= n;
  pc2 /= n;

  const long double var_gt = ef2z2 - efz * efz;
  const long double zero_mean = var_gt - 2 * ef * efz2 + ef * ef * ez2;
  VarianceIdentity out;
  out.var_gt = static_cast<double>(var_gt);
  out.var_cgt = static_cast<double>(pc2 - pc * pc);
  out.var_cgt_zero_mean_form = static_cast<double>(zero_mean);
  out.var_cgt_from_gt = static_cast<double>(zero_mean + 2 * ef * efz * ez - ef * ef * ez * ez);
  return out;
}

}  // namespace rxnsens
