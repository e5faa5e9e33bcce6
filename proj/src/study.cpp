#include "rxnsens/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "rxnsens/format.hpp"
#include "rxnsens/girsanov.hpp"
#include "rxnsens/oracles.hpp"
#include "rxnsens/random.hpp"

namespace rxnsens {

void parallel_for(std::size_t count, unsigned workers,
                  const std::function<void(std::size_t begin, std::size_t end)>& fn) {
  constexpr std::size_t kBlock = 256;
  if (workers <= 1 || count <= kBlock) {
    if (count > 0) fn(0, count);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_block = count;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t begin = next.fetch_add(kBlock);
          if (begin >= count) return;
          try {
            fn(begin, std::min(count, begin + kBlock));
          } catch (...) {
            // Report the failure of the earliest block so errors are reproducible.
            std::lock_guard lock(error_mutex);
            if (begin < error_block) {
              error_block = begin;
              error = std::current_exception();
            }
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

namespace {

constexpr std::uint64_t kGirsanovTag = 0x47495253;  // "GIRS"
constexpr std::uint64_t kFdTag = 0x46444946;        // "FDIF"

Method coupled_method_checked(Method m) {
  coupling_of(m);
  return m;
}

struct GirsanovSamples {
  std::vector<double> f;
  std::vector<double> z;
};

GirsanovSamples girsanov_samples(const SystemInstance& instance, const OutputSpec& output, Index param,
                                 double t_final, std::size_t ns, std::uint64_t seed, unsigned workers,
                                 const SimulationOptions& options) {
  GirsanovSamples s{std::vector<double>(ns), std::vector<double>(ns)};
  const RateVector rates = instance.network().rates();
  const BoundOutput f{output, instance.system_size()};
  parallel_for(ns, workers, [&](std::size_t begin, std::size_t end) {
    Trajectory path;
    for (std::size_t i = begin; i < end; ++i) {
      UniformStream stream({seed, i, 0, Leg::nominal});
      simulate_direct_into(path, instance, rates, t_final, stream, options);
      s.f[i] = f(path.final_state);
      s.z[i] = gt_weight(path, instance, param, t_final).value;
    }
  });
  return s;
}

std::vector<double> fd_samples(const SystemInstance& instance, const OutputSpec& output, Index param, double h,
                               Method method, double t_final, std::size_t ns, std::uint64_t seed, unsigned workers,
                               const SimulationOptions& options) {
  std::vector<double> q(ns);
  const BoundOutput f{output, instance.system_size()};
  const Coupling coupling = coupling_of(method);
  const FdScheme scheme = scheme_of(method);
  parallel_for(ns, workers, [&](std::size_t begin, std::size_t end) {
    CoupledPair pair;
    for (std::size_t i = begin; i < end; ++i) {
      simulate_coupled_into(pair, instance, param, h, coupling, scheme, t_final, seed, i, options);
      q[i] = fd_quotient(f(pair.upper.final_state), f(pair.lower.final_state), h, scheme);
    }
  });
  return q;
}

}  // namespace

EstimateSummary run_estimate(const SystemInstance& instance, const OutputSpec& output, Index param_index,
                             Method method, double t_final, std::size_t ns, double h, std::uint64_t seed,
                             unsigned workers, const SimulationOptions& options) {
  const auto N = static_cast<std::uint64_t>(instance.system_size());
  if (is_finite_difference(method)) {
    const auto q = fd_samples(instance, output, param_index, h, method, t_final, ns,
                              derive_seed(seed, {kFdTag, N, static_cast<std::uint64_t>(method)}), workers, options);
    return summarize(method, q, h);
  }
  const auto s = girsanov_samples(instance, output, param_index, t_final, ns, derive_seed(seed, {kGirsanovTag, N}),
                                  workers, options);
  if (method == Method::CGT) return estimate_cgt(s.f, s.z);
  std::vector<double> products(ns);
  for (std::size_t i = 0; i < ns; ++i) products[i] = s.f[i] * s.z[i];
  return estimate_gt(products);
}

void ScalingConfig::validate(const ReactionNetwork& network) const {
  if (n_grid.empty()) throw std::invalid_argument("N grid is empty");
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    if (n_grid[k] < 1) throw std::invalid_argument("N grid entries must be positive");
    if (k > 0 && n_grid[k] <= n_grid[k - 1]) throw std::invalid_argument("N grid must be strictly increasing");
  }
  if (ns.empty() || (ns.size() != 1 && ns.size() != n_grid.size()))
    throw std::invalid_argument("ns must have one entry or one per grid point");
  for (auto n : ns)
    if (n < 100) throw std::invalid_argument("ns must be at least 100");
  if (methods.empty()) throw std::invalid_argument("no estimator methods selected");
  if (param_index < 0 || param_index >= network.num_reactions())
    throw std::invalid_argument("parameter index out of range");
  if (!(t_final > 0.0)) throw std::invalid_argument("t_final must be positive");
  if (!(slope_window > 0.0 && slope_window <= 1.0)) throw std::invalid_argument("slope window must lie in (0, 1]");
  if (x0.size() != network.num_species()) throw std::invalid_argument("x0 does not match the species count");
  for (auto m : methods)
    if (is_finite_difference(m)) {
      if (!(h > 0.0)) throw std::invalid_argument("finite-difference methods need h > 0");
      coupled_method_checked(m);
    }
}

double scaling_metric(const ScalingRow& row) {
  return row.summary.rsd ? *row.summary.rsd : row.summary.sample_variance;
}

ScalingReport run_scaling_study(const ReactionNetwork& network, const ScalingConfig& config) {
  config.validate(network);
  const bool relative = config.reference != Reference::none && config.output.alpha().has_value();
  const bool need_girsanov =
      std::any_of(config.methods.begin(), config.methods.end(),
                  [](Method m) { return !is_finite_difference(m); }) ||
      (relative && config.reference == Reference::cgt);

  ScalingReport report;
  for (std::size_t k = 0; k < config.n_grid.size(); ++k) {
    const std::int64_t N = config.n_grid[k];
    const std::size_t ns = config.ns_at(k);
    const SystemInstance instance(network, N, config.x0);

    std::optional<EstimateSummary> gt, cgt;
    if (need_girsanov) {
      const auto s = girsanov_samples(instance, config.output, config.param_index, config.t_final, ns,
                                      derive_seed(config.seed, {kGirsanovTag, static_cast<std::uint64_t>(N)}),
                                      config.workers, config.simulation);
      std::vector<double> products(ns);
      for (std::size_t i = 0; i < ns; ++i) products[i] = s.f[i] * s.z[i];
      gt = estimate_gt(products);
      cgt = estimate_cgt(s.f, s.z);
    }

    std::optional<double> truth;
    if (relative) {
      if (config.reference == Reference::oracle) {
        truth = exact_sensitivity(instance, config.output, config.param_index, config.t_final);
        if (!truth) throw std::runtime_error("no exact sensitivity is available for this model and output");
      } else {
        truth = cgt->point;
      }
      if (*truth == 0.0) truth.reset();
    }

    for (const Method method : config.methods) {
      ScalingRow row;
      row.N = N;
      if (method == Method::GT) {
        row.summary = *gt;
      } else if (method == Method::CGT) {
        row.summary = *cgt;
      } else {
        const auto q = fd_samples(instance, config.output, config.param_index, config.h, method, config.t_final, ns,
                                  derive_seed(config.seed, {kFdTag, static_cast<std::uint64_t>(N),
                                                            static_cast<std::uint64_t>(method)}),
                                  config.workers, config.simulation);
        row.summary = summarize(method, q, config.h);
      }
      if (truth) {
        row.truth = truth;
        row.summary = relative_metrics(row.summary, *truth);
      }
      report.rows.push_back(row);
    }
  }

  if (config.n_grid.size() >= 2) {
    for (const Method method : config.methods) {
      std::vector<std::pair<double, double>> points;
      for (const auto& row : report.rows)
        if (row.summary.method == method) points.emplace_back(static_cast<double>(row.N), scaling_metric(row));
      SlopeRow slope{method, std::nullopt};
      try {
        slope.fit = fit_slope(points, config.slope_window);
      } catch (const std::domain_error&) {
      }
      report.slopes.push_back(slope);
    }
  }
  return report;
}

SlopeFit fit_slope(std::span<const std::pair<double, double>> points, double window) {
  if (!(window > 0.0 && window <= 1.0)) throw std::invalid_argument("slope window must lie in (0, 1]");
  std::vector<std::pair<double, double>> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.size() < 2) throw std::invalid_argument("slope fit needs at least 2 points");
  // A window narrower than two points still fits the last two.
  const auto count = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(window * static_cast<double>(sorted.size()) - 1e-12)));
  std::vector<std::pair<double, double>> logs;
  for (std::size_t i = sorted.size() - count; i < sorted.size(); ++i) {
    const auto [n, v] = sorted[i];
    if (!(n > 0.0) || !(v > 0.0)) throw std::domain_error("slope fit needs positive N and values");
    logs.emplace_back(std::log(n), std::log(v));
  }
  const LinearFit fit = linear_fit(logs);
  return {fit.slope, fit.intercept, count};
}

LinearFit linear_fit(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) throw std::invalid_argument("linear fit needs at least 2 points");
  const auto n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx == 0.0) throw std::domain_error("linear fit needs distinct abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
  return fit;
}

// ---------------------------------------------------------------------------

void TimeStudyConfig::validate(const ReactionNetwork& network) const {
  if (t_grid.empty()) throw std::invalid_argument("T grid is empty");
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (!(t_grid[k] >= 0.0)) throw std::invalid_argument("T grid entries must be nonnegative");
    if (k > 0 && t_grid[k] <= t_grid[k - 1]) throw std::invalid_argument("T grid must be increasing");
  }
  if (!(t_grid.back() > 0.0)) throw std::invalid_argument("largest T must be positive");
  if (ns < 2) throw std::invalid_argument("ns must be at least 2");
  if (system_size < 1) throw std::invalid_argument("N must be positive");
  if (methods.empty()) throw std::invalid_argument("no estimator methods selected");
  if (param_index < 0 || param_index >= network.num_reactions())
    throw std::invalid_argument("parameter index out of range");
  if (x0.size() != network.num_species()) throw std::invalid_argument("x0 does not match the species count");
  for (auto m : methods)
    if (is_finite_difference(m) && !(h > 0.0)) throw std::invalid_argument("finite-difference methods need h > 0");
}

std::vector<TimeRow> run_time_study(const ReactionNetwork& network, const TimeStudyConfig& config) {
  config.validate(network);
  const SystemInstance instance(network, config.system_size, config.x0);
  const BoundOutput f{config.output, config.system_size};
  const std::size_t ns = config.ns;
  const std::size_t nt = config.t_grid.size();
  const double horizon = config.t_grid.back();
  const RateVector rates = network.rates();
  const auto seed = [&](std::uint64_t tag, std::uint64_t extra) {
    return derive_seed(config.seed, {tag, static_cast<std::uint64_t>(config.system_size), extra});
  };

  // samples[method][t][i]
  std::vector<std::vector<std::vector<double>>> samples(config.methods.size());
  for (auto& per_method : samples) per_method.assign(nt, std::vector<double>(ns));

  const bool need_girsanov = std::any_of(config.methods.begin(), config.methods.end(),
                                         [](Method m) { return !is_finite_difference(m); });
  std::vector<std::vector<double>> fvals, zvals;
  if (need_girsanov) {
    fvals.assign(nt, std::vector<double>(ns));
    zvals.assign(nt, std::vector<double>(ns));
    const auto girsanov_seed = seed(kGirsanovTag, 0);
    parallel_for(ns, config.workers, [&](std::size_t begin, std::size_t end) {
      Trajectory path;
      for (std::size_t i = begin; i < end; ++i) {
        UniformStream stream({girsanov_seed, i, 0, Leg::nominal});
        simulate_direct_into(path, instance, rates, horizon, stream, config.simulation);
        const auto states = states_at(path, network, config.t_grid);
        const auto weights = gt_weights_at(path, instance, config.param_index, config.t_grid);
        for (std::size_t k = 0; k < nt; ++k) {
          fvals[k][i] = f(states[k]);
          zvals[k][i] = weights[k].value;
        }
      }
    });
  }

  for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
    const Method method = config.methods[mi];
    if (!is_finite_difference(method)) continue;
    const auto fd_seed = seed(kFdTag, static_cast<std::uint64_t>(method));
    const Coupling coupling = coupling_of(method);
    const FdScheme scheme = scheme_of(method);
    parallel_for(ns, config.workers, [&](std::size_t begin, std::size_t end) {
      CoupledPair pair;
      for (std::size_t i = begin; i < end; ++i) {
        simulate_coupled_into(pair, instance, config.param_index, config.h, coupling, scheme, horizon, fd_seed, i,
                              config.simulation);
        const auto up = states_at(pair.upper, network, config.t_grid);
        const auto lo = states_at(pair.lower, network, config.t_grid);
        for (std::size_t k = 0; k < nt; ++k) samples[mi][k][i] = fd_quotient(f(up[k]), f(lo[k]), config.h, scheme);
      }
    });
  }

  std::vector<TimeRow> rows;
  for (std::size_t k = 0; k < nt; ++k) {
    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
      const Method method = config.methods[mi];
      TimeRow row;
      row.t = config.t_grid[k];
      if (method == Method::GT) {
        std::vector<double> products(ns);
        for (std::size_t i = 0; i < ns; ++i) products[i] = fvals[k][i] * zvals[k][i];
        row.summary = estimate_gt(products);
      } else if (method == Method::CGT) {
        row.summary = estimate_cgt(fvals[k], zvals[k]);
      } else {
        row.summary = summarize(method, samples[mi][k], config.h);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::optional<LinearFit> time_variance_fit(std::span<const TimeRow> rows, Method method) {
  std::vector<std::pair<double, double>> points;
  for (const auto& row : rows)
    if (row.summary.method == method) points.emplace_back(row.t, row.summary.sample_variance);
  if (points.size() < 2) return std::nullopt;
  return linear_fit(points);
}

// ---------------------------------------------------------------------------

double ns_required(CostFamily family, double delta, double N, double gamma1, double gamma2) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (!(N > 0.0)) throw std::invalid_argument("N must be positive");
  switch (family) {
    case CostFamily::GT: return N * std::pow(delta, -2.0);
    case CostFamily::CGT: return std::pow(delta, -2.0);
    case CostFamily::FD:
      if (!(gamma1 >= 1.0)) throw std::invalid_argument("gamma1 must be at least 1");
      if (gamma2 != 1.0 && gamma2 != 2.0) throw std::invalid_argument("gamma2 must be 1 or 2");
      return std::pow(delta, -2.0 - gamma2 / gamma1) / N;
  }
  throw std::invalid_argument("unknown cost family");
}

double optimal_h(double N, double Ns, double gamma1, double gamma2) {
  if (!(N > 0.0 && Ns > 0.0 && gamma1 > 0.0 && gamma2 > 0.0))
    throw std::invalid_argument("optimal_h needs positive arguments");
  return std::pow(N * Ns, -1.0 / (2.0 * gamma1 + gamma2));
}

// ---------------------------------------------------------------------------

void write_scaling_csv(std::ostream& out, std::string_view header, const ScalingConfig& config,
                       const ReactionNetwork& network, const ScalingReport& report) {
  out << header;
  out << "model,output,method,N,Ns,h,point,std_error,rsd,raw_variance,rb,slope_window\n";
  const std::string output = csv_field(config.output.to_string(network));
  const std::string label = csv_field(config.model_label);
  for (const auto& row : report.rows) {
    const auto& s = row.summary;
    out << label << ',' << output << ',' << method_name(s.method) << ',' << row.N << ','
        << s.n_samples << ',' << format_number(s.h) << ',' << format_number(s.point) << ','
        << format_number(s.std_error) << ',' << format_number(s.rsd) << ',' << format_number(s.sample_variance)
        << ',' << format_number(s.rb) << ',' << format_number(config.slope_window) << '\n';
  }
}

void write_slopes_csv(std::ostream& out, std::string_view header, const ScalingConfig&, const ScalingReport& report) {
  out << header;
  out << "method,slope,intercept,n_points\n";
  for (const auto& s : report.slopes) {
    out << method_name(s.method) << ',';
    if (s.fit) out << format_number(s.fit->slope) << ',' << format_number(s.fit->intercept) << ',' << s.fit->n_points;
    else out << ",,";
    out << '\n';
  }
}

void write_time_csv(std::ostream& out, std::string_view header, const TimeStudyConfig& config,
                    const ReactionNetwork& network, std::span<const TimeRow> rows) {
  out << header;
  out << "model,output,method,N,Ns,h,T,point,std_error,raw_variance\n";
  const std::string output = csv_field(config.output.to_string(network));
  const std::string label = csv_field(config.model_label);
  for (const auto& row : rows) {
    const auto& s = row.summary;
    out << label << ',' << output << ',' << method_name(s.method) << ',' << config.system_size << ','
        << s.n_samples << ',' << format_number(s.h) << ',' << format_number(row.t) << ',' << format_number(s.point)
        << ',' << format_number(s.std_error) << ',' << format_number(s.sample_variance) << '\n';
  }
}

}  // namespace rxnsens
