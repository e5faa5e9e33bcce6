#include "rxnsens/paths.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "rxnsens/format.hpp"

namespace rxnsens {

namespace {

struct SpeciesCount {
  Index species;
  int count;
};

/// Sparse view of a network at fixed N and rates, used inside the hot loops.
class Kinetics {
 public:
  Kinetics(const SystemInstance& instance, const RateVector& rates) {
    const auto& net = instance.network();
    if (rates.size() != net.num_reactions())
      throw SimulationError("rate vector has " + std::to_string(rates.size()) + " entries, network has " +
                            std::to_string(net.num_reactions()) + " reactions");
    channels_.resize(static_cast<std::size_t>(net.num_reactions()));
    for (Index j = 0; j < net.num_reactions(); ++j) {
      const auto& r = net.reaction(j);
      if (!(rates(j) >= 0.0) || !std::isfinite(rates(j)))
        throw SimulationError("invalid rate for reaction " + std::to_string(j + 1));
      auto& ch = channels_[static_cast<std::size_t>(j)];
      ch.scale = to_stochastic_param(rates(j), instance.system_size(), r.order());
      for (Index i = 0; i < r.reactants.size(); ++i) {
        if (r.reactants(i) > 0) ch.reactants.push_back({i, r.reactants(i)});
        const int delta = r.products(i) - r.reactants(i);
        if (delta != 0) ch.change.push_back({i, delta});
      }
    }
  }

  Index size() const { return static_cast<Index>(channels_.size()); }

  double propensity(Index j, const State& x) const {
    const auto& ch = channels_[static_cast<std::size_t>(j)];
    double value = ch.scale;
    for (const auto& [i, k] : ch.reactants) {
      const std::int64_t xi = x(i);
      if (xi < k) return 0.0;
      switch (k) {
        case 1: value *= static_cast<double>(xi); break;
        case 2: value *= 0.5 * static_cast<double>(xi) * static_cast<double>(xi - 1); break;
        default: value *= binomial(xi, k); break;
      }
    }
    return value;
  }

  void fire(Index j, State& x) const {
    for (const auto& [i, d] : channels_[static_cast<std::size_t>(j)].change) x(i) += d;
  }

 private:
  struct Channel {
    double scale = 0.0;
    std::vector<SpeciesCount> reactants;
    std::vector<SpeciesCount> change;
  };
  std::vector<Channel> channels_;
};

void reset(Trajectory& out, const SystemInstance& instance, const RateVector& rates, double t_final) {
  if (!(t_final > 0.0) || !std::isfinite(t_final)) throw SimulationError("t_final must be positive and finite");
  const Index m = instance.network().num_reactions();
  out.initial_state = instance.initial_state();
  out.events.clear();
  out.cumulative_flat.clear();
  out.t_final = t_final;
  out.rates = rates;
  out.cumulative_final = Eigen::VectorXd::Zero(m);
  out.final_counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>::Zero(m);
}

void record(Trajectory& out, double t, Index channel, const Eigen::VectorXd& cumulative,
            const SimulationOptions& options) {
  if (out.events.size() >= options.max_events)
    throw SimulationError("event cap of " + std::to_string(options.max_events) + " exceeded at t = " +
                          format_number(t));
  out.events.push_back({t, channel});
  out.cumulative_flat.insert(out.cumulative_flat.end(), cumulative.data(), cumulative.data() + cumulative.size());
  ++out.final_counts(channel);
}

}  // namespace

void simulate_direct_into(Trajectory& out, const SystemInstance& instance, const RateVector& rates, double t_final,
                          UniformStream& stream, const SimulationOptions& options) {
  reset(out, instance, rates, t_final);
  const Kinetics kinetics(instance, rates);
  const Index m = kinetics.size();
  State x = instance.initial_state();
  Eigen::VectorXd a(m);
  Eigen::VectorXd cumulative = Eigen::VectorXd::Zero(m);
  double t = 0.0;

  for (;;) {
    double total = 0.0;
    for (Index j = 0; j < m; ++j) {
      a(j) = kinetics.propensity(j, x);
      total += a(j);
    }
    if (!std::isfinite(total)) throw SimulationError("propensity overflow at t = " + format_number(t));
    if (total <= 0.0) break;

    const double tau = -std::log(stream.next()) / total;
    if (t + tau > t_final) break;
    t += tau;
    cumulative += tau * a;

    const double target = stream.next() * total;
    double running = 0.0;
    Index chosen = -1;
    for (Index j = 0; j < m; ++j) {
      if (a(j) <= 0.0) continue;
      running += a(j);
      chosen = j;
      if (target < running) break;
    }
    kinetics.fire(chosen, x);
    record(out, t, chosen, cumulative, options);
  }
  // a holds the propensities of the state held on (t, t_final].
  cumulative += (t_final - t) * a;
  out.cumulative_final = cumulative;
  out.final_state = x;
}

void simulate_rtc_into(Trajectory& out, const SystemInstance& instance, const RateVector& rates, double t_final,
                       std::span<UniformStream> channel_streams, const SimulationOptions& options) {
  reset(out, instance, rates, t_final);
  const Kinetics kinetics(instance, rates);
  const Index m = kinetics.size();
  if (static_cast<Index>(channel_streams.size()) != m)
    throw SimulationError("random time change simulation needs one stream per reaction channel");

  State x = instance.initial_state();
  Eigen::VectorXd a(m);
  Eigen::VectorXd internal = Eigen::VectorXd::Zero(m);  // T_j: integrated intensity so far
  Eigen::VectorXd next_jump(m);                         // P_j: next jump time of Y_j
  for (Index j = 0; j < m; ++j) next_jump(j) = channel_streams[static_cast<std::size_t>(j)].exponential();
  double t = 0.0;

  for (;;) {
    Index chosen = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < m; ++j) {
      a(j) = kinetics.propensity(j, x);
      if (!std::isfinite(a(j))) throw SimulationError("propensity overflow at t = " + format_number(t));
      if (a(j) <= 0.0) continue;
      const double wait = (next_jump(j) - internal(j)) / a(j);
      if (wait < best) {  // strict: lowest index wins ties
        best = wait;
        chosen = j;
      }
    }
    if (chosen < 0 || t + best > t_final) break;
    t += best;
    internal += best * a;
    internal(chosen) = next_jump(chosen);
    next_jump(chosen) += channel_streams[static_cast<std::size_t>(chosen)].exponential();
    kinetics.fire(chosen, x);
    record(out, t, chosen, internal, options);
  }
  internal += (t_final - t) * a;
  out.cumulative_final = internal;
  out.final_state = x;
}

Trajectory simulate_direct(const SystemInstance& instance, const RateVector& rates, double t_final,
                           UniformStream& stream, const SimulationOptions& options) {
  Trajectory path;
  simulate_direct_into(path, instance, rates, t_final, stream, options);
  return path;
}

Trajectory simulate_direct(const SystemInstance& instance, double t_final, UniformStream& stream,
                           const SimulationOptions& options) {
  return simulate_direct(instance, instance.network().rates(), t_final, stream, options);
}

Trajectory simulate_rtc(const SystemInstance& instance, const RateVector& rates, double t_final,
                        std::span<UniformStream> channel_streams, const SimulationOptions& options) {
  Trajectory path;
  simulate_rtc_into(path, instance, rates, t_final, channel_streams, options);
  return path;
}

Trajectory simulate_rtc(const SystemInstance& instance, double t_final, std::span<UniformStream> channel_streams,
                        const SimulationOptions& options) {
  return simulate_rtc(instance, instance.network().rates(), t_final, channel_streams, options);
}

void simulate_coupled_into(CoupledPair& out, const SystemInstance& instance, Index param_index, double h,
                           Coupling coupling, FdScheme scheme, double t_final, std::uint64_t seed,
                           std::uint64_t trajectory_index, const SimulationOptions& options) {
  const Index m = instance.network().num_reactions();
  if (param_index < 0 || param_index >= m) throw SimulationError("parameter index out of range");
  if (h == 0.0 && !options.allow_zero_perturbation) throw SimulationError("finite-difference perturbation h is zero");
  if (!std::isfinite(h)) throw SimulationError("finite-difference perturbation h is not finite");

  RateVector lower_rates = instance.network().rates();
  RateVector upper_rates = lower_rates;
  upper_rates(param_index) += h;
  if (scheme == FdScheme::two_sided) lower_rates(param_index) -= h;
  if (!(upper_rates(param_index) > 0.0) || !(lower_rates(param_index) > 0.0))
    throw SimulationError("perturbed rate constant must stay positive");

  out.coupling = coupling;
  out.scheme = scheme;
  out.h = h;
  out.param_index = param_index;

  if (coupling == Coupling::CRP) {
    std::vector<UniformStream> lower_streams, upper_streams;
    lower_streams.reserve(static_cast<std::size_t>(m));
    upper_streams.reserve(static_cast<std::size_t>(m));
    for (Index j = 0; j < m; ++j) {
      const auto [lk, uk] = coupled_keys(coupling, scheme, seed, trajectory_index, static_cast<std::uint32_t>(j + 1));
      lower_streams.emplace_back(lk);
      upper_streams.emplace_back(uk);
    }
    simulate_rtc_into(out.lower, instance, lower_rates, t_final, lower_streams, options);
    simulate_rtc_into(out.upper, instance, upper_rates, t_final, upper_streams, options);
  } else {
    const auto [lk, uk] = coupled_keys(coupling, scheme, seed, trajectory_index);
    UniformStream lower_stream(lk);
    UniformStream upper_stream(uk);
    simulate_direct_into(out.lower, instance, lower_rates, t_final, lower_stream, options);
    simulate_direct_into(out.upper, instance, upper_rates, t_final, upper_stream, options);
  }
}

CoupledPair simulate_coupled(const SystemInstance& instance, Index param_index, double h, Coupling coupling,
                             FdScheme scheme, double t_final, std::uint64_t seed, std::uint64_t trajectory_index,
                             const SimulationOptions& options) {
  CoupledPair pair;
  simulate_coupled_into(pair, instance, param_index, h, coupling, scheme, t_final, seed, trajectory_index, options);
  return pair;
}

State state_at(const Trajectory& path, const ReactionNetwork& network, double t) {
  const double times[] = {t};
  return std::move(states_at(path, network, times).front());
}

std::vector<State> states_at(const Trajectory& path, const ReactionNetwork& network, std::span<const double> times) {
  std::vector<State> out;
  out.reserve(times.size());
  const auto& stoich = network.stoichiometry();
  State x = path.initial_state;
  std::size_t k = 0;
  double previous = 0.0;
  for (const double t : times) {
    if (!(t >= 0.0 && t <= path.t_final)) throw std::out_of_range("query time outside [0, t_final]");
    if (t < previous) throw std::invalid_argument("query times must be nondecreasing");
    previous = t;
    if (t == path.t_final) {
      out.push_back(path.final_state);
      continue;
    }
    for (; k < path.events.size() && path.events[k].time <= t; ++k)
      x += stoich.col(path.events[k].channel).cast<std::int64_t>();
    out.push_back(x);
  }
  return out;
}

void write_path_csv(std::ostream& out, const Trajectory& path, const ReactionNetwork& network) {
  const Index n = network.num_species();
  out << "time,channel";
  for (Index i = 0; i < n; ++i) out << ",state_" << (i + 1);
  out << '\n';
  State x = path.initial_state;
  out << "0,";
  for (Index i = 0; i < n; ++i) out << ',' << x(i);
  out << '\n';
  const auto& stoich = network.stoichiometry();
  for (const auto& e : path.events) {
    x += stoich.col(e.channel).cast<std::int64_t>();
    out << format_number(e.time) << ',' << (e.channel + 1);
    for (Index i = 0; i < n; ++i) out << ',' << x(i);
    out << '\n';
  }
}

}  // namespace rxnsens
