#ifndef RXNSENS_PATHS_HPP
#define RXNSENS_PATHS_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "rxnsens/model.hpp"
#include "rxnsens/random.hpp"

namespace rxnsens {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Event {
  double time;
  Index channel;
};

/**
 * One exact sample path of X^N on [0, t_final], stored as its jump record.
 *
 * cumulative(k, j) is the compensator integral of channel j up to the time of
 * event k; cumulative_final holds the integrals at t_final.
 */
struct Trajectory {
  State initial_state;
  std::vector<Event> events;
  double t_final = 0.0;
  /// Deterministic rate parameters the path was generated with.
  RateVector rates;
  /// Row-major, events.size() x num_reactions.
  std::vector<double> cumulative_flat;
  Eigen::VectorXd cumulative_final;
  State final_state;
  /// R_j(t_final) for every channel.
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> final_counts;

  std::size_t num_events() const { return events.size(); }
  Index num_reactions() const { return rates.size(); }

  Eigen::Map<const Eigen::VectorXd> cumulative(std::size_t event) const {
    return {cumulative_flat.data() + event * static_cast<std::size_t>(num_reactions()), num_reactions()};
  }
};

struct CoupledPair {
  /// Leg at c (one-sided) or c - h (two-sided).
  Trajectory lower;
  /// Leg at c + h.
  Trajectory upper;
  Coupling coupling = Coupling::CRN;
  FdScheme scheme = FdScheme::one_sided;
  double h = 0.0;
  Index param_index = 0;
};

struct SimulationOptions {
  /// Guard against runaway paths; exceeding it is an error.
  std::uint64_t max_events = 100'000'000;
  /// Permit h == 0 in simulate_coupled (coupling sanity checks only).
  bool allow_zero_perturbation = false;
};

/// Gillespie direct method: one uniform for the holding time, one for the channel.
Trajectory simulate_direct(const SystemInstance& instance, const RateVector& rates, double t_final,
                           UniformStream& stream, const SimulationOptions& options = {});
Trajectory simulate_direct(const SystemInstance& instance, double t_final, UniformStream& stream,
                           const SimulationOptions& options = {});

/**
 * Random time change simulation (modified next reaction method). Channel j
 * draws the jump times of its unit-rate Poisson clock Y_j from
 * channel_streams[j] only, and nothing else.
 */
Trajectory simulate_rtc(const SystemInstance& instance, const RateVector& rates, double t_final,
                        std::span<UniformStream> channel_streams, const SimulationOptions& options = {});
Trajectory simulate_rtc(const SystemInstance& instance, double t_final, std::span<UniformStream> channel_streams,
                        const SimulationOptions& options = {});

/// Same as above, reusing the storage of `out`.
void simulate_direct_into(Trajectory& out, const SystemInstance& instance, const RateVector& rates,
                          double t_final, UniformStream& stream, const SimulationOptions& options = {});
void simulate_rtc_into(Trajectory& out, const SystemInstance& instance, const RateVector& rates, double t_final,
                       std::span<UniformStream> channel_streams, const SimulationOptions& options = {});

/**
 * A pair of paths at perturbed parameter values for finite differences.
 * IRN and CRN legs use the direct method; CRP legs use the random time change
 * simulator with shared per-channel clocks.
 */
CoupledPair simulate_coupled(const SystemInstance& instance, Index param_index, double h, Coupling coupling,
                             FdScheme scheme, double t_final, std::uint64_t seed, std::uint64_t trajectory_index,
                             const SimulationOptions& options = {});
void simulate_coupled_into(CoupledPair& out, const SystemInstance& instance, Index param_index, double h,
                           Coupling coupling, FdScheme scheme, double t_final, std::uint64_t seed,
                           std::uint64_t trajectory_index, const SimulationOptions& options = {});

/// Right-continuous evaluation: the state after the last event with time <= t.
State state_at(const Trajectory& path, const ReactionNetwork& network, double t);

/// States at each of the nondecreasing query times, in one forward scan.
std::vector<State> states_at(const Trajectory& path, const ReactionNetwork& network, std::span<const double> times);

/// CSV dump: header `time,channel,state_1..state_n`, an initial row with empty channel, one row per event.
void write_path_csv(std::ostream& out, const Trajectory& path, const ReactionNetwork& network);

}  // namespace rxnsens

#endif  // RXNSENS_PATHS_HPP
