#ifndef RXNSENS_GIRSANOV_HPP
#define RXNSENS_GIRSANOV_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rxnsens/model.hpp"
#include "rxnsens/paths.hpp"

namespace rxnsens {

/// Girsanov (likelihood-ratio) weight for the rate constant of one channel.
struct GtWeight {
  Index param_index = 0;
  /// Z(t, c) = (R_j(t) - compensator) / c_j.
  double value = 0.0;
  std::int64_t reaction_count = 0;
  /// Integral of a_j^N(X(s)) over [0, t].
  double compensator = 0.0;
};

/**
 * Weight at time t for the sensitivity with respect to c_j. Mass-action
 * channels depend on c_j multiplicatively, so the general likelihood-ratio
 * weight collapses to the compensated count divided by c_j.
 *
 * Uses the compensator integrals stored in the trajectory; t == t_final is
 * O(1), other times scan the event list.
 */
GtWeight gt_weight(const Trajectory& path, const SystemInstance& instance, Index param_index, double t);

/// Weights at each of the nondecreasing query times, in one forward scan.
std::vector<GtWeight> gt_weights_at(const Trajectory& path, const SystemInstance& instance, Index param_index,
                                    std::span<const double> times);

/// GT estimator sample f(X(t)) Z(t).
template <class Output>
double gt_sample(const Trajectory& path, const SystemInstance& instance, Index param_index, Output&& f, double t) {
  const GtWeight z = gt_weight(path, instance, param_index, t);
  return f(state_at(path, instance.network(), t)) * z.value;
}

}  // namespace rxnsens

#endif  // RXNSENS_GIRSANOV_HPP
