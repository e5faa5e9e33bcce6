#include "rxnsens/girsanov.hpp"

namespace rxnsens {

namespace {

void check_param(const Trajectory& path, Index j) {
  if (j < 0 || j >= path.num_reactions()) throw std::out_of_range("parameter index out of range");
  if (!(path.rates(j) > 0.0))
    throw std::domain_error("Girsanov weight is undefined for a zero rate constant (reaction " +
                            std::to_string(j + 1) + ")");
}

GtWeight make_weight(Index j, double rate, std::int64_t count, double compensator) {
  return {j, (static_cast<double>(count) - compensator) / rate, count, compensator};
}

}  // namespace

GtWeight gt_weight(const Trajectory& path, const SystemInstance& instance, Index param_index, double t) {
  if (t == path.t_final) {
    check_param(path, param_index);
    return make_weight(param_index, path.rates(param_index), path.final_counts(param_index),
                       path.cumulative_final(param_index));
  }
  const double times[] = {t};
  return gt_weights_at(path, instance, param_index, times).front();
}

std::vector<GtWeight> gt_weights_at(const Trajectory& path, const SystemInstance& instance, Index param_index,
                                    std::span<const double> times) {
  check_param(path, param_index);
  const auto& network = instance.network();
  const auto& reaction = network.reaction(param_index);
  const double rate = path.rates(param_index);
  const auto& stoich = network.stoichiometry();

  std::vector<GtWeight> out;
  out.reserve(times.size());
  State x = path.initial_state;
  std::size_t k = 0;  // events consumed
  std::int64_t count = 0;
  double previous = 0.0;
  for (const double t : times) {
    if (!(t >= 0.0 && t <= path.t_final)) throw std::out_of_range("query time outside [0, t_final]");
    if (t < previous) throw std::invalid_argument("query times must be nondecreasing");
    previous = t;
    if (t == path.t_final) {
      out.push_back(make_weight(param_index, rate, path.final_counts(param_index), path.cumulative_final(param_index)));
      continue;
    }
    for (; k < path.events.size() && path.events[k].time <= t; ++k) {
      x += stoich.col(path.events[k].channel).cast<std::int64_t>();
      if (path.events[k].channel == param_index) ++count;
    }
    const double since = k == 0 ? t : t - path.events[k - 1].time;
    const double base = k == 0 ? 0.0 : path.cumulative(k - 1)(param_index);
    const double compensator = base + since * propensity(reaction, rate, instance.system_size(), x);
    out.push_back(make_weight(param_index, rate, count, compensator));
  }
  return out;
}

}  // namespace rxnsens
