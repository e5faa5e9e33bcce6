#ifndef RXNSENS_OUTPUT_HPP
#define RXNSENS_OUTPUT_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "rxnsens/model.hpp"

namespace rxnsens {

enum class OutputKind { component, square, sin_scaled, indicator_leq };

/**
 * Output function f^N of the state:
 *   component(i)       x_i
 *   square(i)          x_i^2
 *   sin_scaled(i)      sin(x_i / N)
 *   indicator_leq(i,k) 1{x_i <= x_k}
 */
struct OutputSpec {
  OutputKind kind = OutputKind::component;
  Index species = 0;
  Index other = 0;

  double operator()(const Eigen::Ref<const State>& x, std::int64_t system_size) const {
    const auto xi = static_cast<double>(x(species));
    switch (kind) {
      case OutputKind::component: return xi;
      case OutputKind::square: return xi * xi;
      case OutputKind::sin_scaled: return std::sin(xi / static_cast<double>(system_size));
      case OutputKind::indicator_leq: return x(species) <= x(other) ? 1.0 : 0.0;
    }
    return 0.0;
  }

  /// Growth exponent of the limit output in N; none for the indicator.
  std::optional<int> alpha() const;
  std::string to_string(const ReactionNetwork& network) const;
};

/// Binds an OutputSpec to a system size so it can be called as f(x).
struct BoundOutput {
  OutputSpec spec;
  std::int64_t system_size = 1;
  double operator()(const Eigen::Ref<const State>& x) const { return spec(x, system_size); }
};

/// Parses e.g. `component(S1)`, `square(1)`, `indicator_leq(S1,S2)`; species by name or 1-based index.
OutputSpec parse_output(std::string_view text, const ReactionNetwork& network);

}  // namespace rxnsens

#endif  // RXNSENS_OUTPUT_HPP
