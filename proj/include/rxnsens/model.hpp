#ifndef RXNSENS_MODEL_HPP
#define RXNSENS_MODEL_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rxnsens {

using Index = Eigen::Index;

/// Copy-number state X^N(t).
using State = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;
/// Per-channel rate parameters (deterministic convention).
using RateVector = Eigen::VectorXd;
using IntMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& what, int line = 0);
  /// 1-based line of the model document, 0 when not tied to a line.
  int line() const { return line_; }

 private:
  int line_;
};

struct Reaction {
  Eigen::VectorXi reactants;  // consumed counts
  Eigen::VectorXi products;   // created counts
  double rate_const = 0.0;

  /// Net change of the state when this channel fires.
  Eigen::VectorXi net() const { return products - reactants; }
  /// Molecularity: total number of consumed molecules.
  int order() const { return reactants.sum(); }
};

/**
 * Species plus mass-action reaction channels. Immutable once built.
 *
 * Rate constants are stored in the deterministic (system-size independent)
 * convention; see to_stochastic_param().
 */
class ReactionNetwork {
 public:
  ReactionNetwork(std::vector<std::string> species, std::vector<Reaction> reactions,
                  bool allow_zero_rates = false);

  Index num_species() const { return static_cast<Index>(species_.size()); }
  Index num_reactions() const { return static_cast<Index>(reactions_.size()); }

  const std::vector<std::string>& species() const { return species_; }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  const Reaction& reaction(Index j) const { return reactions_[static_cast<std::size_t>(j)]; }

  std::optional<Index> species_index(std::string_view name) const;

  /// n x m matrix of net stoichiometric vectors (column j = nu_j).
  const IntMatrix& stoichiometry() const { return stoich_; }
  /// n x m matrix of consumed counts (column j = nu''_j).
  const IntMatrix& reactant_matrix() const { return reactant_; }

  RateVector rates() const;

 private:
  std::vector<std::string> species_;
  std::vector<Reaction> reactions_;
  IntMatrix stoich_;
  IntMatrix reactant_;
};

struct ParseOptions {
  /// Accept c_j = 0. Only meaningful for finite-difference studies.
  bool allow_zero_rates = false;
};

ReactionNetwork parse_network(std::string_view text, const ParseOptions& options = {});
ReactionNetwork load_network(const std::filesystem::path& path, const ParseOptions& options = {});

/// A network at a fixed system size N with initial concentration x0.
class SystemInstance {
 public:
  SystemInstance(ReactionNetwork network, std::int64_t system_size, Eigen::VectorXd initial_concentration);

  const ReactionNetwork& network() const { return network_; }
  std::int64_t system_size() const { return system_size_; }
  const Eigen::VectorXd& initial_concentration() const { return x0_; }
  /// X^N(0) = N x0.
  const State& initial_state() const { return initial_state_; }

 private:
  ReactionNetwork network_;
  std::int64_t system_size_;
  Eigen::VectorXd x0_;
  State initial_state_;
};

/// C(x, k) evaluated in integer arithmetic where it fits.
double binomial(std::int64_t x, int k);

/**
 * Stochastic mass-action intensity
 *   a_j^N(x, c) = c_j / N^{|nu''_j| - 1} * prod_i C(x_i, nu''_ij).
 * Zero whenever some x_i < nu''_ij.
 */
double propensity(const Reaction& reaction, double rate, std::int64_t system_size,
                  const Eigen::Ref<const State>& state);
double propensity(const SystemInstance& instance, const Eigen::Ref<const State>& state, Index j);
double propensity(const SystemInstance& instance, const RateVector& rates,
                  const Eigen::Ref<const State>& state, Index j);

/// Density-dependent limit a_j(x) = c_j prod_i x_i^{nu''_ij} / nu''_ij!.
double fluid_rate(const Reaction& reaction, double rate, const Eigen::Ref<const Eigen::VectorXd>& conc);
double fluid_rate(const ReactionNetwork& network, const Eigen::Ref<const Eigen::VectorXd>& conc, Index j);

/// c'_j = c_j / N^{order - 1}.
double to_stochastic_param(double rate, std::int64_t system_size, int order);
/// c_j = c'_j * N^{order - 1}.
double to_deterministic_param(double stochastic_rate, std::int64_t system_size, int order);
/// Sensitivity w.r.t. c'_j given the one w.r.t. c_j: S'_j = S_j * N^{order - 1}.
double convert_sensitivity(double deterministic_sensitivity, std::int64_t system_size, int order);

}  // namespace rxnsens

#endif  // RXNSENS_MODEL_HPP
