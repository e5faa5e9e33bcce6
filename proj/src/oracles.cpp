#include "rxnsens/oracles.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace rxnsens {

namespace {

/// Binomial pmf over k = 0..n.
std::vector<double> binomial_pmf(std::int64_t n, double p) {
  std::vector<double> pmf(static_cast<std::size_t>(n + 1), 0.0);
  if (p <= 0.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (p >= 1.0) {
    pmf.back() = 1.0;
    return pmf;
  }
  const double lp = std::log(p), lq = std::log1p(-p);
  const double lgn = std::lgamma(static_cast<double>(n) + 1.0);
  for (std::int64_t k = 0; k <= n; ++k) {
    const auto kd = static_cast<double>(k);
    pmf[static_cast<std::size_t>(k)] =
        std::exp(lgn - std::lgamma(kd + 1.0) - std::lgamma(static_cast<double>(n - k) + 1.0) + kd * lp +
                 static_cast<double>(n - k) * lq);
  }
  return pmf;
}

/// d/dp Bin(k; n, p) = n [Bin(k-1; n-1, p) - Bin(k; n-1, p)].
std::vector<double> binomial_pmf_dp(std::int64_t n, double p) {
  std::vector<double> d(static_cast<std::size_t>(n + 1), 0.0);
  if (n == 0) return d;
  const auto lower = binomial_pmf(n - 1, p);
  for (std::int64_t k = 0; k <= n; ++k) {
    const double left = k >= 1 ? lower[static_cast<std::size_t>(k - 1)] : 0.0;
    const double right = k <= n - 1 ? lower[static_cast<std::size_t>(k)] : 0.0;
    d[static_cast<std::size_t>(k)] = static_cast<double>(n) * (left - right);
  }
  return d;
}

std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

}  // namespace

IsoLaw iso_law(std::int64_t x10, std::int64_t x20, double c1, double c2, double t, int param) {
  if (!(c1 + c2 > 0.0)) throw std::domain_error("isomerization law needs c1 + c2 > 0");
  if (param != 0 && param != 1) throw std::invalid_argument("isomerization parameter must be 0 (c1) or 1 (c2)");
  const double s = c1 + c2;
  const double e = std::exp(-s * t);
  // Probability that a molecule starting as S1 (resp. S2) is S1 at time t.
  const double p11 = (c2 + c1 * e) / s;
  const double p21 = c2 * (1.0 - e) / s;
  double dp11, dp21;
  if (param == 0) {
    dp11 = (e - c1 * t * e) / s - (c2 + c1 * e) / (s * s);
    dp21 = c2 * t * e / s - c2 * (1.0 - e) / (s * s);
  } else {
    dp11 = (1.0 - c1 * t * e) / s - (c2 + c1 * e) / (s * s);
    dp21 = ((1.0 - e) + c2 * t * e) / s - c2 * (1.0 - e) / (s * s);
  }
  const auto a = binomial_pmf(x10, p11);
  const auto b = binomial_pmf(x20, p21);
  auto da = binomial_pmf_dp(x10, p11);
  auto db = binomial_pmf_dp(x20, p21);
  for (auto& v : da) v *= dp11;
  for (auto& v : db) v *= dp21;

  IsoLaw law;
  law.pmf = convolve(a, b);
  law.dpmf = convolve(da, b);
  const auto other = convolve(a, db);
  for (std::size_t k = 0; k < law.dpmf.size(); ++k) law.dpmf[k] += other[k];
  return law;
}

double iso_expectation(const std::function<double(std::int64_t, std::int64_t)>& g, std::int64_t x10,
                       std::int64_t x20, double c1, double c2, double t) {
  const auto law = iso_law(x10, x20, c1, c2, t, 0);
  const std::int64_t total = x10 + x20;
  double sum = 0.0;
  for (std::size_t k = 0; k < law.pmf.size(); ++k) {
    const auto x1 = static_cast<std::int64_t>(k);
    sum += g(x1, total - x1) * law.pmf[k];
  }
  return sum;
}

double iso_sensitivity(const std::function<double(std::int64_t, std::int64_t)>& g, std::int64_t x10,
                       std::int64_t x20, double c1, double c2, double t, int param) {
  const auto law = iso_law(x10, x20, c1, c2, t, param);
  const std::int64_t total = x10 + x20;
  double sum = 0.0;
  for (std::size_t k = 0; k < law.dpmf.size(); ++k) {
    const auto x1 = static_cast<std::int64_t>(k);
    sum += g(x1, total - x1) * law.dpmf[k];
  }
  return sum;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd fluid_field(const ReactionNetwork& network, const RateVector& rates, const Eigen::VectorXd& x) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(network.num_species());
  for (Index j = 0; j < network.num_reactions(); ++j)
    f += network.stoichiometry().col(j).cast<double>() * fluid_rate(network.reaction(j), rates(j), x);
  return f;
}

namespace {

/// d a_j / d x_i for mass-action fluid rates.
double fluid_rate_partial(const Reaction& r, double rate, const Eigen::VectorXd& x, Index i) {
  const int k = r.reactants(i);
  if (k == 0) return 0.0;
  double value = rate;
  for (Index l = 0; l < x.size(); ++l) {
    const int kl = r.reactants(l);
    double fact = 1.0;
    for (int q = 2; q <= kl; ++q) fact *= q;
    if (l == i) value *= kl * std::pow(x(l), kl - 1) / fact;
    else value *= std::pow(x(l), kl) / fact;
  }
  return value;
}

}  // namespace

Eigen::MatrixXd fluid_jacobian(const ReactionNetwork& network, const RateVector& rates, const Eigen::VectorXd& x) {
  const Index n = network.num_species();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (Index j = 0; j < network.num_reactions(); ++j) {
    const auto nu = network.stoichiometry().col(j).cast<double>();
    for (Index i = 0; i < n; ++i) {
      const double d = fluid_rate_partial(network.reaction(j), rates(j), x, i);
      if (d != 0.0) jac.col(i) += nu * d;
    }
  }
  return jac;
}

FluidSolution fluid_solve(const ReactionNetwork& network, const Eigen::VectorXd& x0, const RateVector& rates,
                          double t_final, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("fluid step must be positive");
  if (!(t_final >= 0.0)) throw std::invalid_argument("fluid horizon must be nonnegative");
  const Index n = network.num_species();
  const Index m = network.num_reactions();
  if (x0.size() != n || rates.size() != m) throw std::invalid_argument("fluid_solve: dimension mismatch");

  // dF/dc_j = nu_j a_j(x) / c_j, evaluated as nu_j * a_j(x; c_j = 1).
  const auto rhs = [&](const Eigen::VectorXd& x, const Eigen::MatrixXd& sens, Eigen::VectorXd& dx,
                       Eigen::MatrixXd& ds) {
    dx = fluid_field(network, rates, x);
    ds = fluid_jacobian(network, rates, x) * sens;
    for (Index j = 0; j < m; ++j)
      ds.col(j) += network.stoichiometry().col(j).cast<double>() * fluid_rate(network.reaction(j), 1.0, x);
  };

  FluidSolution sol;
  Eigen::VectorXd x = x0;
  Eigen::MatrixXd sens = Eigen::MatrixXd::Zero(n, m);
  sol.grid.push_back(0.0);
  sol.states.push_back(x);
  sol.sensitivities.push_back(sens);

  Eigen::VectorXd k1, k2, k3, k4;
  Eigen::MatrixXd s1, s2, s3, s4;
  const auto steps = static_cast<std::int64_t>(std::ceil(t_final / step - 1e-12));
  for (std::int64_t i = 0; i < steps; ++i) {
    const double t0 = static_cast<double>(i) * step;
    const double dt = std::min(step, t_final - t0);
    rhs(x, sens, k1, s1);
    rhs(x + 0.5 * dt * k1, sens + 0.5 * dt * s1, k2, s2);
    rhs(x + 0.5 * dt * k2, sens + 0.5 * dt * s2, k3, s3);
    rhs(x + dt * k3, sens + dt * s3, k4, s4);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    sens += dt / 6.0 * (s1 + 2.0 * s2 + 2.0 * s3 + s4);
    if (!x.allFinite() || !sens.allFinite())
      throw std::runtime_error("nonfinite fluid state at t = " + std::to_string(t0 + dt));
    sol.grid.push_back(i + 1 == steps ? t_final : t0 + dt);
    sol.states.push_back(x);
    sol.sensitivities.push_back(sens);
  }
  return sol;
}

FluidSolution fluid_solve(const SystemInstance& instance, double t_final, double step) {
  return fluid_solve(instance.network(), instance.initial_concentration(), instance.network().rates(), t_final, step);
}

// ---------------------------------------------------------------------------

double fluid_sup_deviation(const Trajectory& path, const ReactionNetwork& network, std::int64_t system_size,
                           const std::function<Eigen::VectorXd(double)>& fluid) {
  const IntMatrix& nu = network.stoichiometry();
  const double n = static_cast<double>(system_size);
  Eigen::VectorXd x = path.initial_state.cast<double>() / n;
  double worst = 0.0;
  double start = 0.0;
  const auto piece = [&](double a, double b) {
    worst = std::max(worst, (x - fluid(a)).cwiseAbs().maxCoeff());
    worst = std::max(worst, (x - fluid(b)).cwiseAbs().maxCoeff());
  };
  for (const Event& e : path.events) {
    piece(start, e.time);
    x += nu.col(e.channel).cast<double>() / n;
    start = e.time;
  }
  piece(start, path.t_final);
  return worst;
}

ModelMatch identify_model(const ReactionNetwork& network) {
  ModelMatch match;
  if (network.num_reactions() != 2) return match;
  const auto& r0 = network.reaction(0);
  const auto& r1 = network.reaction(1);

  if (network.num_species() == 1) {
    const auto is_birth = [](const Reaction& r) { return r.reactants(0) == 0 && r.products(0) == 1; };
    const auto is_death = [](const Reaction& r) { return r.reactants(0) == 1 && r.products(0) == 0; };
    if (is_birth(r0) && is_death(r1)) match = {KnownModel::birth_death, 0, 1, 0, 0};
    else if (is_birth(r1) && is_death(r0)) match = {KnownModel::birth_death, 1, 0, 0, 0};
    return match;
  }

  if (network.num_species() == 2) {
    // Unimolecular A -> B, returns (A, B) when the reaction has that shape.
    const auto conversion = [](const Reaction& r) -> std::optional<std::pair<Index, Index>> {
      if (r.reactants.sum() != 1 || r.products.sum() != 1) return std::nullopt;
      Index from = 0, to = 0;
      r.reactants.maxCoeff(&from);
      r.products.maxCoeff(&to);
      if (from == to) return std::nullopt;
      return std::make_pair(from, to);
    };
    const auto a = conversion(r0);
    const auto b = conversion(r1);
    if (a && b && a->first == b->second && a->second == b->first)
      match = {KnownModel::reversible_isomerization, 0, 1, a->first, a->second};
  }
  return match;
}

std::optional<double> exact_sensitivity(const SystemInstance& instance, const OutputSpec& output, Index param_index,
                                        double t) {
  const auto& network = instance.network();
  const ModelMatch match = identify_model(network);
  const auto N = instance.system_size();
  const State& x0 = instance.initial_state();

  if (match.kind == KnownModel::birth_death) {
    if (output.kind != OutputKind::component) return std::nullopt;
    const BirthDeathParams<double> p{network.reaction(match.first_channel).rate_const,
                                     network.reaction(match.second_channel).rate_const,
                                     instance.initial_concentration()(0), static_cast<double>(N), t};
    if (param_index == match.first_channel) return bd_sens_c1(p);
    if (param_index == match.second_channel) return bd_sens_c2(p);
    return std::nullopt;
  }

  if (match.kind == KnownModel::reversible_isomerization) {
    const double c1 = network.reaction(match.first_channel).rate_const;
    const double c2 = network.reaction(match.second_channel).rate_const;
    const int param = param_index == match.first_channel ? 0 : 1;
    const auto xa = x0(match.species_a), xb = x0(match.species_b);
    if (output.kind == OutputKind::component) {
      // d E X_B = -d E X_A.
      const double sign = output.species == match.species_a ? 1.0 : -1.0;
      const double d = param == 0 ? iso_sens_c1<double>(xa, xb, c1, c2, t) : iso_sens_c2<double>(xa, xb, c1, c2, t);
      return sign * d;
    }
    const auto g = [&](std::int64_t a, std::int64_t b) {
      State x(2);
      x(match.species_a) = a;
      x(match.species_b) = b;
      return output(x, N);
    };
    return iso_sensitivity(g, xa, xb, c1, c2, t, param);
  }
  return std::nullopt;
}

}  // namespace rxnsens
