#ifndef RXNSENS_ORACLES_HPP
#define RXNSENS_ORACLES_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rxnsens/model.hpp"
#include "rxnsens/output.hpp"
#include "rxnsens/paths.hpp"

namespace rxnsens {

// ---------------------------------------------------------------------------
// Birth-death: 0 -> S at N c1, S -> 0 at c2 x, X^N(0) = N x0.
//
// All closed forms are templates on the scalar type so they can be evaluated
// in long double or with Eigen's AutoDiffScalar.

template <class Scalar>
struct BirthDeathParams {
  Scalar c1;
  Scalar c2;
  Scalar x0;
  Scalar N;
  Scalar t;
};

template <class Scalar>
Scalar bd_mean(const BirthDeathParams<Scalar>& p) {
  using std::exp;
  const Scalar decay = exp(-p.c2 * p.t);
  return p.N * p.x0 * decay + p.N * p.c1 / p.c2 * (Scalar(1) - decay);
}

template <class Scalar>
Scalar bd_sens_c1(const BirthDeathParams<Scalar>& p) {
  using std::exp;
  return p.N / p.c2 * (Scalar(1) - exp(-p.c2 * p.t));
}

template <class Scalar>
Scalar bd_sens_c2(const BirthDeathParams<Scalar>& p) {
  using std::exp;
  const Scalar decay = exp(-p.c2 * p.t);
  return -p.N * p.x0 * p.t * decay - p.N * p.c1 / (p.c2 * p.c2) * (Scalar(1) - decay) +
         p.N * p.c1 / p.c2 * p.t * decay;
}

/// Var(X^N(t)).
template <class Scalar>
Scalar bd_var_x(const BirthDeathParams<Scalar>& p) {
  using std::exp;
  const Scalar decay = exp(-p.c2 * p.t);
  return p.N * p.x0 * (Scalar(1) - decay) * decay + p.N * p.c1 / p.c2 * (Scalar(1) - decay);
}

/// Var(S_GT) for f(x) = x and the c1 sensitivity.
template <class Scalar>
Scalar bd_var_gt_c1(const BirthDeathParams<Scalar>& p) {
  using std::exp;
  const Scalar &N = p.N, &c1 = p.c1, &c2 = p.c2, &t = p.t, &x0 = p.x0;
  const Scalar e1 = exp(c2 * t);
  const Scalar e2 = exp(Scalar(2) * c2 * t);
  Scalar s = e2 * N * N * c1 * c1 * t;
  s += N * c1 * t * c2 * e2;
  s += Scalar(2) * e1 * N * N * c1 * c2 * t * x0;
  s += e1 * c2 * c2 * t * N * x0;
  s += c2 * c2 * t * N * N * x0 * x0;
  s -= Scalar(2) * e1 * N * N * c1 * c1 * t;
  s -= e1 * N * c1 * c2 * t;
  s -= Scalar(2) * N * N * c1 * t * c2 * x0;
  s -= N * x0 * t * c2 * c2;
  s += Scalar(3) * N * c1 * e2;
  s += e2 * c2;
  s += Scalar(2) * N * x0 * e1 * c2;
  s += N * N * c1 * c1 * t;
  s -= Scalar(6) * e1 * N * c1;
  s -= e1 * c2;
  s -= Scalar(2) * N * x0 * c2;
  s += Scalar(3) * N * c1;
  return N * exp(Scalar(-2) * c2 * t) / (c1 * c2 * c2) * s;
}

/// Var(S_CGT) for f(x) = x and the c1 sensitivity.
template <class Scalar>
Scalar bd_var_cgt_c1(const BirthDeathParams<Scalar>& p) {
  using std::exp;
  const Scalar &N = p.N, &c1 = p.c1, &c2 = p.c2, &t = p.t, &x0 = p.x0;
  const Scalar e1 = exp(c2 * t);
  const Scalar e2 = exp(Scalar(2) * c2 * t);
  Scalar s = N * c1 * t * c2 * e2;
  s += e1 * c2 * c2 * t * N * x0;
  s -= e1 * N * c1 * c2 * t;
  s -= N * x0 * t * c2 * c2;
  s += N * c1 * e2;
  s += e2 * c2;
  s -= Scalar(2) * e1 * N * c1;
  s -= e1 * c2;
  s += N * c1;
  return N * exp(Scalar(-2) * c2 * t) / (c1 * c2 * c2) * s;
}

/**
 * Var(S_GT) for the c2 sensitivity of the pure-death process (c1 = 0).
 * The final monomial is -e^{-3 c2 t} N^3 x0^3; with N^2 x0^3 the variance
 * would not vanish at t = 0 and disagrees with the exact moment computation.
 */
template <class Scalar>
Scalar pd_var_gt_c2(const BirthDeathParams<Scalar>& p) {
  using std::exp;
  const Scalar &N = p.N, &c2 = p.c2, &t = p.t, &x0 = p.x0;
  const Scalar e1 = exp(-c2 * t);
  const Scalar e2 = exp(Scalar(-2) * c2 * t);
  const Scalar e3 = exp(Scalar(-3) * c2 * t);
  const Scalar n1 = N * x0, n2 = n1 * n1, n3 = n2 * n1;
  const Scalar tc = t * t * c2 * c2;
  Scalar s = e2 * n3;
  s -= Scalar(4) * e2 * n2;
  s += Scalar(3) * e2 * n1;
  s += Scalar(3) * e2 * n2 * tc;
  s -= Scalar(2) * e3 * n1;
  s += Scalar(3) * e3 * n2;
  s += e1 * n2;
  s -= e1 * n1;
  s += e1 * n1 * tc;
  s -= Scalar(4) * e2 * tc * n1;
  s -= e3 * n3;
  return s / (c2 * c2);
}

/// Var(S_CGT) for the c2 sensitivity of the pure-death process (c1 = 0).
template <class Scalar>
Scalar pd_var_cgt_c2(const BirthDeathParams<Scalar>& p) {
  using std::exp;
  const Scalar &N = p.N, &c2 = p.c2, &t = p.t, &x0 = p.x0;
  const Scalar e1 = exp(-c2 * t);
  const Scalar e2 = exp(Scalar(-2) * c2 * t);
  const Scalar e3 = exp(Scalar(-3) * c2 * t);
  const Scalar n1 = N * x0, n2 = n1 * n1;
  const Scalar tc = t * t * c2 * c2;
  Scalar s = Scalar(-2) * e2 * n2;
  s += Scalar(3) * e2 * n1;
  s += e2 * n2 * tc;
  s -= Scalar(2) * e3 * n1;
  s += e3 * n2;
  s += e1 * n2;
  s -= e1 * n1;
  s += e1 * n1 * tc;
  s -= Scalar(4) * e2 * n1 * tc;
  return s / (c2 * c2);
}

// ---------------------------------------------------------------------------
// Reversible isomerization: S1 -> S2 at c1 x1, S2 -> S1 at c2 x2.

/// (E X1(t), E X2(t)) from deterministic initial counts (x10, x20).
template <class Scalar>
Eigen::Matrix<Scalar, 2, 1> iso_mean(Scalar x10, Scalar x20, Scalar c1, Scalar c2, Scalar t) {
  using std::exp;
  const Scalar sum = c1 + c2;
  const Scalar flow = (Scalar(1) - exp(-sum * t)) / sum * (c2 * x20 - c1 * x10);
  return {x10 + flow, x20 - flow};
}

/// d E X1(t) / d c1.
template <class Scalar>
Scalar iso_sens_c1(Scalar x10, Scalar x20, Scalar c1, Scalar c2, Scalar t) {
  using std::exp;
  const Scalar sum = c1 + c2;
  const Scalar decay = exp(-sum * t);
  const Scalar g = (Scalar(1) - decay) / sum;
  const Scalar dg = (t * decay * sum - (Scalar(1) - decay)) / (sum * sum);
  return dg * (c2 * x20 - c1 * x10) - g * x10;
}

/// d E X1(t) / d c2.
template <class Scalar>
Scalar iso_sens_c2(Scalar x10, Scalar x20, Scalar c1, Scalar c2, Scalar t) {
  using std::exp;
  const Scalar sum = c1 + c2;
  const Scalar decay = exp(-sum * t);
  const Scalar g = (Scalar(1) - decay) / sum;
  const Scalar dg = (t * decay * sum - (Scalar(1) - decay)) / (sum * sum);
  return dg * (c2 * x20 - c1 * x10) + g * x20;
}

/**
 * Exact law of X1(t) for reversible isomerization. Molecules switch
 * independently, so X1(t) = Bin(x10, p11) + Bin(x20, p21); pmf(k) = P(X1 = k)
 * and dpmf(k) its derivative in the chosen rate (param 0 for c1, 1 for c2).
 */
struct IsoLaw {
  std::vector<double> pmf;
  std::vector<double> dpmf;
};

IsoLaw iso_law(std::int64_t x10, std::int64_t x20, double c1, double c2, double t, int param);

/// E g(X1, X2) and its derivative, by summation over the exact law.
double iso_expectation(const std::function<double(std::int64_t, std::int64_t)>& g, std::int64_t x10,
                       std::int64_t x20, double c1, double c2, double t);
double iso_sensitivity(const std::function<double(std::int64_t, std::int64_t)>& g, std::int64_t x10,
                       std::int64_t x20, double c1, double c2, double t, int param);

// ---------------------------------------------------------------------------
// Fluid limit dx/dt = F(x) = sum_j nu_j a_j(x) with forward sensitivities.

struct FluidSolution {
  std::vector<double> grid;
  std::vector<Eigen::VectorXd> states;
  /// n x m: column j is dx/dc_j.
  std::vector<Eigen::MatrixXd> sensitivities;
};

/**
 * Classical fixed-step RK4 on the state and the forward sensitivity system
 * dS/dt = (dF/dx) S + dF/dc. The final step is shortened to land on t_final.
 */
FluidSolution fluid_solve(const ReactionNetwork& network, const Eigen::VectorXd& x0, const RateVector& rates,
                          double t_final, double step);
FluidSolution fluid_solve(const SystemInstance& instance, double t_final, double step);

/// F(x) and its Jacobian for mass-action fluid rates.
Eigen::VectorXd fluid_field(const ReactionNetwork& network, const RateVector& rates, const Eigen::VectorXd& x);
Eigen::MatrixXd fluid_jacobian(const ReactionNetwork& network, const RateVector& rates, const Eigen::VectorXd& x);

/**
 * max over s in [0, t_final] of |X^N(s)/N - x(s)| (infinity norm), where x is
 * the fluid trajectory. Each constant piece of the path is compared at both
 * of its ends, which is exact whenever x is monotone between jumps.
 */
double fluid_sup_deviation(const Trajectory& path, const ReactionNetwork& network, std::int64_t system_size,
                           const std::function<Eigen::VectorXd(double)>& fluid);

// ---------------------------------------------------------------------------
// Recognizing networks with closed forms.

enum class KnownModel { none, birth_death, reversible_isomerization };

struct ModelMatch {
  KnownModel kind = KnownModel::none;
  /// birth_death: production / degradation. isomerization: A -> B / B -> A.
  Index first_channel = 0;
  Index second_channel = 0;
  /// isomerization: species A and B.
  Index species_a = 0;
  Index species_b = 0;
};

ModelMatch identify_model(const ReactionNetwork& network);

/**
 * Exact d E f^N(X^N(t)) / d c_param when a closed form or exact law is
 * available: every output on reversible isomerization, and component output
 * on birth-death. nullopt otherwise.
 */
std::optional<double> exact_sensitivity(const SystemInstance& instance, const OutputSpec& output, Index param_index,
                                        double t);

}  // namespace rxnsens

#endif  // RXNSENS_ORACLES_HPP
