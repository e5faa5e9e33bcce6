// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rxnsens/config.hpp"
#include "rxnsens/estimators.hpp"
#include "rxnsens/girsanov.hpp"
#include "rxnsens/oracles.hpp"
#include "rxnsens/study.hpp"

using namespace rxnsens;
namespace fs = std::filesystem;

namespace {

const fs::path kRecipes = fs::path(RXNSENS_SOURCE_DIR) / "recipes";

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  while (!o.detail.empty() && (o.detail.back() == ' ' || o.detail.back() == ';')) o.detail.pop_back();
  std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::map<Method, double> slopes_of(const ScalingReport& r) {
  std::map<Method, double> out;
  for (const auto& s : r.slopes)
    if (s.fit) out[s.method] = s.fit->slope;
  return out;
}

/// Checks each method's slope against [lo, hi]; missing slopes fail.
Outcome slope_bands(const ScalingReport& r, const std::vector<std::tuple<Method, double, double>>& bands,
                    const std::string& prefix = "") {
  const auto slopes = slopes_of(r);
  Outcome o{true, prefix};
  for (const auto& [m, lo, hi] : bands) {
    const auto it = slopes.find(m);
    const bool ok = it != slopes.end() && it->second >= lo && it->second <= hi;
    o.pass = o.pass && ok;
    o.detail += std::string(method_name(m)) + "=" + (it == slopes.end() ? "none" : fmt(it->second)) + (ok ? " " : "(!) ");
  }
  return o;
}

const std::vector<std::tuple<Method, double, double>> kIsomerizationBands = {
    {Method::GT, 0.4, 0.6}, {Method::CGT, -0.1, 0.1}, {Method::FD1_CRN, -0.62, -0.4}};

ScalingReport run_recipe(const char* name) {
  const auto loaded = load_scaling_config(kRecipes / name);
  return run_scaling_study(loaded.network, loaded.config);
}

/// f(X(t)) and Z(t) for channel `param` over ns direct-method paths.
std::pair<std::vector<double>, std::vector<double>> girsanov_pairs(const SystemInstance& inst, Index param, double t,
                                                                   std::size_t ns, std::uint64_t seed) {
  std::vector<double> f(ns), z(ns);
  Trajectory path;
  for (std::size_t i = 0; i < ns; ++i) {
    UniformStream s({seed, i, 0, Leg::nominal});
    simulate_direct_into(path, inst, inst.network().rates(), t, s);
    f[i] = static_cast<double>(path.final_state(0));
    z[i] = gt_weight(path, inst, param, t).value;
  }
  return {f, z};
}

/// |sample variance - exact| against 3 SE of the sample variance.
bool variance_matches(std::span<const double> samples, double exact, std::string& detail, const char* label) {
  const auto st = sample_stats(samples);
  const double se = variance_standard_error(st);
  const bool ok = std::abs(st.variance - exact) <= 3.0 * se;
  detail += std::string(label) + " " + fmt(st.variance) + " vs " + fmt(exact) + " (" +
            fmt(std::abs(st.variance - exact) / se) + " SE)" + (ok ? "; " : "(!); ");
  return ok;
}

}  // namespace

int main() {
  std::printf("acceptance: %d criteria\n", 11);

  criterion(1, "isomerization slopes, f = x1", [] { return slope_bands(run_recipe("isomerization_x1.cfg"), kIsomerizationBands); });

  criterion(2, "isomerization slopes, f = x1^2 and sin(x1/N)", [] {
    const auto a = slope_bands(run_recipe("isomerization_square.cfg"), kIsomerizationBands, "x1^2: ");
    const auto b = slope_bands(run_recipe("isomerization_sin.cfg"), kIsomerizationBands, "sin: ");
    return Outcome{a.pass && b.pass, a.detail + "| " + b.detail};
  });

  criterion(3, "decaying-dimerizing slopes", [] {
    return slope_bands(run_recipe("dimerizing.cfg"), {{Method::GT, 0.4689 - 0.15, 0.4689 + 0.15},
                                                  {Method::CGT, -0.0040 - 0.15, -0.0040 + 0.15},
                                                  {Method::FD1_CRN, -0.6022 - 0.15, -0.6022 + 0.15}});
  });

  criterion(4, "GT unbiasedness over 20 seeds", [] {
    const auto net = parse_network("S1 -> S2 @ 0.3\nS2 -> S1 @ 0.2\n");
    const SystemInstance inst(net, 100, Eigen::Vector2d(1, 1));
    const auto out = parse_output("component(S1)", net);
    const double truth = iso_sens_c1<double>(100, 100, 0.3, 0.2, 10.0);
    int misses = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto s = run_estimate(inst, out, 0, Method::GT, 10.0, 10000, 0.0, seed);
      const double k = std::abs(s.point - truth) / s.std_error;
      worst = std::max(worst, k);
      misses += k > 3.0;
    }
    return Outcome{misses <= 1, "misses " + std::to_string(misses) + "/20, worst " + fmt(worst) + " SE"};
  });

  // Samples shared by criteria 5 and 7.
  const auto bd_net = parse_network("0 -> S @ 1\nS -> 0 @ 1\n");
  const SystemInstance bd_inst(bd_net, 10, Eigen::VectorXd::Constant(1, 1.0));
  const auto [bd_f, bd_z] = girsanov_pairs(bd_inst, 0, 2.0, 100000, 501);

  criterion(5, "closed-form estimator variances", [&] {
    std::string d;
    std::vector<double> gt(bd_f.size());
    for (std::size_t i = 0; i < gt.size(); ++i) gt[i] = bd_f[i] * bd_z[i];
    const BirthDeathParams<double> p{1.0, 1.0, 1.0, 10.0, 2.0};
    bool ok = variance_matches(gt, bd_var_gt_c1(p), d, "bd GT");
    ok &= variance_matches(cgt_products(bd_f, bd_z), bd_var_cgt_c1(p), d, "bd CGT");

    const auto pd_net = parse_network("S -> 0 @ 1\n");
    const SystemInstance pd_inst(pd_net, 10, Eigen::VectorXd::Constant(1, 1.0));
    const auto [f, z] = girsanov_pairs(pd_inst, 0, 1.0, 100000, 502);
    std::vector<double> pgt(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) pgt[i] = f[i] * z[i];
    const BirthDeathParams<double> q{0.0, 1.0, 1.0, 10.0, 1.0};
    ok &= variance_matches(pgt, pd_var_gt_c2(q), d, "pd GT");
    ok &= variance_matches(cgt_products(f, z), pd_var_cgt_c2(q), d, "pd CGT");
    return Outcome{ok, d};
  });

  criterion(6, "martingale mean of Z", [] {
    struct Case {
      const char* name;
      const char* text;
      Eigen::VectorXd x0;
      double t;
    };
    const std::vector<Case> cases = {
        {"isomerization", "S1 -> S2 @ 0.3\nS2 -> S1 @ 0.2\n", Eigen::Vector2d(1, 1), 10.0},
        {"birth-death", "0 -> S @ 1\nS -> 0 @ 1\n", Eigen::VectorXd::Constant(1, 1.0), 2.0},
        {"dimerizing", "S1 -> 0 @ 1.0\n2*S1 -> S2 @ 0.002\nS2 -> 2*S1 @ 0.5\nS2 -> S3 @ 0.04\n",
         Eigen::Vector3d(10, 0, 0), 5.0},
    };
    Outcome o{true, ""};
    std::uint64_t seed = 600;
    for (const auto& c : cases) {
      const auto net = parse_network(c.text);
      const SystemInstance inst(net, 10, c.x0);
      const auto z = girsanov_pairs(inst, 0, c.t, 100000, ++seed).second;
      const auto st = sample_stats(z);
      const double k = std::abs(st.mean) / std::sqrt(st.variance / static_cast<double>(z.size()));
      o.pass = o.pass && k <= 3.0;
      o.detail += std::string(c.name) + " " + fmt(k) + " SE" + (k <= 3.0 ? "; " : "(!); ");
    }
    return o;
  });

  criterion(7, "GT/CGT variance relation on empirical moments", [&] {
    const auto raw = gt_cgt_variance_identity(bd_f, bd_z);
    const double e_raw = std::abs(raw.var_cgt_from_gt - raw.var_cgt) / raw.var_cgt;
    std::vector<double> zc(bd_z.begin(), bd_z.end());
    double zbar = 0.0;
    for (double v : zc) zbar += v;
    zbar /= static_cast<double>(zc.size());
    for (double& v : zc) v -= zbar;
    const auto cen = gt_cgt_variance_identity(bd_f, zc);
    const double e_cen = std::abs(cen.var_cgt_zero_mean_form - cen.var_cgt) / cen.var_cgt;
    return Outcome{e_raw <= 1e-9 && e_cen <= 1e-9,
                   "relative error " + fmt(e_raw) + " (general form), " + fmt(e_cen) + " (centered Z)"};
  });

  criterion(8, "coupling ordering of FD1 variances", [] {
    const auto net = parse_network("S1 -> S2 @ 0.3\nS2 -> S1 @ 0.2\n");
    const SystemInstance inst(net, 100, Eigen::Vector2d(1, 1));
    const auto f = [](const auto& x) { return static_cast<double>(x(0)); };
    auto run = [&](Coupling c) {
      std::vector<double> q(10000);
      CoupledPair pair;
      for (std::size_t i = 0; i < q.size(); ++i) {
        simulate_coupled_into(pair, inst, 0, 0.01, c, FdScheme::one_sided, 10.0, 800, i);
        q[i] = fd_quotient(f(pair.upper.final_state), f(pair.lower.final_state), 0.01, FdScheme::one_sided);
      }
      const auto st = sample_stats(q);
      return std::pair{st.variance, variance_standard_error(st)};
    };
    const auto [irn, irn_se] = run(Coupling::IRN);
    Outcome o{true, "IRN " + fmt(irn) + "; "};
    for (auto c : {Coupling::CRN, Coupling::CRP}) {
      const auto [v, se] = run(c);
      const bool ok = irn - v > 3.0 * std::hypot(irn_se, se);
      o.pass = o.pass && ok;
      o.detail += std::string(c == Coupling::CRN ? "CRN " : "CRP ") + fmt(v) + " (gap " +
                  fmt((irn - v) / std::hypot(irn_se, se)) + " SE)" + (ok ? "; " : "(!); ");
    }
    return o;
  });

  criterion(9, "fluid limit convergence", [] {
    const auto net = parse_network("S1 -> S2 @ 0.3\nS2 -> S1 @ 0.2\n");
    const auto fluid = [](double t) -> Eigen::VectorXd { return iso_mean<double>(1, 1, 0.3, 0.2, t); };
    std::vector<double> medians;
    for (std::int64_t N : {100, 1000, 10000}) {
      const SystemInstance inst(net, N, Eigen::Vector2d(1, 1));
      std::vector<double> sup(100);
      for (std::size_t i = 0; i < sup.size(); ++i) {
        UniformStream s({900, i, static_cast<std::uint32_t>(0), Leg::nominal});
        sup[i] = fluid_sup_deviation(simulate_direct(inst, 10.0, s), net, N, fluid);
      }
      std::nth_element(sup.begin(), sup.begin() + 50, sup.end());
      const double hi = sup[50];
      const double lo = *std::max_element(sup.begin(), sup.begin() + 50);
      medians.push_back(0.5 * (lo + hi));
    }
    const double ratio = medians[0] / medians[2];
    const bool ok = medians[0] > medians[1] && medians[1] > medians[2] && ratio >= 3.0 && ratio <= 30.0;
    return Outcome{ok, "medians " + fmt(medians[0]) + ", " + fmt(medians[1]) + ", " + fmt(medians[2]) + "; ratio " +
                           fmt(ratio)};
  });

  criterion(10, "variance grows linearly in T", [] {
    const auto loaded = load_time_study_config(kRecipes / "time_study.cfg");
    const auto rows = run_time_study(loaded.network, loaded.config);
    Outcome o{true, ""};
    for (Method m : {Method::GT, Method::CGT}) {
      const auto fit = time_variance_fit(rows, m);
      const bool ok = fit && fit->r_squared > 0.95;
      o.pass = o.pass && ok;
      o.detail += std::string(method_name(m)) + " R^2 " + (fit ? fmt(fit->r_squared) : "none") + (ok ? "; " : "(!); ");
    }
    return o;
  });

  criterion(11, "worker-count determinism", [] {
    auto scaling = load_scaling_config(kRecipes / "isomerization_x1.cfg");
    scaling.config.ns = {2000};
    scaling.config.methods = {Method::GT, Method::CGT, Method::FD1_CRN, Method::FD2_IRN, Method::FD1_CRP};
    auto time = load_time_study_config(kRecipes / "time_study.cfg");
    time.config.ns = 2000;
    time.config.methods = {Method::GT, Method::CGT, Method::FD2_CRN};
    const auto render = [&](unsigned workers) {
      std::ostringstream out;
      scaling.config.workers = workers;
      const auto report = run_scaling_study(scaling.network, scaling.config);
      const auto header = scaling_header(scaling);
      write_scaling_csv(out, header, scaling.config, scaling.network, report);
      write_slopes_csv(out, header, scaling.config, report);
      time.config.workers = workers;
      const auto rows = run_time_study(time.network, time.config);
      write_time_csv(out, time_study_header(time), time.config, time.network, rows);
      return out.str();
    };
    const std::string a = render(1), b = render(8);
    return Outcome{a == b, std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "differ")};
  });

  std::printf("acceptance: %d of 11 passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
