#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rxnsens/config.hpp"
#include "rxnsens/estimators.hpp"
#include "rxnsens/format.hpp"
#include "rxnsens/oracles.hpp"
#include "rxnsens/output.hpp"
#include "rxnsens/paths.hpp"
#include "rxnsens/random.hpp"
#include "rxnsens/study.hpp"

namespace fs = std::filesystem;
using namespace rxnsens;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kModel = 2, kRuntime = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  cmd->add_option("--workers", c.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--out-dir", c.out_dir, "Directory for output files")->capture_default_str();
}

std::ofstream open_output(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  const auto path = fs::path(dir) / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

std::string header_line(const std::string& key, const std::string& value) {
  return "# config: " + key + " = " + value + "\n";
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + format_number(xs[i]);
  return s;
}

SystemInstance make_instance(const ReactionNetwork& net, std::int64_t N, const std::vector<double>& x0) {
  if (static_cast<Index>(x0.size()) != net.num_species())
    throw UsageError("--x0 needs " + std::to_string(net.num_species()) + " values");
  try {
    return SystemInstance(net, N, Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<Index>(x0.size())));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string model;
  std::int64_t N = 1;
  std::vector<double> x0;
  double t_final = 1.0;
  std::size_t paths = 1000;
  std::string simulator = "direct";
  bool dump = false;
  std::uint64_t max_events = SimulationOptions{}.max_events;
};

int cmd_simulate(const SimulateArgs& a, const Common& c) {
  const fs::path model_path = fs::absolute(a.model).lexically_normal();
  const auto net = load_network(model_path);
  const auto instance = make_instance(net, a.N, a.x0);
  if (!(a.t_final >= 0.0)) throw UsageError("--t-final must be nonnegative");
  if (a.paths < 1) throw UsageError("--paths must be positive");
  SimulationOptions opts;
  opts.max_events = a.max_events;
  const bool rtc = a.simulator == "rtc";
  const auto seed = derive_seed(c.seed, {0x53494d55});  // "SIMU"

  std::string header = "# rxnsens " + std::string(kVersion) + "\n# command: simulate\n";
  header += header_line("model", model_path.string());
  header += header_line("N", std::to_string(a.N));
  header += header_line("x0", join(a.x0));
  header += header_line("t_final", format_number(a.t_final));
  header += header_line("paths", std::to_string(a.paths));
  header += header_line("simulator", a.simulator);
  header += header_line("seed", std::to_string(c.seed));

  const Index n = net.num_species();
  std::vector<State> finals(a.paths);
  const RateVector rates = net.rates();
  parallel_for(a.paths, c.workers, [&](std::size_t begin, std::size_t end) {
    Trajectory path;
    std::vector<UniformStream> streams;
    for (std::size_t i = begin; i < end; ++i) {
      if (rtc) {
        streams.clear();
        for (Index j = 0; j < net.num_reactions(); ++j)
          streams.emplace_back(StreamKey{seed, i, static_cast<std::uint32_t>(j + 1), Leg::nominal});
        simulate_rtc_into(path, instance, rates, a.t_final, streams, opts);
      } else {
        UniformStream stream({seed, i, 0, Leg::nominal});
        simulate_direct_into(path, instance, rates, a.t_final, stream, opts);
      }
      finals[i] = path.final_state;
      if (a.dump) {
        auto out = open_output(c.out_dir, "path_" + std::to_string(i + 1) + ".csv");
        out << header << "# path: " << i + 1 << "\n";
        write_path_csv(out, path, net);
      }
    }
  });

  std::cout << "species,mean,variance\n";
  for (Index s = 0; s < n; ++s) {
    std::vector<double> values(a.paths);
    for (std::size_t i = 0; i < a.paths; ++i) values[i] = static_cast<double>(finals[i](s));
    const auto stats = sample_stats(values);
    std::cout << net.species()[static_cast<std::size_t>(s)] << ',' << format_number(stats.mean) << ','
              << format_number(a.paths > 1 ? stats.variance : 0.0) << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct SensitivityArgs {
  std::string model;
  std::string output = "component(1)";
  Index param = 1;
  std::string method;
  std::int64_t N = 1;
  std::vector<double> x0;
  double t_final = 1.0;
  std::size_t ns = 10000;
  std::optional<double> h;
  std::uint64_t max_events = SimulationOptions{}.max_events;
};

int cmd_sensitivity(const SensitivityArgs& a, const Common& c) {
  const auto method = parse_method(a.method);
  if (!method) throw UsageError("unknown method '" + a.method + "'");
  if (is_finite_difference(*method) && !a.h) throw UsageError("finite-difference methods require --h");
  if (!is_finite_difference(*method) && a.h) throw UsageError("--h is only valid for finite-difference methods");
  if (a.h && !(*a.h > 0.0)) throw UsageError("--h must be positive");
  if (a.ns < 2) throw UsageError("--ns must be at least 2");
  if (!(a.t_final > 0.0)) throw UsageError("--t-final must be positive");

  const fs::path model_path = fs::absolute(a.model).lexically_normal();
  const auto net = load_network(model_path);
  if (a.param < 1 || a.param > net.num_reactions()) throw UsageError("--param out of range");
  OutputSpec output;
  try {
    output = parse_output(a.output, net);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto instance = make_instance(net, a.N, a.x0);
  SimulationOptions opts;
  opts.max_events = a.max_events;

  auto summary = run_estimate(instance, output, a.param - 1, *method, a.t_final, a.ns, a.h.value_or(0.0), c.seed,
                              c.workers, opts);
  const auto truth = exact_sensitivity(instance, output, a.param - 1, a.t_final);
  if (truth && *truth != 0.0) summary = relative_metrics(summary, *truth);

  auto out = open_output(c.out_dir, "sensitivity.csv");
  out << "# rxnsens " << kVersion << "\n# command: sensitivity\n"
      << header_line("model", model_path.string()) << header_line("output", output.to_string(net))
      << header_line("param", std::to_string(a.param)) << header_line("method", std::string(method_name(*method)))
      << header_line("N", std::to_string(a.N)) << header_line("x0", join(a.x0))
      << header_line("t_final", format_number(a.t_final)) << header_line("ns", std::to_string(a.ns))
      << (a.h ? header_line("h", format_number(*a.h)) : std::string()) << header_line("seed", std::to_string(c.seed));
  const std::string columns = "model,output,param,method,N,Ns,h,t_final,point,std_error,raw_variance,truth,rsd,rb,re";
  std::ostringstream row;
  row << csv_field(model_path.stem().string()) << ',' << csv_field(output.to_string(net)) << ',' << a.param << ','
      << method_name(*method) << ',' << a.N << ',' << summary.n_samples << ',' << format_number(summary.h) << ','
      << format_number(a.t_final) << ',' << format_number(summary.point) << ',' << format_number(summary.std_error)
      << ',' << format_number(summary.sample_variance) << ',' << format_number(truth) << ','
      << format_number(summary.rsd) << ',' << format_number(summary.rb) << ',' << format_number(summary.re) << '\n';
  out << columns << '\n' << row.str();
  std::cout << columns << '\n' << row.str();
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_scaling(const std::string& config_path, const Common& c, bool seed_given, bool workers_given) {
  auto loaded = load_scaling_config(config_path);
  if (seed_given) loaded.config.seed = c.seed;
  if (workers_given) loaded.config.workers = c.workers;
  const auto report = run_scaling_study(loaded.network, loaded.config);
  const auto header = scaling_header(loaded);
  {
    auto out = open_output(c.out_dir, "scaling.csv");
    write_scaling_csv(out, header, loaded.config, loaded.network, report);
  }
  {
    auto out = open_output(c.out_dir, "slopes.csv");
    write_slopes_csv(out, header, loaded.config, report);
  }
  if (report.slopes.empty()) {
    std::cout << "single N in grid: no slope fit\n";
  } else {
    std::ostringstream table;
    write_slopes_csv(table, "", loaded.config, report);
    std::cout << table.str();
  }
  return kOk;
}

int cmd_time(const std::string& config_path, const Common& c, bool seed_given, bool workers_given) {
  auto loaded = load_time_study_config(config_path);
  if (seed_given) loaded.config.seed = c.seed;
  if (workers_given) loaded.config.workers = c.workers;
  const auto rows = run_time_study(loaded.network, loaded.config);
  {
    auto out = open_output(c.out_dir, "time_study.csv");
    write_time_csv(out, time_study_header(loaded), loaded.config, loaded.network, rows);
  }
  std::cout << "method,variance_slope,intercept,r_squared\n";
  for (const auto m : loaded.config.methods) {
    if (const auto fit = time_variance_fit(rows, m))
      std::cout << method_name(m) << ',' << format_number(fit->slope) << ',' << format_number(fit->intercept) << ','
                << format_number(fit->r_squared) << '\n';
  }
  if (loaded.config.t_grid.size() < 2) std::cout << "single T in grid: no regression\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact simulation and parametric sensitivity estimation for reaction networks"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common common;

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate paths and summarize the state at t_final");
  simulate->add_option("--model", sim.model, "Model file")->required()->check(CLI::ExistingFile);
  simulate->add_option("-N,--system-size", sim.N, "System size N")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--x0", sim.x0, "Initial concentrations (X(0) = N x0)")->required()->delimiter(',');
  simulate->add_option("--t-final", sim.t_final, "Time horizon")->required();
  simulate->add_option("--paths", sim.paths, "Number of paths")->capture_default_str();
  simulate->add_option("--simulator", sim.simulator, "direct or rtc")
      ->capture_default_str()
      ->check(CLI::IsMember({"direct", "rtc"}));
  simulate->add_flag("--dump-paths", sim.dump, "Write one CSV per path into --out-dir");
  simulate->add_option("--max-events", sim.max_events, "Per-path event cap")->capture_default_str();
  add_common(simulate, common);

  SensitivityArgs sens;
  double h_value = 0.0;
  auto* sensitivity = app.add_subcommand("sensitivity", "Single-point sensitivity estimate");
  sensitivity->set_help_flag("--help", "Print this help message and exit");
  sensitivity->add_option("--model", sens.model, "Model file")->required()->check(CLI::ExistingFile);
  sensitivity->add_option("--output", sens.output, "Output function, e.g. component(S1)")->capture_default_str();
  sensitivity->add_option("--param", sens.param, "1-based reaction channel")->required();
  sensitivity->add_option("--method", sens.method, "GT, CGT, FD1_IRN, ... FD2_CRP")->required();
  sensitivity->add_option("-N,--system-size", sens.N, "System size N")->required()->check(CLI::PositiveNumber);
  sensitivity->add_option("--x0", sens.x0, "Initial concentrations")->required()->delimiter(',');
  sensitivity->add_option("--t-final", sens.t_final, "Time horizon")->required();
  sensitivity->add_option("--ns", sens.ns, "Number of samples")->capture_default_str();
  auto* h_opt = sensitivity->add_option("--h", h_value, "Finite-difference perturbation");
  sensitivity->add_option("--max-events", sens.max_events, "Per-path event cap")->capture_default_str();
  add_common(sensitivity, common);

  std::string scaling_config, time_config;
  auto* scaling = app.add_subcommand("scaling-study", "System-size sweep from a config file");
  scaling->add_option("config", scaling_config, "Config file")->required()->check(CLI::ExistingFile);
  add_common(scaling, common);

  auto* time = app.add_subcommand("time-study", "Time-horizon sweep from a config file");
  time->add_option("config", time_config, "Config file")->required()->check(CLI::ExistingFile);
  add_common(time, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim, common);
    if (*sensitivity) {
      if (h_opt->count() > 0) sens.h = h_value;
      return cmd_sensitivity(sens, common);
    }
    auto* active = *scaling ? scaling : time;
    const bool seed_given = active->get_option("--seed")->count() > 0;
    const bool workers_given = active->get_option("--workers")->count() > 0;
    if (*scaling) return cmd_scaling(scaling_config, common, seed_given, workers_given);
    return cmd_time(time_config, common, seed_given, workers_given);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return kModel;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}
