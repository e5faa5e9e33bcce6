#include "rxnsens/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rxnsens/format.hpp"

namespace rxnsens {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

constexpr std::string_view kHeaderPrefix = "# config:";

ConfigEntry parse_entry(std::string_view body, int line) {
  const auto eq = body.find('=');
  if (eq == std::string_view::npos) throw ConfigError("expected key = value", line);
  ConfigEntry e{std::string(trim(body.substr(0, eq))), std::string(trim(body.substr(eq + 1))), line};
  if (e.key.empty()) throw ConfigError("empty key", line);
  if (e.value.empty()) throw ConfigError("empty value for '" + e.key + "'", line);
  return e;
}

std::string join_numbers(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += format_number(xs[i]);
  }
  return s;
}

template <class T>
std::string join_ints(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(xs[i]);
  }
  return s;
}

std::string join_methods(const std::vector<Method>& ms) {
  std::string s;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (i) s += ',';
    s += method_name(ms[i]);
  }
  return s;
}

std::filesystem::path resolve(const std::string& value, const std::filesystem::path& base) {
  std::filesystem::path p(value);
  if (p.is_relative()) p = base / p;
  return std::filesystem::absolute(p).lexically_normal();
}

Eigen::VectorXd parse_vector(std::string_view text, int line) {
  const auto items = split_list(text);
  Eigen::VectorXd v(static_cast<Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) v(static_cast<Index>(i)) = parse_double(items[i], line);
  return v;
}

Index parse_param(const ConfigEntry& e, const ReactionNetwork& net) {
  const auto p = parse_int(e.value, e.line);
  if (p < 1 || p > net.num_reactions())
    throw ConfigError("param must be a 1-based channel index in [1, " + std::to_string(net.num_reactions()) + "]",
                      e.line);
  return static_cast<Index>(p - 1);
}

OutputSpec parse_output_entry(const ConfigEntry& e, const ReactionNetwork& net) {
  try {
    return parse_output(e.value, net);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what(), e.line);
  }
}

std::string header_block(std::string_view command, const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string out = "# rxnsens " + std::string(kVersion) + "\n# command: " + std::string(command) + "\n";
  for (const auto& [k, v] : kv) out += std::string(kHeaderPrefix) + " " + k + " = " + v + "\n";
  return out;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  std::vector<std::pair<std::string_view, int>> lines;
  bool header_mode = false;
  {
    std::size_t pos = 0;
    int number = 0;
    while (pos <= text.size()) {
      const auto nl = text.find('\n', pos);
      const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      lines.emplace_back(line, ++number);
      if (trim(line).starts_with(kHeaderPrefix)) header_mode = true;
      if (nl == std::string_view::npos) break;
      pos = nl + 1;
    }
  }

  KeyValueConfig cfg;
  for (const auto& [raw, number] : lines) {
    const auto line = trim(raw);
    std::string_view body;
    if (header_mode) {
      if (!line.starts_with(kHeaderPrefix)) continue;
      body = line.substr(kHeaderPrefix.size());
    } else {
      if (line.empty() || line.front() == '#') continue;
      body = line;
    }
    auto entry = parse_entry(body, number);
    if (cfg.find(entry.key)) throw ConfigError("duplicate key '" + entry.key + "'", number);
    cfg.entries_.push_back(std::move(entry));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const ConfigEntry* KeyValueConfig::find(std::string_view key) const {
  for (const auto& e : entries_)
    if (e.key == key) return &e;
  return nullptr;
}

const ConfigEntry& KeyValueConfig::require(std::string_view key) const {
  if (const auto* e = find(key)) return *e;
  throw ConfigError("missing required key '" + std::string(key) + "'");
}

void KeyValueConfig::check_keys(std::initializer_list<std::string_view> allowed) const {
  for (const auto& e : entries_)
    if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end())
      throw ConfigError("unknown key '" + e.key + "'", e.line);
}

double parse_double(std::string_view text, int line) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
    throw ConfigError("not a number: '" + std::string(text) + "'", line);
  return v;
}

std::int64_t parse_int(std::string_view text, int line) {
  text = trim(text);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ConfigError("not an integer: '" + std::string(text) + "'", line);
  return v;
}

std::uint64_t parse_uint(std::string_view text, int line) {
  text = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ConfigError("not a nonnegative integer: '" + std::string(text) + "'", line);
  return v;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current += ch;
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::vector<double> parse_grid(std::string_view text, int line) {
  text = trim(text);
  if (text.find(':') != std::string_view::npos) {
    const auto a = text.find(':');
    const auto b = text.find(':', a + 1);
    if (b == std::string_view::npos) throw ConfigError("range must be start:stop:step", line);
    const double start = parse_double(text.substr(0, a), line);
    const double stop = parse_double(text.substr(a + 1, b - a - 1), line);
    const double step = parse_double(text.substr(b + 1), line);
    if (!(step > 0.0) || stop < start) throw ConfigError("range needs step > 0 and stop >= start", line);
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) grid[i] = start + static_cast<double>(i) * step;
    return grid;
  }
  std::vector<double> grid;
  for (const auto& item : split_list(text)) grid.push_back(parse_double(item, line));
  if (grid.empty()) throw ConfigError("empty grid", line);
  return grid;
}

std::vector<Method> parse_methods(std::string_view text, int line) {
  std::vector<Method> methods;
  for (const auto& item : split_list(text)) {
    const auto m = parse_method(item);
    if (!m) throw ConfigError("unknown method '" + item + "'", line);
    if (std::find(methods.begin(), methods.end(), *m) != methods.end())
      throw ConfigError("method '" + item + "' listed twice", line);
    methods.push_back(*m);
  }
  if (methods.empty()) throw ConfigError("no methods listed", line);
  return methods;
}

Reference parse_reference(std::string_view text, int line) {
  text = trim(text);
  if (text == "oracle") return Reference::oracle;
  if (text == "cgt") return Reference::cgt;
  if (text == "none") return Reference::none;
  throw ConfigError("reference must be oracle, cgt or none", line);
}

std::string_view reference_name(Reference reference) {
  switch (reference) {
    case Reference::oracle: return "oracle";
    case Reference::cgt: return "cgt";
    case Reference::none: return "none";
  }
  return "none";
}

LoadedScaling scaling_from_config(const KeyValueConfig& kv, const std::filesystem::path& base_dir) {
  kv.check_keys({"model", "label", "output", "param", "t_final", "h", "seed", "n_grid", "ns", "methods",
                 "slope_window", "x0", "reference", "workers", "max_events"});
  const auto model_path = resolve(kv.require("model").value, base_dir);
  LoadedScaling loaded{model_path, load_network(model_path), {}};
  auto& cfg = loaded.config;
  const auto& net = loaded.network;

  cfg.model_label = kv.find("label") ? kv.find("label")->value : model_path.stem().string();
  cfg.output = parse_output_entry(kv.require("output"), net);
  cfg.param_index = parse_param(kv.require("param"), net);
  cfg.t_final = parse_double(kv.require("t_final").value, kv.require("t_final").line);
  if (const auto* e = kv.find("h")) cfg.h = parse_double(e->value, e->line);
  if (const auto* e = kv.find("seed")) cfg.seed = parse_uint(e->value, e->line);
  {
    const auto& e = kv.require("n_grid");
    for (double n : parse_grid(e.value, e.line)) {
      const double rounded = std::round(n);
      if (std::abs(n - rounded) > 1e-9 * std::max(1.0, std::abs(n)))
        throw ConfigError("n_grid entries must be integers", e.line);
      cfg.n_grid.push_back(static_cast<std::int64_t>(rounded));
    }
  }
  {
    const auto& e = kv.require("ns");
    for (const auto& item : split_list(e.value)) cfg.ns.push_back(static_cast<std::size_t>(parse_uint(item, e.line)));
  }
  {
    const auto& e = kv.require("methods");
    cfg.methods = parse_methods(e.value, e.line);
  }
  if (const auto* e = kv.find("slope_window")) cfg.slope_window = parse_double(e->value, e->line);
  {
    const auto& e = kv.require("x0");
    cfg.x0 = parse_vector(e.value, e.line);
  }
  if (const auto* e = kv.find("reference")) cfg.reference = parse_reference(e->value, e->line);
  if (const auto* e = kv.find("workers")) cfg.workers = static_cast<unsigned>(parse_uint(e->value, e->line));
  if (const auto* e = kv.find("max_events")) cfg.simulation.max_events = parse_uint(e->value, e->line);

  try {
    cfg.validate(net);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }
  return loaded;
}

LoadedTimeStudy time_study_from_config(const KeyValueConfig& kv, const std::filesystem::path& base_dir) {
  kv.check_keys({"model", "label", "output", "param", "N", "x0", "t_grid", "ns", "methods", "h", "seed", "workers",
                 "max_events"});
  const auto model_path = resolve(kv.require("model").value, base_dir);
  LoadedTimeStudy loaded{model_path, load_network(model_path), {}};
  auto& cfg = loaded.config;
  const auto& net = loaded.network;

  cfg.model_label = kv.find("label") ? kv.find("label")->value : model_path.stem().string();
  cfg.output = parse_output_entry(kv.require("output"), net);
  cfg.param_index = parse_param(kv.require("param"), net);
  cfg.system_size = parse_int(kv.require("N").value, kv.require("N").line);
  cfg.x0 = parse_vector(kv.require("x0").value, kv.require("x0").line);
  cfg.t_grid = parse_grid(kv.require("t_grid").value, kv.require("t_grid").line);
  cfg.ns = static_cast<std::size_t>(parse_uint(kv.require("ns").value, kv.require("ns").line));
  cfg.methods = parse_methods(kv.require("methods").value, kv.require("methods").line);
  if (const auto* e = kv.find("h")) cfg.h = parse_double(e->value, e->line);
  if (const auto* e = kv.find("seed")) cfg.seed = parse_uint(e->value, e->line);
  if (const auto* e = kv.find("workers")) cfg.workers = static_cast<unsigned>(parse_uint(e->value, e->line));
  if (const auto* e = kv.find("max_events")) cfg.simulation.max_events = parse_uint(e->value, e->line);

  try {
    cfg.validate(net);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }
  return loaded;
}

LoadedScaling load_scaling_config(const std::filesystem::path& path) {
  return scaling_from_config(KeyValueConfig::load(path), std::filesystem::absolute(path).parent_path());
}

LoadedTimeStudy load_time_study_config(const std::filesystem::path& path) {
  return time_study_from_config(KeyValueConfig::load(path), std::filesystem::absolute(path).parent_path());
}

std::string scaling_header(const LoadedScaling& loaded) {
  const auto& c = loaded.config;
  std::vector<double> x0(c.x0.data(), c.x0.data() + c.x0.size());
  return header_block("scaling-study", {
                                           {"model", loaded.model_path.string()},
                                           {"label", c.model_label},
                                           {"output", c.output.to_string(loaded.network)},
                                           {"param", std::to_string(c.param_index + 1)},
                                           {"t_final", format_number(c.t_final)},
                                           {"h", format_number(c.h)},
                                           {"seed", std::to_string(c.seed)},
                                           {"n_grid", join_ints(c.n_grid)},
                                           {"ns", join_ints(c.ns)},
                                           {"methods", join_methods(c.methods)},
                                           {"slope_window", format_number(c.slope_window)},
                                           {"x0", join_numbers(x0)},
                                           {"reference", std::string(reference_name(c.reference))},
                                           {"max_events", std::to_string(c.simulation.max_events)},
                                       });
}

std::string time_study_header(const LoadedTimeStudy& loaded) {
  const auto& c = loaded.config;
  std::vector<double> x0(c.x0.data(), c.x0.data() + c.x0.size());
  return header_block("time-study", {
                                        {"model", loaded.model_path.string()},
                                        {"label", c.model_label},
                                        {"output", c.output.to_string(loaded.network)},
                                        {"param", std::to_string(c.param_index + 1)},
                                        {"N", std::to_string(c.system_size)},
                                        {"x0", join_numbers(x0)},
                                        {"t_grid", join_numbers(c.t_grid)},
                                        {"ns", std::to_string(c.ns)},
                                        {"methods", join_methods(c.methods)},
                                        {"h", format_number(c.h)},
                                        {"seed", std::to_string(c.seed)},
                                        {"max_events", std::to_string(c.simulation.max_events)},
                                    });
}

}  // namespace rxnsens
