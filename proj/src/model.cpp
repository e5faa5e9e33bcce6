#include "rxnsens/model.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace rxnsens {

ModelError::ModelError(const std::string& what, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

ReactionNetwork::ReactionNetwork(std::vector<std::string> species, std::vector<Reaction> reactions,
                                 bool allow_zero_rates)
    : species_(std::move(species)), reactions_(std::move(reactions)) {
  if (species_.empty()) throw ModelError("network has no species");
  if (reactions_.empty()) throw ModelError("empty reaction list");
  const Index n = num_species();
  const Index m = num_reactions();
  stoich_.resize(n, m);
  reactant_.resize(n, m);
  for (Index j = 0; j < m; ++j) {
    const Reaction& r = reactions_[static_cast<std::size_t>(j)];
    if (r.reactants.size() != n || r.products.size() != n)
      throw ModelError("reaction " + std::to_string(j + 1) + " references a species outside the species list");
    if ((r.reactants.array() < 0).any() || (r.products.array() < 0).any())
      throw ModelError("negative stoichiometric coefficient in reaction " + std::to_string(j + 1));
    if (!std::isfinite(r.rate_const) || r.rate_const < 0.0 || (r.rate_const == 0.0 && !allow_zero_rates))
      throw ModelError("nonpositive rate constant in reaction " + std::to_string(j + 1));
    stoich_.col(j) = r.net();
    reactant_.col(j) = r.reactants;
  }
}

std::optional<Index> ReactionNetwork::species_index(std::string_view name) const {
  for (std::size_t i = 0; i < species_.size(); ++i)
    if (species_[i] == name) return static_cast<Index>(i);
  return std::nullopt;
}

RateVector ReactionNetwork::rates() const {
  RateVector c(num_reactions());
  for (Index j = 0; j < num_reactions(); ++j) c(j) = reaction(j).rate_const;
  return c;
}

// ---------------------------------------------------------------------------
// Model file parsing

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool valid_name(std::string_view name) {
  if (name.empty()) return false;
  const auto head = static_cast<unsigned char>(name.front());
  if (!(std::isalpha(head) || head == '_')) return false;
  for (char ch : name) {
    const auto c = static_cast<unsigned char>(ch);
    if (!(std::isalnum(c) || c == '_')) return false;
  }
  return true;
}

struct Term {
  int count;
  std::string name;
};

class Parser {
 public:
  explicit Parser(const ParseOptions& options) : options_(options) {}

  void line(std::string_view raw, int lineno) {
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const auto text = trim(raw);
    if (text.empty()) return;

    if (text.starts_with("species") && trim(text.substr(7)).starts_with(":")) {
      if (!pending_.empty() || declared_) throw ModelError("species block must precede all reactions", lineno);
      declare_species(trim(text.substr(text.find(':') + 1)), lineno);
      return;
    }

    const auto arrow = text.find("->");
    if (arrow == std::string_view::npos) throw ModelError("expected 'reactants -> products @ rate'", lineno);
    const auto at = text.find('@', arrow);
    if (at == std::string_view::npos) throw ModelError("missing '@ rate'", lineno);

    Pending p;
    p.lineno = lineno;
    p.reactants = complex(trim(text.substr(0, arrow)), lineno);
    p.products = complex(trim(text.substr(arrow + 2, at - arrow - 2)), lineno);
    p.rate = rate(trim(text.substr(at + 1)), lineno);
    if (p.rate < 0.0 || (p.rate == 0.0 && !options_.allow_zero_rates))
      throw ModelError("nonpositive rate constant", lineno);
    pending_.push_back(std::move(p));
  }

  ReactionNetwork finish() {
    if (pending_.empty()) throw ModelError("empty reaction list");
    const auto n = static_cast<Index>(species_.size());
    std::vector<Reaction> reactions;
    reactions.reserve(pending_.size());
    for (const auto& p : pending_) {
      Reaction r;
      r.reactants = Eigen::VectorXi::Zero(n);
      r.products = Eigen::VectorXi::Zero(n);
      for (const auto& t : p.reactants) r.reactants(index_of(t.name)) += t.count;
      for (const auto& t : p.products) r.products(index_of(t.name)) += t.count;
      r.rate_const = p.rate;
      reactions.push_back(std::move(r));
    }
    return ReactionNetwork(species_, std::move(reactions), options_.allow_zero_rates);
  }

 private:
  struct Pending {
    int lineno = 0;
    std::vector<Term> reactants;
    std::vector<Term> products;
    double rate = 0.0;
  };

  void declare_species(std::string_view list, int lineno) {
    declared_ = true;
    std::string buf(list);
    for (char& ch : buf)
      if (ch == ',') ch = ' ';
    std::istringstream in(buf);
    std::string name;
    while (in >> name) {
      if (!valid_name(name)) throw ModelError("invalid species name '" + name + "'", lineno);
      for (const auto& s : species_)
        if (s == name) throw ModelError("duplicate species '" + name + "'", lineno);
      species_.push_back(name);
    }
    if (species_.empty()) throw ModelError("empty species block", lineno);
  }

  std::vector<Term> complex(std::string_view text, int lineno) {
    if (text.empty()) throw ModelError("empty complex (use 0 for the empty complex)", lineno);
    if (text == "0") return {};
    std::vector<Term> terms;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto plus = text.find('+', pos);
      const auto piece = trim(text.substr(pos, plus == std::string_view::npos ? std::string_view::npos : plus - pos));
      terms.push_back(term(piece, lineno));
      if (plus == std::string_view::npos) break;
      pos = plus + 1;
    }
    return terms;
  }

  Term term(std::string_view text, int lineno) {
    if (text.empty()) throw ModelError("empty term", lineno);
    Term t{1, {}};
    std::string_view name = text;
    if (const auto star = text.find('*'); star != std::string_view::npos) {
      const auto k = trim(text.substr(0, star));
      int value = 0;
      const auto [ptr, ec] = std::from_chars(k.data(), k.data() + k.size(), value);
      if (ec != std::errc{} || ptr != k.data() + k.size() || value < 1)
        throw ModelError("invalid stoichiometric coefficient '" + std::string(k) + "'", lineno);
      t.count = value;
      name = trim(text.substr(star + 1));
    }
    if (!valid_name(name)) throw ModelError("invalid species name '" + std::string(name) + "'", lineno);
    t.name = std::string(name);
    if (declared_) {
      bool known = false;
      for (const auto& s : species_) known = known || s == t.name;
      if (!known) throw ModelError("unknown species '" + t.name + "'", lineno);
    } else {
      bool seen = false;
      for (const auto& s : species_) seen = seen || s == t.name;
      if (!seen) species_.push_back(t.name);
    }
    return t;
  }

  static double rate(std::string_view text, int lineno) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value))
      throw ModelError("invalid rate constant '" + std::string(text) + "'", lineno);
    return value;
  }

  Index index_of(const std::string& name) const {
    for (std::size_t i = 0; i < species_.size(); ++i)
      if (species_[i] == name) return static_cast<Index>(i);
    throw ModelError("unknown species '" + name + "'");
  }

  const ParseOptions& options_;
  bool declared_ = false;
  std::vector<std::string> species_;
  std::vector<Pending> pending_;
};

}  // namespace

ReactionNetwork parse_network(std::string_view text, const ParseOptions& options) {
  Parser parser(options);
  int lineno = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    ++lineno;
    parser.line(text.substr(pos, end - pos), lineno);
    pos = end + 1;
  }
  return parser.finish();
}

ReactionNetwork load_network(const std::filesystem::path& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_network(buf.str(), options);
}

// ---------------------------------------------------------------------------

SystemInstance::SystemInstance(ReactionNetwork network, std::int64_t system_size,
                               Eigen::VectorXd initial_concentration)
    : network_(std::move(network)), system_size_(system_size), x0_(std::move(initial_concentration)) {
  if (system_size_ < 1) throw ModelError("system size must be a positive integer");
  if (x0_.size() != network_.num_species())
    throw ModelError("initial concentration has " + std::to_string(x0_.size()) + " entries, network has " +
                     std::to_string(network_.num_species()) + " species");
  initial_state_.resize(x0_.size());
  for (Index i = 0; i < x0_.size(); ++i) {
    if (!(x0_(i) >= 0.0)) throw ModelError("initial concentration must be nonnegative");
    const double scaled = static_cast<double>(system_size_) * x0_(i);
    const double rounded = std::round(scaled);
    if (std::abs(scaled - rounded) > 1e-9 * std::max(1.0, std::abs(scaled)))
      throw ModelError("N * x0 is not an integer for species '" + network_.species()[static_cast<std::size_t>(i)] +
                       "'");
    initial_state_(i) = static_cast<std::int64_t>(rounded);
  }
}

double binomial(std::int64_t x, int k) {
  if (k < 0 || x < k) return 0.0;
  // result * (x - i) / (i + 1) stays integral at every step.
  std::int64_t exact = 1;
  for (int i = 0; i < k; ++i) {
    const std::int64_t num = x - i;
    if (exact > std::numeric_limits<std::int64_t>::max() / num) {
      double approx = static_cast<double>(exact);
      for (int r = i; r < k; ++r) approx = approx * static_cast<double>(x - r) / static_cast<double>(r + 1);
      return approx;
    }
    exact = exact * num / (i + 1);
  }
  return static_cast<double>(exact);
}

namespace {

double int_pow(double base, int exponent) {
  double r = 1.0;
  const bool neg = exponent < 0;
  for (int e = neg ? -exponent : exponent; e > 0; --e) r *= base;
  return neg ? 1.0 / r : r;
}

}  // namespace

double propensity(const Reaction& reaction, double rate, std::int64_t system_size,
                  const Eigen::Ref<const State>& state) {
  double comb = 1.0;
  for (Index i = 0; i < reaction.reactants.size(); ++i) {
    const int k = reaction.reactants(i);
    if (k == 0) continue;
    if (state(i) < k) return 0.0;
    comb *= binomial(state(i), k);
  }
  return to_stochastic_param(rate, system_size, reaction.order()) * comb;
}

double propensity(const SystemInstance& instance, const Eigen::Ref<const State>& state, Index j) {
  const auto& r = instance.network().reaction(j);
  return propensity(r, r.rate_const, instance.system_size(), state);
}

double propensity(const SystemInstance& instance, const RateVector& rates, const Eigen::Ref<const State>& state,
                  Index j) {
  return propensity(instance.network().reaction(j), rates(j), instance.system_size(), state);
}

double fluid_rate(const Reaction& reaction, double rate, const Eigen::Ref<const Eigen::VectorXd>& conc) {
  double value = rate;
  for (Index i = 0; i < reaction.reactants.size(); ++i) {
    const int k = reaction.reactants(i);
    double factorial = 1.0;
    for (int r = 2; r <= k; ++r) factorial *= r;
    value *= int_pow(conc(i), k) / factorial;
  }
  return value;
}

double fluid_rate(const ReactionNetwork& network, const Eigen::Ref<const Eigen::VectorXd>& conc, Index j) {
  const auto& r = network.reaction(j);
  return fluid_rate(r, r.rate_const, conc);
}

double to_stochastic_param(double rate, std::int64_t system_size, int order) {
  return rate * int_pow(static_cast<double>(system_size), 1 - order);
}

double to_deterministic_param(double stochastic_rate, std::int64_t system_size, int order) {
  return stochastic_rate * int_pow(static_cast<double>(system_size), order - 1);
}

double convert_sensitivity(double deterministic_sensitivity, std::int64_t system_size, int order) {
  return deterministic_sensitivity * int_pow(static_cast<double>(system_size), order - 1);
}

}  // namespace rxnsens
