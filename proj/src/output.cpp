#include "rxnsens/output.hpp"

#include <charconv>
#include <stdexcept>
#include <vector>

namespace rxnsens {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t") - first + 1);
}

Index resolve_species(std::string_view token, const ReactionNetwork& network) {
  token = trim(token);
  if (auto idx = network.species_index(token)) return *idx;
  int one_based = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), one_based);
  if (ec == std::errc{} && ptr == token.data() + token.size() && one_based >= 1 &&
      one_based <= network.num_species())
    return one_based - 1;
  throw std::invalid_argument("unknown species '" + std::string(token) + "' in output specification");
}

}  // namespace

std::optional<int> OutputSpec::alpha() const {
  switch (kind) {
    case OutputKind::component: return 1;
    case OutputKind::square: return 2;
    case OutputKind::sin_scaled: return 0;
    case OutputKind::indicator_leq: return std::nullopt;
  }
  return std::nullopt;
}

std::string OutputSpec::to_string(const ReactionNetwork& network) const {
  const auto& names = network.species();
  const auto& a = names[static_cast<std::size_t>(species)];
  switch (kind) {
    case OutputKind::component: return "component(" + a + ")";
    case OutputKind::square: return "square(" + a + ")";
    case OutputKind::sin_scaled: return "sin_scaled(" + a + ")";
    case OutputKind::indicator_leq: return "indicator_leq(" + a + "," + names[static_cast<std::size_t>(other)] + ")";
  }
  return {};
}

OutputSpec parse_output(std::string_view text, const ReactionNetwork& network) {
  text = trim(text);
  const auto open = text.find('(');
  if (open == std::string_view::npos || text.back() != ')')
    throw std::invalid_argument("output must look like kind(species): '" + std::string(text) + "'");
  const auto kind = trim(text.substr(0, open));
  const auto inner = text.substr(open + 1, text.size() - open - 2);
  std::vector<std::string_view> args;
  std::size_t pos = 0;
  for (;;) {
    const auto comma = inner.find(',', pos);
    args.push_back(inner.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }

  OutputSpec spec;
  if (kind == "component") spec.kind = OutputKind::component;
  else if (kind == "square") spec.kind = OutputKind::square;
  else if (kind == "sin_scaled") spec.kind = OutputKind::sin_scaled;
  else if (kind == "indicator_leq") spec.kind = OutputKind::indicator_leq;
  else throw std::invalid_argument("unknown output kind '" + std::string(kind) + "'");

  const std::size_t expected = spec.kind == OutputKind::indicator_leq ? 2 : 1;
  if (args.size() != expected)
    throw std::invalid_argument("output '" + std::string(kind) + "' takes " + std::to_string(expected) +
                                " species argument(s)");
  spec.species = resolve_species(args[0], network);
  if (expected == 2) spec.other = resolve_species(args[1], network);
  return spec;
}

}  // namespace rxnsens
