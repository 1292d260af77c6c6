// SPDX-License-Identifier: Apache-2.0
#include "matten/tensorize.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <set>

#include "matten/error.hpp"
#include "matten/io.hpp"

namespace matten {

namespace {

constexpr std::array<std::string_view, 118> kElements = {
    "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si", "P",
    "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn",
    "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh",
    "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",  "Re",
    "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th",
    "Pa", "U",  "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db",
    "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

bool is_element_symbol(std::string_view symbol) {
  return std::find(kElements.begin(), kElements.end(), symbol) != kElements.end();
}

std::vector<FormulaTerm> parse_stoichiometry(std::string_view formula, FormulaOptions options) {
  if (formula.empty()) throw ParseError("empty formula", 0);

  std::map<std::string, double> merged;
  std::size_t pos = 0;
  while (pos < formula.size()) {
    const char c = formula[pos];
    if (is_digit(c) || c == '.') throw ParseError("count without an element symbol", pos);
    if (!is_upper(c)) {
      throw ParseError(std::string("illegal character '") + c + "'", pos);
    }
    const std::size_t symbol_at = pos;
    std::size_t symbol_len = 1;
    if (pos + 1 < formula.size() && is_lower(formula[pos + 1])) symbol_len = 2;
    const std::string symbol(formula.substr(pos, symbol_len));
    if (options.validate_symbols && !is_element_symbol(symbol)) {
      throw ParseError("unknown element symbol '" + symbol + "'", symbol_at);
    }
    pos += symbol_len;

    double count = 1.0;
    const std::size_t count_at = pos;
    while (pos < formula.size() && is_digit(formula[pos])) ++pos;
    if (pos < formula.size() && formula[pos] == '.') {
      ++pos;
      const std::size_t frac_at = pos;
      while (pos < formula.size() && is_digit(formula[pos])) ++pos;
      if (pos == frac_at) throw ParseError("malformed count", count_at);
    }
    if (pos > count_at) {
      if (formula[count_at] == '.') throw ParseError("malformed count", count_at);
      count = parse_double(formula.substr(count_at, pos - count_at));
      if (!(count > 0.0)) throw ParseError("count must be positive", count_at);
    }
    merged[symbol] += count;
  }

  std::vector<FormulaTerm> terms;
  terms.reserve(merged.size());
  for (auto& [symbol, count] : merged) terms.push_back({symbol, count});
  return terms;
}

Composition parse_formula(std::string_view formula, FormulaOptions options) {
  Composition out;
  for (auto& term : parse_stoichiometry(formula, options)) {
    if (term.count != std::floor(term.count) || term.count > 4294967295.0) {
      throw ParseError("non-integer count for '" + term.symbol + "'", 0);
    }
    out.parts.emplace_back(std::move(term.symbol), static_cast<std::uint32_t>(term.count));
  }
  return out;
}

std::string format_formula(const Composition& composition) {
  std::string out;
  for (const auto& [symbol, count] : composition.parts) {
    out += symbol;
    if (count != 1) out += std::to_string(count);
  }
  return out;
}

const char* to_string(CountPolicy policy) noexcept {
  return policy == CountPolicy::skip ? "skip" : "clip";
}

const char* to_string(NonintegerPolicy policy) noexcept {
  return policy == NonintegerPolicy::skip ? "skip" : "round";
}

CountPolicy count_policy_from_string(std::string_view text) {
  if (text == "skip") return CountPolicy::skip;
  if (text == "clip") return CountPolicy::clip;
  throw ConfigError("unknown count policy '" + std::string(text) + "'");
}

NonintegerPolicy noninteger_policy_from_string(std::string_view text) {
  if (text == "skip") return NonintegerPolicy::skip;
  if (text == "round") return NonintegerPolicy::round;
  throw ConfigError("unknown non-integer policy '" + std::string(text) + "'");
}

void TensorizeConfig::validate() const {
  if (arity < 1) throw ConfigError("arity must be at least 1");
  if (max_count < 1) throw ConfigError("max_count must be at least 1");
}

const char* to_string(SkipReason reason) noexcept {
  switch (reason) {
    case SkipReason::parse_error: return "parse_error";
    case SkipReason::wrong_arity: return "wrong_arity";
    case SkipReason::count_overflow: return "count_overflow";
    case SkipReason::noninteger_count: return "noninteger_count";
    case SkipReason::unknown_element: return "unknown_element";
  }
  return "parse_error";
}

Encoding coordinate_of(const Composition& composition, const IndexMap& maps,
                       const TensorizeConfig& config) {
  const std::size_t arity = config.arity;
  if (composition.parts.size() != arity) return SkipReason::wrong_arity;
  if (maps.order() != 2 * arity) return SkipReason::wrong_arity;

  Coord coord(2 * arity);
  for (std::size_t k = 0; k < arity; ++k) {
    const auto& [symbol, count] = composition.parts[k];
    const auto element = maps.find(k, symbol);
    if (!element) return SkipReason::unknown_element;
    std::size_t atoms = count;
    if (atoms > config.max_count || atoms > maps.extent(arity + k)) {
      if (config.count_policy == CountPolicy::skip) return SkipReason::count_overflow;
      atoms = std::min(config.max_count, maps.extent(arity + k));
    }
    coord[k] = static_cast<Index>(*element);
    coord[arity + k] = static_cast<Index>(atoms - 1);
  }
  return coord;
}

namespace {

// Applies the non-integer policy; nullopt means the record is skipped.
std::optional<Composition> to_composition(const std::vector<FormulaTerm>& terms,
                                          NonintegerPolicy policy) {
  Composition out;
  out.parts.reserve(terms.size());
  for (const auto& term : terms) {
    double count = term.count;
    if (count != std::floor(count)) {
      if (policy == NonintegerPolicy::skip) return std::nullopt;
      count = std::round(count);
      if (count < 1.0) return std::nullopt;
    }
    count = std::min(count, 4294967295.0);
    out.parts.emplace_back(term.symbol, static_cast<std::uint32_t>(count));
  }
  return out;
}

}  // namespace

Encoding encode_formula(std::string_view formula, const IndexMap& maps,
                        const TensorizeConfig& config) {
  std::vector<FormulaTerm> terms;
  try {
    terms = parse_stoichiometry(formula, {config.validate_symbols});
  } catch (const ParseError&) {
    return SkipReason::parse_error;
  }
  const auto composition = to_composition(terms, config.noninteger_policy);
  if (!composition) return SkipReason::noninteger_count;
  return coordinate_of(*composition, maps, config);
}

bool is_formula_shaped(const Shape& shape) {
  const std::size_t order = shape.order();
  if (order < 2 || order % 2 != 0) return false;
  for (std::size_t n = 0; n < order; ++n) {
    const auto expected = n < order / 2 ? ModeKind::element : ModeKind::count;
    if (shape.kinds[n] != expected) return false;
  }
  return true;
}

Composition decode_coordinate(CoordView coord, const Shape& shape, const IndexMap& maps) {
  if (!is_formula_shaped(shape)) {
    throw ArgumentError("tensor is not laid out as element modes followed by count modes");
  }
  if (coord.size() != shape.order()) throw ShapeError("coordinate order mismatch");
  const std::size_t arity = shape.order() / 2;
  Composition out;
  for (std::size_t k = 0; k < arity; ++k) {
    if (coord[k] >= shape.dims[k]) throw BoundsError(k, coord[k], shape.dims[k]);
    if (coord[arity + k] >= shape.dims[arity + k]) {
      throw BoundsError(arity + k, coord[arity + k], shape.dims[arity + k]);
    }
    out.parts.emplace_back(maps.label(k, coord[k]), coord[arity + k] + 1);
  }
  return out;
}

namespace {

// Uppercase letter then lowercase letters, so the formula text stays readable.
bool symbol_like(std::string_view label) {
  if (label.empty() || !std::isupper(static_cast<unsigned char>(label[0]))) return false;
  return std::all_of(label.begin() + 1, label.end(),
                     [](char c) { return std::islower(static_cast<unsigned char>(c)); });
}

}  // namespace

std::string describe_coordinate(CoordView coord, const Shape& shape, const IndexMap& maps) {
  if (is_formula_shaped(shape)) {
    bool readable = true;
    for (std::size_t n = 0; n < shape.order() / 2; ++n) {
      readable = readable && symbol_like(maps.label(n, coord[n]));
    }
    if (readable) return format_formula(decode_coordinate(coord, shape, maps));
  }
  std::string out;
  for (std::size_t n = 0; n < coord.size(); ++n) {
    if (n) out += ':';
    out += maps.label(n, coord[n]);
  }
  return out;
}

TensorizeResult tensorize(std::span<const Record> records, const TensorizeConfig& config) {
  config.validate();
  if (records.empty()) throw DatasetError("no records to tensorize");

  SkipReport report;
  report.ingested = records.size();

  // Pass 1: parse and filter; the element alphabet only covers survivors.
  std::vector<std::pair<Composition, double>> encodable;
  encodable.reserve(records.size());
  std::set<std::string> symbols;
  for (const auto& record : records) {
    if (!std::isfinite(record.value)) {
      ++report.parse_error;
      continue;
    }
    std::vector<FormulaTerm> terms;
    try {
      terms = parse_stoichiometry(record.formula, {config.validate_symbols});
    } catch (const ParseError&) {
      ++report.parse_error;
      continue;
    }
    auto composition = to_composition(terms, config.noninteger_policy);
    if (!composition) {
      ++report.noninteger_count;
      continue;
    }
    if (composition->parts.size() != config.arity) {
      ++report.wrong_arity;
      continue;
    }
    const bool overflow = std::any_of(composition->parts.begin(), composition->parts.end(),
                                      [&](const auto& p) { return p.second > config.max_count; });
    if (overflow && config.count_policy == CountPolicy::skip) {
      ++report.count_overflow;
      continue;
    }
    for (const auto& part : composition->parts) symbols.insert(part.first);
    encodable.emplace_back(std::move(*composition), record.value);
  }
  if (encodable.empty()) {
    throw DatasetError("all " + std::to_string(records.size()) + " records were skipped");
  }

  const std::vector<std::string> alphabet(symbols.begin(), symbols.end());
  std::vector<std::string> counts;
  for (std::size_t k = 1; k <= config.max_count; ++k) counts.push_back(std::to_string(k));

  std::vector<std::size_t> dims;
  std::vector<ModeKind> kinds;
  std::vector<std::vector<std::string>> labels;
  for (std::size_t k = 0; k < config.arity; ++k) {
    dims.push_back(alphabet.size());
    kinds.push_back(ModeKind::element);
    labels.push_back(alphabet);
  }
  for (std::size_t k = 0; k < config.arity; ++k) {
    dims.push_back(config.max_count);
    kinds.push_back(ModeKind::count);
    labels.push_back(counts);
  }
  const IndexMap maps(std::move(labels));
  SparseTensor raw(Shape(std::move(dims), std::move(kinds)), maps);
  raw.reserve(encodable.size());
  for (const auto& [composition, value] : encodable) {
    const auto encoding = coordinate_of(composition, maps, config);
    raw.insert(std::get<Coord>(encoding), value);
  }
  report.encoded = encodable.size();

  auto [tensor, dedup_report] = dedup(raw, config.dedup_policy);
  report.dedup = dedup_report;
  return {std::move(tensor), report};
}

std::vector<Record> read_records_csv(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<Record> records;
  auto unquote = [](std::string_view field) {
    field = trim(field);
    if (field.size() >= 2 && field.front() == '"' && field.back() == '"') {
      field = field.substr(1, field.size() - 2);
    }
    return field;
  };
  while (std::getline(is, line)) {
    ++line_no;
    std::string_view text = line;
    if (line_no == 1 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    if (trim(text).empty()) continue;
    const auto fields = split_view(text, ',');
    if (!have_header) {
      if (fields.size() != 2 || unquote(fields[0]) != "formula" || unquote(fields[1]) != "value") {
        throw DatasetError("CSV header must be 'formula,value'");
      }
      have_header = true;
      continue;
    }
    Record record{std::string(unquote(fields[0])), std::numeric_limits<double>::quiet_NaN()};
    if (fields.size() == 2) {
      try {
        record.value = parse_double(unquote(fields[1]));
      } catch (const ArgumentError&) {
      }
    }
    records.push_back(std::move(record));
  }
  if (!have_header) throw DatasetError("CSV is empty");
  return records;
}

std::vector<Record> load_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path);
  return read_records_csv(in);
}

}  // namespace matten
