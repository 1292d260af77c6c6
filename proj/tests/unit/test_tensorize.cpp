// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "matten/error.hpp"
#include "matten/rng.hpp"
#include "matten/tensorize.hpp"
#include "support/oracles.hpp"

namespace matten {
namespace {

IndexMap formula_maps(std::vector<std::string> alphabet, std::size_t arity, std::size_t max_count) {
  std::vector<std::vector<std::string>> labels;
  for (std::size_t k = 0; k < arity; ++k) labels.push_back(alphabet);
  std::vector<std::string> counts;
  for (std::size_t c = 1; c <= max_count; ++c) counts.push_back(std::to_string(c));
  for (std::size_t k = 0; k < arity; ++k) labels.push_back(counts);
  return IndexMap(std::move(labels));
}

std::map<Coord, double> as_map(const SparseTensor& t) {
  std::map<Coord, double> out;
  for (std::size_t e = 0; e < t.nnz(); ++e) out[Coord(t.coord(e).begin(), t.coord(e).end())] = t.value(e);
  return out;
}

TEST(ParseFormula, CanonicalOrderAndDefaults) {
  const auto c = parse_formula("OH2");
  EXPECT_EQ(c, (Composition{{{"H", 2}, {"O", 1}}}));
  EXPECT_EQ(parse_formula("H2O"), c);
  EXPECT_EQ(format_formula(c), "H2O");
  EXPECT_EQ(parse_formula("NaCl"), (Composition{{{"Cl", 1}, {"Na", 1}}}));
}

TEST(ParseFormula, RepeatedSymbolsAreSummed) {
  EXPECT_EQ(parse_formula("HOH"), (Composition{{{"H", 2}, {"O", 1}}}));
}

TEST(ParseFormula, ErrorsCarryOffsets) {
  try {
    parse_formula("Au Br");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 2u);
  }
  EXPECT_THROW(parse_formula(""), ParseError);
  EXPECT_THROW(parse_formula("au"), ParseError);
  EXPECT_THROW(parse_formula("H0"), ParseError);
  EXPECT_THROW(parse_formula("Xx5"), ParseError);
  EXPECT_NO_THROW(parse_formula("Xx5", {false}));
  EXPECT_THROW(parse_formula("H1.5"), ParseError);
}

TEST(ParseStoichiometry, FractionalCountsSurvive) {
  const auto terms = parse_stoichiometry("Fe0.5O");
  ASSERT_EQ(terms.size(), 2u);
  EXPECT_EQ(terms[0], (FormulaTerm{"Fe", 0.5}));
  EXPECT_EQ(terms[1], (FormulaTerm{"O", 1.0}));
}

TEST(Symbols, PeriodicTable) {
  EXPECT_TRUE(is_element_symbol("H"));
  EXPECT_TRUE(is_element_symbol("Og"));
  EXPECT_FALSE(is_element_symbol("Xx"));
  EXPECT_FALSE(is_element_symbol("h"));
}

TEST(Encode, GoldBromide) {
  const auto maps = formula_maps({"Au", "Br"}, 2, 8);
  const auto enc = encode_formula("AuBr5", maps, {});
  ASSERT_TRUE(std::holds_alternative<Coord>(enc));
  EXPECT_EQ(std::get<Coord>(enc), (Coord{0, 1, 0, 4}));
}

TEST(Encode, WaterInFourSymbolAlphabet) {
  const auto maps = formula_maps({"Cl", "H", "Na", "O"}, 2, 8);
  EXPECT_EQ(std::get<Coord>(encode_formula("H2O", maps, {})), (Coord{1, 3, 1, 0}));
  EXPECT_EQ(std::get<Coord>(encode_formula("OH2", maps, {})), (Coord{1, 3, 1, 0}));
}

TEST(Encode, SkipReasons) {
  const auto maps = formula_maps({"Au", "Br", "Fe", "O"}, 2, 8);
  TensorizeConfig config;
  EXPECT_EQ(std::get<SkipReason>(encode_formula("Xx5", maps, config)), SkipReason::parse_error);
  EXPECT_EQ(std::get<SkipReason>(encode_formula("Au", maps, config)), SkipReason::wrong_arity);
  EXPECT_EQ(std::get<SkipReason>(encode_formula("AuBrO", maps, config)), SkipReason::wrong_arity);
  EXPECT_EQ(std::get<SkipReason>(encode_formula("AuBr9", maps, config)), SkipReason::count_overflow);
  EXPECT_EQ(std::get<SkipReason>(encode_formula("AuBr1.5", maps, config)),
            SkipReason::noninteger_count);
  EXPECT_EQ(std::get<SkipReason>(encode_formula("NaCl", maps, config)),
            SkipReason::unknown_element);
}

TEST(Encode, PoliciesClipAndRound) {
  const auto maps = formula_maps({"Au", "Br"}, 2, 8);
  TensorizeConfig config;
  config.count_policy = CountPolicy::clip;
  config.noninteger_policy = NonintegerPolicy::round;
  EXPECT_EQ(std::get<Coord>(encode_formula("AuBr12", maps, config)), (Coord{0, 1, 0, 7}));
  EXPECT_EQ(std::get<Coord>(encode_formula("AuBr2.4", maps, config)), (Coord{0, 1, 0, 1}));
}

TEST(Encode, ArityThree) {
  const auto maps = formula_maps({"Fe", "Na", "O"}, 3, 8);
  TensorizeConfig config;
  config.arity = 3;
  EXPECT_EQ(std::get<Coord>(encode_formula("NaFeO2", maps, config)), (Coord{0, 1, 2, 0, 0, 1}));
  EXPECT_EQ(std::get<SkipReason>(encode_formula("Fe2O3", maps, config)), SkipReason::wrong_arity);
}

TEST(Decode, InvertsEncoding) {
  const auto maps = formula_maps({"Au", "Br", "Cl", "O"}, 2, 8);
  const Shape shape({4, 4, 8, 8},
                    {ModeKind::element, ModeKind::element, ModeKind::count, ModeKind::count});
  for (const char* f : {"AuBr5", "ClO2", "Au2O3", "BrCl"}) {
    const auto coord = std::get<Coord>(encode_formula(f, maps, {}));
    EXPECT_EQ(format_formula(decode_coordinate(coord, shape, maps)), f);
    EXPECT_EQ(describe_coordinate(coord, shape, maps), f);
  }
}

TEST(Describe, NonSymbolLabelsAreJoined) {
  const Shape shape({2, 2, 2, 2},
                    {ModeKind::element, ModeKind::element, ModeKind::count, ModeKind::count});
  const auto maps = IndexMap::defaults(shape);
  EXPECT_EQ(describe_coordinate(Coord{1, 0, 0, 1}, shape, maps), "E1:E0:1:2");
}

TEST(Tensorize, WorkedExample) {
  const std::vector<Record> records{{"H2O", 1.0}, {"NaCl", 2.0}, {"OH2", 3.0},
                                    {"HCl", 4.0}, {"Fe2O3x", 5.0}, {"NaClO", 6.0}};
  const auto [tensor, report] = tensorize(records, {});
  EXPECT_EQ(tensor.shape().dims, (std::vector<std::size_t>{4, 4, 8, 8}));
  EXPECT_EQ(tensor.index_map().labels(0), (std::vector<std::string>{"Cl", "H", "Na", "O"}));
  EXPECT_EQ(report.ingested, 6u);
  EXPECT_EQ(report.encoded, 4u);
  EXPECT_EQ(report.parse_error, 1u);
  EXPECT_EQ(report.wrong_arity, 1u);
  EXPECT_EQ(report.dedup.duplicate_coordinates, 1u);
  const auto m = as_map(tensor);
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.at(Coord{1, 3, 1, 0}), 2.0);
  EXPECT_EQ(m.at(Coord{0, 2, 0, 0}), 2.0);
  EXPECT_EQ(m.at(Coord{0, 1, 0, 0}), 4.0);
}

TEST(Tensorize, NonFiniteValuesAreParseErrors) {
  const std::vector<Record> records{{"NaCl", std::nan("")}, {"HCl", 1.0}};
  const auto [tensor, report] = tensorize(records, {});
  EXPECT_EQ(report.parse_error, 1u);
  EXPECT_EQ(tensor.nnz(), 1u);
}

TEST(Tensorize, NothingEncodableIsADatasetError) {
  const std::vector<Record> records{{"Fe2O3Na", 1.0}, {"bad", 2.0}};
  EXPECT_THROW(tensorize(records, {}), DatasetError);
  EXPECT_THROW(tensorize(std::vector<Record>{}, {}), DatasetError);
}

TEST(Tensorize, InvalidConfig) {
  TensorizeConfig config;
  config.arity = 0;
  EXPECT_THROW(config.validate(), ConfigError);
  config = {};
  config.max_count = 0;
  EXPECT_THROW(config.validate(), ConfigError);
}

std::vector<Record> random_records(std::uint64_t seed, std::size_t n) {
  static const std::vector<std::string> pool{"H", "He", "Li", "O", "Na", "Cl", "Fe", "Au", "Br",
                                             "Xx", "Cu"};
  Rng rng(seed);
  std::vector<Record> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t terms = 1 + rng.below(3);
    std::string f;
    for (std::size_t t = 0; t < terms; ++t) {
      f += pool[rng.below(pool.size())];
      const auto count = rng.below(11);
      if (count > 1) f += std::to_string(count);
      if (rng.below(10) == 0) f += ".5";
    }
    if (rng.below(25) == 0) f += "?";
    out.push_back({f, rng.uniform(-3.0, 3.0)});
  }
  return out;
}

TEST(TensorizeProperty, EveryRecordIsAccountedFor) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto records = random_records(seed, 200);
    for (auto policy : {CountPolicy::skip, CountPolicy::clip}) {
      TensorizeConfig config;
      config.count_policy = policy;
      const auto [tensor, report] = tensorize(records, config);
      EXPECT_EQ(report.ingested, records.size());
      EXPECT_EQ(report.encoded + report.skipped(), report.ingested);
      EXPECT_EQ(tensor.nnz() + report.dedup.entries_removed, report.encoded);
      EXPECT_FALSE(tensor.has_duplicates());
    }
  }
}

TEST(TensorizeProperty, RecordOrderDoesNotChangeTheTensor) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto records = random_records(seed + 100, 150);
    const auto a = tensorize(records, {});
    Rng rng(seed);
    rng.shuffle(std::span<Record>(records));
    const auto b = tensorize(records, {});
    EXPECT_EQ(a.tensor.shape(), b.tensor.shape());
    EXPECT_EQ(testing::sorted_coords(a.tensor), testing::sorted_coords(b.tensor));
    const auto ma = as_map(a.tensor), mb = as_map(b.tensor);
    for (const auto& [coord, value] : ma) EXPECT_NEAR(mb.at(coord), value, 1e-12);
  }
}

TEST(TensorizeProperty, EncodeDecodeRoundTrip) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto records = random_records(seed + 500, 200);
    const auto [tensor, report] = tensorize(records, {});
    for (std::size_t e = 0; e < tensor.nnz(); ++e) {
      const auto text = describe_coordinate(tensor.coord(e), tensor.shape(), tensor.index_map());
      const auto again = std::get<Coord>(encode_formula(text, tensor.index_map(), {}));
      EXPECT_EQ(again, Coord(tensor.coord(e).begin(), tensor.coord(e).end()));
    }
  }
}

TEST(Csv, HeaderAndMalformedValues) {
  std::stringstream ok("formula,value\nAuBr5,1.5\nNaCl,oops\n\nHCl, -2\n");
  const auto records = read_records_csv(ok);
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0].formula, "AuBr5");
  EXPECT_EQ(records[0].value, 1.5);
  EXPECT_TRUE(std::isnan(records[1].value));
  EXPECT_EQ(records[2].value, -2.0);

  std::stringstream bad("name,target\nAuBr5,1\n");
  EXPECT_THROW(read_records_csv(bad), DatasetError);
  std::stringstream empty("");
  EXPECT_THROW(read_records_csv(empty), DatasetError);
}

}  // namespace
}  // namespace matten
