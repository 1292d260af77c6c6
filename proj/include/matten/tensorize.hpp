// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "matten/sptensor.hpp"

namespace matten {

/// A reduced chemical formula: distinct element symbols with positive
/// integer counts, sorted by symbol.
struct Composition {
  std::vector<std::pair<std::string, std::uint32_t>> parts;

  bool operator==(const Composition&) const = default;
};

/// One term of a formula before the integer-count requirement is applied.
struct FormulaTerm {
  std::string symbol;
  double count;

  bool operator==(const FormulaTerm&) const = default;
};

struct FormulaOptions {
  bool validate_symbols = true;  ///< reject symbols outside the periodic table
};

bool is_element_symbol(std::string_view symbol);

/// Grammar: (Symbol Count?)+ where Symbol = [A-Z][a-z]? and Count is a
/// positive decimal (digits, optional fractional part). Missing counts are
/// 1, repeated symbols are summed and the result is sorted by symbol.
/// Throws ParseError carrying the byte offset of the first problem.
std::vector<FormulaTerm> parse_stoichiometry(std::string_view formula,
                                             FormulaOptions options = {});

/// Same grammar, but every merged count must be an integer.
Composition parse_formula(std::string_view formula, FormulaOptions options = {});

/// "AuBr5" style rendering; counts of 1 are omitted.
std::string format_formula(const Composition& composition);

enum class CountPolicy { skip, clip };
enum class NonintegerPolicy { skip, round };

const char* to_string(CountPolicy policy) noexcept;
const char* to_string(NonintegerPolicy policy) noexcept;
CountPolicy count_policy_from_string(std::string_view text);
NonintegerPolicy noninteger_policy_from_string(std::string_view text);

struct TensorizeConfig {
  std::size_t arity = 2;      ///< distinct elements per material
  std::size_t max_count = 8;  ///< largest representable atom count
  CountPolicy count_policy = CountPolicy::skip;
  NonintegerPolicy noninteger_policy = NonintegerPolicy::skip;
  DedupPolicy dedup_policy = DedupPolicy::mean;
  bool validate_symbols = true;

  /// Throws ConfigError.
  void validate() const;
};

enum class SkipReason { parse_error, wrong_arity, count_overflow, noninteger_count, unknown_element };

const char* to_string(SkipReason reason) noexcept;

using Encoding = std::variant<Coord, SkipReason>;

/// Coordinate layout for arity a: (element_1..element_a, count_1..count_a)
/// with elements in canonical order and atom count k at index k-1.
Encoding coordinate_of(const Composition& composition, const IndexMap& maps,
                       const TensorizeConfig& config);

/// Parses and encodes in one step, applying the non-integer policy.
Encoding encode_formula(std::string_view formula, const IndexMap& maps,
                        const TensorizeConfig& config);

/// True for tensors laid out as `arity` element modes followed by `arity`
/// count modes.
bool is_formula_shaped(const Shape& shape);

/// Inverse of coordinate_of. Requires a formula-shaped tensor.
Composition decode_coordinate(CoordView coord, const Shape& shape, const IndexMap& maps);

/// Formula text for formula-shaped tensors whose element labels look like
/// symbols, otherwise labels joined by ':'.
std::string describe_coordinate(CoordView coord, const Shape& shape, const IndexMap& maps);

struct Record {
  std::string formula;
  double value;  ///< non-finite values are counted as parse errors
};

struct SkipReport {
  std::size_t ingested = 0;
  std::size_t encoded = 0;
  std::size_t parse_error = 0;
  std::size_t wrong_arity = 0;
  std::size_t count_overflow = 0;
  std::size_t noninteger_count = 0;
  DedupReport dedup;  ///< applied after encoding

  std::size_t skipped() const noexcept {
    return parse_error + wrong_arity + count_overflow + noninteger_count;
  }
};

struct TensorizeResult {
  SparseTensor tensor;
  SkipReport report;
};

/// Builds the element alphabet from encodable records (sorted, shared by all
/// element modes), inserts every encodable record and deduplicates. Throws
/// DatasetError when nothing can be encoded.
TensorizeResult tensorize(std::span<const Record> records, const TensorizeConfig& config);

/// Reads a `formula,value` CSV. Rows with a malformed value are returned
/// with a NaN value so that tensorize accounts for them. Throws DatasetError
/// on a missing or wrong header.
std::vector<Record> read_records_csv(std::istream& is);
std::vector<Record> load_records_csv(const std::string& path);

}  // namespace matten
