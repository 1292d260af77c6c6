// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace matten {

using Index = std::uint32_t;
using Coord = std::vector<Index>;
using CoordView = std::span<const Index>;

/// Mode semantics: a nominal element axis or an ordinal atom-count axis.
enum class ModeKind { element, count };

const char* to_string(ModeKind kind) noexcept;
ModeKind mode_kind_from_string(std::string_view text);

struct Shape {
  std::vector<std::size_t> dims;
  std::vector<ModeKind> kinds;

  Shape() = default;
  /// Throws ShapeError unless there are at least two modes, one kind per
  /// mode and every extent is positive.
  Shape(std::vector<std::size_t> dims, std::vector<ModeKind> kinds);

  std::size_t order() const noexcept { return dims.size(); }
  /// Number of cells, as a double; only used as a ratio denominator.
  double cell_count() const noexcept;

  bool operator==(const Shape&) const = default;
};

/// Per-mode bijection between label strings and indices 0..extent-1.
class IndexMap {
 public:
  IndexMap() = default;
  explicit IndexMap(std::vector<std::vector<std::string>> labels);

  /// Element modes get "E0", "E1", ...; count modes get "1", "2", ...
  static IndexMap defaults(const Shape& shape);

  std::size_t order() const noexcept { return labels_.size(); }
  std::size_t extent(std::size_t mode) const { return labels_.at(mode).size(); }
  const std::vector<std::string>& labels(std::size_t mode) const { return labels_.at(mode); }
  const std::string& label(std::size_t mode, std::size_t index) const {
    return labels_.at(mode).at(index);
  }
  std::optional<std::size_t> find(std::size_t mode, std::string_view label) const;

  bool operator==(const IndexMap& other) const { return labels_ == other.labels_; }

 private:
  std::vector<std::vector<std::string>> labels_;
  std::vector<std::unordered_map<std::string, std::size_t>> lookup_;
};

/// Coordinate-list sparse tensor with labeled modes. Entries keep insertion
/// order and duplicates are allowed until `dedup` runs.
class SparseTensor {
 public:
  SparseTensor() = default;
  explicit SparseTensor(Shape shape);
  /// Count-mode labels must read "1", "2", ... in index order.
  SparseTensor(Shape shape, IndexMap labels);

  const Shape& shape() const noexcept { return shape_; }
  const IndexMap& index_map() const noexcept { return labels_; }
  std::size_t order() const noexcept { return shape_.order(); }
  std::size_t nnz() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  CoordView coord(std::size_t entry) const {
    return {indices_.data() + entry * order(), order()};
  }
  double value(std::size_t entry) const { return values_[entry]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const Index> indices() const noexcept { return indices_; }

  /// Throws BoundsError naming the first offending mode.
  void insert(CoordView coord, double value);
  void reserve(std::size_t entries);

  void check_in_bounds(CoordView coord) const;
  bool has_duplicates() const;

  /// Same shape and labels, no entries.
  SparseTensor empty_like() const;

  bool operator==(const SparseTensor&) const = default;

 private:
  Shape shape_;
  IndexMap labels_;
  std::vector<Index> indices_;
  std::vector<double> values_;
};

struct CoordHash {
  std::size_t operator()(CoordView coord) const noexcept;
  std::size_t operator()(const Coord& coord) const noexcept {
    return (*this)(CoordView{coord});
  }
};

enum class DedupPolicy { mean, first, drop_all };

const char* to_string(DedupPolicy policy) noexcept;
DedupPolicy dedup_policy_from_string(std::string_view text);

struct DedupReport {
  std::size_t duplicate_coordinates = 0;  ///< coordinates seen more than once
  std::size_t entries_removed = 0;        ///< input entries not in the output

  bool operator==(const DedupReport&) const = default;
};

/// Collapses repeated coordinates. The surviving entry sits at the position
/// of the first occurrence; `drop_all` removes every repeated coordinate.
std::pair<SparseTensor, DedupReport> dedup(const SparseTensor& tensor,
                                           DedupPolicy policy = DedupPolicy::mean);

struct TrainTestSplit {
  SparseTensor train;
  SparseTensor test;
};

/// Uniform sample without replacement of `train_count` entries; both halves
/// keep the input's entry order. Requires distinct coordinates (StateError
/// otherwise) and 0 < train_count < nnz (ConfigError otherwise).
TrainTestSplit split(const SparseTensor& tensor, std::size_t train_count,
                     std::uint64_t seed);

/// Distinct coordinates divided by the number of cells.
double density(const SparseTensor& tensor);

// Text format:
//   #shape 4,4,8,8
//   #kinds element,element,count,count
//   #labels mode=0: Cl,H,Na,O
//   ... one #labels line per mode
//   #meta {...}              optional, single line, ignored on read
//   i1,i2,...,iN,value       values with 17 significant digits
void write_tensor(std::ostream& os, const SparseTensor& tensor, std::string_view meta = {});
SparseTensor read_tensor(std::istream& is);

void save_tensor(const std::string& path, const SparseTensor& tensor,
                 std::string_view meta = {});
SparseTensor load_tensor(const std::string& path);

}  // namespace matten
