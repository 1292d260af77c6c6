// SPDX-License-Identifier: Apache-2.0
#include "matten/sptensor.hpp"

#include <algorithm>
#include <limits>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "matten/error.hpp"
#include "matten/io.hpp"
#include "matten/rng.hpp"

namespace matten {

const char* to_string(ModeKind kind) noexcept {
  return kind == ModeKind::element ? "element" : "count";
}

ModeKind mode_kind_from_string(std::string_view text) {
  if (text == "element") return ModeKind::element;
  if (text == "count") return ModeKind::count;
  throw ConfigError("unknown mode kind '" + std::string(text) + "'");
}

Shape::Shape(std::vector<std::size_t> dims_in, std::vector<ModeKind> kinds_in)
    : dims(std::move(dims_in)), kinds(std::move(kinds_in)) {
  if (dims.size() < 2) throw ShapeError("a tensor needs at least two modes");
  if (dims.size() != kinds.size()) {
    throw ShapeError("mode kind count does not match the number of modes");
  }
  for (std::size_t n = 0; n < dims.size(); ++n) {
    if (dims[n] == 0) throw ShapeError("mode " + std::to_string(n) + " has zero extent");
    if (dims[n] > std::numeric_limits<Index>::max()) {
      throw ShapeError("mode " + std::to_string(n) + " extent too large");
    }
  }
}

double Shape::cell_count() const noexcept {
  double cells = 1.0;
  for (auto d : dims) cells *= static_cast<double>(d);
  return cells;
}

IndexMap::IndexMap(std::vector<std::vector<std::string>> labels)
    : labels_(std::move(labels)), lookup_(labels_.size()) {
  for (std::size_t n = 0; n < labels_.size(); ++n) {
    auto& lookup = lookup_[n];
    lookup.reserve(labels_[n].size());
    for (std::size_t i = 0; i < labels_[n].size(); ++i) {
      const auto& label = labels_[n][i];
      if (label.empty() || label.find_first_of(",:# \t\r\n") != std::string::npos) {
        throw ArgumentError("mode " + std::to_string(n) + ": invalid label '" + label + "'");
      }
      if (!lookup.emplace(label, i).second) {
        throw ArgumentError("mode " + std::to_string(n) + ": duplicate label '" + label + "'");
      }
    }
  }
}

IndexMap IndexMap::defaults(const Shape& shape) {
  std::vector<std::vector<std::string>> labels(shape.order());
  for (std::size_t n = 0; n < shape.order(); ++n) {
    labels[n].reserve(shape.dims[n]);
    for (std::size_t i = 0; i < shape.dims[n]; ++i) {
      labels[n].push_back(shape.kinds[n] == ModeKind::element ? "E" + std::to_string(i)
                                                              : std::to_string(i + 1));
    }
  }
  return IndexMap(std::move(labels));
}

std::optional<std::size_t> IndexMap::find(std::size_t mode, std::string_view label) const {
  const auto& lookup = lookup_.at(mode);
  const auto it = lookup.find(std::string(label));
  if (it == lookup.end()) return std::nullopt;
  return it->second;
}

SparseTensor::SparseTensor(Shape shape) : SparseTensor(shape, IndexMap::defaults(shape)) {}

SparseTensor::SparseTensor(Shape shape, IndexMap labels)
    : shape_(std::move(shape)), labels_(std::move(labels)) {
  if (shape_.order() < 2) throw ShapeError("a tensor needs at least two modes");
  if (labels_.order() != shape_.order()) {
    throw ShapeError("index map order does not match the shape");
  }
  for (std::size_t n = 0; n < shape_.order(); ++n) {
    if (labels_.extent(n) != shape_.dims[n]) {
      throw ShapeError("mode " + std::to_string(n) + ": label count does not match extent");
    }
    if (shape_.kinds[n] != ModeKind::count) continue;
    for (std::size_t i = 0; i < shape_.dims[n]; ++i) {
      if (labels_.label(n, i) != std::to_string(i + 1)) {
        throw ShapeError("count mode " + std::to_string(n) + ": label of index " +
                         std::to_string(i) + " must be " + std::to_string(i + 1));
      }
    }
  }
}

void SparseTensor::check_in_bounds(CoordView coord) const {
  if (coord.size() != order()) {
    throw ShapeError("coordinate has " + std::to_string(coord.size()) +
                     " indices, tensor has " + std::to_string(order()) + " modes");
  }
  for (std::size_t n = 0; n < coord.size(); ++n) {
    if (coord[n] >= shape_.dims[n]) throw BoundsError(n, coord[n], shape_.dims[n]);
  }
}

void SparseTensor::insert(CoordView coord, double value) {
  check_in_bounds(coord);
  indices_.insert(indices_.end(), coord.begin(), coord.end());
  values_.push_back(value);
}

void SparseTensor::reserve(std::size_t entries) {
  indices_.reserve(entries * order());
  values_.reserve(entries);
}

bool SparseTensor::has_duplicates() const {
  std::unordered_set<Coord, CoordHash> seen;
  seen.reserve(nnz());
  for (std::size_t e = 0; e < nnz(); ++e) {
    const auto c = coord(e);
    if (!seen.emplace(c.begin(), c.end()).second) return true;
  }
  return false;
}

SparseTensor SparseTensor::empty_like() const {
  SparseTensor out;
  out.shape_ = shape_;
  out.labels_ = labels_;
  return out;
}

std::size_t CoordHash::operator()(CoordView coord) const noexcept {
  // FNV-1a over the indices.
  std::uint64_t h = 1469598103934665603ULL;
  for (auto i : coord) {
    h ^= i;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

const char* to_string(DedupPolicy policy) noexcept {
  switch (policy) {
    case DedupPolicy::mean: return "mean";
    case DedupPolicy::first: return "first";
    case DedupPolicy::drop_all: return "drop_all";
  }
  return "mean";
}

DedupPolicy dedup_policy_from_string(std::string_view text) {
  if (text == "mean") return DedupPolicy::mean;
  if (text == "first") return DedupPolicy::first;
  if (text == "drop_all") return DedupPolicy::drop_all;
  throw ConfigError("unknown dedup policy '" + std::string(text) + "'");
}

std::pair<SparseTensor, DedupReport> dedup(const SparseTensor& tensor, DedupPolicy policy) {
  struct Group {
    std::size_t first_entry;
    std::size_t size;
    double sum;
  };
  std::unordered_map<Coord, std::size_t, CoordHash> group_of;
  std::vector<Group> groups;
  group_of.reserve(tensor.nnz());
  for (std::size_t e = 0; e < tensor.nnz(); ++e) {
    const auto c = tensor.coord(e);
    auto [it, inserted] = group_of.try_emplace(Coord(c.begin(), c.end()), groups.size());
    if (inserted) {
      groups.push_back({e, 1, tensor.value(e)});
    } else {
      auto& g = groups[it->second];
      ++g.size;
      g.sum += tensor.value(e);
    }
  }

  DedupReport report;
  SparseTensor out = tensor.empty_like();
  out.reserve(groups.size());
  for (const auto& g : groups) {
    if (g.size > 1) {
      ++report.duplicate_coordinates;
      report.entries_removed += policy == DedupPolicy::drop_all ? g.size : g.size - 1;
      if (policy == DedupPolicy::drop_all) continue;
    }
    const double value = policy == DedupPolicy::mean && g.size > 1
                             ? g.sum / static_cast<double>(g.size)
                             : tensor.value(g.first_entry);
    out.insert(tensor.coord(g.first_entry), value);
  }
  return {std::move(out), report};
}

TrainTestSplit split(const SparseTensor& tensor, std::size_t train_count, std::uint64_t seed) {
  if (train_count == 0 || train_count >= tensor.nnz()) {
    throw ConfigError("train count " + std::to_string(train_count) +
                      " must lie strictly between 0 and the entry count " +
                      std::to_string(tensor.nnz()));
  }
  if (tensor.has_duplicates()) {
    throw StateError("split requires distinct coordinates; run dedup first");
  }

  // Partial Fisher-Yates: the first train_count slots are the sample.
  std::vector<std::size_t> order(tensor.nnz());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < train_count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(order.size() - i));
    std::swap(order[i], order[j]);
  }
  std::vector<char> in_train(tensor.nnz(), 0);
  for (std::size_t i = 0; i < train_count; ++i) in_train[order[i]] = 1;

  TrainTestSplit out{tensor.empty_like(), tensor.empty_like()};
  out.train.reserve(train_count);
  out.test.reserve(tensor.nnz() - train_count);
  for (std::size_t e = 0; e < tensor.nnz(); ++e) {
    (in_train[e] ? out.train : out.test).insert(tensor.coord(e), tensor.value(e));
  }
  return out;
}

double density(const SparseTensor& tensor) {
  std::unordered_set<Coord, CoordHash> distinct;
  distinct.reserve(tensor.nnz());
  for (std::size_t e = 0; e < tensor.nnz(); ++e) {
    const auto c = tensor.coord(e);
    distinct.emplace(c.begin(), c.end());
  }
  return static_cast<double>(distinct.size()) / tensor.shape().cell_count();
}

namespace {

template <typename Range, typename Fn>
void write_joined(std::ostream& os, const Range& range, Fn&& fn) {
  bool first = true;
  for (const auto& item : range) {
    if (!first) os << ',';
    first = false;
    fn(item);
  }
}

[[noreturn]] void bad_line(std::size_t line_no, const std::string& why) {
  throw DatasetError("tensor file line " + std::to_string(line_no) + ": " + why);
}

}  // namespace

void write_tensor(std::ostream& os, const SparseTensor& tensor, std::string_view meta) {
  const auto& shape = tensor.shape();
  os << "#shape ";
  write_joined(os, shape.dims, [&](std::size_t d) { os << d; });
  os << "\n#kinds ";
  write_joined(os, shape.kinds, [&](ModeKind k) { os << to_string(k); });
  os << '\n';
  for (std::size_t n = 0; n < tensor.order(); ++n) {
    os << "#labels mode=" << n << ": ";
    write_joined(os, tensor.index_map().labels(n), [&](const std::string& s) { os << s; });
    os << '\n';
  }
  if (!meta.empty()) {
    if (meta.find('\n') != std::string_view::npos) {
      throw ArgumentError("tensor meta must be a single line");
    }
    os << "#meta " << meta << '\n';
  }
  for (std::size_t e = 0; e < tensor.nnz(); ++e) {
    for (auto i : tensor.coord(e)) os << i << ',';
    os << format_double(tensor.value(e)) << '\n';
  }
}

SparseTensor read_tensor(std::istream& is) {
  std::vector<std::size_t> dims;
  std::vector<ModeKind> kinds;
  std::vector<std::vector<std::string>> labels;
  std::vector<std::pair<Coord, double>> rows;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      const auto space = text.find(' ');
      const auto tag = text.substr(0, space);
      const auto rest = space == std::string_view::npos ? std::string_view{}
                                                         : trim(text.substr(space + 1));
      try {
        if (tag == "#shape") {
          for (auto part : split_view(rest, ',')) dims.push_back(parse_size(trim(part)));
        } else if (tag == "#kinds") {
          for (auto part : split_view(rest, ',')) kinds.push_back(mode_kind_from_string(trim(part)));
        } else if (tag == "#labels") {
          const auto colon = rest.find(':');
          if (colon == std::string_view::npos || rest.substr(0, 5) != "mode=") {
            bad_line(line_no, "malformed #labels line");
          }
          const auto mode = parse_size(rest.substr(5, colon - 5));
          if (mode != labels.size()) bad_line(line_no, "#labels lines out of order");
          auto& mode_labels = labels.emplace_back();
          for (auto part : split_view(trim(rest.substr(colon + 1)), ',')) {
            mode_labels.emplace_back(trim(part));
          }
        } else if (tag != "#meta") {
          bad_line(line_no, "unknown header '" + std::string(tag) + "'");
        }
      } catch (const DatasetError&) {
        throw;
      } catch (const Error& e) {
        bad_line(line_no, e.what());
      }
      continue;
    }
    const auto parts = split_view(text, ',');
    if (dims.empty() || parts.size() != dims.size() + 1) {
      bad_line(line_no, "entry has the wrong number of fields");
    }
    Coord coord(dims.size());
    try {
      for (std::size_t n = 0; n < dims.size(); ++n) {
        const auto idx = parse_size(trim(parts[n]));
        if (idx >= dims[n]) throw BoundsError(n, idx, dims[n]);
        coord[n] = static_cast<Index>(idx);
      }
      rows.emplace_back(std::move(coord), parse_double(trim(parts.back())));
    } catch (const Error& e) {
      bad_line(line_no, e.what());
    }
  }

  if (dims.empty()) throw DatasetError("tensor file has no #shape header");
  if (kinds.empty()) kinds.assign(dims.size(), ModeKind::element);
  SparseTensor tensor;
  try {
    Shape shape(dims, kinds);
    tensor = labels.empty() ? SparseTensor(shape) : SparseTensor(shape, IndexMap(labels));
  } catch (const Error& e) {
    throw DatasetError(std::string("tensor file header: ") + e.what());
  }
  tensor.reserve(rows.size());
  for (const auto& [coord, value] : rows) tensor.insert(coord, value);
  return tensor;
}

void save_tensor(const std::string& path, const SparseTensor& tensor, std::string_view meta) {
  std::ostringstream os;
  write_tensor(os, tensor, meta);
  write_file_atomic(path, os.str());
}

SparseTensor load_tensor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_tensor(in);
}

}  // namespace matten
