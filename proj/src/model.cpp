// SPDX-License-Identifier: Apache-2.0
#include "matten/model.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "matten/config.hpp"
#include "matten/error.hpp"
#include "matten/io.hpp"
#include "matten/rng.hpp"
#include "matten/tensorize.hpp"

namespace matten {

const char* to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::cpd: return "cpd";
    case ModelKind::cpd_s: return "cpd_s";
    case ModelKind::neat: return "neat";
    case ModelKind::mlp: return "mlp";
  }
  return "cpd";
}

ModelKind model_kind_from_string(std::string_view text) {
  if (text == "cpd") return ModelKind::cpd;
  if (text == "cpd_s") return ModelKind::cpd_s;
  if (text == "neat") return ModelKind::neat;
  if (text == "mlp") return ModelKind::mlp;
  throw ConfigError("unknown model kind '" + std::string(text) + "'");
}

std::optional<std::size_t> ModelSpec::patience() const {
  switch (kind) {
    case ModelKind::cpd:
    case ModelKind::cpd_s: return cp.patience;
    case ModelKind::neat: return neat.patience;
    case ModelKind::mlp: return mlp.patience;
  }
  return std::nullopt;
}

void ModelSpec::validate() const {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must lie in (0, 1)");
  }
  switch (kind) {
    case ModelKind::cpd:
      cp.validate();
      if (cp.smooth_lambda != 0.0) {
        throw ConfigError("kind 'cpd' requires smooth_lambda 0; use 'cpd_s' for smoothing");
      }
      break;
    case ModelKind::cpd_s:
      cp.validate();
      if (!(cp.smooth_lambda > 0.0)) throw ConfigError("kind 'cpd_s' requires smooth_lambda > 0");
      break;
    case ModelKind::neat: neat.validate(); break;
    case ModelKind::mlp: mlp.validate(); break;
  }
}

TrainedModel::TrainedModel(ModelSpec spec, std::uint64_t seed, IndexMap labels, Impl impl)
    : spec_(std::move(spec)), seed_(seed), labels_(std::move(labels)), impl_(std::move(impl)) {
  if (labels_.order() != shape().order()) throw ShapeError("labels do not match the model");
  for (std::size_t n = 0; n < shape().order(); ++n) {
    if (labels_.extent(n) != shape().dims[n]) throw ShapeError("labels do not match the model");
  }
}

const Shape& TrainedModel::shape() const {
  return std::visit(
      [](const auto& m) -> const Shape& {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MLPRegressor>) {
          return m.encoder.shape();
        } else {
          return m.shape();
        }
      },
      impl_);
}

double TrainedModel::predict(CoordView coord) const {
  return std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, CPModel>) {
          return matten::predict(m, coord);
        } else if constexpr (std::is_same_v<T, NeatModel>) {
          return neat_predict(m, coord);
        } else {
          return mlp_predict(m, coord);
        }
      },
      impl_);
}

FitResult fit_model(const ModelSpec& spec, const SparseTensor& train, std::uint64_t seed,
                    const SparseTensor* validation) {
  spec.validate();
  ModelSpec seeded = spec;
  seeded.cp.seed = seeded.neat.seed = seeded.mlp.seed = seed;
  switch (spec.kind) {
    case ModelKind::cpd:
    case ModelKind::cpd_s: {
      auto result =
          cp_train(init_model(train.shape(), seeded.cp), train, seeded.cp, validation);
      return {TrainedModel(seeded, seed, train.index_map(), std::move(result.model)),
              std::move(result.report)};
    }
    case ModelKind::neat: {
      auto result =
          neat_train(init_neat(train.shape(), seeded.neat), train, seeded.neat, validation);
      return {TrainedModel(seeded, seed, train.index_map(), std::move(result.model)),
              std::move(result.report)};
    }
    case ModelKind::mlp: {
      auto result = mlp_train(train, seeded.mlp, validation);
      return {TrainedModel(seeded, seed, train.index_map(), std::move(result.model)),
              std::move(result.report)};
    }
  }
  throw ConfigError("unknown model kind");
}

double predict_formula(const TrainedModel& model, std::string_view formula) {
  const Shape& shape = model.shape();
  if (!is_formula_shaped(shape)) {
    throw DatasetError("model was not trained on a formula-encoded tensor");
  }
  TensorizeConfig strict;
  strict.arity = shape.order() / 2;
  strict.max_count = shape.dims[strict.arity];
  const auto encoding = encode_formula(formula, model.labels(), strict);
  if (const auto* reason = std::get_if<SkipReason>(&encoding)) {
    throw DatasetError("formula '" + std::string(formula) + "' cannot be encoded: " +
                       to_string(*reason));
  }
  return model.predict(std::get<Coord>(encoding));
}

namespace {

constexpr const char* kMagic = "matten-model";

void write_matrix(std::ostream& os, const Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? " " : "") << format_double(row[c]);
    os << '\n';
  }
}

template <typename T, typename Fn>
std::string join(const std::vector<T>& items, Fn&& fn) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += fn(items[i]);
  }
  return out;
}

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  template <typename Fn>
  auto wrap(Fn&& fn) {
    try {
      return fn();
    } catch (const ArgumentError& e) {
      throw DatasetError(std::string("checkpoint: ") + e.what());
    }
  }

  std::string word(const char* what) {
    std::string w;
    if (!(is_ >> w)) throw DatasetError(std::string("checkpoint truncated: expected ") + what);
    return w;
  }
  void expect(const char* keyword) {
    const auto w = word(keyword);
    if (w != keyword) {
      throw DatasetError(std::string("checkpoint: expected '") + keyword + "', found '" + w + "'");
    }
  }
  std::string rest_of_line() {
    std::string line;
    std::getline(is_, line);
    return std::string(trim(line));
  }
  std::size_t size(const char* what) { return wrap([&] { return parse_size(word(what)); }); }
  double number() { return wrap([&] { return parse_double(word("a number")); }); }
  void fill(Matrix& m) {
    for (auto& v : m.values()) v = number();
  }
  std::istream& stream() { return is_; }

 private:
  std::istream& is_;
};

}  // namespace

void write_model(std::ostream& os, const TrainedModel& model) {
  const Shape& shape = model.shape();
  os << kMagic << " 1\n";
  os << "kind " << to_string(model.kind()) << '\n';
  os << "seed " << model.seed() << '\n';
  os << "config " << to_json(model.spec()).dump() << '\n';
  os << "shape " << join(shape.dims, [](std::size_t d) { return std::to_string(d); }) << '\n';
  os << "kinds " << join(shape.kinds, [](ModeKind k) { return std::string(to_string(k)); })
     << '\n';
  for (std::size_t n = 0; n < shape.order(); ++n) {
    os << "labels " << n << ' '
       << join(model.labels().labels(n), [](const std::string& s) { return s; }) << '\n';
  }

  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, CPModel>) {
          os << "stats " << format_double(m.stats().mean) << ' ' << format_double(m.stats().std)
             << '\n';
          os << "rank " << m.rank() << '\n';
          for (std::size_t n = 0; n < m.order(); ++n) {
            os << "factor " << n << '\n';
            write_matrix(os, m.factors()[n]);
          }
        } else if constexpr (std::is_same_v<T, NeatModel>) {
          os << "stats " << format_double(m.stats().mean) << ' ' << format_double(m.stats().std)
             << '\n';
          os << "architecture " << m.components() << ' ' << m.embed_dim() << ' ' << m.hidden()
             << '\n';
          for (std::size_t r = 0; r < m.components(); ++r) {
            os << "component " << r << '\n';
            for (std::size_t n = 0; n < m.order(); ++n) {
              os << "embedding " << n << '\n';
              write_matrix(os, m.embedding(r, n));
            }
            write_net(os, m.net(r));
          }
        } else {
          const auto& stats = m.bound_stats();
          os << "stats " << format_double(stats.mean) << ' ' << format_double(stats.std) << '\n';
          write_net(os, m.net);
        }
      },
      model.impl());
  os << "end\n";
}

TrainedModel read_model(std::istream& is) {
  Reader in(is);
  in.expect(kMagic);
  if (in.size("format version") != 1) throw DatasetError("unsupported checkpoint version");
  in.expect("kind");
  const auto kind_text = in.word("model kind");
  ModelKind kind;
  try {
    kind = model_kind_from_string(kind_text);
  } catch (const ConfigError& e) {
    throw DatasetError(std::string("checkpoint: ") + e.what());
  }
  in.expect("seed");
  const std::uint64_t seed = in.size("seed");
  in.expect("config");
  ModelSpec spec;
  try {
    spec = model_spec_from_json(parse_json(in.rest_of_line()));
  } catch (const ConfigError& e) {
    throw DatasetError(std::string("checkpoint config: ") + e.what());
  }
  if (spec.kind != kind) throw DatasetError("checkpoint kind does not match its config");

  in.expect("shape");
  std::vector<std::size_t> dims;
  std::vector<ModeKind> kinds;
  std::vector<std::vector<std::string>> labels;
  Shape shape;
  IndexMap maps;
  try {
    const auto dims_text = in.word("dims");
    for (auto part : split_view(dims_text, ',')) dims.push_back(parse_size(part));
    in.expect("kinds");
    const auto kinds_text = in.word("kinds");
    for (auto part : split_view(kinds_text, ',')) kinds.push_back(mode_kind_from_string(part));
    for (std::size_t n = 0; n < dims.size(); ++n) {
      in.expect("labels");
      if (in.size("mode") != n) throw DatasetError("checkpoint: labels out of order");
      auto& mode_labels = labels.emplace_back();
      const auto labels_text = in.word("labels");
      for (auto part : split_view(labels_text, ',')) mode_labels.emplace_back(part);
    }
    shape = Shape(dims, kinds);
    maps = IndexMap(labels);
  } catch (const DatasetError&) {
    throw;
  } catch (const Error& e) {
    throw DatasetError(std::string("checkpoint header: ") + e.what());
  }

  in.expect("stats");
  ValueStats stats;
  stats.mean = in.number();
  stats.std = in.number();

  auto finish = [&](TrainedModel::Impl impl) {
    in.expect("end");
    try {
      return TrainedModel(spec, seed, maps, std::move(impl));
    } catch (const ShapeError& e) {
      throw DatasetError(std::string("checkpoint: ") + e.what());
    }
  };

  try {
    switch (kind) {
      case ModelKind::cpd:
      case ModelKind::cpd_s: {
        in.expect("rank");
        const auto rank = in.size("rank");
        std::vector<Matrix> factors;
        for (std::size_t n = 0; n < shape.order(); ++n) {
          in.expect("factor");
          if (in.size("mode") != n) throw DatasetError("checkpoint: factors out of order");
          Matrix f(shape.dims[n], rank);
          in.fill(f);
          factors.push_back(std::move(f));
        }
        CPModel model(shape, std::move(factors));
        model.bind_stats(stats);
        return finish(std::move(model));
      }
      case ModelKind::neat: {
        in.expect("architecture");
        const auto components = in.size("components");
        const auto d = in.size("embed_dim");
        in.size("hidden");
        std::vector<std::vector<Matrix>> embeddings(components);
        std::vector<DenseNet> nets;
        for (std::size_t r = 0; r < components; ++r) {
          in.expect("component");
          if (in.size("component") != r) throw DatasetError("checkpoint: components out of order");
          for (std::size_t n = 0; n < shape.order(); ++n) {
            in.expect("embedding");
            if (in.size("mode") != n) throw DatasetError("checkpoint: embeddings out of order");
            Matrix e(shape.dims[n], d);
            in.fill(e);
            embeddings[r].push_back(std::move(e));
          }
          nets.push_back(read_net(in.stream()));
        }
        NeatModel model(shape, std::move(embeddings), std::move(nets));
        model.bind_stats(stats);
        return finish(std::move(model));
      }
      case ModelKind::mlp: {
        MLPRegressor model{OneHotEncoder(shape), read_net(in.stream()), stats};
        if (model.net.input_width() != model.encoder.total_width() ||
            model.net.output_width() != 1) {
          throw DatasetError("checkpoint: MLP widths do not match the shape");
        }
        return finish(std::move(model));
      }
    }
  } catch (const ShapeError& e) {
    throw DatasetError(std::string("checkpoint: ") + e.what());
  }
  throw DatasetError("checkpoint: unknown model kind");
}

void save_model(const std::string& path, const TrainedModel& model) {
  std::ostringstream os;
  write_model(os, model);
  write_file_atomic(path, os.str());
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_model(in);
}

}  // namespace matten
