#include "lur/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include <fmt/format.h>

namespace lur::forest {

using nlohmann::json;

void ForestParams::validate(std::size_t n_features) const {
  if (n_trees < 1) throw DomainError("n_trees must be >= 1");
  if (min_node_size < 1) throw DomainError("min_node_size must be >= 1");
  if (mtry < 1 || mtry > n_features)
    throw DomainError(fmt::format("mtry must be in [1, {}] (got {})", n_features, mtry));
}

Tree::Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw DomainError("tree without nodes");
  const auto n = static_cast<std::int32_t>(nodes_.size());
  for (const auto& node : nodes_)
    if (!node.is_leaf() && (node.left <= 0 || node.right <= 0 || node.left >= n || node.right >= n))
      throw DomainError("tree node has out-of-range children");
}

double Tree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& node = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
  }
  return nodes_[i].value;
}

double Tree::sse(const Matrix& X, std::span<const double> y, std::span<const std::size_t> rows) const {
  double total = 0.0;
  for (auto r : rows) {
    const double d = y[r] - predict(X.row(r));
    total += d * d;
  }
  return total;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, std::span<const double> y, const ForestParams& params, Rng& rng)
      : X_(X), y_(y), params_(params), rng_(rng), pool_(X.cols()) {
    std::iota(pool_.begin(), pool_.end(), std::size_t{0});
  }

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    grow(rows, 0, rows.size());
    return std::move(nodes_);
  }

 private:
  static constexpr double kTieTolerance = 1e-12;

  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  std::int32_t grow(std::vector<std::size_t>& rows, std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    double sum = 0.0;
    double lo = y_[rows[begin]];
    double hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = y_[rows[i]];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const auto index = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(TreeNode{-1, 0.0, -1, -1, sum / static_cast<double>(n), n});
    if (n <= params_.min_node_size || lo == hi) return index;

    const Split split = best_split(rows, begin, end, sum);
    if (split.feature < 0) return index;

    const auto f = static_cast<std::size_t>(split.feature);
    const auto mid = std::stable_partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                           rows.begin() + static_cast<std::ptrdiff_t>(end),
                                           [&](std::size_t r) { return X_(r, f) <= split.threshold; });
    const auto cut = static_cast<std::size_t>(mid - rows.begin());

    nodes_[static_cast<std::size_t>(index)].feature = split.feature;
    nodes_[static_cast<std::size_t>(index)].threshold = split.threshold;
    const auto left = grow(rows, begin, cut);
    const auto right = grow(rows, cut, end);
    nodes_[static_cast<std::size_t>(index)].left = left;
    nodes_[static_cast<std::size_t>(index)].right = right;
    return index;
  }

  Split best_split(const std::vector<std::size_t>& rows, std::size_t begin, std::size_t end, double sum) {
    const std::size_t n_features = pool_.size();
    for (std::size_t i = 0; i < params_.mtry; ++i) {
      const auto j = i + static_cast<std::size_t>(rng_.uniform_below(n_features - i));
      std::swap(pool_[i], pool_[j]);
    }
    std::vector<std::size_t> candidates(pool_.begin(), pool_.begin() + static_cast<std::ptrdiff_t>(params_.mtry));
    std::sort(candidates.begin(), candidates.end());

    const std::size_t n = end - begin;
    const double parent = sum * sum / static_cast<double>(n);
    Split best;
    for (const auto f : candidates) {
      scratch_.clear();
      for (std::size_t i = begin; i < end; ++i) scratch_.emplace_back(X_(rows[i], f), y_[rows[i]]);
      std::sort(scratch_.begin(), scratch_.end());
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += scratch_[i].second;
        const double a = scratch_[i].first;
        const double b = scratch_[i + 1].first;
        if (!(a < b)) continue;
        const auto n_left = static_cast<double>(i + 1);
        const auto n_right = static_cast<double>(n - i - 1);
        const double right_sum = sum - left_sum;
        const double gain = left_sum * left_sum / n_left + right_sum * right_sum / n_right - parent;
        // Equal partitions reached through different features can differ
        // in the last bits; those count as ties and keep the incumbent.
        if (gain > best.gain * (1.0 + kTieTolerance)) {
          double t = 0.5 * (a + b);
          if (!(t >= a && t < b)) t = a;
          best = {static_cast<int>(f), t, gain};
        }
      }
    }
    return best;
  }

  const Matrix& X_;
  std::span<const double> y_;
  const ForestParams& params_;
  Rng& rng_;
  std::vector<std::size_t> pool_;
  std::vector<std::pair<double, double>> scratch_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

Tree fit_tree(const Matrix& X, std::span<const double> y, std::span<const std::size_t> rows,
              const ForestParams& params, Rng& rng) {
  if (rows.empty()) throw DomainError("fit_tree: no rows");
  if (y.size() != X.rows()) throw DomainError("fit_tree: X and y row counts differ");
  params.validate(X.cols());
  for (auto r : rows) {
    if (r >= X.rows()) throw DomainError("fit_tree: row index out of range");
    for (double v : X.row(r))
      if (!std::isfinite(v)) throw DomainError("fit_tree: non-finite predictor value");
    if (!std::isfinite(y[r])) throw DomainError("fit_tree: non-finite target");
  }
  TreeBuilder builder(X, y, params, rng);
  return Tree(builder.build(std::vector<std::size_t>(rows.begin(), rows.end())));
}

Forest::Forest(ForestParams params, std::vector<std::string> feature_names, std::vector<Tree> trees)
    : params_(params), feature_names_(std::move(feature_names)), trees_(std::move(trees)) {
  if (trees_.empty()) throw DomainError("forest without trees");
}

double Forest::predict(std::span<const double> x) const {
  if (x.size() != feature_names_.size())
    throw DomainError(fmt::format("forest expects {} predictors, got {}", feature_names_.size(), x.size()));
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict(x);
  return sum / static_cast<double>(trees_.size());
}

std::vector<double> Forest::predict_rows(const Matrix& X) const {
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out[r] = predict(X.row(r));
  return out;
}

std::vector<double> Forest::tree_predictions(std::span<const double> x) const {
  if (x.size() != feature_names_.size()) throw DomainError("forest: feature count mismatch");
  std::vector<double> out;
  out.reserve(trees_.size());
  for (const auto& t : trees_) out.push_back(t.predict(x));
  return out;
}

void Forest::check_feature_names(const std::vector<std::string>& names) const {
  if (names != feature_names_)
    throw DomainError(fmt::format("predictor order [{}] does not match model [{}]", fmt::join(names, ","),
                                  fmt::join(feature_names_, ",")));
}

Forest fit_forest(const Matrix& X, std::span<const double> y, const ForestParams& params,
                  std::vector<std::string> feature_names, unsigned n_threads) {
  if (X.rows() == 0) throw DomainError("fit_forest: no rows");
  params.validate(X.cols());
  if (feature_names.empty())
    for (std::size_t c = 0; c < X.cols(); ++c) feature_names.push_back(fmt::format("x{}", c));
  if (feature_names.size() != X.cols()) throw DomainError("fit_forest: feature name count mismatch");

  std::vector<Tree> trees(params.n_trees);
  const std::size_t n = X.rows();
  auto build_one = [&](std::size_t t) {
    Rng rng = Rng::stream(params.seed, t);
    std::vector<std::size_t> rows(n);
    if (params.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(rng.uniform_below(n));
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    trees[t] = fit_tree(X, y, rows, params, rng);
  };

  unsigned threads = n_threads ? n_threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, params.n_trees));
  if (threads <= 1) {
    for (std::size_t t = 0; t < params.n_trees; ++t) build_one(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t t = next++; t < params.n_trees; t = next++) build_one(t);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    pool.clear();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return Forest(params, std::move(feature_names), std::move(trees));
}

namespace {

json node_to_json(const std::vector<TreeNode>& nodes, std::size_t i) {
  const auto& node = nodes[i];
  json j;
  j["n"] = node.n;
  j["value"] = node.value;
  if (!node.is_leaf()) {
    j["feature"] = node.feature;
    j["threshold"] = node.threshold;
    j["left"] = node_to_json(nodes, static_cast<std::size_t>(node.left));
    j["right"] = node_to_json(nodes, static_cast<std::size_t>(node.right));
  }
  return j;
}

std::int32_t node_from_json(const json& j, std::vector<TreeNode>& nodes, std::size_t n_features) {
  const auto index = static_cast<std::int32_t>(nodes.size());
  TreeNode node;
  node.n = j.at("n").get<std::size_t>();
  node.value = j.at("value").get<double>();
  nodes.push_back(node);
  if (j.contains("feature")) {
    const int f = j.at("feature").get<int>();
    if (f < 0 || static_cast<std::size_t>(f) >= n_features) throw DomainError("tree node feature out of range");
    nodes[static_cast<std::size_t>(index)].feature = f;
    nodes[static_cast<std::size_t>(index)].threshold = j.at("threshold").get<double>();
    const auto left = node_from_json(j.at("left"), nodes, n_features);
    const auto right = node_from_json(j.at("right"), nodes, n_features);
    nodes[static_cast<std::size_t>(index)].left = left;
    nodes[static_cast<std::size_t>(index)].right = right;
  }
  return index;
}

}  // namespace

json to_json(const Forest& forest) {
  json j;
  j["format_version"] = kFormatVersion;
  const auto& p = forest.params();
  j["params"] = {{"n_trees", p.n_trees},
                 {"mtry", p.mtry},
                 {"min_node_size", p.min_node_size},
                 {"bootstrap", p.bootstrap},
                 {"seed", p.seed},
                 {"rng", "xoshiro256**/splitmix64"}};
  j["feature_names"] = forest.feature_names();
  j["trees"] = json::array();
  for (const auto& t : forest.trees()) j["trees"].push_back(node_to_json(t.nodes(), 0));
  return j;
}

Forest forest_from_json(const json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kFormatVersion) throw DomainError(fmt::format("unsupported forest format_version {}", version));
    ForestParams p;
    const auto& jp = j.at("params");
    p.n_trees = jp.at("n_trees").get<std::size_t>();
    p.mtry = jp.at("mtry").get<std::size_t>();
    p.min_node_size = jp.at("min_node_size").get<std::size_t>();
    p.bootstrap = jp.at("bootstrap").get<bool>();
    p.seed = jp.at("seed").get<std::uint64_t>();
    auto names = j.at("feature_names").get<std::vector<std::string>>();
    std::vector<Tree> trees;
    for (const auto& jt : j.at("trees")) {
      std::vector<TreeNode> nodes;
      node_from_json(jt, nodes, names.size());
      trees.emplace_back(std::move(nodes));
    }
    if (trees.size() != p.n_trees) throw DomainError("forest: tree count does not match params.n_trees");
    return Forest(p, std::move(names), std::move(trees));
  } catch (const json::exception& e) {
    throw DomainError(fmt::format("forest JSON: {}", e.what()));
  }
}

void save_forest(const std::filesystem::path& path, const Forest& forest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PipelineError(fmt::format("cannot write '{}'", path.string()));
  out << to_json(forest).dump() << '\n';
}

Forest load_forest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError(fmt::format("cannot open forest '{}'", path.string()));
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DomainError(fmt::format("forest '{}': {}", path.string(), e.what()));
  }
  return forest_from_json(j);
}

}  // namespace lur::forest
