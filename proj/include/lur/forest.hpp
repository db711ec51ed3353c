#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lur/common.hpp"
#include "lur/rng.hpp"

namespace lur::forest {

inline constexpr int kFormatVersion = 1;

struct ForestParams {
  std::size_t n_trees = 500;
  std::size_t mtry = 1;
  std::size_t min_node_size = 5;
  bool bootstrap = true;
  std::uint64_t seed = 1;

  /// Throws DomainError unless 1 <= mtry <= n_features, n_trees >= 1 and
  /// min_node_size >= 1.
  void validate(std::size_t n_features) const;
};

/// Node of a regression tree stored in preorder. Splits send
/// x[feature] <= threshold to `left`.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;  // mean of the training targets reaching this node
  std::size_t n = 0;

  [[nodiscard]] bool is_leaf() const { return feature < 0; }
};

class Tree {
 public:
  Tree() = default;
  explicit Tree(std::vector<TreeNode> nodes);

  [[nodiscard]] double predict(std::span<const double> x) const;
  [[nodiscard]] const std::vector<TreeNode>& nodes() const { return nodes_; }
  [[nodiscard]] const TreeNode& root() const { return nodes_.front(); }

  /// Sum of squared deviations from leaf means over the given rows.
  [[nodiscard]] double sse(const Matrix& X, std::span<const double> y, std::span<const std::size_t> rows) const;

 private:
  std::vector<TreeNode> nodes_;
};

/// CART regression tree on the (possibly repeated) rows `rows`.
///
/// At each node mtry candidate features are drawn without replacement
/// from `rng`; the split maximising the SSE decrease over midpoints of
/// consecutive distinct sorted values is taken. Candidates are scanned in
/// ascending feature index and threshold order and only a strictly larger
/// decrease (by more than a relative 1e-12, so rounding never breaks a tie)
/// replaces the incumbent. A node becomes a leaf when it holds
/// at most min_node_size rows, its targets are all equal, or no split
/// reduces SSE.
Tree fit_tree(const Matrix& X, std::span<const double> y, std::span<const std::size_t> rows,
              const ForestParams& params, Rng& rng);

class Forest {
 public:
  Forest() = default;
  Forest(ForestParams params, std::vector<std::string> feature_names, std::vector<Tree> trees);

  /// Mean of per-tree predictions. Throws DomainError on a feature count
  /// mismatch.
  [[nodiscard]] double predict(std::span<const double> x) const;
  [[nodiscard]] std::vector<double> predict_rows(const Matrix& X) const;
  [[nodiscard]] std::vector<double> tree_predictions(std::span<const double> x) const;

  /// Throws DomainError unless `names` equals the training feature order.
  void check_feature_names(const std::vector<std::string>& names) const;

  [[nodiscard]] const ForestParams& params() const { return params_; }
  [[nodiscard]] const std::vector<std::string>& feature_names() const { return feature_names_; }
  [[nodiscard]] const std::vector<Tree>& trees() const { return trees_; }
  [[nodiscard]] std::size_t n_features() const { return feature_names_.size(); }

 private:
  ForestParams params_;
  std::vector<std::string> feature_names_;
  std::vector<Tree> trees_;
};

/// Bagged ensemble. Tree t draws its bootstrap sample and split
/// candidates from Rng::stream(params.seed, t), so the result does not
/// depend on `n_threads` (0 = hardware concurrency).
Forest fit_forest(const Matrix& X, std::span<const double> y, const ForestParams& params,
                  std::vector<std::string> feature_names = {}, unsigned n_threads = 0);

// Serialized form: {"format_version", "params", "feature_names", "trees"},
// each tree a nested node object.
nlohmann::json to_json(const Forest& forest);
Forest forest_from_json(const nlohmann::json& j);
void save_forest(const std::filesystem::path& path, const Forest& forest);
Forest load_forest(const std::filesystem::path& path);

}  // namespace lur::forest
