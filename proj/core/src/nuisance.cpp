#include "orthoboot/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "orthoboot/error.hpp"
#include "orthoboot/parallel.hpp"
#include "orthoboot/random.hpp"

namespace orthoboot {

namespace {

class FunctionModel final : public PredictorModel {
 public:
  explicit FunctionModel(Predictor::Function fn) : fn_(std::move(fn)) {}
  double predict(std::span<const double> x) const override { return fn_(x); }

 private:
  Predictor::Function fn_;
};

// ---------------------------------------------------------------------------
// Regression tree

struct TreeNode {
  std::size_t feature = 0;
  double threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  double value = 0.0;
  bool leaf = true;
};

class RegressionTree {
 public:
  double predict(std::span<const double> x) const {
    std::size_t id = 0;
    while (!nodes_[id].leaf) {
      const auto& node = nodes_[id];
      id = x[node.feature] <= node.threshold ? node.left : node.right;
    }
    return nodes_[id].value;
  }

  static RegressionTree grow(const CovariateMatrix& x, std::span<const double> y,
                             std::vector<std::size_t> samples, const ForestConfig& cfg,
                             std::size_t mtry, RandomStream& rng);

 private:
  std::vector<TreeNode> nodes_;
};

struct SplitCandidate {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double score = 0.0;
};

struct PendingNode {
  std::size_t id;
  std::size_t begin;
  std::size_t end;
};

RegressionTree RegressionTree::grow(const CovariateMatrix& x, std::span<const double> y,
                                    std::vector<std::size_t> samples, const ForestConfig& cfg,
                                    std::size_t mtry, RandomStream& rng) {
  RegressionTree tree;
  tree.nodes_.emplace_back();

  const std::size_t q = x.cols();
  std::vector<std::size_t> features(q);
  std::vector<std::pair<double, double>> column;  // (x value, y)
  std::vector<PendingNode> stack{{0, 0, samples.size()}};

  while (!stack.empty()) {
    const PendingNode pending = stack.back();
    stack.pop_back();
    const std::size_t count = pending.end - pending.begin;

    double sum = 0.0;
    double lo = y[samples[pending.begin]];
    double hi = lo;
    for (std::size_t k = pending.begin; k < pending.end; ++k) {
      const double v = y[samples[k]];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    tree.nodes_[pending.id].value = sum / static_cast<double>(count);
    if (count < 2 * cfg.min_leaf || lo == hi) {
      continue;
    }

    // Partial Fisher-Yates to pick mtry candidate features.
    std::iota(features.begin(), features.end(), std::size_t{0});
    for (std::size_t k = 0; k < mtry; ++k) {
      const std::size_t pick = k + rng.uniform_index(q - k);
      std::swap(features[k], features[pick]);
    }

    SplitCandidate best;
    best.score = sum * sum / static_cast<double>(count);
    const double parent_score = best.score;
    for (std::size_t f = 0; f < mtry; ++f) {
      const std::size_t feature = features[f];
      column.clear();
      for (std::size_t k = pending.begin; k < pending.end; ++k) {
        column.emplace_back(x(samples[k], feature), y[samples[k]]);
      }
      std::sort(column.begin(), column.end());
      double left_sum = 0.0;
      for (std::size_t k = 1; k < count; ++k) {
        left_sum += column[k - 1].second;
        if (k < cfg.min_leaf || count - k < cfg.min_leaf) continue;
        if (!(column[k - 1].first < column[k].first)) continue;
        const double right_sum = sum - left_sum;
        const double score = left_sum * left_sum / static_cast<double>(k) +
                             right_sum * right_sum / static_cast<double>(count - k);
        if (score > best.score) {
          best.found = true;
          best.feature = feature;
          best.threshold = 0.5 * (column[k - 1].first + column[k].first);
          best.score = score;
        }
      }
    }
    if (!best.found || best.score - parent_score <= 1e-12 * std::abs(parent_score)) {
      continue;
    }

    auto first = samples.begin() + static_cast<std::ptrdiff_t>(pending.begin);
    auto last = samples.begin() + static_cast<std::ptrdiff_t>(pending.end);
    auto middle = std::stable_partition(first, last, [&](std::size_t i) {
      return x(i, best.feature) <= best.threshold;
    });
    const std::size_t split = pending.begin + static_cast<std::size_t>(middle - first);
    if (split == pending.begin || split == pending.end) {
      continue;
    }

    const std::size_t left_id = tree.nodes_.size();
    tree.nodes_.emplace_back();
    const std::size_t right_id = tree.nodes_.size();
    tree.nodes_.emplace_back();
    auto& node = tree.nodes_[pending.id];
    node.leaf = false;
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left_id;
    node.right = right_id;
    stack.push_back({right_id, split, pending.end});
    stack.push_back({left_id, pending.begin, split});
  }
  return tree;
}

class ForestModel final : public PredictorModel {
 public:
  explicit ForestModel(std::vector<RegressionTree> trees) : trees_(std::move(trees)) {}

  double predict(std::span<const double> x) const override {
    double total = 0.0;
    for (const auto& tree : trees_) {
      total += tree.predict(x);
    }
    return total / static_cast<double>(trees_.size());
  }

 private:
  std::vector<RegressionTree> trees_;
};

// ---------------------------------------------------------------------------
// Nadaraya-Watson

class KernelModel final : public PredictorModel {
 public:
  KernelModel(std::vector<double> x, std::vector<double> y, double bandwidth)
      : x_(std::move(x)), y_(std::move(y)), inv_bandwidth_(1.0 / bandwidth) {}

  double predict(std::span<const double> query) const override {
    const double q = query[0];
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      const double u = (q - x_[i]) * inv_bandwidth_;
      const double k = std::exp(-0.5 * u * u);
      num += k * y_[i];
      den += k;
    }
    if (den > 0.0 && std::isfinite(num / den)) {
      return num / den;
    }
    std::size_t nearest = 0;
    for (std::size_t i = 1; i < x_.size(); ++i) {
      if (std::abs(q - x_[i]) < std::abs(q - x_[nearest])) nearest = i;
    }
    return y_[nearest];
  }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  double inv_bandwidth_;
};

class ClampedModel final : public PredictorModel {
 public:
  ClampedModel(Predictor inner, double lo, double hi) : inner_(std::move(inner)), lo_(lo), hi_(hi) {}
  double predict(std::span<const double> x) const override {
    return std::clamp(inner_.predict(x), lo_, hi_);
  }

 private:
  Predictor inner_;
  double lo_;
  double hi_;
};

void require_finite(std::span<const double> v, const char* what) {
  for (double value : v) {
    if (!std::isfinite(value)) {
      throw InvalidArgument(std::string(what) + ": non-finite value");
    }
  }
}

}  // namespace

Predictor Predictor::from_function(Function fn) {
  return Predictor(std::make_shared<FunctionModel>(std::move(fn)));
}

Predictor Predictor::constant(double value) {
  return from_function([value](std::span<const double>) { return value; });
}

double Predictor::predict(std::span<const double> x) const {
  if (!model_) {
    throw InvalidArgument("Predictor: not fitted");
  }
  return model_->predict(x);
}

std::vector<double> Predictor::predict_rows(const CovariateMatrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    out[i] = predict(x.row(i));
  }
  return out;
}

void ForestConfig::validate() const {
  if (num_trees == 0) throw InvalidArgument("ForestConfig: num_trees must be positive");
  if (!(subsample_exponent > 0.0 && subsample_exponent <= 1.0)) {
    throw InvalidArgument("ForestConfig: subsample_exponent must lie in (0, 1]");
  }
  if (min_leaf == 0) throw InvalidArgument("ForestConfig: min_leaf must be positive");
  if (max_features && *max_features == 0) {
    throw InvalidArgument("ForestConfig: max_features must be positive");
  }
}

std::size_t ForestConfig::subsample_size(std::size_t n) const {
  // The epsilon keeps exact integer powers (e.g. 100^0.5) from flooring down.
  const double m = std::floor(std::pow(static_cast<double>(n), subsample_exponent) + 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(m), 1, n);
}

std::size_t ForestConfig::features_per_split(std::size_t q) const {
  if (!max_features) {
    return std::max<std::size_t>(1, (q + 2) / 3);
  }
  return std::min(*max_features, q);
}

Predictor fit_forest(const CovariateMatrix& x, std::span<const double> y, const ForestConfig& cfg) {
  cfg.validate();
  const std::size_t n = x.rows();
  if (n < 2) throw InvalidArgument("fit_forest: need at least 2 observations");
  if (x.cols() == 0) throw InvalidArgument("fit_forest: need at least 1 covariate");
  if (y.size() != n) throw InvalidArgument("fit_forest: x and y lengths differ");
  require_finite(y, "fit_forest");

  const std::size_t m = cfg.subsample_size(n);
  const std::size_t mtry = cfg.features_per_split(x.cols());
  std::vector<RegressionTree> trees(cfg.num_trees);

  parallel_for(cfg.num_trees, cfg.threads, [&](std::size_t t) {
    RandomStream rng(mix_seed(cfg.seed, t));
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t pick = k + rng.uniform_index(n - k);
      std::swap(pool[k], pool[pick]);
    }
    pool.resize(m);
    trees[t] = RegressionTree::grow(x, y, std::move(pool), cfg, mtry, rng);
  });

  return Predictor(std::make_shared<ForestModel>(std::move(trees)));
}

double silverman_bandwidth(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw InvalidArgument("silverman_bandwidth: need at least 2 points");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
}

Predictor fit_kernel(std::span<const double> x, std::span<const double> y,
                     std::optional<double> bandwidth) {
  const std::size_t n = x.size();
  if (n < 2) throw InvalidArgument("fit_kernel: need at least 2 observations");
  if (y.size() != n) throw InvalidArgument("fit_kernel: x and y lengths differ");
  require_finite(x, "fit_kernel");
  require_finite(y, "fit_kernel");

  double b = 0.0;
  if (bandwidth) {
    if (!(*bandwidth > 0.0) || !std::isfinite(*bandwidth)) {
      throw InvalidArgument("fit_kernel: bandwidth must be positive");
    }
    b = *bandwidth;
  } else {
    b = silverman_bandwidth(x);
    // Constant x: every kernel weight is equal for any bandwidth.
    if (!(b > 0.0)) b = 1.0;
  }
  return Predictor(std::make_shared<KernelModel>(std::vector<double>(x.begin(), x.end()),
                                                 std::vector<double>(y.begin(), y.end()), b));
}

Predictor clamp_propensity(Predictor p, ClampSpec spec) {
  if (!(spec.epsilon > 0.0 && spec.epsilon < 0.5)) {
    throw InvalidArgument("clamp_propensity: epsilon must lie in (0, 0.5)");
  }
  return Predictor(std::make_shared<ClampedModel>(std::move(p), spec.epsilon, 1.0 - spec.epsilon));
}

}  // namespace orthoboot
