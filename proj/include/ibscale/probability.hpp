#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ibscale/error.hpp"
#include "ibscale/matrix.hpp"
#include "ibscale/responses.hpp"

namespace ibscale {

// Normalized p(x, y) over items (rows) x relevance categories (columns), with
// cached marginals. All information quantities are in nats.
class JointDistribution {
 public:
  static constexpr double kNormTol = 1e-12;

  JointDistribution() = default;

  // Takes an already-normalized joint; validates every invariant.
  explicit JointDistribution(Matrix joint, std::vector<std::string> itemIds = {})
      : joint_(std::move(joint)), itemIds_(std::move(itemIds)) {
    if (joint_.rows() == 0 || joint_.cols() == 0) fail(ErrorCode::EmptyInput, "empty joint");
    if (itemIds_.empty()) {
      for (std::size_t i = 0; i < joint_.rows(); ++i) itemIds_.push_back(std::to_string(i));
    }
    if (itemIds_.size() != joint_.rows()) {
      fail(ErrorCode::DimensionError, "item id count differs from joint rows");
    }
    px_.assign(joint_.rows(), 0.0);
    py_.assign(joint_.cols(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < joint_.rows(); ++i) {
      for (std::size_t j = 0; j < joint_.cols(); ++j) {
        double v = joint_(i, j);
        if (!(v >= 0.0) || !std::isfinite(v)) {
          fail(ErrorCode::NotADistribution, "joint entries must be finite and non-negative");
        }
        px_[i] += v;
        py_[j] += v;
        total += v;
      }
    }
    if (std::abs(total - 1.0) > kNormTol) {
      fail(ErrorCode::NotADistribution, "joint does not sum to 1");
    }
    for (std::size_t i = 0; i < px_.size(); ++i) {
      if (px_[i] <= 0.0) {
        fail(ErrorCode::DomainError, "item '" + itemIds_[i] + "' has no observed mass");
      }
    }
  }

  // Normalizes arbitrary non-negative weights (counts, scores) into a joint.
  static JointDistribution from_weights(const Matrix& weights,
                                        std::vector<std::string> itemIds = {}) {
    double total = 0.0;
    for (double v : weights.data()) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        fail(ErrorCode::NotADistribution, "weights must be finite and non-negative");
      }
      total += v;
    }
    if (!(total > 0.0)) fail(ErrorCode::EmptyInput, "weights sum to zero");
    Matrix m = weights;
    for (double& v : m.data()) v /= total;
    return JointDistribution(std::move(m), std::move(itemIds));
  }

  std::size_t item_count() const noexcept { return joint_.rows(); }
  std::size_t category_count() const noexcept { return joint_.cols(); }
  const Matrix& joint() const noexcept { return joint_; }
  double operator()(std::size_t x, std::size_t y) const { return joint_(x, y); }
  const std::vector<double>& marginal_x() const noexcept { return px_; }
  const std::vector<double>& marginal_y() const noexcept { return py_; }
  const std::vector<std::string>& item_ids() const noexcept { return itemIds_; }

  // p(y | x) as an |X| x |Y| matrix.
  Matrix conditional_y_given_x() const {
    Matrix c(joint_.rows(), joint_.cols());
    for (std::size_t i = 0; i < joint_.rows(); ++i)
      for (std::size_t j = 0; j < joint_.cols(); ++j) c(i, j) = joint_(i, j) / px_[i];
    return c;
  }

  // Item subset or reorder, renormalized.
  JointDistribution permuted(const std::vector<std::size_t>& order) const {
    Matrix m(order.size(), joint_.cols());
    std::vector<std::string> ids;
    for (std::size_t r = 0; r < order.size(); ++r) {
      for (std::size_t j = 0; j < joint_.cols(); ++j) m(r, j) = joint_(order[r], j);
      ids.push_back(itemIds_[order[r]]);
    }
    return from_weights(m, std::move(ids));
  }

 private:
  Matrix joint_;
  std::vector<std::string> itemIds_;
  std::vector<double> px_;
  std::vector<double> py_;
};

enum class JointMode {
  AnswerLevel,  // Y = answer levels 1..L
  Respondent,   // Y = respondents, weights = scores
};

inline std::string to_string(JointMode mode) {
  return mode == JointMode::AnswerLevel ? "answer" : "respondent";
}

inline JointMode parse_joint_mode(const std::string& s) {
  if (s == "answer") return JointMode::AnswerLevel;
  if (s == "respondent") return JointMode::Respondent;
  fail(ErrorCode::InvalidConfig, "unknown joint mode '" + s + "' (expected answer|respondent)");
}

// Raw (unnormalized) weights that estimate_joint normalizes; exposed so callers
// can recover integer counts.
inline Matrix joint_weights(const ResponseMatrix& responses, JointMode mode) {
  const std::size_t items = responses.items();
  const std::size_t n = responses.respondents();
  if (n == 0 || items == 0) fail(ErrorCode::EmptyInput, "response matrix is empty");
  const int levels = responses.level_count();
  Matrix w;
  if (mode == JointMode::AnswerLevel) {
    w = Matrix(items, static_cast<std::size_t>(levels));
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t i = 0; i < items; ++i) {
        int v = responses(r, i);
        if (v < 1 || v > levels) fail(ErrorCode::InvalidLevel, "level outside range");
        w(i, static_cast<std::size_t>(v - 1)) += 1.0;
      }
    }
  } else {
    w = Matrix(items, n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t i = 0; i < items; ++i) {
        int v = responses(r, i);
        if (v < 1 || v > levels) fail(ErrorCode::InvalidLevel, "level outside range");
        w(i, r) = v;
      }
    }
  }
  return w;
}

// smoothing is added to every cell weight before normalization (0 = off).
inline JointDistribution estimate_joint(const ResponseMatrix& responses,
                                        JointMode mode = JointMode::AnswerLevel,
                                        double smoothing = 0.0) {
  if (!(smoothing >= 0.0)) fail(ErrorCode::InvalidConfig, "smoothing must be >= 0");
  Matrix w = joint_weights(responses, mode);
  double total = 0.0;
  for (double& v : w.data()) {
    v += smoothing;
    total += v;
  }
  // Exact division by the integer total keeps counts recoverable.
  for (double& v : w.data()) v /= total;
  return JointDistribution(std::move(w), responses.item_ids());
}

namespace detail {
inline void require_distribution(std::span<const double> p, double tol, const char* what) {
  double s = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      fail(ErrorCode::NotADistribution, std::string(what) + ": negative or non-finite entry");
    }
    s += v;
  }
  if (p.empty() || std::abs(s - 1.0) > tol) {
    fail(ErrorCode::NotADistribution, std::string(what) + ": entries do not sum to 1");
  }
}
}  // namespace detail

inline double entropy(std::span<const double> p) {
  detail::require_distribution(p, 1e-9, "entropy");
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return std::max(0.0, h);
}

inline double entropy(const std::vector<double>& p) { return entropy(std::span<const double>(p)); }

// +infinity when p has mass where q has none.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) fail(ErrorCode::DimensionError, "kl_divergence: length mismatch");
  detail::require_distribution(p, 1e-9, "kl_divergence(p)");
  detail::require_distribution(q, 1e-9, "kl_divergence(q)");
  double d = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= 0.0) continue;
    if (q[k] <= 0.0) return std::numeric_limits<double>::infinity();
    d += p[k] * std::log(p[k] / q[k]);
  }
  return std::max(0.0, d);
}

inline double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  return kl_divergence(std::span<const double>(p), std::span<const double>(q));
}

// I(A;B) of a joint given with its marginals; zero cells contribute nothing.
inline double mutual_information(const Matrix& joint, std::span<const double> pa,
                                 std::span<const double> pb) {
  double mi = 0.0;
  for (std::size_t i = 0; i < joint.rows(); ++i) {
    for (std::size_t j = 0; j < joint.cols(); ++j) {
      double v = joint(i, j);
      if (v > 0.0) mi += v * std::log(v / (pa[i] * pb[j]));
    }
  }
  return std::max(0.0, mi);
}

inline double mutual_information(const JointDistribution& joint) {
  return mutual_information(joint.joint(), joint.marginal_x(), joint.marginal_y());
}

}  // namespace ibscale
