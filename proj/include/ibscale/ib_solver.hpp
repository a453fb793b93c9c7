#pragma once

// Iterative Information Bottleneck clustering of items X into clusters T,
// preserving information about the relevance variable Y.
//
// One sweep applies, in order:
//   p(t|x) = p(t) exp(-beta * KL[p(y|x) || p(y|t)]) / Z(x, beta)
//   p(t)   = sum_x p(x) p(t|x)
//   p(y|t) = sum_x p(y|x) p(x|t)
// Each step minimizes I(T;X) + beta * E KL[p(y|x) || p(y|t)] over one block
// of variables, so L = I(T;X) - beta I(T;Y) never increases across sweeps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "ibscale/error.hpp"
#include "ibscale/matrix.hpp"
#include "ibscale/partition.hpp"
#include "ibscale/probability.hpp"
#include "ibscale/rng.hpp"

namespace ibscale {

struct AnnealingSchedule {
  double start = 1.0;
  double ratio = 2.0;
  std::size_t stages = 6;

  // Geometric betas below the target, followed by the target itself.
  std::vector<double> betas(double target) const {
    std::vector<double> out;
    double b = start;
    for (std::size_t i = 0; i < stages && b < target; ++i, b *= ratio) out.push_back(b);
    out.push_back(target);
    return out;
  }
};

struct SolverConfig {
  double beta = 50.0;
  std::optional<AnnealingSchedule> annealing;
  std::size_t restarts = 100;
  std::size_t maxIterations = 500;
  double convergenceTol = 1e-8;
  std::uint64_t seed = 0;
  double smoothing = 0.0;
  // Execution only: results are identical for any thread count.
  std::size_t threads = 1;

  void validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) fail(ErrorCode::InvalidConfig, "beta must be > 0");
    if (restarts < 1) fail(ErrorCode::InvalidConfig, "restarts must be >= 1");
    if (!(convergenceTol > 0.0)) fail(ErrorCode::InvalidConfig, "convergenceTol must be > 0");
    if (maxIterations < 1) fail(ErrorCode::InvalidConfig, "maxIterations must be >= 1");
    if (!(smoothing >= 0.0)) fail(ErrorCode::InvalidConfig, "smoothing must be >= 0");
    if (annealing) {
      if (!(annealing->start > 0.0) || !(annealing->ratio > 1.0)) {
        fail(ErrorCode::InvalidConfig, "annealing needs start > 0 and ratio > 1");
      }
    }
  }
};

struct TracePoint {
  double beta;
  double functional;
};

struct IBSolution {
  std::size_t clusterCount = 0;
  double beta = 0.0;
  Matrix assignment;                 // |T| x |X|, p(t|x); each column sums to 1
  std::vector<double> clusterPrior;  // p(t)
  Matrix relevance;                  // |Y| x |T|, p(y|t); each column sums to 1
  double functionalValue = 0.0;
  double infoTX = 0.0;
  double infoTY = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;
  std::vector<std::size_t> emptyClusters;
  std::vector<TracePoint> trace;  // functional after initialization and every sweep
  double lastChange = std::numeric_limits<double>::infinity();  // largest entry change of the last sweep
                                                                // (of the next one, once converged)

  friend bool operator==(const IBSolution& a, const IBSolution& b) {
    auto traceEq = [](const std::vector<TracePoint>& x, const std::vector<TracePoint>& y) {
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i].beta != y[i].beta || x[i].functional != y[i].functional) return false;
      return true;
    };
    return a.clusterCount == b.clusterCount && a.beta == b.beta &&
           a.assignment == b.assignment && a.clusterPrior == b.clusterPrior &&
           a.relevance == b.relevance && a.functionalValue == b.functionalValue &&
           a.infoTX == b.infoTX && a.infoTY == b.infoTY && a.iterations == b.iterations &&
           a.converged == b.converged && a.seed == b.seed &&
           a.emptyClusters == b.emptyClusters && traceEq(a.trace, b.trace);
  }
};

struct InformationTerms {
  double infoTX = 0.0;
  double infoTY = 0.0;
};

// I(T;X) and I(T;Y) from p(t,x) = p(t|x)p(x) and p(t,y) = sum_x p(t|x)p(x,y).
inline InformationTerms information_terms(const JointDistribution& joint, const Matrix& assignment) {
  const std::size_t nt = assignment.rows();
  const std::size_t nx = joint.item_count();
  const std::size_t ny = joint.category_count();
  if (assignment.cols() != nx) fail(ErrorCode::DimensionError, "assignment width differs from |X|");
  const auto& px = joint.marginal_x();
  const auto& py = joint.marginal_y();

  std::vector<double> pt(nt, 0.0);
  Matrix ptx(nt, nx);
  Matrix pty(nt, ny);
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t x = 0; x < nx; ++x) {
      double q = assignment(t, x);
      if (q <= 0.0) continue;
      ptx(t, x) = q * px[x];
      pt[t] += q * px[x];
      for (std::size_t y = 0; y < ny; ++y) pty(t, y) += q * joint(x, y);
    }
  }
  InformationTerms out;
  out.infoTX = mutual_information(ptx, pt, px);
  out.infoTY = mutual_information(pty, pt, py);
  return out;
}

inline double ib_functional(const JointDistribution& joint, const Matrix& assignment, double beta) {
  auto terms = information_terms(joint, assignment);
  return terms.infoTX - beta * terms.infoTY;
}

inline double ib_functional(const JointDistribution& joint, const IBSolution& state) {
  return ib_functional(joint, state.assignment, state.beta);
}

namespace detail {

// Recomputes p(t), p(y|t), the information terms and the functional from the
// assignment alone.
inline void refresh_derived(const JointDistribution& joint, IBSolution& s) {
  const std::size_t nt = s.clusterCount;
  const std::size_t nx = joint.item_count();
  const std::size_t ny = joint.category_count();
  const auto& px = joint.marginal_x();

  s.clusterPrior.assign(nt, 0.0);
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t x = 0; x < nx; ++x) s.clusterPrior[t] += px[x] * s.assignment(t, x);

  s.relevance = Matrix(ny, nt);
  s.emptyClusters.clear();
  for (std::size_t t = 0; t < nt; ++t) {
    if (s.clusterPrior[t] <= 0.0) {
      // Relevance of an empty cluster is undefined; park it at p(y).
      s.emptyClusters.push_back(t);
      for (std::size_t y = 0; y < ny; ++y) s.relevance(y, t) = joint.marginal_y()[y];
      continue;
    }
    double colSum = 0.0;
    for (std::size_t y = 0; y < ny; ++y) {
      double acc = 0.0;
      for (std::size_t x = 0; x < nx; ++x) acc += s.assignment(t, x) * joint(x, y);
      s.relevance(y, t) = acc;
      colSum += acc;
    }
    for (std::size_t y = 0; y < ny; ++y) s.relevance(y, t) /= colSum;
  }

  auto terms = information_terms(joint, s.assignment);
  s.infoTX = terms.infoTX;
  s.infoTY = terms.infoTY;
  s.functionalValue = s.infoTX - s.beta * s.infoTY;
}

}  // namespace detail

// Rebuilds a consistent solution from an explicit assignment p(t|x).
inline IBSolution make_solution(const JointDistribution& joint, Matrix assignment, double beta,
                                std::uint64_t seed = 0) {
  const std::size_t nx = joint.item_count();
  if (assignment.cols() != nx || assignment.rows() == 0) {
    fail(ErrorCode::DimensionError, "assignment must be |T| x |X|");
  }
  for (std::size_t x = 0; x < nx; ++x) {
    double s = 0.0;
    for (std::size_t t = 0; t < assignment.rows(); ++t) {
      if (!(assignment(t, x) >= 0.0)) fail(ErrorCode::NotADistribution, "negative assignment");
      s += assignment(t, x);
    }
    if (std::abs(s - 1.0) > 1e-9) fail(ErrorCode::NotADistribution, "assignment column not normalized");
  }
  IBSolution s;
  s.clusterCount = assignment.rows();
  s.beta = beta;
  s.assignment = std::move(assignment);
  s.seed = seed;
  detail::refresh_derived(joint, s);
  s.trace.push_back({beta, s.functionalValue});
  return s;
}

// Random start: each item's column ~ symmetric Dirichlet(1).
inline IBSolution ib_initialize(const JointDistribution& joint, std::size_t t, std::uint64_t seed,
                                double beta = 50.0) {
  const std::size_t nx = joint.item_count();
  if (t < 1 || t > nx) {
    fail(ErrorCode::InvalidClusterCount,
         "cluster count " + std::to_string(t) + " outside 1.." + std::to_string(nx));
  }
  std::mt19937_64 gen(splitmix64(seed));
  std::exponential_distribution<double> expo(1.0);
  Matrix q(t, nx);
  for (std::size_t x = 0; x < nx; ++x) {
    double sum = 0.0;
    for (std::size_t c = 0; c < t; ++c) {
      q(c, x) = expo(gen);
      sum += q(c, x);
    }
    if (sum <= 0.0) {
      for (std::size_t c = 0; c < t; ++c) q(c, x) = 1.0 / static_cast<double>(t);
    } else {
      for (std::size_t c = 0; c < t; ++c) q(c, x) /= sum;
    }
  }
  return make_solution(joint, std::move(q), beta, seed);
}

// One full sweep in the log domain. Infinite KL gives weight exactly 0.
inline IBSolution ib_iterate(const JointDistribution& joint, const IBSolution& state) {
  const std::size_t nt = state.clusterCount;
  const std::size_t nx = joint.item_count();
  const std::size_t ny = joint.category_count();
  const auto& px = joint.marginal_x();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  std::vector<double> logPrior(nt);
  for (std::size_t t = 0; t < nt; ++t)
    logPrior[t] = state.clusterPrior[t] > 0.0 ? std::log(state.clusterPrior[t]) : kNegInf;

  // Log relevance with zeros mapped to -inf.
  Matrix logRel(ny, nt);
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t t = 0; t < nt; ++t) {
      double r = state.relevance(y, t);
      logRel(y, t) = r > 0.0 ? std::log(r) : kNegInf;
    }

  IBSolution next;
  next.clusterCount = nt;
  next.beta = state.beta;
  next.seed = state.seed;
  next.assignment = Matrix(nt, nx);
  next.iterations = state.iterations + 1;
  next.trace = state.trace;

  std::vector<double> logw(nt);
  double maxChange = 0.0;
  for (std::size_t x = 0; x < nx; ++x) {
    double best = kNegInf;
    for (std::size_t t = 0; t < nt; ++t) {
      if (logPrior[t] == kNegInf) {
        logw[t] = kNegInf;
        continue;
      }
      double kl = 0.0;
      for (std::size_t y = 0; y < ny; ++y) {
        double pyx = joint(x, y) / px[x];
        if (pyx <= 0.0) continue;
        if (logRel(y, t) == kNegInf) {
          kl = std::numeric_limits<double>::infinity();
          break;
        }
        kl += pyx * (std::log(pyx) - logRel(y, t));
      }
      logw[t] = std::isinf(kl) ? kNegInf : logPrior[t] - state.beta * kl;
      best = std::max(best, logw[t]);
    }
    double z = 0.0;  // partition function, relative to exp(best)
    for (std::size_t t = 0; t < nt; ++t) {
      double w = logw[t] == kNegInf ? 0.0 : std::exp(logw[t] - best);
      next.assignment(t, x) = w;
      z += w;
    }
    for (std::size_t t = 0; t < nt; ++t) {
      next.assignment(t, x) /= z;
      maxChange = std::max(maxChange, std::abs(next.assignment(t, x) - state.assignment(t, x)));
    }
  }
  detail::refresh_derived(joint, next);
  // Prior and relevance count too: a low-mass cluster's p(y|t) can still move
  // after p(t|x) has settled.
  for (std::size_t t = 0; t < nt; ++t)
    maxChange = std::max(maxChange, std::abs(next.clusterPrior[t] - state.clusterPrior[t]));
  for (std::size_t k = 0; k < next.relevance.data().size(); ++k)
    maxChange = std::max(maxChange, std::abs(next.relevance.data()[k] - state.relevance.data()[k]));
  next.lastChange = maxChange;
  next.trace.push_back({next.beta, next.functionalValue});
  return next;
}

// Iterates at the state's beta until a sweep would move no entry of p(t|x),
// p(t) or p(y|t) by tol or more, then returns the state that sweep started
// from: its fixed-point residual is exactly the change just measured.
inline IBSolution ib_converge(const JointDistribution& joint, IBSolution state, double tol,
                              std::size_t maxIterations) {
  state.converged = false;
  for (std::size_t i = 0; i < maxIterations; ++i) {
    IBSolution next = ib_iterate(joint, state);
    if (next.lastChange < tol) {
      state.converged = true;
      state.lastChange = next.lastChange;
      return state;
    }
    state = std::move(next);
  }
  return state;
}

namespace detail {

// Multiplicative jitter on p(t|x). Clusters that coincided at a lower beta
// are exact symmetric fixed points and would never separate otherwise.
inline void perturb_assignment(Matrix& q, std::uint64_t seed, std::uint64_t stage, double scale) {
  auto gen = derive_generator(seed, stage);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t x = 0; x < q.cols(); ++x) {
    double sum = 0.0;
    for (std::size_t t = 0; t < q.rows(); ++t) {
      q(t, x) *= 1.0 + scale * u(gen);
      sum += q(t, x);
    }
    for (std::size_t t = 0; t < q.rows(); ++t) q(t, x) /= sum;
  }
}

}  // namespace detail

// Runs the configured beta stages (or the single target beta) from a start.
// Each annealing stage after the first starts from the previous stage's
// assignment, lightly perturbed.
inline IBSolution ib_run(const JointDistribution& joint, IBSolution state, const SolverConfig& config) {
  std::vector<double> betas =
      config.annealing ? config.annealing->betas(config.beta) : std::vector<double>{config.beta};
  for (std::size_t stage = 0; stage < betas.size(); ++stage) {
    const double b = betas[stage];
    if (state.beta != b) {
      state.beta = b;
      if (stage > 0) detail::perturb_assignment(state.assignment, state.seed, stage, 0.05);
      detail::refresh_derived(joint, state);
      state.trace.push_back({b, state.functionalValue});
    }
    state = ib_converge(joint, std::move(state), config.convergenceTol, config.maxIterations);
  }
  return state;
}

namespace detail {

// Winner order: converged first, then lowest functional, then lowest index.
inline bool better_solution(const IBSolution& a, std::size_t ia, const IBSolution& b, std::size_t ib) {
  if (a.converged != b.converged) return a.converged;
  if (a.functionalValue != b.functionalValue) return a.functionalValue < b.functionalValue;
  return ia < ib;
}

}  // namespace detail

// Best of config.restarts seeded starts. An optional warm-start assignment is
// run as one extra restart with the highest index.
inline IBSolution ib_solve(const JointDistribution& joint, std::size_t t, const SolverConfig& config,
                           const std::optional<Matrix>& warmStart = std::nullopt) {
  config.validate();
  const std::size_t nx = joint.item_count();
  if (t < 1 || t > nx) {
    fail(ErrorCode::InvalidClusterCount,
         "cluster count " + std::to_string(t) + " outside 1.." + std::to_string(nx));
  }
  const double startBeta = config.annealing ? config.annealing->betas(config.beta).front() : config.beta;
  const std::size_t total = config.restarts + (warmStart ? 1 : 0);
  std::vector<std::optional<IBSolution>> results(total);

  auto runOne = [&](std::size_t r) {
    IBSolution init;
    if (r < config.restarts) {
      std::uint64_t seed = splitmix64(config.seed ^ splitmix64(r + 1));
      init = ib_initialize(joint, t, seed, startBeta);
    } else {
      if (warmStart->rows() != t) fail(ErrorCode::DimensionError, "warm start has wrong cluster count");
      init = make_solution(joint, *warmStart, startBeta, config.seed);
    }
    results[r] = ib_run(joint, std::move(init), config);
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(config.threads, total));
  if (workers == 1) {
    for (std::size_t r = 0; r < total; ++r) runOne(r);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t r = w; r < total; r += workers) runOne(r);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::size_t best = 0;
  for (std::size_t r = 1; r < total; ++r)
    if (detail::better_solution(*results[r], r, *results[best], best)) best = r;
  return std::move(*results[best]);
}

// Largest absolute entry change one further sweep would make.
inline double fixed_point_residual(const JointDistribution& joint, const IBSolution& state) {
  IBSolution next = ib_iterate(joint, state);
  double r = 0.0;
  for (std::size_t k = 0; k < next.assignment.data().size(); ++k)
    r = std::max(r, std::abs(next.assignment.data()[k] - state.assignment.data()[k]));
  for (std::size_t t = 0; t < next.clusterPrior.size(); ++t)
    r = std::max(r, std::abs(next.clusterPrior[t] - state.clusterPrior[t]));
  for (std::size_t k = 0; k < next.relevance.data().size(); ++k)
    r = std::max(r, std::abs(next.relevance.data()[k] - state.relevance.data()[k]));
  return r;
}

struct HardenResult {
  Partition partition;
  std::size_t effectiveClusters = 0;
};

// argmax_t p(t|x), ties to the lowest cluster index, canonical relabeling.
inline HardenResult harden(const IBSolution& state, const std::vector<std::string>& itemIds) {
  const std::size_t nx = state.assignment.cols();
  if (itemIds.size() != nx) fail(ErrorCode::DimensionError, "item id count differs from |X|");
  std::vector<std::size_t> labels(nx, 0);
  for (std::size_t x = 0; x < nx; ++x) {
    std::size_t arg = 0;
    for (std::size_t t = 1; t < state.clusterCount; ++t)
      if (state.assignment(t, x) > state.assignment(arg, x)) arg = t;
    labels[x] = arg;
  }
  HardenResult out{Partition::from_labels(itemIds, labels), 0};
  out.effectiveClusters = out.partition.cluster_count();
  return out;
}

inline HardenResult harden(const IBSolution& state, const JointDistribution& joint) {
  return harden(state, joint.item_ids());
}

// One-hot p(t|x) for a hard partition (rows = clusters).
inline Matrix hard_assignment(const Partition& p) {
  Matrix q(p.cluster_count(), p.item_count());
  for (std::size_t x = 0; x < p.item_count(); ++x) q(p.cluster_of(x), x) = 1.0;
  return q;
}

inline InformationTerms partition_information(const JointDistribution& joint, const Partition& p) {
  if (p.item_ids() != joint.item_ids()) {
    return information_terms(joint, hard_assignment(p.reindexed(joint.item_ids())));
  }
  return information_terms(joint, hard_assignment(p));
}

constexpr std::size_t kEnumerationBound = 12;

struct OracleResult {
  Partition partition;
  double infoTY = 0.0;
};

// Exhaustive search over every hard partition into exactly t clusters
// (restricted-growth strings), maximizing I(T;Y). First maximum wins.
inline OracleResult exhaustive_oracle(const JointDistribution& joint, std::size_t t) {
  const std::size_t nx = joint.item_count();
  const std::size_t ny = joint.category_count();
  if (nx > kEnumerationBound) {
    fail(ErrorCode::EnumerationBound,
         "exhaustive search limited to " + std::to_string(kEnumerationBound) + " items");
  }
  if (t < 1 || t > nx) fail(ErrorCode::InvalidClusterCount, "cluster count out of range");
  const auto& px = joint.marginal_x();
  const auto& py = joint.marginal_y();

  std::vector<std::size_t> labels(nx, 0);
  std::vector<std::size_t> bestLabels;
  double bestInfo = -1.0;
  Matrix pty(t, ny);
  std::vector<double> pt(t);

  auto evaluate = [&]() {
    std::fill(pty.data().begin(), pty.data().end(), 0.0);
    std::fill(pt.begin(), pt.end(), 0.0);
    for (std::size_t x = 0; x < nx; ++x) {
      pt[labels[x]] += px[x];
      for (std::size_t y = 0; y < ny; ++y) pty(labels[x], y) += joint(x, y);
    }
    double info = mutual_information(pty, pt, py);
    if (info > bestInfo) {
      bestInfo = info;
      bestLabels = labels;
    }
  };

  // Depth-first enumeration of restricted-growth strings using exactly t labels.
  auto recurse = [&](auto&& self, std::size_t pos, std::size_t used) -> void {
    if (pos == nx) {
      if (used == t) evaluate();
      return;
    }
    if (used + (nx - pos) < t) return;
    for (std::size_t c = 0; c <= std::min(used, t - 1); ++c) {
      labels[pos] = c;
      self(self, pos + 1, std::max(used, c + 1));
    }
  };
  labels[0] = 0;
  recurse(recurse, 1, 1);
  return {Partition::from_labels(joint.item_ids(), bestLabels), bestInfo};
}

}  // namespace ibscale
