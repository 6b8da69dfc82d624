#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "orthovar/seeding.hpp"

namespace orthovar::clustering {

struct KMeansOptions {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  /// Stop once the relative inertia improvement drops below this.
  double tol = 1e-6;
  std::size_t max_iter = 300;
  /// Independent k-means++ starts; the lowest final inertia wins.
  std::size_t restarts = 5;
};

template <typename Scalar>
struct ClusteringResult {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<int> assignments;
  Matrix centroids;  // k x D
  double inertia = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// Inertia after initialization and after every Lloyd iteration of the
  /// winning restart.
  std::vector<double> inertia_trace;
};

/// Raised when a Lloyd iteration increases the objective.
class InertiaIncrease : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Derived>
std::vector<Eigen::Index> kmeanspp_seeds(const Eigen::MatrixBase<Derived>& x, std::size_t k, Rng& rng) {
  const Eigen::Index n = x.rows();
  std::vector<Eigen::Index> chosen;
  chosen.reserve(k);
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  Eigen::VectorXd mindist = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());

  auto take = [&](Eigen::Index idx) {
    chosen.push_back(idx);
    taken[static_cast<std::size_t>(idx)] = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = (x.row(i) - x.row(idx)).template cast<double>().squaredNorm();
      if (d < mindist(i)) mindist(i) = d;
    }
  };

  take(static_cast<Eigen::Index>(draw_index(rng, static_cast<std::size_t>(n))));
  while (chosen.size() < k) {
    const double total = mindist.sum();
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double target = draw_unit(rng) * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += mindist(i);
        if (mindist(i) > 0.0 && acc > target) {
          pick = i;
          break;
        }
      }
      if (pick < 0) {
        for (Eigen::Index i = n - 1; i >= 0; --i) {
          if (mindist(i) > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Every remaining point duplicates a chosen one.
      std::vector<Eigen::Index> free;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!taken[static_cast<std::size_t>(i)]) free.push_back(i);
      }
      pick = free[draw_index(rng, free.size())];
    }
    take(pick);
  }
  return chosen;
}

template <typename Derived>
void assign(const Eigen::MatrixBase<Derived>& x, const Matrix<typename Derived::Scalar>& centroids,
            const Eigen::VectorXd& point_norms, std::vector<int>& labels) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = centroids.rows();
  Eigen::MatrixXd cross = x.template cast<double>() * centroids.template cast<double>().transpose();
  Eigen::VectorXd cnorm = centroids.template cast<double>().rowwise().squaredNorm();
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < k; ++j) {
      const double d = point_norms(i) - 2.0 * cross(i, j) + cnorm(j);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(j);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
  }
}

// Gives every empty cluster the point farthest from its current centroid,
// taken from a cluster that can spare it.
template <typename Derived>
void repair_empty(const Eigen::MatrixBase<Derived>& x, Matrix<typename Derived::Scalar>& centroids,
                  std::vector<int>& labels) {
  const Eigen::Index k = centroids.rows();
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  for (Eigen::Index j = 0; j < k; ++j) {
    if (sizes[static_cast<std::size_t>(j)] > 0) continue;
    Eigen::Index far = -1;
    double far_d = -1.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const auto l = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
      if (sizes[l] < 2) continue;
      const double d = (x.row(i) - centroids.row(static_cast<Eigen::Index>(l))).template cast<double>().squaredNorm();
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    --sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
    labels[static_cast<std::size_t>(far)] = static_cast<int>(j);
    sizes[static_cast<std::size_t>(j)] = 1;
    centroids.row(j) = x.row(far);
  }
}

template <typename Derived>
void update_centroids(const Eigen::MatrixBase<Derived>& x, const std::vector<int>& labels,
                      Matrix<typename Derived::Scalar>& centroids) {
  using Scalar = typename Derived::Scalar;
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(centroids.rows(), x.cols());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(centroids.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto l = labels[static_cast<std::size_t>(i)];
    sums.row(l) += x.row(i).template cast<double>();
    counts(l) += 1.0;
  }
  for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
    if (counts(j) > 0) centroids.row(j) = (sums.row(j) / counts(j)).template cast<Scalar>();
  }
}

template <typename Derived>
double inertia_of(const Eigen::MatrixBase<Derived>& x, const Matrix<typename Derived::Scalar>& centroids,
                  const std::vector<int>& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    total += (x.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).template cast<double>().squaredNorm();
  }
  return total;
}

template <typename Derived>
ClusteringResult<typename Derived::Scalar> lloyd(const Eigen::MatrixBase<Derived>& x,
                                                 const KMeansOptions& opt, std::uint64_t stream_seed) {
  using Scalar = typename Derived::Scalar;
  Rng rng(stream_seed);
  ClusteringResult<Scalar> r;
  r.k = opt.k;
  r.seed = opt.seed;

  const auto seeds = kmeanspp_seeds(x, opt.k, rng);
  r.centroids.resize(static_cast<Eigen::Index>(opt.k), x.cols());
  for (std::size_t j = 0; j < seeds.size(); ++j) r.centroids.row(static_cast<Eigen::Index>(j)) = x.row(seeds[j]);

  const Eigen::VectorXd norms = x.template cast<double>().rowwise().squaredNorm();
  r.assignments.assign(static_cast<std::size_t>(x.rows()), 0);
  assign(x, r.centroids, norms, r.assignments);
  repair_empty(x, r.centroids, r.assignments);
  update_centroids(x, r.assignments, r.centroids);
  r.inertia = inertia_of(x, r.centroids, r.assignments);
  r.inertia_trace.push_back(r.inertia);

  std::vector<int> next(r.assignments.size());
  for (std::size_t it = 0; it < opt.max_iter; ++it) {
    if (r.inertia == 0.0) {
      r.converged = true;
      break;
    }
    assign(x, r.centroids, norms, next);
    repair_empty(x, r.centroids, next);
    const bool unchanged = next == r.assignments;
    r.assignments.swap(next);
    update_centroids(x, r.assignments, r.centroids);
    const double prev = r.inertia;
    r.inertia = inertia_of(x, r.centroids, r.assignments);
    r.inertia_trace.push_back(r.inertia);
    ++r.iterations;
    if (r.inertia > prev * (1.0 + 1e-9) + 1e-300) {
      throw InertiaIncrease("k-means inertia increased from " + std::to_string(prev) + " to " +
                            std::to_string(r.inertia));
    }
    if (unchanged || (prev - r.inertia) / prev < opt.tol) {
      r.converged = true;
      break;
    }
  }
  return r;
}

}  // namespace detail

/// Lloyd's algorithm from k-means++ starts. Rows of `points` are observations.
template <typename Derived>
ClusteringResult<typename Derived::Scalar> kmeans(const Eigen::MatrixBase<Derived>& points,
                                                  const KMeansOptions& options) {
  if (points.rows() == 0) throw std::invalid_argument("k-means needs at least one point");
  if (options.k < 1 || options.k > static_cast<std::size_t>(points.rows())) {
    throw std::invalid_argument("k must lie in [1, " + std::to_string(points.rows()) + "], got " +
                                std::to_string(options.k));
  }
  const std::size_t restarts = options.restarts == 0 ? 1 : options.restarts;
  ClusteringResult<typename Derived::Scalar> best;
  for (std::size_t r = 0; r < restarts; ++r) {
    auto candidate = detail::lloyd(points, options, derive_seed(options.seed, r));
    if (r == 0 || candidate.inertia < best.inertia) best = std::move(candidate);
  }
  return best;
}

/// Seed used for a given k inside a sweep.
inline std::uint64_t sweep_seed(std::uint64_t master, std::size_t k) {
  return derive_seed(master, static_cast<std::uint64_t>(k) + 0x6b6d65616e73ULL);
}

/// One clustering per k in [k_min, k_max], spread over a bounded thread pool. Each k gets its
/// own derived seed, so results do not depend on scheduling.
template <typename Derived>
std::vector<ClusteringResult<typename Derived::Scalar>> kmeans_sweep(
    const Eigen::MatrixBase<Derived>& points, std::size_t k_min, std::size_t k_max,
    const KMeansOptions& base) {
  using Scalar = typename Derived::Scalar;
  if (k_min < 1 || k_min > k_max || k_max > static_cast<std::size_t>(points.rows())) {
    throw std::invalid_argument("k range [" + std::to_string(k_min) + ", " + std::to_string(k_max) +
                                "] outside [1, " + std::to_string(points.rows()) + "]");
  }
  const detail::Matrix<Scalar> x = points;
  const std::size_t count = k_max - k_min + 1;
  std::vector<std::optional<ClusteringResult<Scalar>>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      KMeansOptions opt = base;
      opt.k = k_min + i;
      opt.seed = sweep_seed(base.seed, opt.k);
      try {
        slots[i] = kmeans(x, opt);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  std::vector<ClusteringResult<Scalar>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

/// Scales each row to unit length (zero rows stay zero).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> normalize_rows(
    const Eigen::MatrixBase<Derived>& points) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> out = points;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const auto n = out.row(i).norm();
    if (n > 0) out.row(i) /= n;
  }
  return out;
}

}  // namespace orthovar::clustering
