#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tllctl {

using Vec = std::vector<double>;

/* Error taxonomy shared by all modules.  Validation failures (bad config,
 * bad arguments) are invalid_argument; everything that can only be detected
 * at run time derives from runtime_error. */
struct NonFiniteError : std::runtime_error {
  explicit NonFiniteError(const std::string& what) : std::runtime_error(what) {}
};
struct OverflowError : std::runtime_error {
  explicit OverflowError(const std::string& what) : std::runtime_error(what) {}
};
struct DivergedError : std::runtime_error {
  explicit DivergedError(const std::string& what) : std::runtime_error(what) {}
};
struct InconsistentError : std::runtime_error {
  explicit InconsistentError(const std::string& what) : std::runtime_error(what) {}
};
struct OutOfDomainError : std::invalid_argument {
  explicit OutOfDomainError(const std::string& what) : std::invalid_argument(what) {}
};
struct InvalidPitchError : std::invalid_argument {
  explicit InvalidPitchError(const std::string& what) : std::invalid_argument(what) {}
};
struct UnsupportedDimensionError : std::invalid_argument {
  explicit UnsupportedDimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/** Axis-aligned compact box in R^n (sup-norm geometry throughout). */
struct DomainBox {
  Vec lower;
  Vec upper;

  DomainBox() = default;
  DomainBox(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) { validate(); }

  int dim() const { return static_cast<int>(lower.size()); }

  double width(int k) const { return upper[k] - lower[k]; }

  // largest per-axis width
  double extent() const {
    double e = 0.0;
    for (int k = 0; k < dim(); ++k) e = std::max(e, width(k));
    return e;
  }

  bool contains(const Vec& x, double tol = 0.0) const {
    if (static_cast<int>(x.size()) != dim()) return false;
    for (int k = 0; k < dim(); ++k)
      if (x[k] < lower[k] - tol || x[k] > upper[k] + tol) return false;
    return true;
  }

  Vec clamp(Vec x) const {
    for (int k = 0; k < dim(); ++k) x[k] = std::clamp(x[k], lower[k], upper[k]);
    return x;
  }

  // sup-norm distance from x to the boundary (positive inside)
  double boundary_distance(const Vec& x) const {
    double d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < dim(); ++k) d = std::min({d, x[k] - lower[k], upper[k] - x[k]});
    return d;
  }

  void validate() const {
    if (lower.empty() || lower.size() != upper.size())
      throw std::invalid_argument("DomainBox: dimension mismatch or empty box");
    for (std::size_t k = 0; k < lower.size(); ++k) {
      if (!(lower[k] < upper[k]))
        throw std::invalid_argument("DomainBox: lower must be strictly below upper on every axis");
      if (!std::isfinite(lower[k]) || !std::isfinite(upper[k]))
        throw std::invalid_argument("DomainBox: bounds must be finite");
    }
  }
};

inline double sup_norm(const Vec& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

inline double sup_dist(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

/** Seeded low-discrepancy point source (Halton with Cranley-Patterson shift).
 *  Deterministic for a fixed (dim, seed) pair. */
class HaltonSampler {
 public:
  HaltonSampler(int dim, std::uint64_t seed) : dim_(dim), shift_(dim) {
    static constexpr int primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                     31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
    if (dim < 1 || dim > 20) throw std::invalid_argument("HaltonSampler: dim out of range");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < dim; ++k) {
      base_.push_back(primes[k]);
      shift_[k] = unit(rng);
    }
  }

  // i-th point of the unit cube, i >= 0
  Vec unit_point(std::uint64_t i) const {
    Vec x(dim_);
    for (int k = 0; k < dim_; ++k) {
      double v = radical_inverse(i + 1, base_[k]) + shift_[k];
      x[k] = v - std::floor(v);
    }
    return x;
  }

  Vec box_point(std::uint64_t i, const DomainBox& box) const {
    Vec x = unit_point(i);
    for (int k = 0; k < dim_; ++k) x[k] = box.lower[k] + x[k] * box.width(k);
    return x;
  }

 private:
  static double radical_inverse(std::uint64_t i, int base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (i > 0) {
      r += f * static_cast<double>(i % base);
      i /= base;
      f *= inv;
    }
    return r;
  }

  int dim_;
  std::vector<int> base_;
  Vec shift_;
};

/** Chunked parallel max-reduction over [0, count).  The merge (max) is
 *  associative and commutative, so the result does not depend on the number
 *  of workers. */
inline double parallel_max(std::int64_t count, const std::function<double(std::int64_t)>& f,
                           int workers = 0) {
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, 64);
  if (count < 1024 || workers == 1) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < count; ++i) m = std::max(m, f(i));
    return m;
  }
  std::vector<double> partial(workers, -std::numeric_limits<double>::infinity());
  std::vector<std::thread> pool;
  const std::int64_t chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      const std::int64_t lo = w * chunk, hi = std::min<std::int64_t>(count, (w + 1) * chunk);
      double m = -std::numeric_limits<double>::infinity();
      for (std::int64_t i = lo; i < hi; ++i) m = std::max(m, f(i));
      partial[w] = m;
    });
  }
  for (auto& t : pool) t.join();
  double m = -std::numeric_limits<double>::infinity();
  for (double v : partial) m = std::max(m, v);
  return m;
}

}  // namespace tllctl
