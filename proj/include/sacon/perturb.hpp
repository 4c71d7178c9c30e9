#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace sacon {

class PerturbationExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * Walks the nonnegative integer grid in ascending graded-lex order with
 * x1 heaviest: (0,0), (0,1), (1,0), (0,2), (1,1), (2,0), ... for n = 2.
 * Every point of coordinate sum d is visited before any point of sum d+1.
 */
class GridCursor {
 public:
  explicit GridCursor(std::size_t n, std::size_t step_limit = 10000)
      : current_(n, 0), step_limit_(step_limit) {
    if (n == 0) throw std::invalid_argument("grid dimension must be positive");
  }

  const std::vector<std::int64_t>& current() const { return current_; }
  std::size_t steps_taken() const { return steps_; }
  std::size_t step_limit() const { return step_limit_; }
  std::size_t n() const { return current_.size(); }

  /// Advances to the graded-lex successor and returns it.
  const std::vector<std::int64_t>& next() {
    if (steps_ >= step_limit_)
      throw PerturbationExhausted("perturbation step limit of " + std::to_string(step_limit_) +
                                  " reached without a nondegenerate center");
    current_ = successor(current_);
    ++steps_;
    return current_;
  }

  static std::vector<std::int64_t> successor(std::vector<std::int64_t> a) {
    const std::size_t n = a.size();
    std::int64_t tail = 0;  // sum of a[i+1..]
    for (std::size_t i = n - 1; i-- > 0;) {
      tail += a[i + 1];
      if (tail > 0) {
        a[i] += 1;
        for (std::size_t j = i + 1; j < n; ++j) a[j] = 0;
        a[n - 1] = tail - 1;
        return a;
      }
    }
    // all mass sits in x1: open the next grade at (0, ..., 0, d + 1)
    const std::int64_t d = std::accumulate(a.begin(), a.end(), std::int64_t{0});
    std::fill(a.begin(), a.end(), 0);
    a[n - 1] = d + 1;
    return a;
  }

 private:
  std::vector<std::int64_t> current_;
  std::size_t steps_ = 0;
  std::size_t step_limit_;
};

/// Cursor at the origin.
inline GridCursor start(std::size_t n, std::size_t step_limit = 10000) { return GridCursor(n, step_limit); }

}  // namespace sacon
