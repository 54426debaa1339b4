#pragma once

#include <cmath>
#include <cstddef>

namespace abjm::detail {

// Neumaier compensated accumulator. Quadratures and functional values feed
// finite-difference checks at 1e-6 relative accuracy, which a plain
// left-to-right sum over ~1e5 terms does not reliably support.
class NeumaierSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_total(const double* x, std::size_t n) {
  NeumaierSum s;
  for (std::size_t i = 0; i < n; ++i) s.add(x[i]);
  return s.value();
}

}  // namespace abjm::detail
