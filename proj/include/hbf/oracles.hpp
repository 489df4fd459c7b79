#ifndef HBF_ORACLES_HPP
#define HBF_ORACLES_HPP

#include <functional>
#include <iosfwd>
#include <vector>

#include "hbf/neural.hpp"
#include "hbf/numerics.hpp"
#include "hbf/precoding.hpp"

namespace hbf::oracles {

// Independent reference implementations used to cross-check the library.
// Everything here is deliberately written the slow, obvious way and shares
// no code path with what it verifies.

/// Entrywise triple-loop complex matrix product.
CMatrix naive_matmul(const CMatrix& a, const CMatrix& b);

/// Frobenius norm of a - b via an explicit elementwise sum.
double naive_frob_diff(const CMatrix& a, const CMatrix& b);

/// Water level found by bisection on the monotone budget function
/// sum_k gains_k * max(mu/gains_k - noise_k, 0); returns the powers.
RVector waterfill_bisection(const RVector& gains, const RVector& noise, double p_total);

/// Random feasible allocation: nonnegative powers exhausting the weighted
/// budget exactly.
RVector random_feasible_allocation(const RVector& gains, double p_total, Rng& rng);

/// Direct scalar-loop SINR sum rate, no matrix products.
double sinr_sum_rate_loop(const CMatrix& h, const CMatrix& f_rf, const CMatrix& f_d,
                          const RVector& noise);

/// Central finite differences of a scalar loss over every parameter.
GradientSet finite_difference_gradients(const MlpParams& params,
                                        const std::function<double(const MlpParams&)>& loss,
                                        double step = 1e-6);

/// Largest relative mismatch between two gradient sets, ignoring entries
/// where both are below `floor`.
double max_relative_gradient_error(const GradientSet& a, const GradientSet& b,
                                   double floor = 1e-8);

/// Flat-array mirror of the prioritized ring buffer: same FIFO overwrite
/// rule, sum computed by direct accumulation.
class FlatReplayMirror {
 public:
  explicit FlatReplayMirror(int capacity) : capacity_(capacity) {}
  void push(double priority);
  void update(int slot, double priority);
  double sum() const;
  int size() const { return static_cast<int>(priorities_.size()); }

 private:
  int capacity_;
  int cursor_ = 0;
  std::vector<double> priorities_;
};

/// Upper regularized incomplete gamma Q(a, x).
double gammq(double a, double x);

/// Goodness-of-fit p-value for observed counts against expected
/// probabilities (dof = bins - 1).
double chi_square_p_value(const std::vector<long long>& observed,
                          const std::vector<double>& expected_probs);

/// Runs every oracle suite at desk scale, printing one pass/fail line per
/// suite. Returns true when all pass.
bool run_all(std::ostream& out, std::uint64_t seed = 12345);

}  // namespace hbf::oracles

#endif
