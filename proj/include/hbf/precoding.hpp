#ifndef HBF_PRECODING_HPP
#define HBF_PRECODING_HPP

#include "hbf/channel.hpp"
#include "hbf/numerics.hpp"

#include <json.hpp>

namespace hbf {

/// Effective channel H*F_RF is too ill-conditioned for zero forcing. The
/// caller treats this as a zero-reward step or redraws the channel.
struct DegenerateGeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Wraps an angle into (-pi, pi].
double wrap_phase(double x);

/// Constant-modulus analog precoder, stored canonically as its N_t x N_RF
/// phase matrix. matrix() materializes exp(j*phase) entries, which have unit
/// modulus by construction.
class AnalogPrecoder {
 public:
  explicit AnalogPrecoder(RMatrix phases);

  /// Inverse of phase_vector(): column-major reshape of a length N_t*N_RF
  /// phase vector.
  static AnalogPrecoder from_phase_vector(const RVector& v, int n_tx, int n_rf);

  const RMatrix& phases() const { return phases_; }
  RVector phase_vector() const;
  CMatrix matrix() const;
  int n_tx() const { return static_cast<int>(phases_.rows()); }
  int n_rf() const { return static_cast<int>(phases_.cols()); }

 private:
  RMatrix phases_;
};

/// Water-filling result. powers(k) = max(mu/effective_gains(k) - noise, 0),
/// and sum_k effective_gains(k)*powers(k) equals the budget whenever any
/// user is active.
struct PowerAllocation {
  RVector powers;
  RVector effective_gains;
  RVector noise_powers;
  double mu = 0.0;
};

struct HybridSolution {
  AnalogPrecoder analog;
  CMatrix digital;          // N_RF x K, power included
  PowerAllocation power;
  double sum_rate = 0.0;
  bool degenerate = false;  // zero-forcing failed; all-zero digital precoder
};

/// Unpowered zero-forcing digital precoder
///   F~ = F_RF^H H^H (H F_RF (H F_RF)^H)^{-1},
/// which satisfies H * F_RF * F~ = I_K. Throws DegenerateGeometryError when
/// the effective channel is rank deficient.
CMatrix zf_digital(const ChannelMatrix& h, const AnalogPrecoder& f_rf);

/// Maximizes sum_k log2(1 + p_k/noise_k) subject to
/// sum_k gains_k * p_k <= p_total, p_k >= 0. Closed form over the sorted
/// active set; exact KKT solution.
PowerAllocation water_filling(const RVector& effective_gains, const RVector& noise_powers,
                              double p_total);

/// F_D = F~ * diag(p)^{1/2}.
CMatrix assemble_digital(const CMatrix& f_tilde, const PowerAllocation& power);

/// Diagonal of F~^H F_RF^H F_RF F~ (real and nonnegative): per-user transmit
/// power cost of one unit of received power.
RVector effective_gains(const CMatrix& f_tilde, const AnalogPrecoder& f_rf);

/// Sum rate of a zero-forced allocation: sum_k log2(1 + p_k/noise_k).
/// p_squared selects the log2(1 + p_k^2/noise_k) variant kept for A/B
/// comparison.
double zf_sum_rate(const PowerAllocation& power, bool p_squared = false);

/// Full SINR sum rate, interference included:
/// sum_k log2(1 + |h_k^H F_RF f_k|^2 / (noise_k + sum_{l!=k} |h_k^H F_RF f_l|^2)).
double general_sum_rate(const ChannelMatrix& h, const AnalogPrecoder& f_rf, const CMatrix& f_d,
                        const RVector& noise_powers);

/// Rate of the unconstrained pseudo-inverse precoder H^H (H H^H)^{-1} with
/// water-filling, an upper bound on any hybrid minimum-norm ZF solution.
double full_digital_zf_rate(const ChannelMatrix& h, const RVector& noise_powers, double p_total);

/// Uniform random phases followed by the ZF + water-filling chain. Control
/// baseline for learning-improvement checks.
HybridSolution random_phase_baseline(const ChannelMatrix& h, int n_rf, const RVector& noise_powers,
                                     double p_total, Rng& rng);

nlohmann::json solution_to_json(const HybridSolution& s);

}  // namespace hbf

#endif
