#include "hbf/precoding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace hbf {

double wrap_phase(double x) {
  double w = std::fmod(x + std::numbers::pi, 2.0 * std::numbers::pi);
  if (w <= 0.0) w += 2.0 * std::numbers::pi;
  return w - std::numbers::pi;
}

AnalogPrecoder::AnalogPrecoder(RMatrix phases) : phases_(std::move(phases)) {
  if (phases_.size() == 0) throw ContractViolation("AnalogPrecoder: empty phase matrix");
  if (!phases_.allFinite()) throw ContractViolation("AnalogPrecoder: non-finite phases");
  phases_ = phases_.unaryExpr([](double p) { return wrap_phase(p); });
}

AnalogPrecoder AnalogPrecoder::from_phase_vector(const RVector& v, int n_tx, int n_rf) {
  if (v.size() != Eigen::Index(n_tx) * n_rf)
    throw ContractViolation("AnalogPrecoder: phase vector length != n_tx*n_rf");
  RMatrix phases = Eigen::Map<const RMatrix>(v.data(), n_tx, n_rf);
  return AnalogPrecoder(std::move(phases));
}

RVector AnalogPrecoder::phase_vector() const {
  return Eigen::Map<const RVector>(phases_.data(), phases_.size());
}

CMatrix AnalogPrecoder::matrix() const {
  return phases_.unaryExpr([](double p) { return std::polar(1.0, p); });
}

CMatrix zf_digital(const ChannelMatrix& h, const AnalogPrecoder& f_rf) {
  const int k = h.n_users();
  if (h.n_tx() != f_rf.n_tx()) throw ContractViolation("zf_digital: antenna count mismatch");
  if (k > f_rf.n_rf()) throw ContractViolation("zf_digital: more users than RF chains");

  CMatrix a = h.h * f_rf.matrix();          // K x N_RF effective channel
  CMatrix gram = a * a.adjoint();           // K x K, Hermitian PSD
  CMatrix f_tilde;
  try {
    f_tilde = solve_hermitian(gram, a).adjoint();  // A^H G^{-1}
  } catch (const SingularSystemError& e) {
    throw DegenerateGeometryError(std::string("zf_digital: ") + e.what());
  }
  double residual = (a * f_tilde - CMatrix::Identity(k, k)).norm();
  if (!(residual < 1e-8))
    throw DegenerateGeometryError("zf_digital: residual " + std::to_string(residual));
  return f_tilde;
}

PowerAllocation water_filling(const RVector& effective_gains, const RVector& noise_powers,
                              double p_total) {
  const auto k = effective_gains.size();
  if (noise_powers.size() != k) throw ContractViolation("water_filling: length mismatch");
  if (p_total <= 0.0) throw ContractViolation("water_filling: p_total must be > 0");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!(effective_gains(i) > 0.0)) throw ContractViolation("water_filling: gains must be > 0");
    if (!(noise_powers(i) > 0.0)) throw ContractViolation("water_filling: noise must be > 0");
  }

  // User i is active iff mu > gains_i * noise_i; the optimal active set is a
  // prefix once thresholds are sorted ascending.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto threshold = [&](Eigen::Index i) { return effective_gains(i) * noise_powers(i); };
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return threshold(a) < threshold(b); });

  double prefix = 0.0;
  double mu = 0.0;
  Eigen::Index active = 0;
  for (Eigen::Index m = 0; m < k; ++m) {
    prefix += threshold(order[static_cast<std::size_t>(m)]);
    double candidate = (p_total + prefix) / double(m + 1);
    if (candidate > threshold(order[static_cast<std::size_t>(m)])) {
      mu = candidate;
      active = m + 1;
    } else {
      break;
    }
  }

  PowerAllocation pa;
  pa.effective_gains = effective_gains;
  pa.noise_powers = noise_powers;
  pa.mu = mu;
  pa.powers = RVector::Zero(k);
  for (Eigen::Index m = 0; m < active; ++m) {
    Eigen::Index i = order[static_cast<std::size_t>(m)];
    pa.powers(i) = std::max(mu / effective_gains(i) - noise_powers(i), 0.0);
  }
  return pa;
}

CMatrix assemble_digital(const CMatrix& f_tilde, const PowerAllocation& power) {
  if (f_tilde.cols() != power.powers.size())
    throw ContractViolation("assemble_digital: column count != user count");
  CMatrix f_d = f_tilde;
  for (Eigen::Index c = 0; c < f_d.cols(); ++c) f_d.col(c) *= std::sqrt(power.powers(c));
  return f_d;
}

RVector effective_gains(const CMatrix& f_tilde, const AnalogPrecoder& f_rf) {
  if (f_tilde.rows() != f_rf.n_rf())
    throw ContractViolation("effective_gains: RF chain count mismatch");
  CMatrix b = f_rf.matrix() * f_tilde;  // N_t x K
  RVector y(f_tilde.cols());
  for (Eigen::Index c = 0; c < b.cols(); ++c) y(c) = b.col(c).squaredNorm();
  return y;
}

double zf_sum_rate(const PowerAllocation& power, bool p_squared) {
  double rate = 0.0;
  for (Eigen::Index i = 0; i < power.powers.size(); ++i) {
    double p = power.powers(i);
    double signal = p_squared ? p * p : p;
    rate += std::log2(1.0 + signal / power.noise_powers(i));
  }
  return rate;
}

double general_sum_rate(const ChannelMatrix& h, const AnalogPrecoder& f_rf, const CMatrix& f_d,
                        const RVector& noise_powers) {
  const int k = h.n_users();
  if (f_d.cols() != k || noise_powers.size() != k)
    throw ContractViolation("general_sum_rate: user count mismatch");
  CMatrix w = f_rf.matrix() * f_d;  // N_t x K composite beamformers
  if (h.n_tx() != w.rows()) throw ContractViolation("general_sum_rate: antenna count mismatch");
  double rate = 0.0;
  for (int user = 0; user < k; ++user) {
    double signal = 0.0;
    double interference = 0.0;
    for (int l = 0; l < k; ++l) {
      double p = std::norm((h.h.row(user) * w.col(l))(0, 0));
      if (l == user)
        signal = p;
      else
        interference += p;
    }
    rate += std::log2(1.0 + signal / (noise_powers(user) + interference));
  }
  return rate;
}

double full_digital_zf_rate(const ChannelMatrix& h, const RVector& noise_powers, double p_total) {
  const int k = h.n_users();
  if (noise_powers.size() != k) throw ContractViolation("full_digital_zf_rate: length mismatch");
  CMatrix gram = h.h * h.h.adjoint();
  CMatrix gram_inv;
  try {
    gram_inv = solve_hermitian(gram, CMatrix::Identity(k, k));
  } catch (const SingularSystemError& e) {
    throw DegenerateGeometryError(std::string("full_digital_zf_rate: ") + e.what());
  }
  // Pseudo-inverse column k costs ||H^H (HH^H)^{-1} e_k||^2 = ((HH^H)^{-1})_kk
  // per unit received power.
  RVector gains = gram_inv.diagonal().real();
  PowerAllocation pa = water_filling(gains, noise_powers, p_total);
  return zf_sum_rate(pa);
}

HybridSolution random_phase_baseline(const ChannelMatrix& h, int n_rf, const RVector& noise_powers,
                                     double p_total, Rng& rng) {
  RMatrix phases(h.n_tx(), n_rf);
  for (Eigen::Index r = 0; r < phases.rows(); ++r)
    for (Eigen::Index c = 0; c < phases.cols(); ++c)
      phases(r, c) = wrap_phase(rng.uniform(-std::numbers::pi, std::numbers::pi));
  AnalogPrecoder analog(std::move(phases));
  CMatrix f_tilde = zf_digital(h, analog);
  RVector gains = effective_gains(f_tilde, analog);
  PowerAllocation pa = water_filling(gains, noise_powers, p_total);
  CMatrix f_d = assemble_digital(f_tilde, pa);
  double rate = zf_sum_rate(pa);
  return HybridSolution{std::move(analog), std::move(f_d), std::move(pa), rate, false};
}

nlohmann::json solution_to_json(const HybridSolution& s) {
  nlohmann::json phases = nlohmann::json::array();
  for (Eigen::Index r = 0; r < s.analog.phases().rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < s.analog.phases().cols(); ++c)
      row.push_back(s.analog.phases()(r, c));
    phases.push_back(std::move(row));
  }
  nlohmann::json dig_re = nlohmann::json::array();
  nlohmann::json dig_im = nlohmann::json::array();
  for (Eigen::Index r = 0; r < s.digital.rows(); ++r) {
    nlohmann::json re_row = nlohmann::json::array();
    nlohmann::json im_row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < s.digital.cols(); ++c) {
      re_row.push_back(s.digital(r, c).real());
      im_row.push_back(s.digital(r, c).imag());
    }
    dig_re.push_back(std::move(re_row));
    dig_im.push_back(std::move(im_row));
  }
  return nlohmann::json{
      {"phases", std::move(phases)},
      {"digital", {{"re", std::move(dig_re)}, {"im", std::move(dig_im)}}},
      {"powers", std::vector<double>(s.power.powers.data(), s.power.powers.data() + s.power.powers.size())},
      {"effective_gains", std::vector<double>(s.power.effective_gains.data(),
                                              s.power.effective_gains.data() + s.power.effective_gains.size())},
      {"mu", s.power.mu},
      {"sum_rate", s.sum_rate},
      {"degenerate", s.degenerate}};
}

}  // namespace hbf
