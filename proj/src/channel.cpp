#include "hbf/channel.hpp"

#include <cmath>
#include <numbers>

namespace hbf {

namespace {

double laplace(Rng& rng, double scale) {
  double u = rng.uniform() - 0.5;
  double one_minus = 1.0 - 2.0 * std::abs(u);
  if (one_minus <= 0.0) one_minus = std::numeric_limits<double>::min();
  double mag = -scale * std::log(one_minus);
  return u < 0.0 ? -mag : mag;
}

}  // namespace

void ChannelConfig::validate() const {
  if (n_tx < 1 || n_users < 1 || n_clusters < 1 || n_rays < 1)
    throw ContractViolation("ChannelConfig: counts must be at least 1");
  if (spacing_ratio <= 0.0) throw ContractViolation("ChannelConfig: spacing_ratio must be > 0");
  if (angle_spread < 0.0) throw ContractViolation("ChannelConfig: angle_spread must be >= 0");
  if (!cluster_powers.empty()) {
    if (static_cast<int>(cluster_powers.size()) != n_clusters)
      throw ContractViolation("ChannelConfig: cluster_powers length != n_clusters");
    bool any_positive = false;
    for (double p : cluster_powers) {
      if (p < 0.0) throw ContractViolation("ChannelConfig: negative cluster power");
      if (p > 0.0) any_positive = true;
    }
    if (!any_positive) throw ContractViolation("ChannelConfig: all cluster powers zero");
  }
}

std::vector<double> ChannelConfig::resolved_cluster_powers() const {
  if (!cluster_powers.empty()) return cluster_powers;
  return std::vector<double>(static_cast<std::size_t>(n_clusters), 1.0);
}

CVector steering_vector(double phi, int n_tx, double spacing_ratio, SteeringNorm norm) {
  if (n_tx < 1) throw ContractViolation("steering_vector: n_tx must be >= 1");
  double c = norm == SteeringNorm::as_written ? 1.0 / n_tx : 1.0 / std::sqrt(double(n_tx));
  double step = 2.0 * std::numbers::pi * spacing_ratio * std::sin(phi);
  CVector g(n_tx);
  for (int m = 0; m < n_tx; ++m) g(m) = std::polar(c, m * step);
  return g;
}

ChannelMatrix generate_channel(const ChannelConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto powers = cfg.resolved_cluster_powers();
  const double scale = std::sqrt(double(cfg.n_tx) / (double(cfg.n_clusters) * cfg.n_rays));

  CMatrix h(cfg.n_users, cfg.n_tx);
  for (int k = 0; k < cfg.n_users; ++k) {
    CVector hk = CVector::Zero(cfg.n_tx);
    for (int i = 0; i < cfg.n_clusters; ++i) {
      double center = rng.uniform(-std::numbers::pi / 2.0, std::numbers::pi / 2.0);
      for (int j = 0; j < cfg.n_rays; ++j) {
        double phi = center + laplace(rng, cfg.angle_spread);
        Complex alpha = rng.cnormal(powers[static_cast<std::size_t>(i)]);
        hk += alpha * steering_vector(phi, cfg.n_tx, cfg.spacing_ratio, cfg.steering_norm);
      }
    }
    h.row(k) = (scale * hk).adjoint();
  }
  return ChannelMatrix{std::move(h)};
}

nlohmann::json channels_to_json(const std::vector<ChannelMatrix>& realizations) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& ch : realizations) {
    nlohmann::json re = nlohmann::json::array();
    nlohmann::json im = nlohmann::json::array();
    for (Eigen::Index r = 0; r < ch.h.rows(); ++r) {
      nlohmann::json re_row = nlohmann::json::array();
      nlohmann::json im_row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < ch.h.cols(); ++c) {
        re_row.push_back(ch.h(r, c).real());
        im_row.push_back(ch.h(r, c).imag());
      }
      re.push_back(std::move(re_row));
      im.push_back(std::move(im_row));
    }
    arr.push_back(nlohmann::json{{"re", std::move(re)}, {"im", std::move(im)}});
  }
  return arr;
}

std::vector<ChannelMatrix> channels_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ContractViolation("channels_from_json: expected a JSON array");
  std::vector<ChannelMatrix> out;
  out.reserve(j.size());
  for (const auto& item : j) {
    const auto& re = item.at("re");
    const auto& im = item.at("im");
    if (re.size() != im.size()) throw ContractViolation("channels_from_json: re/im shape mismatch");
    const auto rows = static_cast<Eigen::Index>(re.size());
    if (rows == 0) throw ContractViolation("channels_from_json: empty matrix");
    const auto cols = static_cast<Eigen::Index>(re.at(0).size());
    CMatrix h(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto& re_row = re.at(static_cast<std::size_t>(r));
      const auto& im_row = im.at(static_cast<std::size_t>(r));
      if (static_cast<Eigen::Index>(re_row.size()) != cols ||
          static_cast<Eigen::Index>(im_row.size()) != cols)
        throw ContractViolation("channels_from_json: ragged rows");
      for (Eigen::Index c = 0; c < cols; ++c)
        h(r, c) = Complex(re_row.at(static_cast<std::size_t>(c)).get<double>(),
                          im_row.at(static_cast<std::size_t>(c)).get<double>());
    }
    out.push_back(ChannelMatrix{std::move(h)});
  }
  return out;
}

nlohmann::json channel_config_to_json(const ChannelConfig& cfg) {
  return nlohmann::json{{"n_tx", cfg.n_tx},
                        {"n_users", cfg.n_users},
                        {"n_clusters", cfg.n_clusters},
                        {"n_rays", cfg.n_rays},
                        {"spacing_ratio", cfg.spacing_ratio},
                        {"cluster_powers", cfg.cluster_powers},
                        {"angle_spread", cfg.angle_spread},
                        {"steering_norm", to_string(cfg.steering_norm)}};
}

ChannelConfig channel_config_from_json(const nlohmann::json& j) {
  ChannelConfig cfg;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("n_tx", cfg.n_tx);
  get("n_users", cfg.n_users);
  get("n_clusters", cfg.n_clusters);
  get("n_rays", cfg.n_rays);
  get("spacing_ratio", cfg.spacing_ratio);
  get("cluster_powers", cfg.cluster_powers);
  get("angle_spread", cfg.angle_spread);
  if (j.contains("steering_norm"))
    cfg.steering_norm = steering_norm_from_string(j.at("steering_norm").get<std::string>());
  return cfg;
}

SteeringNorm steering_norm_from_string(const std::string& s) {
  if (s == "as_written") return SteeringNorm::as_written;
  if (s == "unit_norm") return SteeringNorm::unit_norm;
  throw ContractViolation("unknown steering norm: " + s);
}

std::string to_string(SteeringNorm norm) {
  return norm == SteeringNorm::as_written ? "as_written" : "unit_norm";
}

}  // namespace hbf
