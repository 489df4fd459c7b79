#ifndef HBF_CHANNEL_HPP
#define HBF_CHANNEL_HPP

#include <string>
#include <vector>

#include "hbf/numerics.hpp"

#include <json.hpp>

namespace hbf {

/// Prefactor of the array steering vector. as_written uses 1/N_t, unit_norm
/// uses 1/sqrt(N_t) so that the vector has unit Euclidean norm.
enum class SteeringNorm { as_written, unit_norm };

struct ChannelConfig {
  int n_tx = 64;
  int n_users = 8;
  int n_clusters = 10;
  int n_rays = 8;
  double spacing_ratio = 0.5;             // antenna spacing over wavelength
  std::vector<double> cluster_powers;     // empty means all ones
  double angle_spread = 10.0 * 3.14159265358979323846 / 180.0;  // Laplacian scale, radians
  SteeringNorm steering_norm = SteeringNorm::as_written;

  /// Throws ContractViolation on out-of-range fields.
  void validate() const;
  /// cluster_powers with the all-ones default applied.
  std::vector<double> resolved_cluster_powers() const;
};

/// K x N_t channel. Row k holds h_k^H, so h.row(k).adjoint() is user k's
/// channel vector.
struct ChannelMatrix {
  CMatrix h;

  int n_users() const { return static_cast<int>(h.rows()); }
  int n_tx() const { return static_cast<int>(h.cols()); }
  CVector user_channel(int k) const { return h.row(k).adjoint(); }
};

/// Uniform linear array response toward angle-of-departure phi.
/// Entry m is c * exp(j * m * 2*pi * spacing_ratio * sin(phi)).
CVector steering_vector(double phi, int n_tx, double spacing_ratio, SteeringNorm norm);

/// Clustered geometric channel: each user's vector is
/// sqrt(N_t/(N_cl*N_ray)) * sum_{clusters,rays} alpha * g(phi).
///
/// Draw order per user, fixed for reproducibility: for each cluster, one
/// uniform for the center angle on [-pi/2, pi/2]; then per ray one uniform
/// for the Laplacian angle offset followed by one complex Gaussian path gain.
ChannelMatrix generate_channel(const ChannelConfig& cfg, Rng& rng);

/// Realizations serialize as an array of {re, im} row-major matrices.
nlohmann::json channels_to_json(const std::vector<ChannelMatrix>& realizations);
std::vector<ChannelMatrix> channels_from_json(const nlohmann::json& j);

nlohmann::json channel_config_to_json(const ChannelConfig& cfg);
ChannelConfig channel_config_from_json(const nlohmann::json& j);

SteeringNorm steering_norm_from_string(const std::string& s);
std::string to_string(SteeringNorm norm);

}  // namespace hbf

#endif
