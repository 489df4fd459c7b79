#ifndef HBF_NEURAL_HPP
#define HBF_NEURAL_HPP

#include <array>
#include <string>
#include <vector>

#include "hbf/numerics.hpp"

#include <json.hpp>

namespace hbf {

/// A parameter update produced non-finite values; training has diverged.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Activation { relu, tanh };

/// Four fully connected layers. layer_dims lists the node count of each
/// layer; the input vector has layer_dims[0] entries, so weights[0] is
/// square. The first three layers apply ReLU, the output layer tanh, which
/// keeps every output in (-1, 1).
///
/// ReLU uses subgradient 0 at exactly zero input.
struct MlpParams {
  std::array<int, 4> layer_dims{};
  std::vector<RMatrix> weights;            // weights[l]: layer_dims[l] x fan_in(l)
  std::vector<RVector> biases;
  std::array<Activation, 4> activations{Activation::relu, Activation::relu, Activation::relu,
                                        Activation::tanh};

  int input_dim() const { return layer_dims[0]; }
  int output_dim() const { return layer_dims[3]; }
  int fan_in(int layer) const { return layer == 0 ? layer_dims[0] : layer_dims[layer - 1]; }
  bool all_finite() const;
  bool same_shape(const MlpParams& other) const;
};

/// Per-parameter partial derivatives, shape-congruent with an MlpParams.
struct GradientSet {
  std::vector<RMatrix> d_weights;
  std::vector<RVector> d_biases;

  double global_norm() const;
  bool all_finite() const;
  void accumulate(const GradientSet& other);
  void scale(double factor);
};

GradientSet zero_gradients(const MlpParams& params);

/// Weights and biases uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], drawn
/// row by row within each layer, weights before the bias.
MlpParams make_mlp(const std::array<int, 4>& layer_dims, Rng& rng);

RVector forward(const MlpParams& params, const RVector& input);
/// Batched forward; inputs and outputs hold one sample per column.
RMatrix forward(const MlpParams& params, const RMatrix& inputs);

/// Reverse-mode gradients of output_grad^T * forward(params, input). When
/// input_grad is non-null it receives d/d(input) as well.
GradientSet backward(const MlpParams& params, const RVector& input, const RVector& output_grad,
                     RVector* input_grad = nullptr);
/// Batched variant: parameter gradients are summed over the batch columns.
GradientSet backward(const MlpParams& params, const RMatrix& inputs, const RMatrix& output_grads,
                     RMatrix* input_grads = nullptr);

/// theta <- theta - lr * grad. Throws DivergenceError on non-finite
/// gradients; the update is rejected whole.
void sgd_step(MlpParams& params, const GradientSet& grads, double lr);

/// Scales grads so the global L2 norm does not exceed max_norm.
void clip_global_norm(GradientSet& grads, double max_norm);

/// target <- tau * online + (1 - tau) * target.
void soft_update(MlpParams& target, const MlpParams& online, double tau);

/// Checkpoint: layer dims, activations, row-major flattened weights/biases,
/// plus the training seed and step count for resume.
nlohmann::json mlp_to_json(const MlpParams& params);
MlpParams mlp_from_json(const nlohmann::json& j);
nlohmann::json checkpoint_to_json(const MlpParams& params, std::uint64_t seed, std::uint64_t step);

}  // namespace hbf

#endif
