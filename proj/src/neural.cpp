#include "hbf/neural.hpp"

#include <cmath>

namespace hbf {

namespace {

void check_shapes(const MlpParams& p) {
  if (p.weights.size() != 4 || p.biases.size() != 4)
    throw ContractViolation("MlpParams: expected exactly four layers");
  for (int l = 0; l < 4; ++l) {
    if (p.weights[static_cast<std::size_t>(l)].rows() != p.layer_dims[static_cast<std::size_t>(l)] ||
        p.weights[static_cast<std::size_t>(l)].cols() != p.fan_in(l) ||
        p.biases[static_cast<std::size_t>(l)].size() != p.layer_dims[static_cast<std::size_t>(l)])
      throw ContractViolation("MlpParams: layer " + std::to_string(l) + " shape mismatch");
  }
}

RMatrix apply_activation(Activation act, const RMatrix& z) {
  if (act == Activation::relu) return z.cwiseMax(0.0);
  return z.array().tanh().matrix();
}

// Derivative expressed through the pre-activation z (relu) or the output h
// (tanh, where h' = 1 - h^2).
RMatrix activation_grad(Activation act, const RMatrix& z, const RMatrix& h) {
  if (act == Activation::relu)
    return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
  return (1.0 - h.array().square()).matrix();
}

struct ForwardTrace {
  std::vector<RMatrix> pre;   // z_l, one per layer
  std::vector<RMatrix> post;  // h_l = act(z_l)
};

ForwardTrace run_forward(const MlpParams& p, const RMatrix& inputs) {
  ForwardTrace t;
  t.pre.reserve(4);
  t.post.reserve(4);
  const RMatrix* h = &inputs;
  for (std::size_t l = 0; l < 4; ++l) {
    RMatrix z = (p.weights[l] * (*h)).colwise() + p.biases[l];
    t.post.push_back(apply_activation(p.activations[l], z));
    t.pre.push_back(std::move(z));
    h = &t.post.back();
  }
  return t;
}

}  // namespace

bool MlpParams::all_finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

bool MlpParams::same_shape(const MlpParams& other) const {
  return layer_dims == other.layer_dims && activations == other.activations;
}

double GradientSet::global_norm() const {
  double sq = 0.0;
  for (const auto& w : d_weights) sq += w.squaredNorm();
  for (const auto& b : d_biases) sq += b.squaredNorm();
  return std::sqrt(sq);
}

bool GradientSet::all_finite() const {
  for (const auto& w : d_weights)
    if (!w.allFinite()) return false;
  for (const auto& b : d_biases)
    if (!b.allFinite()) return false;
  return true;
}

void GradientSet::accumulate(const GradientSet& other) {
  if (d_weights.size() != other.d_weights.size())
    throw ContractViolation("GradientSet: layer count mismatch");
  for (std::size_t l = 0; l < d_weights.size(); ++l) {
    d_weights[l] += other.d_weights[l];
    d_biases[l] += other.d_biases[l];
  }
}

void GradientSet::scale(double factor) {
  for (auto& w : d_weights) w *= factor;
  for (auto& b : d_biases) b *= factor;
}

GradientSet zero_gradients(const MlpParams& params) {
  GradientSet g;
  for (std::size_t l = 0; l < 4; ++l) {
    g.d_weights.emplace_back(RMatrix::Zero(params.weights[l].rows(), params.weights[l].cols()));
    g.d_biases.emplace_back(RVector::Zero(params.biases[l].size()));
  }
  return g;
}

MlpParams make_mlp(const std::array<int, 4>& layer_dims, Rng& rng) {
  for (int d : layer_dims)
    if (d < 1) throw ContractViolation("make_mlp: layer dims must be >= 1");
  MlpParams p;
  p.layer_dims = layer_dims;
  for (int l = 0; l < 4; ++l) {
    const int rows = layer_dims[static_cast<std::size_t>(l)];
    const int cols = p.fan_in(l);
    const double bound = 1.0 / std::sqrt(double(cols));
    RMatrix w(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) w(r, c) = rng.uniform(-bound, bound);
    RVector b(rows);
    for (int r = 0; r < rows; ++r) b(r) = rng.uniform(-bound, bound);
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  return p;
}

RVector forward(const MlpParams& params, const RVector& input) {
  return forward(params, RMatrix(input)).col(0);
}

RMatrix forward(const MlpParams& params, const RMatrix& inputs) {
  check_shapes(params);
  if (inputs.rows() != params.input_dim())
    throw ContractViolation("forward: input length != layer_dims[0]");
  return run_forward(params, inputs).post.back();
}

GradientSet backward(const MlpParams& params, const RVector& input, const RVector& output_grad,
                     RVector* input_grad) {
  RMatrix in_grads;
  GradientSet g = backward(params, RMatrix(input), RMatrix(output_grad),
                           input_grad ? &in_grads : nullptr);
  if (input_grad) *input_grad = in_grads.col(0);
  return g;
}

GradientSet backward(const MlpParams& params, const RMatrix& inputs, const RMatrix& output_grads,
                     RMatrix* input_grads) {
  check_shapes(params);
  if (inputs.rows() != params.input_dim())
    throw ContractViolation("backward: input length != layer_dims[0]");
  if (output_grads.rows() != params.output_dim() || output_grads.cols() != inputs.cols())
    throw ContractViolation("backward: output_grad shape mismatch");

  ForwardTrace trace = run_forward(params, inputs);
  GradientSet g;
  g.d_weights.resize(4);
  g.d_biases.resize(4);

  RMatrix delta = output_grads.cwiseProduct(
      activation_grad(params.activations[3], trace.pre[3], trace.post[3]));
  for (int l = 3; l >= 0; --l) {
    const std::size_t lu = static_cast<std::size_t>(l);
    const RMatrix& layer_in = l == 0 ? inputs : trace.post[lu - 1];
    g.d_weights[lu] = delta * layer_in.transpose();
    g.d_biases[lu] = delta.rowwise().sum();
    if (l > 0) {
      delta = (params.weights[lu].transpose() * delta)
                  .cwiseProduct(activation_grad(params.activations[lu - 1], trace.pre[lu - 1],
                                                trace.post[lu - 1]));
    } else if (input_grads) {
      *input_grads = params.weights[0].transpose() * delta;
    }
  }
  return g;
}

void sgd_step(MlpParams& params, const GradientSet& grads, double lr) {
  check_shapes(params);
  if (!(lr > 0.0)) throw ContractViolation("sgd_step: lr must be > 0");
  if (grads.d_weights.size() != 4 || grads.d_biases.size() != 4)
    throw ContractViolation("sgd_step: gradient layer count mismatch");
  if (!grads.all_finite()) throw DivergenceError("sgd_step: non-finite gradients, update rejected");
  for (std::size_t l = 0; l < 4; ++l) {
    if (grads.d_weights[l].rows() != params.weights[l].rows() ||
        grads.d_weights[l].cols() != params.weights[l].cols() ||
        grads.d_biases[l].size() != params.biases[l].size())
      throw ContractViolation("sgd_step: gradient shape mismatch");
    params.weights[l] -= lr * grads.d_weights[l];
    params.biases[l] -= lr * grads.d_biases[l];
  }
}

void clip_global_norm(GradientSet& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ContractViolation("clip_global_norm: max_norm must be > 0");
  double norm = grads.global_norm();
  if (norm > max_norm) grads.scale(max_norm / norm);
}

void soft_update(MlpParams& target, const MlpParams& online, double tau) {
  check_shapes(target);
  check_shapes(online);
  if (!target.same_shape(online)) throw ContractViolation("soft_update: shape mismatch");
  if (tau < 0.0 || tau > 1.0) throw ContractViolation("soft_update: tau outside [0, 1]");
  for (std::size_t l = 0; l < 4; ++l) {
    target.weights[l] = tau * online.weights[l] + (1.0 - tau) * target.weights[l];
    target.biases[l] = tau * online.biases[l] + (1.0 - tau) * target.biases[l];
  }
}

namespace {

std::string activation_name(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation activation_from_name(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ContractViolation("unknown activation: " + s);
}

std::vector<double> flatten_row_major(const RMatrix& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

}  // namespace

nlohmann::json mlp_to_json(const MlpParams& params) {
  check_shapes(params);
  nlohmann::json j;
  j["layer_dims"] = params.layer_dims;
  nlohmann::json acts = nlohmann::json::array();
  for (Activation a : params.activations) acts.push_back(activation_name(a));
  j["activations"] = std::move(acts);
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (std::size_t l = 0; l < 4; ++l) {
    weights.push_back(flatten_row_major(params.weights[l]));
    biases.push_back(std::vector<double>(params.biases[l].data(),
                                         params.biases[l].data() + params.biases[l].size()));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j;
}

MlpParams mlp_from_json(const nlohmann::json& j) {
  MlpParams p;
  auto dims = j.at("layer_dims").get<std::vector<int>>();
  if (dims.size() != 4) throw ContractViolation("mlp_from_json: expected 4 layer dims");
  std::copy(dims.begin(), dims.end(), p.layer_dims.begin());
  auto acts = j.at("activations").get<std::vector<std::string>>();
  if (acts.size() != 4) throw ContractViolation("mlp_from_json: expected 4 activations");
  for (std::size_t l = 0; l < 4; ++l) p.activations[l] = activation_from_name(acts[l]);
  for (std::size_t l = 0; l < 4; ++l) {
    const int rows = p.layer_dims[l];
    const int cols = p.fan_in(static_cast<int>(l));
    auto flat = j.at("weights").at(l).get<std::vector<double>>();
    if (flat.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
      throw ContractViolation("mlp_from_json: weight size mismatch");
    RMatrix w(rows, cols);
    std::size_t idx = 0;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) w(r, c) = flat[idx++];
    auto bflat = j.at("biases").at(l).get<std::vector<double>>();
    if (bflat.size() != static_cast<std::size_t>(rows))
      throw ContractViolation("mlp_from_json: bias size mismatch");
    p.weights.push_back(std::move(w));
    p.biases.push_back(Eigen::Map<const RVector>(bflat.data(), rows));
  }
  check_shapes(p);
  return p;
}

nlohmann::json checkpoint_to_json(const MlpParams& params, std::uint64_t seed, std::uint64_t step) {
  nlohmann::json j = mlp_to_json(params);
  j["seed"] = seed;
  j["step"] = step;
  return j;
}

}  // namespace hbf
