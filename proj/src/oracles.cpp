#include "hbf/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "hbf/channel.hpp"
#include "hbf/replay.hpp"

namespace hbf::oracles {

CMatrix naive_matmul(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows()) throw ContractViolation("naive_matmul: dimension mismatch");
  CMatrix c = CMatrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
  return c;
}

double naive_frob_diff(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ContractViolation("naive_frob_diff: dimension mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) sum += std::norm(a(i, j) - b(i, j));
  return std::sqrt(sum);
}

RVector waterfill_bisection(const RVector& gains, const RVector& noise, double p_total) {
  auto spent = [&](double mu) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < gains.size(); ++k)
      s += gains(k) * std::max(mu / gains(k) - noise(k), 0.0);
    return s;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (spent(hi) < p_total) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (spent(mid) < p_total)
      lo = mid;
    else
      hi = mid;
  }
  double mu = 0.5 * (lo + hi);
  RVector p(gains.size());
  for (Eigen::Index k = 0; k < gains.size(); ++k)
    p(k) = std::max(mu / gains(k) - noise(k), 0.0);
  return p;
}

RVector random_feasible_allocation(const RVector& gains, double p_total, Rng& rng) {
  RVector share(gains.size());
  double sum = 0.0;
  for (Eigen::Index k = 0; k < gains.size(); ++k) {
    share(k) = rng.uniform();
    sum += share(k);
  }
  RVector p(gains.size());
  for (Eigen::Index k = 0; k < gains.size(); ++k)
    p(k) = p_total * (share(k) / sum) / gains(k);  // gains_k * p_k budgets to p_total
  return p;
}

double sinr_sum_rate_loop(const CMatrix& h, const CMatrix& f_rf, const CMatrix& f_d,
                          const RVector& noise) {
  const auto k_users = h.rows();
  double rate = 0.0;
  for (Eigen::Index k = 0; k < k_users; ++k) {
    double signal = 0.0;
    double interference = 0.0;
    for (Eigen::Index l = 0; l < f_d.cols(); ++l) {
      Complex acc(0.0, 0.0);
      for (Eigen::Index t = 0; t < h.cols(); ++t) {
        Complex eff(0.0, 0.0);
        for (Eigen::Index r = 0; r < f_rf.cols(); ++r) eff += f_rf(t, r) * f_d(r, l);
        acc += h(k, t) * eff;
      }
      double p = std::norm(acc);
      if (l == k)
        signal = p;
      else
        interference += p;
    }
    rate += std::log2(1.0 + signal / (noise(k) + interference));
  }
  return rate;
}

GradientSet finite_difference_gradients(const MlpParams& params,
                                        const std::function<double(const MlpParams&)>& loss,
                                        double step) {
  MlpParams probe = params;
  GradientSet g = zero_gradients(params);
  for (std::size_t l = 0; l < 4; ++l) {
    for (Eigen::Index r = 0; r < params.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < params.weights[l].cols(); ++c) {
        double saved = probe.weights[l](r, c);
        probe.weights[l](r, c) = saved + step;
        double up = loss(probe);
        probe.weights[l](r, c) = saved - step;
        double down = loss(probe);
        probe.weights[l](r, c) = saved;
        g.d_weights[l](r, c) = (up - down) / (2.0 * step);
      }
    }
    for (Eigen::Index r = 0; r < params.biases[l].size(); ++r) {
      double saved = probe.biases[l](r);
      probe.biases[l](r) = saved + step;
      double up = loss(probe);
      probe.biases[l](r) = saved - step;
      double down = loss(probe);
      probe.biases[l](r) = saved;
      g.d_biases[l](r) = (up - down) / (2.0 * step);
    }
  }
  return g;
}

double max_relative_gradient_error(const GradientSet& a, const GradientSet& b, double floor) {
  // The comparison floor scales with the largest gradient entry so that
  // near-zero coordinates, where central differences are pure cancellation
  // noise, do not dominate the reported relative error.
  double scale = 0.0;
  for (std::size_t l = 0; l < a.d_weights.size(); ++l) {
    scale = std::max({scale, a.d_weights[l].cwiseAbs().maxCoeff(),
                      b.d_weights[l].cwiseAbs().maxCoeff()});
    if (a.d_biases[l].size() > 0)
      scale = std::max({scale, a.d_biases[l].cwiseAbs().maxCoeff(),
                        b.d_biases[l].cwiseAbs().maxCoeff()});
  }
  double denom_floor = std::max(floor, 1e-2 * scale);
  double worst = 0.0;
  auto compare = [&](double x, double y) {
    double denom = std::max({std::abs(x), std::abs(y), denom_floor});
    worst = std::max(worst, std::abs(x - y) / denom);
  };
  for (std::size_t l = 0; l < a.d_weights.size(); ++l) {
    for (Eigen::Index r = 0; r < a.d_weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < a.d_weights[l].cols(); ++c)
        compare(a.d_weights[l](r, c), b.d_weights[l](r, c));
    for (Eigen::Index r = 0; r < a.d_biases[l].size(); ++r)
      compare(a.d_biases[l](r), b.d_biases[l](r));
  }
  return worst;
}

void FlatReplayMirror::push(double priority) {
  if (static_cast<int>(priorities_.size()) < capacity_) {
    priorities_.push_back(priority);
  } else {
    priorities_[static_cast<std::size_t>(cursor_)] = priority;
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

void FlatReplayMirror::update(int slot, double priority) {
  priorities_.at(static_cast<std::size_t>(slot)) = priority;
}

double FlatReplayMirror::sum() const {
  double s = 0.0;
  for (double p : priorities_) s += p;
  return s;
}

namespace {

double gammln(double x) {
  static const double cof[6] = {76.18009172947146,  -86.50532032941677, 24.01409824083091,
                                -1.231739572450155, 0.1208650973866179e-2, -0.5395239384953e-5};
  double y = x;
  double tmp = x + 5.5;
  tmp -= (x + 0.5) * std::log(tmp);
  double ser = 1.000000000190015;
  for (double c : cof) ser += c / ++y;
  return -tmp + std::log(2.5066282746310005 * ser / x);
}

double gamma_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ++ap;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-14) break;
  }
  return sum * std::exp(-x + a * std::log(x) - gammln(a));
}

double gamma_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-14) break;
  }
  return std::exp(-x + a * std::log(x) - gammln(a)) * h;
}

}  // namespace

double gammq(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw ContractViolation("gammq: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_series(a, x);
  return gamma_cf(a, x);
}

double chi_square_p_value(const std::vector<long long>& observed,
                          const std::vector<double>& expected_probs) {
  if (observed.size() != expected_probs.size() || observed.empty())
    throw ContractViolation("chi_square_p_value: length mismatch");
  long long total = 0;
  for (long long o : observed) total += o;
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    double expect = expected_probs[i] * static_cast<double>(total);
    if (expect <= 0.0) throw ContractViolation("chi_square_p_value: zero expected bin");
    double diff = static_cast<double>(observed[i]) - expect;
    stat += diff * diff / expect;
  }
  double dof = static_cast<double>(observed.size()) - 1.0;
  return gammq(dof / 2.0, stat / 2.0);
}

namespace {

bool check(std::ostream& out, const char* name, bool ok, const std::string& detail) {
  out << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << '\n';
  return ok;
}

CMatrix random_cmatrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  CMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.cnormal(1.0);
  return m;
}

}  // namespace

bool run_all(std::ostream& out, std::uint64_t seed) {
  bool all = true;
  Rng rng(seed);

  {
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      int m = 1 + static_cast<int>(rng.uniform() * 16);
      int k = 1 + static_cast<int>(rng.uniform() * 16);
      int n = 1 + static_cast<int>(rng.uniform() * 16);
      CMatrix a = random_cmatrix(m, k, rng);
      CMatrix b = random_cmatrix(k, n, rng);
      worst = std::max(worst, (matmul(a, b) - naive_matmul(a, b)).cwiseAbs().maxCoeff());
    }
    all &= check(out, "matmul vs triple-loop oracle", worst < 1e-12,
                 "max elementwise error " + std::to_string(worst));
  }

  {
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      CMatrix a = random_cmatrix(6, 6, rng);
      CMatrix b = random_cmatrix(6, 6, rng);
      worst = std::max(worst, std::abs(frob_norm_diff(a, b) - naive_frob_diff(a, b)));
    }
    all &= check(out, "frobenius diff vs elementwise oracle", worst < 1e-12,
                 "max error " + std::to_string(worst));
  }

  {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      CMatrix m = random_cmatrix(8, 4, rng);
      CMatrix a = m.adjoint() * m + 0.1 * CMatrix::Identity(4, 4);
      CMatrix b = random_cmatrix(4, 3, rng);
      CMatrix x = solve_hermitian(a, b);
      worst = std::max(worst, (a * x - b).norm() / b.norm());
    }
    all &= check(out, "hermitian solve residual", worst < 1e-9,
                 "max relative residual " + std::to_string(worst));
  }

  {
    double worst_mu = 0.0;
    bool beats_random = true;
    for (int i = 0; i < 200; ++i) {
      int k = 2 + static_cast<int>(rng.uniform() * 6);
      RVector gains(k), noise(k);
      for (int j = 0; j < k; ++j) {
        gains(j) = 0.1 + rng.uniform() * 5.0;
        noise(j) = 0.2 + rng.uniform() * 2.0;
      }
      double p_total = 0.5 + rng.uniform() * 20.0;
      PowerAllocation pa = water_filling(gains, noise, p_total);
      RVector pb = waterfill_bisection(gains, noise, p_total);
      worst_mu = std::max(worst_mu, (pa.powers - pb).cwiseAbs().maxCoeff());
      double rate = zf_sum_rate(pa);
      for (int trial = 0; trial < 1000; ++trial) {
        RVector pr = random_feasible_allocation(gains, p_total, rng);
        double r = 0.0;
        for (int j = 0; j < k; ++j) r += std::log2(1.0 + pr(j) / noise(j));
        if (r > rate + 1e-9) beats_random = false;
      }
    }
    all &= check(out, "water-filling vs bisection oracle", worst_mu < 1e-9,
                 "max power mismatch " + std::to_string(worst_mu));
    all &= check(out, "water-filling beats random feasible points", beats_random,
                 beats_random ? "no violations" : "a random allocation won");
  }

  {
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      std::array<int, 4> dims{8, 4, 4, 2};
      MlpParams net = make_mlp(dims, rng);
      RVector input(8);
      for (int i = 0; i < 8; ++i) input(i) = rng.uniform(-1.0, 1.0);
      RVector cot(2);
      cot << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
      GradientSet exact = backward(net, input, cot);
      GradientSet approx = finite_difference_gradients(
          net, [&](const MlpParams& p) { return cot.dot(forward(p, input)); });
      worst = std::max(worst, max_relative_gradient_error(exact, approx));
    }
    all &= check(out, "backprop vs finite differences", worst < 1e-6,
                 "max relative error " + std::to_string(worst));
  }

  {
    SumTree tree(64);
    FlatReplayMirror mirror(64);
    bool consistent = true;
    for (int op = 0; op < 10000; ++op) {
      double roll = rng.uniform();
      if (roll < 0.5 || tree.empty()) {
        Transition tr;
        tr.state = RVector::Zero(2);
        tr.action = RVector::Zero(2);
        tr.next_state = RVector::Zero(2);
        tr.priority = 0.01 + rng.uniform() * 3.0;
        tree.push(tr);
        mirror.push(tr.priority);
      } else if (roll < 0.8) {
        auto picked = tree.sample(1 + static_cast<int>(rng.uniform() * 4), rng);
        (void)picked;
      } else {
        int leaf = static_cast<int>(rng.uniform() * tree.size());
        double p = 0.01 + rng.uniform() * 3.0;
        tree.update_priority(leaf, p);
        mirror.update(leaf, p);
      }
      if (std::abs(tree.root() - mirror.sum()) > 1e-9) consistent = false;
    }
    all &= check(out, "sum-tree root vs flat-array oracle", consistent,
                 "10000 interleaved operations");
  }

  {
    int leaves = 16;
    SumTree tree(leaves);
    std::vector<double> probs(static_cast<std::size_t>(leaves));
    double total = 0.0;
    for (int i = 0; i < leaves; ++i) {
      Transition tr;
      tr.state = RVector::Zero(1);
      tr.action = RVector::Zero(1);
      tr.next_state = RVector::Zero(1);
      tr.priority = 0.05 + rng.uniform() * 2.0;
      probs[static_cast<std::size_t>(i)] = tr.priority;
      total += tr.priority;
      tree.push(tr);
    }
    for (auto& p : probs) p /= total;
    std::vector<long long> counts(static_cast<std::size_t>(leaves), 0);
    for (auto& s : tree.sample(100000, rng)) counts[static_cast<std::size_t>(s.leaf)]++;
    double p = chi_square_p_value(counts, probs);
    all &= check(out, "prioritized sampling chi-square", p > 0.001,
                 "p = " + std::to_string(p));
  }

  return all;
}

}  // namespace hbf::oracles
