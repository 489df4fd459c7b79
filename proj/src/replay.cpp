#include "hbf/replay.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include <json.hpp>

namespace hbf {

SumTree::SumTree(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw ContractViolation("SumTree: capacity must be >= 1");
  padded_ = 1;
  while (padded_ < capacity) padded_ *= 2;
  nodes_.assign(static_cast<std::size_t>(2 * padded_), 0.0);
  slots_.resize(static_cast<std::size_t>(capacity));
}

void SumTree::set_leaf(int leaf, double priority) {
  int node = padded_ + leaf;
  nodes_[static_cast<std::size_t>(node)] = priority;
  for (node /= 2; node >= 1; node /= 2)
    nodes_[static_cast<std::size_t>(node)] = nodes_[static_cast<std::size_t>(2 * node)] +
                                             nodes_[static_cast<std::size_t>(2 * node + 1)];
}

void SumTree::push(Transition tr) {
  if (!(tr.priority > 0.0) || !std::isfinite(tr.priority))
    throw ContractViolation("SumTree::push: priority must be positive and finite");
  if (tr.state.size() != tr.action.size() || tr.state.size() != tr.next_state.size())
    throw ContractViolation("SumTree::push: state/action length mismatch");
  if (size_ == capacity_) total_access_ -= slots_[static_cast<std::size_t>(cursor_)].access_count;
  total_access_ += tr.access_count;
  double priority = tr.priority;
  slots_[static_cast<std::size_t>(cursor_)] = std::move(tr);
  set_leaf(cursor_, priority);
  cursor_ = (cursor_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::vector<SumTree::Sampled> SumTree::sample(int count, Rng& rng) {
  if (count < 0) throw ContractViolation("SumTree::sample: negative count");
  std::vector<Sampled> out;
  if (size_ == 0 || count == 0) return out;
  out.reserve(static_cast<std::size_t>(count));
  for (int m = 0; m < count; ++m) {
    double u = rng.uniform() * root();
    int node = 1;
    while (node < padded_) {
      int left = 2 * node;
      double left_sum = nodes_[static_cast<std::size_t>(left)];
      if (u < left_sum) {
        node = left;
      } else {
        u -= left_sum;
        node = left + 1;
      }
    }
    int leaf = node - padded_;
    if (leaf >= size_) leaf = size_ - 1;  // zero-mass edge from rounding
    slots_[static_cast<std::size_t>(leaf)].access_count += 1.0;
    total_access_ += 1.0;
    out.push_back(Sampled{leaf, slots_[static_cast<std::size_t>(leaf)]});
  }
  return out;
}

void SumTree::update_priority(int leaf, double priority) {
  if (leaf < 0 || leaf >= size_) throw ContractViolation("SumTree::update_priority: leaf out of range");
  if (!(priority > 0.0) || !std::isfinite(priority))
    throw ContractViolation("SumTree::update_priority: priority must be positive and finite");
  slots_[static_cast<std::size_t>(leaf)].priority = priority;
  set_leaf(leaf, priority);
}

const Transition& SumTree::at(int leaf) const {
  if (leaf < 0 || leaf >= size_) throw ContractViolation("SumTree::at: leaf out of range");
  return slots_[static_cast<std::size_t>(leaf)];
}

std::vector<int> SumTree::oldest_first() const {
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(size_));
  int start = size_ == capacity_ ? cursor_ : 0;
  for (int n = 0; n < size_; ++n) order.push_back((start + n) % capacity_);
  return order;
}

double compute_priority(double q_value, double reward, double access_count, double total_access,
                        double delta) {
  if (!(delta > 0.0)) throw ContractViolation("compute_priority: delta must be > 0");
  if (access_count < 0.0 || total_access < access_count)
    throw ContractViolation("compute_priority: bad access counts");
  return std::abs(q_value - reward) + access_count / std::max(total_access, 1.0) + delta;
}

std::vector<double> agent_priorities(const std::vector<double>& roots) {
  if (roots.empty()) throw ContractViolation("agent_priorities: empty input");
  double mx = *std::max_element(roots.begin(), roots.end());
  if (!std::isfinite(mx)) throw ContractViolation("agent_priorities: non-finite root");
  std::vector<double> q(roots.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    q[i] = std::exp(roots[i] - mx);
    sum += q[i];
  }
  for (double& v : q) v /= sum;
  return q;
}

std::vector<int> allocate_minibatch(const std::vector<double>& q, int total,
                                    const std::vector<int>& occupancy) {
  if (q.size() != occupancy.size()) throw ContractViolation("allocate_minibatch: length mismatch");
  if (total < 0) throw ContractViolation("allocate_minibatch: negative total");
  const std::size_t n = q.size();
  std::vector<int> counts(n, 0);
  long long live = 0;
  for (int occ : occupancy) live += occ;
  const int want = static_cast<int>(std::min<long long>(total, live));
  if (want == 0) return counts;  // all buffers empty: zero allocation

  std::vector<double> remainder(n);
  int assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double raw = q[i] * total;
    counts[i] = static_cast<int>(std::floor(raw));
    remainder[i] = raw - counts[i];
    assigned += counts[i];
  }

  // floor under-fills; top up by largest remainder, lowest index on ties
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t pos = 0; assigned < total && n > 0; pos = (pos + 1) % n) {
    counts[order[pos]] += 1;
    ++assigned;
  }

  for (std::size_t i = 0; i < n; ++i) counts[i] = std::min(counts[i], occupancy[i]);

  // redistribute what clamping removed to buffers that still have room,
  // preferring the largest proportional shortfall
  int have = std::accumulate(counts.begin(), counts.end(), 0);
  while (have < want) {
    std::size_t best = n;
    double best_gap = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (counts[i] >= occupancy[i]) continue;
      double gap = q[i] * total - counts[i];
      if (gap > best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (best == n) break;
    counts[best] += 1;
    ++have;
  }
  return counts;
}

void dump_jsonl(const SumTree& tree, std::ostream& out) {
  for (int leaf : tree.oldest_first()) {
    const Transition& tr = tree.at(leaf);
    nlohmann::json j{
        {"state", std::vector<double>(tr.state.data(), tr.state.data() + tr.state.size())},
        {"action", std::vector<double>(tr.action.data(), tr.action.data() + tr.action.size())},
        {"reward", tr.reward},
        {"next_state",
         std::vector<double>(tr.next_state.data(), tr.next_state.data() + tr.next_state.size())},
        {"priority", tr.priority},
        {"access_count", tr.access_count},
        {"born_iter", tr.born_iter}};
    out << j.dump() << '\n';
  }
}

SumTree restore_jsonl(std::istream& in, int capacity) {
  SumTree tree(capacity);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    Transition tr;
    auto s = j.at("state").get<std::vector<double>>();
    auto a = j.at("action").get<std::vector<double>>();
    auto ns = j.at("next_state").get<std::vector<double>>();
    tr.state = Eigen::Map<const RVector>(s.data(), static_cast<Eigen::Index>(s.size()));
    tr.action = Eigen::Map<const RVector>(a.data(), static_cast<Eigen::Index>(a.size()));
    tr.next_state = Eigen::Map<const RVector>(ns.data(), static_cast<Eigen::Index>(ns.size()));
    tr.reward = j.at("reward").get<double>();
    tr.priority = j.at("priority").get<double>();
    tr.access_count = j.at("access_count").get<double>();
    tr.born_iter = j.at("born_iter").get<int>();
    tree.push(std::move(tr));
  }
  return tree;
}

}  // namespace hbf
