#ifndef HBF_REPLAY_HPP
#define HBF_REPLAY_HPP

#include <iosfwd>
#include <vector>

#include "hbf/numerics.hpp"

namespace hbf {

/// One stored experience {s, a, r, s'} with its sampling priority and
/// bookkeeping for the access-frequency priority term.
struct Transition {
  RVector state;
  RVector action;
  double reward = 0.0;       // modified reward, shaping bias included
  RVector next_state;
  double priority = 0.0;     // must stay >= the configured floor delta > 0
  double access_count = 0.0; // times this leaf has been sampled
  int born_iter = 0;
};

/// Fixed-capacity FIFO ring whose leaf priorities live in a binary sum tree:
/// every internal node holds the sum of its children, the root the sum of
/// all live priorities. Sampling descends on a uniform variate in O(log N).
class SumTree {
 public:
  explicit SumTree(int capacity);

  /// Writes at the cursor, overwriting the oldest transition when full.
  void push(Transition tr);

  struct Sampled {
    int leaf = 0;
    Transition transition;
  };
  /// Draws `count` leaves with replacement, each with probability
  /// priority/root, incrementing the access count of every draw. An empty
  /// tree yields an empty result (callers warn).
  std::vector<Sampled> sample(int count, Rng& rng);

  /// Re-points one leaf's priority and restores all ancestor sums.
  void update_priority(int leaf, double priority);

  double root() const { return nodes_[1]; }
  int size() const { return size_; }
  int capacity() const { return capacity_; }
  bool empty() const { return size_ == 0; }
  double total_access() const { return total_access_; }
  const Transition& at(int leaf) const;
  /// Live leaf indices from oldest to newest write.
  std::vector<int> oldest_first() const;

 private:
  void set_leaf(int leaf, double priority);

  int capacity_;
  int padded_;
  int cursor_ = 0;
  int size_ = 0;
  double total_access_ = 0.0;
  std::vector<double> nodes_;       // 1-indexed; leaves at [padded_, 2*padded_)
  std::vector<Transition> slots_;
};

/// Priority of one transition: |q - r| plus the access-frequency share plus
/// the positivity floor delta. The TD term is taken in absolute value so the
/// result is always >= delta.
double compute_priority(double q_value, double reward, double access_count, double total_access,
                        double delta);

/// Softmax of the per-agent root sums (max-subtracted for stability).
std::vector<double> agent_priorities(const std::vector<double>& roots);

/// Largest-remainder split of `total` draws proportional to q, clamped to
/// each buffer's occupancy. Ties break toward the lower index. The counts
/// sum to min(total, sum of occupancies).
std::vector<int> allocate_minibatch(const std::vector<double>& q, int total,
                                    const std::vector<int>& occupancy);

/// One JSON object per line, oldest transition first.
void dump_jsonl(const SumTree& tree, std::ostream& out);
SumTree restore_jsonl(std::istream& in, int capacity);

}  // namespace hbf

#endif
