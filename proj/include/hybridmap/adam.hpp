#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hybridmap/params.hpp"

namespace hybridmap {

/// Standard Adam with bias correction and per-group learning rates.
/// Moment arrays grow in lockstep with their parameter groups (new octree
/// vertices start with zero moments).
template <typename S>
class AdamOptimizer {
 public:
  struct Config {
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-15;
  };

  struct GroupRef {
    ParamGroup<S>* group;
    double lr;
  };

  struct StepResult {
    bool applied = false;
    std::string diagnostic;
  };

  explicit AdamOptimizer(const Config& cfg) : cfg_(cfg) {}

  /// One update over all groups. If any gradient is non-finite the whole
  /// step is rejected and the diagnostic names the offending group.
  StepResult step(const std::vector<GroupRef>& groups);

  int64_t step_count() const { return t_; }

 private:
  struct State {
    std::vector<S> m, v;
  };
  Config cfg_;
  std::map<std::string, State> state_;
  int64_t t_ = 0;
};

}  // namespace hybridmap
