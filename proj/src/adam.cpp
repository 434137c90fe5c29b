#include "hybridmap/adam.hpp"

#include <cmath>

namespace hybridmap {

template <typename S>
typename AdamOptimizer<S>::StepResult AdamOptimizer<S>::step(
    const std::vector<GroupRef>& groups) {
  for (const GroupRef& g : groups) {
    for (S v : g.group->grads()) {
      if (!std::isfinite(double(v))) {
        return {false, "non-finite gradient in group '" + g.group->name() + "'"};
      }
    }
  }

  ++t_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double bc1 = 1.0 - std::pow(b1, double(t_));
  const double bc2 = 1.0 - std::pow(b2, double(t_));
  for (const GroupRef& g : groups) {
    State& st = state_[g.group->name()];
    st.m.resize(g.group->size(), S(0));
    st.v.resize(g.group->size(), S(0));
    auto values = g.group->values();
    auto grads = g.group->grads();
    for (size_t i = 0; i < values.size(); ++i) {
      const double grad = double(grads[i]);
      const double m = b1 * double(st.m[i]) + (1.0 - b1) * grad;
      const double v = b2 * double(st.v[i]) + (1.0 - b2) * grad * grad;
      st.m[i] = S(m);
      st.v[i] = S(v);
      const double m_hat = m / bc1;
      const double v_hat = v / bc2;
      values[i] = S(double(values[i]) - g.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps));
    }
  }
  return {true, {}};
}

template class AdamOptimizer<float>;
template class AdamOptimizer<double>;

}  // namespace hybridmap
