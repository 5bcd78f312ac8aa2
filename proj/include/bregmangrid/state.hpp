#pragma once

#include "bregmangrid/types.hpp"

namespace bregmangrid {

/// Closed-loop state: angles, frequencies, voltages, secondary controller
/// memory xi and dynamic u_Q memory lambda. All blocks have one entry per node.
struct GridState {
  Vec theta;
  Vec omega;
  Vec V;
  Vec xi;
  Vec lambda;

  static GridState zeros(int n) {
    return {Vec::Zero(n), Vec::Zero(n), Vec::Zero(n), Vec::Zero(n), Vec::Zero(n)};
  }

  int nodes() const { return static_cast<int>(theta.size()); }

  Vec pack() const {
    const auto n = theta.size();
    Vec x(5 * n);
    x << theta, omega, V, xi, lambda;
    return x;
  }

  static GridState unpack(const Vec& x) {
    const auto n = x.size() / 5;
    return {x.segment(0, n), x.segment(n, n), x.segment(2 * n, n), x.segment(3 * n, n),
            x.segment(4 * n, n)};
  }
};

}  // namespace bregmangrid
