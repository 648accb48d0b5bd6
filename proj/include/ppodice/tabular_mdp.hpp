#pragma once

#include "ppodice/common.hpp"

#include <cstdint>
#include <vector>

namespace ppodice {

/// Finite discounted MDP.
///
/// `transition` stores P(s'|s,a) with one row per state-action pair, row index
/// `s * n_actions + a`, and one column per next state. Rewards are expected
/// rewards r(s,a). States flagged in `terminal` are absorbing with zero reward;
/// a simulator stepping out of them reports episode termination.
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  Matrix transition;  // [S*A, S]
  Matrix reward;      // [S, A]
  Vector initial_dist;
  double discount = 0.9;
  std::vector<std::uint8_t> terminal;  // size S, may be all zero

  int index(int s, int a) const { return s * n_actions + a; }
  double prob(int s, int a, int next) const { return transition(index(s, a), next); }
  bool is_terminal(int s) const { return !terminal.empty() && terminal[s] != 0; }

  /// Throws InputError when any invariant fails: rows of P and the initial
  /// distribution must be nonnegative and sum to one within 1e-12, and
  /// 0 <= discount < 1.
  void validate() const;

  /// max over (s,a) of |sum_s' P(s'|s,a) - 1|.
  double max_row_sum_error() const;
};

/// Chain of `n` states, actions {0: left, 1: right}. With probability `slip`
/// the opposite move is executed. The rightmost state is absorbing and
/// terminal; entering it pays 1, so r(n-2, right) = 1 - slip.
TabularMdp make_chain(int n, double slip, double discount);

/// Width x height grid, start in cell 0, goal (absorbing, terminal) in the last
/// cell. Actions {0: up, 1: right, 2: down, 3: left}; moves off the grid leave
/// the agent in place. With probability `slip` a uniformly random action is
/// executed instead. Entering the goal pays 1.
TabularMdp make_gridworld(int width, int height, double slip, double discount);

/// Dense random MDP: Dirichlet(1) transition rows and initial distribution,
/// rewards uniform on [0, 1). Fully determined by `seed`.
TabularMdp make_random_mdp(int n_states, int n_actions, std::uint64_t seed, double discount);

/// Two states; action 0 moves to the other state, action 1 stays. Deterministic.
TabularMdp make_flip_mdp(const Matrix& reward, double discount);

}  // namespace ppodice
