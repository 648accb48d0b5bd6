#include "ppodice/tabular_mdp.hpp"

#include <cmath>
#include <sstream>

namespace ppodice {

namespace {

constexpr double kSumTolerance = 1e-12;

Vector dirichlet_ones(int n, Rng& rng) {
  Vector v(n);
  for (int i = 0; i < n; ++i) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    v(i) = -std::log(u);
  }
  return v / v.sum();
}

}  // namespace

double TabularMdp::max_row_sum_error() const {
  double worst = 0.0;
  for (int r = 0; r < transition.rows(); ++r) {
    worst = std::max(worst, std::abs(transition.row(r).sum() - 1.0));
  }
  return worst;
}

void TabularMdp::validate() const {
  std::ostringstream err;
  if (n_states <= 0 || n_actions <= 0) {
    throw InputError("TabularMdp: n_states and n_actions must be positive");
  }
  if (transition.rows() != n_states * n_actions || transition.cols() != n_states) {
    err << "TabularMdp: transition must be [" << n_states * n_actions << ", " << n_states << "]";
    throw InputError(err.str());
  }
  if (reward.rows() != n_states || reward.cols() != n_actions) {
    throw InputError("TabularMdp: reward must be [S, A]");
  }
  if (initial_dist.size() != n_states) {
    throw InputError("TabularMdp: initial_dist must have S entries");
  }
  if (!(discount >= 0.0 && discount < 1.0)) {
    throw InputError("TabularMdp: discount must lie in [0, 1)");
  }
  if (!transition.allFinite() || !reward.allFinite() || !initial_dist.allFinite()) {
    throw InputError("TabularMdp: non-finite entries");
  }
  if ((transition.array() < 0.0).any() || (initial_dist.array() < 0.0).any()) {
    throw InputError("TabularMdp: negative probabilities");
  }
  if (max_row_sum_error() > kSumTolerance) {
    throw InputError("TabularMdp: transition rows must sum to 1");
  }
  if (std::abs(initial_dist.sum() - 1.0) > kSumTolerance) {
    throw InputError("TabularMdp: initial_dist must sum to 1");
  }
  if (!terminal.empty() && static_cast<int>(terminal.size()) != n_states) {
    throw InputError("TabularMdp: terminal mask must have S entries");
  }
}

TabularMdp make_chain(int n, double slip, double discount) {
  if (n < 2) throw InputError("chain: need at least 2 states");
  if (!(slip >= 0.0 && slip <= 1.0)) throw InputError("chain: slip must lie in [0, 1]");
  TabularMdp m;
  m.n_states = n;
  m.n_actions = 2;
  m.discount = discount;
  m.transition = Matrix::Zero(2 * n, n);
  m.reward = Matrix::Zero(n, 2);
  m.initial_dist = Vector::Zero(n);
  m.initial_dist(0) = 1.0;
  m.terminal.assign(n, 0);
  const int goal = n - 1;
  m.terminal[goal] = 1;
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < 2; ++a) {
      if (s == goal) {
        m.transition(m.index(s, a), s) = 1.0;
        continue;
      }
      const int left = std::max(s - 1, 0);
      const int right = s + 1;
      const int intended = a == 1 ? right : left;
      const int slipped = a == 1 ? left : right;
      m.transition(m.index(s, a), intended) += 1.0 - slip;
      m.transition(m.index(s, a), slipped) += slip;
      m.reward(s, a) = m.transition(m.index(s, a), goal);
    }
  }
  m.validate();
  return m;
}

TabularMdp make_gridworld(int width, int height, double slip, double discount) {
  if (width < 1 || height < 1 || width * height < 2) {
    throw InputError("gridworld: need at least 2 cells");
  }
  if (!(slip >= 0.0 && slip <= 1.0)) throw InputError("gridworld: slip must lie in [0, 1]");
  const int n = width * height;
  const int goal = n - 1;
  TabularMdp m;
  m.n_states = n;
  m.n_actions = 4;
  m.discount = discount;
  m.transition = Matrix::Zero(4 * n, n);
  m.reward = Matrix::Zero(n, 4);
  m.initial_dist = Vector::Zero(n);
  m.initial_dist(0) = 1.0;
  m.terminal.assign(n, 0);
  m.terminal[goal] = 1;

  auto move = [&](int s, int a) {
    int x = s % width;
    int y = s / width;
    switch (a) {
      case 0: y = std::max(y - 1, 0); break;
      case 1: x = std::min(x + 1, width - 1); break;
      case 2: y = std::min(y + 1, height - 1); break;
      default: x = std::max(x - 1, 0); break;
    }
    return y * width + x;
  };

  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < 4; ++a) {
      const int row = m.index(s, a);
      if (s == goal) {
        m.transition(row, s) = 1.0;
        continue;
      }
      m.transition(row, move(s, a)) += 1.0 - slip;
      for (int b = 0; b < 4; ++b) m.transition(row, move(s, b)) += slip / 4.0;
      m.reward(s, a) = m.transition(row, goal);
    }
  }
  m.validate();
  return m;
}

TabularMdp make_random_mdp(int n_states, int n_actions, std::uint64_t seed, double discount) {
  if (n_states < 1 || n_actions < 1) throw InputError("random_mdp: sizes must be positive");
  Rng rng = make_rng(seed);
  TabularMdp m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.discount = discount;
  m.transition.resize(n_states * n_actions, n_states);
  for (int r = 0; r < n_states * n_actions; ++r) {
    m.transition.row(r) = dirichlet_ones(n_states, rng).transpose();
  }
  m.reward.resize(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) m.reward(s, a) = uniform01(rng);
  }
  m.initial_dist = dirichlet_ones(n_states, rng);
  m.terminal.assign(n_states, 0);
  m.validate();
  return m;
}

TabularMdp make_flip_mdp(const Matrix& reward, double discount) {
  if (reward.rows() != 2 || reward.cols() != 2) throw InputError("flip: reward must be 2x2");
  TabularMdp m;
  m.n_states = 2;
  m.n_actions = 2;
  m.discount = discount;
  m.transition = Matrix::Zero(4, 2);
  m.transition(m.index(0, 0), 1) = 1.0;
  m.transition(m.index(0, 1), 0) = 1.0;
  m.transition(m.index(1, 0), 0) = 1.0;
  m.transition(m.index(1, 1), 1) = 1.0;
  m.reward = reward;
  m.initial_dist = Vector::Constant(2, 0.5);
  m.terminal.assign(2, 0);
  m.validate();
  return m;
}

}  // namespace ppodice
