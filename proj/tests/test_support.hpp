#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include "ppodice/dice_losses.hpp"
#include "ppodice/mlp.hpp"
#include "ppodice/oracle.hpp"
#include "ppodice/policy.hpp"

#include <cmath>
#include <deque>
#include <functional>
#include <utility>

namespace ppodice::testing {

/// Categorical policy without hidden layers whose action probabilities equal
/// `pi` exactly (up to exp/log rounding).
inline PolicyParams policy_from_table(const TabularPolicy& pi) {
  const int S = pi.n_states(), A = pi.n_actions();
  PolicyParams p;
  p.head = HeadKind::kCategorical;
  p.observation = Space::discrete(S);
  p.action = Space::discrete(A);
  p.net = MlpParams::zeros({S, A});
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) p.net.weights[0](s, a) = std::log(std::max(pi.probs(s, a), 1e-300));
  }
  return p;
}

/// n i.i.d. transitions with (s, a) ~ `base_sa` (an [S, A] distribution),
/// s' ~ P(.|s, a), and n initial states from rho. Terminal states are kept
/// absorbing, so every transition continues.
inline TransitionSet iid_transitions(const TabularMdp& mdp, const Matrix& base_sa, int n, Rng& rng) {
  const int S = mdp.n_states, A = mdp.n_actions;
  Vector flat(S * A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) flat(s * A + a) = base_sa(s, a);
  }
  flat /= flat.sum();
  TransitionSet t;
  t.states.resize(n, 1);
  t.actions.resize(n, 1);
  t.next_states.resize(n, 1);
  t.continues = Vector::Ones(n);
  t.initial_states.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    const int k = sample_discrete(flat.data(), S * A, rng);
    const int s = k / A, a = k % A;
    const Vector row = mdp.transition.row(k).transpose();
    t.states(i, 0) = s;
    t.actions(i, 0) = a;
    t.next_states(i, 0) = sample_discrete(row.data(), S, rng);
    t.initial_states(i, 0) = sample_discrete(mdp.initial_dist.data(), S, rng);
  }
  return t;
}

/// Value and gradient of a smooth objective.
using Objective = std::function<std::pair<double, Vector>(const Vector&)>;

struct Minimum {
  Vector x;
  double value = 0.0;
  double gradient_norm = 0.0;  // infinity norm
  int iterations = 0;
};

/// Limited-memory BFGS with Armijo backtracking. Stops when the gradient
/// infinity-norm drops below `tol` or no descent is possible.
inline Minimum minimize_lbfgs(const Objective& f, Vector x, int max_iter = 500, double tol = 1e-9, int memory = 10) {
  auto [fx, g] = f(x);
  std::deque<std::pair<Vector, Vector>> history;  // (s, y)
  Minimum m;
  int it = 0;
  for (; it < max_iter && g.lpNorm<Eigen::Infinity>() > tol; ++it) {
    Vector q = g;
    std::vector<double> alpha(history.size());
    for (int i = static_cast<int>(history.size()) - 1; i >= 0; --i) {
      const auto& [s, y] = history[i];
      alpha[i] = s.dot(q) / y.dot(s);
      q -= alpha[i] * y;
    }
    if (!history.empty()) {
      const auto& [s, y] = history.back();
      q *= s.dot(y) / y.dot(y);
    }
    for (std::size_t i = 0; i < history.size(); ++i) {
      const auto& [s, y] = history[i];
      q += s * (alpha[i] - y.dot(q) / y.dot(s));
    }
    Vector dir = -q;
    if (dir.dot(g) >= 0) {
      dir = -g;
      history.clear();
    }
    double step = 1.0;
    Vector xn;
    double fn = 0.0;
    Vector gn;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, step *= 0.5) {
      xn = x + step * dir;
      std::tie(fn, gn) = f(xn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * step * dir.dot(g)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const Vector s = xn - x, y = gn - g;
    if (y.dot(s) > 1e-16) {
      history.emplace_back(s, y);
      if (static_cast<int>(history.size()) > memory) history.pop_front();
    }
    x = xn;
    fx = fn;
    g = gn;
  }
  m.x = x;
  m.value = fx;
  m.gradient_norm = g.lpNorm<Eigen::Infinity>();
  m.iterations = it;
  return m;
}

/// Minimizes the sampled discriminator loss over all parameters of `g` with
/// the target-policy samples frozen. Returns the final loss.
inline Minimum fit_discriminator(DiscriminatorParams& g, const TransitionSet& set, const PolicySamples& samples,
                                 const PolicyParams& policy, double gamma, const DivergenceSpec& spec,
                                 ResidualMode mode, int max_iter = 500, double tol = 1e-9) {
  std::vector<Matrix*> ts = tensors(g);
  auto unpack = [&](const Vector& x) {
    Eigen::Index k = 0;
    for (Matrix* t : ts) {
      for (Eigen::Index i = 0; i < t->size(); ++i) t->data()[i] = x(k++);
    }
  };
  Eigen::Index n = 0;
  for (Matrix* t : ts) n += t->size();
  Vector x0(n);
  {
    Eigen::Index k = 0;
    for (Matrix* t : ts) {
      for (Eigen::Index i = 0; i < t->size(); ++i) x0(k++) = t->data()[i];
    }
  }
  const Objective f = [&](const Vector& x) {
    unpack(x);
    ad::Tape tape;
    const BoundDiscriminator b = bind(tape, g);
    const ad::Var loss = discriminator_loss(tape, b, set, samples, policy, gamma, spec, mode);
    const double v = loss.scalar();
    Vector grad(n);
    if (!std::isfinite(v)) return std::make_pair(v, grad);
    tape.backward(loss);
    const MlpParams gg = gradients(tape, b.net);
    Eigen::Index k = 0;
    for (const Matrix* t : tensors(gg)) {
      for (Eigen::Index i = 0; i < t->size(); ++i) grad(k++) = t->data()[i];
    }
    return std::make_pair(v, grad);
  };
  Minimum m = minimize_lbfgs(f, x0, max_iter, tol);
  unpack(m.x);
  return m;
}

}  // namespace ppodice::testing
