#include "ppodice/witness.hpp"

#include <cmath>

namespace ppodice {

namespace {

Vector flatten(const Matrix& table) {
  Vector v(table.size());
  for (Eigen::Index s = 0; s < table.rows(); ++s) {
    for (Eigen::Index a = 0; a < table.cols(); ++a) v(s * table.cols() + a) = table(s, a);
  }
  return v;
}

Matrix unflatten(const Vector& v, int S, int A) {
  Matrix t(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) t(s, a) = v(s * A + a);
  }
  return t;
}

struct Derivatives {
  double value = 0.0;
  Vector gradient;
  Matrix hessian;
};

Derivatives derivatives(const ExactDiceProblem& p, const Vector& g, const DivergenceSpec& spec) {
  const Vector f = p.bellman * g;
  Derivatives d;
  if (spec.representation == Representation::kDonskerVaradhan) {
    const double m = f.maxCoeff();
    const Vector w = p.base.array() * (f.array() - m).exp();
    const double z = w.sum();
    const Vector q = w / z;
    d.value = m + std::log(z) - p.initial.dot(g);
    d.gradient = p.bellman.transpose() * q - p.initial;
    const Matrix cov = Matrix(q.asDiagonal()) - q * q.transpose();
    d.hessian = p.bellman.transpose() * cov * p.bellman;
    return d;
  }
  Vector d1(f.size()), d2(f.size());
  double conj = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (p.base(i) == 0.0) {
      d1(i) = d2(i) = 0.0;
      continue;
    }
    conj += p.base(i) * conjugate(spec.kind, f(i));
    d1(i) = p.base(i) * conjugate_derivative(spec.kind, f(i));
    d2(i) = p.base(i) * conjugate_second_derivative(spec.kind, f(i));
  }
  d.value = conj - p.initial.dot(g);
  d.gradient = p.bellman.transpose() * d1 - p.initial;
  d.hessian = p.bellman.transpose() * d2.asDiagonal() * p.bellman;
  return d;
}

void check_spec(const DivergenceSpec& spec) {
  spec.validate();
  if (spec.kind == DivergenceKind::kTotalVariation) {
    throw CapabilityError("exact witness fitting supports KL and chi^2 only");
  }
}

}  // namespace

ExactDiceProblem make_exact_dice_problem(const TabularMdp& mdp, const Matrix& base_sa, const TabularPolicy& target) {
  mdp.validate();
  target.validate();
  if (base_sa.rows() != mdp.n_states || base_sa.cols() != mdp.n_actions) {
    throw InputError("exact dice problem: base distribution has the wrong shape");
  }
  ExactDiceProblem p;
  p.n_states = mdp.n_states;
  p.n_actions = mdp.n_actions;
  p.gamma = mdp.discount;
  p.base = flatten(base_sa);
  const int n = mdp.n_states * mdp.n_actions;
  p.bellman = Matrix::Identity(n, n) - mdp.discount * state_action_transition(mdp, target);
  Matrix c(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s) c.row(s) = (1.0 - mdp.discount) * mdp.initial_dist(s) * target.probs.row(s);
  p.initial = flatten(c);
  p.target = exact_visitation(mdp, target).state_action;
  return p;
}

ExactDiceProblem make_exact_dice_problem(const TabularMdp& mdp, const TabularPolicy& base,
                                         const TabularPolicy& target) {
  return make_exact_dice_problem(mdp, exact_visitation(mdp, base).state_action, target);
}

double exact_dice_objective(const ExactDiceProblem& problem, const Matrix& g, const DivergenceSpec& spec) {
  spec.validate();
  if (g.rows() != problem.n_states || g.cols() != problem.n_actions) throw InputError("witness has the wrong shape");
  const Vector gv = flatten(g);
  const Vector f = problem.bellman * gv;
  if (spec.representation == Representation::kDonskerVaradhan) {
    const double m = f.maxCoeff();
    return m + std::log((problem.base.array() * (f.array() - m).exp()).sum()) - problem.initial.dot(gv);
  }
  double conj = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (problem.base(i) > 0.0) conj += problem.base(i) * conjugate(spec.kind, f(i));
  }
  return conj - problem.initial.dot(gv);
}

WitnessFit fit_exact_witness(const ExactDiceProblem& problem, const DivergenceSpec& spec, int max_iterations,
                             double tolerance) {
  check_spec(spec);
  const int n = problem.n_states * problem.n_actions;
  Vector g = Vector::Zero(n);
  WitnessFit fit;
  Derivatives d = derivatives(problem, g, spec);
  for (int it = 0; it < max_iterations; ++it) {
    fit.gradient_norm = d.gradient.lpNorm<Eigen::Infinity>();
    if (fit.gradient_norm < tolerance) {
      fit.converged = true;
      break;
    }
    // Small ridge: DV is flat along constant shifts and unvisited pairs leave
    // directions with zero curvature.
    const double ridge = 1e-12 * std::max(1.0, d.hessian.diagonal().cwiseAbs().maxCoeff());
    const Matrix h = d.hessian + ridge * Matrix::Identity(n, n);
    const Vector step = -h.ldlt().solve(d.gradient);
    double t = 1.0;
    Derivatives next;
    for (int ls = 0; ls < 60; ++ls) {
      next = derivatives(problem, g + t * step, spec);
      if (std::isfinite(next.value) && next.value <= d.value + 1e-4 * t * d.gradient.dot(step)) break;
      t *= 0.5;
    }
    if (!std::isfinite(next.value)) throw NumericalError("witness fit diverged");
    g += t * step;
    d = std::move(next);
    fit.iterations = it + 1;
  }
  fit.gradient_norm = d.gradient.lpNorm<Eigen::Infinity>();
  fit.converged = fit.converged || fit.gradient_norm < tolerance;
  fit.g = unflatten(g, problem.n_states, problem.n_actions);
  fit.objective = d.value;
  fit.estimate = -d.value;
  return fit;
}

}  // namespace ppodice
