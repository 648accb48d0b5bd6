#include "ppodice/dice_losses.hpp"

#include <cmath>

namespace ppodice {

void TransitionSet::validate() const {
  const auto n = states.rows();
  if (n == 0) throw InputError("transition set is empty");
  if (actions.rows() != n || next_states.rows() != n || continues.size() != n) {
    throw InputError("transition set: row counts differ");
  }
  if (initial_states.rows() == 0) throw InputError("transition set has no initial states");
  if (next_states.cols() != states.cols() || initial_states.cols() != states.cols()) {
    throw InputError("transition set: state widths differ");
  }
}

TransitionSet transitions(const RolloutBatch& batch, InitialActionMode mode) {
  TransitionSet set;
  set.states = batch.states;
  set.actions = batch.actions;
  set.next_states = batch.next_states;
  set.continues.resize(batch.size());
  for (int i = 0; i < batch.size(); ++i) set.continues(i) = batch.dones[i] ? 0.0 : 1.0;
  if (mode == InitialActionMode::kPerRollout) {
    set.initial_states = batch.initial_states;
  } else {
    set.initial_states.resize(batch.size(), batch.initial_states.cols());
    for (int j = 0; j < batch.M; ++j) {
      for (int t = 0; t < batch.T; ++t) set.initial_states.row(batch.row(j, t)) = batch.initial_states.row(j);
    }
  }
  return set;
}

TransitionSet subset(const TransitionSet& set, const std::vector<int>& rows, InitialActionMode mode) {
  TransitionSet out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.states.resize(n, set.states.cols());
  out.actions.resize(n, set.actions.cols());
  out.next_states.resize(n, set.next_states.cols());
  out.continues.resize(n);
  if (mode == InitialActionMode::kPerTerm) {
    if (set.initial_size() != set.size()) throw InputError("subset: per-term mode needs one initial row per sample");
    out.initial_states.resize(n, set.initial_states.cols());
  } else {
    out.initial_states = set.initial_states;
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const int r = rows[k];
    if (r < 0 || r >= set.size()) throw InputError("subset: row out of range");
    out.states.row(k) = set.states.row(r);
    out.actions.row(k) = set.actions.row(r);
    out.next_states.row(k) = set.next_states.row(r);
    out.continues(k) = set.continues(r);
    if (mode == InitialActionMode::kPerTerm) out.initial_states.row(k) = set.initial_states.row(r);
  }
  return out;
}

std::string to_string(InitialActionMode m) { return m == InitialActionMode::kPerTerm ? "term" : "rollout"; }
std::string to_string(ResidualMode m) { return m == ResidualMode::kSampled ? "sampled" : "expected"; }

InitialActionMode parse_initial_action_mode(const std::string& s) {
  if (s == "term") return InitialActionMode::kPerTerm;
  if (s == "rollout") return InitialActionMode::kPerRollout;
  throw ConfigError("unknown initial action mode '" + s + "' (expected term|rollout)");
}

ResidualMode parse_residual_mode(const std::string& s) {
  if (s == "sampled") return ResidualMode::kSampled;
  if (s == "expected") return ResidualMode::kExpected;
  throw ConfigError("unknown residual mode '" + s + "' (expected sampled|expected)");
}

// ---------------------------------------------------------------------------

namespace {

int feature_dim(const Space& obs, const Space& act, DiscriminatorInput input) {
  if (input == DiscriminatorInput::kJointOneHot) {
    if (!obs.is_discrete() || !act.is_discrete()) {
      throw CapabilityError("joint one-hot discriminator needs discrete states and actions");
    }
    return obs.size * act.size;
  }
  return obs.encoded_dim() + act.encoded_dim();
}

}  // namespace

DiscriminatorParams make_discriminator(const Space& observation, const Space& action, const std::vector<int>& hidden,
                                       Rng& rng, DiscriminatorInput input) {
  DiscriminatorParams g;
  g.observation = observation;
  g.action = action;
  g.input = input;
  std::vector<int> sizes{feature_dim(observation, action, input)};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  g.net = init_mlp(sizes, rng, 1.0, 1.0);
  return g;
}

Matrix discriminator_features(const DiscriminatorParams& g, const Matrix& states, const Matrix& actions) {
  if (states.rows() != actions.rows()) throw InputError("discriminator: states and actions differ in count");
  if (g.input == DiscriminatorInput::kJointOneHot) {
    if (states.cols() != 1 || actions.cols() != 1) throw InputError("discriminator: discrete elements must be a single column");
    const int S = g.observation.size, A = g.action.size;
    Matrix out = Matrix::Zero(states.rows(), S * A);
    for (Eigen::Index i = 0; i < states.rows(); ++i) {
      const double s = states(i, 0), a = actions(i, 0);
      if (!(s >= 0 && s < S && a >= 0 && a < A) || s != std::floor(s) || a != std::floor(a)) {
        throw InputError("discriminator: state or action index outside its space");
      }
      out(i, static_cast<Eigen::Index>(s) * A + static_cast<Eigen::Index>(a)) = 1.0;
    }
    return out;
  }
  Matrix out(states.rows(), g.observation.encoded_dim() + g.action.encoded_dim());
  out << encode(g.observation, states), encode(g.action, actions);
  return out;
}

Vector evaluate(const DiscriminatorParams& g, const Matrix& states, const Matrix& actions) {
  return forward(g.net, discriminator_features(g, states, actions)).col(0);
}

Matrix discriminator_table(const DiscriminatorParams& g) {
  if (!g.observation.is_discrete() || !g.action.is_discrete()) {
    throw CapabilityError("discriminator_table: discrete spaces only");
  }
  const int S = g.observation.size, A = g.action.size;
  Matrix states(S * A, 1), actions(S * A, 1);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      states(s * A + a, 0) = s;
      actions(s * A + a, 0) = a;
    }
  }
  const Vector v = evaluate(g, states, actions);
  Matrix table(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) table(s, a) = v(s * A + a);
  }
  return table;
}

BoundDiscriminator bind(ad::Tape& tape, const DiscriminatorParams& g, bool trainable) {
  return {&g, bind(tape, g.net, trainable)};
}

ad::Var evaluate(const BoundDiscriminator& g, const Matrix& states, const Matrix& actions) {
  ad::Tape& tape = *g.net.weights.front().tape;
  return forward(g.net, tape.constant(discriminator_features(*g.params, states, actions)));
}

ad::Var evaluate(const BoundDiscriminator& g, const Matrix& states, ad::Var actions) {
  if (g.params->input != DiscriminatorInput::kConcat || g.params->action.is_discrete()) {
    throw CapabilityError("differentiable actions need a concat discriminator over continuous actions");
  }
  if (actions.rows() != states.rows()) throw InputError("discriminator: states and actions differ in count");
  ad::Tape& tape = *g.net.weights.front().tape;
  return forward(g.net, ad::concat_cols(tape.constant(encode(g.params->observation, states)), actions));
}

std::vector<Matrix*> tensors(DiscriminatorParams& g) { return tensors(g.net); }
std::vector<const Matrix*> tensors(const DiscriminatorParams& g) { return tensors(g.net); }

// ---------------------------------------------------------------------------

PolicySamples draw_policy_samples(const PolicyParams& policy, const TransitionSet& set, Rng& rng) {
  set.validate();
  PolicySamples out;
  if (policy.head == HeadKind::kCategorical) {
    out.initial_actions = sample(policy, set.initial_states, rng).actions;
    out.next_actions = sample(policy, set.next_states, rng).actions;
    return out;
  }
  out.initial_noise = sample_noise(policy, set.initial_size(), rng);
  out.next_noise = sample_noise(policy, set.size(), rng);
  out.initial_actions = reparam_sample(policy, set.initial_states, out.initial_noise);
  out.next_actions = reparam_sample(policy, set.next_states, out.next_noise);
  return out;
}

namespace {

ad::Var finish_residual(ad::Var current, ad::Var next, const TransitionSet& set, double gamma,
                        const DivergenceSpec& spec) {
  ad::Tape& tape = *current.tape;
  ad::Var residual = ad::sub(current, ad::scale(ad::mul(tape.constant(Matrix(set.continues)), next), gamma));
  if (spec.kind == DivergenceKind::kTotalVariation && spec.squash_tv_residual) {
    residual = ad::scale(ad::tanh(residual), 0.5);
  }
  return residual;
}

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("discount must lie in [0, 1)");
}

}  // namespace

DiceTerms dice_terms(const BoundDiscriminator& g, const TransitionSet& set, const PolicySamples& samples,
                     const PolicyParams& policy, double gamma, const DivergenceSpec& spec, ResidualMode mode) {
  set.validate();
  check_gamma(gamma);
  DiceTerms terms;
  terms.initial = evaluate(g, set.initial_states, samples.initial_actions);
  const ad::Var current = evaluate(g, set.states, set.actions);
  ad::Var next;
  if (mode == ResidualMode::kSampled) {
    next = evaluate(g, set.next_states, samples.next_actions);
  } else {
    if (policy.head != HeadKind::kCategorical) throw CapabilityError("expected residuals need a categorical policy");
    ad::Tape& tape = *current.tape;
    const Matrix probs = action_probabilities(policy, set.next_states);
    for (int a = 0; a < policy.action.size; ++a) {
      const Matrix actions = Matrix::Constant(set.size(), 1, a);
      const ad::Var term = ad::mul(tape.constant(Matrix(probs.col(a))), evaluate(g, set.next_states, actions));
      next = a == 0 ? term : ad::add(next, term);
    }
  }
  terms.residual = finish_residual(current, next, set, gamma, spec);
  return terms;
}

DiceTerms dice_terms(const BoundDiscriminator& g, const TransitionSet& set, ad::Var initial_actions,
                     ad::Var next_actions, double gamma, const DivergenceSpec& spec) {
  set.validate();
  check_gamma(gamma);
  DiceTerms terms;
  terms.initial = evaluate(g, set.initial_states, initial_actions);
  const ad::Var current = evaluate(g, set.states, set.actions);
  terms.residual = finish_residual(current, evaluate(g, set.next_states, next_actions), set, gamma, spec);
  return terms;
}

ad::Var dice_objective(ad::Tape& tape, const DiceTerms& terms, double gamma, const DivergenceSpec& spec) {
  spec.validate();
  const ad::Var initial = ad::scale(ad::mean(terms.initial), 1.0 - gamma);
  const ad::Var& r = terms.residual;
  if (spec.representation == Representation::kDonskerVaradhan) {
    return ad::sub(ad::log_mean_exp(r), initial);
  }
  ad::Var conj;
  switch (spec.kind) {
    case DivergenceKind::kKL:
      conj = ad::mean(ad::exp(ad::add_scalar(r, -1.0)));
      break;
    case DivergenceKind::kChiSquared:
      conj = ad::mean(ad::add(r, ad::scale(ad::square(r), 0.25)));
      break;
    case DivergenceKind::kTotalVariation:
      if (!spec.squash_tv_residual && r.value().cwiseAbs().maxCoeff() > 0.5) return tape.constant(kInfinity);
      conj = ad::mean(r);
      break;
  }
  return ad::sub(conj, initial);
}

ad::Var dice_discriminator_loss(ad::Tape& tape, const BoundDiscriminator& g, const TransitionSet& set,
                                const PolicySamples& samples, const PolicyParams& policy, double gamma,
                                const DivergenceSpec& spec, ResidualMode mode) {
  if (spec.representation != Representation::kVariationalDice) {
    throw InputError("dice_discriminator_loss: spec must use the variational representation");
  }
  return dice_objective(tape, dice_terms(g, set, samples, policy, gamma, spec, mode), gamma, spec);
}

ad::Var donsker_varadhan_loss(ad::Tape& tape, const BoundDiscriminator& g, const TransitionSet& set,
                              const PolicySamples& samples, const PolicyParams& policy, double gamma,
                              ResidualMode mode) {
  const DivergenceSpec spec = DivergenceSpec::kl_dv();
  return dice_objective(tape, dice_terms(g, set, samples, policy, gamma, spec, mode), gamma, spec);
}

ad::Var discriminator_loss(ad::Tape& tape, const BoundDiscriminator& g, const TransitionSet& set,
                           const PolicySamples& samples, const PolicyParams& policy, double gamma,
                           const DivergenceSpec& spec, ResidualMode mode) {
  spec.validate();
  return dice_objective(tape, dice_terms(g, set, samples, policy, gamma, spec, mode), gamma, spec);
}

double discriminator_loss_value(const DiscriminatorParams& g, const TransitionSet& set, const PolicySamples& samples,
                                const PolicyParams& policy, double gamma, const DivergenceSpec& spec,
                                ResidualMode mode) {
  ad::Tape tape;
  const BoundDiscriminator bound = bind(tape, g, false);
  return discriminator_loss(tape, bound, set, samples, policy, gamma, spec, mode).scalar();
}

double divergence_estimate(const DiscriminatorParams& g, const TransitionSet& set, const PolicySamples& samples,
                           const PolicyParams& policy, double gamma, const DivergenceSpec& spec, ResidualMode mode) {
  return -discriminator_loss_value(g, set, samples, policy, gamma, spec, mode);
}

}  // namespace ppodice
