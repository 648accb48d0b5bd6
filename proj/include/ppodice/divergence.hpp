#pragma once

#include <string>

namespace ppodice {

enum class DivergenceKind { kKL, kChiSquared, kTotalVariation };

/// How a divergence is written as an optimization over a witness function.
/// kVariationalDice uses the convex conjugate (works for every kind);
/// kDonskerVaradhan is the log-mean-exp form and exists only for KL.
enum class Representation { kVariationalDice, kDonskerVaradhan };

struct DivergenceSpec {
  DivergenceKind kind = DivergenceKind::kKL;
  Representation representation = Representation::kDonskerVaradhan;
  /// TV only: pass Bellman residuals through 0.5 * tanh so they stay inside
  /// the conjugate's domain |t| <= 1/2. Experimental.
  bool squash_tv_residual = true;

  /// Throws InputError if Donsker-Varadhan is requested for a non-KL kind.
  void validate() const;

  static DivergenceSpec kl_dv() { return {DivergenceKind::kKL, Representation::kDonskerVaradhan}; }
  static DivergenceSpec kl_dice() { return {DivergenceKind::kKL, Representation::kVariationalDice}; }
  static DivergenceSpec chi2_dice() { return {DivergenceKind::kChiSquared, Representation::kVariationalDice}; }
  static DivergenceSpec tv_dice() { return {DivergenceKind::kTotalVariation, Representation::kVariationalDice}; }
};

/// Generator phi on [0, inf): KL t log t, chi^2 (t-1)^2, TV |t-1|.
/// Returns +inf for t < 0.
double phi(DivergenceKind kind, double t);

/// lim_{t->inf} phi(t)/t, used for the perspective phi at zero denominators.
double phi_recession_slope(DivergenceKind kind);

/// Convex conjugate phi*(t) = sup_u {t u - phi(u)}:
///   KL   exp(t - 1)
///   chi2 t + t^2 / 4
///   TV   t for |t| <= 1/2, +inf otherwise
double conjugate(DivergenceKind kind, double t);

/// d phi* / dt. For TV outside |t| <= 1/2 returns +inf.
double conjugate_derivative(DivergenceKind kind, double t);

/// d^2 phi* / dt^2 (0 for TV inside its domain).
double conjugate_second_derivative(DivergenceKind kind, double t);

std::string to_string(DivergenceKind kind);
std::string to_string(Representation rep);
DivergenceKind parse_divergence_kind(const std::string& s);  // kl | chi2 | tv
Representation parse_representation(const std::string& s);   // dice | dv

}  // namespace ppodice
