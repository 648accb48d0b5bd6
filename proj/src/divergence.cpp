#include "ppodice/divergence.hpp"

#include "ppodice/common.hpp"

#include <cmath>

namespace ppodice {

void DivergenceSpec::validate() const {
  if (representation == Representation::kDonskerVaradhan && kind != DivergenceKind::kKL) {
    throw InputError("Donsker-Varadhan representation is only defined for KL");
  }
}

double phi(DivergenceKind kind, double t) {
  if (t < 0.0) return kInfinity;
  switch (kind) {
    case DivergenceKind::kKL:
      return t == 0.0 ? 0.0 : t * std::log(t);
    case DivergenceKind::kChiSquared:
      return (t - 1.0) * (t - 1.0);
    case DivergenceKind::kTotalVariation:
      return std::abs(t - 1.0);
  }
  return kInfinity;
}

double phi_recession_slope(DivergenceKind kind) {
  return kind == DivergenceKind::kTotalVariation ? 1.0 : kInfinity;
}

double conjugate(DivergenceKind kind, double t) {
  switch (kind) {
    case DivergenceKind::kKL:
      return std::exp(t - 1.0);
    case DivergenceKind::kChiSquared:
      return t + 0.25 * t * t;
    case DivergenceKind::kTotalVariation:
      return std::abs(t) <= 0.5 ? t : kInfinity;
  }
  return kInfinity;
}

double conjugate_derivative(DivergenceKind kind, double t) {
  switch (kind) {
    case DivergenceKind::kKL:
      return std::exp(t - 1.0);
    case DivergenceKind::kChiSquared:
      return 1.0 + 0.5 * t;
    case DivergenceKind::kTotalVariation:
      return std::abs(t) <= 0.5 ? 1.0 : kInfinity;
  }
  return kInfinity;
}

double conjugate_second_derivative(DivergenceKind kind, double t) {
  switch (kind) {
    case DivergenceKind::kKL:
      return std::exp(t - 1.0);
    case DivergenceKind::kChiSquared:
      return 0.5;
    case DivergenceKind::kTotalVariation:
      return 0.0;
  }
  return 0.0;
}

std::string to_string(DivergenceKind kind) {
  switch (kind) {
    case DivergenceKind::kKL: return "kl";
    case DivergenceKind::kChiSquared: return "chi2";
    case DivergenceKind::kTotalVariation: return "tv";
  }
  return "?";
}

std::string to_string(Representation rep) {
  return rep == Representation::kDonskerVaradhan ? "dv" : "dice";
}

DivergenceKind parse_divergence_kind(const std::string& s) {
  if (s == "kl") return DivergenceKind::kKL;
  if (s == "chi2") return DivergenceKind::kChiSquared;
  if (s == "tv") return DivergenceKind::kTotalVariation;
  throw ConfigError("unknown divergence '" + s + "' (expected kl, chi2 or tv)");
}

Representation parse_representation(const std::string& s) {
  if (s == "dice") return Representation::kVariationalDice;
  if (s == "dv") return Representation::kDonskerVaradhan;
  throw ConfigError("unknown representation '" + s + "' (expected dice or dv)");
}

}  // namespace ppodice
