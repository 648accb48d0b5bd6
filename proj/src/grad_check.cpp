#include "ppodice/grad_check.hpp"

#include <cmath>

namespace ppodice {

namespace {

double evaluate(const LossBuilder& loss, const std::vector<Matrix>& params) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  vars.reserve(params.size());
  for (const Matrix& p : params) vars.push_back(tape.constant(p));
  return loss(tape, vars).scalar();
}

}  // namespace

GradReport grad_check(const LossBuilder& loss, const std::vector<Matrix>& params, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) throw InputError("grad_check: eps must lie in [1e-7, 1e-3]");
  GradReport report;

  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const Matrix& p : params) vars.push_back(tape.parameter(p));
  const ad::Var root = loss(tape, vars);
  if (!std::isfinite(root.scalar())) {
    report.ok = false;
    report.failure = "non-finite loss at the base point";
    report.max_relative_error = kInfinity;
    return report;
  }
  tape.backward(root);

  std::vector<Matrix> work = params;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Matrix analytic = tape.grad(vars[k]);
    for (Eigen::Index i = 0; i < params[k].size(); ++i) {
      const double original = work[k].data()[i];
      work[k].data()[i] = original + eps;
      const double up = evaluate(loss, work);
      work[k].data()[i] = original - eps;
      const double down = evaluate(loss, work);
      work[k].data()[i] = original;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        report.ok = false;
        report.failure = "non-finite loss during finite differences";
        report.max_relative_error = kInfinity;
        return report;
      }
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic.data()[i];
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      report.errors.push_back(err);
      report.max_relative_error = std::max(report.max_relative_error, err);
    }
  }
  return report;
}

}  // namespace ppodice
