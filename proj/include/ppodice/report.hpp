#pragma once

#include "ppodice/trainer.hpp"

#include <string>
#include <vector>

namespace ppodice {

/// Exact CSV header (UTF-8, LF line endings).
inline constexpr const char* kMetricsHeader =
    "iteration,env_steps,mean_episode_return,policy_loss,value_loss,divergence_estimate,\xce\xbb_used,"
    "clip_fraction,entropy,wall_ms";

/// Header line plus one line per row. Reals use 17 significant digits; NaN is
/// written as "nan".
std::string metrics_csv(const std::vector<MetricsRow>& rows);

/// Writes metrics_csv(rows). IoError naming the path if it cannot be written.
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);

/// Parses a file written by write_metrics_csv.
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

/// Mean and standard error of mean_episode_return across runs at each
/// env_steps value. Runs are aligned by row index and truncated to the
/// shortest. NaN entries are skipped per point.
struct AggregateCurve {
  std::vector<double> env_steps;
  std::vector<double> mean;
  std::vector<double> stderr_;  // sample std / sqrt(count); 0 for a single run
  std::vector<int> count;
};

AggregateCurve aggregate_curves(const std::vector<std::vector<MetricsRow>>& runs);

/// env_steps vs mean_episode_return polyline.
void write_learning_curve_svg(const std::string& path, const std::vector<MetricsRow>& rows, const std::string& title);

/// One mean line per curve with a shaded +/- 1 stderr band.
void write_aggregate_svg(const std::string& path, const std::vector<AggregateCurve>& curves,
                         const std::vector<std::string>& labels, const std::string& title);

/// Writes `content` to `path`, creating parent directories. IoError on failure.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace ppodice
