#include "ppodice/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace ppodice {

namespace {

std::string num(double d) {
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  std::ostringstream o;
  o << std::setprecision(17) << d;
  return o.str();
}

double parse_num(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return kInfinity;
  if (s == "-inf") return -kInfinity;
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw IoError("metrics csv: bad number '" + s + "'");
  }
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Frame {
  double x0, x1, y0, y1;
  static constexpr double kW = 640, kH = 400, kL = 70, kR = 20, kT = 40, kB = 50;

  double px(double x) const { return kL + (x - x0) / (x1 - x0) * (kW - kL - kR); }
  double py(double y) const { return kH - kB - (y - y0) / (y1 - y0) * (kH - kT - kB); }
};

Frame make_frame(const std::vector<double>& xs, const std::vector<double>& ys) {
  Frame f{0, 1, 0, 1};
  bool any = false;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
    if (!any) {
      f = {xs[i], xs[i], ys[i], ys[i]};
      any = true;
    }
    f.x0 = std::min(f.x0, xs[i]);
    f.x1 = std::max(f.x1, xs[i]);
    f.y0 = std::min(f.y0, ys[i]);
    f.y1 = std::max(f.y1, ys[i]);
  }
  if (f.x1 <= f.x0) f.x1 = f.x0 + 1;
  if (f.y1 <= f.y0) {
    f.y0 -= 0.5;
    f.y1 += 0.5;
  }
  const double pad = 0.05 * (f.y1 - f.y0);
  f.y0 -= pad;
  f.y1 += pad;
  return f;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

void svg_open(std::ostringstream& o, const Frame& f, const std::string& title) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Frame::kW << "\" height=\"" << Frame::kH << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << Frame::kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
    << escape(title) << "</text>\n";
  o << "<line x1=\"" << Frame::kL << "\" y1=\"" << Frame::kH - Frame::kB << "\" x2=\"" << Frame::kW - Frame::kR
    << "\" y2=\"" << Frame::kH - Frame::kB << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << Frame::kL << "\" y1=\"" << Frame::kT << "\" x2=\"" << Frame::kL << "\" y2=\""
    << Frame::kH - Frame::kB << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double x = f.x0 + (f.x1 - f.x0) * k / 4.0;
    const double y = f.y0 + (f.y1 - f.y0) * k / 4.0;
    o << "<text x=\"" << f.px(x) << "\" y=\"" << Frame::kH - Frame::kB + 18
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << std::setprecision(4) << x
      << "</text>\n";
    o << "<text x=\"" << Frame::kL - 6 << "\" y=\"" << f.py(y) + 3
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << std::setprecision(4) << y
      << "</text>\n";
  }
  o << "<text x=\"" << Frame::kW / 2 << "\" y=\"" << Frame::kH - 10
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">env steps</text>\n";
  o << "<text x=\"16\" y=\"" << Frame::kH / 2 << "\" transform=\"rotate(-90 16 " << Frame::kH / 2
    << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">mean episode return</text>\n";
}

std::string polyline(const Frame& f, const std::vector<double>& xs, const std::vector<double>& ys) {
  std::ostringstream o;
  o << std::setprecision(6);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (std::isfinite(ys[i])) o << f.px(xs[i]) << "," << f.py(ys[i]) << " ";
  }
  return o.str();
}

}  // namespace

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream o;
  o << kMetricsHeader << "\n";
  for (const MetricsRow& r : rows) {
    o << r.iteration << "," << r.env_steps << "," << num(r.mean_episode_return) << "," << num(r.policy_loss) << ","
      << num(r.value_loss) << "," << num(r.divergence_estimate) << "," << num(r.lambda_used) << ","
      << num(r.clip_fraction) << "," << num(r.entropy) << "," << num(r.wall_ms) << "\n";
  }
  return o.str();
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  write_text_file(path, metrics_csv(rows));
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw IoError("'" + path + "' lacks the metrics header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw IoError("'" + path + "': expected 10 columns in '" + line + "'");
    MetricsRow r;
    r.iteration = static_cast<int>(parse_num(f[0]));
    r.env_steps = static_cast<long>(parse_num(f[1]));
    r.mean_episode_return = parse_num(f[2]);
    r.policy_loss = parse_num(f[3]);
    r.value_loss = parse_num(f[4]);
    r.divergence_estimate = parse_num(f[5]);
    r.lambda_used = parse_num(f[6]);
    r.clip_fraction = parse_num(f[7]);
    r.entropy = parse_num(f[8]);
    r.wall_ms = parse_num(f[9]);
    rows.push_back(r);
  }
  return rows;
}

AggregateCurve aggregate_curves(const std::vector<std::vector<MetricsRow>>& runs) {
  AggregateCurve c;
  if (runs.empty()) return c;
  std::size_t len = runs.front().size();
  for (const auto& r : runs) len = std::min(len, r.size());
  for (std::size_t i = 0; i < len; ++i) {
    std::vector<double> v;
    for (const auto& r : runs) {
      if (std::isfinite(r[i].mean_episode_return)) v.push_back(r[i].mean_episode_return);
    }
    c.env_steps.push_back(static_cast<double>(runs.front()[i].env_steps));
    c.count.push_back(static_cast<int>(v.size()));
    if (v.empty()) {
      c.mean.push_back(std::numeric_limits<double>::quiet_NaN());
      c.stderr_.push_back(0.0);
      continue;
    }
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double n = static_cast<double>(v.size());
    c.mean.push_back(m);
    c.stderr_.push_back(v.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0);
  }
  return c;
}

void write_learning_curve_svg(const std::string& path, const std::vector<MetricsRow>& rows,
                              const std::string& title) {
  std::vector<double> xs, ys;
  for (const MetricsRow& r : rows) {
    xs.push_back(static_cast<double>(r.env_steps));
    ys.push_back(r.mean_episode_return);
  }
  const Frame f = make_frame(xs, ys);
  std::ostringstream o;
  svg_open(o, f, title);
  o << "<polyline fill=\"none\" stroke=\"" << kPalette[0] << "\" stroke-width=\"1.5\" points=\""
    << polyline(f, xs, ys) << "\"/>\n</svg>\n";
  write_text_file(path, o.str());
}

void write_aggregate_svg(const std::string& path, const std::vector<AggregateCurve>& curves,
                         const std::vector<std::string>& labels, const std::string& title) {
  std::vector<double> xs, ys;
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.mean.size(); ++i) {
      xs.push_back(c.env_steps[i]);
      xs.push_back(c.env_steps[i]);
      ys.push_back(c.mean[i] - c.stderr_[i]);
      ys.push_back(c.mean[i] + c.stderr_[i]);
    }
  }
  const Frame f = make_frame(xs, ys);
  std::ostringstream o;
  svg_open(o, f, title);
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& c = curves[k];
    const char* color = kPalette[k % 6];
    std::ostringstream band;
    band << std::setprecision(6);
    for (std::size_t i = 0; i < c.mean.size(); ++i) {
      if (std::isfinite(c.mean[i])) band << f.px(c.env_steps[i]) << "," << f.py(c.mean[i] + c.stderr_[i]) << " ";
    }
    for (std::size_t i = c.mean.size(); i-- > 0;) {
      if (std::isfinite(c.mean[i])) band << f.px(c.env_steps[i]) << "," << f.py(c.mean[i] - c.stderr_[i]) << " ";
    }
    o << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"" << band.str() << "\"/>\n";
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
      << polyline(f, c.env_steps, c.mean) << "\"/>\n";
    if (k < labels.size()) {
      o << "<text x=\"" << Frame::kL + 10 << "\" y=\"" << Frame::kT + 14 * (k + 1) << "\" fill=\"" << color
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(labels[k]) << "</text>\n";
    }
  }
  o << "</svg>\n";
  write_text_file(path, o.str());
}

}  // namespace ppodice
