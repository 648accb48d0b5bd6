#include "ppodice/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace ppodice {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes a little-endian host");

std::string space_token(const Space& s) {
  return (s.is_discrete() ? "discrete:" : "box:") + std::to_string(s.size);
}

Space parse_space(const std::string& tok) {
  const auto colon = tok.find(':');
  if (colon == std::string::npos) throw IoError("checkpoint: bad space token '" + tok + "'");
  const int n = std::stoi(tok.substr(colon + 1));
  const std::string kind = tok.substr(0, colon);
  if (kind == "discrete") return Space::discrete(n);
  if (kind == "box") return Space::box(n, -1.0, 1.0);
  throw IoError("checkpoint: bad space kind '" + kind + "'");
}

std::map<std::string, std::string> parse_meta(const std::string& meta) {
  std::map<std::string, std::string> out;
  std::istringstream in(meta);
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) out[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return out;
}

std::string sizes_token(const std::vector<int>& sizes) {
  std::string s;
  for (std::size_t i = 0; i < sizes.size(); ++i) s += (i ? "," : "") + std::to_string(sizes[i]);
  return s;
}

std::vector<int> parse_sizes(const std::string& s) {
  std::vector<int> out;
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) out.push_back(std::stoi(part));
  return out;
}

std::string require(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw IoError("checkpoint: missing meta field '" + key + "'");
  return it->second;
}

MlpParams mlp_from(const std::vector<int>& sizes, Activation act, const std::vector<Matrix>& t, std::size_t offset) {
  MlpParams p = MlpParams::zeros(sizes, act);
  if (t.size() < offset + 2 * p.weights.size()) throw IoError("checkpoint: too few tensors for network");
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    p.weights[i] = t[offset + 2 * i];
    p.biases[i] = t[offset + 2 * i + 1];
  }
  try {
    p.validate();
  } catch (const InputError& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
  return p;
}

}  // namespace

void save_tensors(const std::string& path, const std::string& meta, const std::vector<const Matrix*>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "ppodice-params 1\n";
  out << "meta " << meta << "\n";
  out << "tensors " << tensors.size() << "\n";
  for (const Matrix* t : tensors) out << t->rows() << " " << t->cols() << "\n";
  out << "data\n";
  for (const Matrix* t : tensors) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = *t;
    out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

TensorFile load_tensors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line) || line != "ppodice-params 1") throw IoError("'" + path + "' is not a checkpoint");
  TensorFile f;
  if (!std::getline(in, line) || line.rfind("meta ", 0) != 0) throw IoError("checkpoint: missing meta line");
  f.meta = line.substr(5);
  if (!std::getline(in, line) || line.rfind("tensors ", 0) != 0) throw IoError("checkpoint: missing tensor count");
  const long k = std::stol(line.substr(8));
  std::vector<std::pair<long, long>> shapes;
  for (long i = 0; i < k; ++i) {
    long r = 0, c = 0;
    if (!std::getline(in, line)) throw IoError("checkpoint: truncated shape list");
    std::istringstream(line) >> r >> c;
    if (r < 0 || c < 0) throw IoError("checkpoint: negative shape");
    shapes.emplace_back(r, c);
  }
  if (!std::getline(in, line) || line != "data") throw IoError("checkpoint: missing data marker");
  for (const auto& [r, c] : shapes) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(r, c);
    in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
    if (!in) throw IoError("checkpoint: truncated payload");
    f.tensors.emplace_back(rm);
  }
  return f;
}

void save_mlp(const std::string& path, const MlpParams& params) {
  save_tensors(path, "kind=mlp sizes=" + sizes_token(params.sizes) + " activation=" + to_string(params.activation),
               tensors(params));
}

MlpParams load_mlp(const std::string& path) {
  const TensorFile f = load_tensors(path);
  const auto meta = parse_meta(f.meta);
  if (require(meta, "kind") != "mlp") throw IoError("checkpoint: not an mlp");
  return mlp_from(parse_sizes(require(meta, "sizes")), parse_activation(require(meta, "activation")), f.tensors, 0);
}

void save_policy(const std::string& path, const PolicyParams& policy) {
  std::ostringstream meta;
  meta << "kind=policy head=" << (policy.head == HeadKind::kCategorical ? "categorical" : "gaussian")
       << " observation=" << space_token(policy.observation) << " action=" << space_token(policy.action)
       << " sizes=" << sizes_token(policy.net.sizes) << " activation=" << to_string(policy.net.activation);
  save_tensors(path, meta.str(), tensors(policy));
}

PolicyParams load_policy(const std::string& path) {
  const TensorFile f = load_tensors(path);
  const auto meta = parse_meta(f.meta);
  if (require(meta, "kind") != "policy") throw IoError("checkpoint: not a policy");
  PolicyParams p;
  p.head = require(meta, "head") == "categorical" ? HeadKind::kCategorical : HeadKind::kDiagonalGaussian;
  p.observation = parse_space(require(meta, "observation"));
  p.action = parse_space(require(meta, "action"));
  p.net = mlp_from(parse_sizes(require(meta, "sizes")), parse_activation(require(meta, "activation")), f.tensors, 0);
  if (p.head == HeadKind::kDiagonalGaussian) {
    const std::size_t idx = 2 * p.net.weights.size();
    if (f.tensors.size() != idx + 1) throw IoError("checkpoint: missing log_std tensor");
    p.log_std = f.tensors[idx];
  }
  return p;
}

}  // namespace ppodice
