#include "ppodice/mlp.hpp"

#include <sstream>

namespace ppodice {

namespace {

Matrix activate(const Matrix& x, Activation a) {
  return a == Activation::kTanh ? Matrix(x.array().tanh()) : Matrix(x.cwiseMax(0.0));
}

Matrix orthogonal(int rows, int cols, double gain, Rng& rng) {
  const int n = std::max(rows, cols);
  Matrix g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = standard_normal(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  // Sign fix so the result is uniformly distributed over orthogonal matrices.
  const Matrix r = qr.matrixQR();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  return gain * q.topLeftCorner(rows, cols);
}

}  // namespace

std::size_t MlpParams::num_parameters() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) n += weights[i].size() + biases[i].size();
  return n;
}

void MlpParams::validate() const {
  if (sizes.size() < 2) throw InputError("mlp: need at least input and output sizes");
  if (weights.size() != sizes.size() - 1 || biases.size() != weights.size()) {
    throw InputError("mlp: layer count does not match sizes");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i].rows() != sizes[i] || weights[i].cols() != sizes[i + 1] || biases[i].rows() != 1 ||
        biases[i].cols() != sizes[i + 1]) {
      std::ostringstream err;
      err << "mlp: layer " << i << " has inconsistent shapes";
      throw InputError(err.str());
    }
    if (!weights[i].allFinite() || !biases[i].allFinite()) throw InputError("mlp: non-finite parameters");
  }
}

MlpParams MlpParams::zeros(std::vector<int> sizes, Activation activation) {
  MlpParams p;
  p.sizes = std::move(sizes);
  p.activation = activation;
  for (std::size_t i = 0; i + 1 < p.sizes.size(); ++i) {
    p.weights.push_back(Matrix::Zero(p.sizes[i], p.sizes[i + 1]));
    p.biases.push_back(Matrix::Zero(1, p.sizes[i + 1]));
  }
  return p;
}

MlpParams init_mlp(std::vector<int> sizes, Rng& rng, double hidden_gain, double output_gain,
                   Activation activation) {
  for (int s : sizes) {
    if (s < 1) throw InputError("mlp: layer sizes must be positive");
  }
  MlpParams p = MlpParams::zeros(std::move(sizes), activation);
  for (int i = 0; i < p.num_layers(); ++i) {
    const double gain = i + 1 == p.num_layers() ? output_gain : hidden_gain;
    p.weights[i] = orthogonal(p.sizes[i], p.sizes[i + 1], gain, rng);
  }
  return p;
}

Matrix forward(const MlpParams& params, const Matrix& input) {
  if (input.cols() != params.input_dim()) {
    std::ostringstream err;
    err << "mlp forward: input has " << input.cols() << " columns, expected " << params.input_dim();
    throw InputError(err.str());
  }
  Matrix h = input;
  for (int i = 0; i < params.num_layers(); ++i) {
    Matrix z = (h * params.weights[i]).rowwise() + params.biases[i].row(0);
    h = i + 1 == params.num_layers() ? std::move(z) : activate(z, params.activation);
  }
  return h;
}

BoundMlp bind(ad::Tape& tape, const MlpParams& params, bool trainable) {
  BoundMlp b;
  b.params = &params;
  for (int i = 0; i < params.num_layers(); ++i) {
    b.weights.push_back(trainable ? tape.parameter(params.weights[i]) : tape.constant(params.weights[i]));
    b.biases.push_back(trainable ? tape.parameter(params.biases[i]) : tape.constant(params.biases[i]));
  }
  return b;
}

ad::Var forward(const BoundMlp& net, ad::Var input) {
  if (input.cols() != net.params->input_dim()) {
    std::ostringstream err;
    err << "mlp forward: input has " << input.cols() << " columns, expected " << net.params->input_dim();
    throw InputError(err.str());
  }
  ad::Var h = input;
  const int layers = static_cast<int>(net.weights.size());
  for (int i = 0; i < layers; ++i) {
    h = ad::add_row(ad::matmul(h, net.weights[i]), net.biases[i]);
    if (i + 1 < layers) {
      h = net.params->activation == Activation::kTanh ? ad::tanh(h) : ad::relu(h);
    }
  }
  return h;
}

MlpParams gradients(const ad::Tape& tape, const BoundMlp& net) {
  MlpParams g = MlpParams::zeros(net.params->sizes, net.params->activation);
  for (std::size_t i = 0; i < net.weights.size(); ++i) {
    g.weights[i] = tape.grad(net.weights[i]);
    g.biases[i] = tape.grad(net.biases[i]);
  }
  return g;
}

std::vector<Matrix*> tensors(MlpParams& params) {
  std::vector<Matrix*> out;
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    out.push_back(&params.weights[i]);
    out.push_back(&params.biases[i]);
  }
  return out;
}

std::vector<const Matrix*> tensors(const MlpParams& params) {
  std::vector<const Matrix*> out;
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    out.push_back(&params.weights[i]);
    out.push_back(&params.biases[i]);
  }
  return out;
}

std::string to_string(Activation a) { return a == Activation::kTanh ? "tanh" : "relu"; }

Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  throw ConfigError("unknown activation '" + s + "'");
}

}  // namespace ppodice
