#pragma once

#include "ppodice/autodiff.hpp"
#include "ppodice/common.hpp"

#include <string>
#include <vector>

namespace ppodice {

enum class Activation { kTanh, kRelu };

/// Fully connected network: hidden layers use `activation`, the output layer
/// is linear. Weights are [in, out] and biases [1, out], so a batch of inputs
/// [n, in] maps to outputs [n, out].
struct MlpParams {
  std::vector<int> sizes;  // input, hidden..., output
  Activation activation = Activation::kTanh;
  std::vector<Matrix> weights;
  std::vector<Matrix> biases;

  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }
  int num_layers() const { return static_cast<int>(weights.size()); }
  std::size_t num_parameters() const;

  /// Finite entries and shapes consistent with `sizes`; throws InputError.
  void validate() const;

  /// All-zero network of the given shape.
  static MlpParams zeros(std::vector<int> sizes, Activation activation = Activation::kTanh);
};

/// Orthogonal initialization: every weight matrix is a (semi-)orthogonal matrix
/// from the QR decomposition of a Gaussian matrix, scaled by `hidden_gain` for
/// hidden layers and `output_gain` for the last layer. Biases start at zero.
MlpParams init_mlp(std::vector<int> sizes, Rng& rng, double hidden_gain = 1.0, double output_gain = 1.0,
                   Activation activation = Activation::kTanh);

/// Plain evaluation. Throws InputError on a dimension mismatch.
Matrix forward(const MlpParams& params, const Matrix& input);

/// Tape-bound view of a network: one Var per tensor, either trainable
/// parameters or constants.
struct BoundMlp {
  const MlpParams* params = nullptr;
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;
};

BoundMlp bind(ad::Tape& tape, const MlpParams& params, bool trainable = true);

ad::Var forward(const BoundMlp& net, ad::Var input);

/// Gradients of the tape's last backward root with respect to the bound
/// tensors, shaped like the network.
MlpParams gradients(const ad::Tape& tape, const BoundMlp& net);

// Flat tensor-list view used by optimizers, checkpoints and gradient checks.
std::vector<Matrix*> tensors(MlpParams& params);
std::vector<const Matrix*> tensors(const MlpParams& params);

std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

}  // namespace ppodice
