#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "allocatron/common.hpp"

namespace allocatron::model {

// Multi-head attention stack with the softmax, ReLU and normalization
// removed, so a depth-L network is a homogeneous polynomial of degree 3^L in
// the input entries. All linear algebra is bilinear (plain transposes, no
// conjugation) so the same code runs over real and complex scalars.

struct NetworkConfig {
  int depth = 1;     // L
  int width = 1;     // d_x, embedding dimension
  int heads = 1;     // H, must divide width
  int seq_len = 1;   // N, number of input positions

  int head_dim() const { return width / heads; }  // d_a

  void validate() const;
};

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
struct LayerWeights {
  // Per head: key/query/value are head_dim x width, output is width x head_dim.
  std::vector<Matrix<Scalar>> wk, wq, wv, wo;
};

template <class Scalar>
struct Theta {
  NetworkConfig config;
  std::vector<LayerWeights<Scalar>> layers;  // size == config.depth
};

using ThetaD = Theta<double>;
using ThetaC = Theta<std::complex<double>>;
using MatrixD = Matrix<double>;
using MatrixC = Matrix<std::complex<double>>;

// One attention layer:
//   Y = sum_h W_O^h (W_V^h X) A_h^T,  A_h = (W_Q^h X)^T (W_K^h X)
// i.e. output position i accumulates <W_Q x_i, W_K x_j> W_O W_V x_j over j.
// Heads are accumulated in index order, then positions, so results are
// reproducible run to run.
template <class Scalar>
Matrix<Scalar> sa_layer_forward(const LayerWeights<Scalar>& layer,
                                const NetworkConfig& config,
                                const Matrix<Scalar>& x);

// Compose `depth` layers. With `with_residual` each layer output has its own
// input added back (the block computes layer(X) + X).
template <class Scalar>
Matrix<Scalar> network_forward(const Theta<Scalar>& theta, const Matrix<Scalar>& x,
                               bool with_residual = false);

// Expanded product form of the same function: the depth-L network equals a sum
// over H^{(3^L-1)/2} head assignments of B0^T M_1 ... M_C A0 X with
// M_c = A_c X X^T B_c^T and C = (3^L-1)/2. Exercising it beyond L = 3 would
// materialize too many factor chains, so larger depths are rejected.
template <class Scalar>
Matrix<Scalar> structural_form_forward(const Theta<Scalar>& theta,
                                       const Matrix<Scalar>& x);

// Factor chains backing structural_form_forward, exposed so tests can check
// the chain population (H^{C} descriptors of C M-factors each).
template <class Scalar>
struct StructuralDescriptor {
  Matrix<Scalar> b0;                                       // head_dim x width
  std::vector<std::pair<Matrix<Scalar>, Matrix<Scalar>>> m;  // (A_c, B_c)
  Matrix<Scalar> a0;                                       // head_dim x width
};

template <class Scalar>
std::vector<StructuralDescriptor<Scalar>> build_structural_descriptors(
    const Theta<Scalar>& theta);

// Learned-parameter count of the attention stack, embeddings excluded:
// each layer holds 4 * H * (d_a x d_x) entries = 4 d_x^2, and the convention
// used throughout counts the feed-forward block alongside, 12 L d_x^2 total.
std::uint64_t count_nonembedding_params(std::uint64_t depth, std::uint64_t width);

// i.i.d. uniform [-1, 1] weights from the deterministic generator.
ThetaD random_theta(const NetworkConfig& config, std::uint64_t seed);
MatrixD random_input(const NetworkConfig& config, std::uint64_t seed);

// JSON serialization (real scalars): {"config": {...}, "layers": [[head...]],
// "X": [[...]]} with row-major matrices. X is optional on input.
std::string to_json(const ThetaD& theta, const MatrixD* x = nullptr);
ThetaD theta_from_json(const std::string& text, MatrixD* x_out = nullptr);

extern template Matrix<double> sa_layer_forward(const LayerWeights<double>&,
                                                const NetworkConfig&,
                                                const Matrix<double>&);
extern template Matrix<std::complex<double>> sa_layer_forward(
    const LayerWeights<std::complex<double>>&, const NetworkConfig&,
    const Matrix<std::complex<double>>&);
extern template Matrix<double> network_forward(const Theta<double>&,
                                               const Matrix<double>&, bool);
extern template Matrix<std::complex<double>> network_forward(
    const Theta<std::complex<double>>&, const Matrix<std::complex<double>>&, bool);
extern template Matrix<double> structural_form_forward(const Theta<double>&,
                                                       const Matrix<double>&);
extern template Matrix<std::complex<double>> structural_form_forward(
    const Theta<std::complex<double>>&, const Matrix<std::complex<double>>&);
extern template std::vector<StructuralDescriptor<double>>
build_structural_descriptors(const Theta<double>&);
extern template std::vector<StructuralDescriptor<std::complex<double>>>
build_structural_descriptors(const Theta<std::complex<double>>&);

}  // namespace allocatron::model
