#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "allocatron/common.hpp"
#include "allocatron/model.hpp"

namespace allocatron::lab {

using model::MatrixC;
using model::MatrixD;
using model::NetworkConfig;
using model::ThetaC;
using VectorC = Eigen::VectorXcd;

// Matrix with multiset(dim, lambda) rows, one per composition of lambda into
// dim non-negative parts (lexicographic, first part descending). Row entries
// are omega^{q_r}, normalized to unit Euclidean length.
MatrixD build_omega_matrix(int dim, int lambda, double omega = 2.0);

// Entrywise k-th power.
template <class Scalar>
model::Matrix<Scalar> hadamard_power(const model::Matrix<Scalar>& m, int power);

// Singular values in descending order.
std::vector<double> singular_values(const MatrixD& m);
std::vector<double> singular_values(const MatrixC& m);

// Count of singular values above rel_tol times the largest one.
int numerical_rank(const MatrixD& m, double rel_tol = 1e-9);
int numerical_rank(const MatrixC& m, double rel_tol = 1e-9);

// Builds V = build_omega_matrix(dim, lambda, omega) and checks that
// (V V^T)^{hadamard lambda} reaches full rank multiset(dim, lambda).
struct HadamardRankReport {
  int dim = 0;
  int lambda = 0;
  double omega = 2.0;
  int expected_rank = 0;
  int measured_rank = 0;
  std::vector<double> singular_values;
  bool pass = false;
};
HadamardRankReport verify_hadamard_rank(int dim, int lambda, double omega = 2.0,
                                        double rel_tol = 1e-9);

// Template vectors plus a balanced position partition. Positions are
// zero-based; the anchor must belong to part_a. Matricization rows assign
// template r to the anchor, columns assign template M/2 + c to the first
// position of part_b, and every other position receives the constant
// template (index M).
struct GridSpec {
  std::vector<VectorC> templates;  // M + 1 vectors of width entries each
  std::vector<int> part_a;
  std::vector<int> part_b;
  int anchor = 0;

  int num_templates() const { return static_cast<int>(templates.size()); }
  int m() const { return num_templates() - 1; }
};

struct Assignment {
  GridSpec grid;
  ThetaC theta;
};

// Explicit weight and template assignment realizing the rank certificate:
// given V with M/2 unit rows and (width - heads)/2 columns, produces M+1
// templates and a depth >= 3 parameter set whose anchor sub-matrix is
// proportional to (V V^T)^{hadamard 3^{depth-2}}. Requires odd head_dim and
// even seq_len.
Assignment construct_assignment(const MatrixD& v, const NetworkConfig& config);

// The M/2 x M/2 anchor sub-matrix: entry (r, c) is output coordinate
// output_index at the anchor position under the (r, c) template assignment.
MatrixC grid_submatrix(const ThetaC& theta, const GridSpec& grid,
                       int output_index = 0);

// numerical_rank of grid_submatrix; a certified lower bound on the separation
// rank of the network w.r.t. the grid's partition.
int grid_matricization_rank(const ThetaC& theta, const GridSpec& grid,
                            int output_index = 0, double rel_tol = 1e-9);

// Best single complex ratio measured / target (median over entries) and the
// worst entrywise deviation from exact proportionality, relative to the
// largest measured magnitude.
struct ProportionalityReport {
  std::complex<double> constant{0.0, 0.0};
  double max_rel_deviation = 0.0;
};
ProportionalityReport proportionality(const MatrixC& measured, const MatrixD& target);

// All balanced partitions (A, B) of {0, ..., seq_len-1} with the anchor in A.
std::vector<std::pair<std::vector<int>, std::vector<int>>>
enumerate_balanced_partitions(int seq_len, int anchor = 0);

}  // namespace allocatron::lab
