#include "allocatron/lab.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>

namespace allocatron::lab {

namespace {

using std::complex;

void enumerate_compositions(int total, int parts, std::vector<int>& prefix,
                            std::vector<std::vector<int>>& out) {
  if (parts == 1) {
    prefix.push_back(total);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int first = total; first >= 0; --first) {
    prefix.push_back(first);
    enumerate_compositions(total - first, parts - 1, prefix, out);
    prefix.pop_back();
  }
}

std::uint64_t checked_multiset(int dim, int lambda, std::uint64_t cap,
                               const char* what) {
  const double log3_cap = log3(static_cast<double>(cap));
  if (log3_multiset_coefficient(dim, lambda) > log3_cap + 1.0)
    throw Error(Error::Kind::TooLarge, what);
  const std::uint64_t count =
      multiset_coefficient(static_cast<std::uint64_t>(dim),
                           static_cast<std::uint64_t>(lambda));
  if (count > cap) throw Error(Error::Kind::TooLarge, what);
  return count;
}

template <class Scalar>
std::vector<double> singular_values_impl(const model::Matrix<Scalar>& m) {
  if (!m.allFinite())
    throw Error(Error::Kind::NonFinite, "matrix has non-finite entries");
  if (m.rows() == 0 || m.cols() == 0) return {};
  Eigen::VectorXd sv;
  if (std::min(m.rows(), m.cols()) > 64) {
    Eigen::BDCSVD<model::Matrix<Scalar>> svd(m);
    sv = svd.singularValues();
  } else {
    Eigen::JacobiSVD<model::Matrix<Scalar>> svd(m);
    sv = svd.singularValues();
  }
  return std::vector<double>(sv.data(), sv.data() + sv.size());
}

int rank_from_singulars(const std::vector<double>& sv, double rel_tol) {
  if (!(rel_tol > 0.0) || !std::isfinite(rel_tol))
    throw Error(Error::Kind::InvalidArgument, "rel_tol must be positive and finite");
  if (sv.empty() || sv.front() == 0.0) return 0;
  const double cut = rel_tol * sv.front();
  return static_cast<int>(std::count_if(sv.begin(), sv.end(),
                                        [cut](double s) { return s > cut; }));
}

}  // namespace

MatrixD build_omega_matrix(int dim, int lambda, double omega) {
  if (dim < 1) throw Error(Error::Kind::InvalidArgument, "dim must be >= 1");
  if (lambda < 0) throw Error(Error::Kind::InvalidArgument, "lambda must be >= 0");
  if (!(omega > 1.0) || !std::isfinite(omega))
    throw Error(Error::Kind::InvalidArgument, "omega must be a finite real > 1");
  const std::uint64_t rows =
      checked_multiset(dim, lambda, 10000, "omega matrix would exceed 10^4 rows");

  std::vector<std::vector<int>> comps;
  comps.reserve(rows);
  std::vector<int> prefix;
  enumerate_compositions(lambda, dim, prefix, comps);

  MatrixD v(static_cast<Eigen::Index>(rows), dim);
  for (std::size_t r = 0; r < comps.size(); ++r) {
    double norm_sq = 0.0;
    for (int c = 0; c < dim; ++c) {
      const double entry = std::pow(omega, comps[r][c]);
      v(static_cast<Eigen::Index>(r), c) = entry;
      norm_sq += entry * entry;
    }
    v.row(static_cast<Eigen::Index>(r)) /= std::sqrt(norm_sq);
  }
  return v;
}

template <class Scalar>
model::Matrix<Scalar> hadamard_power(const model::Matrix<Scalar>& m, int power) {
  if (power < 1) throw Error(Error::Kind::InvalidArgument, "power must be >= 1");
  model::Matrix<Scalar> out = m;
  for (int k = 1; k < power; ++k) out = out.cwiseProduct(m);
  return out;
}

template model::Matrix<double> hadamard_power(const model::Matrix<double>&, int);
template model::Matrix<complex<double>> hadamard_power(
    const model::Matrix<complex<double>>&, int);

std::vector<double> singular_values(const MatrixD& m) {
  return singular_values_impl(m);
}

std::vector<double> singular_values(const MatrixC& m) {
  return singular_values_impl(m);
}

int numerical_rank(const MatrixD& m, double rel_tol) {
  return rank_from_singulars(singular_values(m), rel_tol);
}

int numerical_rank(const MatrixC& m, double rel_tol) {
  return rank_from_singulars(singular_values(m), rel_tol);
}

HadamardRankReport verify_hadamard_rank(int dim, int lambda, double omega,
                                        double rel_tol) {
  if (lambda < 1) throw Error(Error::Kind::InvalidArgument, "lambda must be >= 1");
  checked_multiset(dim, lambda, 512, "hadamard rank check capped at 512 rows");
  const MatrixD v = build_omega_matrix(dim, lambda, omega);
  const MatrixD gram = v * v.transpose();

  HadamardRankReport report;
  report.dim = dim;
  report.lambda = lambda;
  report.omega = omega;
  report.expected_rank = static_cast<int>(v.rows());
  report.singular_values = singular_values(hadamard_power(gram, lambda));
  report.measured_rank = rank_from_singulars(report.singular_values, rel_tol);
  report.pass = report.measured_rank == report.expected_rank;
  return report;
}

Assignment construct_assignment(const MatrixD& v, const NetworkConfig& config) {
  config.validate();
  const int depth = config.depth;
  const int d_x = config.width;
  const int heads = config.heads;
  const int n = config.seq_len;
  const int d_a = config.head_dim();

  if (depth < 3)
    throw Error(Error::Kind::InvalidArgument, "assignment requires depth >= 3");
  if (d_a % 2 == 0)
    throw Error(Error::Kind::InvalidArgument, "assignment requires odd head_dim");
  if (n % 2 != 0)
    throw Error(Error::Kind::InvalidArgument, "assignment requires even seq_len");
  const int half = (d_a - 1) / 2;
  if (v.cols() != static_cast<Eigen::Index>(heads) * half)
    throw Error(Error::Kind::InvalidArgument,
                "V must have heads * (head_dim - 1) / 2 columns");
  if (v.rows() < 1) throw Error(Error::Kind::InvalidArgument, "V must be non-empty");
  for (Eigen::Index r = 0; r < v.rows(); ++r)
    if (std::abs(v.row(r).norm() - 1.0) > 1e-6)
      throw Error(Error::Kind::InvalidArgument, "V rows must be unit-normalized");

  const int m_half = static_cast<int>(v.rows());
  const int m = 2 * m_half;
  const complex<double> one(1.0, 0.0);
  const complex<double> imag(0.0, 1.0);

  Assignment out;
  out.grid.templates.assign(m + 1, VectorC::Zero(d_x));
  for (int t = 1; t <= m + 1; ++t) {
    VectorC& x = out.grid.templates[t - 1];
    for (int j = 1; j <= d_x; ++j) {
      const int h = (j - 1) / d_a + 1;
      const int al = (j - 1) % d_a + 1;
      if (al == d_a) {
        x(j - 1) = one;
      } else if (al <= half) {
        if (t <= m_half) x(j - 1) = v(t - 1, (h - 1) * half + al - 1);
      } else {
        if (m_half < t && t <= m)
          x(j - 1) = v(t - 1 - m_half, (h - 1) * half + (al - half) - 1);
      }
    }
  }
  out.grid.part_a.resize(n / 2);
  out.grid.part_b.resize(n / 2);
  for (int pos = 0; pos < n / 2; ++pos) {
    out.grid.part_a[pos] = pos;
    out.grid.part_b[pos] = n / 2 + pos;
  }
  out.grid.anchor = 0;

  out.theta.config = config;
  out.theta.layers.resize(depth);
  for (int l = 1; l <= depth; ++l) {
    model::LayerWeights<complex<double>>& layer = out.theta.layers[l - 1];
    layer.wk.assign(heads, MatrixC::Zero(d_a, d_x));
    layer.wq.assign(heads, MatrixC::Zero(d_a, d_x));
    layer.wv.assign(heads, MatrixC::Zero(d_a, d_x));
    layer.wo.assign(heads, MatrixC::Zero(d_x, d_a));
    for (int h = 1; h <= heads; ++h) {
      MatrixC& wk = layer.wk[h - 1];
      MatrixC& wq = layer.wq[h - 1];
      MatrixC& wv = layer.wv[h - 1];
      MatrixC& wo = layer.wo[h - 1];
      const int base = (h - 1) * d_a;
      for (int al = 1; al <= d_a; ++al) wo(base + al - 1, al - 1) = one;
      if (l == 1) {
        wk(0, base + d_a - 1) = one;
        wq(0, base + d_a - 1) = one;
        for (int al = 1; al <= half; ++al) {
          wv(al - 1, base + al - 1) = one;
          wv(al - 1, base + half + al - 1) = imag;
        }
        for (int al = half + 1; al < d_a; ++al) {
          const int alp = al - half;
          wv(al - 1, base + alp - 1) = -one;
          wv(al - 1, base + half + alp - 1) = -imag;
          wv(al - 1, base + d_a - 1) = one / static_cast<double>(n);
        }
        wv(d_a - 1, base + d_a - 1) = one / static_cast<double>(n);
      } else if (l == 2) {
        for (int al = 1; al <= half; ++al) {
          wk(al - 1, base + al - 1) = one;
          wq(al - 1, base + al - 1) = one;
        }
        for (int al = 1; al <= d_a; ++al) wv(al - 1, base + al - 1) = one;
      } else {
        for (int j = 1; j <= d_x; ++j)
          if (j % d_a != 0) {
            wk(0, j - 1) = one;
            wq(0, j - 1) = one;
          }
        if (l < depth) {
          for (int al = 1; al <= d_a; ++al) wv(al - 1, base + al - 1) = one;
        } else {
          for (int al = 1; al <= d_a; ++al) wv(al - 1, base + d_a - 1) = imag;
        }
      }
    }
  }
  return out;
}

MatrixC grid_submatrix(const ThetaC& theta, const GridSpec& grid, int output_index) {
  const int n = theta.config.seq_len;
  const int d_x = theta.config.width;
  const int m = grid.m();
  if (m < 2 || m % 2 != 0)
    throw Error(Error::Kind::InvalidArgument,
                "grid needs an even template count M >= 2 plus the constant template");
  const int m_half = m / 2;
  if (m_half > 256)
    throw Error(Error::Kind::TooLarge, "matricization capped at M/2 <= 256");
  if (static_cast<int>(grid.part_a.size()) != n / 2 ||
      static_cast<int>(grid.part_b.size()) != n - n / 2)
    throw Error(Error::Kind::InvalidArgument, "partition must cover all positions");
  if (std::find(grid.part_a.begin(), grid.part_a.end(), grid.anchor) ==
      grid.part_a.end())
    throw Error(Error::Kind::InvalidArgument, "anchor must belong to part_a");
  for (const VectorC& t : grid.templates)
    if (t.size() != d_x)
      throw Error(Error::Kind::InvalidArgument, "template length must equal width");
  if (output_index < 0 || output_index >= d_x)
    throw Error(Error::Kind::InvalidArgument, "output_index out of range");

  MatrixC base(d_x, n);
  for (int pos = 0; pos < n; ++pos) base.col(pos) = grid.templates[m];

  MatrixC sub(m_half, m_half);
  for (int r = 0; r < m_half; ++r) {
    for (int c = 0; c < m_half; ++c) {
      MatrixC x = base;
      x.col(grid.anchor) = grid.templates[r];
      x.col(grid.part_b.front()) = grid.templates[m_half + c];
      const MatrixC y = model::network_forward(theta, x);
      sub(r, c) = y(output_index, grid.anchor);
    }
  }
  return sub;
}

int grid_matricization_rank(const ThetaC& theta, const GridSpec& grid,
                            int output_index, double rel_tol) {
  return numerical_rank(grid_submatrix(theta, grid, output_index), rel_tol);
}

ProportionalityReport proportionality(const MatrixC& measured, const MatrixD& target) {
  if (measured.rows() != target.rows() || measured.cols() != target.cols())
    throw Error(Error::Kind::InvalidArgument, "shape mismatch");
  const double scale = measured.cwiseAbs().maxCoeff();
  ProportionalityReport report;
  if (scale == 0.0) return report;

  std::vector<double> re, im;
  for (Eigen::Index i = 0; i < measured.rows(); ++i)
    for (Eigen::Index j = 0; j < measured.cols(); ++j) {
      if (target(i, j) == 0.0) continue;
      const std::complex<double> ratio = measured(i, j) / target(i, j);
      re.push_back(ratio.real());
      im.push_back(ratio.imag());
    }
  if (re.empty())
    throw Error(Error::Kind::Degenerate, "target matrix is identically zero");

  auto median = [](std::vector<double>& xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t mid = xs.size() / 2;
    return xs.size() % 2 == 1 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
  };
  report.constant = {median(re), median(im)};
  report.max_rel_deviation =
      (measured - report.constant * target.cast<std::complex<double>>())
          .cwiseAbs()
          .maxCoeff() /
      scale;
  return report;
}

std::vector<std::pair<std::vector<int>, std::vector<int>>>
enumerate_balanced_partitions(int seq_len, int anchor) {
  if (seq_len < 2 || seq_len % 2 != 0)
    throw Error(Error::Kind::InvalidArgument, "seq_len must be a positive even number");
  if (seq_len > 12)
    throw Error(Error::Kind::TooLarge, "partition enumeration capped at seq_len 12");
  if (anchor < 0 || anchor >= seq_len)
    throw Error(Error::Kind::InvalidArgument, "anchor out of range");

  std::vector<int> rest;
  for (int pos = 0; pos < seq_len; ++pos)
    if (pos != anchor) rest.push_back(pos);

  const int pick = seq_len / 2 - 1;
  std::vector<std::pair<std::vector<int>, std::vector<int>>> out;
  std::vector<int> idx(pick);
  for (int i = 0; i < pick; ++i) idx[i] = i;
  while (true) {
    std::vector<int> a = {anchor};
    std::vector<bool> taken(rest.size(), false);
    for (int i : idx) {
      a.push_back(rest[i]);
      taken[i] = true;
    }
    std::sort(a.begin(), a.end());
    std::vector<int> b;
    for (std::size_t i = 0; i < rest.size(); ++i)
      if (!taken[i]) b.push_back(rest[i]);
    out.emplace_back(std::move(a), std::move(b));

    if (pick == 0) break;
    int i = pick - 1;
    while (i >= 0 && idx[i] == static_cast<int>(rest.size()) - pick + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < pick; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

}  // namespace allocatron::lab
