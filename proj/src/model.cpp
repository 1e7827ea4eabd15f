#include "allocatron/model.hpp"

#include <json.hpp>

#include <limits>

namespace allocatron::model {

using nlohmann::json;

void NetworkConfig::validate() const {
  if (depth < 1) throw Error(Error::Kind::InvalidArgument, "depth must be >= 1");
  if (width < 1) throw Error(Error::Kind::InvalidArgument, "width must be >= 1");
  if (heads < 1) throw Error(Error::Kind::InvalidArgument, "heads must be >= 1");
  if (seq_len < 1) throw Error(Error::Kind::InvalidArgument, "seq_len must be >= 1");
  if (width % heads != 0)
    throw Error(Error::Kind::InvalidArgument, "heads must divide width");
}

namespace {

template <class Scalar>
void check_shapes(const LayerWeights<Scalar>& layer, const NetworkConfig& config) {
  const auto h = static_cast<std::size_t>(config.heads);
  if (layer.wk.size() != h || layer.wq.size() != h || layer.wv.size() != h ||
      layer.wo.size() != h)
    throw Error(Error::Kind::InvalidArgument, "layer must hold one matrix set per head");
  for (std::size_t i = 0; i < h; ++i) {
    const auto da = config.head_dim();
    if (layer.wk[i].rows() != da || layer.wk[i].cols() != config.width ||
        layer.wq[i].rows() != da || layer.wq[i].cols() != config.width ||
        layer.wv[i].rows() != da || layer.wv[i].cols() != config.width ||
        layer.wo[i].rows() != config.width || layer.wo[i].cols() != da)
      throw Error(Error::Kind::InvalidArgument, "weight matrix shape mismatch");
  }
}

}  // namespace

template <class Scalar>
Matrix<Scalar> sa_layer_forward(const LayerWeights<Scalar>& layer,
                                const NetworkConfig& config,
                                const Matrix<Scalar>& x) {
  config.validate();
  check_shapes(layer, config);
  if (x.rows() != config.width || x.cols() != config.seq_len)
    throw Error(Error::Kind::InvalidArgument, "input must be width x seq_len");

  Matrix<Scalar> y = Matrix<Scalar>::Zero(x.rows(), x.cols());
  for (int h = 0; h < config.heads; ++h) {
    const Matrix<Scalar> k = layer.wk[h] * x;
    const Matrix<Scalar> q = layer.wq[h] * x;
    const Matrix<Scalar> v = layer.wv[h] * x;
    // scores(i, j) = <q_i, k_j>, bilinear on purpose: complex runs use the
    // unconjugated pairing.
    const Matrix<Scalar> scores = q.transpose() * k;
    y.noalias() += layer.wo[h] * (v * scores.transpose());
  }
  return y;
}

template <class Scalar>
Matrix<Scalar> network_forward(const Theta<Scalar>& theta, const Matrix<Scalar>& x,
                               bool with_residual) {
  theta.config.validate();
  if (static_cast<int>(theta.layers.size()) != theta.config.depth)
    throw Error(Error::Kind::InvalidArgument, "layer count must equal depth");
  Matrix<Scalar> y = x;
  for (const auto& layer : theta.layers) {
    Matrix<Scalar> z = sa_layer_forward(layer, theta.config, y);
    if (with_residual) z += y;
    y = std::move(z);
  }
  return y;
}

template <class Scalar>
std::vector<StructuralDescriptor<Scalar>> build_structural_descriptors(
    const Theta<Scalar>& theta) {
  theta.config.validate();
  const int depth = theta.config.depth;
  if (depth > 3)
    throw Error(Error::Kind::DepthTooLarge,
                "structural form materializes H^((3^L-1)/2) chains; depth > 3 rejected");

  std::vector<StructuralDescriptor<Scalar>> current;
  for (int h = 0; h < theta.config.heads; ++h) {
    const auto& l0 = theta.layers[0];
    StructuralDescriptor<Scalar> d;
    d.b0 = l0.wo[h].transpose();
    d.m.emplace_back(l0.wv[h], l0.wk[h]);
    d.a0 = l0.wq[h];
    current.push_back(std::move(d));
  }

  // Each additional layer substitutes the previous expansion into the three
  // input slots of Y -> sum_h W_O W_V Y Y^T W_K^T W_Q Y. The first slot
  // donates its leading factor to the new B0, the middle slot is traversed in
  // transpose (swapping the A/B roles of its factors), and the query-side
  // junction collapses into the middle slot's final B factor.
  for (int l = 1; l < depth; ++l) {
    const auto& lw = theta.layers[l];
    std::vector<StructuralDescriptor<Scalar>> next;
    for (int h = 0; h < theta.config.heads; ++h) {
      const Matrix<Scalar> ov = lw.wo[h] * lw.wv[h];
      const Matrix<Scalar> kq = lw.wk[h].transpose() * lw.wq[h];
      for (const auto& da : current) {
        for (const auto& db : current) {
          for (const auto& dc : current) {
            StructuralDescriptor<Scalar> d;
            d.b0 = (ov * da.b0.transpose()).transpose();
            d.m = da.m;
            d.m.emplace_back(da.a0, db.a0);
            const Matrix<Scalar> g = db.b0 * kq * dc.b0.transpose();
            for (std::size_t c = db.m.size(); c-- > 0;) {
              if (c == 0)
                d.m.emplace_back(db.m[c].second, (g.transpose() * db.m[c].first).eval());
              else
                d.m.emplace_back(db.m[c].second, db.m[c].first);
            }
            for (const auto& mc : dc.m) d.m.push_back(mc);
            d.a0 = dc.a0;
            next.push_back(std::move(d));
          }
        }
      }
    }
    current = std::move(next);
  }
  return current;
}

template <class Scalar>
Matrix<Scalar> structural_form_forward(const Theta<Scalar>& theta,
                                       const Matrix<Scalar>& x) {
  if (x.rows() != theta.config.width || x.cols() != theta.config.seq_len)
    throw Error(Error::Kind::InvalidArgument, "input must be width x seq_len");
  const auto descriptors = build_structural_descriptors(theta);
  const Matrix<Scalar> gram = x * x.transpose();
  Matrix<Scalar> y = Matrix<Scalar>::Zero(x.rows(), x.cols());
  for (const auto& d : descriptors) {
    Matrix<Scalar> p = d.a0 * x;
    for (std::size_t c = d.m.size(); c-- > 0;) {
      const auto& [a, b] = d.m[c];
      p = (a * gram * b.transpose()) * p;
    }
    y.noalias() += d.b0.transpose() * p;
  }
  return y;
}

std::uint64_t count_nonembedding_params(std::uint64_t depth, std::uint64_t width) {
  if (depth == 0 || width == 0)
    throw Error(Error::Kind::InvalidArgument, "depth and width must be positive");
  unsigned __int128 v = static_cast<unsigned __int128>(12) * depth;
  v *= width;
  v *= width;
  if (v > std::numeric_limits<std::uint64_t>::max())
    throw Error(Error::Kind::Overflow, "parameter count exceeds uint64");
  return static_cast<std::uint64_t>(v);
}

ThetaD random_theta(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  auto fill = [&rng](Eigen::Index rows, Eigen::Index cols) {
    MatrixD m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.next_symmetric();
    return m;
  };
  ThetaD theta;
  theta.config = config;
  theta.layers.resize(config.depth);
  for (auto& layer : theta.layers) {
    for (int h = 0; h < config.heads; ++h) {
      layer.wk.push_back(fill(config.head_dim(), config.width));
      layer.wq.push_back(fill(config.head_dim(), config.width));
      layer.wv.push_back(fill(config.head_dim(), config.width));
      layer.wo.push_back(fill(config.width, config.head_dim()));
    }
  }
  return theta;
}

MatrixD random_input(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  MatrixD x(config.width, config.seq_len);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.next_symmetric();
  return x;
}

namespace {

json matrix_to_json(const MatrixD& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixD matrix_from_json(const json& rows, const char* what) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array())
    throw Error(Error::Kind::Parse, std::string(what) + ": expected array of rows");
  const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index nc = static_cast<Eigen::Index>(rows[0].size());
  MatrixD m(nr, nc);
  for (Eigen::Index i = 0; i < nr; ++i) {
    const auto& row = rows[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != nc)
      throw Error(Error::Kind::Parse, std::string(what) + ": ragged rows");
    for (Eigen::Index j = 0; j < nc; ++j) m(i, j) = row[j].get<double>();
  }
  return m;
}

}  // namespace

std::string to_json(const ThetaD& theta, const MatrixD* x) {
  theta.config.validate();
  json doc;
  doc["config"] = {{"depth", theta.config.depth},
                   {"width", theta.config.width},
                   {"heads", theta.config.heads},
                   {"seq_len", theta.config.seq_len}};
  json layers = json::array();
  for (const auto& layer : theta.layers) {
    json heads = json::array();
    for (int h = 0; h < theta.config.heads; ++h) {
      heads.push_back({{"WK", matrix_to_json(layer.wk[h])},
                       {"WQ", matrix_to_json(layer.wq[h])},
                       {"WV", matrix_to_json(layer.wv[h])},
                       {"WO", matrix_to_json(layer.wo[h])}});
    }
    layers.push_back(std::move(heads));
  }
  doc["layers"] = std::move(layers);
  if (x != nullptr) doc["X"] = matrix_to_json(*x);
  return doc.dump(2) + "\n";
}

ThetaD theta_from_json(const std::string& text, MatrixD* x_out) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Error::Kind::Parse, std::string("invalid json: ") + e.what());
  }
  ThetaD theta;
  try {
    const auto& cfg = doc.at("config");
    theta.config.depth = cfg.at("depth").get<int>();
    theta.config.width = cfg.at("width").get<int>();
    theta.config.heads = cfg.at("heads").get<int>();
    theta.config.seq_len = cfg.at("seq_len").get<int>();
    theta.config.validate();
    for (const auto& layer_doc : doc.at("layers")) {
      LayerWeights<double> layer;
      for (const auto& head : layer_doc) {
        layer.wk.push_back(matrix_from_json(head.at("WK"), "WK"));
        layer.wq.push_back(matrix_from_json(head.at("WQ"), "WQ"));
        layer.wv.push_back(matrix_from_json(head.at("WV"), "WV"));
        layer.wo.push_back(matrix_from_json(head.at("WO"), "WO"));
      }
      theta.layers.push_back(std::move(layer));
    }
    if (x_out != nullptr && doc.contains("X"))
      *x_out = matrix_from_json(doc.at("X"), "X");
  } catch (const json::exception& e) {
    throw Error(Error::Kind::Parse, std::string("malformed document: ") + e.what());
  }
  if (static_cast<int>(theta.layers.size()) != theta.config.depth)
    throw Error(Error::Kind::Parse, "layer count does not match depth");
  return theta;
}

template Matrix<double> sa_layer_forward(const LayerWeights<double>&,
                                         const NetworkConfig&, const Matrix<double>&);
template Matrix<std::complex<double>> sa_layer_forward(
    const LayerWeights<std::complex<double>>&, const NetworkConfig&,
    const Matrix<std::complex<double>>&);
template Matrix<double> network_forward(const Theta<double>&, const Matrix<double>&,
                                        bool);
template Matrix<std::complex<double>> network_forward(
    const Theta<std::complex<double>>&, const Matrix<std::complex<double>>&, bool);
template Matrix<double> structural_form_forward(const Theta<double>&,
                                                const Matrix<double>&);
template Matrix<std::complex<double>> structural_form_forward(
    const Theta<std::complex<double>>&, const Matrix<std::complex<double>>&);
template std::vector<StructuralDescriptor<double>> build_structural_descriptors(
    const Theta<double>&);
template std::vector<StructuralDescriptor<std::complex<double>>>
build_structural_descriptors(const Theta<std::complex<double>>&);

}  // namespace allocatron::model
