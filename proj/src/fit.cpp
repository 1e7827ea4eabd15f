#include "allocatron/fit.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace allocatron::fit {

using nlohmann::json;

namespace {

void validate_record(const LossRecord& r) {
  if (r.depth < 1 || r.width < 1)
    throw Error(Error::Kind::InvalidArgument, "loss record needs depth, width >= 1");
  if (!std::isfinite(r.test_loss))
    throw Error(Error::Kind::NonFinite, "test_loss must be finite");
  if (!(r.loss_std >= 0.0) || !std::isfinite(r.loss_std))
    throw Error(Error::Kind::InvalidArgument, "loss_std must be >= 0");
}

void validate_point(const TransitionPoint& p) {
  if (p.depth < 1)
    throw Error(Error::Kind::InvalidArgument, "transition point needs depth >= 1");
  if (!(p.width > 0.0) || !std::isfinite(p.width))
    throw Error(Error::Kind::InvalidArgument, "transition width must be positive");
  if (!(p.width_err > 0.0) || !std::isfinite(p.width_err))
    throw Error(Error::Kind::InvalidArgument, "width_err must be positive");
}

double log_param_count(int depth, double width) {
  return std::log(12.0 * depth * width * width);
}

// Piecewise-linear value of (xs, ys) at x, clamped to the end values.
double interp_clamped(double x, const std::vector<double>& xs,
                      const std::vector<double>& ys) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    if (xs[i] <= x && x <= xs[i + 1]) {
      const double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
      return ys[i] * (1.0 - t) + ys[i + 1] * t;
    }
  }
  return ys.back();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    const std::string field =
        line.substr(start, comma == std::string::npos ? std::string::npos
                                                      : comma - start);
    const auto begin = field.find_first_not_of(" \t\r");
    const auto end = field.find_last_not_of(" \t\r");
    fields.push_back(begin == std::string::npos
                         ? std::string()
                         : field.substr(begin, end - begin + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

int parse_int(const std::string& s) {
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(s, &used);
  } catch (const std::exception&) {
    throw Error(Error::Kind::Parse, "expected an integer, got '" + s + "'");
  }
  if (used != s.size())
    throw Error(Error::Kind::Parse, "expected an integer, got '" + s + "'");
  return value;
}

double parse_real(const std::string& s) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    throw Error(Error::Kind::Parse, "expected a number, got '" + s + "'");
  }
  if (used != s.size())
    throw Error(Error::Kind::Parse, "expected a number, got '" + s + "'");
  return value;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Error::Kind::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TransitionPoint estimate_transition(const std::vector<LossRecord>& shallow,
                                    const std::vector<LossRecord>& deep,
                                    double k_sigma) {
  if (!(k_sigma > 0.0) || !std::isfinite(k_sigma))
    throw Error(Error::Kind::InvalidArgument, "k_sigma must be positive");
  if (shallow.size() < 3 || deep.size() < 3)
    throw Error(Error::Kind::InsufficientData,
                "need at least 3 samples per curve");
  for (const LossRecord& r : shallow) validate_record(r);
  for (const LossRecord& r : deep) validate_record(r);
  for (const LossRecord& r : shallow)
    if (r.depth != shallow.front().depth)
      throw Error(Error::Kind::InvalidArgument,
                  "shallow records must share one depth");
  for (const LossRecord& r : deep)
    if (r.depth != deep.front().depth)
      throw Error(Error::Kind::InvalidArgument, "deep records must share one depth");
  if (deep.front().depth <= shallow.front().depth)
    throw Error(Error::Kind::InvalidArgument,
                "deep curve must be deeper than the shallow curve");

  auto by_width = [](const LossRecord& lhs, const LossRecord& rhs) {
    return lhs.width < rhs.width;
  };
  std::vector<LossRecord> sh = shallow;
  std::vector<LossRecord> dp = deep;
  std::sort(sh.begin(), sh.end(), by_width);
  std::sort(dp.begin(), dp.end(), by_width);
  for (std::size_t i = 0; i + 1 < sh.size(); ++i)
    if (sh[i].width == sh[i + 1].width)
      throw Error(Error::Kind::InvalidArgument, "duplicate shallow width");
  for (std::size_t i = 0; i + 1 < dp.size(); ++i)
    if (dp[i].width == dp[i + 1].width)
      throw Error(Error::Kind::InvalidArgument, "duplicate deep width");

  std::vector<double> deep_x, deep_loss, deep_std;
  for (const LossRecord& r : dp) {
    deep_x.push_back(log_param_count(r.depth, r.width));
    deep_loss.push_back(r.test_loss);
    deep_std.push_back(r.loss_std);
  }

  std::vector<double> diff(sh.size()), comb(sh.size());
  std::ptrdiff_t w2_idx = -1;
  for (std::size_t i = 0; i < sh.size(); ++i) {
    const double x = log_param_count(sh[i].depth, sh[i].width);
    const double dl = interp_clamped(x, deep_x, deep_loss);
    const double ds = interp_clamped(x, deep_x, deep_std);
    diff[i] = sh[i].test_loss - dl;
    comb[i] = std::hypot(sh[i].loss_std, ds);
    if (w2_idx < 0 && diff[i] > k_sigma * comb[i])
      w2_idx = static_cast<std::ptrdiff_t>(i);
  }
  if (w2_idx < 0)
    throw Error(Error::Kind::NoTransition,
                "no statistically significant divergence in the sampled range");
  if (w2_idx == 0)
    throw Error(Error::Kind::InsufficientData,
                "curves diverge from the first sampled width; no left neighbor");
  if (std::abs(diff[w2_idx - 1]) > k_sigma * comb[w2_idx - 1])
    throw Error(Error::Kind::InsufficientData,
                "sample left of the divergence is not statistically indistinguishable");

  TransitionPoint point;
  point.depth = sh.front().depth;
  const double w1 = sh[w2_idx - 1].width;
  const double w2 = sh[w2_idx].width;
  point.width = 0.5 * (w1 + w2);
  point.width_err = w2 - w1;
  return point;
}

FitResult weighted_linear_fit(const std::vector<TransitionPoint>& points) {
  if (points.size() < 3)
    throw Error(Error::Kind::InsufficientData, "fit needs at least 3 points");
  for (const TransitionPoint& p : points) validate_point(p);
  bool all_equal = true;
  for (const TransitionPoint& p : points)
    if (p.depth != points.front().depth) all_equal = false;
  if (all_equal)
    throw Error(Error::Kind::Degenerate, "all depths equal; slope is undetermined");

  double s = 0.0, sx = 0.0, sxx = 0.0, sy = 0.0, sxy = 0.0;
  for (const TransitionPoint& p : points) {
    const double sigma = p.width_err / p.width;
    const double weight = 1.0 / (sigma * sigma);
    const double x = p.depth;
    const double y = std::log(p.width);
    s += weight;
    sx += weight * x;
    sxx += weight * x * x;
    sy += weight * y;
    sxy += weight * x * y;
  }
  const double delta = s * sxx - sx * sx;
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw Error(Error::Kind::Degenerate, "singular normal equations");

  FitResult fit;
  fit.a = (sxx * sy - sx * sxy) / delta;
  fit.b = (s * sxy - sx * sy) / delta;
  fit.var_a = sxx / delta;
  fit.var_b = s / delta;
  fit.cov_ab = -sx / delta;
  fit.dof = static_cast<int>(points.size()) - 2;

  double chi2 = 0.0, ss_tot = 0.0;
  const double y_bar = sy / s;
  for (const TransitionPoint& p : points) {
    const double sigma = p.width_err / p.width;
    const double weight = 1.0 / (sigma * sigma);
    const double y = std::log(p.width);
    const double r = y - (fit.a + fit.b * p.depth);
    chi2 += weight * r * r;
    ss_tot += weight * (y - y_bar) * (y - y_bar);
  }
  fit.chi2_red = chi2 / fit.dof;
  fit.r2 = ss_tot > 0.0 ? 1.0 - chi2 / ss_tot : 1.0;
  return fit;
}

TransitionSize transition_size(int depth, const FitResult& fit) {
  if (depth < 1) throw Error(Error::Kind::InvalidArgument, "depth must be >= 1");
  const double l = depth;
  const double radicand = fit.var_a + l * l * fit.var_b + 2.0 * l * fit.cov_ab;
  if (radicand < 0.0)
    throw Error(Error::Kind::NegativeVariance,
                "propagated variance is negative; covariance matrix is invalid");
  TransitionSize size;
  size.n = 12.0 * l * std::exp(2.0 * fit.a + 2.0 * fit.b * l);
  size.dn = 2.0 * size.n * std::sqrt(radicand);
  return size;
}

std::vector<LossRecord> parse_loss_csv(const std::string& text) {
  const auto rows = csv_rows(text);
  if (rows.empty()) throw Error(Error::Kind::Parse, "empty loss CSV");
  const auto& header = rows.front();
  bool with_std = false;
  if (header == std::vector<std::string>{"depth", "width", "test_loss", "loss_std"})
    with_std = true;
  else if (header != std::vector<std::string>{"depth", "width", "test_loss"})
    throw Error(Error::Kind::Parse,
                "loss CSV header must be depth,width,test_loss[,loss_std]");

  std::vector<LossRecord> records;
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != header.size())
      throw Error(Error::Kind::Parse, "loss CSV row has wrong field count");
    LossRecord r;
    r.depth = parse_int(row[0]);
    r.width = parse_int(row[1]);
    r.test_loss = parse_real(row[2]);
    if (with_std && !row[3].empty()) r.loss_std = parse_real(row[3]);
    validate_record(r);
    if (!seen.insert({r.depth, r.width}).second)
      throw Error(Error::Kind::Parse, "duplicate (depth, width) in loss CSV");
    records.push_back(r);
  }
  return records;
}

std::vector<LossRecord> load_loss_csv(const std::string& path) {
  return parse_loss_csv(read_file(path));
}

std::vector<TransitionPoint> parse_transition_csv(const std::string& text) {
  const auto rows = csv_rows(text);
  if (rows.empty()) throw Error(Error::Kind::Parse, "empty transition CSV");
  if (rows.front() != std::vector<std::string>{"depth", "width", "width_err"})
    throw Error(Error::Kind::Parse,
                "transition CSV header must be depth,width,width_err");
  std::vector<TransitionPoint> points;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != 3)
      throw Error(Error::Kind::Parse, "transition CSV row has wrong field count");
    TransitionPoint p;
    p.depth = parse_int(row[0]);
    p.width = parse_real(row[1]);
    p.width_err = parse_real(row[2]);
    validate_point(p);
    points.push_back(p);
  }
  return points;
}

std::vector<TransitionPoint> load_transition_csv(const std::string& path) {
  return parse_transition_csv(read_file(path));
}

std::string to_json(const FitResult& fit) {
  json doc;
  doc["a"] = fit.a;
  doc["b"] = fit.b;
  doc["cov"] = {{fit.var_a, fit.cov_ab}, {fit.cov_ab, fit.var_b}};
  doc["chi2_red"] = fit.chi2_red;
  doc["r2"] = fit.r2;
  doc["dof"] = fit.dof;
  return doc.dump(2) + "\n";
}

FitResult fit_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Error::Kind::Parse, std::string("invalid fit JSON: ") + e.what());
  }
  try {
    FitResult fit;
    fit.a = doc.at("a").get<double>();
    fit.b = doc.at("b").get<double>();
    const auto& cov = doc.at("cov");
    if (!cov.is_array() || cov.size() != 2 || cov[0].size() != 2 || cov[1].size() != 2)
      throw Error(Error::Kind::Parse, "fit JSON cov must be a 2x2 matrix");
    fit.var_a = cov[0][0].get<double>();
    fit.cov_ab = cov[0][1].get<double>();
    fit.var_b = cov[1][1].get<double>();
    if (cov[1][0].get<double>() != fit.cov_ab)
      throw Error(Error::Kind::Parse, "fit JSON cov must be symmetric");
    fit.chi2_red = doc.value("chi2_red", 0.0);
    fit.r2 = doc.value("r2", 0.0);
    fit.dof = doc.value("dof", 0);
    return fit;
  } catch (const json::exception& e) {
    throw Error(Error::Kind::Parse, std::string("invalid fit JSON: ") + e.what());
  }
}

}  // namespace allocatron::fit
