#include "allocatron/plan.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace allocatron::plan {

using nlohmann::json;

namespace {

void validate_fit(const fit::FitResult& f) {
  if (!std::isfinite(f.a) || !std::isfinite(f.b))
    throw Error(Error::Kind::InvalidArgument, "fit parameters must be finite");
  if (!(f.b > 0.0))
    throw Error(Error::Kind::InvalidArgument,
                "transition inversion requires a positive slope b");
}

// log of 12 L e^{2a+2bL}, strictly increasing in L for b > 0.
double log_transition_size(double depth, const fit::FitResult& f) {
  return std::log(12.0 * depth) + 2.0 * f.a + 2.0 * f.b * depth;
}

std::string num(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace

const char* verdict_name(Verdict verdict) {
  switch (verdict) {
    case Verdict::TooShallow: return "TooShallow";
    case Verdict::TooDeep: return "TooDeep";
    case Verdict::NearOptimal: return "NearOptimal";
  }
  return "Unknown";
}

double optimal_depth(double params, const fit::FitResult& fit_result) {
  validate_fit(fit_result);
  if (!(params > 0.0) || !std::isfinite(params))
    throw Error(Error::Kind::InvalidArgument, "params must be positive and finite");

  const double target = std::log(params);
  double lo = 1.0, hi = 1e4;
  if (target < log_transition_size(lo, fit_result))
    throw Error(Error::Kind::OutOfRange,
                "budget is below the depth-1 transition size");
  if (target > log_transition_size(hi, fit_result))
    throw Error(Error::Kind::OutOfRange,
                "budget exceeds the transition size at the depth-1e4 bracket");

  for (int it = 0; it < 200 && hi - lo > 1e-9; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (log_transition_size(mid, fit_result) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

ArchitectureSuggestion suggest_architecture(double params,
                                            const fit::FitResult& fit_result) {
  ArchitectureSuggestion s;
  s.budget = params;
  s.depth_raw = optimal_depth(params, fit_result);
  s.depth_opt = static_cast<int>(std::max<std::int64_t>(1, round_half_up(s.depth_raw)));
  s.width_from_budget = std::sqrt(params / (12.0 * s.depth_opt));
  s.width_from_fit = std::exp(fit_result.a + fit_result.b * s.depth_opt);
  const fit::TransitionSize t = fit::transition_size(s.depth_opt, fit_result);
  s.n_transition = t.n;
  s.dn = t.dn;
  return s;
}

AuditVerdict audit_architecture(int depth, int width, const fit::FitResult& fit_result) {
  validate_fit(fit_result);
  if (depth < 1 || width < 1)
    throw Error(Error::Kind::InvalidArgument, "depth and width must be >= 1");

  AuditVerdict audit;
  audit.params = 12.0 * depth * static_cast<double>(width) * width;
  const fit::TransitionSize t = fit::transition_size(depth, fit_result);
  audit.n_transition = t.n;
  audit.dn = t.dn;
  audit.margin = audit.params / t.n;
  audit.tol = t.dn / t.n;
  if (audit.margin > 1.0 + audit.tol)
    audit.verdict = Verdict::TooShallow;
  else if (audit.margin < 1.0 - audit.tol)
    audit.verdict = Verdict::TooDeep;
  else
    audit.verdict = Verdict::NearOptimal;
  return audit;
}

std::vector<CurvePoint> emit_transition_curve(const fit::FitResult& fit_result,
                                              int depth_min, int depth_max, int step) {
  validate_fit(fit_result);
  if (depth_min < 1 || depth_min > depth_max || depth_max > 200)
    throw Error(Error::Kind::InvalidArgument,
                "curve range must satisfy 1 <= depth_min <= depth_max <= 200");
  if (step < 1) throw Error(Error::Kind::InvalidArgument, "step must be >= 1");

  std::vector<CurvePoint> curve;
  for (int depth = depth_min; depth <= depth_max; depth += step) {
    const fit::TransitionSize t = fit::transition_size(depth, fit_result);
    curve.push_back({depth, t.n, t.dn});
  }
  return curve;
}

std::vector<TableRow> generate_table1(const fit::FitResult& fit_result,
                                      const std::vector<ModelSpec>& models) {
  std::vector<TableRow> rows;
  for (const ModelSpec& model : models) {
    TableRow row;
    row.model = model;
    if (model.depth && model.width) {
      row.budget = 12.0 * *model.depth * static_cast<double>(*model.width) *
                   *model.width;
      row.audit = audit_architecture(*model.depth, *model.width, fit_result);
    } else {
      row.budget = model.params;
    }
    row.suggestion = suggest_architecture(row.budget, fit_result);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ModelSpec> roster_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Error::Kind::Parse, std::string("invalid roster JSON: ") + e.what());
  }
  if (!doc.is_array())
    throw Error(Error::Kind::Parse, "roster JSON must be a list of models");
  std::vector<ModelSpec> models;
  try {
    for (const json& item : doc) {
      ModelSpec model;
      model.name = item.at("name").get<std::string>();
      model.params = item.at("params").get<double>();
      if (item.contains("depth")) model.depth = item.at("depth").get<int>();
      if (item.contains("width")) model.width = item.at("width").get<int>();
      if (!(model.params > 0.0))
        throw Error(Error::Kind::Parse, "model params must be positive");
      if (model.depth.has_value() != model.width.has_value())
        throw Error(Error::Kind::Parse,
                    "depth and width must be given together or omitted together");
      models.push_back(std::move(model));
    }
  } catch (const json::exception& e) {
    throw Error(Error::Kind::Parse, std::string("invalid roster JSON: ") + e.what());
  }
  return models;
}

std::vector<ModelSpec> load_roster(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Error::Kind::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return roster_from_json(ss.str());
}

std::string curve_to_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "L,N,dN\n";
  for (const CurvePoint& p : curve)
    out += std::to_string(p.depth) + "," + num(p.n) + "," + num(p.dn) + "\n";
  return out;
}

std::string table_to_csv(const std::vector<TableRow>& rows) {
  std::string out =
      "name,params,trained_depth,trained_width,depth_opt,depth_raw,"
      "width_from_budget,width_from_fit,verdict,margin\n";
  for (const TableRow& row : rows) {
    out += row.model.name + "," + num(row.model.params) + ",";
    out += row.model.depth ? std::to_string(*row.model.depth) : "";
    out += ",";
    out += row.model.width ? std::to_string(*row.model.width) : "";
    out += "," + std::to_string(row.suggestion.depth_opt) + "," +
           num(row.suggestion.depth_raw) + "," + num(row.suggestion.width_from_budget) +
           "," + num(row.suggestion.width_from_fit) + ",";
    if (row.audit) {
      out += verdict_name(row.audit->verdict);
      out += ",";
      out += num(row.audit->margin);
    } else {
      out += ",";
    }
    out += "\n";
  }
  return out;
}

std::string table_to_text(const std::vector<TableRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(14) << "model" << std::right << std::setw(12)
      << "params" << std::setw(9) << "trained" << std::setw(9) << "width"
      << std::setw(9) << "optimal" << std::setw(12) << "w(budget)" << std::setw(12)
      << "w(fit)" << "  verdict\n";
  for (const TableRow& row : rows) {
    out << std::left << std::setw(14) << row.model.name << std::right << std::setw(12)
        << std::setprecision(4) << row.model.params;
    if (row.model.depth)
      out << std::setw(9) << *row.model.depth << std::setw(9) << *row.model.width;
    else
      out << std::setw(9) << "-" << std::setw(9) << "-";
    out << std::setw(9) << row.suggestion.depth_opt << std::setw(12) << std::fixed
        << std::setprecision(1) << row.suggestion.width_from_budget << std::setw(12)
        << row.suggestion.width_from_fit;
    out.unsetf(std::ios::fixed);
    out << "  " << (row.audit ? verdict_name(row.audit->verdict) : "-") << "\n";
  }
  return out.str();
}

}  // namespace allocatron::plan
