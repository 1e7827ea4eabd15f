#include <CLI11.hpp>
#include <json.hpp>

#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "allocatron/bounds.hpp"
#include "allocatron/common.hpp"
#include "allocatron/data.hpp"
#include "allocatron/fit.hpp"
#include "allocatron/lab.hpp"
#include "allocatron/model.hpp"
#include "allocatron/plan.hpp"

namespace {

using nlohmann::json;
namespace al = allocatron;

std::string fmt(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw al::Error(al::Error::Kind::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

al::fit::FitResult resolve_fit(const std::string& source) {
  if (source == "paper") return al::data::paper_fit();
  return al::fit::fit_from_json(read_file(source));
}

std::vector<al::fit::TransitionPoint> resolve_transitions(const std::string& source) {
  if (source == "bundled") return al::data::resolve_transitions();
  return al::fit::load_transition_csv(source);
}

std::vector<al::plan::ModelSpec> resolve_roster(const std::string& source) {
  if (source == "bundled") return al::data::resolve_roster();
  return al::plan::load_roster(source);
}

al::model::ThetaC to_complex(const al::model::ThetaD& theta) {
  al::model::ThetaC out;
  out.config = theta.config;
  out.layers.resize(theta.layers.size());
  for (std::size_t l = 0; l < theta.layers.size(); ++l) {
    for (const auto& m : theta.layers[l].wk)
      out.layers[l].wk.push_back(m.cast<std::complex<double>>());
    for (const auto& m : theta.layers[l].wq)
      out.layers[l].wq.push_back(m.cast<std::complex<double>>());
    for (const auto& m : theta.layers[l].wv)
      out.layers[l].wv.push_back(m.cast<std::complex<double>>());
    for (const auto& m : theta.layers[l].wo)
      out.layers[l].wo.push_back(m.cast<std::complex<double>>());
  }
  return out;
}

struct Emitter {
  const std::string* out_path = nullptr;

  void operator()(const std::string& text) const {
    std::cout << text;
    if (out_path != nullptr && !out_path->empty()) {
      std::ofstream out(*out_path, std::ios::binary);
      if (!out) throw al::Error(al::Error::Kind::Io, "cannot write " + *out_path);
      out << text;
    }
  }
};

json bound_to_json_obj(const al::bounds::BoundEstimate& est) {
  return json::parse(al::bounds::to_json(est));
}

std::string bound_to_text(const al::bounds::BoundEstimate& est) {
  std::string out;
  out += std::string("regime: ") + al::bounds::regime_name(est.regime) + "\n";
  out += "log3 lower bound: " + fmt(est.log3_lower) + "\n";
  out += "log3 upper bound: " + fmt(est.log3_upper) + "\n";
  out += "raw lower (before clamping): " + fmt(est.raw_lower) + "\n";
  for (const auto& [key, value] : est.corrections)
    out += "correction " + key + ": " + fmt(value) + "\n";
  return out;
}

json suggestion_to_json(const al::plan::ArchitectureSuggestion& s) {
  json doc;
  doc["budget"] = s.budget;
  doc["depth_opt"] = s.depth_opt;
  doc["depth_raw"] = s.depth_raw;
  doc["width_from_budget"] = s.width_from_budget;
  doc["width_from_fit"] = s.width_from_fit;
  doc["n_transition"] = s.n_transition;
  doc["dn"] = s.dn;
  return doc;
}

json audit_to_json(const al::plan::AuditVerdict& a) {
  json doc;
  doc["verdict"] = al::plan::verdict_name(a.verdict);
  doc["margin"] = a.margin;
  doc["tol"] = a.tol;
  doc["params"] = a.params;
  doc["n_transition"] = a.n_transition;
  doc["dn"] = a.dn;
  return doc;
}

json lab_report(const json& config, int expected, int measured,
                const std::vector<double>& singulars, bool pass) {
  json doc;
  doc["config"] = config;
  doc["expected_rank"] = expected;
  doc["measured_rank"] = measured;
  doc["singular_values"] = singulars;
  doc["pass"] = pass;
  return doc;
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth-to-width allocation toolkit for self-attention networks"};
  app.require_subcommand(1);

  int depth = 0, width = 0, heads = 1, seq_len = 4, shallow_depth = 0;
  int dim = 0, lambda = 0, lmin = 1, lmax = 100, step = 1;
  double params = 0.0, k_sigma = 3.0, omega = 2.0, tol = 1e-9;
  std::uint64_t seed = 1;
  std::string fit_src = "paper", transitions_src = "bundled", roster_src = "bundled";
  std::string out_path, format, shallow_csv, deep_csv;
  Emitter emit;
  emit.out_path = &out_path;

  auto add_format = [&](CLI::App* cmd, const std::string& def) {
    cmd->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"json", "csv", "text"}))
        ->default_str(def);
  };
  auto fmt_or = [&](const char* def) {
    return format.empty() ? std::string(def) : format;
  };
  auto add_out = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_path, "Also write the output to this file");
  };

  // bounds -------------------------------------------------------------
  auto* cmd_bounds = app.add_subcommand(
      "bounds", "Separation-rank bounds for one (depth, width, heads) triple");
  cmd_bounds->add_option("--depth", depth, "Network depth L")->required();
  cmd_bounds->add_option("--width", width, "Embedding dimension d_x")->required();
  cmd_bounds->add_option("--heads", heads, "Attention heads H");
  add_format(cmd_bounds, "json");
  add_out(cmd_bounds);
  cmd_bounds->callback([&] {
    const std::string f = fmt_or("json");
    const al::bounds::Regime regime = al::bounds::classify_regime(depth, width);
    al::bounds::BoundEstimate est;
    if (regime == al::bounds::Regime::DepthEfficiency)
      est = al::bounds::theorem1_bounds(depth, width, heads);
    else if (regime == al::bounds::Regime::DepthInefficiency)
      est = al::bounds::theorem2_bounds(depth, width, heads);
    else
      throw al::Error(al::Error::Kind::RegimeMismatch,
                      "configuration sits exactly on the depth threshold; no "
                      "bound formula applies");
    emit(f == "text" ? bound_to_text(est) : dump(bound_to_json_obj(est)));
  });

  // regime -------------------------------------------------------------
  auto* cmd_regime =
      app.add_subcommand("regime", "Which side of the depth threshold log3(width)");
  cmd_regime->add_option("--depth", depth, "Network depth L")->required();
  cmd_regime->add_option("--width", width, "Embedding dimension d_x")->required();
  add_format(cmd_regime, "json");
  add_out(cmd_regime);
  cmd_regime->callback([&] {
    const std::string f = fmt_or("json");
    const al::bounds::Regime regime = al::bounds::classify_regime(depth, width);
    if (f == "text") {
      emit(std::string(al::bounds::regime_name(regime)) + " (depth threshold " +
           fmt(al::bounds::depth_threshold(width)) + ")\n");
    } else {
      json doc;
      doc["depth"] = depth;
      doc["width"] = width;
      doc["regime"] = al::bounds::regime_name(regime);
      doc["depth_threshold"] = al::bounds::depth_threshold(width);
      emit(dump(doc));
    }
  });

  // equiv-width ----------------------------------------------------------
  auto* cmd_equiv = app.add_subcommand(
      "equiv-width",
      "Minimal width a shallower stack needs before its upper bound reaches "
      "the deep stack's lower bound");
  cmd_equiv->add_option("--depth", depth, "Deep network depth")->required();
  cmd_equiv->add_option("--width", width, "Deep network width")->required();
  cmd_equiv->add_option("--heads", heads, "Attention heads H");
  cmd_equiv->add_option("--shallow-depth", shallow_depth, "Shallow network depth")
      ->required();
  add_format(cmd_equiv, "json");
  add_out(cmd_equiv);
  cmd_equiv->callback([&] {
    const std::string f = fmt_or("json");
    const al::bounds::EquivalentWidth ew =
        al::bounds::min_equivalent_shallow_width(depth, width, heads, shallow_depth);
    if (f == "text") {
      std::string line = ew.width
                             ? "minimal shallow width: " + std::to_string(*ew.width)
                             : std::string("minimal shallow width: unreachable "
                                           "within 64-bit widths");
      emit(line + " (target log3 lower " + fmt(ew.target_log3_lower) + ")\n");
    } else {
      json doc;
      doc["deep_depth"] = depth;
      doc["deep_width"] = width;
      doc["heads"] = heads;
      doc["shallow_depth"] = shallow_depth;
      doc["target_log3_lower"] = ew.target_log3_lower;
      doc["infinite"] = !ew.width.has_value();
      if (ew.width)
        doc["width"] = *ew.width;
      else
        doc["width"] = nullptr;
      emit(dump(doc));
    }
  });

  // lab ------------------------------------------------------------------
  auto* cmd_lab = app.add_subcommand("lab", "Desk-scale rank experiments");
  cmd_lab->require_subcommand(1);

  auto* cmd_hadamard = cmd_lab->add_subcommand(
      "hadamard", "Rank of (V V^T) under the Hadamard power lambda");
  cmd_hadamard->add_option("--dim", dim, "Columns of the omega matrix")->required();
  cmd_hadamard->add_option("--lambda", lambda, "Hadamard power")->required();
  cmd_hadamard->add_option("--omega", omega, "Omega parameter (> 1)");
  cmd_hadamard->add_option("--tol", tol, "Relative rank tolerance");
  add_format(cmd_hadamard, "json");
  add_out(cmd_hadamard);
  cmd_hadamard->callback([&] {
    const std::string f = fmt_or("json");
    const al::lab::HadamardRankReport report =
        al::lab::verify_hadamard_rank(dim, lambda, omega, tol);
    if (f == "text") {
      emit("expected rank " + std::to_string(report.expected_rank) + ", measured " +
           std::to_string(report.measured_rank) +
           (report.pass ? " (pass)\n" : " (FAIL)\n"));
    } else {
      json config;
      config["dim"] = report.dim;
      config["lambda"] = report.lambda;
      config["omega"] = report.omega;
      emit(dump(lab_report(config, report.expected_rank, report.measured_rank,
                           report.singular_values, report.pass)));
    }
  });

  auto make_config = [&] {
    al::model::NetworkConfig config;
    config.depth = depth;
    config.width = width;
    config.heads = heads;
    config.seq_len = seq_len;
    return config;
  };
  auto assignment_lambda = [&] {
    return static_cast<int>(al::pow3(depth - 2));
  };
  auto assignment_dim = [&] { return (width - heads) / 2; };

  auto* cmd_assign = cmd_lab->add_subcommand(
      "assignment",
      "Explicit template/weight construction and its matricization rank");
  cmd_assign->add_option("--depth", depth, "Network depth L (>= 3)")->required();
  cmd_assign->add_option("--width", width, "Embedding dimension d_x")->required();
  cmd_assign->add_option("--heads", heads, "Attention heads H");
  cmd_assign->add_option("--seq-len", seq_len, "Positions N (even)");
  cmd_assign->add_option("--omega", omega, "Omega parameter (> 1)");
  cmd_assign->add_option("--tol", tol, "Relative rank tolerance");
  add_format(cmd_assign, "json");
  add_out(cmd_assign);
  cmd_assign->callback([&] {
    const std::string f = fmt_or("json");
    const al::model::NetworkConfig config = make_config();
    const al::model::MatrixD v =
        al::lab::build_omega_matrix(assignment_dim(), assignment_lambda(), omega);
    const al::lab::Assignment assignment = al::lab::construct_assignment(v, config);
    const al::model::MatrixC sub =
        al::lab::grid_submatrix(assignment.theta, assignment.grid);
    const std::vector<double> singulars = al::lab::singular_values(sub);
    const int measured = al::lab::numerical_rank(sub, tol);
    const int expected = static_cast<int>(v.rows());
    const al::model::MatrixD target = al::lab::hadamard_power(
        al::model::MatrixD(v * v.transpose()), assignment_lambda());
    const al::lab::ProportionalityReport prop = al::lab::proportionality(sub, target);
    const bool pass = measured == expected && prop.max_rel_deviation <= 1e-8;
    if (f == "text") {
      emit("expected rank " + std::to_string(expected) + ", measured " +
           std::to_string(measured) + ", proportionality deviation " +
           fmt(prop.max_rel_deviation) + (pass ? " (pass)\n" : " (FAIL)\n"));
    } else {
      json config_json;
      config_json["depth"] = depth;
      config_json["width"] = width;
      config_json["heads"] = heads;
      config_json["seq_len"] = seq_len;
      config_json["omega"] = omega;
      json doc = lab_report(config_json, expected, measured, singulars, pass);
      doc["constant"] = {prop.constant.real(), prop.constant.imag()};
      doc["max_rel_deviation"] = prop.max_rel_deviation;
      emit(dump(doc));
    }
  });

  auto* cmd_grid = cmd_lab->add_subcommand(
      "grid-rank", "Matricization rank of a random parameter draw on the same grid");
  cmd_grid->add_option("--depth", depth, "Network depth L (>= 3)")->required();
  cmd_grid->add_option("--width", width, "Embedding dimension d_x")->required();
  cmd_grid->add_option("--heads", heads, "Attention heads H");
  cmd_grid->add_option("--seq-len", seq_len, "Positions N (even)");
  cmd_grid->add_option("--omega", omega, "Omega parameter (> 1)");
  cmd_grid->add_option("--tol", tol, "Relative rank tolerance");
  cmd_grid->add_option("--seed", seed, "Random seed");
  add_format(cmd_grid, "json");
  add_out(cmd_grid);
  cmd_grid->callback([&] {
    const std::string f = fmt_or("json");
    const al::model::NetworkConfig config = make_config();
    const al::model::MatrixD v =
        al::lab::build_omega_matrix(assignment_dim(), assignment_lambda(), omega);
    const al::lab::Assignment assignment = al::lab::construct_assignment(v, config);
    const al::model::ThetaC theta = to_complex(al::model::random_theta(config, seed));
    const al::model::MatrixC sub = al::lab::grid_submatrix(theta, assignment.grid);
    const std::vector<double> singulars = al::lab::singular_values(sub);
    const int measured = al::lab::numerical_rank(sub, tol);
    const int expected = static_cast<int>(v.rows());
    const bool pass = measured >= expected;
    if (f == "text") {
      emit("measured rank " + std::to_string(measured) + " (reference " +
           std::to_string(expected) + (pass ? ", pass)\n" : ", FAIL)\n"));
    } else {
      json config_json;
      config_json["depth"] = depth;
      config_json["width"] = width;
      config_json["heads"] = heads;
      config_json["seq_len"] = seq_len;
      config_json["omega"] = omega;
      config_json["seed"] = seed;
      emit(dump(lab_report(config_json, expected, measured, singulars, pass)));
    }
  });

  // fit --------------------------------------------------------------------
  auto* cmd_fit =
      app.add_subcommand("fit", "Weighted log-linear fit of transition points");
  cmd_fit->add_option("--transitions", transitions_src,
                      "Transition CSV path, or 'bundled'");
  add_format(cmd_fit, "json");
  add_out(cmd_fit);
  cmd_fit->callback([&] {
    const std::string f = fmt_or("json");
    const auto points = resolve_transitions(transitions_src);
    const al::fit::FitResult fit = al::fit::weighted_linear_fit(points);
    if (f == "text") {
      std::string out;
      out += "a = " + fmt(fit.a) + " +- " + fmt(std::sqrt(fit.var_a)) + "\n";
      out += "b = " + fmt(fit.b) + " +- " + fmt(std::sqrt(fit.var_b)) + "\n";
      out += "cov_ab = " + fmt(fit.cov_ab) + "\n";
      out += "chi2_red = " + fmt(fit.chi2_red) + "\n";
      out += "r2 = " + fmt(fit.r2) + "\n";
      out += "dof = " + std::to_string(fit.dof) + "\n";
      emit(out);
    } else {
      emit(al::fit::to_json(fit));
    }
  });

  // transition ---------------------------------------------------------------
  auto* cmd_transition = app.add_subcommand(
      "transition",
      "Transition size at a depth (--depth), or transition width from two "
      "loss sweeps (--shallow-loss/--deep-loss)");
  cmd_transition->add_option("--depth", depth, "Depth L for the size query");
  cmd_transition->add_option("--fit", fit_src, "Fit JSON path, or 'paper'");
  cmd_transition->add_option("--shallow-loss", shallow_csv, "Loss CSV, shallow curve");
  cmd_transition->add_option("--deep-loss", deep_csv, "Loss CSV, deep curve");
  cmd_transition->add_option("--k-sigma", k_sigma, "Significance threshold");
  add_format(cmd_transition, "json");
  add_out(cmd_transition);
  cmd_transition->callback([&] {
    const std::string f = fmt_or("json");
    const bool size_mode = depth > 0;
    const bool estimate_mode = !shallow_csv.empty() || !deep_csv.empty();
    if (size_mode == estimate_mode)
      throw CLI::ValidationError(
          "transition",
          "pass either --depth (size query) or both loss CSVs (estimation)");
    if (size_mode) {
      const al::fit::FitResult fit = resolve_fit(fit_src);
      const al::fit::TransitionSize size = al::fit::transition_size(depth, fit);
      if (f == "text") {
        emit("N_transition(" + std::to_string(depth) + ") = " + fmt(size.n) +
             " +- " + fmt(size.dn) + "\n");
      } else {
        json doc;
        doc["depth"] = depth;
        doc["n"] = size.n;
        doc["dn"] = size.dn;
        emit(dump(doc));
      }
    } else {
      if (shallow_csv.empty() || deep_csv.empty())
        throw CLI::ValidationError("transition",
                                   "estimation needs both --shallow-loss and "
                                   "--deep-loss");
      const auto shallow = al::fit::load_loss_csv(shallow_csv);
      const auto deep = al::fit::load_loss_csv(deep_csv);
      const al::fit::TransitionPoint point =
          al::fit::estimate_transition(shallow, deep, k_sigma);
      if (f == "text") {
        emit("transition at depth " + std::to_string(point.depth) + ": width " +
             fmt(point.width) + " +- " + fmt(point.width_err) + "\n");
      } else {
        json doc;
        doc["depth"] = point.depth;
        doc["width"] = point.width;
        doc["width_err"] = point.width_err;
        doc["k_sigma"] = k_sigma;
        emit(dump(doc));
      }
    }
  });

  // plan -----------------------------------------------------------------
  auto* cmd_plan =
      app.add_subcommand("plan", "Optimal (depth, width) for a parameter budget");
  cmd_plan->add_option("--params", params, "Non-embedding parameter budget")
      ->required();
  cmd_plan->add_option("--fit", fit_src, "Fit JSON path, or 'paper'");
  add_format(cmd_plan, "json");
  add_out(cmd_plan);
  cmd_plan->callback([&] {
    const std::string f = fmt_or("json");
    const al::fit::FitResult fit = resolve_fit(fit_src);
    const al::plan::ArchitectureSuggestion s =
        al::plan::suggest_architecture(params, fit);
    if (f == "text") {
      std::string out;
      out += "optimal depth: " + std::to_string(s.depth_opt) + " (unrounded " +
             fmt(s.depth_raw) + ")\n";
      out += "width from budget: " + fmt(s.width_from_budget) + "\n";
      out += "width from fit: " + fmt(s.width_from_fit) + "\n";
      out += "transition size there: " + fmt(s.n_transition) + " +- " + fmt(s.dn) +
             "\n";
      emit(out);
    } else {
      emit(dump(suggestion_to_json(s)));
    }
  });

  // audit -----------------------------------------------------------------
  auto* cmd_audit =
      app.add_subcommand("audit", "Judge an existing (depth, width) allocation");
  cmd_audit->add_option("--depth", depth, "Network depth L")->required();
  cmd_audit->add_option("--width", width, "Embedding dimension d_x")->required();
  cmd_audit->add_option("--fit", fit_src, "Fit JSON path, or 'paper'");
  add_format(cmd_audit, "json");
  add_out(cmd_audit);
  cmd_audit->callback([&] {
    const std::string f = fmt_or("json");
    const al::fit::FitResult fit = resolve_fit(fit_src);
    const al::plan::AuditVerdict a = al::plan::audit_architecture(depth, width, fit);
    if (f == "text") {
      emit(std::string(al::plan::verdict_name(a.verdict)) + " (margin " +
           fmt(a.margin) + ", band +-" + fmt(a.tol) + ")\n");
    } else {
      json doc = audit_to_json(a);
      doc["depth"] = depth;
      doc["width"] = width;
      emit(dump(doc));
    }
  });

  // table1 -----------------------------------------------------------------
  auto* cmd_table = app.add_subcommand(
      "table1", "Trained vs optimal allocation for a model roster");
  cmd_table->add_option("--roster", roster_src, "Roster JSON path, or 'bundled'");
  cmd_table->add_option("--fit", fit_src, "Fit JSON path, or 'paper'");
  add_format(cmd_table, "text");
  add_out(cmd_table);
  cmd_table->callback([&] {
    const std::string f = fmt_or("text");
    const al::fit::FitResult fit = resolve_fit(fit_src);
    const auto rows = al::plan::generate_table1(fit, resolve_roster(roster_src));
    if (f == "csv") {
      emit(al::plan::table_to_csv(rows));
    } else if (f == "json") {
      json doc = json::array();
      for (const auto& row : rows) {
        json item;
        item["name"] = row.model.name;
        item["params"] = row.model.params;
        if (row.model.depth) item["trained_depth"] = *row.model.depth;
        if (row.model.width) item["trained_width"] = *row.model.width;
        item["budget"] = row.budget;
        item["suggestion"] = suggestion_to_json(row.suggestion);
        if (row.audit) item["audit"] = audit_to_json(*row.audit);
        doc.push_back(item);
      }
      emit(dump(doc));
    } else {
      emit(al::plan::table_to_text(rows));
    }
  });

  // curve -----------------------------------------------------------------
  auto* cmd_curve = app.add_subcommand(
      "curve", "Transition-size curve N(L) with its uncertainty band");
  cmd_curve->add_option("--lmin", lmin, "First depth");
  cmd_curve->add_option("--lmax", lmax, "Last depth");
  cmd_curve->add_option("--step", step, "Depth step");
  cmd_curve->add_option("--fit", fit_src, "Fit JSON path, or 'paper'");
  add_format(cmd_curve, "csv");
  add_out(cmd_curve);
  cmd_curve->callback([&] {
    const std::string f = fmt_or("csv");
    const al::fit::FitResult fit = resolve_fit(fit_src);
    const auto curve = al::plan::emit_transition_curve(fit, lmin, lmax, step);
    if (f == "json") {
      json doc = json::array();
      for (const auto& p : curve)
        doc.push_back({{"L", p.depth}, {"N", p.n}, {"dN", p.dn}});
      emit(dump(doc));
    } else {
      emit(al::plan::curve_to_csv(curve));
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const al::Error& e) {
    std::cerr << "error: " << al::Error::kind_name(e.kind()) << ": " << e.what()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
