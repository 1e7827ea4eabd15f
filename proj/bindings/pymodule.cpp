#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "allocatron/bounds.hpp"
#include "allocatron/common.hpp"
#include "allocatron/data.hpp"
#include "allocatron/fit.hpp"
#include "allocatron/lab.hpp"
#include "allocatron/model.hpp"
#include "allocatron/plan.hpp"

namespace py = pybind11;
namespace al = allocatron;

namespace {

// One-call version of the construction pipeline for scripting: builds the
// omega matrix for the configuration, runs the assignment, and reports the
// measured matricization rank against the expected one.
py::dict assignment_rank(int depth, int width, int heads, int seq_len, double omega,
                         double tol) {
  al::model::NetworkConfig config{depth, width, heads, seq_len};
  const int lambda = static_cast<int>(al::pow3(depth - 2));
  const int dim = (width - heads) / 2;
  const al::model::MatrixD v = al::lab::build_omega_matrix(dim, lambda, omega);
  const al::lab::Assignment assignment = al::lab::construct_assignment(v, config);
  const al::model::MatrixC sub =
      al::lab::grid_submatrix(assignment.theta, assignment.grid);
  const al::model::MatrixD target =
      al::lab::hadamard_power(al::model::MatrixD(v * v.transpose()), lambda);
  const al::lab::ProportionalityReport prop = al::lab::proportionality(sub, target);

  py::dict out;
  out["expected_rank"] = static_cast<int>(v.rows());
  out["measured_rank"] = al::lab::numerical_rank(sub, tol);
  out["constant"] = prop.constant;
  out["max_rel_deviation"] = prop.max_rel_deviation;
  return out;
}

}  // namespace

PYBIND11_MODULE(allocatron, m) {
  m.doc() = "Depth-to-width allocation toolkit for self-attention networks";

  py::register_exception<al::Error>(m, "AllocatronError");

  // model ------------------------------------------------------------------
  py::class_<al::model::NetworkConfig>(m, "NetworkConfig")
      .def(py::init([](int depth, int width, int heads, int seq_len) {
             al::model::NetworkConfig config{depth, width, heads, seq_len};
             config.validate();
             return config;
           }),
           py::arg("depth"), py::arg("width"), py::arg("heads") = 1,
           py::arg("seq_len") = 4)
      .def_readonly("depth", &al::model::NetworkConfig::depth)
      .def_readonly("width", &al::model::NetworkConfig::width)
      .def_readonly("heads", &al::model::NetworkConfig::heads)
      .def_readonly("seq_len", &al::model::NetworkConfig::seq_len)
      .def_property_readonly("head_dim", &al::model::NetworkConfig::head_dim);

  py::class_<al::model::ThetaD>(m, "Theta")
      .def_readonly("config", &al::model::ThetaD::config);

  m.def("random_theta", &al::model::random_theta, py::arg("config"), py::arg("seed"));
  m.def("random_input", &al::model::random_input, py::arg("config"), py::arg("seed"));
  m.def(
      "network_forward",
      [](const al::model::ThetaD& theta, const al::model::MatrixD& x,
         bool with_residual) { return al::model::network_forward(theta, x, with_residual); },
      py::arg("theta"), py::arg("x"), py::arg("with_residual") = false);
  m.def(
      "structural_form_forward",
      [](const al::model::ThetaD& theta, const al::model::MatrixD& x) {
        return al::model::structural_form_forward(theta, x);
      },
      py::arg("theta"), py::arg("x"));
  m.def("count_nonembedding_params", &al::model::count_nonembedding_params,
        py::arg("depth"), py::arg("width"));
  m.def("input_copies", &al::input_copies, py::arg("depth"));
  m.def("multiset_coefficient", &al::multiset_coefficient, py::arg("n"), py::arg("k"));

  // bounds -----------------------------------------------------------------
  py::class_<al::bounds::BoundEstimate>(m, "BoundEstimate")
      .def_readonly("log3_lower", &al::bounds::BoundEstimate::log3_lower)
      .def_readonly("log3_upper", &al::bounds::BoundEstimate::log3_upper)
      .def_readonly("raw_lower", &al::bounds::BoundEstimate::raw_lower)
      .def_readonly("corrections", &al::bounds::BoundEstimate::corrections)
      .def_property_readonly("regime", [](const al::bounds::BoundEstimate& e) {
        return std::string(al::bounds::regime_name(e.regime));
      });

  m.def(
      "classify_regime",
      [](int depth, int width) {
        return std::string(al::bounds::regime_name(al::bounds::classify_regime(depth, width)));
      },
      py::arg("depth"), py::arg("width"));
  m.def("depth_threshold", &al::bounds::depth_threshold, py::arg("width"));
  m.def("theorem1_bounds", &al::bounds::theorem1_bounds, py::arg("depth"),
        py::arg("width"), py::arg("heads") = 1);
  m.def("theorem2_bounds", &al::bounds::theorem2_bounds, py::arg("depth"),
        py::arg("width"), py::arg("heads") = 1);
  m.def("exact_count_log_deep", &al::bounds::exact_count_log_deep, py::arg("depth"),
        py::arg("width"), py::arg("heads") = 1);
  m.def("exact_count_log_wide", &al::bounds::exact_count_log_wide, py::arg("depth"),
        py::arg("width"));
  m.def("residual_upper_bound", &al::bounds::residual_upper_bound, py::arg("depth"),
        py::arg("width"), py::arg("seq_len"), py::arg("heads") = 1);
  m.def(
      "min_equivalent_shallow_width",
      [](int deep_depth, int deep_width, int heads, int shallow_depth) {
        const al::bounds::EquivalentWidth ew = al::bounds::min_equivalent_shallow_width(
            deep_depth, deep_width, heads, shallow_depth);
        return py::make_tuple(ew.width ? py::cast(*ew.width) : py::none(),
                              ew.target_log3_lower);
      },
      py::arg("deep_depth"), py::arg("deep_width"), py::arg("heads"),
      py::arg("shallow_depth"));

  // lab ----------------------------------------------------------------------
  py::class_<al::lab::HadamardRankReport>(m, "HadamardRankReport")
      .def_readonly("dim", &al::lab::HadamardRankReport::dim)
      .def_readonly("lambda_", &al::lab::HadamardRankReport::lambda)
      .def_readonly("omega", &al::lab::HadamardRankReport::omega)
      .def_readonly("expected_rank", &al::lab::HadamardRankReport::expected_rank)
      .def_readonly("measured_rank", &al::lab::HadamardRankReport::measured_rank)
      .def_readonly("singular_values", &al::lab::HadamardRankReport::singular_values)
      .def_readonly("pass_", &al::lab::HadamardRankReport::pass);

  m.def("build_omega_matrix", &al::lab::build_omega_matrix, py::arg("dim"),
        py::arg("lambda_"), py::arg("omega") = 2.0);
  m.def(
      "hadamard_power",
      [](const al::model::MatrixD& matrix, int power) {
        return al::lab::hadamard_power(matrix, power);
      },
      py::arg("matrix"), py::arg("power"));
  m.def(
      "numerical_rank",
      [](const al::model::MatrixD& matrix, double rel_tol) {
        return al::lab::numerical_rank(matrix, rel_tol);
      },
      py::arg("matrix"), py::arg("rel_tol") = 1e-9);
  m.def("verify_hadamard_rank", &al::lab::verify_hadamard_rank, py::arg("dim"),
        py::arg("lambda_"), py::arg("omega") = 2.0, py::arg("rel_tol") = 1e-9);
  m.def("enumerate_balanced_partitions", &al::lab::enumerate_balanced_partitions,
        py::arg("seq_len"), py::arg("anchor") = 0);
  m.def("assignment_rank", &assignment_rank, py::arg("depth"), py::arg("width"),
        py::arg("heads") = 1, py::arg("seq_len") = 4, py::arg("omega") = 2.0,
        py::arg("tol") = 1e-9);

  // fit ------------------------------------------------------------------------
  py::class_<al::fit::LossRecord>(m, "LossRecord")
      .def(py::init([](int depth, int width, double test_loss, double loss_std) {
             return al::fit::LossRecord{depth, width, test_loss, loss_std};
           }),
           py::arg("depth"), py::arg("width"), py::arg("test_loss"),
           py::arg("loss_std") = al::fit::kDefaultLossStd)
      .def_readwrite("depth", &al::fit::LossRecord::depth)
      .def_readwrite("width", &al::fit::LossRecord::width)
      .def_readwrite("test_loss", &al::fit::LossRecord::test_loss)
      .def_readwrite("loss_std", &al::fit::LossRecord::loss_std);

  py::class_<al::fit::TransitionPoint>(m, "TransitionPoint")
      .def(py::init([](int depth, double width, double width_err) {
             return al::fit::TransitionPoint{depth, width, width_err};
           }),
           py::arg("depth"), py::arg("width"), py::arg("width_err"))
      .def_readwrite("depth", &al::fit::TransitionPoint::depth)
      .def_readwrite("width", &al::fit::TransitionPoint::width)
      .def_readwrite("width_err", &al::fit::TransitionPoint::width_err);

  py::class_<al::fit::FitResult>(m, "FitResult")
      .def(py::init<>())
      .def_readwrite("a", &al::fit::FitResult::a)
      .def_readwrite("b", &al::fit::FitResult::b)
      .def_readwrite("var_a", &al::fit::FitResult::var_a)
      .def_readwrite("var_b", &al::fit::FitResult::var_b)
      .def_readwrite("cov_ab", &al::fit::FitResult::cov_ab)
      .def_readwrite("chi2_red", &al::fit::FitResult::chi2_red)
      .def_readwrite("r2", &al::fit::FitResult::r2)
      .def_readwrite("dof", &al::fit::FitResult::dof);

  m.def("estimate_transition", &al::fit::estimate_transition, py::arg("shallow"),
        py::arg("deep"), py::arg("k_sigma") = 3.0);
  m.def("weighted_linear_fit", &al::fit::weighted_linear_fit, py::arg("points"));
  m.def(
      "transition_size",
      [](int depth, const al::fit::FitResult& fit) {
        const al::fit::TransitionSize size = al::fit::transition_size(depth, fit);
        return py::make_tuple(size.n, size.dn);
      },
      py::arg("depth"), py::arg("fit"));

  // plan ---------------------------------------------------------------------
  py::class_<al::plan::ArchitectureSuggestion>(m, "ArchitectureSuggestion")
      .def_readonly("budget", &al::plan::ArchitectureSuggestion::budget)
      .def_readonly("depth_opt", &al::plan::ArchitectureSuggestion::depth_opt)
      .def_readonly("depth_raw", &al::plan::ArchitectureSuggestion::depth_raw)
      .def_readonly("width_from_budget",
                    &al::plan::ArchitectureSuggestion::width_from_budget)
      .def_readonly("width_from_fit", &al::plan::ArchitectureSuggestion::width_from_fit)
      .def_readonly("n_transition", &al::plan::ArchitectureSuggestion::n_transition)
      .def_readonly("dn", &al::plan::ArchitectureSuggestion::dn);

  py::class_<al::plan::AuditVerdict>(m, "AuditVerdict")
      .def_property_readonly("verdict",
                             [](const al::plan::AuditVerdict& a) {
                               return std::string(al::plan::verdict_name(a.verdict));
                             })
      .def_readonly("margin", &al::plan::AuditVerdict::margin)
      .def_readonly("tol", &al::plan::AuditVerdict::tol)
      .def_readonly("params", &al::plan::AuditVerdict::params)
      .def_readonly("n_transition", &al::plan::AuditVerdict::n_transition)
      .def_readonly("dn", &al::plan::AuditVerdict::dn);

  m.def("optimal_depth", &al::plan::optimal_depth, py::arg("params"), py::arg("fit"));
  m.def("suggest_architecture", &al::plan::suggest_architecture, py::arg("params"),
        py::arg("fit"));
  m.def("audit_architecture", &al::plan::audit_architecture, py::arg("depth"),
        py::arg("width"), py::arg("fit"));
  m.def(
      "emit_transition_curve",
      [](const al::fit::FitResult& fit, int depth_min, int depth_max, int step) {
        std::vector<py::tuple> out;
        for (const al::plan::CurvePoint& p :
             al::plan::emit_transition_curve(fit, depth_min, depth_max, step))
          out.push_back(py::make_tuple(p.depth, p.n, p.dn));
        return out;
      },
      py::arg("fit"), py::arg("depth_min"), py::arg("depth_max"), py::arg("step") = 1);

  // data -----------------------------------------------------------------------
  m.def("paper_fit", &al::data::paper_fit);
  m.def("bundled_transition_points", &al::data::bundled_transition_points);
}
