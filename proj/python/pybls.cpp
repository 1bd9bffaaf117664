// Python bindings: ridge oracle, node and input states with their updates,
// Cholesky kernels, state files, schedules and the benchmark.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bls/bench.hpp"
#include "bls/decremental.hpp"
#include "bls/error.hpp"
#include "bls/experiment.hpp"
#include "bls/persist.hpp"

namespace py = pybind11;
using namespace bls;

namespace {

InputForm parse_form(const std::string& form) {
  if (form == "q") return InputForm::q_form;
  if (form == "f") return InputForm::f_form;
  throw InvalidConfig("form must be 'q' or 'f'");
}

Branch parse_branch(const std::string& branch) {
  if (branch == "auto") return Branch::automatic;
  if (branch == "small") return Branch::small_block;
  if (branch == "large") return Branch::large_block;
  throw InvalidConfig("branch must be 'auto', 'small' or 'large'");
}

py::dict report_dict(const UpdateReport& r) {
  py::list tracks;
  for (const auto& t : r.tracks) {
    py::dict d;
    d["track"] = to_string(t.track);
    d["ms"] = t.ms;
    d["rebuilt"] = t.rebuilt;
    d["train_accuracy"] = t.train_accuracy;
    d["test_accuracy"] = t.test_accuracy;
    d["deviation"] = t.deviation;
    tracks.append(d);
  }
  py::dict d;
  d["step"] = r.step;
  d["kind"] = to_string(r.kind);
  d["nodes_before"] = r.nodes_before;
  d["nodes_after"] = r.nodes_after;
  d["samples_before"] = r.samples_before;
  d["samples_after"] = r.samples_after;
  d["verified"] = r.verified;
  d["evaluated"] = r.evaluated;
  d["tracks"] = tracks;
  return d;
}

py::list run_reports(ExperimentConfig cfg, std::optional<double> lambda) {
  if (lambda) cfg.lambda = *lambda;
  py::list out;
  for (const auto& r : run_schedule(cfg).reports) out.append(report_dict(r));
  return out;
}

}  // namespace

PYBIND11_MODULE(pybls, m) {
  m.doc() = "Broad learning system with exact incremental and decremental ridge updates";

  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  auto input = py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite", numerical.ptr());
  py::register_exception<FactorizationFailure>(m, "FactorizationFailure", numerical.ptr());
  py::register_exception<SingularFactor>(m, "SingularFactor", numerical.ptr());
  py::register_exception<SingularInnerMatrix>(m, "SingularInnerMatrix", numerical.ptr());
  py::register_exception<SingularG>(m, "SingularG", numerical.ptr());
  py::register_exception<NotSymmetric>(m, "NotSymmetric", input.ptr());
  py::register_exception<MalformedInput>(m, "MalformedInput", input.ptr());
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", input.ptr());
  py::register_exception<InvalidConfig>(m, "InvalidConfig", input.ptr());
  py::register_exception<IndexOutOfRange>(m, "IndexOutOfRange", input.ptr());
  py::register_exception<ParseError>(m, "ParseError", input.ptr());
  py::register_exception<LabelMismatch>(m, "LabelMismatch", input.ptr());
  py::register_exception<ScheduleInvalid>(m, "ScheduleInvalid", input.ptr());
  py::register_exception<VersionMismatch>(m, "VersionMismatch", input.ptr());
  py::register_exception<CorruptFile>(m, "CorruptFile", input.ptr());

  m.def("ridge_solve", [](const Matrix& a, const Matrix& y, double lambda) {
    return ridge_solve(a, y, lambda).weights;
  }, py::arg("a"), py::arg("y"), py::arg("lam"), "W = (A^T A + lam I)^{-1} A^T Y");

  m.def("upper_cholesky", [](const Matrix& m) { return upper_cholesky(m).matrix(); },
        "Upper V with V V^T = M");
  m.def("inverse_cholesky", [](const Matrix& m) { return inverse_cholesky(m).matrix(); },
        "Upper F with F F^T = M^{-1}");

  py::class_<NodeState>(m, "NodeState", "State for adding and pruning nodes")
      .def_property_readonly("f", [](const NodeState& s) { return s.f.matrix(); })
      .def_readonly("w", &NodeState::w)
      .def_readonly("a", &NodeState::a)
      .def_readonly("aty", &NodeState::aty)
      .def_readonly("lam", &NodeState::lambda)
      .def_property_readonly("nodes", &NodeState::nodes)
      .def_property_readonly("samples", &NodeState::samples)
      .def("__repr__", [](const NodeState& s) {
        return "<NodeState nodes=" + std::to_string(s.nodes()) +
               " samples=" + std::to_string(s.samples()) + ">";
      });

  py::class_<InputState>(m, "InputState", "State for adding and forgetting samples")
      .def_property_readonly("form",
                             [](const InputState& s) { return s.form == InputForm::q_form ? "q" : "f"; })
      .def_property_readonly("q", &InputState::inverse_gram, "(A^T A + lam I)^{-1}")
      .def_property_readonly("f", [](const InputState& s) -> py::object {
        if (s.form == InputForm::q_form) return py::none();
        return py::cast(s.f.matrix());
      })
      .def_readonly("w", &InputState::w)
      .def_readonly("lam", &InputState::lambda)
      .def_property_readonly("nodes", &InputState::nodes)
      .def("__repr__", [](const InputState& s) {
        return std::string("<InputState form=") + (s.form == InputForm::q_form ? "q" : "f") +
               " nodes=" + std::to_string(s.nodes()) + ">";
      });

  m.def("init_node_state", &init_node_state, py::arg("a"), py::arg("y"), py::arg("lam"));
  m.def("init_input_state", [](const Matrix& a, const Matrix& y, double lambda, const std::string& form) {
    return init_input_state(a, y, lambda, parse_form(form));
  }, py::arg("a"), py::arg("y"), py::arg("lam"), py::arg("form") = "f");

  m.def("add_nodes", &add_nodes, py::arg("state"), py::arg("h"), py::arg("y"),
        "Append the columns H (one row per trained sample)");
  m.def("remove_nodes", [](NodeState state, std::vector<Index> indices) {
    const Index k = state.nodes();
    return remove_nodes(std::move(state), NodeRemovalPlan(std::move(indices), k));
  }, py::arg("state"), py::arg("indices"), "Prune the listed node columns (strictly increasing)");

  m.def("add_inputs", [](InputState state, const Matrix& ax, const Matrix& ya, const std::string& branch) {
    const Branch b = parse_branch(branch);
    return state.form == InputForm::q_form ? add_inputs_q(std::move(state), ax, ya, b)
                                           : add_inputs_f(std::move(state), ax, ya, b);
  }, py::arg("state"), py::arg("ax"), py::arg("ya"), py::arg("branch") = "auto");
  m.def("remove_inputs", [](InputState state, const Matrix& ad, const Matrix& yd, const std::string& branch) {
    const Branch b = parse_branch(branch);
    const InputRemovalBatch batch{ad, yd};
    return state.form == InputForm::q_form ? remove_inputs_q(std::move(state), batch, b)
                                           : remove_inputs_f(std::move(state), batch, b);
  }, py::arg("state"), py::arg("ad"), py::arg("yd"), py::arg("branch") = "auto",
     "Forget training rows (A_d, Y_d) with the state's own algorithm");

  m.def("save_state", [](const py::object& state, const std::filesystem::path& path) {
    SavedState saved;
    if (py::isinstance<NodeState>(state)) saved.state = state.cast<NodeState>();
    else saved.state = state.cast<InputState>();
    save_state(saved, path);
  }, py::arg("state"), py::arg("path"));
  m.def("load_state", [](const std::filesystem::path& path) -> py::object {
    SavedState saved = load_state(path);
    if (auto* n = std::get_if<NodeState>(&saved.state)) return py::cast(std::move(*n));
    return py::cast(std::get<InputState>(std::move(saved.state)));
  }, py::arg("path"));

  m.def("run_schedule", [](const std::string& text, std::optional<double> lambda) {
    return run_reports(parse_config(text, "<python>"), lambda);
  }, py::arg("config"), py::arg("lam") = py::none(),
     "Run a schedule given as config text; returns one dict per row");
  m.def("run_schedule_file", [](const std::filesystem::path& path, std::optional<double> lambda) {
    return run_reports(load_config(path), lambda);
  }, py::arg("path"), py::arg("lam") = py::none());

  m.def("bench", [](Index l, Index k, Index c, Index delta, Index rho, double lambda,
                    std::uint64_t seed, int repeats) {
    BenchConfig cfg;
    cfg.samples = l;
    cfg.nodes = k;
    cfg.outputs = c;
    cfg.delta = delta;
    cfg.rho = rho;
    cfg.lambda = lambda;
    cfg.seed = seed;
    cfg.repeats = repeats;
    py::list out;
    for (const auto& r : bench(cfg)) {
      py::dict d;
      d["method"] = r.method;
      d["removed"] = r.amount;
      d["update_ms"] = r.update_ms;
      d["retrain_ms"] = r.retrain_ms;
      d["deviation"] = r.deviation;
      out.append(d);
    }
    return out;
  }, py::arg("l") = 10000, py::arg("k") = 1000, py::arg("c") = 10, py::arg("delta") = 100,
     py::arg("rho") = 50, py::arg("lam") = 1e-3, py::arg("seed") = 0, py::arg("repeats") = 3);
}
