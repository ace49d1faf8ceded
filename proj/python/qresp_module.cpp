#include "qresp/benchmarks.hpp"
#include "qresp/espmetrics.hpp"
#include "qresp/qmat.hpp"
#include "qresp/reservoir.hpp"
#include "qresp/sweep.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/operators.h>

#include <limits>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace pybind11::literals;
using namespace qresp;

namespace {

HamiltonianPreset preset_from(const std::string& name) {
  const auto p = parse_preset(name);
  if (!p) throw py::value_error("unknown Hamiltonian preset: " + name);
  return *p;
}

SubsetSelection selection_from(const std::string& name, const std::vector<PauliString>& basis) {
  if (name == "all") return SubsetSelection::all(basis);
  if (name == "damping") return SubsetSelection::damping(basis);
  if (name == "nondamping") return SubsetSelection::nondamping(basis);
  if (name == "entangling") return SubsetSelection::entangling(basis);
  throw py::value_error("unknown readout selection: " + name);
}

std::vector<PauliString> basis_or_default(const std::optional<std::vector<PauliString>>& basis, int n_qubits) {
  return basis ? *basis : all_pauli_strings(n_qubits);
}

py::dict field_to_dict(const FieldResult& r) {
  py::dict out;
  std::vector<int> index;
  std::vector<double> u, v;
  std::vector<std::string> errors;
  for (const auto& p : r.points) {
    index.push_back(p.index);
    u.push_back(p.u);
    v.push_back(p.v);
    errors.push_back(p.error);
  }
  out["index"] = index;
  out["u"] = u;
  out["v"] = v;
  for (std::size_t c = 0; c < r.columns.size(); ++c) {
    std::vector<double> col;
    col.reserve(r.points.size());
    for (const auto& p : r.points) col.push_back(p.values[c]);
    out[py::str(r.columns[c])] = col;
  }
  out["error"] = errors;
  out["config_hash"] = r.config_hash;
  return out;
}

} // namespace

PYBIND11_MODULE(qresp, m) {
  m.doc() = "Qubit reservoir simulation, echo-state indicators and memory benchmarks";

  py::register_exception<StateError>(m, "StateError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<StepError>(m, "StepError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);

  // Quantum states.
  py::class_<DensityMatrix>(m, "DensityMatrix")
      .def(py::init<ComplexMatrix>(), "matrix"_a)
      .def_static("ground_state", &DensityMatrix::ground_state, "n_qubits"_a)
      .def_static("maximally_mixed", &DensityMatrix::maximally_mixed, "n_qubits"_a)
      .def_static("from_pure_state", &DensityMatrix::from_pure_state, "psi"_a)
      .def_static(
          "haar_random", [](int n, std::uint64_t seed) {
            Rng rng(seed);
            return qmat::haar_random_pure_state(n, rng);
          },
          "n_qubits"_a, "seed"_a)
      .def_property_readonly("n_qubits", &DensityMatrix::n_qubits)
      .def_property_readonly("matrix", &DensityMatrix::matrix)
      .def("purity", &DensityMatrix::purity)
      .def("validate", &DensityMatrix::validate);

  m.def(
      "partial_trace", [](const DensityMatrix& rho, const std::vector<int>& traced) { return qmat::partial_trace(rho, traced); },
      "rho"_a, "traced_qubits"_a);
  m.def("trace_distance", &qmat::trace_distance, "a"_a, "b"_a);
  m.def("hilbert_schmidt_distance", &qmat::hilbert_schmidt_distance, "a"_a, "b"_a);

  py::class_<PauliString>(m, "PauliString")
      .def(py::init(&PauliString::parse), "text"_a)
      .def_property_readonly("n_qubits", &PauliString::n_qubits)
      .def("matrix", &PauliString::matrix)
      .def("__str__", &PauliString::to_string)
      .def("__repr__", [](const PauliString& p) { return "PauliString('" + p.to_string() + "')"; })
      .def(py::self == py::self);

  m.def("all_pauli_strings", &all_pauli_strings, "n_qubits"_a);
  m.def(
      "pauli_expectations",
      [](const DensityMatrix& rho, const std::optional<std::vector<PauliString>>& basis) {
        return pauli_expectations(rho, basis_or_default(basis, rho.n_qubits()));
      },
      "rho"_a, "basis"_a = py::none());
  m.def(
      "state_from_pauli_expectations",
      [](const std::vector<double>& values, int n) { return state_from_pauli_expectations(values, n); }, "values"_a,
      "n_qubits"_a);

  // Hamiltonians and encodings.
  py::class_<SkHamiltonianConfig>(m, "SkHamiltonianConfig")
      .def(py::init<>())
      .def_readwrite("n_qubits", &SkHamiltonianConfig::n_qubits)
      .def_readwrite("j_scale", &SkHamiltonianConfig::j_scale)
      .def_readwrite("field_width", &SkHamiltonianConfig::field_width)
      .def_readwrite("global_field", &SkHamiltonianConfig::global_field)
      .def_readwrite("seed", &SkHamiltonianConfig::seed);

  m.def(
      "preset_config",
      [](const std::string& name, int n, std::uint64_t seed) { return preset_config(preset_from(name), n, seed); },
      "preset"_a, "n_qubits"_a = 2, "seed"_a = default_coupling_seed);
  m.def("build_sk_hamiltonian", &build_sk_hamiltonian, "config"_a);

  py::class_<AxisConfig>(m, "AxisConfig")
      .def(py::init([](double azimuth, double polar) { return AxisConfig{azimuth, polar}; }), "azimuth"_a = 0.0,
           "polar"_a = 0.0)
      .def_readwrite("azimuth", &AxisConfig::azimuth)
      .def_readwrite("polar", &AxisConfig::polar)
      .def("unit_vector", &AxisConfig::unit_vector);

  m.def("input_unitary", &input_unitary, "u"_a, "axis"_a);
  m.def("amplitude_damping", &amplitude_damping, "rho"_a, "qubit"_a, "gamma"_a);
  m.def("cnot_power", &qmat::cnot_power, "p"_a);

  // Reservoir models.
  py::class_<QuantumReservoir>(m, "QuantumReservoir")
      .def_property_readonly("n_qubits", &QuantumReservoir::n_qubits)
      .def("step", &QuantumReservoir::step, "rho"_a, "u"_a);

  py::class_<NsModel, QuantumReservoir>(m, "NsModel")
      .def(py::init([](const std::string& preset, const AxisConfig& axis, int n, std::uint64_t seed) {
             return NsModel(NsModelConfig{preset_config(preset_from(preset), n, seed), axis});
           }),
           "preset"_a = "H1", "axis"_a = AxisConfig{}, "n_qubits"_a = 2, "coupling_seed"_a = default_coupling_seed)
      .def(py::init([](const SkHamiltonianConfig& h, const AxisConfig& axis) { return NsModel(NsModelConfig{h, axis}); }),
           "hamiltonian"_a, "axis"_a)
      .def_property_readonly("hamiltonian", &NsModel::hamiltonian);

  py::class_<SubsetModel, QuantumReservoir>(m, "SubsetModel")
      .def(py::init([](double gamma, double p, std::uint64_t u0_seed, std::uint64_t u1_seed) {
             return SubsetModel(SubsetModelConfig{gamma, p, u0_seed, u1_seed});
           }),
           "damping_rate"_a, "cnot_exponent"_a, "u0_seed"_a = SubsetModelConfig{}.u0_seed,
           "u1_seed"_a = SubsetModelConfig{}.u1_seed)
      .def("system_channel", &SubsetModel::system_channel, "rho"_a);

  py::class_<DepolarizingModel, QuantumReservoir>(m, "DepolarizingModel")
      .def(py::init<int, double, ComplexMatrix>(), "n_qubits"_a, "epsilon"_a, "unitary"_a);

  m.def(
      "run_reservoir",
      [](const QuantumReservoir& model, const std::vector<double>& inputs, std::optional<DensityMatrix> rho0,
         const std::optional<std::vector<PauliString>>& basis) {
        const int n = model.n_qubits();
        const auto b = basis_or_default(basis, n);
        py::gil_scoped_release release;
        return run_reservoir(model, inputs, rho0 ? *rho0 : DensityMatrix::ground_state(n), b).values;
      },
      "model"_a, "inputs"_a, "rho0"_a = py::none(), "basis"_a = py::none(),
      "Readout matrix with one row per input and one column per basis string");

  m.def(
      "run_classical_reference",
      [](const std::string& kind, double rate, const std::vector<double>& inputs, const RealVector& y0, int size,
         std::uint64_t seed) {
        ClassicalRefConfig cfg;
        if (kind == "scaled") cfg.kind = ClassicalRefConfig::Kind::scaled;
        else if (kind == "biased") cfg.kind = ClassicalRefConfig::Kind::biased;
        else throw py::value_error("kind must be 'scaled' or 'biased'");
        cfg.rate = rate;
        cfg.size = size;
        cfg.seed = seed;
        return run_classical_reference(cfg, inputs, y0);
      },
      "kind"_a, "rate"_a, "inputs"_a, "y0"_a, "size"_a = 20, "seed"_a = 0);
  m.def(
      "run_delay_line", [](const std::vector<double>& inputs, int dim) { return run_delay_line(inputs, dim); },
      "inputs"_a, "dim"_a);

  // Echo-state indicators.
  m.def("esp_indicator", &esp_indicator, "a"_a, "b"_a, "s0_dist"_a, "t"_a);
  m.def(
      "ns_esp_indicator",
      [](const RealMatrix& a, const RealMatrix& b, double s0, int w, Eigen::Index t) {
        return ns_esp_indicator(a, b, s0, w, t).value;
      },
      "a"_a, "b"_a, "s0_dist"_a, "window"_a, "t"_a, "Normalized indicator; +inf when the window variance underflows");

  py::class_<EnsembleConfig>(m, "EnsembleConfig")
      .def(py::init<>())
      .def_readwrite("n_inputs", &EnsembleConfig::n_inputs)
      .def_readwrite("n_states", &EnsembleConfig::n_states)
      .def_readwrite("seq_len", &EnsembleConfig::seq_len)
      .def_readwrite("window", &EnsembleConfig::window)
      .def_readwrite("tail_mean", &EnsembleConfig::tail_mean);

  py::class_<EnsembleResult>(m, "EnsembleResult")
      .def_readonly("pair_count", &EnsembleResult::pair_count)
      .def_readonly("esp_final", &EnsembleResult::esp_final)
      .def_readonly("ns_final", &EnsembleResult::ns_final)
      .def_readonly("ns_sentinel", &EnsembleResult::ns_sentinel)
      .def_property_readonly("esp", [](const EnsembleResult& r) { return r.mean.esp; })
      .def_property_readonly("ns", [](const EnsembleResult& r) { return r.mean.ns; });

  m.def(
      "indicator_ensemble",
      [](const QuantumReservoir& model, const EnsembleConfig& cfg, std::uint64_t seed, const std::string& selection) {
        Rng rng(seed);
        const auto sel = selection_from(selection, all_pauli_strings(model.n_qubits()));
        py::gil_scoped_release release;
        return subset_indicator_ensemble(model, sel, cfg, rng);
      },
      "model"_a, "config"_a = EnsembleConfig{}, "seed"_a = 0, "selection"_a = "all");

  // Benchmarks.
  py::class_<NarmaConfig>(m, "NarmaConfig")
      .def(py::init([](int order) {
             NarmaConfig c;
             c.order = order;
             return c;
           }),
           "order"_a = 2)
      .def_readwrite("order", &NarmaConfig::order)
      .def_readwrite("feedback", &NarmaConfig::feedback)
      .def_readwrite("sum_gain", &NarmaConfig::sum_gain)
      .def_readwrite("input_gain", &NarmaConfig::input_gain)
      .def_readwrite("bias", &NarmaConfig::bias)
      .def_readwrite("input_low", &NarmaConfig::input_low)
      .def_readwrite("input_high", &NarmaConfig::input_high);

  m.def(
      "narma_inputs",
      [](std::size_t length, const NarmaConfig& cfg, std::uint64_t seed) {
        Rng rng(seed);
        return narma_inputs(length, cfg, rng);
      },
      "length"_a, "config"_a = NarmaConfig{}, "seed"_a = 0);
  m.def(
      "narma_generate",
      [](const std::vector<double>& inputs, const NarmaConfig& cfg) { return narma_generate(inputs, cfg); }, "inputs"_a,
      "config"_a = NarmaConfig{});

  py::class_<ReadoutFit>(m, "ReadoutFit")
      .def_readonly("weights", &ReadoutFit::weights)
      .def_readonly("test_prediction", &ReadoutFit::test_prediction)
      .def_readonly("test_target", &ReadoutFit::test_target)
      .def_readonly("degenerate", &ReadoutFit::degenerate)
      .def_readonly("test_rnmse", &ReadoutFit::test_rnmse);

  m.def(
      "train_linear_readout",
      [](const RealMatrix& features, const std::vector<double>& target, double washout_fraction, double train_fraction,
         double ridge, bool add_bias) {
        return train_linear_readout(features, target, SplitSpec{washout_fraction, train_fraction}, ridge, add_bias);
      },
      "features"_a, "target"_a, "washout_fraction"_a = 0.5, "train_fraction"_a = 0.8, "ridge"_a = 0.0,
      "add_bias"_a = false);
  m.def(
      "rnmse", [](const std::vector<double>& t, const std::vector<double>& p) { return rnmse(t, p); }, "target"_a,
      "prediction"_a);

  py::class_<McResult>(m, "McResult")
      .def_readonly("raw", &McResult::raw)
      .def_readonly("memory_functions", &McResult::memory_functions)
      .def_readonly("surrogate_threshold", &McResult::surrogate_threshold)
      .def_readonly("total", &McResult::total)
      .def_readonly("max_linear_delay", &McResult::max_linear_delay)
      .def_readonly("even_sum", &McResult::even_sum)
      .def_readonly("odd_sum", &McResult::odd_sum)
      .def_readonly("tail_sum_2plus", &McResult::tail_sum_2plus);

  m.def(
      "memory_capacity",
      [](const std::vector<double>& inputs, const RealMatrix& features, int max_delay, Eigen::Index washout,
         int surrogates, std::uint64_t seed) {
        Rng rng(seed);
        McOptions opt;
        opt.max_delay = max_delay;
        opt.washout = washout;
        opt.surrogate_count = surrogates;
        py::gil_scoped_release release;
        return mc_report(inputs, features, opt, rng);
      },
      "inputs"_a, "features"_a, "max_delay"_a = 300, "washout"_a = 30000, "surrogates"_a = 100, "seed"_a = 0);

  py::class_<IpcDegreeResult>(m, "IpcDegreeResult")
      .def_readonly("degree", &IpcDegreeResult::degree)
      .def_readonly("max_delay", &IpcDegreeResult::max_delay)
      .def_readonly("raw", &IpcDegreeResult::raw)
      .def_readonly("thresholded", &IpcDegreeResult::thresholded)
      .def_readonly("surrogate_threshold", &IpcDegreeResult::surrogate_threshold)
      .def_readonly("raw_total", &IpcDegreeResult::raw_total)
      .def_readonly("total", &IpcDegreeResult::total);

  py::class_<IpcResult>(m, "IpcResult")
      .def_readonly("degrees", &IpcResult::degrees)
      .def_readonly("raw_total", &IpcResult::raw_total)
      .def_readonly("total", &IpcResult::total)
      .def_readonly("feature_rank", &IpcResult::feature_rank);

  m.def(
      "information_processing_capacity",
      [](const std::vector<double>& inputs, const RealMatrix& features, const std::vector<std::pair<int, int>>& budget,
         Eigen::Index washout, int surrogates, double input_low, double input_high, std::uint64_t seed) {
        IpcConfig cfg;
        cfg.budget = budget;
        cfg.washout = washout;
        cfg.surrogate_count = surrogates;
        cfg.input_low = input_low;
        cfg.input_high = input_high;
        Rng rng(seed);
        py::gil_scoped_release release;
        return ipc_report(inputs, features, cfg, rng);
      },
      "inputs"_a, "features"_a, "budget"_a, "washout"_a = 30000, "surrogates"_a = 100, "input_low"_a = -1.0,
      "input_high"_a = 1.0, "seed"_a = 0, "budget is a list of (degree, max_delay) pairs");

  py::class_<RankResult>(m, "RankResult")
      .def_readonly("centered", &RankResult::centered)
      .def_readonly("raw", &RankResult::raw)
      .def_readonly("centered_singular_values", &RankResult::centered_singular_values)
      .def_readonly("raw_singular_values", &RankResult::raw_singular_values);

  m.def("trajectory_rank", &trajectory_rank, "features"_a, "washout"_a = 0, "rel_threshold"_a = 1e-6);

  // Parameter sweeps.
  m.def(
      "default_sweep_config", [] { return config_to_json(SweepConfig{}); }, "Default sweep configuration as JSON text");
  m.def(
      "evaluate_point",
      [](const std::string& config_json, int index) {
        const auto cfg = config_from_json(config_json);
        const auto grid = sweep_grid(cfg);
        if (index < 0 || index >= static_cast<int>(grid.size())) throw py::index_error("grid index out of range");
        py::gil_scoped_release release;
        return evaluate_point(cfg, grid[static_cast<std::size_t>(index)]);
      },
      "config_json"_a, "index"_a, "Metric values at one grid point, ordered as the sweep columns");
  m.def(
      "sweep_columns", [](const std::string& config_json) { return config_from_json(config_json).columns(); },
      "config_json"_a);
  m.def(
      "run_sweep",
      [](const std::string& config_json, const std::optional<std::string>& out) {
        auto cfg = config_from_json(config_json);
        if (out) cfg.out = *out;
        cfg.validate();
        FieldResult r;
        {
          py::gil_scoped_release release;
          r = run_sweep(cfg);
          emit_field(r, cfg.out, format_for(cfg.out));
        }
        return field_to_dict(r);
      },
      "config_json"_a, "out"_a = py::none(),
      "Runs a sweep, writes the field file (and its checkpoint while running) at out, and returns the columns");
}
