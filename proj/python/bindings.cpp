#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "blockade/config.hpp"
#include "blockade/correlate.hpp"
#include "blockade/detchain.hpp"
#include "blockade/errors.hpp"
#include "blockade/filter.hpp"
#include "blockade/fitpeaks.hpp"
#include "blockade/hilbert.hpp"
#include "blockade/lindblad.hpp"
#include "blockade/mollow.hpp"
#include "blockade/pipelines.hpp"
#include "blockade/trajectories.hpp"

namespace py = pybind11;
using namespace blockade;

namespace {

struct Model {
    OperatorSet ops;
    Liouvillian L;
    DensityMatrix rho;
};

Model make_model(const DeviceParams& device, const DriveParams& drive, const BathParams& bath)
{
    OperatorSet ops = build_space(device);
    Liouvillian L = build_liouvillian(build_hamiltonian(ops, device, drive), device, bath);
    DensityMatrix rho = steady_state(L);
    return {std::move(ops), std::move(L), std::move(rho)};
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Photon-blockade simulator (C++ core)";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<StatisticsError>(m, "StatisticsError", PyExc_RuntimeError);

    py::class_<DeviceParams>(m, "DeviceParams")
        .def(py::init<>())
        .def_static("reference", &DeviceParams::reference)
        .def_readwrite("omega_r", &DeviceParams::omega_r)
        .def_readwrite("omega_a", &DeviceParams::omega_a)
        .def_readwrite("g", &DeviceParams::g)
        .def_readwrite("kappa", &DeviceParams::kappa)
        .def_readwrite("gamma", &DeviceParams::gamma)
        .def_readwrite("gamma_phi", &DeviceParams::gamma_phi)
        .def_readwrite("n_fock", &DeviceParams::n_fock)
        .def("validate", &DeviceParams::validate)
        .def_property_readonly("dim", &DeviceParams::dim);

    py::class_<DriveParams>(m, "DriveParams")
        .def(py::init<>())
        .def(py::init([](double omega_d, double omega_R) { return DriveParams{omega_d, omega_R}; }),
             py::arg("omega_d"), py::arg("omega_R"))
        .def_static("lower_polariton", &DriveParams::lower_polariton, py::arg("device"), py::arg("omega_R"))
        .def_readwrite("omega_d", &DriveParams::omega_d)
        .def_readwrite("omega_R", &DriveParams::omega_R);

    py::class_<BathParams>(m, "BathParams")
        .def(py::init<>())
        .def(py::init([](double n_th) { return BathParams{n_th}; }), py::arg("n_th"))
        .def_readwrite("n_th", &BathParams::n_th);

    py::class_<FilterSpec>(m, "FilterSpec")
        .def(py::init<>())
        .def_readwrite("cutoff_hz", &FilterSpec::cutoff_hz)
        .def_readwrite("n_taps", &FilterSpec::n_taps)
        .def_readwrite("sample_rate_hz", &FilterSpec::sample_rate_hz);

    m.def("build_hamiltonian", py::overload_cast<const DeviceParams&, const DriveParams&>(&build_hamiltonian),
          py::arg("device"), py::arg("drive"), "H/hbar in the drive frame, qubit (x) cavity order");
    m.def(
        "dressed_energies",
        [](const DeviceParams& device, int n) {
            const auto [minus, plus] = dressed_states(device, n);
            return std::pair{minus.energy, plus.energy};
        },
        py::arg("device"), py::arg("n"));
    m.def(
        "steady_state",
        [](const DeviceParams& device, const DriveParams& drive, const BathParams& bath) {
            return make_model(device, drive, bath).rho.matrix();
        },
        py::arg("device"), py::arg("drive"), py::arg("bath") = BathParams{});

    py::class_<CorrelationTrace>(m, "CorrelationTrace")
        .def_readonly("tau", &CorrelationTrace::tau)
        .def_readonly("values", &CorrelationTrace::values)
        .def_readonly("errors", &CorrelationTrace::errors)
        .def_readonly("normalized", &CorrelationTrace::normalized)
        .def_readonly("normalization_constant", &CorrelationTrace::normalization_constant)
        .def("real_values", &CorrelationTrace::real_values);

    py::class_<SpectrumTrace>(m, "SpectrumTrace")
        .def(py::init([](std::vector<double> freq, std::vector<double> psd) {
                 SpectrumTrace s;
                 s.freq = std::move(freq);
                 s.psd = std::move(psd);
                 return s;
             }),
             py::arg("freq"), py::arg("psd"))
        .def_readonly("freq", &SpectrumTrace::freq)
        .def_readonly("psd", &SpectrumTrace::psd)
        .def_readonly("errors", &SpectrumTrace::errors)
        .def_readonly("coherent_weight", &SpectrumTrace::coherent_weight)
        .def("integrated", &SpectrumTrace::integrated);

    m.def(
        "g2",
        [](const DeviceParams& device, const DriveParams& drive, const std::vector<double>& tau,
           const BathParams& bath) {
            const Model model = make_model(device, drive, bath);
            return g2_trace(model.L, model.rho, model.ops.a, tau, true);
        },
        py::arg("device"), py::arg("drive"), py::arg("tau"), py::arg("bath") = BathParams{},
        "Normalized cavity g2(tau) by quantum regression");
    m.def(
        "emission_spectrum",
        [](const DeviceParams& device, const DriveParams& drive, const std::vector<double>& tau,
           const std::vector<double>& freq, const BathParams& bath) {
            const Model model = make_model(device, drive, bath);
            const CorrelationTrace g1 = g1_trace(model.L, model.rho, model.ops.a, tau);
            return emission_spectrum(g1, model.rho, model.ops.a, freq);
        },
        py::arg("device"), py::arg("drive"), py::arg("tau"), py::arg("freq"), py::arg("bath") = BathParams{});
    m.def("filter_g2", &filter_g2, py::arg("g2"), py::arg("filter") = FilterSpec{});

    py::class_<TwoLevelParams>(m, "TwoLevelParams")
        .def(py::init<>())
        .def_readwrite("gamma1", &TwoLevelParams::gamma1)
        .def_readwrite("gamma2", &TwoLevelParams::gamma2)
        .def_readwrite("omega", &TwoLevelParams::omega)
        .def_readwrite("delta", &TwoLevelParams::delta);
    m.def("effective_two_level", &effective_two_level, py::arg("device"), py::arg("drive"));
    m.def(
        "tls_spectrum",
        [](const TwoLevelParams& p, const std::vector<double>& freq) { return tls_spectrum(p, freq); },
        py::arg("params"), py::arg("freq"));
    m.def("side_peak_offset", &side_peak_offset, py::arg("params"));

    py::class_<TripletFit>(m, "TripletFit")
        .def_readonly("center_freq", &TripletFit::center_freq)
        .def_readonly("omega_sp", &TripletFit::omega_sp)
        .def_readonly("widths", &TripletFit::widths)
        .def_readonly("amplitudes", &TripletFit::amplitudes)
        .def_readonly("residual_rms", &TripletFit::residual_rms)
        .def_readonly("converged", &TripletFit::converged);
    m.def(
        "fit_triplet",
        [](const SpectrumTrace& spec, double drive_hint, int mask_half_width_bins) {
            FitOptions o;
            o.drive_hint = drive_hint;
            o.mask_half_width_bins = mask_half_width_bins;
            return fit_triplet(spec, o);
        },
        py::arg("spectrum"), py::arg("drive_hint") = 0.0, py::arg("mask_half_width_bins") = 0);

    py::class_<EmissionRecord>(m, "EmissionRecord")
        .def_readonly("duration", &EmissionRecord::duration)
        .def_readonly("cavity_jumps", &EmissionRecord::cavity_jumps)
        .def_readonly("qubit_jumps", &EmissionRecord::qubit_jumps)
        .def_readonly("seed", &EmissionRecord::seed);
    m.def(
        "mcwf_run",
        [](const DeviceParams& device, const DriveParams& drive, double duration, std::uint64_t seed,
           const BathParams& bath) { return mcwf_run(build_hamiltonian(device, drive), device, duration, seed, bath); },
        py::arg("device"), py::arg("drive"), py::arg("duration"), py::arg("seed"), py::arg("bath") = BathParams{});
    m.def(
        "jump_g2",
        [](const std::vector<EmissionRecord>& records, const std::vector<double>& tau, double bin_width) {
            return jump_g2(records, tau, bin_width);
        },
        py::arg("records"), py::arg("tau"), py::arg("bin_width"));

    py::class_<RecordGeometry>(m, "RecordGeometry")
        .def(py::init<>())
        .def(py::init([](double sample_rate, std::uint32_t segment_len, std::uint32_t n_segments) {
                 return RecordGeometry{sample_rate, segment_len, n_segments};
             }),
             py::arg("sample_rate") = 100e6, py::arg("segment_len") = 8192, py::arg("n_segments") = 512)
        .def_readwrite("sample_rate", &RecordGeometry::sample_rate)
        .def_readwrite("segment_len", &RecordGeometry::segment_len)
        .def_readwrite("n_segments", &RecordGeometry::n_segments);
    py::class_<QuadratureRecord>(m, "QuadratureRecord")
        .def_readonly("geometry", &QuadratureRecord::geometry)
        .def_readonly("seed", &QuadratureRecord::seed)
        .def_property_readonly("ch1",
                               [](const QuadratureRecord& r) {
                                   return Eigen::Map<const Eigen::VectorXcd>(r.ch1.data(), r.ch1.size());
                               })
        .def_property_readonly("ch2", [](const QuadratureRecord& r) {
            return Eigen::Map<const Eigen::VectorXcd>(r.ch2.data(), r.ch2.size());
        });
    m.def("noise_photons", &noise_photons, py::arg("T_n"), py::arg("carrier_hz"));
    m.def("synth_coherent", &synth_coherent, py::arg("alpha"), py::arg("kappa"), py::arg("geometry"),
          py::arg("seed"));
    m.def("synth_thermal", &synth_thermal, py::arg("n_th"), py::arg("kappa"), py::arg("geometry"),
          py::arg("seed"));
    m.def("synth_blockade", &synth_blockade, py::arg("geometry"), py::arg("emission"), py::arg("kappa"),
          py::arg("seed"));
    m.def("beamsplit_and_amplify",
          py::overload_cast<const QuadratureRecord&, double, std::uint64_t>(&beamsplit_and_amplify),
          py::arg("source"), py::arg("n_noise"), py::arg("seed"));
    m.def("apply_digital_filter", &apply_digital_filter, py::arg("record"), py::arg("filter") = FilterSpec{});
    m.def(
        "estimate_g2",
        [](const QuadratureRecord& sig, const QuadratureRecord& ref, const std::vector<double>& tau) {
            return estimate_g2(sig, ref, tau);
        },
        py::arg("signal"), py::arg("reference"), py::arg("tau"));
    m.def("estimate_cross_spectrum", &estimate_cross_spectrum, py::arg("signal"), py::arg("reference"));

    m.def(
        "run",
        [](const std::string& command, const std::string& config_text, const std::filesystem::path& out_dir,
           std::optional<std::uint64_t> seed, unsigned threads) {
            RunConfig cfg = load_run_config(ConfigFile::parse(config_text), seed);
            cfg.out_dir = out_dir;
            cfg.threads = threads;
            CommandResult r;
            if (command == "spectrum")
                r = cmd_spectrum(cfg);
            else if (command == "g2")
                r = cmd_g2(cfg);
            else if (command == "mollow-scan")
                r = cmd_mollow_scan(cfg);
            else if (command == "synth")
                r = cmd_synth(cfg);
            else
                throw ConfigError("unknown command '" + command + "'");
            return r.files;
        },
        py::arg("command"), py::arg("config_text"), py::arg("out_dir"), py::arg("seed") = py::none(),
        py::arg("threads") = 1, "Run a pipeline on config text; returns the written files");
}
