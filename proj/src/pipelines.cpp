#include "blockade/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include <json.hpp>

#include "blockade/correlate.hpp"
#include "blockade/errors.hpp"
#include "blockade/fitpeaks.hpp"
#include "blockade/io.hpp"
#include "blockade/mollow.hpp"
#include "blockade/rng.hpp"
#include "blockade/trajectories.hpp"
#include "blockade/units.hpp"

namespace blockade {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> known_keys = {
    "device.omega_r", "device.omega_a", "device.g", "device.kappa", "device.gamma", "device.gamma_phi",
    "device.n_fock", "drive.rabi", "drive.frequency", "bath.n_th", "filter.cutoff", "filter.taps",
    "noise.temperature", "noise.carrier", "record.sample_rate", "record.segment_len", "record.segments",
    "seed", "output.dir", "source.kind", "source.alpha", "source.n_th", "g2.tau_max", "g2.dtau",
    "spectrum.tau_max", "spectrum.dtau", "spectrum.span", "spectrum.points", "blockade.warmup",
    "estimate.tau_max", "estimate.filter"};

// Distinct RNG streams of the run seed.
enum Stream : std::uint64_t { source_stream = 1, signal_noise = 2, reference_noise = 3, trajectory = 4, routing = 5 };

std::uint64_t derived_seed(std::uint64_t seed, Stream s) { return CounterRng(seed, s).next(); }

// Runs fn(i) for i < n on up to `threads` workers with a fixed index
// partition. The first failure in index order is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn)
{
    std::vector<std::exception_ptr> errors(n);
    const unsigned workers = static_cast<unsigned>(std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1)));
    auto work = [&](unsigned w) {
        for (std::size_t i = w; i < n; i += workers) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(work, w);
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

ordered_json device_json(const DeviceParams& d)
{
    return {{"omega_r", d.omega_r}, {"omega_a", d.omega_a}, {"g", d.g}, {"kappa", d.kappa},
            {"gamma", d.gamma}, {"gamma_phi", d.gamma_phi}, {"n_fock", d.n_fock}};
}

ordered_json base_sidecar(const RunConfig& cfg, const std::string& kind)
{
    ordered_json j;
    j["kind"] = kind;
    j["config_hash"] = cfg.config_hash;
    j["seed"] = cfg.seed;
    j["units"] = {{"frequency", "rad/s"}, {"time", "s"}};
    j["tensor_order"] = tensor_order;
    return j;
}

void write_sidecar(const fs::path& file, const ordered_json& j)
{
    io::write_text(fs::path(file.string() + ".json"), j.dump(2) + "\n");
}

std::string indexed(const std::string& stem, std::size_t i, const std::string& ext)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03zu", i);
    return stem + "_" + buf + ext;
}

struct NumericSpectrum {
    SpectrumTrace spectrum;
    double n_mean = 0.0;
};

NumericSpectrum numeric_spectrum(const RunConfig& cfg, const DriveParams& drive)
{
    const OperatorSet ops = build_space(cfg.device);
    const Liouvillian L = build_liouvillian(build_hamiltonian(ops, cfg.device, drive), cfg.device, cfg.bath);
    const DensityMatrix rho = steady_state(L);
    const auto n_tau = static_cast<std::size_t>(std::llround(cfg.spectrum_tau_max / cfg.spectrum_dtau)) + 1;
    const auto tau = uniform_grid(0.0, cfg.spectrum_dtau * static_cast<double>(n_tau - 1), n_tau);
    const auto freq = uniform_grid(-cfg.spectrum_span, cfg.spectrum_span, static_cast<std::size_t>(cfg.spectrum_points));
    const CorrelationTrace g1 = g1_trace(L, rho, ops.a, tau);
    return {emission_spectrum(g1, rho, ops.a, freq), rho.expect(ops.a_dag * ops.a).real()};
}

std::vector<double> g2_grid(const RunConfig& cfg)
{
    const auto n = static_cast<std::size_t>(std::llround(cfg.g2_tau_max / cfg.g2_dtau)) + 1;
    return uniform_grid(0.0, cfg.g2_dtau * static_cast<double>(n - 1), n);
}

CorrelationTrace model_g2(const DeviceParams& device, const DriveParams& drive, const BathParams& bath,
                          std::span<const double> tau)
{
    const OperatorSet ops = build_space(device);
    const Liouvillian L = build_liouvillian(build_hamiltonian(ops, device, drive), device, bath);
    const DensityMatrix rho = steady_state(L);
    return g2_trace(L, rho, ops.a, tau, true);
}

void write_manifest(const RunConfig& cfg, const std::string& command, const ordered_json& entries,
                    CommandResult& result)
{
    ordered_json m = base_sidecar(cfg, "manifest");
    m["command"] = command;
    m["entries"] = entries;
    const fs::path p = cfg.out_dir / "manifest.json";
    io::write_text(p, m.dump(2) + "\n");
    result.files.push_back(p);
}

QuadratureRecord vacuum_record(const RecordGeometry& geom)
{
    return split_field(std::vector<cplx>(geom.total_samples()), geom, 0);
}

QuadratureRecord concatenate(const std::vector<fs::path>& files)
{
    if (files.empty())
        throw ConfigError("no record files given");
    QuadratureRecord out = io::read_qrec(files.front());
    for (std::size_t k = 1; k < files.size(); ++k) {
        const QuadratureRecord next = io::read_qrec(files[k]);
        if (next.geometry.sample_rate != out.geometry.sample_rate
            || next.geometry.segment_len != out.geometry.segment_len)
            throw ConfigError("record files " + files.front().string() + " and " + files[k].string()
                              + " have different geometry");
        out.ch1.insert(out.ch1.end(), next.ch1.begin(), next.ch1.end());
        out.ch2.insert(out.ch2.end(), next.ch2.begin(), next.ch2.end());
        out.geometry.n_segments += next.geometry.n_segments;
    }
    return out;
}

} // namespace

std::string provenance_of(const fs::path& file)
{
    const fs::path side(file.string() + ".json");
    if (!fs::exists(side))
        return "external";
    try {
        const auto j = nlohmann::json::parse(io::read_text(side));
        return j.value("config_hash", std::string("external"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(side.string() + ": " + e.what());
    }
}

DriveParams RunConfig::drive(double omega_R) const
{
    if (drive_frequency)
        return {*drive_frequency, omega_R};
    return DriveParams::lower_polariton(device, omega_R);
}

std::string source_name(SourceKind kind)
{
    switch (kind) {
    case SourceKind::blockade: return "blockade";
    case SourceKind::thermal: return "thermal";
    case SourceKind::coherent: return "coherent";
    }
    return "unknown";
}

RunConfig load_run_config(const ConfigFile& f, std::optional<std::uint64_t> seed_override)
{
    f.require_known(known_keys);
    RunConfig c;
    auto freq = [&](const char* key, double& dst) {
        if (f.has(key))
            dst = f.frequency(key);
    };
    auto time = [&](const char* key, double& dst) {
        if (f.has(key))
            dst = f.time(key);
    };
    freq("device.omega_r", c.device.omega_r);
    c.device.omega_a = c.device.omega_r;
    freq("device.omega_a", c.device.omega_a);
    freq("device.g", c.device.g);
    freq("device.kappa", c.device.kappa);
    freq("device.gamma", c.device.gamma);
    freq("device.gamma_phi", c.device.gamma_phi);
    if (f.has("device.n_fock"))
        c.device.n_fock = static_cast<int>(f.integer("device.n_fock"));

    if (f.has("drive.rabi"))
        c.rabi = f.frequency_list("drive.rabi");
    if (f.has("drive.frequency") && f.text("drive.frequency") != "lower_polariton")
        c.drive_frequency = f.frequency("drive.frequency");
    if (f.has("bath.n_th"))
        c.bath.n_th = f.number("bath.n_th");
    if (f.has("filter.cutoff"))
        c.filter.cutoff_hz = f.frequency_hz("filter.cutoff");
    if (f.has("filter.taps"))
        c.filter.n_taps = static_cast<int>(f.integer("filter.taps"));
    if (f.has("noise.temperature"))
        c.noise.T_n = f.temperature("noise.temperature");
    if (f.has("noise.carrier"))
        c.noise.carrier_hz = f.frequency_hz("noise.carrier");
    if (f.has("record.sample_rate"))
        c.geometry.sample_rate = f.frequency_hz("record.sample_rate");
    if (f.has("record.segment_len"))
        c.geometry.segment_len = static_cast<std::uint32_t>(f.integer("record.segment_len"));
    if (f.has("record.segments"))
        c.geometry.n_segments = static_cast<std::uint32_t>(f.integer("record.segments"));
    c.filter.sample_rate_hz = c.geometry.sample_rate;
    if (f.has("seed"))
        c.seed = static_cast<std::uint64_t>(f.integer("seed"));
    if (seed_override)
        c.seed = *seed_override;
    if (f.has("output.dir"))
        c.out_dir = f.text("output.dir");
    if (f.has("source.kind")) {
        const std::string k = f.text("source.kind");
        if (k == "blockade")
            c.source = SourceKind::blockade;
        else if (k == "thermal")
            c.source = SourceKind::thermal;
        else if (k == "coherent")
            c.source = SourceKind::coherent;
        else
            throw ConfigError("source.kind must be blockade, thermal or coherent");
    }
    if (f.has("source.alpha"))
        c.source_alpha = f.number("source.alpha");
    if (f.has("source.n_th"))
        c.source_n_th = f.number("source.n_th");
    time("g2.tau_max", c.g2_tau_max);
    time("g2.dtau", c.g2_dtau);
    time("spectrum.tau_max", c.spectrum_tau_max);
    time("spectrum.dtau", c.spectrum_dtau);
    freq("spectrum.span", c.spectrum_span);
    if (f.has("spectrum.points"))
        c.spectrum_points = static_cast<int>(f.integer("spectrum.points"));
    time("blockade.warmup", c.blockade_warmup);
    time("estimate.tau_max", c.estimate_tau_max);
    if (f.has("estimate.filter"))
        c.estimate_filter = f.flag("estimate.filter");

    try {
        c.device.validate();
        c.filter.validate();
        c.geometry.validate();
        for (double r : c.rabi)
            c.drive(r).validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    for (double x : {c.g2_tau_max, c.g2_dtau, c.spectrum_tau_max, c.spectrum_dtau, c.spectrum_span,
                     c.estimate_tau_max})
        if (!(x > 0.0))
            throw ConfigError("grid extents and steps must be positive");
    if (c.spectrum_points < 8)
        throw ConfigError("spectrum.points must be at least 8");
    if (!(c.bath.n_th >= 0.0) || !(c.source_n_th >= 0.0) || !(c.blockade_warmup >= 0.0))
        throw ConfigError("occupations and warm-up time must be non-negative");

    c.config_hash = io::sha256_hex(f.canonical() + "seed = " + std::to_string(c.seed) + "\n");
    return c;
}

CavityReference coherent_reference(const DeviceParams& device, double alpha)
{
    CavityReference r;
    r.device = device;
    r.device.g = 0.0;
    const double n = alpha * alpha;
    // Poisson tail beyond the truncation below 1e-12.
    int N = 2;
    double p = std::exp(-n), tail = 1.0 - p;
    for (int k = 1; tail > 1e-12 && k < 200; ++k) {
        p *= n / k;
        tail -= p;
        N = k + 2;
    }
    r.device.n_fock = std::max(device.n_fock, N);
    r.drive = {device.omega_r, device.kappa * alpha / std::sqrt(2.0)};
    return r;
}

CavityReference thermal_reference(const DeviceParams& device, double n_th)
{
    CavityReference r;
    r.device = device;
    r.device.g = 0.0;
    const double q = n_th / (1.0 + n_th);
    int N = 2;
    while (std::pow(q, N) > 1e-9)
        ++N;
    r.device.n_fock = std::max(device.n_fock, N);
    r.drive = {device.omega_r, 0.0};
    r.bath.n_th = n_th;
    return r;
}

CommandResult cmd_spectrum(const RunConfig& cfg)
{
    if (cfg.rabi.empty())
        throw ConfigError("drive.rabi is required for spectrum");
    const std::size_t n = cfg.rabi.size();
    std::vector<NumericSpectrum> numeric(n);
    std::vector<SpectrumTrace> analytic(n);
    parallel_for(n, cfg.threads, [&](std::size_t i) {
        const DriveParams drive = cfg.drive(cfg.rabi[i]);
        numeric[i] = numeric_spectrum(cfg, drive);
        SpectrumTrace a = tls_spectrum(effective_two_level(cfg.device, drive), numeric[i].spectrum.freq);
        for (double& v : a.psd)
            v *= cavity_weight_of_lower_polariton;
        a.coherent_weight *= cavity_weight_of_lower_polariton;
        analytic[i] = std::move(a);
    });

    CommandResult result;
    ordered_json entries = ordered_json::array();
    for (std::size_t i = 0; i < n; ++i) {
        const fs::path pn = cfg.out_dir / indexed("spectrum_numeric", i, ".csv");
        const fs::path pa = cfg.out_dir / indexed("spectrum_analytic", i, ".csv");
        io::write_spectrum_csv(pn, numeric[i].spectrum);
        io::write_spectrum_csv(pa, analytic[i]);
        for (const auto& [path, spec, kind] : {std::tuple{pn, &numeric[i].spectrum, "master_equation"},
                                               std::tuple{pa, &analytic[i], "two_level"}}) {
            ordered_json j = base_sidecar(cfg, std::string("spectrum_") + kind);
            j["omega_R"] = cfg.rabi[i];
            j["omega_d"] = cfg.drive(cfg.rabi[i]).omega_d;
            j["device"] = device_json(cfg.device);
            j["bath_n_th"] = cfg.bath.n_th;
            j["coherent_weight"] = spec->coherent_weight;
            j["coherent_freq"] = spec->coherent_freq;
            j["normalization"] = "integral over omega equals incoherent photon number";
            write_sidecar(path, j);
            result.files.push_back(path);
        }
        entries.push_back({{"omega_R", cfg.rabi[i]},
                           {"numeric", pn.filename().string()},
                           {"analytic", pa.filename().string()},
                           {"numeric_sha256", io::sha256_file(pn)},
                           {"analytic_sha256", io::sha256_file(pa)},
                           {"coherent_weight", numeric[i].spectrum.coherent_weight},
                           {"mean_photons", numeric[i].n_mean}});
    }
    write_manifest(cfg, "spectrum", entries, result);
    return result;
}

CommandResult cmd_g2(const RunConfig& cfg)
{
    const auto tau = g2_grid(cfg);
    struct Job {
        std::string name;
        DeviceParams device;
        DriveParams drive;
        BathParams bath;
        double omega_R = 0.0;
    };
    std::vector<Job> jobs;
    if (cfg.source == SourceKind::blockade) {
        if (cfg.rabi.empty())
            throw ConfigError("drive.rabi is required for blockade g2");
        for (std::size_t i = 0; i < cfg.rabi.size(); ++i)
            jobs.push_back({indexed("g2_blockade", i, ""), cfg.device, cfg.drive(cfg.rabi[i]), cfg.bath, cfg.rabi[i]});
    } else if (cfg.source == SourceKind::thermal) {
        const auto r = thermal_reference(cfg.device, cfg.source_n_th);
        jobs.push_back({"g2_thermal", r.device, r.drive, r.bath, 0.0});
    } else {
        const auto r = coherent_reference(cfg.device, cfg.source_alpha);
        jobs.push_back({"g2_coherent", r.device, r.drive, r.bath, r.drive.omega_R});
    }

    std::vector<CorrelationTrace> raw(jobs.size()), filtered(jobs.size());
    parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
        raw[i] = model_g2(jobs[i].device, jobs[i].drive, jobs[i].bath, tau);
        filtered[i] = filter_g2(raw[i], cfg.filter);
    });

    CommandResult result;
    ordered_json entries = ordered_json::array();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const fs::path pr = cfg.out_dir / (jobs[i].name + ".csv");
        const fs::path pf = cfg.out_dir / (jobs[i].name + "_filtered.csv");
        io::write_trace_csv(pr, raw[i]);
        io::write_trace_csv(pf, filtered[i]);
        for (const auto& [path, tr, filt] : {std::tuple{pr, &raw[i], false}, std::tuple{pf, &filtered[i], true}}) {
            ordered_json j = base_sidecar(cfg, "g2");
            j["source"] = source_name(cfg.source);
            j["omega_R"] = jobs[i].omega_R;
            j["omega_d"] = jobs[i].drive.omega_d;
            j["device"] = device_json(jobs[i].device);
            j["bath_n_th"] = jobs[i].bath.n_th;
            j["normalization_constant"] = tr->normalization_constant;
            j["filtered"] = filt;
            if (filt)
                j["filter"] = {{"cutoff_hz", cfg.filter.cutoff_hz},
                               {"n_taps", cfg.filter.n_taps},
                               {"sample_rate_hz", cfg.filter.sample_rate_hz}};
            write_sidecar(path, j);
            result.files.push_back(path);
        }
        entries.push_back({{"omega_R", jobs[i].omega_R},
                           {"unfiltered", pr.filename().string()},
                           {"filtered", pf.filename().string()},
                           {"unfiltered_sha256", io::sha256_file(pr)},
                           {"filtered_sha256", io::sha256_file(pf)}});
    }
    write_manifest(cfg, "g2", entries, result);
    return result;
}

CommandResult cmd_mollow_scan(const RunConfig& cfg)
{
    if (cfg.rabi.empty())
        throw ConfigError("drive.rabi is required for mollow-scan");
    const std::size_t n = cfg.rabi.size();
    std::vector<TripletFit> fits(n);
    std::vector<std::optional<double>> analytic(n);
    std::vector<std::string> spec_hash(n);
    parallel_for(n, cfg.threads, [&](std::size_t i) {
        const DriveParams drive = cfg.drive(cfg.rabi[i]);
        const NumericSpectrum s = numeric_spectrum(cfg, drive);
        std::string csv = "freq,value\n";
        char buf[64];
        for (std::size_t k = 0; k < s.spectrum.freq.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s.spectrum.freq[k], s.spectrum.psd[k]);
            csv += buf;
        }
        spec_hash[i] = io::sha256_hex(csv);
        FitOptions opts;
        opts.drive_hint = cfg.rabi[i];
        fits[i] = fit_triplet(s.spectrum, opts);
        analytic[i] = side_peak_offset(effective_two_level(cfg.device, drive));
    });

    auto cell = [](const std::optional<double>& x) {
        if (!x)
            return std::string();
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", *x);
        return std::string(buf);
    };
    std::string table = "omega_R,omega_sp_fit,omega_sp_analytic,omega_sp_ref,fit_converged\n";
    ordered_json fits_json = ordered_json::array();
    for (std::size_t i = 0; i < n; ++i) {
        table += cell(cfg.rabi[i]) + "," + cell(fits[i].omega_sp) + "," + cell(analytic[i]) + ","
            + cell(cfg.rabi[i]) + "," + (fits[i].converged ? "1" : "0") + "\n";
        ordered_json f;
        f["omega_R"] = cfg.rabi[i];
        f["center_freq"] = fits[i].center_freq;
        f["omega_sp"] = fits[i].omega_sp ? ordered_json(*fits[i].omega_sp) : ordered_json(nullptr);
        f["widths"] = fits[i].widths;
        f["amplitudes"] = fits[i].amplitudes;
        f["residual_rms"] = fits[i].residual_rms;
        f["converged"] = fits[i].converged;
        f["input_sha256"] = spec_hash[i];
        fits_json.push_back(f);
    }
    CommandResult result;
    const fs::path pt = cfg.out_dir / "mollow_scan.csv";
    io::write_text(pt, table);
    ordered_json side = base_sidecar(cfg, "mollow_scan");
    side["device"] = device_json(cfg.device);
    write_sidecar(pt, side);
    result.files.push_back(pt);

    ordered_json fj = base_sidecar(cfg, "triplet_fits");
    fj["fits"] = fits_json;
    const fs::path pf = cfg.out_dir / "fits.json";
    io::write_text(pf, fj.dump(2) + "\n");
    result.files.push_back(pf);

    write_manifest(cfg, "mollow-scan",
                   ordered_json::array({{{"table", pt.filename().string()}, {"sha256", io::sha256_file(pt)}}}),
                   result);
    return result;
}

CommandResult cmd_synth(const RunConfig& cfg)
{
    const RecordGeometry& geom = cfg.geometry;
    const double kappa = cfg.device.kappa;
    CommandResult result;
    ordered_json entries = ordered_json::array();
    QuadratureRecord src;
    switch (cfg.source) {
    case SourceKind::coherent:
        src = synth_coherent(cfg.source_alpha, kappa, geom, derived_seed(cfg.seed, source_stream));
        break;
    case SourceKind::thermal:
        src = synth_thermal(cfg.source_n_th, kappa, geom, derived_seed(cfg.seed, source_stream));
        break;
    case SourceKind::blockade: {
        if (cfg.rabi.empty())
            throw ConfigError("drive.rabi is required for blockade synthesis");
        const DriveParams drive = cfg.drive(cfg.rabi.front());
        const Operator H = build_hamiltonian(cfg.device, drive);
        const double total = cfg.blockade_warmup + geom.duration() + 1e-6;
        const EmissionRecord full = mcwf_run(H, cfg.device, total, derived_seed(cfg.seed, trajectory), cfg.bath);
        const EmissionRecord em = full.trimmed(cfg.blockade_warmup);
        const fs::path pj = cfg.out_dir / "emission.qjmp";
        io::write_qjmp(pj, em);
        ordered_json j = base_sidecar(cfg, "emission_record");
        j["omega_R"] = cfg.rabi.front();
        j["device"] = device_json(cfg.device);
        j["warmup"] = cfg.blockade_warmup;
        write_sidecar(pj, j);
        result.files.push_back(pj);
        entries.push_back({{"file", pj.filename().string()}, {"sha256", io::sha256_file(pj)}});
        src = synth_blockade(geom, em, kappa, derived_seed(cfg.seed, routing));
        break;
    }
    }
    const QuadratureRecord signal = beamsplit_and_amplify(src, cfg.noise, derived_seed(cfg.seed, signal_noise));
    const QuadratureRecord reference
        = beamsplit_and_amplify(vacuum_record(geom), cfg.noise, derived_seed(cfg.seed, reference_noise));
    for (const auto& [name, rec] : {std::pair{"signal.qrec", &signal}, std::pair{"reference.qrec", &reference}}) {
        const fs::path p = cfg.out_dir / name;
        io::write_qrec(p, *rec);
        ordered_json j = base_sidecar(cfg, "quadrature_record");
        j["role"] = std::string(name).substr(0, std::string(name).find('.'));
        j["source"] = source_name(cfg.source);
        j["record_seed"] = rec->seed;
        j["n_noise"] = cfg.noise.n_noise();
        j["kappa"] = kappa;
        j["sample_rate_hz"] = geom.sample_rate;
        write_sidecar(p, j);
        result.files.push_back(p);
        entries.push_back({{"file", p.filename().string()}, {"sha256", io::sha256_file(p)}});
    }
    write_manifest(cfg, "synth", entries, result);
    return result;
}

CommandResult cmd_estimate(const RunConfig& cfg, const std::vector<fs::path>& signal_files,
                           const std::vector<fs::path>& reference_files, bool allow_mixed)
{
    std::vector<std::string> hashes;
    ordered_json inputs = ordered_json::array();
    for (const auto* list : {&signal_files, &reference_files})
        for (const auto& f : *list) {
            hashes.push_back(provenance_of(f));
            inputs.push_back({{"file", f.filename().string()}, {"sha256", io::sha256_file(f)}, {"config_hash", hashes.back()}});
        }
    std::sort(hashes.begin(), hashes.end());
    hashes.erase(std::unique(hashes.begin(), hashes.end()), hashes.end());
    if (hashes.size() > 1 && !allow_mixed)
        throw ConfigError("input records come from different configurations; pass the override flag to mix them");

    QuadratureRecord sig = concatenate(signal_files);
    QuadratureRecord ref = concatenate(reference_files);
    if (!(sig.geometry == ref.geometry))
        throw ConfigError("signal and reference records have different geometry");
    FilterSpec filt = cfg.filter;
    filt.sample_rate_hz = sig.geometry.sample_rate;
    if (cfg.estimate_filter) {
        sig = apply_digital_filter(sig, filt);
        ref = apply_digital_filter(ref, filt);
    }
    const double dt = sig.geometry.dt();
    const auto n_tau = static_cast<std::size_t>(std::floor(cfg.estimate_tau_max / dt + 1e-9)) + 1;
    std::vector<double> tau(n_tau);
    for (std::size_t k = 0; k < n_tau; ++k)
        tau[k] = static_cast<double>(k) * dt;

    const SpectrumTrace spec = estimate_cross_spectrum(sig, ref);
    const CorrelationTrace g2 = estimate_g2(sig, ref, tau);

    CommandResult result;
    const fs::path pg = cfg.out_dir / "g2_estimate.csv";
    const fs::path ps = cfg.out_dir / "spectrum_estimate.csv";
    io::write_trace_csv(pg, g2);
    io::write_spectrum_csv(ps, spec);
    ordered_json jg = base_sidecar(cfg, "g2_estimate");
    jg["normalization_constant"] = g2.normalization_constant;
    jg["filtered"] = cfg.estimate_filter;
    jg["tail_fraction"] = EstimatorOptions{}.tail_fraction;
    write_sidecar(pg, jg);
    ordered_json js = base_sidecar(cfg, "cross_spectrum_estimate");
    js["filtered"] = cfg.estimate_filter;
    js["units"]["psd"] = "photons/s per rad/s, per arm";
    write_sidecar(ps, js);
    result.files.push_back(pg);
    result.files.push_back(ps);

    ordered_json prov = base_sidecar(cfg, "provenance");
    prov["inputs"] = inputs;
    prov["mixed_provenance"] = hashes.size() > 1;
    prov["outputs"] = {{{"file", pg.filename().string()}, {"sha256", io::sha256_file(pg)}},
                       {{"file", ps.filename().string()}, {"sha256", io::sha256_file(ps)}}};
    const fs::path pp = cfg.out_dir / "provenance.json";
    io::write_text(pp, prov.dump(2) + "\n");
    result.files.push_back(pp);
    return result;
}

} // namespace blockade
