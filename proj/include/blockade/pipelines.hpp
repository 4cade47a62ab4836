#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "blockade/config.hpp"
#include "blockade/detchain.hpp"
#include "blockade/filter.hpp"
#include "blockade/hilbert.hpp"
#include "blockade/lindblad.hpp"

namespace blockade {

enum class SourceKind { blockade, thermal, coherent };

// Everything a pipeline needs. Frequencies and rates in rad/s, times in s.
struct RunConfig {
    DeviceParams device = DeviceParams::reference();
    std::vector<double> rabi;               // drive sweep (omega_R values)
    std::optional<double> drive_frequency;  // absolute omega_d; empty drives at omega_r - g
    BathParams bath;
    FilterSpec filter;
    NoiseModel noise;
    RecordGeometry geometry;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir = "out";

    SourceKind source = SourceKind::blockade;
    double source_alpha = 1.0; // intracavity coherent amplitude
    double source_n_th = 1.4;  // thermal source occupation

    double g2_tau_max = 1e-6;
    double g2_dtau = 1e-9;
    double spectrum_tau_max = 4e-6;
    double spectrum_dtau = 0.5e-9;
    double spectrum_span = 2.0 * 3.141592653589793 * 40e6;
    int spectrum_points = 801;
    double blockade_warmup = 2e-6;
    double estimate_tau_max = 1e-6;
    bool estimate_filter = true;

    unsigned threads = 1;

    // SHA-256 of the canonical config text and seed; threads and output
    // directory do not enter.
    std::string config_hash;

    DriveParams drive(double omega_R) const;
};

// Known keys with their units are listed in the README.
RunConfig load_run_config(const ConfigFile& file, std::optional<std::uint64_t> seed_override = {});

std::string source_name(SourceKind kind);

struct CommandResult {
    std::vector<std::filesystem::path> files;
};

CommandResult cmd_spectrum(const RunConfig& cfg);
CommandResult cmd_g2(const RunConfig& cfg);
CommandResult cmd_mollow_scan(const RunConfig& cfg);
CommandResult cmd_synth(const RunConfig& cfg);
// Inputs from more than one configuration (per their sidecars) are refused
// with ConfigError unless allow_mixed is set.
CommandResult cmd_estimate(const RunConfig& cfg, const std::vector<std::filesystem::path>& signal,
                           const std::vector<std::filesystem::path>& reference, bool allow_mixed = false);

// config_hash from the file's "<name>.json" sidecar, "external" without one.
std::string provenance_of(const std::filesystem::path& file);

// Model pieces shared by the pipelines and the tests.
struct CavityReference {
    DeviceParams device;
    DriveParams drive;
    BathParams bath;
};
// Bare cavity (g = 0) with a resonant drive giving <a> of modulus alpha.
CavityReference coherent_reference(const DeviceParams& device, double alpha);
// Bare undriven cavity in a thermal bath with occupation n_th; the Fock
// truncation is raised until the Bose tail beyond it is below 1e-9.
CavityReference thermal_reference(const DeviceParams& device, double n_th);

} // namespace blockade
