#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "blockade/config.hpp"
#include "blockade/errors.hpp"
#include "blockade/pipelines.hpp"

namespace {

enum Exit { ok = 0, failure = 1, config_error = 2, numeric_error = 3, statistics_error = 4 };

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Photon-blockade simulator and detection-chain estimator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    app.fallthrough();
    unsigned threads = 1;
    app.add_option("--config", config_path, "Configuration file (dotted key = value)")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output directory (overrides output.dir)");
    app.add_option("--seed", seed, "Run seed (overrides seed)");
    app.add_option("--threads", threads, "Worker threads; results do not depend on it")->check(CLI::PositiveNumber);

    auto* spectrum = app.add_subcommand("spectrum", "Master-equation and two-level emission spectra per drive");
    auto* g2 = app.add_subcommand("g2", "Unfiltered and filter-model g2(tau) per drive or reference source");
    auto* scan = app.add_subcommand("mollow-scan", "Fitted and analytic Mollow side-peak offsets versus drive");
    auto* synth = app.add_subcommand("synth", "Signal and reference quadrature records (QREC)");
    auto* estimate = app.add_subcommand("estimate", "g2 and cross spectrum from QREC records");
    std::vector<std::string> signal_files, reference_files;
    bool allow_mixed = false;
    estimate->add_option("--signal", signal_files, "Signal QREC files")->required()->check(CLI::ExistingFile);
    estimate->add_option("--reference", reference_files, "Reference QREC files")->required()->check(CLI::ExistingFile);
    estimate->add_flag("--allow-mixed-provenance", allow_mixed, "Accept inputs produced by different configurations");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        const blockade::ConfigFile file
            = config_path.empty() ? blockade::ConfigFile::parse("", "<defaults>") : blockade::ConfigFile::load(config_path);
        blockade::RunConfig cfg = blockade::load_run_config(file, seed);
        if (!out_dir.empty())
            cfg.out_dir = out_dir;
        cfg.threads = threads;

        blockade::CommandResult result;
        if (*spectrum)
            result = blockade::cmd_spectrum(cfg);
        else if (*g2)
            result = blockade::cmd_g2(cfg);
        else if (*scan)
            result = blockade::cmd_mollow_scan(cfg);
        else if (*synth)
            result = blockade::cmd_synth(cfg);
        else if (*estimate) {
            std::vector<std::filesystem::path> sig(signal_files.begin(), signal_files.end());
            std::vector<std::filesystem::path> ref(reference_files.begin(), reference_files.end());
            result = blockade::cmd_estimate(cfg, sig, ref, allow_mixed);
        }
        for (const auto& f : result.files)
            std::cout << f.string() << "\n";
        return ok;
    } catch (const blockade::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const blockade::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return numeric_error;
    } catch (const blockade::StatisticsError& e) {
        std::cerr << "insufficient statistics: " << e.what() << "\n";
        return statistics_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return failure;
    }
}
