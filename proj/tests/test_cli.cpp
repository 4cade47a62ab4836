#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "blockade/io.hpp"

namespace fs = std::filesystem;
using blockade::io::sha256_file;
using blockade::io::write_text;

namespace {

const fs::path root = fs::temp_directory_path() / "blockade_test_cli";

fs::path write_config(const std::string& name, const std::string& text)
{
    const fs::path p = root / (name + ".cfg");
    write_text(p, text);
    return p;
}

int run(const std::string& args)
{
    const std::string cmd = std::string(BLOCKADE_CLI) + " " + args + " > " + (root / "last.log").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string out(const std::string& name) { return (root / name).string(); }

} // namespace

TEST_CASE("help and usage errors")
{
    fs::create_directories(root);
    CHECK(run("--help") == 0);
    CHECK(run("") == 2);
    CHECK(run("nonsense") == 2);
    CHECK(run("spectrum --config /does/not/exist") == 2);
}

TEST_CASE("configuration errors exit with code 2")
{
    CHECK(run("spectrum --config " + write_config("nounit", "drive.rabi = 7.9\n").string()) == 2);
    CHECK(run("spectrum --config " + write_config("unknown", "drive.rabbi = 7.9 MHz\n").string()) == 2);
    CHECK(run("spectrum --config " + write_config("empty", "").string()) == 2);
    CHECK(run("g2 --config " + write_config("neg", "device.kappa = -1 MHz\n").string()) == 2);
}

TEST_CASE("numerical failure exits with code 3")
{
    // The correlation window is far shorter than the decay time.
    const auto cfg = write_config("short", "drive.rabi = 7.9 MHz\nspectrum.tau_max = 20 ns\n");
    CHECK(run("spectrum --config " + cfg.string() + " --out " + out("short")) == 3);
}

TEST_CASE("statistical failure exits with code 4")
{
    const auto cfg = write_config("drift", "source.kind = thermal\nsource.n_th = 50\ndevice.kappa = 0.5 MHz\n"
                                           "noise.temperature = 10 mK\nrecord.segment_len = 2048\n"
                                           "record.segments = 128\nestimate.tau_max = 300 ns\n"
                                           "estimate.filter = off\n");
    const std::string dir = out("drift");
    REQUIRE(run("synth --config " + cfg.string() + " --out " + dir) == 0);
    CHECK(run("estimate --config " + cfg.string() + " --out " + dir + " --signal " + dir + "/signal.qrec --reference "
              + dir + "/reference.qrec")
          == 4);
}

TEST_CASE("outputs are byte-identical for one and four threads")
{
    const auto cfg = write_config("threads", "drive.rabi = 2.5 MHz, 7.9 MHz\nspectrum.tau_max = 2 us\n"
                                             "g2.tau_max = 300 ns\n");
    for (const std::string cmd : {"spectrum", "g2", "mollow-scan"}) {
        const std::string a = out("t1_" + cmd), b = out("t4_" + cmd);
        REQUIRE(run(cmd + " --config " + cfg.string() + " --out " + a + " --threads 1") == 0);
        REQUIRE(run(cmd + " --config " + cfg.string() + " --out " + b + " --threads 4") == 0);
        int compared = 0;
        for (const auto& e : fs::directory_iterator(a)) {
            CHECK(sha256_file(e.path()) == sha256_file(fs::path(b) / e.path().filename()));
            ++compared;
        }
        CHECK(compared >= 3);
    }
}

TEST_CASE("synth and estimate round trip, with the provenance guard")
{
    const auto cfg = write_config("coh", "source.kind = coherent\nrecord.segment_len = 512\nrecord.segments = 64\n"
                                         "estimate.tau_max = 200 ns\n");
    const std::string a = out("coh_a"), b = out("coh_b");
    REQUIRE(run("synth --config " + cfg.string() + " --out " + a + " --seed 1") == 0);
    REQUIRE(run("synth --config " + cfg.string() + " --out " + b + " --seed 1") == 0);
    CHECK(sha256_file(a + "/signal.qrec") == sha256_file(b + "/signal.qrec"));
    REQUIRE(run("synth --config " + cfg.string() + " --out " + b + " --seed 2") == 0);
    CHECK(sha256_file(a + "/signal.qrec") != sha256_file(b + "/signal.qrec"));

    CHECK(run("estimate --config " + cfg.string() + " --out " + a + " --signal " + a + "/signal.qrec --reference "
              + a + "/reference.qrec")
          == 0);
    CHECK(fs::exists(a + "/g2_estimate.csv"));
    CHECK(fs::exists(a + "/provenance.json"));
    const std::string mixed = "estimate --config " + cfg.string() + " --out " + a + " --signal " + a
        + "/signal.qrec --reference " + b + "/reference.qrec";
    CHECK(run(mixed) == 2);
    CHECK(run(mixed + " --allow-mixed-provenance") == 0);

    const auto small = write_config("small", "source.kind = coherent\nrecord.segment_len = 256\n"
                                             "record.segments = 64\n");
    const std::string c = out("coh_c");
    REQUIRE(run("synth --config " + small.string() + " --out " + c) == 0);
    CHECK(run("estimate --config " + cfg.string() + " --out " + a + " --signal " + a + "/signal.qrec --reference "
              + c + "/reference.qrec --allow-mixed-provenance")
          == 2);
}
