#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace blockade {

// Flat "dotted.key = value" text. Blank lines and lines starting with '#' are
// ignored. Quantities with physical units must carry a suffix: frequencies
// Hz, kHz, MHz or GHz (returned as rad/s, i.e. times 2 pi), times s, ms, us
// or ns, temperatures K. A list is written as comma-separated values.
class ConfigFile {
public:
    static ConfigFile parse(std::string_view text, std::string source = "<config>");
    static ConfigFile load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    const std::map<std::string, std::string>& entries() const { return entries_; }

    std::string text(const std::string& key) const;
    double frequency(const std::string& key) const;    // rad/s
    double frequency_hz(const std::string& key) const; // Hz
    std::vector<double> frequency_list(const std::string& key) const;
    double time(const std::string& key) const;
    double temperature(const std::string& key) const;
    double number(const std::string& key) const;
    long long integer(const std::string& key) const;
    bool flag(const std::string& key) const; // on/off, true/false

    // Throws ConfigError naming the first key not in `known`.
    void require_known(const std::vector<std::string>& known) const;

    // Sorted "key = value" lines with whitespace normalized.
    std::string canonical() const;

private:
    std::map<std::string, std::string> entries_;
    std::string source_;

    const std::string& raw(const std::string& key) const;
};

// Parses "<number> <unit>" against a unit table; exposed for tests.
double parse_frequency(std::string_view value);
double parse_time(std::string_view value);

} // namespace blockade
