#include "blockade/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <utility>

#include "blockade/errors.hpp"
#include "blockade/io.hpp"
#include "blockade/units.hpp"

namespace blockade {

namespace {

std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(std::string_view s)
{
    s = trim(s);
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(x))
        throw ConfigError("not a number: '" + std::string(s) + "'");
    return x;
}

double with_unit(std::string_view value, std::initializer_list<std::pair<std::string_view, double>> table,
                 std::string_view what)
{
    value = trim(value);
    const auto split = value.find_first_not_of("0123456789+-.eE");
    if (split == std::string_view::npos)
        throw ConfigError(std::string(what) + " '" + std::string(value) + "' has no unit");
    const std::string_view unit = trim(value.substr(split));
    for (const auto& [name, factor] : table)
        if (unit == name)
            return parse_number(value.substr(0, split)) * factor;
    throw ConfigError("unknown " + std::string(what) + " unit '" + std::string(unit) + "'");
}

} // namespace

double parse_frequency(std::string_view value)
{
    return units::two_pi * with_unit(value, {{"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}}, "frequency");
}

double parse_time(std::string_view value)
{
    return with_unit(value, {{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"ns", 1e-9}}, "time");
}

ConfigFile ConfigFile::parse(std::string_view text, std::string source)
{
    ConfigFile cfg;
    cfg.source_ = std::move(source);
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view l = trim(line);
        if (l.empty() || l.front() == '#')
            continue;
        const auto eq = l.find('=');
        const std::string where = cfg.source_ + ":" + std::to_string(lineno);
        if (eq == std::string_view::npos)
            throw ConfigError(where + ": expected key = value");
        const std::string key(trim(l.substr(0, eq)));
        const std::string value(trim(l.substr(eq + 1)));
        if (key.empty() || value.empty())
            throw ConfigError(where + ": empty key or value");
        if (!cfg.entries_.emplace(key, value).second)
            throw ConfigError(where + ": duplicate key '" + key + "'");
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path)
{
    return parse(io::read_text(path), path.string());
}

const std::string& ConfigFile::raw(const std::string& key) const
{
    const auto it = entries_.find(key);
    if (it == entries_.end())
        throw ConfigError(source_ + ": missing key '" + key + "'");
    return it->second;
}

std::string ConfigFile::text(const std::string& key) const { return raw(key); }

double ConfigFile::frequency(const std::string& key) const
{
    try {
        return parse_frequency(raw(key));
    } catch (const ConfigError& e) {
        throw ConfigError(source_ + ": " + key + ": " + e.what());
    }
}

double ConfigFile::frequency_hz(const std::string& key) const { return frequency(key) / units::two_pi; }

std::vector<double> ConfigFile::frequency_list(const std::string& key) const
{
    std::vector<double> out;
    std::string_view rest = raw(key);
    try {
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            out.push_back(parse_frequency(rest.substr(0, comma)));
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        }
    } catch (const ConfigError& e) {
        throw ConfigError(source_ + ": " + key + ": " + e.what());
    }
    return out;
}

double ConfigFile::time(const std::string& key) const
{
    try {
        return parse_time(raw(key));
    } catch (const ConfigError& e) {
        throw ConfigError(source_ + ": " + key + ": " + e.what());
    }
}

double ConfigFile::temperature(const std::string& key) const
{
    try {
        return with_unit(raw(key), {{"K", 1.0}, {"mK", 1e-3}}, "temperature");
    } catch (const ConfigError& e) {
        throw ConfigError(source_ + ": " + key + ": " + e.what());
    }
}

double ConfigFile::number(const std::string& key) const
{
    try {
        return parse_number(raw(key));
    } catch (const ConfigError& e) {
        throw ConfigError(source_ + ": " + key + ": " + e.what());
    }
}

long long ConfigFile::integer(const std::string& key) const
{
    const std::string& s = raw(key);
    long long x = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ConfigError(source_ + ": " + key + ": not an integer: '" + s + "'");
    return x;
}

bool ConfigFile::flag(const std::string& key) const
{
    const std::string& s = raw(key);
    if (s == "on" || s == "true")
        return true;
    if (s == "off" || s == "false")
        return false;
    throw ConfigError(source_ + ": " + key + ": expected on/off, got '" + s + "'");
}

void ConfigFile::require_known(const std::vector<std::string>& known) const
{
    for (const auto& [key, value] : entries_)
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError(source_ + ": unknown key '" + key + "'");
}

std::string ConfigFile::canonical() const
{
    std::string out;
    for (const auto& [key, value] : entries_) {
        std::string v;
        bool space = false;
        for (char c : value) {
            if (c == ' ' || c == '\t') {
                space = true;
                continue;
            }
            if (space && !v.empty())
                v += ' ';
            space = false;
            v += c;
        }
        out += key + " = " + v + "\n";
    }
    return out;
}

} // namespace blockade
