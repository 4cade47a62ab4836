#include "blockade/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "blockade/errors.hpp"

namespace blockade::io {

namespace {

template <class T>
void put(std::string& buf, T value)
{
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(bytes, bytes + sizeof(T));
    buf.append(bytes, sizeof(T));
}

class Reader {
public:
    Reader(std::string data, std::string what) : data_(std::move(data)), what_(std::move(what)) {}

    template <class T>
    T get()
    {
        if (pos_ + sizeof(T) > data_.size())
            throw ConfigError(what_ + ": file truncated");
        char bytes[sizeof(T)];
        std::memcpy(bytes, data_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big)
            std::reverse(bytes, bytes + sizeof(T));
        pos_ += sizeof(T);
        T value;
        std::memcpy(&value, bytes, sizeof(T));
        return value;
    }

    void expect_magic(std::string_view magic)
    {
        if (data_.compare(0, magic.size(), magic) != 0)
            throw ConfigError(what_ + ": bad magic, expected " + std::string(magic));
        pos_ = magic.size();
    }

    void expect_end() const
    {
        if (pos_ != data_.size())
            throw ConfigError(what_ + ": trailing bytes after payload");
    }

    std::size_t remaining() const { return data_.size() - pos_; }

private:
    std::string data_;
    std::string what_;
    std::size_t pos_ = 0;
};

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::string number(double x)
{
    std::ostringstream s;
    s << std::setprecision(17) << x;
    return s.str();
}

} // namespace

std::string sha256_hex(std::string_view bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i)
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return hex.str();
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text(path)); }

void write_text(const std::filesystem::path& path, std::string_view text)
{
    auto out = open_out(path, std::ios::out | std::ios::binary);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_trace_csv(const std::filesystem::path& path, const CorrelationTrace& trace)
{
    const bool imag = trace.complex_valued();
    const bool err = !trace.errors.empty();
    std::string out = "tau,value";
    if (imag)
        out += ",imag";
    if (err)
        out += ",error";
    out += '\n';
    for (std::size_t k = 0; k < trace.tau.size(); ++k) {
        out += number(trace.tau[k]) + ',' + number(trace.values[k].real());
        if (imag)
            out += ',' + number(trace.values[k].imag());
        if (err)
            out += ',' + number(trace.errors[k]);
        out += '\n';
    }
    write_text(path, out);
}

void write_spectrum_csv(const std::filesystem::path& path, const SpectrumTrace& spec)
{
    const bool err = !spec.errors.empty();
    std::string out = err ? "freq,value,error\n" : "freq,value\n";
    for (std::size_t k = 0; k < spec.freq.size(); ++k) {
        out += number(spec.freq[k]) + ',' + number(spec.psd[k]);
        if (err)
            out += ',' + number(spec.errors[k]);
        out += '\n';
    }
    write_text(path, out);
}

void write_qrec(const std::filesystem::path& path, const QuadratureRecord& rec)
{
    rec.validate();
    std::string buf = "QREC";
    buf.reserve(32 + rec.ch1.size() * 16);
    put<std::uint16_t>(buf, qrec_version);
    put<double>(buf, rec.geometry.sample_rate);
    put<std::uint32_t>(buf, rec.geometry.segment_len);
    put<std::uint32_t>(buf, rec.geometry.n_segments);
    put<std::uint8_t>(buf, 2);
    for (std::size_t k = 0; k < rec.ch1.size(); ++k) {
        put<float>(buf, static_cast<float>(rec.ch1[k].real()));
        put<float>(buf, static_cast<float>(rec.ch1[k].imag()));
        put<float>(buf, static_cast<float>(rec.ch2[k].real()));
        put<float>(buf, static_cast<float>(rec.ch2[k].imag()));
    }
    write_text(path, buf);
}

QuadratureRecord read_qrec(const std::filesystem::path& path)
{
    Reader r(read_text(path), path.string());
    r.expect_magic("QREC");
    if (r.get<std::uint16_t>() != qrec_version)
        throw ConfigError(path.string() + ": unsupported QREC version");
    QuadratureRecord rec;
    rec.geometry.sample_rate = r.get<double>();
    rec.geometry.segment_len = r.get<std::uint32_t>();
    rec.geometry.n_segments = r.get<std::uint32_t>();
    if (r.get<std::uint8_t>() != 2)
        throw ConfigError(path.string() + ": QREC channel count must be 2");
    try {
        rec.geometry.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    const std::size_t n = rec.geometry.total_samples();
    if (r.remaining() != n * 16)
        throw ConfigError(path.string() + ": payload size does not match header geometry");
    rec.ch1.resize(n);
    rec.ch2.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const float i1 = r.get<float>(), q1 = r.get<float>(), i2 = r.get<float>(), q2 = r.get<float>();
        rec.ch1[k] = {i1, q1};
        rec.ch2[k] = {i2, q2};
    }
    r.expect_end();
    return rec;
}

void write_qjmp(const std::filesystem::path& path, const EmissionRecord& rec)
{
    rec.validate();
    std::string buf = "QJMP";
    put<std::uint16_t>(buf, qjmp_version);
    put<double>(buf, rec.duration);
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(rec.cavity_jumps.size()));
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(rec.qubit_jumps.size()));
    for (double t : rec.cavity_jumps)
        put<double>(buf, t);
    for (double t : rec.qubit_jumps)
        put<double>(buf, t);
    write_text(path, buf);
}

EmissionRecord read_qjmp(const std::filesystem::path& path)
{
    Reader r(read_text(path), path.string());
    r.expect_magic("QJMP");
    if (r.get<std::uint16_t>() != qjmp_version)
        throw ConfigError(path.string() + ": unsupported QJMP version");
    EmissionRecord rec;
    rec.duration = r.get<double>();
    const std::uint32_t nc = r.get<std::uint32_t>();
    const std::uint32_t nq = r.get<std::uint32_t>();
    if (r.remaining() != (static_cast<std::size_t>(nc) + nq) * 8)
        throw ConfigError(path.string() + ": payload size does not match jump counts");
    rec.cavity_jumps.resize(nc);
    rec.qubit_jumps.resize(nq);
    for (double& t : rec.cavity_jumps)
        t = r.get<double>();
    for (double& t : rec.qubit_jumps)
        t = r.get<double>();
    try {
        rec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return rec;
}

} // namespace blockade::io
