#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "blockade/correlate.hpp"
#include "blockade/detchain.hpp"
#include "blockade/trajectories.hpp"

namespace blockade::io {

// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

// CSV with header "tau,value[,imag][,error]"; imag for g1 traces, error when
// the trace carries error bars. Numbers use 17 significant digits.
void write_trace_csv(const std::filesystem::path& path, const CorrelationTrace& trace);
// "freq,value[,error]".
void write_spectrum_csv(const std::filesystem::path& path, const SpectrumTrace& spec);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

// QREC: "QREC", u16 version, f64 sample_rate, u32 segment_len, u32 n_segments,
// u8 channel count (2), then per sample I1 Q1 I2 Q2 as f32, little-endian.
inline constexpr std::uint16_t qrec_version = 1;
void write_qrec(const std::filesystem::path& path, const QuadratureRecord& rec);
QuadratureRecord read_qrec(const std::filesystem::path& path);

// QJMP: "QJMP", u16 version, f64 duration, u32 cavity count, u32 qubit count,
// then cavity and qubit timestamps as f64, little-endian.
inline constexpr std::uint16_t qjmp_version = 1;
void write_qjmp(const std::filesystem::path& path, const EmissionRecord& rec);
EmissionRecord read_qjmp(const std::filesystem::path& path);

} // namespace blockade::io
