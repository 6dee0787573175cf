#pragma once

// Waveform serialization.
//
// CSV: header `sample_index,value`, one sample per line. The sample rate is
// not part of the CSV and must be supplied when reading.
//
// SQCH binary, all fields little-endian:
//   offset 0  "SQCH"
//   offset 4  u16 version (1)
//   offset 6  u8  kind (0 binary envelope, 1 analog)
//   offset 7  u8  padding (0)
//   offset 8  f64 fs_hz
//   offset 16 f32 samples...

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rfsn/chirpmod.hpp"

namespace rfsn::io {

inline constexpr std::uint16_t kSqchVersion = 1;
inline constexpr std::size_t kSqchHeaderBytes = 16;

void write_waveform_csv(std::ostream& os, const chirp::Waveform& w);
chirp::Waveform read_waveform_csv(std::istream& is, double fs_hz, chirp::WaveformKind kind);

std::vector<std::uint8_t> encode_sqch(const chirp::Waveform& w);
chirp::Waveform decode_sqch(std::span<const std::uint8_t> bytes);

void save_sqch(const std::filesystem::path& path, const chirp::Waveform& w);
chirp::Waveform load_sqch(const std::filesystem::path& path);

/// Shortest round-trippable decimal representation.
std::string format_double(double v);

}  // namespace rfsn::io
