#include "rfsn/waveform_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>

#include "rfsn/error.hpp"

namespace rfsn::io {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
  return std::bit_cast<T>(bits);
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw Error("failed to format number");
  return std::string(buf.data(), end);
}

void write_waveform_csv(std::ostream& os, const chirp::Waveform& w) {
  os << "sample_index,value\n";
  for (std::size_t i = 0; i < w.size(); ++i) os << i << ',' << format_double(w.samples[i]) << '\n';
}

chirp::Waveform read_waveform_csv(std::istream& is, double fs_hz, chirp::WaveformKind kind) {
  if (!(fs_hz > 0)) throw ConfigError("sample rate must be positive");
  chirp::Waveform w;
  w.fs_hz = fs_hz;
  w.kind = kind;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("sample_index", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error("waveform CSV line " + std::to_string(line_no) + ": expected two columns");
    std::size_t index = 0;
    double value = 0;
    const char* first = line.data();
    const char* mid = first + comma;
    const char* last = first + line.size();
    if (std::from_chars(first, mid, index).ec != std::errc() || std::from_chars(mid + 1, last, value).ec != std::errc()) {
      throw Error("waveform CSV line " + std::to_string(line_no) + ": unparsable number");
    }
    if (index != w.samples.size()) throw Error("waveform CSV line " + std::to_string(line_no) + ": sample index out of sequence");
    if (kind == chirp::WaveformKind::binary_envelope && value != 0.0 && value != 1.0) {
      throw DomainError("binary waveform CSV contains a value other than 0 or 1");
    }
    w.samples.push_back(value);
  }
  return w;
}

std::vector<std::uint8_t> encode_sqch(const chirp::Waveform& w) {
  std::vector<std::uint8_t> out;
  out.reserve(kSqchHeaderBytes + 4 * w.size());
  for (char c : {'S', 'Q', 'C', 'H'}) out.push_back(static_cast<std::uint8_t>(c));
  put_le(out, kSqchVersion);
  out.push_back(static_cast<std::uint8_t>(w.kind));
  out.push_back(0);
  put_le(out, w.fs_hz);
  for (double v : w.samples) put_le(out, static_cast<float>(v));
  return out;
}

chirp::Waveform decode_sqch(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kSqchHeaderBytes) throw Error("SQCH data shorter than its header");
  if (std::memcmp(bytes.data(), "SQCH", 4) != 0) throw Error("not an SQCH waveform (bad magic)");
  const auto version = get_le<std::uint16_t>(bytes.data() + 4);
  if (version != kSqchVersion) throw Error("unsupported SQCH version " + std::to_string(version));
  const auto kind = bytes[6];
  if (kind > 1) throw Error("unknown SQCH waveform kind " + std::to_string(kind));
  const std::size_t payload = bytes.size() - kSqchHeaderBytes;
  if (payload % 4 != 0) throw Error("SQCH payload is not a whole number of samples");

  chirp::Waveform w;
  w.kind = static_cast<chirp::WaveformKind>(kind);
  w.fs_hz = get_le<double>(bytes.data() + 8);
  if (!(w.fs_hz > 0)) throw Error("SQCH header has a non-positive sample rate");
  w.samples.resize(payload / 4);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    w.samples[i] = get_le<float>(bytes.data() + kSqchHeaderBytes + 4 * i);
  }
  return w;
}

void save_sqch(const std::filesystem::path& path, const chirp::Waveform& w) {
  const auto bytes = encode_sqch(w);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error("failed writing " + path.string());
}

chirp::Waveform load_sqch(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_sqch(bytes);
}

}  // namespace rfsn::io
