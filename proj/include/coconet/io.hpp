#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace coconet::io {

// Little-endian scalar IO for the binary file formats.

template <typename T>
T byteswap_if_big(T v) {
  static_assert(std::is_integral_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    T out = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out = static_cast<T>(out << 8) | static_cast<T>((v >> (8 * i)) & 0xFF);
    }
    return out;
  }
  return v;
}

template <typename T>
void write_le(std::ostream& os, T v) {
  const T le = byteswap_if_big(v);
  os.write(reinterpret_cast<const char*>(&le), sizeof(T));
}

inline void write_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  write_le(os, bits);
}

template <typename T>
T read_le(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("io: unexpected end of stream");
  return byteswap_if_big(v);
}

inline double read_f64(std::istream& is) {
  const std::uint64_t bits = read_le<std::uint64_t>(is);
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

inline void write_f64_array(std::ostream& os, const std::vector<double>& data) {
  for (double v : data) write_f64(os, v);
}

inline std::vector<double> read_f64_array(std::istream& is, std::size_t count) {
  std::vector<double> out(count);
  for (auto& v : out) v = read_f64(is);
  return out;
}

}  // namespace coconet::io
