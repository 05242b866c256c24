#pragma once

// CubeFunction files: binary "CUBEFN01" + u32 n + 2^n float64 (all
// little-endian), or JSON {"n": int, "values": [...]}.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "hcube/cube_core.hpp"
#include "json.hpp"

namespace hcube::io {

inline constexpr std::array<char, 8> kCubeMagic = {'C', 'U', 'B', 'E', 'F', 'N', '0', '1'};

namespace detail {

template <class U>
void put_le(std::ostream& os, U v) {
  static_assert(std::is_unsigned_v<U>);
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <class U>
U get_le(std::istream& is) {
  unsigned char buf[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(U))) throw FormatError("truncated cube file");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline void write_binary(std::ostream& os, const CubeFunction& f) {
  os.write(kCubeMagic.data(), kCubeMagic.size());
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.dim()));
  for (double v : f.values()) detail::put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
  if (!os) throw FormatError("write failed");
}

inline CubeFunction read_binary(std::istream& is, const ExecOptions& opts = {}) {
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kCubeMagic) {
    throw FormatError("bad magic: not a CUBEFN01 file");
  }
  const auto n = detail::get_le<std::uint32_t>(is);
  if (n > static_cast<std::uint32_t>(opts.max_dimension)) {
    throw CapacityError("cube file dimension " + std::to_string(n) + " exceeds cap");
  }
  std::vector<double> values(cube_size(static_cast<int>(n)));
  for (double& v : values) v = std::bit_cast<double>(detail::get_le<std::uint64_t>(is));
  return CubeFunction(static_cast<int>(n), std::move(values));
}

inline nlohmann::json to_json(const CubeFunction& f) {
  return {{"n", f.dim()}, {"values", std::vector<double>(f.values().begin(), f.values().end())}};
}

inline CubeFunction from_json(const nlohmann::json& j, const ExecOptions& opts = {}) {
  if (!j.is_object() || !j.contains("n") || !j.contains("values")) {
    throw FormatError("cube JSON needs fields n and values");
  }
  const int n = j.at("n").get<int>();
  check_capacity(n, opts);
  auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != cube_size(n)) throw FormatError("cube JSON: values length != 2^n");
  return CubeFunction(n, std::move(values));
}

/// Reads either format, sniffing the magic bytes.
inline CubeFunction load(const std::string& path, const ExecOptions& opts = {}) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path);
  std::array<char, 8> head{};
  is.read(head.data(), head.size());
  const bool binary = is.gcount() == 8 && head == kCubeMagic;
  is.clear();
  is.seekg(0);
  if (binary) return read_binary(is, opts);
  try {
    return from_json(nlohmann::json::parse(is), opts);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed cube JSON: ") + e.what());
  }
}

inline void save(const std::string& path, const CubeFunction& f, bool as_json = false) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path + " for writing");
  if (as_json) {
    os << to_json(f).dump() << '\n';
  } else {
    write_binary(os, f);
  }
}

}  // namespace hcube::io
