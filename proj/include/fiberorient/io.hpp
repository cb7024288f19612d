#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fiberorient/errors.hpp"
#include "fiberorient/grid.hpp"

namespace fiberorient {

enum class ElementType { U8, U16, S16, F32 };

inline std::size_t element_size(ElementType t) {
  switch (t) {
    case ElementType::U8: return 1;
    case ElementType::U16:
    case ElementType::S16: return 2;
    case ElementType::F32: return 4;
  }
  return 0;
}

enum class ByteOrder { LittleEndian, BigEndian };

/// Parsed MetaImage header. Only the subset needed for dense 3D scalar
/// payloads is supported.
struct MhdHeader {
  Dims dims{};
  Vec3 spacing{1.0, 1.0, 1.0};  // in the unit the header was written in
  ElementType element_type = ElementType::F32;
  std::string data_file;  // relative to the header's directory
  bool byte_order_msb = false;
};

namespace detail {

inline std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& v) { return to_lower(trim(v)) == "true"; }

template <typename T>
inline std::vector<T> parse_numbers(const std::string& v, std::size_t expect, const char* key) {
  std::istringstream iss(v);
  std::vector<T> out;
  T x;
  while (iss >> x) out.push_back(x);
  if (out.size() != expect) {
    throw IoError(std::string("mhd: key ") + key + " expects " + std::to_string(expect) +
                  " values, got " + std::to_string(out.size()) + " in \"" + trim(v) + "\"");
  }
  return out;
}

inline std::uint16_t bswap16(std::uint16_t v) { return static_cast<std::uint16_t>((v >> 8) | (v << 8)); }
inline std::uint32_t bswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0x0000FF00u) | ((v << 8) & 0x00FF0000u) | (v << 24);
}

inline bool host_is_little_endian() { return std::endian::native == std::endian::little; }

/// Decodes a raw little- or big-endian payload into float voxels.
inline void decode_payload(const std::vector<char>& bytes, ElementType type, ByteOrder order,
                           std::vector<float>& out) {
  const std::size_t n = out.size();
  const bool swap = (order == ByteOrder::BigEndian) == host_is_little_endian();
  switch (type) {
    case ElementType::U8: {
      const auto* p = reinterpret_cast<const std::uint8_t*>(bytes.data());
      for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(p[i]);
      break;
    }
    case ElementType::U16: {
      for (std::size_t i = 0; i < n; ++i) {
        std::uint16_t v;
        std::memcpy(&v, bytes.data() + 2 * i, 2);
        if (swap) v = bswap16(v);
        out[i] = static_cast<float>(v);
      }
      break;
    }
    case ElementType::S16: {
      for (std::size_t i = 0; i < n; ++i) {
        std::uint16_t raw;
        std::memcpy(&raw, bytes.data() + 2 * i, 2);
        if (swap) raw = bswap16(raw);
        std::int16_t v;
        std::memcpy(&v, &raw, 2);
        out[i] = static_cast<float>(v);
      }
      break;
    }
    case ElementType::F32: {
      for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t raw;
        std::memcpy(&raw, bytes.data() + 4 * i, 4);
        if (swap) raw = bswap32(raw);
        float v;
        std::memcpy(&v, &raw, 4);
        out[i] = v;
      }
      break;
    }
  }
}

inline std::vector<char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  in.seekg(0, std::ios::end);
  const auto len = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<char> bytes(static_cast<std::size_t>(len));
  in.read(bytes.data(), len);
  if (!in) throw IoError("read failed: " + path.string());
  return bytes;
}

}  // namespace detail

inline MhdHeader parse_mhd_header(const std::filesystem::path& path,
                                  std::ostream* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open header: " + path.string());

  MhdHeader h;
  bool have_dims = false, have_data_file = false;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (detail::trim(line).empty()) continue;
      throw IoError("mhd: malformed line (missing '='): \"" + detail::trim(line) + "\"");
    }
    const std::string key = detail::to_lower(detail::trim(line.substr(0, eq)));
    const std::string value = detail::trim(line.substr(eq + 1));

    if (key == "ndims") {
      if (value != "3") throw IoError("mhd: NDims must be 3, got " + value);
    } else if (key == "dimsize") {
      const auto v = detail::parse_numbers<long long>(value, 3, "DimSize");
      if (v[0] <= 0 || v[1] <= 0 || v[2] <= 0) throw IoError("mhd: DimSize must be positive");
      h.dims = Dims{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])};
      have_dims = true;
    } else if (key == "elementspacing") {
      const auto v = detail::parse_numbers<double>(value, 3, "ElementSpacing");
      if (v[0] <= 0 || v[1] <= 0 || v[2] <= 0) throw IoError("mhd: ElementSpacing must be positive");
      h.spacing = Vec3{v[0], v[1], v[2]};
    } else if (key == "elementtype") {
      const std::string t = detail::to_lower(value);
      if (t == "met_uchar") h.element_type = ElementType::U8;
      else if (t == "met_ushort") h.element_type = ElementType::U16;
      else if (t == "met_short") h.element_type = ElementType::S16;
      else if (t == "met_float") h.element_type = ElementType::F32;
      else throw IoError("mhd: unsupported ElementType " + value);
    } else if (key == "elementdatafile") {
      if (detail::to_lower(value) == "list" || detail::to_lower(value) == "local") {
        throw IoError("mhd: ElementDataFile " + value + " is not supported");
      }
      h.data_file = value;
      have_data_file = true;
      break;  // ElementDataFile terminates the header
    } else if (key == "byteordermsb" || key == "binarydatabyteordermsb" ||
               key == "elementbyteordermsb") {
      h.byte_order_msb = detail::parse_bool(value);
    } else if (key == "compresseddata") {
      if (detail::parse_bool(value))
        throw IoError("mhd: CompressedData=True is not supported; store raw payloads");
    } else if (key == "objecttype" || key == "binarydata" || key == "headersize") {
      // accepted, nothing to do (HeaderSize other than 0 is unsupported)
      if (key == "headersize" && detail::trim(value) != "0")
        throw IoError("mhd: nonzero HeaderSize is not supported");
    } else {
      if (warnings) *warnings << "mhd: ignoring unknown key \"" << key << "\"\n";
    }
  }
  if (!have_dims) throw IoError("mhd: missing DimSize in " + path.string());
  if (!have_data_file) throw IoError("mhd: missing ElementDataFile in " + path.string());
  return h;
}

/// Reads a MetaImage volume. `unit_to_um` converts the header's spacing unit
/// to micrometers (1.0 when the header is already in um, 1000.0 for mm).
inline Volume read_mhd(const std::filesystem::path& path, double unit_to_um = 1.0,
                       std::ostream* warnings = nullptr) {
  const MhdHeader h = parse_mhd_header(path, warnings);
  const std::filesystem::path data_path = path.parent_path() / h.data_file;
  const std::vector<char> bytes = detail::read_file_bytes(data_path);
  const std::size_t expected = h.dims.size() * element_size(h.element_type);
  if (bytes.size() != expected) {
    throw IoError("mhd: data size mismatch for " + data_path.string() + ": expected " +
                  std::to_string(expected) + " bytes, found " + std::to_string(bytes.size()));
  }
  Volume v(h.dims, h.spacing * unit_to_um);
  detail::decode_payload(bytes, h.element_type,
                         h.byte_order_msb ? ByteOrder::BigEndian : ByteOrder::LittleEndian,
                         v.data());
  for (float x : v.data()) {
    if (!std::isfinite(x)) throw NumericError("mhd: non-finite voxel value in " + data_path.string());
  }
  return v;
}

namespace detail {

inline void write_mhd_pair(const std::filesystem::path& path, Dims dims, const Vec3& spacing_um,
                           const char* met_type, const void* payload, std::size_t payload_bytes) {
  std::filesystem::path raw_path = path;
  raw_path.replace_extension(".raw");

  std::ofstream hdr(path);
  if (!hdr) throw IoError("cannot write header: " + path.string());
  hdr << "ObjectType = Image\n"
      << "NDims = 3\n"
      << "BinaryData = True\n"
      << "BinaryDataByteOrderMSB = " << (host_is_little_endian() ? "False" : "True") << "\n"
      << "CompressedData = False\n"
      << "DimSize = " << dims.nx << " " << dims.ny << " " << dims.nz << "\n";
  hdr.precision(17);
  hdr << "ElementSpacing = " << spacing_um.x << " " << spacing_um.y << " " << spacing_um.z << "\n"
      << "ElementType = " << met_type << "\n"
      << "ElementDataFile = " << raw_path.filename().string() << "\n";
  if (!hdr) throw IoError("write failed: " + path.string());
  hdr.close();

  std::ofstream raw(raw_path, std::ios::binary);
  if (!raw) throw IoError("cannot write data file: " + raw_path.string());
  raw.write(static_cast<const char*>(payload), static_cast<std::streamsize>(payload_bytes));
  if (!raw) throw IoError("write failed: " + raw_path.string());
}

}  // namespace detail

/// Writes volume as MHD header + sibling .raw payload (float32, host byte
/// order, spacing in um). read_mhd reproduces the volume exactly.
inline void write_mhd(const Volume& v, const std::filesystem::path& path) {
  detail::write_mhd_pair(path, v.dims(), v.spacing, "MET_FLOAT", v.data().data(),
                         v.size() * sizeof(float));
}

/// Writes a binary mask as MHD (u8, values 0/1).
inline void write_mhd_mask(const Mask& m, const Vec3& spacing_um,
                           const std::filesystem::path& path) {
  detail::write_mhd_pair(path, m.dims(), spacing_um, "MET_UCHAR", m.data().data(), m.size());
}

/// Reads a headerless raw payload; spacing defaults to 1 um isotropic.
inline Volume read_raw(const std::filesystem::path& path, Dims dims, ElementType type,
                       ByteOrder order, Vec3 spacing_um = {1.0, 1.0, 1.0}) {
  if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0)
    throw ArgumentError("read_raw: dims must be positive");
  const std::vector<char> bytes = detail::read_file_bytes(path);
  const std::size_t expected = dims.size() * element_size(type);
  if (bytes.size() != expected) {
    throw IoError("raw: size mismatch for " + path.string() + ": expected " +
                  std::to_string(expected) + ", found " + std::to_string(bytes.size()));
  }
  Volume v(dims, spacing_um);
  detail::decode_payload(bytes, type, order, v.data());
  for (float x : v.data()) {
    if (!std::isfinite(x)) throw NumericError("raw: non-finite voxel value in " + path.string());
  }
  return v;
}

}  // namespace fiberorient
