#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "rfvar/field.hpp"

namespace rfvar {

// Text container:
//
//   q,shape,p
//   2,30x40,1
//   <p comma-separated values for grid point 0>
//   <p comma-separated values for grid point 1>
//   ...
//
// Grid points follow the canonical lexicographic order (last axis fastest).
// Values are written with 17 significant digits, so a write/read cycle
// reproduces the field bit for bit.
Field read_field_csv(std::istream& in);
void write_field_csv(std::ostream& out, const Field& field);

// Binary container, all integers and reals little-endian:
//   8 bytes magic "RFVFLD01", u64 q, q x i64 extents, u64 p, p*|n| x f64.
inline constexpr std::string_view kBinaryMagic = "RFVFLD01";
Field read_field_binary(std::istream& in);
void write_field_binary(std::ostream& out, const Field& field);

/// Reads either container, dispatching on the leading magic bytes.
Field load_field(const std::filesystem::path& path);
/// Writes the binary container when the extension is ".bin", CSV otherwise.
void save_field(const std::filesystem::path& path, const Field& field);

/// Locale-independent shortest-roundtrip-safe rendering (17 significant digits).
std::string format_real(double value);
/// Strict locale-independent parse; throws ParseError on trailing garbage.
double parse_real(std::string_view text);
Index parse_index(std::string_view text);
/// Parses "30,40" or "30x40" into extents.
Shape parse_index_list(std::string_view text);

}  // namespace rfvar
