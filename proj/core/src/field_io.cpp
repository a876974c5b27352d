#include "rfvar/field_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "rfvar/errors.hpp"

namespace rfvar {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char separator) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(separator, start);
    if (pos == std::string_view::npos) {
      parts.push_back(trim(line.substr(start)));
      return parts;
    }
    parts.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

template <typename T>
void put_le(std::ostream& out, T value) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw ParseError("binary field: unexpected end of file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

}  // namespace

std::string format_real(double value) {
  std::array<char, 64> buf{};
  const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                    std::chars_format::general, 17);
  return std::string(buf.data(), result.ptr);
}

double parse_real(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw ParseError("not a real number: '" + std::string(text) + "'");
  }
  if (!std::isfinite(value)) throw ParseError("not a finite real number: '" + std::string(text) + "'");
  return value;
}

Index parse_index(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  Index value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw ParseError("not an integer: '" + std::string(text) + "'");
  }
  return value;
}

Shape parse_index_list(std::string_view text) {
  const char separator = text.find('x') != std::string_view::npos ? 'x' : ',';
  Shape out;
  for (std::string_view part : split(text, separator)) out.push_back(parse_index(part));
  return out;
}

Field read_field_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!trim(line).empty()) return true;
    }
    return false;
  };

  if (!next_line() || trim(line) != "q,shape,p") {
    throw ParseError("field csv: line 1 must be the header 'q,shape,p'");
  }
  if (!next_line()) throw ParseError("field csv: missing dimension row");
  const auto dims = split(line, ',');
  if (dims.size() != 3) throw ParseError("field csv: line " + std::to_string(line_no) + ": expected q,shape,p");
  const Index q = parse_index(dims[0]);
  Shape shape = parse_index_list(dims[1]);
  const Index p = parse_index(dims[2]);
  if (q < 1 || static_cast<std::size_t>(q) != shape.size()) {
    throw ParseError("field csv: q does not match the number of extents in '" + std::string(dims[1]) + "'");
  }
  if (p < 1) throw ParseError("field csv: p must be positive");

  const std::size_t sites = checked_site_count(shape);
  std::vector<double> data;
  data.reserve(sites * static_cast<std::size_t>(p));
  for (std::size_t site = 0; site < sites; ++site) {
    if (!next_line()) {
      throw ParseError("field csv: expected " + std::to_string(sites) + " data rows, found " + std::to_string(site));
    }
    const auto cells = split(line, ',');
    if (cells.size() != static_cast<std::size_t>(p)) {
      throw ParseError("field csv: line " + std::to_string(line_no) + ": expected " + std::to_string(p) + " values");
    }
    for (std::string_view cell : cells) {
      try {
        data.push_back(parse_real(cell));
      } catch (const ParseError& e) {
        throw ParseError("field csv: line " + std::to_string(line_no) + ": " + e.what());
      }
    }
  }
  if (next_line()) throw ParseError("field csv: line " + std::to_string(line_no) + ": trailing data");
  return Field(std::move(shape), static_cast<std::size_t>(p), std::move(data));
}

void write_field_csv(std::ostream& out, const Field& field) {
  out << "q,shape,p\n" << field.q() << ',' << join_indices(field.shape(), 'x') << ',' << field.p() << '\n';
  for (std::size_t site = 0; site < field.sites(); ++site) {
    const auto values = field.site_values(site);
    for (std::size_t c = 0; c < values.size(); ++c) {
      if (c > 0) out << ',';
      out << format_real(values[c]);
    }
    out << '\n';
  }
}

Field read_field_binary(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || std::string_view(magic.data(), magic.size()) != kBinaryMagic) {
    throw ParseError("binary field: bad magic");
  }
  const auto q = get_le<std::uint64_t>(in);
  if (q == 0 || q > 64) throw ParseError("binary field: implausible q");
  Shape shape(q);
  for (auto& extent : shape) extent = get_le<std::int64_t>(in);
  const auto p = get_le<std::uint64_t>(in);
  if (p == 0) throw ParseError("binary field: p must be positive");
  const std::size_t count = checked_site_count(shape) * p;
  std::vector<double> data(count);
  for (auto& v : data) v = get_le<double>(in);
  return Field(std::move(shape), p, std::move(data));
}

void write_field_binary(std::ostream& out, const Field& field) {
  out.write(kBinaryMagic.data(), static_cast<std::streamsize>(kBinaryMagic.size()));
  put_le<std::uint64_t>(out, field.q());
  for (Index extent : field.shape()) put_le<std::int64_t>(out, extent);
  put_le<std::uint64_t>(out, field.p());
  for (double v : field.data()) put_le<double>(out, v);
}

Field load_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open field file '" + path.string() + "'");
  std::array<char, 8> head{};
  in.read(head.data(), head.size());
  const bool binary = in.gcount() == 8 && std::string_view(head.data(), 8) == kBinaryMagic;
  in.clear();
  in.seekg(0);
  return binary ? read_field_binary(in) : read_field_csv(in);
}

void save_field(const std::filesystem::path& path, const Field& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write field file '" + path.string() + "'");
  if (path.extension() == ".bin") {
    write_field_binary(out, field);
  } else {
    write_field_csv(out, field);
  }
}

}  // namespace rfvar
