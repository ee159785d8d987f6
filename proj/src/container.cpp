#include "sgen/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "sgen/error.hpp"

namespace sgen {

using nlohmann::json;

namespace detail {

namespace {
std::uint64_t swap64(std::uint64_t v) {
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xffu);
  return r;
}
}  // namespace

void put_le_doubles(std::string& out, const double* data, std::size_t count) {
  const std::size_t start = out.size();
  out.resize(start + 8 * count);
  char* dst = out.data() + start;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(dst, data, 8 * count);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint64_t v = swap64(std::bit_cast<std::uint64_t>(data[i]));
      std::memcpy(dst + 8 * i, &v, 8);
    }
  }
}

void get_le_doubles(const char* in, double* data, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(data, in, 8 * count);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint64_t v;
      std::memcpy(&v, in + 8 * i, 8);
      data[i] = std::bit_cast<double>(swap64(v));
    }
  }
}

}  // namespace detail

namespace detail {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IOError, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IOError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IOError, "short write to " + path.string());
}

}  // namespace detail

namespace {

// Splits "<json>\n<payload>" and parses the header.
std::pair<json, std::size_t> split_header(const std::string& bytes, std::string_view expected_format) {
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw Error(ErrorCode::MalformedHeader, "missing header terminator");
  json header;
  try {
    header = json::parse(bytes.substr(0, nl));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, e.what());
  }
  if (!header.is_object() || header.value("format", "") != expected_format)
    throw Error(ErrorCode::MalformedHeader, "expected format '" + std::string(expected_format) + "'");
  if (header.value("version", 0) != kContainerVersion)
    throw Error(ErrorCode::MalformedHeader, "unsupported container version");
  return {std::move(header), nl + 1};
}

template <class T>
T required(const json& h, const char* key) {
  if (!h.contains(key)) throw Error(ErrorCode::MalformedHeader, std::string("missing header field '") + key + "'");
  try {
    return h.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, std::string("bad header field '") + key + "': " + e.what());
  }
}

}  // namespace

void write_ensemble(const EnsembleField& field, const std::filesystem::path& path) {
  field.validate();
  json h = {
      {"format", "ensf"},
      {"version", kContainerVersion},
      {"order", "rkmn"},
      {"R", field.R},
      {"K", field.spec.K},
      {"M", field.spec.M},
      {"N", field.spec.N},
      {"latitudes", field.spec.latitudes},
      {"longitudes", field.spec.longitudes},
      {"start_year", field.spec.start_year},
      {"units", field.units},
      {"endian", "little"},
  };
  std::string bytes = h.dump();
  bytes.push_back('\n');
  detail::put_le_doubles(bytes, field.values.data(), field.values.size());
  detail::write_file(path, bytes);
}

EnsembleField load_ensemble(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  auto [h, offset] = split_header(bytes, "ensf");
  if (required<std::string>(h, "order") != "rkmn")
    throw Error(ErrorCode::MalformedHeader, "only order \"rkmn\" is supported");
  GridSpec g;
  g.K = required<std::size_t>(h, "K");
  g.M = required<std::size_t>(h, "M");
  g.N = required<std::size_t>(h, "N");
  g.latitudes = required<std::vector<double>>(h, "latitudes");
  g.longitudes = required<std::vector<double>>(h, "longitudes");
  g.start_year = h.value("start_year", 0);
  const auto R = required<std::size_t>(h, "R");
  const std::size_t count = R * g.K * g.M * g.N;
  const std::size_t payload = bytes.size() - offset;
  if (payload != 8 * count)
    throw Error(ErrorCode::DimensionMismatch, "declared " + std::to_string(count) + " values but payload holds " +
                                                  std::to_string(payload / 8) + (payload % 8 ? " (+partial)" : ""));
  EnsembleField field(std::move(g), R);
  field.units = h.value("units", std::string("m s-1"));
  detail::get_le_doubles(bytes.data() + offset, field.values.data(), count);
  field.validate();
  return field;
}

void write_geo(const GeoDescriptors& geo, const std::filesystem::path& path) {
  geo.validate();
  json h = {{"format", "geo"},
            {"version", kContainerVersion},
            {"M", geo.M},
            {"N", geo.N},
            {"mountain_threshold", geo.mountain_threshold},
            {"endian", "little"}};
  std::string bytes = h.dump();
  bytes.push_back('\n');
  detail::put_le_doubles(bytes, geo.altitude.data(), geo.altitude.size());
  bytes.append(reinterpret_cast<const char*>(geo.land_mask.data()), geo.land_mask.size());
  detail::write_file(path, bytes);
}

GeoDescriptors load_geo(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  auto [h, offset] = split_header(bytes, "geo");
  GeoDescriptors geo(required<std::size_t>(h, "M"), required<std::size_t>(h, "N"));
  geo.mountain_threshold = h.value("mountain_threshold", 1000.0);
  const std::size_t cells = geo.M * geo.N;
  if (bytes.size() - offset != 9 * cells)
    throw Error(ErrorCode::DimensionMismatch, "descriptor payload does not match M*N");
  detail::get_le_doubles(bytes.data() + offset, geo.altitude.data(), cells);
  for (std::size_t i = 0; i < cells; ++i) {
    const auto b = static_cast<std::uint8_t>(bytes[offset + 8 * cells + i]);
    if (b > 1) throw Error(ErrorCode::MalformedHeader, "mask bytes must be 0 or 1");
    geo.land_mask[i] = b;
  }
  geo.validate();
  return geo;
}

}  // namespace sgen
