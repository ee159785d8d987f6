#pragma once

#include <filesystem>
#include <string>

#include "sgen/grid.hpp"

namespace sgen {

// Ensemble container (*.ensf): one line of JSON header terminated by '\n',
// then R*K*M*N little-endian IEEE-754 doubles in (r, k, m, n) order.
//
// Descriptor file (*.geo): one JSON header line, then M*N little-endian
// doubles (altitude, meters) followed by M*N mask bytes (0 ocean, 1 land).

inline constexpr int kContainerVersion = 1;

void write_ensemble(const EnsembleField& field, const std::filesystem::path& path);
EnsembleField load_ensemble(const std::filesystem::path& path);

void write_geo(const GeoDescriptors& geo, const std::filesystem::path& path);
GeoDescriptors load_geo(const std::filesystem::path& path);

namespace detail {
void put_le_doubles(std::string& out, const double* data, std::size_t count);
void get_le_doubles(const char* in, double* data, std::size_t count);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);
}  // namespace detail

}  // namespace sgen
