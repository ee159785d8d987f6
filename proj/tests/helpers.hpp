#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "sgen/grid.hpp"

namespace testutil {

inline std::filesystem::path temp_dir(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() / ("sgen_test_" + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline sgen::EnsembleField random_field(sgen::GridSpec g, std::size_t R, std::uint64_t seed, double scale = 1.0) {
  sgen::EnsembleField f(std::move(g), R);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  for (auto& v : f.values) v = nd(rng);
  return f;
}

}  // namespace testutil
