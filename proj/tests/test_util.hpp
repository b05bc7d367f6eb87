#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

#include "timewalk/rng.hpp"
#include "timewalk/types.hpp"

namespace twtest {

/// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0; i < 1000; ++i) {
      auto candidate = base / ("timewalk_test_" + std::to_string(std::rand()) +
                               "_" + std::to_string(i));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("could not create temp dir");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

/// Random ordered single-channel stream with exponential-ish gaps.
inline tw::TagStream random_stream(size_t n, uint64_t seed,
                                   int64_t mean_gap_ps = 20000) {
  tw::Rng rng(seed);
  tw::TagStream s;
  s.channel_count = 1;
  int64_t t = 0;
  for (size_t i = 0; i < n; ++i) {
    t += 1 + static_cast<int64_t>(-std::log(1.0 - rng.uniform()) *
                                  static_cast<double>(mean_gap_ps));
    s.tags.push_back({t, 0, 0});
  }
  return s;
}

} // namespace twtest
