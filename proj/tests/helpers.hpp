#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "localmax/matrix.hpp"

namespace testutil {

inline localmax::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                      double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  localmax::Matrix m(rows, cols);
  for (auto& v : m.storage()) v = g(rng);
  return m;
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("localmax_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

} // namespace testutil
