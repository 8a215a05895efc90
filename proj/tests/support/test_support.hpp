#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "viewforge/image.hpp"
#include "viewforge/losses.hpp"

namespace testing_support {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "vf") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline viewforge::ImageRecord random_image(int h, int w, int c, std::mt19937_64& gen, std::uint32_t label = 0) {
  viewforge::ImageRecord img(h, w, c, label);
  std::uniform_int_distribution<int> byte(0, 255);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(byte(gen));
  return img;
}

inline viewforge::ImageRecord constant_image(int h, int w, int c, std::uint8_t value) {
  viewforge::ImageRecord img(h, w, c);
  for (auto& p : img.pixels) p = value;
  return img;
}

inline viewforge::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  viewforge::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(gen);
  return m;
}

inline std::vector<std::vector<double>> to_rows(const viewforge::Matrix& m) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows[static_cast<std::size_t>(i)].push_back(m(i, j));
  return rows;
}

inline double relative_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace testing_support
