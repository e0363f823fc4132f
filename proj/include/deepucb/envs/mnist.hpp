#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "deepucb/envs/environment.hpp"

namespace deepucb {

struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major per image
};

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(DatasetError::Kind::NotFound, "cannot open dataset file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t offset) {
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

}  // namespace detail

/// IDX3 image file: big-endian magic 2051, count, rows, cols, then bytes.
inline IdxImages load_idx_images(const std::filesystem::path& path) {
  const auto buf = detail::read_file(path);
  if (buf.size() < 16) throw DatasetError(DatasetError::Kind::Truncated, path.string() + ": truncated IDX header");
  const auto magic = detail::read_be32(buf, 0);
  if (magic != 2051)
    throw DatasetError(DatasetError::Kind::BadMagic,
                       path.string() + ": bad magic " + std::to_string(magic) + " (expected 2051 for images)");
  IdxImages out;
  out.count = detail::read_be32(buf, 4);
  out.rows = detail::read_be32(buf, 8);
  out.cols = detail::read_be32(buf, 12);
  const std::size_t need = out.count * out.rows * out.cols;
  if (buf.size() < 16 + need)
    throw DatasetError(DatasetError::Kind::Truncated, path.string() + ": truncated image data (" +
                                                          std::to_string(buf.size() - 16) + " of " +
                                                          std::to_string(need) + " bytes)");
  out.pixels.assign(buf.begin() + 16, buf.begin() + 16 + static_cast<std::ptrdiff_t>(need));
  return out;
}

/// IDX1 label file: big-endian magic 2049, count, then one byte per label.
inline std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path) {
  const auto buf = detail::read_file(path);
  if (buf.size() < 8) throw DatasetError(DatasetError::Kind::Truncated, path.string() + ": truncated IDX header");
  const auto magic = detail::read_be32(buf, 0);
  if (magic != 2049)
    throw DatasetError(DatasetError::Kind::BadMagic,
                       path.string() + ": bad magic " + std::to_string(magic) + " (expected 2049 for labels)");
  const std::size_t count = detail::read_be32(buf, 4);
  if (buf.size() < 8 + count)
    throw DatasetError(DatasetError::Kind::Truncated, path.string() + ": truncated label data");
  std::vector<std::uint8_t> labels(buf.begin() + 8, buf.begin() + 8 + static_cast<std::ptrdiff_t>(count));
  for (auto l : labels)
    if (l > 9) throw DatasetError(DatasetError::Kind::BadValue, path.string() + ": label " + std::to_string(l) + " > 9");
  return labels;
}

struct MnistEnvConfig {
  std::filesystem::path images;
  std::filesystem::path labels;
  std::size_t n_arms = 5;
  double noise_sigma = 0.5;
  std::size_t pool_size = 10000;  // first N images of the files; 0 = all

  bool operator==(const MnistEnvConfig&) const = default;
};

/// Each arm shows one image per round; the expected reward is its digit.
/// Digits are drawn uniformly first and an image of that digit second, so
/// every digit is equally likely regardless of the file's class balance.
class MnistEnv : public Environment {
 public:
  explicit MnistEnv(const MnistEnvConfig& cfg) : cfg_(cfg) {
    if (cfg.n_arms < 1) throw std::invalid_argument("mnist: n_arms must be >= 1");
    if (cfg.noise_sigma < 0.0) throw std::invalid_argument("mnist: noise_sigma must be >= 0");
    auto images = load_idx_images(cfg.images);
    const auto labels = load_idx_labels(cfg.labels);
    if (images.count != labels.size())
      throw DatasetError(DatasetError::Kind::CountMismatch, "mnist: " + std::to_string(images.count) +
                                                                " images but " + std::to_string(labels.size()) +
                                                                " labels");
    dim_ = images.rows * images.cols;
    const std::size_t n = cfg.pool_size == 0 ? images.count : std::min(cfg.pool_size, images.count);
    pixels_.assign(images.pixels.begin(), images.pixels.begin() + static_cast<std::ptrdiff_t>(n * dim_));
    for (std::size_t i = 0; i < n; ++i) by_digit_[labels[i]].push_back(i);
    for (std::size_t d = 0; d < 10; ++d)
      if (by_digit_[d].empty())
        throw DatasetError(DatasetError::Kind::BadValue, "mnist: pool has no image of digit " + std::to_string(d));
    pool_size_ = n;
  }

  std::string id() const override { return "mnist"; }
  std::size_t n_arms() const override { return cfg_.n_arms; }
  std::size_t context_dim() const override { return dim_; }
  double noise_sigma() const override { return cfg_.noise_sigma; }
  std::size_t pool_size() const { return pool_size_; }
  std::size_t images_of_digit(std::size_t d) const { return by_digit_.at(d).size(); }

  Eigen::VectorXd image(std::size_t index) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(dim_));
    for (std::size_t p = 0; p < dim_; ++p) x(static_cast<Eigen::Index>(p)) = pixels_[index * dim_ + p] / 255.0;
    return x;
  }

  Round draw_round(Rng& rng) const override {
    Round r{Eigen::MatrixXd(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(cfg_.n_arms)),
            Eigen::VectorXd(static_cast<Eigen::Index>(cfg_.n_arms))};
    for (std::size_t a = 0; a < cfg_.n_arms; ++a) {
      const std::size_t digit = uniform_index(rng, 10);
      const auto& pool = by_digit_[digit];
      r.contexts.col(static_cast<Eigen::Index>(a)) = image(pool[uniform_index(rng, pool.size())]);
      r.expected(static_cast<Eigen::Index>(a)) = static_cast<double>(digit);
    }
    return r;
  }

 private:
  MnistEnvConfig cfg_;
  std::size_t dim_ = 0;
  std::size_t pool_size_ = 0;
  std::vector<std::uint8_t> pixels_;
  std::array<std::vector<std::size_t>, 10> by_digit_;
};

}  // namespace deepucb
