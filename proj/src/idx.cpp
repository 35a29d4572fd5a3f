#include "scorelab/idx.hpp"

#include <fstream>

#include "scorelab/errors.hpp"

namespace scorelab::cli {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("idx: cannot open '" + path + "'");
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::uint32_t be_u32(const std::string& buf, std::size_t offset,
                     const std::string& path) {
  if (offset + 4 > buf.size())
    throw ParseError("idx: '" + path + "' truncated at offset " +
                     std::to_string(offset));
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v = (v << 8) | static_cast<unsigned char>(buf[offset + i]);
  return v;
}

std::string hex(std::uint32_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s = "0x";
  for (int i = 7; i >= 0; --i) s += digits[(v >> (4 * i)) & 0xF];
  return s;
}

}  // namespace

analytic::LabeledDataset load_idx(const std::string& images_path,
                                  const std::string& labels_path, int pool) {
  if (pool < 1) throw ConfigError("idx: pool must be >= 1");

  const std::string img = read_all(images_path);
  const std::uint32_t img_magic = be_u32(img, 0, images_path);
  if (img_magic != kImagesMagic)
    throw ParseError("idx: '" + images_path + "' magic mismatch at offset 0: "
                     "got " + hex(img_magic) + ", expected " +
                     hex(kImagesMagic));
  const std::uint32_t n = be_u32(img, 4, images_path);
  const std::uint32_t rows = be_u32(img, 8, images_path);
  const std::uint32_t cols = be_u32(img, 12, images_path);
  const std::size_t expected = 16 + static_cast<std::size_t>(n) * rows * cols;
  if (img.size() != expected)
    throw ParseError("idx: '" + images_path + "' truncated payload: have " +
                     std::to_string(img.size()) + " bytes, need " +
                     std::to_string(expected) + " (offset 16)");

  const std::string lab = read_all(labels_path);
  const std::uint32_t lab_magic = be_u32(lab, 0, labels_path);
  if (lab_magic != kLabelsMagic)
    throw ParseError("idx: '" + labels_path + "' magic mismatch at offset 0: "
                     "got " + hex(lab_magic) + ", expected " +
                     hex(kLabelsMagic));
  const std::uint32_t n_labels = be_u32(lab, 4, labels_path);
  if (n_labels != n)
    throw ParseError("idx: image count " + std::to_string(n) +
                     " != label count " + std::to_string(n_labels));
  if (lab.size() != 8 + static_cast<std::size_t>(n))
    throw ParseError("idx: '" + labels_path + "' truncated payload: have " +
                     std::to_string(lab.size()) + " bytes, need " +
                     std::to_string(8 + n) + " (offset 8)");

  const std::uint32_t p = static_cast<std::uint32_t>(pool);
  if (rows % p != 0 || cols % p != 0)
    throw ConfigError("idx: pool " + std::to_string(pool) +
                      " does not divide " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  const std::uint32_t out_rows = rows / p, out_cols = cols / p;

  analytic::LabeledDataset ds;
  ds.name = "idx";
  ds.dim = static_cast<std::size_t>(out_rows) * out_cols;
  ds.points.resize(static_cast<std::size_t>(n) * ds.dim);
  ds.labels.resize(n);
  const double norm = 1.0 / (255.0 * p * p);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::size_t base = 16 + static_cast<std::size_t>(i) * rows * cols;
    double* out = ds.points.data() + static_cast<std::size_t>(i) * ds.dim;
    for (std::uint32_t r = 0; r < out_rows; ++r)
      for (std::uint32_t c = 0; c < out_cols; ++c) {
        double acc = 0.0;
        for (std::uint32_t dr = 0; dr < p; ++dr)
          for (std::uint32_t dc = 0; dc < p; ++dc)
            acc += static_cast<unsigned char>(
                img[base + (r * p + dr) * cols + (c * p + dc)]);
        out[r * out_cols + c] = acc * norm;
      }
    ds.labels[i] = static_cast<unsigned char>(lab[8 + i]);
  }
  return ds;
}

}  // namespace scorelab::cli
