#include <array>
#include <fstream>
#include <iterator>
#include <vector>

#include "dcfcl/data.hpp"

namespace dcfcl {

namespace {

std::vector<unsigned char> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxErrorKind::kIo, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void require(const std::vector<unsigned char>& b, std::size_t n, const std::string& path) {
  if (b.size() < n) {
    throw IdxError(IdxErrorKind::kTruncated, path + ": truncated (" + std::to_string(b.size()) +
                                                 " bytes, need " + std::to_string(n) + ")");
  }
}

}  // namespace

IdxDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = read_all(images_path);
  const auto lab = read_all(labels_path);

  require(img, 16, images_path);
  if (be32(img, 0) != kIdxImageMagic) {
    throw IdxError(IdxErrorKind::kBadMagic, images_path + ": bad magic for image file");
  }
  require(lab, 8, labels_path);
  if (be32(lab, 0) != kIdxLabelMagic) {
    throw IdxError(IdxErrorKind::kBadMagic, labels_path + ": bad magic for label file");
  }

  const std::size_t count = be32(img, 4);
  const std::size_t rows = be32(img, 8);
  const std::size_t cols = be32(img, 12);
  const std::size_t label_count = be32(lab, 4);
  if (count != label_count) {
    throw IdxError(IdxErrorKind::kCountMismatch,
                   "image count " + std::to_string(count) + " != label count " +
                       std::to_string(label_count));
  }
  const std::size_t pixels = rows * cols;
  require(img, 16 + count * pixels, images_path);
  require(lab, 8 + count, labels_path);

  IdxDataset out;
  out.image_rows = static_cast<int>(rows);
  out.image_cols = static_cast<int>(cols);
  out.data.features = Matrix(count, pixels);
  out.data.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto row = out.data.features.row(i);
    const unsigned char* src = img.data() + 16 + i * pixels;
    for (std::size_t j = 0; j < pixels; ++j) row[j] = static_cast<double>(src[j]) / 255.0;
    out.data.labels[i] = static_cast<int>(lab[8 + i]);
  }
  return out;
}

}  // namespace dcfcl
