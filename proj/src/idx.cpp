#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "gsr/data.hpp"
#include "gsr/errors.hpp"

namespace gsr::data {

namespace {

std::uint32_t read_be32(std::istream& in, const char* what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw TruncatedFile(std::string("truncated header in ") + what);
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  out.write(b, 4);
}

std::string hex(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

}  // namespace

Dataset load_mnist_idx(std::istream& images, std::istream& labels, std::size_t limit) {
  const std::uint32_t image_magic = read_be32(images, "images");
  if (image_magic != kIdxImagesMagic) {
    throw BadMagic("images file has magic " + hex(image_magic) + ", expected " + hex(kIdxImagesMagic));
  }
  const std::uint32_t label_magic = read_be32(labels, "labels");
  if (label_magic != kIdxLabelsMagic) {
    throw BadMagic("labels file has magic " + hex(label_magic) + ", expected " + hex(kIdxLabelsMagic));
  }
  const std::uint32_t count = read_be32(images, "images");
  const std::uint32_t rows = read_be32(images, "images");
  const std::uint32_t cols = read_be32(images, "images");
  const std::uint32_t label_count = read_be32(labels, "labels");
  if (rows != 28 || cols != 28) {
    throw DimensionMismatch("expected 28x28 images, got " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (count != label_count) {
    throw DimensionMismatch("image count " + std::to_string(count) + " differs from label count " +
                            std::to_string(label_count));
  }

  const std::size_t n = limit > 0 ? std::min<std::size_t>(limit, count) : count;
  const std::size_t pixels = std::size_t{rows} * cols;
  std::vector<unsigned char> raw(n * pixels);
  images.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(images.gcount()) != raw.size()) throw TruncatedFile("images file is truncated");
  std::vector<unsigned char> raw_labels(n);
  labels.read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(labels.gcount()) != n) throw TruncatedFile("labels file is truncated");

  Dataset ds;
  ds.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(pixels));
  for (std::size_t i = 0; i < raw.size(); ++i) ds.inputs.data()[i] = static_cast<double>(raw[i]) / 255.0;
  std::vector<int> digits(raw_labels.begin(), raw_labels.end());
  for (int d : digits) {
    if (d > 9) throw DimensionMismatch("label " + std::to_string(d) + " is not a digit");
  }
  ds.targets = one_hot(digits, 10);
  ds.label_names = {"digit"};
  ds.labels = Eigen::Map<const Eigen::VectorXi>(digits.data(), static_cast<Eigen::Index>(n));
  return ds;
}

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path, std::size_t limit) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw Error("cannot open '" + images_path + "'");
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw Error("cannot open '" + labels_path + "'");
  return load_mnist_idx(images, labels, limit);
}

void write_mnist_idx(const Dataset& ds, std::ostream& images, std::ostream& labels) {
  if (ds.inputs.cols() != 28 * 28) throw DimensionMismatch("IDX writer expects 784 pixels per row");
  const std::vector<int> digits = ds.label_column("digit");
  const auto n = static_cast<std::uint32_t>(ds.size());
  write_be32(images, kIdxImagesMagic);
  write_be32(images, n);
  write_be32(images, 28);
  write_be32(images, 28);
  for (Eigen::Index i = 0; i < ds.inputs.size(); ++i) {
    const double v = std::clamp(std::round(ds.inputs.data()[i] * 255.0), 0.0, 255.0);
    images.put(static_cast<char>(static_cast<unsigned char>(v)));
  }
  write_be32(labels, kIdxLabelsMagic);
  write_be32(labels, n);
  for (int d : digits) labels.put(static_cast<char>(static_cast<unsigned char>(d)));
}

void write_mnist_idx(const Dataset& ds, const std::string& images_path, const std::string& labels_path) {
  std::ofstream images(images_path, std::ios::binary);
  std::ofstream labels(labels_path, std::ios::binary);
  if (!images || !labels) throw Error("cannot open IDX output files");
  write_mnist_idx(ds, images, labels);
}

}  // namespace gsr::data
