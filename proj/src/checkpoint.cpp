#include "gsr/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "gsr/errors.hpp"

namespace gsr::nn {

namespace {

enum class Tag : std::uint8_t { Dense = 1, Conv2D = 2, MaxPool2D = 3, LeakyReLU = 4, Softmax = 5, Reshape = 6 };

void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

void put_u32(std::ostream& out, std::uint64_t value) {
  if (value > 0xffffffffULL) throw CheckpointError("dimension does not fit in u32");
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((value >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint64_t bytes(int count) {
    unsigned char b[8] = {};
    in_.read(reinterpret_cast<char*>(b), count);
    if (in_.gcount() != count) throw CheckpointError("checkpoint is truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < count; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(bytes(1)); }
  std::size_t u32() { return static_cast<std::size_t>(bytes(4)); }
  std::uint64_t u64() { return bytes(8); }
  double f64() { return std::bit_cast<double>(bytes(8)); }

private:
  std::istream& in_;
};

}  // namespace

void save_checkpoint(std::ostream& out, const Network& net) {
  out.write("GSRN", 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, net.layers().size());
  const Shape in = net.input_shape();
  put_u32(out, in.height);
  put_u32(out, in.width);
  put_u32(out, in.channels);
  put_u32(out, net.regularized_layer());
  put_u64(out, net.seed());

  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const LayerSpec& spec = net.layers()[i];
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Dense>) {
            put_u8(out, static_cast<std::uint8_t>(Tag::Dense));
            put_u32(out, s.in);
            put_u32(out, s.out);
          } else if constexpr (std::is_same_v<T, Conv2D>) {
            put_u8(out, static_cast<std::uint8_t>(Tag::Conv2D));
            put_u32(out, s.in_channels);
            put_u32(out, s.out_channels);
            put_u32(out, s.patch);
            put_u32(out, s.stride);
            put_u32(out, s.same_padding ? 1 : 0);
          } else if constexpr (std::is_same_v<T, MaxPool2D>) {
            put_u8(out, static_cast<std::uint8_t>(Tag::MaxPool2D));
            put_u32(out, s.patch);
            put_u32(out, s.stride);
          } else if constexpr (std::is_same_v<T, LeakyReLU>) {
            put_u8(out, static_cast<std::uint8_t>(Tag::LeakyReLU));
            put_f64(out, s.slope);
          } else if constexpr (std::is_same_v<T, Softmax>) {
            put_u8(out, static_cast<std::uint8_t>(Tag::Softmax));
          } else {
            put_u8(out, static_cast<std::uint8_t>(Tag::Reshape));
            put_u32(out, s.shape.height);
            put_u32(out, s.shape.width);
            put_u32(out, s.shape.channels);
          }
        },
        spec);
    const std::size_t first = net.parameter_offset(i);
    for (std::size_t k = 0; k < parameter_count(spec); ++k) {
      const Matrix& p = net.parameters()[first + k];
      for (Eigen::Index j = 0; j < p.size(); ++j) put_f64(out, p.data()[j]);
    }
  }
  if (!out) throw CheckpointError("failed to write checkpoint");
}

void save_checkpoint(const std::string& path, const Network& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open '" + path + "' for writing");
  save_checkpoint(out, net);
}

Network load_checkpoint(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "GSRN", 4) != 0) throw CheckpointError("not a GSRN checkpoint");
  Reader r(in);
  const std::size_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::size_t count = r.u32();
  Shape input;
  input.height = r.u32();
  input.width = r.u32();
  input.channels = r.u32();
  const std::size_t regularized = r.u32();
  const std::uint64_t seed = r.u64();

  std::vector<LayerSpec> layers;
  std::vector<Matrix> params;
  for (std::size_t i = 0; i < count; ++i) {
    const auto tag = static_cast<Tag>(r.u8());
    LayerSpec spec;
    switch (tag) {
      case Tag::Dense: {
        Dense d;
        d.in = r.u32();
        d.out = r.u32();
        spec = d;
        break;
      }
      case Tag::Conv2D: {
        Conv2D c;
        c.in_channels = r.u32();
        c.out_channels = r.u32();
        c.patch = r.u32();
        c.stride = r.u32();
        c.same_padding = r.u32() != 0;
        spec = c;
        break;
      }
      case Tag::MaxPool2D: {
        MaxPool2D p;
        p.patch = r.u32();
        p.stride = r.u32();
        spec = p;
        break;
      }
      case Tag::LeakyReLU: spec = LeakyReLU{r.f64()}; break;
      case Tag::Softmax: spec = Softmax{}; break;
      case Tag::Reshape: {
        Reshape s;
        s.shape.height = r.u32();
        s.shape.width = r.u32();
        s.shape.channels = r.u32();
        spec = s;
        break;
      }
      default: throw CheckpointError("unknown layer tag in layer " + std::to_string(i));
    }
    for (const auto& [rows, cols] : parameter_dims(spec)) {
      if (rows * cols > (std::size_t{1} << 32)) throw CheckpointError("parameter tensor too large");
      Matrix p(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
      for (Eigen::Index j = 0; j < p.size(); ++j) p.data()[j] = r.f64();
      params.push_back(std::move(p));
    }
    layers.push_back(spec);
  }
  // The constructor re-runs the shape algebra before accepting the stack.
  return Network(input, std::move(layers), regularized, seed, std::move(params));
}

Network load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  return load_checkpoint(in);
}

}  // namespace gsr::nn
