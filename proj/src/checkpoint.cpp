#include "vulnloc/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vulnloc {

namespace {

constexpr char kMagic[8] = {'V', 'L', 'C', 'K', 'P', 'T', '0', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

std::uint64_t read_u64(std::istream& in) {
  char buf[8];
  in.read(buf, 8);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

}  // namespace

const Tensor& Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  out.write(kMagic, 8);
  write_u64(out, ckpt.metadata.size());
  out.write(ckpt.metadata.data(), static_cast<std::streamsize>(ckpt.metadata.size()));
  write_u64(out, ckpt.tensors.size());
  for (const auto& [name, tensor] : ckpt.tensors) {
    write_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, static_cast<std::uint64_t>(tensor.ndim()));
    for (int i = 0; i < tensor.ndim(); ++i)
      write_u64(out, static_cast<std::uint64_t>(tensor.dim(i)));
    // doubles written raw; the toolkit targets little-endian IEEE-754 hosts
    out.write(reinterpret_cast<const char*>(tensor.data().data()),
              static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("checkpoint: write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("checkpoint: '" + path + "' is not a VLCKPT01 container");
  }

  Checkpoint ckpt;
  const std::uint64_t meta_len = read_u64(in);
  ckpt.metadata.resize(meta_len);
  in.read(ckpt.metadata.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw std::runtime_error("checkpoint: truncated metadata");

  const std::uint64_t count = read_u64(in);
  for (std::uint64_t t = 0; t < count; ++t) {
    const std::uint64_t name_len = read_u64(in);
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    const std::uint64_t ndim = read_u64(in);
    Shape shape;
    std::size_t numel = 1;
    for (std::uint64_t i = 0; i < ndim; ++i) {
      const std::uint64_t extent = read_u64(in);
      shape.push_back(static_cast<int>(extent));
      numel *= extent;
    }
    std::vector<double> values(numel);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(numel * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated tensor '" + name + "'");
    ckpt.tensors.emplace_back(std::move(name),
                              Tensor::from_data(std::move(shape), std::move(values)));
  }
  return ckpt;
}

}  // namespace vulnloc
