#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "edgeshap/common.hpp"

namespace edgeshap {

// Payloads are memcpy'd straight between file and memory, which is only
// valid because both sides are little-endian.
static_assert(std::endian::native == std::endian::little,
              "tensor archive I/O assumes a little-endian host");

enum class DType : std::uint8_t { kF32 = 0, kF64 = 1, kI64 = 2 };

inline std::size_t dtype_size(DType t) {
  switch (t) {
    case DType::kF32: return 4;
    case DType::kF64: return 8;
    case DType::kI64: return 8;
  }
  fail("unknown dtype");
}

// A named n-dimensional array. Storage is raw bytes plus typed span views;
// row-major, innermost dimension last.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::string name, DType dtype, std::vector<std::uint64_t> dims)
      : name_(std::move(name)), dtype_(dtype), dims_(std::move(dims)) {
    bytes_.resize(numel() * dtype_size(dtype_));
  }

  static Tensor f32(std::string name, std::vector<std::uint64_t> dims,
                    std::span<const float> values) {
    Tensor t(std::move(name), DType::kF32, std::move(dims));
    require(values.size() == t.numel(), "Tensor: value count mismatch");
    std::memcpy(t.bytes_.data(), values.data(), t.bytes_.size());
    return t;
  }

  const std::string& name() const { return name_; }
  DType dtype() const { return dtype_; }
  const std::vector<std::uint64_t>& dims() const { return dims_; }

  std::size_t numel() const {
    std::size_t n = 1;
    for (std::uint64_t d : dims_) {
      require(d == 0 || n <= SIZE_MAX / d, "Tensor: element count overflow");
      n *= d;
    }
    return n;
  }

  std::uint8_t* data() { return bytes_.data(); }
  const std::uint8_t* data() const { return bytes_.data(); }
  std::size_t byte_size() const { return bytes_.size(); }

  std::span<const float> as_f32() const {
    require(dtype_ == DType::kF32, name_ + ": expected f32 tensor");
    return {reinterpret_cast<const float*>(bytes_.data()), numel()};
  }
  std::span<const double> as_f64() const {
    require(dtype_ == DType::kF64, name_ + ": expected f64 tensor");
    return {reinterpret_cast<const double*>(bytes_.data()), numel()};
  }
  std::span<const std::int64_t> as_i64() const {
    require(dtype_ == DType::kI64, name_ + ": expected i64 tensor");
    return {reinterpret_cast<const std::int64_t*>(bytes_.data()), numel()};
  }

  // Shape check with a readable message; -1 entries match any extent.
  void expect_dims(std::initializer_list<std::int64_t> want) const {
    bool ok = want.size() == dims_.size();
    if (ok) {
      std::size_t i = 0;
      for (std::int64_t w : want) {
        if (w >= 0 && dims_[i] != static_cast<std::uint64_t>(w)) ok = false;
        ++i;
      }
    }
    if (!ok) {
      std::string got = "[";
      for (std::size_t i = 0; i < dims_.size(); ++i)
        got += (i ? "," : "") + std::to_string(dims_[i]);
      fail(name_ + ": unexpected shape " + got + "]");
    }
  }

 private:
  std::string name_;
  DType dtype_ = DType::kF32;
  std::vector<std::uint64_t> dims_;
  std::vector<std::uint8_t> bytes_;
};

// Container of named tensors, order-preserving on save so round trips are
// byte-identical.
class TensorArchive {
 public:
  void add(Tensor t) {
    require(index_.emplace(t.name(), tensors_.size()).second,
            "TensorArchive: duplicate tensor name '" + t.name() + "'");
    tensors_.push_back(std::move(t));
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  const Tensor& get(const std::string& name) const {
    auto it = index_.find(name);
    require(it != index_.end(),
            "TensorArchive: missing tensor '" + name + "'");
    return tensors_[it->second];
  }

  std::size_t size() const { return tensors_.size(); }
  const Tensor& at(std::size_t i) const { return tensors_.at(i); }

 private:
  std::vector<Tensor> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

constexpr std::uint8_t kArchiveMagic[4] = {0x47, 0x54, 0x41, 0x31};

inline void read_exact(std::istream& in, void* dst, std::size_t n,
                       const std::string& what) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  require(static_cast<std::size_t>(in.gcount()) == n,
          "tensor archive: truncated file while reading " + what);
}

template <typename T>
T read_le(std::istream& in, const std::string& what) {
  T v;
  read_exact(in, &v, sizeof(T), what);
  return v;
}

template <typename T>
void write_le(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace detail

// Layout: magic "GTA1", u32 tensor count, then per tensor a u32 name
// length, the UTF-8 name, u8 dtype, u8 ndim, ndim u64 extents, and the
// raw little-endian row-major payload.
inline TensorArchive load_tensor_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "load_tensor_archive: cannot open " + path);

  std::uint8_t magic[4];
  detail::read_exact(in, magic, 4, "magic");
  require(std::memcmp(magic, detail::kArchiveMagic, 4) == 0,
          path + ": not a tensor archive (bad magic)");

  auto count = detail::read_le<std::uint32_t>(in, "tensor count");
  TensorArchive archive;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name_len = detail::read_le<std::uint32_t>(in, "name length");
    require(name_len <= (1u << 20), path + ": implausible tensor name length");
    std::string name(name_len, '\0');
    detail::read_exact(in, name.data(), name_len, "tensor name");

    auto dtype_raw = detail::read_le<std::uint8_t>(in, "dtype");
    require(dtype_raw <= 2,
            path + ": tensor '" + name + "' has unknown dtype " +
                std::to_string(dtype_raw));
    auto ndim = detail::read_le<std::uint8_t>(in, "rank");
    std::vector<std::uint64_t> dims(ndim);
    for (auto& d : dims) d = detail::read_le<std::uint64_t>(in, "extent");

    Tensor t(std::move(name), static_cast<DType>(dtype_raw), std::move(dims));
    detail::read_exact(in, t.data(), t.byte_size(), "payload of '" + t.name() + "'");
    archive.add(std::move(t));
  }
  return archive;
}

inline void save_tensor_archive(const TensorArchive& archive,
                                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "save_tensor_archive: cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(detail::kArchiveMagic), 4);
  detail::write_le(out, static_cast<std::uint32_t>(archive.size()));
  for (std::size_t i = 0; i < archive.size(); ++i) {
    const Tensor& t = archive.at(i);
    detail::write_le(out, static_cast<std::uint32_t>(t.name().size()));
    out.write(t.name().data(), static_cast<std::streamsize>(t.name().size()));
    detail::write_le(out, static_cast<std::uint8_t>(t.dtype()));
    detail::write_le(out, static_cast<std::uint8_t>(t.dims().size()));
    for (std::uint64_t d : t.dims()) detail::write_le(out, d);
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.byte_size()));
  }
  require(out.good(), "save_tensor_archive: write failed for " + path);
}

// Node features: tensor "x" of shape [num_nodes, dim], f32.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(NodeId num_nodes, int dim)
      : n_(num_nodes), dim_(dim),
        data_(static_cast<std::size_t>(num_nodes) * dim, 0.0f) {}

  NodeId num_nodes() const { return n_; }
  int dim() const { return dim_; }

  const float* row(NodeId i) const {
    return data_.data() + static_cast<std::size_t>(i) * dim_;
  }
  float* row(NodeId i) {
    return data_.data() + static_cast<std::size_t>(i) * dim_;
  }
  std::span<const float> flat() const { return data_; }

 private:
  NodeId n_ = 0;
  int dim_ = 0;
  std::vector<float> data_;
};

inline FeatureMatrix load_features(const std::string& path) {
  TensorArchive archive = load_tensor_archive(path);
  const Tensor& x = archive.get("x");
  x.expect_dims({-1, -1});
  require(x.dtype() == DType::kF32, "features tensor 'x' must be f32");
  FeatureMatrix f(static_cast<NodeId>(x.dims()[0]),
                  static_cast<int>(x.dims()[1]));
  std::memcpy(f.row(0), x.as_f32().data(), x.byte_size());
  return f;
}

inline void save_features(const FeatureMatrix& f, const std::string& path) {
  TensorArchive archive;
  archive.add(Tensor::f32("x",
                          {static_cast<std::uint64_t>(f.num_nodes()),
                           static_cast<std::uint64_t>(f.dim())},
                          f.flat()));
  save_tensor_archive(archive, path);
}

}  // namespace edgeshap
