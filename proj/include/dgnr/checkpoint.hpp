// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
//
// Shared binary checkpoint container: magic "DGNR", u32 version, then named
// tensor records. Round-trips are bit-exact.
#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "dgnr/parameter.hpp"
#include "dgnr/tensor.hpp"

namespace dgnr {

enum class Dtype : uint8_t { F32 = 0, F64 = 1, I32 = 2, U8 = 3 };

inline size_t dtype_size(Dtype d) {
  switch (d) {
    case Dtype::F32: return 4;
    case Dtype::F64: return 8;
    case Dtype::I32: return 4;
    case Dtype::U8: return 1;
  }
  throw std::invalid_argument("dtype_size: bad tag");
}

struct NamedBlob {
  std::string name;
  Dtype dtype = Dtype::F32;
  Shape shape;
  std::vector<uint8_t> bytes;
};

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedBlob>& records);
std::vector<NamedBlob> read_checkpoint(const std::filesystem::path& path);

template <class S>
constexpr Dtype dtype_of();
template <>
constexpr Dtype dtype_of<float>() { return Dtype::F32; }
template <>
constexpr Dtype dtype_of<double>() { return Dtype::F64; }
template <>
constexpr Dtype dtype_of<int32_t>() { return Dtype::I32; }
template <>
constexpr Dtype dtype_of<uint8_t>() { return Dtype::U8; }

template <class S>
NamedBlob to_blob(std::string name, const Tensor<S>& t) {
  NamedBlob b;
  b.name = std::move(name);
  b.dtype = dtype_of<S>();
  b.shape = t.shape;
  b.bytes.resize(static_cast<size_t>(t.size()) * sizeof(S));
  std::memcpy(b.bytes.data(), t.ptr(), b.bytes.size());
  return b;
}

template <class S>
Tensor<S> from_blob(const NamedBlob& b) {
  if (b.dtype != dtype_of<S>())
    throw std::runtime_error("checkpoint: dtype mismatch for record '" + b.name + "'");
  Tensor<S> t(b.shape);
  if (b.bytes.size() != static_cast<size_t>(t.size()) * sizeof(S))
    throw std::runtime_error("checkpoint: payload size mismatch for record '" + b.name + "'");
  std::memcpy(t.ptr(), b.bytes.data(), b.bytes.size());
  return t;
}

// Save/load a parameter set by name. Loading requires every parameter to be
// present with a matching shape.
template <class S>
void save_params(const std::filesystem::path& path, const ParamSet<S>& params) {
  std::vector<NamedBlob> recs;
  recs.reserve(params.items.size());
  for (const auto* p : params.items) recs.push_back(to_blob(p->name, p->value));
  write_checkpoint(path, recs);
}

template <class S>
void load_params(const std::filesystem::path& path, ParamSet<S>& params) {
  auto recs = read_checkpoint(path);
  for (auto* p : params.items) {
    const NamedBlob* found = nullptr;
    for (const auto& r : recs)
      if (r.name == p->name) {
        found = &r;
        break;
      }
    if (!found)
      throw std::runtime_error("checkpoint: missing parameter '" + p->name + "' in " +
                               path.string());
    Tensor<S> t = from_blob<S>(*found);
    if (t.shape != p->value.shape)
      throw std::runtime_error("checkpoint: shape mismatch for parameter '" + p->name + "'");
    p->value = std::move(t);
    p->grad = Tensor<S>(p->value.shape);
  }
}

}  // namespace dgnr
