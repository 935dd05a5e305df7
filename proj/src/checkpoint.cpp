// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#include "dgnr/checkpoint.hpp"

#include <fstream>

namespace dgnr {

namespace {

constexpr char kMagic[4] = {'D', 'G', 'N', 'R'};
constexpr uint32_t kVersion = 1;

template <class T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedBlob>& records) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open for write: " + path.string());
  os.write(kMagic, 4);
  write_pod(os, kVersion);
  write_pod(os, static_cast<uint32_t>(records.size()));
  for (const auto& r : records) {
    write_pod(os, static_cast<uint32_t>(r.name.size()));
    os.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
    write_pod(os, static_cast<uint8_t>(r.dtype));
    write_pod(os, static_cast<uint32_t>(r.shape.size()));
    for (Index d : r.shape) write_pod(os, static_cast<uint64_t>(d));
    const size_t expect = dtype_size(r.dtype) * static_cast<size_t>(shape_size(r.shape));
    if (expect != r.bytes.size())
      throw std::runtime_error("checkpoint: record '" + r.name + "' payload size mismatch");
    os.write(reinterpret_cast<const char*>(r.bytes.data()),
             static_cast<std::streamsize>(r.bytes.size()));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path.string());
}

std::vector<NamedBlob> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  const uint32_t version = read_pod<uint32_t>(is);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  const uint32_t count = read_pod<uint32_t>(is);
  std::vector<NamedBlob> records(count);
  for (auto& r : records) {
    const uint32_t name_len = read_pod<uint32_t>(is);
    r.name.resize(name_len);
    is.read(r.name.data(), name_len);
    r.dtype = static_cast<Dtype>(read_pod<uint8_t>(is));
    if (static_cast<uint8_t>(r.dtype) > 3)
      throw std::runtime_error("checkpoint: bad dtype tag in " + path.string());
    const uint32_t rank = read_pod<uint32_t>(is);
    r.shape.resize(rank);
    for (auto& d : r.shape) d = static_cast<Index>(read_pod<uint64_t>(is));
    const size_t payload = dtype_size(r.dtype) * static_cast<size_t>(shape_size(r.shape));
    r.bytes.resize(payload);
    is.read(reinterpret_cast<char*>(r.bytes.data()), static_cast<std::streamsize>(payload));
    if (!is) throw std::runtime_error("checkpoint: truncated record in " + path.string());
  }
  return records;
}

}  // namespace dgnr
