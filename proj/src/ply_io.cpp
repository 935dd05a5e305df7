// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#include <cstring>
#include <fstream>
#include <sstream>

#include "dgnr/density_space.hpp"

namespace dgnr {

void save_space(const std::filesystem::path& path, const DensitySpace& space) {
  space.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("save_space: cannot open " + path.string());
  const Index n = space.size();
  const Index c = space.descriptor_dim();
  os << "ply\nformat binary_little_endian 1.0\n";
  os << "comment dgnr density space\n";
  os << "element vertex " << n << "\n";
  os << "property float x\nproperty float y\nproperty float z\n";
  os << "property int block_id\nproperty uchar source\n";
  for (Index f = 0; f < c; ++f) os << "property float f" << f << "\n";
  os << "end_header\n";
  for (Index i = 0; i < n; ++i) {
    const DensityPoint& p = space.points[static_cast<size_t>(i)];
    float xyz[3] = {p.position.x(), p.position.y(), p.position.z()};
    os.write(reinterpret_cast<const char*>(xyz), 12);
    os.write(reinterpret_cast<const char*>(&p.block_id), 4);
    os.write(reinterpret_cast<const char*>(&p.source), 1);
    os.write(reinterpret_cast<const char*>(space.descriptors.ptr() + i * c),
             static_cast<std::streamsize>(c * sizeof(float)));
  }
  if (!os) throw std::runtime_error("save_space: write failed " + path.string());
}

DensitySpace load_space(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_space: cannot open " + path.string());
  std::string line;
  auto next_line = [&]() {
    if (!std::getline(is, line)) throw std::runtime_error("load_space: truncated header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  if (next_line() != "ply") throw std::runtime_error("load_space: not a PLY file");
  if (next_line() != "format binary_little_endian 1.0")
    throw std::runtime_error("load_space: unsupported PLY format");
  Index n = -1;
  std::vector<std::string> props;
  for (;;) {
    next_line();
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "comment") continue;
    if (word == "element") {
      std::string what;
      ls >> what >> n;
      if (what != "vertex") throw std::runtime_error("load_space: unexpected element " + what);
    } else if (word == "property") {
      std::string type, name;
      ls >> type >> name;
      props.push_back(type + " " + name);
    } else {
      throw std::runtime_error("load_space: unexpected header line: " + line);
    }
  }
  if (n < 0) throw std::runtime_error("load_space: missing vertex element");
  // Require exactly the schema this module writes.
  std::vector<std::string> expect = {"float x", "float y", "float z", "int block_id",
                                     "uchar source"};
  if (props.size() < expect.size())
    throw std::runtime_error("load_space: property list too short");
  for (size_t i = 0; i < expect.size(); ++i)
    if (props[i] != expect[i])
      throw std::runtime_error("load_space: unexpected property '" + props[i] + "' (want '" +
                               expect[i] + "')");
  const Index c = static_cast<Index>(props.size() - expect.size());
  for (Index f = 0; f < c; ++f) {
    const std::string want = "float f" + std::to_string(f);
    if (props[expect.size() + static_cast<size_t>(f)] != want)
      throw std::runtime_error("load_space: unexpected descriptor property (want '" + want + "')");
  }
  std::vector<DensityPoint> pts(static_cast<size_t>(n));
  Tensor<float> desc(Shape{n, c});
  for (Index i = 0; i < n; ++i) {
    DensityPoint& p = pts[static_cast<size_t>(i)];
    float xyz[3];
    is.read(reinterpret_cast<char*>(xyz), 12);
    is.read(reinterpret_cast<char*>(&p.block_id), 4);
    is.read(reinterpret_cast<char*>(&p.source), 1);
    is.read(reinterpret_cast<char*>(desc.data.data() + i * c),
            static_cast<std::streamsize>(c * sizeof(float)));
    if (!is) throw std::runtime_error("load_space: vertex count/payload mismatch");
    p.position = Eigen::Vector3f(xyz[0], xyz[1], xyz[2]);
    p.descriptor = static_cast<int32_t>(i);
  }
  return make_space(std::move(pts), std::move(desc));
}

}  // namespace dgnr
