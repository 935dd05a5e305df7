// Copyright (c) 2026 dgnr contributors
// SPDX-License-Identifier: Apache-2.0
#include <fstream>

#include "dgnr/scene.hpp"
#include "json.hpp"

namespace dgnr {

using nlohmann::json;

namespace {

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json color_to_json(const Eigen::Vector3f& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::runtime_error("scene json: expected 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Eigen::Vector3f color_from_json(const json& j) {
  Vec3 v = vec3_from_json(j);
  return v.cast<float>();
}

}  // namespace

bool Primitive::contains(const Vec3& p) const {
  switch (kind) {
    case Kind::Ground: return p.y() >= level;
    case Kind::Box:
      return (p.array() >= box_min.array()).all() && (p.array() <= box_max.array()).all();
    case Kind::Sphere: return (p - center).squaredNorm() <= radius * radius;
  }
  return false;
}

double Primitive::surface_distance(const Vec3& p) const {
  switch (kind) {
    case Kind::Ground: return std::abs(p.y() - level);
    case Kind::Box: {
      const Vec3 c = 0.5 * (box_min + box_max);
      const Vec3 half = 0.5 * (box_max - box_min);
      const Vec3 q = (p - c).cwiseAbs() - half;
      const double outside = q.cwiseMax(0.0).norm();
      const double inside = std::min(q.maxCoeff(), 0.0);
      return std::abs(outside + inside);
    }
    case Kind::Sphere: return std::abs((p - center).norm() - radius);
  }
  return 0.0;
}

std::optional<std::pair<double, double>> Primitive::intersect(const Ray& r) const {
  switch (kind) {
    case Kind::Ground: {
      // Solid half-space y >= level.
      const double oy = r.origin.y(), dy = r.dir.y();
      if (std::abs(dy) < 1e-12) {
        if (oy >= level) return std::make_pair(-1e30, 1e30);
        return std::nullopt;
      }
      const double t = (level - oy) / dy;
      if (dy > 0) return std::make_pair(t, 1e30);
      return std::make_pair(-1e30, t);
    }
    case Kind::Box: {
      double t0 = -1e30, t1 = 1e30;
      for (int a = 0; a < 3; ++a) {
        const double o = r.origin[a], d = r.dir[a];
        if (std::abs(d) < 1e-12) {
          if (o < box_min[a] || o > box_max[a]) return std::nullopt;
          continue;
        }
        double ta = (box_min[a] - o) / d;
        double tb = (box_max[a] - o) / d;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return std::nullopt;
      }
      return std::make_pair(t0, t1);
    }
    case Kind::Sphere: {
      const Vec3 oc = r.origin - center;
      const double b = oc.dot(r.dir);
      const double c = oc.squaredNorm() - radius * radius;
      const double disc = b * b - c;
      if (disc < 0) return std::nullopt;
      const double s = std::sqrt(disc);
      return std::make_pair(-b - s, -b + s);
    }
  }
  return std::nullopt;
}

double SyntheticScene::density_at(const Vec3& p) const {
  for (const auto& prim : primitives)
    if (prim.contains(p)) return prim.density;
  return 0.0;
}

Eigen::Vector3f SyntheticScene::albedo_at(const Vec3& p) const {
  for (const auto& prim : primitives)
    if (prim.contains(p)) return prim.albedo;
  return background;
}

double SyntheticScene::surface_distance(const Vec3& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& prim : primitives) best = std::min(best, prim.surface_distance(p));
  return best;
}

double SyntheticScene::first_hit(const Ray& r) const {
  double best = 0.0;
  for (const auto& prim : primitives) {
    auto hit = prim.intersect(r);
    if (!hit) continue;
    const double entry = std::max(hit->first, r.near);
    if (entry > hit->second || entry > r.far) continue;
    if (best == 0.0 || entry < best) best = entry;
  }
  return best;
}

void SyntheticScene::validate() const {
  for (const auto& prim : primitives) {
    check_arg(prim.density > 0, "scene: primitive density must be positive");
    switch (prim.kind) {
      case Primitive::Kind::Ground:
        check_arg(prim.level >= bounds.min.y() && prim.level <= bounds.max.y(),
                  "scene: ground level outside bounds");
        break;
      case Primitive::Kind::Box:
        check_arg(bounds.contains(prim.box_min) && bounds.contains(prim.box_max),
                  "scene: box outside bounds");
        break;
      case Primitive::Kind::Sphere:
        check_arg(bounds.contains(prim.center + Vec3::Constant(prim.radius)) &&
                      bounds.contains(prim.center - Vec3::Constant(prim.radius)),
                  "scene: sphere outside bounds");
        break;
    }
  }
}

SyntheticScene scene_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  SyntheticScene s;
  if (j.contains("background")) s.background = color_from_json(j["background"]);
  if (j.contains("bounds")) {
    s.bounds.min = vec3_from_json(j["bounds"]["min"]);
    s.bounds.max = vec3_from_json(j["bounds"]["max"]);
  }
  if (j.contains("trajectory")) {
    const json& t = j["trajectory"];
    auto& p = s.trajectory;
    p.frames = t.value("frames", p.frames);
    p.cam_height = t.value("cam_height", p.cam_height);
    p.start_z = t.value("start_z", p.start_z);
    p.step = t.value("step", p.step);
    p.lateral_jitter = t.value("lateral_jitter", p.lateral_jitter);
    p.yaw_jitter = t.value("yaw_jitter", p.yaw_jitter);
    p.pitch = t.value("pitch", p.pitch);
    p.fov_deg = t.value("fov_deg", p.fov_deg);
    p.width = t.value("width", p.width);
    p.height = t.value("height", p.height);
    p.near = t.value("near", p.near);
    p.far = t.value("far", p.far);
  }
  for (const json& pj : j.value("primitives", json::array())) {
    Primitive prim;
    const std::string type = pj.at("type").get<std::string>();
    if (pj.contains("albedo")) prim.albedo = color_from_json(pj["albedo"]);
    prim.density = pj.value("density", prim.density);
    if (type == "ground") {
      prim.kind = Primitive::Kind::Ground;
      prim.level = pj.value("level", 0.0);
    } else if (type == "box") {
      prim.kind = Primitive::Kind::Box;
      prim.box_min = vec3_from_json(pj.at("min"));
      prim.box_max = vec3_from_json(pj.at("max"));
    } else if (type == "sphere") {
      prim.kind = Primitive::Kind::Sphere;
      prim.center = vec3_from_json(pj.at("center"));
      prim.radius = pj.at("radius").get<double>();
    } else {
      throw std::runtime_error("scene json: unknown primitive type '" + type + "'");
    }
    s.primitives.push_back(prim);
  }
  s.validate();
  return s;
}

std::string scene_to_json(const SyntheticScene& scene) {
  json j;
  j["background"] = color_to_json(scene.background);
  j["bounds"] = {{"min", vec3_to_json(scene.bounds.min)}, {"max", vec3_to_json(scene.bounds.max)}};
  const auto& p = scene.trajectory;
  j["trajectory"] = {{"frames", p.frames},
                     {"cam_height", p.cam_height},
                     {"start_z", p.start_z},
                     {"step", p.step},
                     {"lateral_jitter", p.lateral_jitter},
                     {"yaw_jitter", p.yaw_jitter},
                     {"pitch", p.pitch},
                     {"fov_deg", p.fov_deg},
                     {"width", p.width},
                     {"height", p.height},
                     {"near", p.near},
                     {"far", p.far}};
  json prims = json::array();
  for (const auto& prim : scene.primitives) {
    json pj;
    pj["albedo"] = color_to_json(prim.albedo);
    pj["density"] = prim.density;
    switch (prim.kind) {
      case Primitive::Kind::Ground:
        pj["type"] = "ground";
        pj["level"] = prim.level;
        break;
      case Primitive::Kind::Box:
        pj["type"] = "box";
        pj["min"] = vec3_to_json(prim.box_min);
        pj["max"] = vec3_to_json(prim.box_max);
        break;
      case Primitive::Kind::Sphere:
        pj["type"] = "sphere";
        pj["center"] = vec3_to_json(prim.center);
        pj["radius"] = prim.radius;
        break;
    }
    prims.push_back(pj);
  }
  j["primitives"] = prims;
  return j.dump(2);
}

SyntheticScene load_scene(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_scene: cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return scene_from_json(text);
}

void save_scene(const std::filesystem::path& path, const SyntheticScene& scene) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("save_scene: cannot open " + path.string());
  os << scene_to_json(scene) << "\n";
}

}  // namespace dgnr
