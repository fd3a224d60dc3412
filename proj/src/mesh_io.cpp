#include "cadmetrics/mesh_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <map>
#include <ostream>
#include <sstream>

namespace cadmetrics {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes, 4);
}

void put_f32(std::ostream& out, double v) { put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

std::string lower_extension(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return {};
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

void write_stl(std::ostream& out, const TriangleMesh& mesh) {
  char header[80] = {};
  std::snprintf(header, sizeof header, "cadmetrics binary STL");
  out.write(header, 80);
  put_u32(out, static_cast<std::uint32_t>(mesh.triangles.size()));
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Vec3 a = mesh.corner(t, 0);
    const Vec3 b = mesh.corner(t, 1);
    const Vec3 c = mesh.corner(t, 2);
    const Vec3 n = normalized(triangle_normal_scaled(a, b, c));
    for (Vec3 p : {n, a, b, c}) {
      put_f32(out, p.x);
      put_f32(out, p.y);
      put_f32(out, p.z);
    }
    out.write("\0\0", 2);
  }
  if (!out) throw MeshIoError("failed writing STL stream");
}

void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  char buf[128];
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
    out << buf;
  }
  for (const Triangle& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  if (!out) throw MeshIoError("failed writing OBJ stream");
}

TriangleMesh read_stl(std::istream& in) {
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < 84) throw MeshIoError("STL shorter than its 84-byte preamble");
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  const std::uint32_t count = get_u32(bytes + 80);
  if (data.size() != 84 + std::size_t{count} * 50) {
    throw MeshIoError("STL size does not match its triangle count (ASCII STL is not supported)");
  }
  TriangleMesh mesh;
  std::map<std::array<std::uint32_t, 3>, std::uint32_t> index;
  for (std::uint32_t t = 0; t < count; ++t) {
    const unsigned char* rec = bytes + 84 + std::size_t{t} * 50;
    Triangle tri{};
    for (int k = 0; k < 3; ++k) {
      const unsigned char* p = rec + 12 + 12 * k;
      const std::array<std::uint32_t, 3> key{get_u32(p), get_u32(p + 4), get_u32(p + 8)};
      auto [it, inserted] = index.try_emplace(key, static_cast<std::uint32_t>(mesh.vertices.size()));
      if (inserted) mesh.vertices.push_back({get_f32(p), get_f32(p + 4), get_f32(p + 8)});
      tri[k] = it->second;
    }
    mesh.triangles.push_back(tri);
  }
  return mesh;
}

TriangleMesh read_obj(std::istream& in) {
  TriangleMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::uint32_t> face;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ss >> p.x >> p.y >> p.z)) throw MeshIoError("bad vertex on OBJ line " + std::to_string(line_no));
      mesh.vertices.push_back(p);
    } else if (tag == "f") {
      face.clear();
      std::string token;
      while (ss >> token) {
        long idx = 0;
        try {
          idx = std::stol(token.substr(0, token.find('/')));
        } catch (const std::exception&) {
          throw MeshIoError("bad face index on OBJ line " + std::to_string(line_no));
        }
        const long n = static_cast<long>(mesh.vertices.size());
        const long resolved = idx < 0 ? n + idx : idx - 1;
        if (idx == 0 || resolved < 0 || resolved >= n) {
          throw MeshIoError("face index out of range on OBJ line " + std::to_string(line_no));
        }
        face.push_back(static_cast<std::uint32_t>(resolved));
      }
      if (face.size() < 3) throw MeshIoError("face with fewer than 3 corners on OBJ line " + std::to_string(line_no));
      for (std::size_t k = 1; k + 1 < face.size(); ++k) mesh.triangles.push_back({face[0], face[k], face[k + 1]});
    }
  }
  return mesh;
}

void save_mesh(const std::string& path, const TriangleMesh& mesh) {
  const std::string ext = lower_extension(path);
  if (ext != "stl" && ext != "obj") throw MeshIoError("unsupported mesh extension: " + path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MeshIoError("cannot open for writing: " + path);
  if (ext == "stl") {
    write_stl(out, mesh);
  } else {
    write_obj(out, mesh);
  }
}

TriangleMesh load_mesh(const std::string& path) {
  const std::string ext = lower_extension(path);
  if (ext != "stl" && ext != "obj") throw MeshIoError("unsupported mesh extension: " + path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MeshIoError("cannot open: " + path);
  return ext == "stl" ? read_stl(in) : read_obj(in);
}

}  // namespace cadmetrics
