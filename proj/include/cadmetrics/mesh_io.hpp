#pragma once

// Binary STL and ASCII OBJ (v/f records) reading and writing.

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "cadmetrics/mesh.hpp"

namespace cadmetrics {

class MeshIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 80-byte header, little-endian uint32 count, 50-byte records. Coordinates
/// are narrowed to float.
void write_stl(std::ostream& out, const TriangleMesh& mesh);
void write_obj(std::ostream& out, const TriangleMesh& mesh);

/// Bit-identical float coordinates are merged into one vertex.
TriangleMesh read_stl(std::istream& in);
/// Accepts `v` and `f` records (with optional /vt/vn parts and negative
/// indices); polygons are fanned. Other records are ignored.
TriangleMesh read_obj(std::istream& in);

/// Chooses the format from the extension (.stl or .obj, case-insensitive).
void save_mesh(const std::string& path, const TriangleMesh& mesh);
TriangleMesh load_mesh(const std::string& path);

}  // namespace cadmetrics
