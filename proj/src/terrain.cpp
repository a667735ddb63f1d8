#include "stride/terrain.hpp"

#include "stride/io_util.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

namespace stride {

void TerrainPatch::validate() const {
  const double h = field.cell_size();
  if (field.rows() != field.cols()) throw InvalidParams("terrain patch must be square");
  if (std::abs(field.extent_x() - kPatchExtent) > h) {
    throw InvalidParams("terrain patch must span 4 m");
  }
}

TerrainPatch sample_patch(const HeightField& field, const Vec2& center, double yaw,
                          double cell_size) {
  const double h = cell_size > 0.0 ? cell_size : field.cell_size();
  const int n = static_cast<int>(std::lround(kPatchExtent / h)) + 1;
  const double half = 0.5 * (n - 1) * h;
  const double center_height = field.height_at(center.x(), center.y());
  std::vector<double> heights(static_cast<size_t>(n) * n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const Vec2 local(-half + c * h, -half + r * h);
      const Vec2 world = center + rotate_ground(local, yaw);
      heights[static_cast<size_t>(r) * n + c] = field.height_at(world.x(), world.y()) - center_height;
    }
  }
  TerrainPatch patch;
  patch.field = HeightField(n, n, h, Vec2(-half, -half), std::move(heights));
  patch.yaw = yaw;
  return patch;
}

// ---------------------------------------------------------------------------

TriangleMesh heightfield_to_mesh(const HeightField& field, double base_depth) {
  const int rows = field.rows();
  const int cols = field.cols();
  const int top_count = rows * cols;
  const double base = field.min_height() - base_depth;

  TriangleMesh mesh;
  mesh.vertices.reserve(2 * static_cast<size_t>(top_count));
  for (int layer = 0; layer < 2; ++layer) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const Vec2 p = field.node_position(r, c);
        mesh.vertices.emplace_back(p.x(), layer == 0 ? field.node(r, c) : base, p.y());
      }
    }
  }

  auto top = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r + 1 < rows; ++r) {
    for (int c = 0; c + 1 < cols; ++c) {
      const int a = top(r, c), b = top(r + 1, c), d = top(r, c + 1), e = top(r + 1, c + 1);
      mesh.triangles.push_back({a, b, d});
      mesh.triangles.push_back({d, b, e});
    }
  }
  const size_t top_triangles = mesh.triangles.size();

  // Boundary edges of the top surface are the directed edges whose reverse
  // is missing; each gets a wall quad running in the opposite direction.
  std::map<std::pair<int, int>, int> directed;
  for (size_t t = 0; t < top_triangles; ++t) {
    const auto& tri = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) ++directed[{tri[k], tri[(k + 1) % 3]}];
  }
  for (const auto& [edge, count] : directed) {
    const auto [u, v] = edge;
    if (directed.count({v, u})) continue;
    const int ub = u + top_count;
    const int vb = v + top_count;
    mesh.triangles.push_back({v, u, ub});
    mesh.triangles.push_back({v, ub, vb});
  }

  for (size_t t = 0; t < top_triangles; ++t) {
    const auto& tri = mesh.triangles[t];
    mesh.triangles.push_back({tri[0] + top_count, tri[2] + top_count, tri[1] + top_count});
  }
  return mesh;
}

MeshAudit audit_mesh(const TriangleMesh& mesh) {
  std::map<std::pair<int, int>, int> directed;
  double volume = 0.0;
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) ++directed[{tri[k], tri[(k + 1) % 3]}];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    volume += a.dot(b.cross(c)) / 6.0;
  }
  MeshAudit audit;
  audit.signed_volume = volume;
  audit.edge_manifold = true;
  audit.consistently_oriented = true;
  for (const auto& [edge, count] : directed) {
    const auto it = directed.find({edge.second, edge.first});
    const int reverse = it == directed.end() ? 0 : it->second;
    if (count + reverse != 2) audit.edge_manifold = false;
    if (count != 1 || reverse != 1) audit.consistently_oriented = false;
  }
  return audit;
}

std::string mesh_to_obj(const TriangleMesh& mesh) {
  std::ostringstream out;
  out.precision(9);
  out << "# stride terrain mesh, meters\n";
  for (const Vec3& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
  return out.str();
}

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  write_text_file(path, mesh_to_obj(mesh));
}

// ---------------------------------------------------------------------------

const char* terrain_kind_name(TerrainKind kind) {
  switch (kind) {
    case TerrainKind::kFlat: return "flat";
    case TerrainKind::kSlope: return "slope";
    case TerrainKind::kStairs: return "stairs";
    case TerrainKind::kFractal: return "fractal";
  }
  return "?";
}

TerrainKind terrain_kind_from_name(const std::string& name) {
  for (TerrainKind k : {TerrainKind::kFlat, TerrainKind::kSlope, TerrainKind::kStairs,
                        TerrainKind::kFractal}) {
    if (name == terrain_kind_name(k)) return k;
  }
  throw InvalidParams("unknown terrain kind '" + name + "'");
}

void TerrainParams::validate(TerrainKind kind) const {
  if (rows < 2 || cols < 2 || !(cell_size > 0.0)) throw InvalidParams("bad terrain grid size");
  switch (kind) {
    case TerrainKind::kFlat:
      break;
    case TerrainKind::kSlope:
      if (!(slope_deg >= 0.0 && slope_deg <= 45.0)) throw InvalidParams("slope must be in [0, 45] deg");
      break;
    case TerrainKind::kStairs:
      if (!(stair_rise >= 0.0 && stair_rise <= 0.25)) throw InvalidParams("stair rise must be in [0, 0.25] m");
      if (!(stair_run > 0.0)) throw InvalidParams("stair run must be positive");
      break;
    case TerrainKind::kFractal:
      if (octaves < 3 || octaves > 5) throw InvalidParams("fractal octaves must be in [3, 5]");
      if (!(amplitude >= 0.0) || !(wavelength > 0.0)) throw InvalidParams("bad fractal amplitude/wavelength");
      break;
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Lattice value in [-1, 1] for one octave.
double lattice_value(std::uint64_t seed, int octave, std::int64_t ix, std::int64_t iz) {
  std::uint64_t h = splitmix64(seed ^ (static_cast<std::uint64_t>(octave) * 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ static_cast<std::uint64_t>(ix));
  h = splitmix64(h ^ static_cast<std::uint64_t>(iz) * 0x9e3779b97f4a7c15ULL);
  return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
}

double smooth(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double value_noise(std::uint64_t seed, int octave, double x, double z) {
  const double fx = std::floor(x);
  const double fz = std::floor(z);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iz = static_cast<std::int64_t>(fz);
  const double tx = smooth(x - fx);
  const double tz = smooth(z - fz);
  const double v00 = lattice_value(seed, octave, ix, iz);
  const double v10 = lattice_value(seed, octave, ix + 1, iz);
  const double v01 = lattice_value(seed, octave, ix, iz + 1);
  const double v11 = lattice_value(seed, octave, ix + 1, iz + 1);
  const double a = v00 + tx * (v10 - v00);
  const double b = v01 + tx * (v11 - v01);
  return a + tz * (b - a);
}

}  // namespace

HeightField generate_terrain(std::uint64_t seed, TerrainKind kind, const TerrainParams& p) {
  p.validate(kind);
  HeightField field(p.rows, p.cols, p.cell_size, p.origin, 0.0);
  const double slope = std::tan(p.slope_deg * kPi / 180.0);
  const Vec2 slope_axis(std::sin(p.slope_dir), std::cos(p.slope_dir));
  for (int r = 0; r < p.rows; ++r) {
    for (int c = 0; c < p.cols; ++c) {
      const Vec2 w = field.node_position(r, c);
      double h = 0.0;
      switch (kind) {
        case TerrainKind::kFlat:
          break;
        case TerrainKind::kSlope:
          h = slope * w.dot(slope_axis);
          break;
        case TerrainKind::kStairs: {
          const double u = p.stair_dir == 0.0 ? c * p.cell_size : r * p.cell_size;
          h = p.stair_rise * std::floor(u / p.stair_run + 1e-9);
          break;
        }
        case TerrainKind::kFractal: {
          double amp = p.amplitude;
          double wave = p.wavelength;
          for (int o = 0; o < p.octaves; ++o) {
            h += amp * value_noise(seed, o, w.x() / wave, w.y() / wave);
            amp *= 0.5;
            wave *= 0.5;
          }
          break;
        }
      }
      field.node(r, c) = h;
    }
  }
  return field;
}

// ---------------------------------------------------------------------------

std::vector<char> encode_hgt(const HeightField& field) {
  ByteWriter w;
  w.put_bytes("HGT1", 4);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(field.rows()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(field.cols()));
  w.put<float>(static_cast<float>(field.cell_size()));
  w.put<double>(field.origin().x());
  w.put<double>(field.origin().y());
  for (double h : field.heights()) w.put<float>(static_cast<float>(h));
  return std::move(w.bytes());
}

HeightField decode_hgt(const std::vector<char>& bytes) {
  ByteReader r(bytes);
  char magic[4];
  r.get_bytes(magic, 4);
  if (std::memcmp(magic, "HGT1", 4) != 0) throw FormatError("not an HGT1 height field");
  const auto rows = r.get<std::uint32_t>();
  const auto cols = r.get<std::uint32_t>();
  const double cell = r.get<float>();
  const double ox = r.get<double>();
  const double oz = r.get<double>();
  if (rows < 2 || cols < 2 || rows > (1u << 15) || cols > (1u << 15)) {
    throw FormatError("HGT1 grid size out of range");
  }
  std::vector<double> heights(static_cast<size_t>(rows) * cols);
  for (double& h : heights) h = r.get<float>();
  if (r.remaining() != 0) throw FormatError("trailing bytes after HGT1 heights");
  try {
    return HeightField(static_cast<int>(rows), static_cast<int>(cols), cell, Vec2(ox, oz),
                       std::move(heights));
  } catch (const InvalidParams& e) {
    throw FormatError(std::string("invalid HGT1 field: ") + e.what());
  }
}

void write_hgt(const std::filesystem::path& path, const HeightField& field) {
  write_binary_file(path, encode_hgt(field));
}

HeightField read_hgt(const std::filesystem::path& path) { return decode_hgt(read_binary_file(path)); }

}  // namespace stride
