#include "stride/object.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace stride {

namespace {

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

}  // namespace

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const double scale = std::max({ab.squaredNorm(), ac.squaredNorm(), (c - b).squaredNorm()});
  if (ab.cross(ac).squaredNorm() <= 1e-24 * scale * scale || scale == 0.0) {
    return std::min({point_segment_distance(p, a, b), point_segment_distance(p, b, c),
                     point_segment_distance(p, c, a)});
  }
  // Voronoi-region walk over vertices, edges and the face.
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return ap.norm();
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return bp.norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return (p - (a + d1 / (d1 - d3) * ab)).norm();
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return cp.norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return (p - (a + d2 / (d2 - d6) * ac)).norm();
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return (p - (b + (d4 - d3) / ((d4 - d3) + (d5 - d6)) * (c - b))).norm();
  }
  const double denom = 1.0 / (va + vb + vc);
  return (p - (a + ab * (vb * denom) + ac * (vc * denom))).norm();
}

double point_mesh_distance(const Vec3& p, const TriangleMesh& mesh) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : mesh.triangles) {
    best = std::min(best, point_triangle_distance(p, mesh.vertices[t[0]], mesh.vertices[t[1]],
                                                  mesh.vertices[t[2]]));
  }
  return best;
}

std::vector<Vec3> bps_basis(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Vec3> pts;
  pts.reserve(count);
  while (static_cast<int>(pts.size()) < count) {
    const Vec3 v(n(rng), n(rng), n(rng));
    if (v.norm() > 1e-9) pts.push_back(v.normalized());
  }
  return pts;
}

Aabb mesh_bounds(const TriangleMesh& mesh) {
  if (mesh.vertices.empty() || mesh.triangles.empty()) throw EmptyMesh("object mesh is empty");
  Aabb box{mesh.vertices[0], mesh.vertices[0]};
  for (const auto& v : mesh.vertices) {
    box.min = box.min.cwiseMin(v);
    box.max = box.max.cwiseMax(v);
  }
  return box;
}

Vec3 VoxelGrid::center(int ix, int iy, int iz) const {
  const Vec3 size = (bounds.max - bounds.min) / kVoxelSide;
  return bounds.min + Vec3((ix + 0.5) * size.x(), (iy + 0.5) * size.y(), (iz + 0.5) * size.z());
}

VoxelGrid voxelize(const TriangleMesh& mesh) {
  VoxelGrid g;
  g.bounds = mesh_bounds(mesh);
  const double half_diag = 0.5 * ((g.bounds.max - g.bounds.min) / kVoxelSide).norm();
  for (int ix = 0; ix < kVoxelSide; ++ix) {
    for (int iy = 0; iy < kVoxelSide; ++iy) {
      for (int iz = 0; iz < kVoxelSide; ++iz) {
        const double d = point_mesh_distance(g.center(ix, iy, iz), mesh);
        g.occupied[VoxelGrid::index(ix, iy, iz)] = d <= half_diag + 1e-12 ? 1 : 0;
      }
    }
  }
  return g;
}

std::vector<double> ObjectEncoding::flatten() const {
  std::vector<double> out(kObjectFeatureWidth, 0.0);
  std::copy(bps_dist.begin(), bps_dist.end(), out.begin());
  std::copy(hand_dist.begin(), hand_dist.end(), out.begin() + kBpsPoints);
  std::copy(hip_dist.begin(), hip_dist.end(), out.begin() + kBpsPoints + kVoxelCount);
  return out;
}

ObjectEncoding bps_object_encoding(const TriangleMesh& mesh, const VoxelGrid& voxels,
                                   const std::array<Vec3, 2>& hands, const Vec3& hip,
                                   const std::vector<Vec3>& basis) {
  const Aabb box = mesh_bounds(mesh);
  if (static_cast<int>(basis.size()) != kBpsPoints) throw InvalidParams("BPS basis must have 512 points");
  ObjectEncoding e;
  const Vec3 center = box.center();
  for (int k = 0; k < kBpsPoints; ++k) e.bps_dist[k] = point_mesh_distance(center + basis[k], mesh);
  const Vec3 hand_mid = 0.5 * (hands[0] + hands[1]);
  for (int ix = 0; ix < kVoxelSide; ++ix) {
    for (int iy = 0; iy < kVoxelSide; ++iy) {
      for (int iz = 0; iz < kVoxelSide; ++iz) {
        const int idx = VoxelGrid::index(ix, iy, iz);
        if (!voxels.occupied[idx]) continue;
        const Vec3 c = voxels.center(ix, iy, iz);
        e.hand_dist[idx] = (hand_mid - c).norm();
        e.hip_dist[idx] = (hip - c).norm();
      }
    }
  }
  return e;
}

ObjectEncoding bps_object_encoding(const TriangleMesh& mesh, const std::array<Vec3, 2>& hands,
                                   const Vec3& hip, const std::vector<Vec3>& basis) {
  return bps_object_encoding(mesh, voxelize(mesh), hands, hip, basis);
}

SdfGrid::SdfGrid(std::array<int, 3> dims, double cell, Vec3 origin, std::vector<double> values)
    : dims_(dims), cell_(cell), origin_(origin), values_(std::move(values)) {
  for (int d : dims_) {
    if (d < 2) throw InvalidParams("SDF grid needs at least 2 nodes per axis");
  }
  if (!(cell_ > 0.0)) throw InvalidParams("SDF cell size must be positive");
  if (values_.size() != static_cast<size_t>(dims_[0]) * dims_[1] * dims_[2]) {
    throw InvalidParams("SDF value count does not match grid size");
  }
}

bool SdfGrid::contains(const Vec3& p) const {
  for (int a = 0; a < 3; ++a) {
    const double u = (p[a] - origin_[a]) / cell_;
    if (!(u >= -1e-9 && u <= dims_[a] - 1 + 1e-9)) return false;
  }
  return true;
}

SdfSample SdfGrid::sample(const Vec3& p) const {
  if (!contains(p)) throw OutOfBounds("SDF query outside grid");
  int i[3];
  double t[3];
  for (int a = 0; a < 3; ++a) {
    const double u = std::clamp((p[a] - origin_[a]) / cell_, 0.0, double(dims_[a] - 1));
    i[a] = std::min(static_cast<int>(std::floor(u)), dims_[a] - 2);
    t[a] = u - i[a];
  }
  auto v = [&](int dx, int dy, int dz) {
    return values_[(static_cast<size_t>(i[0] + dx) * dims_[1] + (i[1] + dy)) * dims_[2] + (i[2] + dz)];
  };
  SdfSample s;
  for (int dx = 0; dx < 2; ++dx) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dz = 0; dz < 2; ++dz) {
        const double wx = dx ? t[0] : 1.0 - t[0];
        const double wy = dy ? t[1] : 1.0 - t[1];
        const double wz = dz ? t[2] : 1.0 - t[2];
        const double val = v(dx, dy, dz);
        s.value += wx * wy * wz * val;
        s.gradient.x() += (dx ? 1.0 : -1.0) * wy * wz * val;
        s.gradient.y() += wx * (dy ? 1.0 : -1.0) * wz * val;
        s.gradient.z() += wx * wy * (dz ? 1.0 : -1.0) * val;
      }
    }
  }
  s.gradient /= cell_;
  return s;
}

namespace {

template <typename Fn>
SdfGrid sample_lattice(const Vec3& lo, const Vec3& hi, double cell, Fn&& fn) {
  std::array<int, 3> dims;
  for (int a = 0; a < 3; ++a) dims[a] = static_cast<int>(std::ceil((hi[a] - lo[a]) / cell)) + 1;
  std::vector<double> values(static_cast<size_t>(dims[0]) * dims[1] * dims[2]);
  for (int x = 0; x < dims[0]; ++x) {
    for (int y = 0; y < dims[1]; ++y) {
      for (int z = 0; z < dims[2]; ++z) {
        values[(static_cast<size_t>(x) * dims[1] + y) * dims[2] + z] = fn(lo + cell * Vec3(x, y, z));
      }
    }
  }
  return SdfGrid(dims, cell, lo, std::move(values));
}

double winding_number(const Vec3& p, const TriangleMesh& mesh) {
  double total = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3 a = mesh.vertices[t[0]] - p;
    const Vec3 b = mesh.vertices[t[1]] - p;
    const Vec3 c = mesh.vertices[t[2]] - p;
    const double la = a.norm(), lb = b.norm(), lc = c.norm();
    const double num = a.dot(b.cross(c));
    const double den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    total += 2.0 * std::atan2(num, den);
  }
  return total / (4.0 * kPi);
}

}  // namespace

SdfGrid box_sdf(const Vec3& center, const Vec3& half_extent, double cell, double margin) {
  const Vec3 pad = Vec3::Constant(margin);
  return sample_lattice(center - half_extent - pad, center + half_extent + pad, cell, [&](const Vec3& p) {
    const Vec3 q = (p - center).cwiseAbs() - half_extent;
    return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
  });
}

SdfGrid mesh_sdf(const TriangleMesh& mesh, double cell, double margin) {
  const Aabb box = mesh_bounds(mesh);
  const Vec3 pad = Vec3::Constant(margin);
  return sample_lattice(box.min - pad, box.max + pad, cell, [&](const Vec3& p) {
    const double d = point_mesh_distance(p, mesh);
    return winding_number(p, mesh) > 0.5 ? -d : d;
  });
}

TriangleMesh box_mesh(const Vec3& center, const Vec3& h) {
  TriangleMesh m;
  for (int k = 0; k < 8; ++k) {
    m.vertices.push_back(center + Vec3((k & 1) ? h.x() : -h.x(), (k & 2) ? h.y() : -h.y(),
                                       (k & 4) ? h.z() : -h.z()));
  }
  // Quads with outward normals (counter-clockwise seen from outside).
  const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                           {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  for (const auto& q : quads) {
    m.triangles.push_back({q[0], q[1], q[2]});
    m.triangles.push_back({q[0], q[2], q[3]});
  }
  return m;
}

TriangleMesh sphere_mesh(const Vec3& center, double radius, int rings, int segments) {
  if (rings < 2 || segments < 3) throw InvalidParams("sphere tessellation too coarse");
  TriangleMesh m;
  m.vertices.push_back(center + Vec3(0, radius, 0));
  for (int r = 1; r < rings; ++r) {
    const double phi = kPi * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double th = 2.0 * kPi * s / segments;
      m.vertices.push_back(center + radius * Vec3(std::sin(phi) * std::cos(th), std::cos(phi),
                                                  std::sin(phi) * std::sin(th)));
    }
  }
  m.vertices.push_back(center + Vec3(0, -radius, 0));
  const int bottom = static_cast<int>(m.vertices.size()) - 1;
  auto ring = [&](int r, int s) { return 1 + (r - 1) * segments + (s % segments); };
  for (int s = 0; s < segments; ++s) m.triangles.push_back({0, ring(1, s + 1), ring(1, s)});
  for (int r = 1; r < rings - 1; ++r) {
    for (int s = 0; s < segments; ++s) {
      m.triangles.push_back({ring(r, s), ring(r, s + 1), ring(r + 1, s + 1)});
      m.triangles.push_back({ring(r, s), ring(r + 1, s + 1), ring(r + 1, s)});
    }
  }
  for (int s = 0; s < segments; ++s) m.triangles.push_back({bottom, ring(rings - 1, s), ring(rings - 1, s + 1)});
  return m;
}

}  // namespace stride
