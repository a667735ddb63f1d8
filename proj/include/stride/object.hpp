#pragma once

#include "stride/terrain.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace stride {

inline constexpr int kBpsPoints = 512;
inline constexpr int kVoxelSide = 8;
inline constexpr int kVoxelCount = kVoxelSide * kVoxelSide * kVoxelSide;
inline constexpr int kObjectFeatureWidth = 2048;

/// Unsigned distance from p to a triangle; degenerate triangles fall back to
/// their edges (or their single point).
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);
double point_mesh_distance(const Vec3& p, const TriangleMesh& mesh);

/// Basis points on the unit sphere, fixed by `seed`.
std::vector<Vec3> bps_basis(std::uint64_t seed = 0x5eed, int count = kBpsPoints);

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  Vec3 center() const { return 0.5 * (min + max); }
};

Aabb mesh_bounds(const TriangleMesh& mesh);

/// 8x8x8 occupancy over a bounding box, index (ix * 8 + iy) * 8 + iz.
struct VoxelGrid {
  Aabb bounds;
  std::array<std::uint8_t, kVoxelCount> occupied{};

  static int index(int ix, int iy, int iz) { return (ix * kVoxelSide + iy) * kVoxelSide + iz; }
  Vec3 center(int ix, int iy, int iz) const;
};

/// Surface voxelization: a voxel is occupied when the surface passes within
/// half a voxel diagonal of its center.
VoxelGrid voxelize(const TriangleMesh& mesh);

struct ObjectEncoding {
  std::array<double, kBpsPoints> bps_dist{};
  std::array<double, kVoxelCount> hand_dist{};  // from the hand midpoint
  std::array<double, kVoxelCount> hip_dist{};

  /// 512 BPS, 512 hand, 512 hip, 512 reserved zeros.
  std::vector<double> flatten() const;
};

/// BPS distances are taken with the basis centered on the object's bounding
/// box center. Throws EmptyMesh.
ObjectEncoding bps_object_encoding(const TriangleMesh& mesh, const std::array<Vec3, 2>& hands,
                                   const Vec3& hip, const std::vector<Vec3>& basis = bps_basis());
/// Same with an explicit occupancy grid.
ObjectEncoding bps_object_encoding(const TriangleMesh& mesh, const VoxelGrid& voxels,
                                   const std::array<Vec3, 2>& hands, const Vec3& hip,
                                   const std::vector<Vec3>& basis = bps_basis());

struct SdfSample {
  double value = 0.0;
  Vec3 gradient = Vec3::Zero();
};

/// Signed distance samples on a regular lattice (negative inside), queried
/// by trilinear interpolation. Node (i, j, k) is at origin + cell (i, j, k);
/// storage is x-major: (i * ny + j) * nz + k.
class SdfGrid {
 public:
  SdfGrid() = default;
  SdfGrid(std::array<int, 3> dims, double cell, Vec3 origin, std::vector<double> values);

  const std::array<int, 3>& dims() const { return dims_; }
  double cell() const { return cell_; }
  const Vec3& origin() const { return origin_; }
  const std::vector<double>& values() const { return values_; }

  bool contains(const Vec3& p) const;
  /// Throws OutOfBounds outside the lattice.
  SdfSample sample(const Vec3& p) const;

 private:
  std::array<int, 3> dims_{0, 0, 0};
  double cell_ = 1.0;
  Vec3 origin_ = Vec3::Zero();
  std::vector<double> values_;
};

/// Samples an analytic box SDF (center, half extents) on a lattice covering
/// the box plus `margin`.
SdfGrid box_sdf(const Vec3& center, const Vec3& half_extent, double cell, double margin);
/// SDF of a closed mesh; the sign comes from the generalized winding number.
SdfGrid mesh_sdf(const TriangleMesh& mesh, double cell, double margin);

/// Closed axis-aligned box mesh, outward oriented.
TriangleMesh box_mesh(const Vec3& center, const Vec3& half_extent);
/// UV sphere mesh.
TriangleMesh sphere_mesh(const Vec3& center, double radius, int rings = 32, int segments = 64);

}  // namespace stride
