#pragma once

#include "stride/height_field.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace stride {

inline constexpr double kPatchExtent = 4.0;  // meters per side

/// A 4 x 4 m terrain patch in its own local frame: the patch is centered on
/// the local origin and its center height is zero.
struct TerrainPatch {
  HeightField field;
  int id = 0;         // index in its bank
  int source_id = 0;  // source terrain the patch was cut from
  double yaw = 0.0;   // sampling orientation in the source terrain

  /// Throws InvalidParams unless the field is square with a 4 m extent
  /// (within one cell).
  void validate() const;
};

/// Resamples a 4 x 4 m window of `field` centered at `center` and rotated by
/// `yaw` onto a lattice with `cell_size` spacing (the source cell size by
/// default). Patch node (r, c) has local coordinates (-2 + c h, -2 + r h)
/// and world position center + R_y(yaw) (lx, lz). Heights are re-zeroed so
/// the patch center is at height 0. Throws OutOfBounds if the footprint
/// leaves the field.
TerrainPatch sample_patch(const HeightField& field, const Vec2& center, double yaw,
                          double cell_size = 0.0);

/// Rotates a ground-plane vector (x, z) by R_y(yaw).
inline Vec2 rotate_ground(const Vec2& v, double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return {c * v.x() + s * v.y(), -s * v.x() + c * v.y()};
}

// ---------------------------------------------------------------------------
// Meshes

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

/// Closed mesh of the terrain volume: two triangles per cell on top, skirt
/// walls down to a flat base below the lowest point and a base grid, all
/// faces oriented outward.
TriangleMesh heightfield_to_mesh(const HeightField& field, double base_depth = 0.5);

struct MeshAudit {
  bool edge_manifold = false;       // every undirected edge has exactly 2 faces
  bool consistently_oriented = false;  // every directed edge appears once
  double signed_volume = 0.0;
  bool watertight() const { return edge_manifold && consistently_oriented; }
};

MeshAudit audit_mesh(const TriangleMesh& mesh);

std::string mesh_to_obj(const TriangleMesh& mesh);
void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh);

// ---------------------------------------------------------------------------
// Procedural terrain

enum class TerrainKind { kFlat, kSlope, kStairs, kFractal };

const char* terrain_kind_name(TerrainKind kind);
TerrainKind terrain_kind_from_name(const std::string& name);

struct TerrainParams {
  int rows = 161;
  int cols = 161;
  double cell_size = 0.05;
  Vec2 origin = Vec2(-4.0, -4.0);
  double slope_deg = 10.0;      // kSlope, <= 45
  double slope_dir = 0.0;       // kSlope, radians; heights rise along (sin, cos)
  double stair_rise = 0.17;     // kStairs, <= 0.25
  double stair_run = 0.30;      // kStairs
  double stair_dir = 0.0;       // kStairs, 0 = steps along +x, otherwise along +z
  int octaves = 4;              // kFractal, 3..5
  double amplitude = 0.3;       // kFractal, meters for the first octave
  double wavelength = 2.0;      // kFractal, meters for the first octave

  void validate(TerrainKind kind) const;
};

/// Deterministic in (seed, kind, params).
/// kSlope: h = tan(slope) * ((x, z) . (sin dir, cos dir)).
/// kStairs: h = rise * floor(u / run), u the distance from the grid origin
///          along the step axis.
/// kFractal: sum of `octaves` octaves of smoothed value noise, amplitude and
///           wavelength halving per octave.
HeightField generate_terrain(std::uint64_t seed, TerrainKind kind, const TerrainParams& params);

// ---------------------------------------------------------------------------
// HGT1 binary format: "HGT1", u32 rows, u32 cols, f32 cell_size, f64 origin_x,
// f64 origin_z, rows * cols f32 heights row-major, all little-endian.

std::vector<char> encode_hgt(const HeightField& field);
HeightField decode_hgt(const std::vector<char>& bytes);
void write_hgt(const std::filesystem::path& path, const HeightField& field);
HeightField read_hgt(const std::filesystem::path& path);

}  // namespace stride
