#pragma once

#include "stride/common.hpp"

#include <vector>

namespace stride {

struct HeightSample {
  double height = 0.0;
  double dx = 0.0;  // dh/dx
  double dz = 0.0;  // dh/dz
};

/// Regular grid of terrain heights. Node (r, c) sits at world
/// (origin.x + c * cell_size, origin.y + r * cell_size); `origin` holds the
/// world (x, z) of node (0, 0). Heights are stored row-major.
class HeightField {
 public:
  HeightField() = default;
  /// Throws InvalidParams unless rows, cols >= 2, cell_size > 0 and every
  /// height is finite.
  HeightField(int rows, int cols, double cell_size, Vec2 origin, std::vector<double> heights);
  HeightField(int rows, int cols, double cell_size, Vec2 origin, double fill = 0.0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double cell_size() const { return cell_size_; }
  const Vec2& origin() const { return origin_; }
  double extent_x() const { return (cols_ - 1) * cell_size_; }
  double extent_z() const { return (rows_ - 1) * cell_size_; }
  Vec2 center() const { return origin_ + 0.5 * Vec2(extent_x(), extent_z()); }

  double node(int r, int c) const { return heights_[static_cast<size_t>(r) * cols_ + c]; }
  double& node(int r, int c) { return heights_[static_cast<size_t>(r) * cols_ + c]; }
  Vec2 node_position(int r, int c) const {
    return origin_ + Vec2(c * cell_size_, r * cell_size_);
  }
  const std::vector<double>& heights() const { return heights_; }
  std::vector<double>& heights() { return heights_; }

  bool contains(double x, double z) const;

  /// Bilinear interpolation. Throws OutOfBounds outside the grid extent.
  double height_at(double x, double z) const;
  /// Height plus its partial derivatives (piecewise-bilinear gradient).
  HeightSample sample(double x, double z) const;
  /// As sample(), on the terrain extended flat past its border: the query is
  /// clamped into the grid and the gradient across a clamped edge is zero.
  HeightSample sample_clamped(double x, double z) const;

  /// Bilinear weights of the four nodes surrounding (x, z): fills node
  /// indices (row-major) and weights. Throws OutOfBounds.
  void stencil(double x, double z, int (&index)[4], double (&weight)[4]) const;

  double min_height() const;
  double max_height() const;

  /// Same grid mirrored across the world x = 0 plane (x -> -x).
  HeightField mirrored_x() const;

 private:
  void locate(double x, double z, int& c, int& r, double& tx, double& tz) const;

  int rows_ = 0;
  int cols_ = 0;
  double cell_size_ = 1.0;
  Vec2 origin_ = Vec2::Zero();
  std::vector<double> heights_;
};

}  // namespace stride
