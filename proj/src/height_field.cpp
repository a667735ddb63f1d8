#include "stride/height_field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace stride {

namespace {

// Queries this far outside the grid (in cells) still snap onto the border.
constexpr double kEdgeSlack = 1e-9;

}  // namespace

HeightField::HeightField(int rows, int cols, double cell_size, Vec2 origin,
                         std::vector<double> heights)
    : rows_(rows), cols_(cols), cell_size_(cell_size), origin_(origin), heights_(std::move(heights)) {
  if (rows_ < 2 || cols_ < 2) throw InvalidParams("height field needs at least 2x2 nodes");
  if (!(cell_size_ > 0.0) || !std::isfinite(cell_size_)) {
    throw InvalidParams("cell size must be positive");
  }
  if (!origin_.allFinite()) throw InvalidParams("non-finite height field origin");
  if (heights_.size() != static_cast<size_t>(rows_) * cols_) {
    throw InvalidParams("height count does not match grid size");
  }
  for (double h : heights_) {
    if (!std::isfinite(h)) throw InvalidParams("non-finite height");
  }
}

HeightField::HeightField(int rows, int cols, double cell_size, Vec2 origin, double fill)
    : HeightField(rows, cols, cell_size, origin,
                  std::vector<double>(static_cast<size_t>(std::max(rows, 0)) * std::max(cols, 0), fill)) {}

bool HeightField::contains(double x, double z) const {
  const double u = (x - origin_.x()) / cell_size_;
  const double v = (z - origin_.y()) / cell_size_;
  return u >= -kEdgeSlack && v >= -kEdgeSlack && u <= (cols_ - 1) + kEdgeSlack &&
         v <= (rows_ - 1) + kEdgeSlack;
}

void HeightField::locate(double x, double z, int& c, int& r, double& tx, double& tz) const {
  if (!contains(x, z)) {
    std::ostringstream msg;
    msg << "height query (" << x << ", " << z << ") outside terrain extent";
    throw OutOfBounds(msg.str());
  }
  double u = std::clamp((x - origin_.x()) / cell_size_, 0.0, double(cols_ - 1));
  double v = std::clamp((z - origin_.y()) / cell_size_, 0.0, double(rows_ - 1));
  // Snap round-off so queries at node positions return the stored height.
  if (std::abs(u - std::round(u)) < kEdgeSlack) u = std::round(u);
  if (std::abs(v - std::round(v)) < kEdgeSlack) v = std::round(v);
  c = std::min(static_cast<int>(std::floor(u)), cols_ - 2);
  r = std::min(static_cast<int>(std::floor(v)), rows_ - 2);
  tx = u - c;
  tz = v - r;
}

double HeightField::height_at(double x, double z) const { return sample(x, z).height; }

HeightSample HeightField::sample(double x, double z) const {
  int c = 0;
  int r = 0;
  double tx = 0.0;
  double tz = 0.0;
  locate(x, z, c, r, tx, tz);
  const double h00 = node(r, c);
  const double h01 = node(r, c + 1);
  const double h10 = node(r + 1, c);
  const double h11 = node(r + 1, c + 1);
  const double bottom = (1.0 - tx) * h00 + tx * h01;
  const double top = (1.0 - tx) * h10 + tx * h11;
  HeightSample s;
  s.height = (1.0 - tz) * bottom + tz * top;
  s.dx = ((1.0 - tz) * (h01 - h00) + tz * (h11 - h10)) / cell_size_;
  s.dz = (top - bottom) / cell_size_;
  return s;
}

HeightSample HeightField::sample_clamped(double x, double z) const {
  const double cx = std::clamp(x, origin_.x(), origin_.x() + extent_x());
  const double cz = std::clamp(z, origin_.y(), origin_.y() + extent_z());
  HeightSample s = sample(cx, cz);
  if (cx != x) s.dx = 0.0;
  if (cz != z) s.dz = 0.0;
  return s;
}

void HeightField::stencil(double x, double z, int (&index)[4], double (&weight)[4]) const {
  int c = 0;
  int r = 0;
  double tx = 0.0;
  double tz = 0.0;
  locate(x, z, c, r, tx, tz);
  index[0] = r * cols_ + c;
  index[1] = r * cols_ + c + 1;
  index[2] = (r + 1) * cols_ + c;
  index[3] = (r + 1) * cols_ + c + 1;
  weight[0] = (1.0 - tx) * (1.0 - tz);
  weight[1] = tx * (1.0 - tz);
  weight[2] = (1.0 - tx) * tz;
  weight[3] = tx * tz;
}

double HeightField::min_height() const { return *std::min_element(heights_.begin(), heights_.end()); }
double HeightField::max_height() const { return *std::max_element(heights_.begin(), heights_.end()); }

HeightField HeightField::mirrored_x() const {
  std::vector<double> h(heights_.size());
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      h[static_cast<size_t>(r) * cols_ + c] = node(r, cols_ - 1 - c);
    }
  }
  const Vec2 origin(-(origin_.x() + extent_x()), origin_.y());
  return HeightField(rows_, cols_, cell_size_, origin, std::move(h));
}

}  // namespace stride
