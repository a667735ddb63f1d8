#include "stride/fitting.hpp"

#include "stride/contacts.hpp"
#include "stride/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <optional>

namespace stride {

FitResult fit_error(const Skeleton& skeleton, const MotionSegment& segment,
                    const JointPositions& positions, const HeightField& patch, double offset,
                    const FitOptions& options) {
  FitResult r;
  r.vertical_offset = offset;
  const double l = options.jump_threshold;
  for (int i = 0; i < positions.frames; ++i) {
    for (int c = 0; c < kFootCount; ++c) {
      const Vec3& p = positions.at(i, skeleton.foot_joints[c]);
      const double f = p.y() - skeleton.foot_radius;
      const double h = patch.height_at(p.x(), p.z()) + offset;
      if (segment.contacts[i][c]) {
        r.error_contact += (h - f) * (h - f);
      } else {
        r.error_penetration += std::max(h - f, 0.0);
        if (options.jump_gait) r.error_jump += std::max((f - l) - h, 0.0);
      }
    }
  }
  r.error_total = r.error_contact + r.error_penetration + r.error_jump;
  return r;
}

double best_vertical_offset(const Skeleton& skeleton, const MotionSegment& segment,
                            const JointPositions& positions, const HeightField& patch) {
  double sum = 0.0;
  int count = 0;
  double lowest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < positions.frames; ++i) {
    for (int c = 0; c < kFootCount; ++c) {
      const Vec3& p = positions.at(i, skeleton.foot_joints[c]);
      const double residual = p.y() - skeleton.foot_radius - patch.height_at(p.x(), p.z());
      lowest = std::min(lowest, residual);
      if (segment.contacts[i][c]) {
        sum += residual;
        ++count;
      }
    }
  }
  return count > 0 ? sum / count : lowest;
}

std::vector<FitResult> patch_search(const Skeleton& skeleton, const MotionSegment& segment,
                                    const JointPositions& positions,
                                    const std::vector<TerrainPatch>& bank, const FitOptions& options,
                                    int top, int jobs) {
  std::vector<std::optional<FitResult>> results(bank.size());
  parallel_for(static_cast<int>(bank.size()), jobs, [&](int k) {
    try {
      const HeightField& field = bank[k].field;
      const double offset = best_vertical_offset(skeleton, segment, positions, field);
      FitResult r = fit_error(skeleton, segment, positions, field, offset, options);
      r.patch_id = bank[k].id;
      results[k] = r;
    } catch (const OutOfBounds&) {
      // Clip leaves this patch: infinite error, never selected.
    }
  });
  std::vector<FitResult> valid;
  for (const auto& r : results) {
    if (r) valid.push_back(*r);
  }
  if (valid.empty()) throw NoValidPatch("motion leaves every patch in the bank");
  auto less = [](const FitResult& a, const FitResult& b) {
    if (a.error_total != b.error_total) return a.error_total < b.error_total;
    return a.patch_id < b.patch_id;
  };
  const size_t keep = std::min(valid.size(), static_cast<size_t>(std::max(top, 0)));
  std::partial_sort(valid.begin(), valid.begin() + keep, valid.end(), less);
  valid.resize(keep);
  return valid;
}

std::vector<ContactConstraint> contact_constraints(const Skeleton& skeleton,
                                                   const MotionSegment& segment,
                                                   const JointPositions& positions) {
  std::vector<ContactConstraint> out;
  for (int i = 0; i < positions.frames; ++i) {
    for (int c = 0; c < kFootCount; ++c) {
      if (!segment.contacts[i][c]) continue;
      const Vec3& p = positions.at(i, skeleton.foot_joints[c]);
      out.push_back({Vec2(p.x(), p.z()), p.y() - skeleton.foot_radius, i, c});
    }
  }
  return out;
}

TerrainPatch shift_patch(const TerrainPatch& patch, double offset) {
  TerrainPatch out = patch;
  for (double& h : out.field.heights()) h += offset;
  return out;
}

namespace {

constexpr double kMergeDistance = 1e-6;

struct Center {
  Vec2 p;
  double height_sum;
  int count;
};

std::vector<Center> merge_constraints(std::vector<ContactConstraint> constraints) {
  // Canonical order makes the result independent of the input order.
  std::sort(constraints.begin(), constraints.end(), [](const auto& a, const auto& b) {
    if (a.location.x() != b.location.x()) return a.location.x() < b.location.x();
    if (a.location.y() != b.location.y()) return a.location.y() < b.location.y();
    return a.height < b.height;
  });
  std::vector<Center> centers;
  for (const auto& c : constraints) {
    auto it = std::find_if(centers.begin(), centers.end(), [&](const Center& m) {
      return (m.p - c.location).norm() <= kMergeDistance;
    });
    if (it == centers.end()) {
      centers.push_back({c.location, c.height, 1});
    } else {
      it->height_sum += c.height;
      ++it->count;
    }
  }
  return centers;
}

bool has_affine_support(const std::vector<Center>& centers) {
  if (centers.size() < 3) return false;
  Vec2 mean = Vec2::Zero();
  for (const auto& c : centers) mean += c.p;
  mean /= static_cast<double>(centers.size());
  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  for (const auto& c : centers) scatter += (c.p - mean) * (c.p - mean).transpose();
  const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(scatter).eigenvalues();
  return ev(0) > 1e-10 * std::max(ev(1), 1e-12) && ev(0) > 1e-12;
}

}  // namespace

TerrainPatch rbf_refine(const TerrainPatch& patch, const std::vector<ContactConstraint>& constraints) {
  TerrainPatch out = patch;
  if (constraints.empty()) return out;
  const HeightField& field = patch.field;
  const std::vector<Center> centers = merge_constraints(constraints);
  const int n = static_cast<int>(centers.size());
  const int m = has_affine_support(centers) ? 3 : 1;

  // Row a evaluates the kernel of center b through the bilinear stencil of
  // center a, so the solved weights are exact for height_at.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + m, n + m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + m);
  std::vector<Vec2> node_positions(field.heights().size());
  for (int r = 0; r < field.rows(); ++r) {
    for (int c = 0; c < field.cols(); ++c) node_positions[r * field.cols() + c] = field.node_position(r, c);
  }
  for (int a = 0; a < n; ++a) {
    const Vec2& pa = centers[a].p;
    int index[4];
    double weight[4];
    field.stencil(pa.x(), pa.y(), index, weight);
    for (int b = 0; b < n; ++b) {
      double v = 0.0;
      for (int k = 0; k < 4; ++k) v += weight[k] * (node_positions[index[k]] - centers[b].p).norm();
      A(a, b) = v;
    }
    A(a, n) = 1.0;
    if (m == 3) {
      A(a, n + 1) = pa.x();
      A(a, n + 2) = pa.y();
    }
    for (int j = 0; j < m; ++j) A(n + j, a) = A(a, n + j);
    rhs(a) = centers[a].height_sum / centers[a].count - field.height_at(pa.x(), pa.y());
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw SingularSystem("RBF system is singular after merging constraints");
  const Eigen::VectorXd w = lu.solve(rhs);
  if (!w.allFinite() || (A * w - rhs).cwiseAbs().maxCoeff() > 1e-8) {
    throw SingularSystem("RBF system is numerically singular");
  }

  HeightField& refined = out.field;
  for (size_t k = 0; k < node_positions.size(); ++k) {
    const Vec2& q = node_positions[k];
    double delta = w(n);
    if (m == 3) delta += w(n + 1) * q.x() + w(n + 2) * q.y();
    for (int b = 0; b < n; ++b) delta += w(b) * (q - centers[b].p).norm();
    refined.heights()[k] += delta;
  }
  return out;
}

}  // namespace stride
