#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rbl/errors.hpp"
#include "rbl/measurement.hpp"

namespace rbl {

namespace {

using Halfspace = Occluder::Halfspace;

// Unit normal of the hyperplane through `subset` (r points in R^r); empty if
// the points are affinely dependent.
std::optional<Vec> hyperplane_normal(const Mat& pts, const std::vector<int>& subset) {
  const int r = static_cast<int>(pts.rows());
  if (r == 1) return Vec::Ones(1);
  Mat diffs(r - 1, r);
  for (int i = 1; i < r; ++i) diffs.row(i - 1) = (pts.col(subset[i]) - pts.col(subset[0])).transpose();
  Vec n;
  if (r == 2) {
    n = Vec(2);
    n << -diffs(0, 1), diffs(0, 0);
  } else {
    n = Eigen::Vector3d(diffs.row(0).transpose()).cross(Eigen::Vector3d(diffs.row(1).transpose()));
  }
  const double len = n.norm();
  const double scale = diffs.norm();
  if (len <= 1e-12 * std::max(1.0, scale * scale)) return std::nullopt;
  return n / len;
}

// Supporting halfspaces n.x <= b of a full-rank point set in R^r, found by
// enumerating every r-subset. Faces spanned by more than r points show up
// several times; the copies are dropped.
std::vector<Halfspace> supporting_halfspaces(const Mat& pts, double tol) {
  const int r = static_cast<int>(pts.rows());
  const int n = static_cast<int>(pts.cols());
  std::vector<Halfspace> out;
  auto add = [&](Vec normal, double b) {
    for (const Halfspace& h : out)
      if ((h.normal - normal).norm() < 1e-12 && std::abs(h.offset - b) <= tol) return;
    out.push_back({std::move(normal), b});
  };
  std::vector<int> subset(r);
  auto visit = [&](auto&& self, int start, int depth) -> void {
    if (depth == r) {
      auto normal = hyperplane_normal(pts, subset);
      if (!normal) return;
      const Vec side = pts.transpose() * (*normal);
      const double b = normal->dot(pts.col(subset[0]));
      const double hi = side.maxCoeff() - b, lo = side.minCoeff() - b;
      if (hi <= tol) add(*normal, b);
      else if (lo >= -tol) add(-*normal, -b);
      return;
    }
    for (int i = start; i < n; ++i) {
      subset[depth] = i;
      self(self, i + 1, depth + 1);
    }
  };
  visit(visit, 0, 0);
  return out;
}

// Does the open segment p + s (q - p), s in (0, 1), pass strictly inside the
// hull described by `halfspaces` by more than `depth`?
bool open_segment_hits_interior(const std::vector<Halfspace>& halfspaces, double scale, const Vec& p, const Vec& q,
                                double depth) {
  if (halfspaces.empty()) return false;
  const double tol = 1e-9 * scale;
  const Vec d = q - p;
  double lo = 0.0, hi = 1.0;
  for (const auto& h : halfspaces) {
    // n.(p + s d) - b < -depth
    const double a = h.normal.dot(p) - h.offset + std::max(depth, tol);
    const double c = h.normal.dot(d);
    if (std::abs(c) < 1e-15 * scale) {
      if (a >= 0.0) return false;
      continue;
    }
    const double root = -a / c;
    if (c > 0.0) hi = std::min(hi, root);
    else lo = std::max(lo, root);
    if (lo >= hi) return false;
  }
  return hi - lo > 1e-12;
}

double coordinate_scale(const Mat& pts) { return 1.0 + (pts.size() ? pts.cwiseAbs().maxCoeff() : 0.0); }

} // namespace

Occluder::Occluder(const PlacedBody& body) : dim_(body.dim()) {
  const Mat& pts = body.positions;
  rank_ = affine_rank(pts);
  if (rank_ == dim_) {
    scale_ = coordinate_scale(pts);
    halfspaces_ = supporting_halfspaces(pts, 1e-9 * scale_);
    return;
  }
  // Flat hull: keep an orthonormal frame of its affine span and the
  // halfspaces of the hull within that span.
  center_ = pts.rowwise().mean();
  const Mat centered = pts.colwise() - center_;
  Eigen::JacobiSVD<Mat> svd(centered, Eigen::ComputeFullU);
  basis_ = svd.matrixU().leftCols(rank_);
  normal_ = svd.matrixU().rightCols(dim_ - rank_);
  if (rank_ > 0) {
    const Mat local = basis_.transpose() * centered;
    scale_ = coordinate_scale(local);
    halfspaces_ = supporting_halfspaces(local, 1e-9 * scale_);
  }
}

bool Occluder::blocks(const Vec& p, const Vec& q) const {
  if (p.size() != dim_ || q.size() != dim_) throw DimensionMismatch("segment and occluder dimensions differ");
  if ((p - q).norm() == 0.0) throw InvalidArgument("line of sight needs distinct endpoints");
  if (rank_ == dim_) return open_segment_hits_interior(halfspaces_, scale_, p, q, 0.0);

  // Thicken the flat hull by kFlatOccluderThickness across the missing
  // directions and test the part of the segment inside that slab against the
  // relative interior.
  const double eps = kFlatOccluderThickness;
  const Vec d = q - p;
  const Vec a = normal_.transpose() * (p - center_);
  const Vec b = normal_.transpose() * d;
  double s0, s1;
  const double bb = b.squaredNorm();
  if (bb < 1e-30) {
    if (a.norm() > eps) return false;
    s0 = 0.0;
    s1 = 1.0;
  } else {
    const double ab = a.dot(b);
    const double disc = ab * ab - bb * (a.squaredNorm() - eps * eps);
    if (disc < 0.0) return false;
    const double root = std::sqrt(disc);
    s0 = std::max(0.0, (-ab - root) / bb);
    s1 = std::min(1.0, (-ab + root) / bb);
    if (s0 >= s1) return false;
  }
  // The few parts per million of the segment next to its endpoints are left
  // out: a sensor mounted on a flat body is not hidden by that body.
  const double reach = eps / std::sqrt(std::max(d.squaredNorm(), 1e-300));
  if (rank_ == 0) {
    // Point occluder: blocked when the segment passes it away from both ends.
    const double closest = std::clamp(bb < 1e-30 ? 0.5 : -a.dot(b) / bb, 0.0, 1.0);
    return closest > reach && closest < 1.0 - reach;
  }
  s0 = std::max(s0, reach);
  s1 = std::min(s1, 1.0 - reach);
  if (s0 >= s1) return false;
  const Vec pl = basis_.transpose() * (p + s0 * d - center_);
  const Vec ql = basis_.transpose() * (p + s1 * d - center_);
  // A segment crossing the flat hull head-on projects to a single point;
  // the halfspace test handles that case as well.
  return open_segment_hits_interior(halfspaces_, scale_, pl, ql, eps);
}

bool line_of_sight_blocked(const Vec& p, const Vec& q, const PlacedBody& occluder) {
  return Occluder(occluder).blocks(p, q);
}

} // namespace rbl
