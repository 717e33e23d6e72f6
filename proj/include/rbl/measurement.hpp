#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rbl/geometry.hpp"
#include "rbl/random.hpp"

namespace rbl {

using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
using MaskVec = Eigen::Matrix<bool, Eigen::Dynamic, 1>;

/// Known anchor positions, one column per anchor (D x M).
class AnchorSet {
public:
  static constexpr double kMinSeparation = 1e-9;

  explicit AnchorSet(Mat positions);

  int dim() const noexcept { return static_cast<int>(positions_.rows()); }
  int size() const noexcept { return static_cast<int>(positions_.cols()); }
  const Mat& positions() const noexcept { return positions_; }
  Vec anchor(int n) const { return positions_.col(n); }

private:
  Mat positions_;
};

/// One masked row or column of measurements.
struct MaskedVector {
  Vec values;
  MaskVec mask;

  int size() const noexcept { return static_cast<int>(values.size()); }
  int observed_count() const noexcept { return static_cast<int>(mask.count()); }
};

/// Matrix of measurements with an availability mask.
///
/// Unobserved entries hold NaN; at() refuses to read them, so a blocked path
/// can never be mistaken for a zero measurement.
class MaskedMatrix {
public:
  MaskedMatrix(Mat values, Mask mask, double noise_sigma = 0.0);

  static MaskedMatrix fully_observed(Mat values, double noise_sigma = 0.0);

  int rows() const noexcept { return static_cast<int>(values_.rows()); }
  int cols() const noexcept { return static_cast<int>(values_.cols()); }
  bool observed(int i, int j) const { return mask_(i, j); }
  /// Throws InvalidArgument on an unobserved entry.
  double at(int i, int j) const;
  /// Raw storage, NaN where unobserved.
  const Mat& values() const noexcept { return values_; }
  const Mask& mask() const noexcept { return mask_; }
  double noise_sigma() const noexcept { return noise_sigma_; }
  int observed_count() const noexcept { return static_cast<int>(mask_.count()); }
  bool complete() const noexcept { return mask_.all(); }

  MaskedVector row(int i) const;
  MaskedVector col(int j) const;

  /// Copy with entries where `drop` is true marked unobserved.
  MaskedMatrix with_dropped(const Mask& drop) const;

protected:
  Mat values_;
  Mask mask_;
  double noise_sigma_;
};

/// Anchor-to-node ranges d(n, m) in meters: rows are anchors, columns nodes.
/// Observed entries are finite and non-negative.
class MaskedRangeMatrix : public MaskedMatrix {
public:
  MaskedRangeMatrix(Mat values, Mask mask, double noise_sigma = 0.0);
  explicit MaskedRangeMatrix(MaskedMatrix m);

  static MaskedRangeMatrix fully_observed(Mat values, double noise_sigma = 0.0);

  MaskedRangeMatrix with_dropped(const Mask& drop) const {
    return MaskedRangeMatrix(MaskedMatrix::with_dropped(drop));
  }
};

/// Anchor-to-node angles: azimuth atan2(y, x) in (-pi, pi] and, in 3D,
/// elevation in [-pi/2, pi/2]. At the 3D poles azimuth is 0.
struct AngleMeasurements {
  Mat azimuth;
  Mat elevation; // empty in 2D
  Mask mask;
  double noise_sigma_rad = 0.0;

  int dim() const noexcept { return elevation.size() == 0 ? 2 : 3; }
  int rows() const noexcept { return static_cast<int>(azimuth.rows()); }
  int cols() const noexcept { return static_cast<int>(azimuth.cols()); }
};

/// Which anchor-node paths are available.
struct VisibilityModel {
  /// Block paths whose segment crosses the interior of the body's convex hull.
  bool body_occlusion = true;
  /// Independent random loss of otherwise visible paths.
  double dropout_probability = 0.0;

  static VisibilityModel all_visible() { return {false, 0.0}; }
};

/// Thickness of the slab used when the occluder's hull is flat (rank < D).
inline constexpr double kFlatOccluderThickness = 1e-6;

/// True iff the open segment (p, q) passes through the interior of the
/// occluder's convex hull. Endpoints lying on hull vertices do not count.
bool line_of_sight_blocked(const Vec& p, const Vec& q, const PlacedBody& occluder);

/// The hull of a placed body, prepared once for many line-of-sight queries.
/// `blocks(p, q)` gives the same answer as line_of_sight_blocked(p, q, body).
class Occluder {
public:
  explicit Occluder(const PlacedBody& body);
  bool blocks(const Vec& p, const Vec& q) const;

  struct Halfspace {
    Vec normal; // unit
    double offset;
  };

private:
  int dim_ = 0;
  int rank_ = 0;
  double scale_ = 1.0; // of the hull coordinates the halfspaces live in
  std::vector<Halfspace> halfspaces_;
  Vec center_;
  Mat basis_;  // D x rank, spans a flat hull
  Mat normal_; // D x (D - rank)
};

MaskedRangeMatrix simulate_ranges(const AnchorSet& anchors, const PlacedBody& body, double sigma,
                                  const VisibilityModel& visibility, SeedStream& rng);

/// Availability mask only (no noise draws), M x K.
Mask visibility_mask(const AnchorSet& anchors, const PlacedBody& body, const VisibilityModel& visibility,
                     SeedStream& rng);

/// Range-rates (m/s) for a body moving with `motion`, observed where `mask` is true.
MaskedMatrix simulate_range_rates(const AnchorSet& anchors, const Conformation& conf, const Pose& pose,
                                  const BodyMotion& motion, const Mask& mask, double sigma,
                                  SeedStream& rng);

AngleMeasurements simulate_aoa(const AnchorSet& anchors, const PlacedBody& body, double sigma_rad,
                               const VisibilityModel& visibility, SeedStream& rng);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// Index ranges of the anchor and body blocks inside a PartialEdm.
struct BlockLayout {
  int num_anchors = 0;
  int num_nodes = 0;
};

/// Hollow, symmetric matrix of squared distances with known/unknown entries.
///
/// Stores squared distances; distance() exposes plain ones. When a block
/// layout is attached, the anchor-anchor and node-node blocks must be known.
class PartialEdm {
public:
  PartialEdm(Mat squared, Mask mask, int dim, std::optional<BlockLayout> layout = std::nullopt);

  /// Builds from plain distances (NaN or mask=false where unknown).
  static PartialEdm from_distances(const Mat& distances, const Mask& mask, int dim,
                                   std::optional<BlockLayout> layout = std::nullopt);

  int size() const noexcept { return static_cast<int>(squared_.rows()); }
  int dim() const noexcept { return dim_; }
  const std::optional<BlockLayout>& layout() const noexcept { return layout_; }
  bool known(int i, int j) const { return mask_(i, j); }
  double squared(int i, int j) const;
  double distance(int i, int j) const;
  const Mat& squared_values() const noexcept { return squared_; }
  const Mask& mask() const noexcept { return mask_; }
  bool complete() const noexcept { return mask_.all(); }
  /// Plain distances, NaN where unknown.
  Mat distances() const;

private:
  Mat squared_;
  Mask mask_;
  int dim_;
  std::optional<BlockLayout> layout_;
};

/// Stacks anchors and body nodes: [anchors | nodes]. Anchor and body blocks
/// are computed from geometry, the cross block is copied from `cross` with
/// its mask and mirrored.
PartialEdm assemble_partial_edm(const AnchorSet& anchors, const Conformation& conf,
                                const MaskedRangeMatrix& cross);

/// Same as above for two bodies (anchorless case): [body1 | body2].
PartialEdm assemble_two_body_edm(const Conformation& conf1, const Conformation& conf2,
                                 const MaskedRangeMatrix& cross);

} // namespace rbl
