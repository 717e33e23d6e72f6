#pragma once

#include <cstdint>
#include <vector>

#include "rbl/geometry.hpp"
#include "rbl/measurement.hpp"

namespace rbl {

struct CompletionOptions {
  /// Extra rank on top of D+2, for noisy inputs.
  int rank_slack = 0;
  int max_iterations = 500;
  /// Stop when |X_k+1 - X_k|_F / |X_k|_F drops below this.
  double relative_tolerance = 1e-10;
  /// Relative gap between the low-rank iterate and the constraint set above
  /// which a stalled run is reported as not converged.
  double stall_threshold = 1e-6;
};

/// Completed squared-distance matrix. Known entries are copied bit-exactly.
struct CompletionResult {
  Mat completed; // squared distances, hollow and symmetric
  Mask known;    // entries that were observed in the input
  int dim = 3;
  int iterations = 0;            // alternating-projection sweeps
  int refinement_iterations = 0; // Gauss-Newton steps on the embedded points
  double final_objective = 0.0;
  bool converged = false;

  Mat distances() const { return completed.cwiseSqrt(); }
};

/// Fills unknown entries by alternating projections between the rank-(D+2)
/// matrices and the set of hollow, symmetric, non-negative matrices agreeing
/// with the known entries. Unknowns start at the mean of the observed
/// off-block entries. The result is then refined by Gauss-Newton on the
/// D-dimensional embedding, kept only if it fits the known entries better.
CompletionResult complete_edm(const PartialEdm& partial, const CompletionOptions& options = {});

struct MdsEmbedding {
  Mat points; // D x N, centered at the origin
  /// Some of the top D eigenvalues were negative and got clamped to zero.
  bool conditioning_warning = false;
};

/// Classical MDS: G = -1/2 J E J, coordinates from the top-D eigenpairs.
/// Throws NonEuclidean when the most negative eigenvalue of G exceeds 10% of
/// the largest positive one in magnitude.
MdsEmbedding edm_to_points(const Mat& squared_edm, int dim);

/// Admissible squared cross distances between two bodies. Values are lower
/// edges of bins of width quantization_step, so halving the step refines the bins.
struct DistanceAlphabet {
  std::vector<double> values; // sorted ascending, squared meters
  double quantization_step = 0.0;
  int rotation_samples = 0;
};

/// Places body 2's geometric center `center_distance` along the x axis from
/// body 1's, samples relative rotations of body 2 (uniform grid in 2D,
/// uniform random SO(3) in 3D) and collects every quantized cross squared distance.
DistanceAlphabet build_distance_alphabet(const Conformation& conf1, const Conformation& conf2,
                                         double center_distance, int num_rotation_samples,
                                         double quantization_step, std::uint64_t seed = 0);

/// Replaces each originally unknown entry by the nearest alphabet member
/// (ties to the smaller value). Known entries are untouched.
CompletionResult snap_to_alphabet(const CompletionResult& result, const DistanceAlphabet& alphabet);

} // namespace rbl
