#pragma once

#include <filesystem>
#include <string>
#include <utility>

#include <json.hpp>

#include "rbl/completion.hpp"
#include "rbl/estimators.hpp"
#include "rbl/geometry.hpp"
#include "rbl/measurement.hpp"
#include "rbl/placement.hpp"

namespace rbl::io {

using json = nlohmann::json;

// JSON layouts. Point sets are lists of points, one [x, y(, z)] per node or
// anchor; matrices are lists of rows. Unobserved entries are null.

json to_json(const Conformation& conf);  // {"dim", "coords", "labels"?}
Conformation conformation_from_json(const json& j);

json to_json(const Pose& pose);          // {"R", "t"}
Pose pose_from_json(const json& j);

json to_json(const MaskedMatrix& m);     // {"values", "mask", "noise_sigma"}
MaskedMatrix masked_from_json(const json& j);
MaskedRangeMatrix ranges_from_json(const json& j);

json to_json(const PartialEdm& edm);     // plain distances + {"dim", "num_anchors", "num_nodes"}
PartialEdm partial_edm_from_json(const json& j, int default_dim = 3);

json to_json(const CompletionResult& result); // plain distances + {"iterations", "converged", ...}
json to_json(const PoseEstimate& est);        // {"R", "t", "residuals", ...}
json to_json(const RelativePoseEstimate& est);
json to_json(const MotionEstimate& est);
json to_json(const PlacementResult& placement); // {"positions", "frame_potential"}

json matrix_to_json(const Mat& m);
Mat matrix_from_json(const json& j);
/// D x N matrix from a list of N points.
Mat points_from_json(const json& j, int dim);
json points_to_json(const Mat& points);

/// Shortest decimal form that reads back to the same double; "NaN" for NaN.
std::string format_double(double v);

/// CSV matrix, one row per line; "NaN" marks unobserved entries.
void write_matrix_csv(const std::filesystem::path& path, const Mat& m);
Mat read_matrix_csv(const std::filesystem::path& path);
void write_mask_csv(const std::filesystem::path& path, const Mask& mask);
Mask read_mask_csv(const std::filesystem::path& path);

/// Values + mask file pair of a masked matrix.
void write_masked_csv(const std::filesystem::path& values_path, const std::filesystem::path& mask_path,
                      const MaskedMatrix& m);
MaskedMatrix read_masked_csv(const std::filesystem::path& values_path, const std::filesystem::path& mask_path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace rbl::io
