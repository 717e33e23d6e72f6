#include "rbl/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "rbl/errors.hpp"

namespace rbl::io {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json masked_values_to_json(const Mat& values, const Mask& mask) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (mask(i, j)) row.push_back(values(i, j));
      else row.push_back(nullptr);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json mask_to_json(const Mask& mask) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < mask.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < mask.cols(); ++j) row.push_back(static_cast<bool>(mask(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Reads a matrix whose entries may be null; nulls become NaN and are
// reported as unobserved in `seen`.
Mat nullable_matrix(const json& j, Mask& seen) {
  if (!j.is_array()) throw InvalidArgument("expected a list of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Mat m(rows, cols);
  seen = Mask::Constant(rows, cols, true);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw InvalidArgument("ragged matrix at row " + std::to_string(i));
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = row.at(static_cast<std::size_t>(c));
      if (v.is_null()) {
        m(i, c) = kNaN;
        seen(i, c) = false;
      } else {
        m(i, c) = v.get<double>();
      }
    }
  }
  return m;
}

Mask mask_from_json(const json& j) {
  if (!j.is_array()) throw InvalidArgument("mask must be a list of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Mask m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw InvalidArgument("ragged mask at row " + std::to_string(i));
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = row.at(static_cast<std::size_t>(c));
      m(i, c) = v.is_boolean() ? v.get<bool>() : v.get<int>() != 0;
    }
  }
  return m;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  return cells;
}

double parse_cell(const std::string& cell, const std::filesystem::path& path) {
  if (cell == "NaN" || cell == "nan" || cell == "NAN" || cell.empty()) return kNaN;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw IoError(path.string() + ": cannot parse number '" + cell + "'");
  return v;
}

std::vector<std::vector<std::string>> read_csv_cells(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(split_csv_line(line));
    if (rows.back().size() != rows.front().size())
      throw IoError(path.string() + ": ragged CSV at line " + std::to_string(rows.size()));
  }
  return rows;
}

} // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "NaN";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from_json(const json& j) {
  Mask seen;
  Mat m = nullable_matrix(j, seen);
  if (!seen.all()) throw InvalidArgument("matrix contains null entries");
  return m;
}

json points_to_json(const Mat& points) { return matrix_to_json(points.transpose()); }

Mat points_from_json(const json& j, int dim) {
  Mat rows = matrix_from_json(j);
  if (rows.rows() > 0 && rows.cols() != dim)
    throw DimensionMismatch("points have " + std::to_string(rows.cols()) + " coordinates, expected " + std::to_string(dim));
  return rows.transpose();
}

json to_json(const Conformation& conf) {
  json j{{"dim", conf.dim()}, {"coords", points_to_json(conf.coords())}};
  if (!conf.labels().empty()) j["labels"] = conf.labels();
  return j;
}

Conformation conformation_from_json(const json& j) {
  const int dim = j.at("dim").get<int>();
  std::vector<std::string> labels;
  if (j.contains("labels")) labels = j.at("labels").get<std::vector<std::string>>();
  return Conformation(points_from_json(j.at("coords"), dim), std::move(labels));
}

json to_json(const Pose& pose) {
  return json{{"R", matrix_to_json(pose.rotation())},
              {"t", std::vector<double>(pose.translation().data(), pose.translation().data() + pose.dim())}};
}

Pose pose_from_json(const json& j) {
  const Mat r = matrix_from_json(j.at("R"));
  const auto t = j.at("t").get<std::vector<double>>();
  return Pose(r, Eigen::Map<const Vec>(t.data(), static_cast<Eigen::Index>(t.size())));
}

json to_json(const MaskedMatrix& m) {
  return json{{"values", masked_values_to_json(m.values(), m.mask())},
              {"mask", mask_to_json(m.mask())},
              {"noise_sigma", m.noise_sigma()}};
}

MaskedMatrix masked_from_json(const json& j) {
  Mask seen;
  Mat values = nullable_matrix(j.at("values"), seen);
  Mask mask = j.contains("mask") ? mask_from_json(j.at("mask")) : seen;
  if (mask.rows() != seen.rows() || mask.cols() != seen.cols()) throw DimensionMismatch("values and mask shapes differ");
  mask = mask.array() && seen.array();
  const double sigma = j.value("noise_sigma", 0.0);
  return MaskedMatrix(std::move(values), std::move(mask), sigma);
}

MaskedRangeMatrix ranges_from_json(const json& j) { return MaskedRangeMatrix(masked_from_json(j)); }

json to_json(const PartialEdm& edm) {
  json j{{"values", masked_values_to_json(edm.distances(), edm.mask())},
         {"mask", mask_to_json(edm.mask())},
         {"dim", edm.dim()}};
  if (edm.layout()) {
    j["num_anchors"] = edm.layout()->num_anchors;
    j["num_nodes"] = edm.layout()->num_nodes;
  }
  return j;
}

PartialEdm partial_edm_from_json(const json& j, int default_dim) {
  Mask seen;
  Mat distances = nullable_matrix(j.at("values"), seen);
  Mask mask = j.contains("mask") ? mask_from_json(j.at("mask")) : seen;
  if (mask.rows() != seen.rows() || mask.cols() != seen.cols()) throw DimensionMismatch("values and mask shapes differ");
  mask = mask.array() && seen.array();
  std::optional<BlockLayout> layout;
  if (j.contains("num_anchors"))
    layout = BlockLayout{j.at("num_anchors").get<int>(), j.value("num_nodes", static_cast<int>(distances.rows()) -
                                                                                 j.at("num_anchors").get<int>())};
  return PartialEdm::from_distances(distances, mask, j.value("dim", default_dim), layout);
}

json to_json(const CompletionResult& result) {
  return json{{"values", matrix_to_json(result.distances())},
              {"mask", mask_to_json(result.known)},
              {"dim", result.dim},
              {"iterations", result.iterations},
              {"refinement_iterations", result.refinement_iterations},
              {"converged", result.converged},
              {"final_objective", result.final_objective}};
}

json to_json(const PoseEstimate& est) {
  json j = to_json(est.pose);
  j["residuals"] = {{"stage1_rms", est.stage1_residual_rms}, {"stage2_rms", est.stage2_residual_rms}};
  j["iterations"] = est.iterations_used;
  j["rotation_unique"] = est.rotation_unique;
  j["dropped_nodes"] = est.dropped_nodes;
  return j;
}

json to_json(const RelativePoseEstimate& est) {
  json j = to_json(est.pose);
  j["center_offset"] = std::vector<double>(est.center_offset.data(), est.center_offset.data() + est.center_offset.size());
  j["reflection_resolved"] = est.reflection_resolved;
  j["rotation_unique"] = est.rotation_unique;
  j["residuals"] = {{"cross_rms", est.residual_rms}};
  return j;
}

json to_json(const MotionEstimate& est) {
  const Vec& w = est.motion.omega();
  const Vec& v = est.motion.t_dot();
  return json{{"omega", std::vector<double>(w.data(), w.data() + w.size())},
              {"t_dot", std::vector<double>(v.data(), v.data() + v.size())},
              {"residuals", {{"rms", est.residual_rms}}}};
}

json to_json(const PlacementResult& placement) {
  return json{{"positions", points_to_json(placement.positions)}, {"frame_potential", placement.frame_potential}};
}

void write_matrix_csv(const std::filesystem::path& path, const Mat& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  write_text(path, out);
}

Mat read_matrix_csv(const std::filesystem::path& path) {
  const auto cells = read_csv_cells(path);
  const auto rows = static_cast<Eigen::Index>(cells.size());
  const auto cols = rows ? static_cast<Eigen::Index>(cells.front().size()) : 0;
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = parse_cell(cells[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], path);
  return m;
}

void write_mask_csv(const std::filesystem::path& path, const Mask& mask) {
  std::string out;
  for (Eigen::Index i = 0; i < mask.rows(); ++i) {
    for (Eigen::Index j = 0; j < mask.cols(); ++j) {
      if (j) out += ',';
      out += mask(i, j) ? '1' : '0';
    }
    out += '\n';
  }
  write_text(path, out);
}

Mask read_mask_csv(const std::filesystem::path& path) {
  const Mat m = read_matrix_csv(path);
  if (!m.allFinite()) throw IoError(path.string() + ": mask entries must be 0 or 1");
  return m.array() != 0.0;
}

void write_masked_csv(const std::filesystem::path& values_path, const std::filesystem::path& mask_path,
                      const MaskedMatrix& m) {
  write_matrix_csv(values_path, m.values());
  write_mask_csv(mask_path, m.mask());
}

MaskedMatrix read_masked_csv(const std::filesystem::path& values_path, const std::filesystem::path& mask_path) {
  Mat values = read_matrix_csv(values_path);
  Mask mask = values.array().isNaN() == false;
  if (!mask_path.empty()) {
    const Mask file_mask = read_mask_csv(mask_path);
    if (file_mask.rows() != values.rows() || file_mask.cols() != values.cols())
      throw IoError(mask_path.string() + ": mask shape differs from " + values_path.string());
    mask = mask.array() && file_mask.array();
  }
  return MaskedMatrix(std::move(values), std::move(mask));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

} // namespace rbl::io
