#include <array>

#include "rbl/errors.hpp"
#include "rbl/harness.hpp"

namespace rbl::harness {

Conformation box_vehicle(int dim) {
  const double a = 0.5 * kVehicleLength, b = 0.5 * kVehicleWidth, c = 0.5 * kVehicleHeight;
  if (dim == 2) {
    const std::array<std::array<double, 2>, 8> nodes{{
        {a, b}, {a, -b}, {-a, -b}, {-a, b}, // corners
        {0, b}, {0, -b}, {a, 0}, {-a, 0},   // side midpoints
    }};
    Mat coords(2, nodes.size());
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      coords(0, static_cast<Eigen::Index>(k)) = nodes[k][0];
      coords(1, static_cast<Eigen::Index>(k)) = nodes[k][1];
      labels.push_back((k < 4 ? "corner" : "mid") + std::to_string(k + 1));
    }
    return Conformation(std::move(coords), std::move(labels));
  }
  if (dim != 3) throw InvalidArgument("box vehicle is defined in 2D and 3D only");
  const std::array<std::array<double, 3>, 20> nodes{{
      {a, b, c},   {a, b, -c},  {-a, -b, c}, {-a, b, -c}, // non-coplanar quadruple
      {a, -b, -c}, {-a, b, c},  {a, -b, c},  {-a, -b, -c},
      {0, b, c},   {0, -b, -c}, {a, 0, c},   {-a, 0, -c}, // edge midpoints, opposite pairs
      {a, b, 0},   {-a, -b, 0}, {0, b, -c},  {0, -b, c},
      {a, 0, -c},  {-a, 0, c},  {a, -b, 0},  {-a, b, 0},
  }};
  Mat coords(3, nodes.size());
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    for (int d = 0; d < 3; ++d) coords(d, static_cast<Eigen::Index>(k)) = nodes[k][static_cast<std::size_t>(d)];
    labels.push_back((k < 8 ? "vertex" : "mid") + std::to_string(k + 1));
  }
  return Conformation(std::move(coords), std::move(labels));
}

AnchorSet cube_anchors(int dim, double side) {
  if (dim != 2 && dim != 3) throw InvalidArgument("anchor cube must be 2D or 3D");
  const double h = 0.5 * side;
  const int count = dim == 2 ? 4 : 8;
  Mat positions(dim, count);
  for (int i = 0; i < count; ++i)
    for (int d = 0; d < dim; ++d) positions(d, i) = ((i >> d) & 1) ? h : -h;
  return AnchorSet(std::move(positions));
}

} // namespace rbl::harness
