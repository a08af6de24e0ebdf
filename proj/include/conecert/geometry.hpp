#pragma once

#include <array>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "conecert/errors.hpp"

namespace conecert {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Planar domain: an open disk or an open axis-aligned rectangle.
struct DomainSpec {
  enum class Kind { Disk, Rectangle };

  Kind kind = Kind::Disk;
  // disk
  Point2 center{};
  double radius = 1.0;
  // rectangle
  Point2 lo{};
  Point2 hi{};

  static DomainSpec disk(Point2 center, double radius);
  static DomainSpec rectangle(Point2 lo, Point2 hi);

  /// Strict interior test; boundary points are not contained.
  bool contains(Point2 p) const;

  double area() const;

  /// Axis-aligned bounding box.
  std::pair<Point2, Point2> bounding_box() const;

  bool operator==(const DomainSpec& other) const;
};

/// Axis directions used for stencil legs: +x, -x, +y, -y.
enum Direction : int { East = 0, West = 1, North = 2, South = 3 };

inline constexpr std::array<std::array<int, 2>, 4> kDirectionOffsets{
    {{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

struct BoundaryPoint {
  Point2 position{};
  Point2 normal{};  // outward unit normal of the domain at `position`
};

/// Uniform Cartesian grid over the interior of a domain with cut-cell
/// (Shortley-Weller) boundary links.
///
/// The lattice is anchored so that a disk's center is itself a lattice
/// point; rectangles anchor the lattice at the lower corner, so grids whose
/// spacing divides the side lengths have all cut fractions equal to one.
class Grid {
 public:
  struct Leg {
    int neighbor = -1;        // interior node id, or -1 when the leg is cut
    int boundary_point = -1;  // boundary point id when the leg is cut
    double theta = 1.0;       // fraction of h to the neighbor or boundary, (0,1]
  };

  const DomainSpec& domain() const { return domain_; }
  double spacing() const { return h_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  const std::vector<Point2>& nodes() const { return nodes_; }
  Point2 node(int id) const { return nodes_[static_cast<size_t>(id)]; }
  const std::array<Leg, 4>& legs(int id) const { return legs_[static_cast<size_t>(id)]; }
  const std::vector<BoundaryPoint>& boundary_points() const { return boundary_points_; }

  /// Quadrature weights per node; each weight is the area of the node's
  /// lattice cell clipped to the domain (plus slivers of cells whose lattice
  /// point falls outside). Sums to area(domain) up to floating point.
  const std::vector<double>& cell_weights() const { return cell_weights_; }

  /// Number of cut fractions clamped up to the configured floor.
  int clamped_cut_count() const { return clamped_cuts_; }

  /// Lattice coordinates of a node.
  std::pair<int, int> lattice_of(int id) const { return lattice_[static_cast<size_t>(id)]; }

  /// Node id at lattice coordinates, -1 when absent.
  int node_at(int i, int j) const;

  /// Bilinear interpolation weights at an interior point, restricted to the
  /// interior lattice corners that exist (weights renormalized). Falls back
  /// to the nearest node when no cell corner is interior.
  std::vector<std::pair<int, double>> bilinear_weights(Point2 p) const;

  friend std::shared_ptr<const Grid> build_grid(const DomainSpec&, double, double);

 private:
  DomainSpec domain_;
  double h_ = 0.0;
  Point2 anchor_{};
  int imin_ = 0, imax_ = 0, jmin_ = 0, jmax_ = 0;
  std::vector<int> index_map_;  // (imax-imin+1) x (jmax-jmin+1), -1 for absent
  std::vector<Point2> nodes_;
  std::vector<std::pair<int, int>> lattice_;
  std::vector<std::array<Leg, 4>> legs_;
  std::vector<BoundaryPoint> boundary_points_;
  std::vector<double> cell_weights_;
  int clamped_cuts_ = 0;

  Point2 lattice_point(int i, int j) const {
    return {anchor_.x + i * h_, anchor_.y + j * h_};
  }
};

/// Build the interior grid for a domain at spacing h.
///
/// Cut fractions below `cut_floor` are clamped and counted; a non-positive
/// computed fraction raises DegenerateCut, an empty interior raises EmptyGrid.
std::shared_ptr<const Grid> build_grid(const DomainSpec& domain, double h,
                                       double cut_floor = 1e-6);

/// Scalar field sampled on the interior nodes of a grid.
struct GridFunction {
  std::shared_ptr<const Grid> grid;
  Eigen::VectorXd values;

  GridFunction() = default;
  GridFunction(std::shared_ptr<const Grid> g, Eigen::VectorXd v)
      : grid(std::move(g)), values(std::move(v)) {}

  static GridFunction zeros(std::shared_ptr<const Grid> g);
  static GridFunction constant(std::shared_ptr<const Grid> g, double c);

  template <class F>
  static GridFunction sample(std::shared_ptr<const Grid> g, F&& f) {
    Eigen::VectorXd v(g->node_count());
    for (int k = 0; k < g->node_count(); ++k) {
      Point2 p = g->node(k);
      v[k] = f(p);
    }
    return GridFunction(std::move(g), std::move(v));
  }

  int size() const { return static_cast<int>(values.size()); }
  double norm_inf() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
  double min() const { return values.size() ? values.minCoeff() : 0.0; }
  double max() const { return values.size() ? values.maxCoeff() : 0.0; }
};

void require_same_grid(const GridFunction& a, const GridFunction& b);

/// Exact area of the intersection of an axis-aligned rectangle with a disk
/// centered at the origin.
double disk_rect_area(double radius, double x1, double x2, double y1, double y2);

}  // namespace conecert
