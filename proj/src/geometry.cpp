#include "conecert/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace conecert {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::DegenerateCut: return "DegenerateCut";
    case ErrorCode::NotElliptic: return "NotElliptic";
    case ErrorCode::AsymmetricDiffusion: return "AsymmetricDiffusion";
    case ErrorCode::NegativeReaction: return "NegativeReaction";
    case ErrorCode::SignPatternViolation: return "SignPatternViolation";
    case ErrorCode::AssemblyError: return "AssemblyError";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::SolverDiverged: return "SolverDiverged";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotPositiveOperator: return "NotPositiveOperator";
    case ErrorCode::ZeroInput: return "ZeroInput";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorCode::UnboundName: return "UnboundName";
    case ErrorCode::EvalDomainError: return "EvalDomainError";
    case ErrorCode::NegativeFunctionalValue: return "NegativeFunctionalValue";
    case ErrorCode::PointOutsideDomain: return "PointOutsideDomain";
    case ErrorCode::NegativeNonlinearity: return "NegativeNonlinearity";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::BoundViolated: return "BoundViolated";
    case ErrorCode::OutOfBox: return "OutOfBox";
    case ErrorCode::MissingConstant: return "MissingConstant";
    case ErrorCode::BoundsNotVerified: return "BoundsNotVerified";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

DomainSpec DomainSpec::disk(Point2 center, double radius) {
  if (!(radius > 0.0)) raise(ErrorCode::ValidationError, "disk radius must be positive");
  DomainSpec d;
  d.kind = Kind::Disk;
  d.center = center;
  d.radius = radius;
  return d;
}

DomainSpec DomainSpec::rectangle(Point2 lo, Point2 hi) {
  if (!(lo.x < hi.x && lo.y < hi.y))
    raise(ErrorCode::ValidationError, "rectangle corners must satisfy lo < hi component-wise");
  DomainSpec d;
  d.kind = Kind::Rectangle;
  d.lo = lo;
  d.hi = hi;
  return d;
}

bool DomainSpec::contains(Point2 p) const {
  if (kind == Kind::Disk) {
    const double dx = p.x - center.x;
    const double dy = p.y - center.y;
    return dx * dx + dy * dy < radius * radius;
  }
  return p.x > lo.x && p.x < hi.x && p.y > lo.y && p.y < hi.y;
}

double DomainSpec::area() const {
  if (kind == Kind::Disk) return M_PI * radius * radius;
  return (hi.x - lo.x) * (hi.y - lo.y);
}

std::pair<Point2, Point2> DomainSpec::bounding_box() const {
  if (kind == Kind::Disk)
    return {{center.x - radius, center.y - radius}, {center.x + radius, center.y + radius}};
  return {lo, hi};
}

bool DomainSpec::operator==(const DomainSpec& other) const {
  if (kind != other.kind) return false;
  if (kind == Kind::Disk)
    return center.x == other.center.x && center.y == other.center.y && radius == other.radius;
  return lo.x == other.lo.x && lo.y == other.lo.y && hi.x == other.hi.x && hi.y == other.hi.y;
}

namespace {

// Antiderivative of sqrt(r^2 - t^2).
double circle_F(double r, double t) {
  t = std::clamp(t, -r, r);
  const double s = std::sqrt(std::max(0.0, r * r - t * t));
  return 0.5 * (t * s + r * r * std::asin(std::clamp(t / r, -1.0, 1.0)));
}

}  // namespace

double disk_rect_area(double r, double x1, double x2, double y1, double y2) {
  if (x1 >= x2 || y1 >= y2) return 0.0;
  const double a = std::max(x1, -r);
  const double b = std::min(x2, r);
  if (a >= b) return 0.0;
  if (y2 <= -r || y1 >= r) return 0.0;

  // Breakpoints where min(y2, s) or max(y1, -s) change regime, s = sqrt(r^2-x^2).
  std::vector<double> pts{a, b};
  auto add_breaks = [&](double y) {
    if (std::abs(y) < r) {
      const double t = std::sqrt(r * r - y * y);
      if (t > a && t < b) pts.push_back(t);
      if (-t > a && -t < b) pts.push_back(-t);
    }
  };
  add_breaks(y1);
  add_breaks(y2);
  std::sort(pts.begin(), pts.end());

  double area = 0.0;
  for (size_t k = 0; k + 1 < pts.size(); ++k) {
    const double c = pts[k], d = pts[k + 1];
    if (!(d > c)) continue;
    const double xm = 0.5 * (c + d);
    const double sm = std::sqrt(std::max(0.0, r * r - xm * xm));
    const double upper = std::min(y2, sm);
    const double lower = std::max(y1, -sm);
    if (upper <= lower) continue;
    const double Fd = circle_F(r, d), Fc = circle_F(r, c);
    const double top = (y2 < sm) ? y2 * (d - c) : (Fd - Fc);
    const double bottom = (y1 > -sm) ? y1 * (d - c) : -(Fd - Fc);
    area += top - bottom;
  }
  return std::max(0.0, area);
}

namespace {

double clipped_cell_area(const DomainSpec& dom, double cx, double cy, double half) {
  if (dom.kind == DomainSpec::Kind::Rectangle) {
    const double ox = std::max(0.0, std::min(cx + half, dom.hi.x) - std::max(cx - half, dom.lo.x));
    const double oy = std::max(0.0, std::min(cy + half, dom.hi.y) - std::max(cy - half, dom.lo.y));
    return ox * oy;
  }
  return disk_rect_area(dom.radius, cx - half - dom.center.x, cx + half - dom.center.x,
                        cy - half - dom.center.y, cy + half - dom.center.y);
}

// Fraction along h from an interior point toward `dir` at which the segment
// leaves the (convex) domain.
double boundary_fraction(const DomainSpec& dom, Point2 p, int dir, double h) {
  const auto off = kDirectionOffsets[static_cast<size_t>(dir)];
  if (dom.kind == DomainSpec::Kind::Rectangle) {
    double wall, coord;
    if (off[0] != 0) {
      wall = off[0] > 0 ? dom.hi.x : dom.lo.x;
      coord = p.x;
      return (wall - coord) / (off[0] * h);
    }
    wall = off[1] > 0 ? dom.hi.y : dom.lo.y;
    coord = p.y;
    return (wall - coord) / (off[1] * h);
  }
  // Disk: solve |p + t*e - c|^2 = r^2 for t > 0 along the unit axis e.
  const double ex = off[0], ey = off[1];
  const double px = p.x - dom.center.x, py = p.y - dom.center.y;
  const double pe = px * ex + py * ey;
  const double pp = px * px + py * py;
  const double disc = pe * pe - (pp - dom.radius * dom.radius);
  const double t = -pe + std::sqrt(std::max(0.0, disc));
  return t / h;
}

Point2 boundary_normal(const DomainSpec& dom, Point2 p, int dir) {
  if (dom.kind == DomainSpec::Kind::Rectangle) {
    const auto off = kDirectionOffsets[static_cast<size_t>(dir)];
    return {static_cast<double>(off[0]), static_cast<double>(off[1])};
  }
  const double nx = p.x - dom.center.x, ny = p.y - dom.center.y;
  const double len = std::hypot(nx, ny);
  return {nx / len, ny / len};
}

}  // namespace

int Grid::node_at(int i, int j) const {
  if (i < imin_ || i > imax_ || j < jmin_ || j > jmax_) return -1;
  const int ni = imax_ - imin_ + 1;
  return index_map_[static_cast<size_t>((j - jmin_) * ni + (i - imin_))];
}

std::vector<std::pair<int, double>> Grid::bilinear_weights(Point2 p) const {
  if (!domain_.contains(p))
    raise(ErrorCode::PointOutsideDomain, "interpolation point is not strictly inside the domain");
  const double fx = (p.x - anchor_.x) / h_;
  const double fy = (p.y - anchor_.y) / h_;
  const int i0 = static_cast<int>(std::floor(fx));
  const int j0 = static_cast<int>(std::floor(fy));
  const double ax = fx - i0, ay = fy - j0;

  std::vector<std::pair<int, double>> out;
  const double w[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
  const int ci[4] = {i0, i0 + 1, i0, i0 + 1};
  const int cj[4] = {j0, j0, j0 + 1, j0 + 1};
  double total = 0.0;
  for (int k = 0; k < 4; ++k) {
    const int id = node_at(ci[k], cj[k]);
    if (id >= 0 && w[k] > 0.0) {
      out.emplace_back(id, w[k]);
      total += w[k];
    }
  }
  if (out.empty()) {
    // No interior corner: fall back to the nearest node in a widening window.
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int radius = 1; radius <= 3 && best < 0; ++radius) {
      for (int dj = -radius; dj <= radius; ++dj) {
        for (int di = -radius; di <= radius; ++di) {
          const int id = node_at(i0 + di, j0 + dj);
          if (id < 0) continue;
          const Point2 q = nodes_[static_cast<size_t>(id)];
          const double d = std::hypot(q.x - p.x, q.y - p.y);
          if (d < best_d) {
            best_d = d;
            best = id;
          }
        }
      }
    }
    if (best < 0)
      raise(ErrorCode::PointOutsideDomain, "no interior node near interpolation point");
    return {{best, 1.0}};
  }
  for (auto& [id, weight] : out) weight /= total;
  return out;
}

std::shared_ptr<const Grid> build_grid(const DomainSpec& domain, double h, double cut_floor) {
  if (!(h > 0.0)) raise(ErrorCode::ValidationError, "grid spacing must be positive");

  auto grid = std::make_shared<Grid>();
  grid->domain_ = domain;
  grid->h_ = h;
  grid->anchor_ = domain.kind == DomainSpec::Kind::Disk ? domain.center : domain.lo;

  const auto [blo, bhi] = domain.bounding_box();
  // One extra ring so exterior-cell slivers are visited for quadrature.
  grid->imin_ = static_cast<int>(std::floor((blo.x - grid->anchor_.x) / h)) - 1;
  grid->imax_ = static_cast<int>(std::ceil((bhi.x - grid->anchor_.x) / h)) + 1;
  grid->jmin_ = static_cast<int>(std::floor((blo.y - grid->anchor_.y) / h)) - 1;
  grid->jmax_ = static_cast<int>(std::ceil((bhi.y - grid->anchor_.y) / h)) + 1;

  const int ni = grid->imax_ - grid->imin_ + 1;
  const int nj = grid->jmax_ - grid->jmin_ + 1;
  grid->index_map_.assign(static_cast<size_t>(ni) * nj, -1);

  for (int j = grid->jmin_; j <= grid->jmax_; ++j) {
    for (int i = grid->imin_; i <= grid->imax_; ++i) {
      const Point2 p = grid->lattice_point(i, j);
      if (!domain.contains(p)) continue;
      const int id = static_cast<int>(grid->nodes_.size());
      grid->index_map_[static_cast<size_t>((j - grid->jmin_) * ni + (i - grid->imin_))] = id;
      grid->nodes_.push_back(p);
      grid->lattice_.emplace_back(i, j);
    }
  }
  if (grid->nodes_.empty())
    raise(ErrorCode::EmptyGrid, "no interior node at spacing h=" + std::to_string(h));

  // Stencil legs and boundary intersections.
  grid->legs_.resize(grid->nodes_.size());
  for (int id = 0; id < grid->node_count(); ++id) {
    const auto [i, j] = grid->lattice_[static_cast<size_t>(id)];
    const Point2 p = grid->nodes_[static_cast<size_t>(id)];
    for (int dir = 0; dir < 4; ++dir) {
      const auto off = kDirectionOffsets[static_cast<size_t>(dir)];
      Grid::Leg leg;
      const int nbr = grid->node_at(i + off[0], j + off[1]);
      if (nbr >= 0) {
        leg.neighbor = nbr;
        leg.theta = 1.0;
      } else {
        double theta = boundary_fraction(domain, p, dir, h);
        if (!(theta > 0.0))
          raise(ErrorCode::DegenerateCut, "non-positive cut fraction at node " + std::to_string(id));
        theta = std::min(theta, 1.0);
        if (theta < cut_floor) {
          theta = cut_floor;
          ++grid->clamped_cuts_;
        }
        leg.theta = theta;
        const Point2 bp{p.x + off[0] * theta * h, p.y + off[1] * theta * h};
        leg.boundary_point = static_cast<int>(grid->boundary_points_.size());
        grid->boundary_points_.push_back({bp, boundary_normal(domain, bp, dir)});
      }
      grid->legs_[static_cast<size_t>(id)][static_cast<size_t>(dir)] = leg;
    }
  }

  // Quadrature weights: clip every lattice cell against the domain; cells of
  // exterior lattice points hand their sliver to the nearest interior node.
  grid->cell_weights_.assign(grid->nodes_.size(), 0.0);
  const double half = 0.5 * h;
  for (int j = grid->jmin_; j <= grid->jmax_; ++j) {
    for (int i = grid->imin_; i <= grid->imax_; ++i) {
      const Point2 p = grid->lattice_point(i, j);
      const double w = clipped_cell_area(domain, p.x, p.y, half);
      if (w <= 0.0) continue;
      int id = grid->node_at(i, j);
      if (id < 0) {
        for (int radius = 1; radius <= 3 && id < 0; ++radius) {
          for (int dj = -radius; dj <= radius && id < 0; ++dj) {
            for (int di = -radius; di <= radius && id < 0; ++di) {
              id = grid->node_at(i + di, j + dj);
            }
          }
        }
        if (id < 0) {
          // Thin sliver far from any interior node: nearest node overall.
          double best = std::numeric_limits<double>::infinity();
          for (int k = 0; k < grid->node_count(); ++k) {
            const Point2 q = grid->nodes_[static_cast<size_t>(k)];
            const double d = std::hypot(q.x - p.x, q.y - p.y);
            if (d < best) {
              best = d;
              id = k;
            }
          }
        }
      }
      grid->cell_weights_[static_cast<size_t>(id)] += w;
    }
  }

  return grid;
}

GridFunction GridFunction::zeros(std::shared_ptr<const Grid> g) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(g->node_count());
  return GridFunction(std::move(g), std::move(v));
}

GridFunction GridFunction::constant(std::shared_ptr<const Grid> g, double c) {
  Eigen::VectorXd v = Eigen::VectorXd::Constant(g->node_count(), c);
  return GridFunction(std::move(g), std::move(v));
}

void require_same_grid(const GridFunction& a, const GridFunction& b) {
  if (a.grid.get() != b.grid.get())
    raise(ErrorCode::GridMismatch, "grid functions live on different grids");
}

}  // namespace conecert
