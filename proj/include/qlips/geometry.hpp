#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "qlips/detail/rng.hpp"
#include "qlips/errors.hpp"
#include "qlips/types.hpp"

namespace qlips {

/// Axis-aligned computational box, optionally extended by a time interval.
struct Box {
  double x_min = -1.0;
  double x_max = 1.0;
  double y_min = -1.0;
  double y_max = 1.0;
  bool timed = false;
  double t_min = 0.0;
  double t_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double duration() const { return timed ? t_max - t_min : 0.0; }
  double perimeter() const { return 2.0 * (width() + height()); }

  bool contains(const Point& p, double tol = 1e-12) const {
    const bool space = p.x >= x_min - tol && p.x <= x_max + tol && p.y >= y_min - tol &&
                       p.y <= y_max + tol;
    if (!timed) return space;
    return space && p.t >= t_min - tol && p.t <= t_max + tol;
  }

  /// Point on the spatial boundary at arclength fraction `s` in [0, 1),
  /// counter-clockwise from (x_min, y_min).
  Point boundary_point(double s, double t = 0.0) const {
    double d = s * perimeter();
    if (d < width()) return {x_min + d, y_min, t};
    d -= width();
    if (d < height()) return {x_max, y_min + d, t};
    d -= height();
    if (d < width()) return {x_max - d, y_max, t};
    d -= width();
    return {x_min, std::max(y_max - d, y_min), t};
  }
};

enum class InterfaceKind { vertical_line, axes_cross, circle, plum_blossom, moving_circle };

inline const char* to_string(InterfaceKind k) {
  switch (k) {
    case InterfaceKind::vertical_line: return "vertical_line";
    case InterfaceKind::axes_cross: return "axes_cross";
    case InterfaceKind::circle: return "circle";
    case InterfaceKind::plum_blossom: return "plum_blossom";
    case InterfaceKind::moving_circle: return "moving_circle";
  }
  return "unknown";
}

inline constexpr int kPlus = 0;
inline constexpr int kMinus = 1;

/// One smooth piece of the interface; the unit normal points from `plus` into `minus`.
struct InterfaceSegment {
  int plus = kPlus;
  int minus = kMinus;
};

struct InterfacePoint {
  Point point;
  Vec2 normal{};
  int segment = 0;
};

struct Classification {
  int subdomain = -1;
  bool on_interface = false;
};

/// Interface curve plus domain decomposition.
///
/// Two-region kinds carry a level set phi with phi > 0 in the plus region,
/// phi < 0 in the minus region and phi = 0 on the interface; classification,
/// normals and projection all go through it. `axes_cross` splits the box into
/// four quadrants (0: x<0,y>0; 1: x>0,y>0; 2: x<0,y<0; 3: x>0,y<0) joined by four
/// straight half-axis segments.
class InterfaceGeometry {
 public:
  static constexpr double kCrossExclusion = 1e-8;

  static InterfaceGeometry vertical_line(double x0, Box box) {
    if (!(x0 > box.x_min && x0 < box.x_max))
      throw ConfigError("vertical_line: x0 must lie strictly inside the box");
    InterfaceGeometry g(InterfaceKind::vertical_line, box);
    g.x0_ = x0;
    return g;
  }

  static InterfaceGeometry axes_cross(Box box) {
    if (!(box.x_min < 0.0 && box.x_max > 0.0 && box.y_min < 0.0 && box.y_max > 0.0))
      throw ConfigError("axes_cross: the box must contain the origin in its interior");
    InterfaceGeometry g(InterfaceKind::axes_cross, box);
    g.segments_ = {{1, 0}, {3, 2}, {0, 2}, {1, 3}};
    return g;
  }

  static InterfaceGeometry circle(Vec2 center, double radius, Box box) {
    InterfaceGeometry g(InterfaceKind::circle, box);
    g.center_ = center;
    g.r0_ = radius;
    g.check_disk_fits(radius, "circle");
    return g;
  }

  static InterfaceGeometry plum_blossom(double r0, double amplitude, int petals, Box box,
                                        Vec2 center = {0.0, 0.0}) {
    if (petals < 1) throw ConfigError("plum_blossom: m_petal must be a positive integer");
    if (!(r0 - std::abs(amplitude) > 0.0))
      throw ConfigError("plum_blossom: R0 - |A| must be positive");
    InterfaceGeometry g(InterfaceKind::plum_blossom, box);
    g.center_ = center;
    g.r0_ = r0;
    g.amplitude_ = amplitude;
    g.petals_ = petals;
    g.check_disk_fits(r0 + std::abs(amplitude), "plum_blossom");
    return g;
  }

  /// Circle of radius r(t) = rate * t + r0 in a space-time box.
  static InterfaceGeometry moving_circle(double rate, double r0, Box box,
                                         Vec2 center = {0.0, 0.0}) {
    if (!box.timed) throw ConfigError("moving_circle: the box needs a time interval");
    InterfaceGeometry g(InterfaceKind::moving_circle, box);
    g.center_ = center;
    g.rate_ = rate;
    g.r0_ = r0;
    for (double t : {box.t_min, box.t_max}) {
      const double r = rate * t + r0;
      if (!(r > 0.0)) throw ConfigError("moving_circle: radius must stay positive");
      g.check_disk_fits(r, "moving_circle");
    }
    return g;
  }

  InterfaceKind kind() const { return kind_; }
  const Box& box() const { return box_; }
  bool time_dependent() const { return box_.timed; }
  int subdomain_count() const { return kind_ == InterfaceKind::axes_cross ? 4 : 2; }
  int segment_count() const { return static_cast<int>(segments_.size()); }
  const InterfaceSegment& segment(int i) const { return segments_.at(static_cast<std::size_t>(i)); }
  bool negated_sides() const { return sign_ < 0.0; }

  double x0() const { return x0_; }
  Vec2 center() const { return center_; }
  double radius() const { return r0_; }
  double r0() const { return r0_; }
  double amplitude() const { return amplitude_; }
  int petals() const { return petals_; }
  double rate() const { return rate_; }

  double radius_at(double t) const { return rate_ * t + r0_; }

  /// Copy with phi -> -phi: sides swap and normals flip.
  InterfaceGeometry negated() const {
    if (kind_ == InterfaceKind::axes_cross)
      throw UnsupportedError("axes_cross has no global level set to negate");
    InterfaceGeometry g = *this;
    g.sign_ = -sign_;
    return g;
  }

  double level_set(const Point& p) const { return sign_ * raw_level_set(p); }

  Vec2 level_set_gradient(const Point& p) const {
    const Vec2 g = raw_gradient(p);
    return {sign_ * g[0], sign_ * g[1]};
  }

  /// Distance-like measure of how close `p` is to the interface (|phi| or the
  /// distance to the nearer axis for the cross).
  double interface_proximity(const Point& p) const {
    if (kind_ == InterfaceKind::axes_cross) return std::min(std::abs(p.x), std::abs(p.y));
    return std::abs(level_set(p));
  }

  Classification classify(const Point& p, double tol = 1e-12) const {
    if (!box_.contains(p)) throw DomainError("classify: point outside the bounding box");
    if (interface_proximity(p) <= tol) return {subdomain_of(p), true};
    return {subdomain_of(p), false};
  }

  /// Subdomain owning `p`; points exactly on the interface go to the plus
  /// (right/top) side.
  int subdomain_of(const Point& p) const {
    if (kind_ == InterfaceKind::axes_cross) {
      const bool right = p.x >= 0.0;
      const bool top = p.y >= 0.0;
      if (top) return right ? 1 : 0;
      return right ? 3 : 2;
    }
    return level_set(p) >= 0.0 ? kPlus : kMinus;
  }

  /// Unit normal at an interface point of segment `seg`, from plus into minus.
  Vec2 normal_at(const Point& p, int seg = 0) const {
    if (kind_ == InterfaceKind::axes_cross) return seg < 2 ? Vec2{-1.0, 0.0} : Vec2{0.0, -1.0};
    const Vec2 g = level_set_gradient(p);
    const double n = norm(g);
    if (!(n > 0.0)) throw DomainError("normal_at: level-set gradient vanishes");
    return {-g[0] / n, -g[1] / n};
  }

  /// Newton projection onto phi = 0 along the level-set gradient.
  Point project(Point p) const {
    if (kind_ == InterfaceKind::axes_cross) {
      if (std::abs(p.x) <= std::abs(p.y)) p.x = 0.0; else p.y = 0.0;
      return p;
    }
    for (int it = 0; it < 8; ++it) {
      const double f = raw_level_set(p);
      if (std::abs(f) <= 1e-15) break;
      const Vec2 g = raw_gradient(p);
      const double gg = dot(g, g);
      p.x -= f * g[0] / gg;
      p.y -= f * g[1] / gg;
    }
    return p;
  }

  /// Point and normal at local parameter s in [0, 1] on segment `seg`
  /// (angle 2*pi*s for closed curves, length fraction for straight pieces).
  InterfacePoint segment_point(int seg, double s, double t = 0.0) const {
    if (seg < 0 || seg >= segment_count()) throw UnsupportedError("segment index out of range");
    if (!(s >= 0.0 && s <= 1.0)) throw UnsupportedError("interface parameter must lie in [0, 1]");
    Point p{0.0, 0.0, t};
    switch (kind_) {
      case InterfaceKind::vertical_line:
        p.x = x0_;
        p.y = box_.y_min + s * box_.height();
        break;
      case InterfaceKind::axes_cross: {
        const double lo = kCrossExclusion;
        switch (seg) {
          case 0: p.y = lo + s * (box_.y_max - lo); break;
          case 1: p.y = -(lo + s * (-box_.y_min - lo)); break;
          case 2: p.x = -(lo + s * (-box_.x_min - lo)); break;
          default: p.x = lo + s * (box_.x_max - lo); break;
        }
        break;
      }
      case InterfaceKind::circle:
      case InterfaceKind::plum_blossom:
      case InterfaceKind::moving_circle: {
        const double theta = 2.0 * std::numbers::pi * s;
        double r = r0_;
        if (kind_ == InterfaceKind::plum_blossom) r = r0_ + amplitude_ * std::cos(petals_ * theta);
        if (kind_ == InterfaceKind::moving_circle) r = radius_at(t);
        p.x = center_[0] + r * std::cos(theta);
        p.y = center_[1] + r * std::sin(theta);
        if (kind_ == InterfaceKind::plum_blossom) p = project(p);
        break;
      }
    }
    return {p, normal_at(p, seg), seg};
  }

  /// Global parameter s in [0, 1] running over all segments in order.
  InterfacePoint interface_point(double s, double t = 0.0) const {
    if (!(s >= 0.0 && s <= 1.0)) throw UnsupportedError("interface parameter must lie in [0, 1]");
    const int n = segment_count();
    const int seg = std::min(static_cast<int>(s * n), n - 1);
    return segment_point(seg, s * n - seg, t);
  }

  std::string subdomain_name(int s) const {
    if (kind_ == InterfaceKind::axes_cross) return "Omega" + std::to_string(s + 1);
    return s == kPlus ? "Omega+" : "Omega-";
  }

 private:
  InterfaceGeometry(InterfaceKind kind, Box box) : kind_(kind), box_(box) {
    if (!(box.x_max > box.x_min && box.y_max > box.y_min))
      throw ConfigError("bounding box must have positive extent");
    if (box.timed && !(box.t_max > box.t_min))
      throw ConfigError("time interval must have positive length");
  }

  void check_disk_fits(double r, const char* what) const {
    if (!(r > 0.0) || center_[0] - r <= box_.x_min || center_[0] + r >= box_.x_max ||
        center_[1] - r <= box_.y_min || center_[1] + r >= box_.y_max)
      throw ConfigError(std::string(what) + ": interface must stay strictly inside the box");
  }

  double raw_level_set(const Point& p) const {
    switch (kind_) {
      case InterfaceKind::vertical_line: return p.x - x0_;
      case InterfaceKind::circle:
        return std::hypot(p.x - center_[0], p.y - center_[1]) - r0_;
      case InterfaceKind::moving_circle:
        return std::hypot(p.x - center_[0], p.y - center_[1]) - radius_at(p.t);
      case InterfaceKind::plum_blossom: {
        const double dx = p.x - center_[0];
        const double dy = p.y - center_[1];
        const double theta = std::atan2(dy, dx);
        return std::hypot(dx, dy) - r0_ - amplitude_ * std::cos(petals_ * theta);
      }
      case InterfaceKind::axes_cross: break;
    }
    throw UnsupportedError("axes_cross has no global level set");
  }

  Vec2 raw_gradient(const Point& p) const {
    switch (kind_) {
      case InterfaceKind::vertical_line: return {1.0, 0.0};
      case InterfaceKind::circle:
      case InterfaceKind::moving_circle:
      case InterfaceKind::plum_blossom: {
        const double dx = p.x - center_[0];
        const double dy = p.y - center_[1];
        const double r = std::hypot(dx, dy);
        if (!(r > 0.0)) return {0.0, 0.0};
        Vec2 g{dx / r, dy / r};
        if (kind_ == InterfaceKind::plum_blossom) {
          const double theta = std::atan2(dy, dx);
          const double k = amplitude_ * petals_ * std::sin(petals_ * theta) / r;
          g[0] += k * (-dy / r);
          g[1] += k * (dx / r);
        }
        return g;
      }
      case InterfaceKind::axes_cross: break;
    }
    throw UnsupportedError("axes_cross has no global level set");
  }

  InterfaceKind kind_;
  Box box_;
  std::vector<InterfaceSegment> segments_{{kPlus, kMinus}};
  double sign_ = 1.0;
  double x0_ = 0.0;
  Vec2 center_{0.0, 0.0};
  double r0_ = 0.0;
  double amplitude_ = 0.0;
  int petals_ = 0;
  double rate_ = 0.0;
};

// ---------------------------------------------------------------------------
// Collocation sampling

enum class SamplingStrategy { uniform_grid, seeded_uniform_random };

inline const char* to_string(SamplingStrategy s) {
  return s == SamplingStrategy::uniform_grid ? "uniform_grid" : "seeded_uniform_random";
}

/// Least-squares weights: one per subdomain interior, then interface value,
/// interface flux and outer boundary.
struct ResidualWeights {
  std::vector<double> interior;
  double interface_value = 1.0;
  double interface_flux = 1.0;
  double boundary = 1.0;
};

struct CollocationSpec {
  std::vector<std::size_t> interior;  // per subdomain
  std::size_t interface = 0;
  std::size_t boundary = 0;
  ResidualWeights weights;  // empty interior weights mean 1
  SamplingStrategy strategy = SamplingStrategy::seeded_uniform_random;
  // Share of boundary points placed on the initial time slice (space-time only).
  double initial_fraction = 0.5;
};

struct InterfaceSample {
  Point point;
  Vec2 normal{};
  int segment = 0;
};

struct BoundarySample {
  Point point;
  int subdomain = 0;
  bool initial_slice = false;
};

/// Interface samples are ordered by segment and boundary samples by subdomain,
/// so every (segment, side) and every boundary side occupies a contiguous range.
struct CollocationSet {
  std::vector<std::vector<Point>> interior;
  std::vector<InterfaceSample> interface;
  std::vector<BoundarySample> boundary;
  ResidualWeights weights;
  std::uint64_t seed = 0;
  SamplingStrategy strategy = SamplingStrategy::seeded_uniform_random;

  std::size_t interior_count() const {
    std::size_t n = 0;
    for (const auto& v : interior) n += v.size();
    return n;
  }
  std::size_t total_points() const { return interior_count() + interface.size() + boundary.size(); }
  /// Residual rows: interface points contribute a value and a flux row.
  std::size_t total_rows() const {
    return interior_count() + 2 * interface.size() + boundary.size();
  }
};

namespace detail {

inline std::vector<std::size_t> even_split(std::size_t total, std::size_t parts) {
  std::vector<std::size_t> out(parts, total / parts);
  for (std::size_t k = 0; k < total % parts; ++k) ++out[k];
  return out;
}

// Golden-ratio rank-1 lattice coordinate, used for deterministic space-time grids.
inline double lattice(std::size_t k, double alpha) {
  double v = static_cast<double>(k) * alpha;
  return v - std::floor(v);
}

inline std::vector<Point> grid_interior(const InterfaceGeometry& geom, int subdomain,
                                        std::size_t wanted) {
  const Box& box = geom.box();
  const double total = wanted;
  // Grow the tensor grid until the subdomain holds enough points, then thin evenly.
  for (double scale = 1.0; scale <= 100.0; scale *= 1.25) {
    const double target = total * scale * 1.2;
    int nx, ny, nt = 1;
    if (box.timed) {
      const double per = std::cbrt(target / (box.width() * box.height() * box.duration()));
      nx = std::max(1, static_cast<int>(std::ceil(per * box.width())));
      ny = std::max(1, static_cast<int>(std::ceil(per * box.height())));
      nt = std::max(1, static_cast<int>(std::ceil(per * box.duration())));
    } else {
      const double per = std::sqrt(target / (box.width() * box.height()));
      nx = std::max(1, static_cast<int>(std::ceil(per * box.width())));
      ny = std::max(1, static_cast<int>(std::ceil(per * box.height())));
    }
    std::vector<Point> inside;
    for (int k = 0; k < nt; ++k) {
      const double t = box.timed ? box.t_min + (k + 0.5) * box.duration() / nt : 0.0;
      for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
          const Point p{box.x_min + (i + 0.5) * box.width() / nx,
                        box.y_min + (j + 0.5) * box.height() / ny, t};
          const auto c = geom.classify(p);
          if (!c.on_interface && c.subdomain == subdomain) inside.push_back(p);
        }
      }
    }
    if (inside.size() >= wanted) {
      std::vector<Point> out;
      out.reserve(wanted);
      for (std::size_t k = 0; k < wanted; ++k) out.push_back(inside[k * inside.size() / wanted]);
      return out;
    }
  }
  throw SamplingError("uniform_grid: subdomain too small for the requested count");
}

inline std::vector<Point> random_interior(const InterfaceGeometry& geom, int subdomain,
                                          std::size_t wanted, std::uint64_t seed) {
  const Box& box = geom.box();
  Rng rng(seed);
  std::vector<Point> out;
  out.reserve(wanted);
  const std::size_t budget = 100 * wanted;
  for (std::size_t attempt = 0; attempt < budget && out.size() < wanted; ++attempt) {
    Point p{rng.uniform(box.x_min, box.x_max), rng.uniform(box.y_min, box.y_max), 0.0};
    if (box.timed) p.t = rng.uniform(box.t_min, box.t_max);
    const auto c = geom.classify(p);
    if (!c.on_interface && c.subdomain == subdomain) out.push_back(p);
  }
  if (out.size() < wanted)
    throw SamplingError("rejection sampling could not fill " + geom.subdomain_name(subdomain) +
                        " within 100x oversampling");
  return out;
}

}  // namespace detail

/// Draws interior, interface and boundary collocation points. Every group uses its
/// own sub-seed, so changing one count leaves the other groups untouched.
inline CollocationSet sample_collocation(const InterfaceGeometry& geom, const CollocationSpec& spec,
                                         std::uint64_t seed) {
  const int ns = geom.subdomain_count();
  if (static_cast<int>(spec.interior.size()) != ns)
    throw ConfigError("collocation: need one interior count per subdomain");
  for (auto n : spec.interior)
    if (n == 0) throw ConfigError("collocation: interior counts must be positive");
  if (spec.interface == 0 || spec.boundary == 0)
    throw ConfigError("collocation: interface and boundary counts must be positive");

  CollocationSet set;
  set.seed = seed;
  set.strategy = spec.strategy;
  set.weights = spec.weights;
  if (set.weights.interior.empty()) set.weights.interior.assign(static_cast<std::size_t>(ns), 1.0);
  if (static_cast<int>(set.weights.interior.size()) != ns)
    throw ConfigError("collocation: need one interior weight per subdomain");
  for (double w : set.weights.interior)
    if (!(w > 0.0)) throw ConfigError("collocation: weights must be positive");
  if (!(set.weights.interface_value > 0.0 && set.weights.interface_flux > 0.0 &&
        set.weights.boundary > 0.0))
    throw ConfigError("collocation: weights must be positive");

  const bool grid = spec.strategy == SamplingStrategy::uniform_grid;
  const Box& box = geom.box();

  set.interior.resize(static_cast<std::size_t>(ns));
  for (int s = 0; s < ns; ++s) {
    const auto n = spec.interior[static_cast<std::size_t>(s)];
    set.interior[static_cast<std::size_t>(s)] =
        grid ? detail::grid_interior(geom, s, n)
             : detail::random_interior(geom, s, n, detail::sub_seed(seed, 100 + s));
  }

  {
    detail::Rng rng(detail::sub_seed(seed, 1));
    const auto per_segment =
        detail::even_split(spec.interface, static_cast<std::size_t>(geom.segment_count()));
    for (int seg = 0; seg < geom.segment_count(); ++seg) {
      const auto n = per_segment[static_cast<std::size_t>(seg)];
      for (std::size_t k = 0; k < n; ++k) {
        double s, t = 0.0;
        if (grid) {
          s = (k + 0.5) / static_cast<double>(n);
          if (box.timed) t = box.t_min + box.duration() * detail::lattice(k, 0.6180339887498949);
        } else {
          s = rng.uniform();
          if (box.timed) t = rng.uniform(box.t_min, box.t_max);
        }
        const auto ip = geom.segment_point(seg, s, t);
        set.interface.push_back({ip.point, ip.normal, seg});
      }
    }
  }

  {
    detail::Rng rng(detail::sub_seed(seed, 2));
    std::size_t n_initial = 0;
    if (box.timed) {
      n_initial = static_cast<std::size_t>(std::llround(spec.boundary * spec.initial_fraction));
      n_initial = std::min(n_initial, spec.boundary - 1);
    }
    const std::size_t n_lateral = spec.boundary - n_initial;
    for (std::size_t k = 0; k < n_lateral; ++k) {
      double s, t = 0.0;
      if (grid) {
        s = (k + 0.5) / static_cast<double>(n_lateral);
        if (box.timed) t = box.t_min + box.duration() * detail::lattice(k, 0.6180339887498949);
      } else {
        s = rng.uniform();
        if (box.timed) t = rng.uniform(box.t_min, box.t_max);
      }
      const Point p = box.boundary_point(s, t);
      set.boundary.push_back({p, geom.subdomain_of(p), false});
    }
    for (std::size_t k = 0; k < n_initial; ++k) {
      Point p{0.0, 0.0, box.t_min};
      if (grid) {
        p.x = box.x_min + box.width() * (k + 0.5) / static_cast<double>(n_initial);
        p.y = box.y_min + box.height() * detail::lattice(k, 0.6180339887498949);
      } else {
        p.x = rng.uniform(box.x_min, box.x_max);
        p.y = rng.uniform(box.y_min, box.y_max);
      }
      set.boundary.push_back({p, geom.subdomain_of(p), true});
    }
    std::stable_sort(set.boundary.begin(), set.boundary.end(),
                     [](const BoundarySample& a, const BoundarySample& b) {
                       return a.subdomain < b.subdomain;
                     });
  }
  return set;
}

}  // namespace qlips
