#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

namespace ballot {

struct Point {
  int32_t x = 0;
  int32_t y = 0;
  friend bool operator==(const Point& a, const Point& b) { return a.x == b.x && a.y == b.y; }
  friend bool operator!=(const Point& a, const Point& b) { return !(a == b); }
  friend bool operator<(const Point& a, const Point& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  }
};

inline uint64_t point_key(Point p) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(p.x)) << 32) |
         static_cast<uint64_t>(static_cast<uint32_t>(p.y));
}

// sorted, deduplicated lattice point set
using PointSet = std::vector<Point>;

void sort_unique(PointSet& s);
bool set_contains(const PointSet& s, Point p);
PointSet set_intersect(const PointSet& a, const PointSet& b);
PointSet set_union(const PointSet& a, const PointSet& b);
PointSet set_diff(const PointSet& a, const PointSet& b);

// Open planar sets built from disks, boolean combinations, e^t scalings and
// η-shrinkage. Every node evaluates two exact-where-possible distance
// functions:
//   dist_to_complement(x) = d(x, W^c)   (> 0 iff x ∈ W)
//   dist_to_set(x)        = d(x, cl W)  (> 0 iff x outside the closure)
// The pair is closed under complement (they swap). Union's dist_to_complement
// and intersection's dist_to_set use the max rule, which is exact for nested
// or separated operands (all shapes used by the experiments) and otherwise a
// safe underestimate; membership (sign) is always exact.
class Shape;
using ShapePtr = std::shared_ptr<const Shape>;

class Shape {
 public:
  enum class Kind { Disk, Complement, Intersection, Union, Scale, Bulk };

  static ShapePtr disk(double cx, double cy, double radius);
  static ShapePtr unit_disk();  // B = B(0,1)
  static ShapePtr complement(ShapePtr s);
  static ShapePtr intersection(std::vector<ShapePtr> terms);
  static ShapePtr union_of(std::vector<ShapePtr> terms);
  static ShapePtr scale(ShapePtr s, double log_factor);  // W ↦ e^t · W
  static ShapePtr bulk(ShapePtr s, double eta);          // W^η

  Kind kind() const { return kind_; }
  const std::vector<ShapePtr>& children() const { return kids_; }
  // node parameters: disk (cx, cy, r); scale (log_factor); bulk (eta)
  double pa() const { return a_; }
  double pb() const { return b_; }
  double pc() const { return c_; }
  double dist_to_complement(double x, double y) const;
  double dist_to_set(double x, double y) const;
  bool contains(double x, double y) const { return dist_to_complement(x, y) > 0.0; }

  // sup |p| over p ∈ W (infinity when unbounded)
  double bound_radius() const;
  bool bounded() const;

  nlohmann::json to_json() const;
  static ShapePtr from_json(const nlohmann::json& j);

  // private-by-convention; use the factories
  Shape(Kind k, std::vector<ShapePtr> kids, double a, double b, double c)
      : kind_(k), kids_(std::move(kids)), a_(a), b_(b), c_(c) {}

 private:
  Kind kind_;
  std::vector<ShapePtr> kids_;
  double a_ = 0, b_ = 0, c_ = 0;  // disk: (cx, cy, r); scale: (t,,); bulk: (eta,,)
};

struct DiscreteDomain {
  PointSet pts;         // sorted, deduplicated
  double scale = 0.0;   // the ℓ used to build it
  std::string provenance;  // shape json + ℓ, for reports

  bool contains(Point p) const { return set_contains(pts, p); }
  size_t size() const { return pts.size(); }
  bool empty() const { return pts.empty(); }
};

// lattice points x with d(e^{−ℓ}x, W^c) ≥ e^{−ℓ}/2; ties at the cutoff are
// kept (so (B(0,½))_0 = {0}) and a 1e-12 guard band makes the decision
// deterministic
DiscreteDomain discretize(const ShapePtr& w, double ell);

// {x ∉ D : |x−y| = 1 for some y ∈ D}
PointSet outer_boundary(const PointSet& d);

// single-point membership under the same cutoff rule as discretize, without
// materializing the set; works for unbounded shapes
bool lattice_member(const ShapePtr& w, double ell, Point p);

ShapePtr bulk_shape(const ShapePtr& w, double eta);

// discretize(U, n) ∩ discretize(V^-, k); throws on empty result
DiscreteDomain annulus_domain(const ShapePtr& u, double n, const ShapePtr& v, double k);

struct DomainClassParams {
  double eps = 0.5;   // ε ∈ (0,1)
  double eta = 0.0;   // η ∈ [0, 1/ε]
  double zeta = 0.0;  // ζ ∈ [0, 1/ε]
};

enum class DomainClass { D_eps, U_eps_eta, V_eps };

struct ClassCheckResult {
  bool ok = true;
  std::vector<std::string> reasons;  // names of failed conditions
};

ClassCheckResult check_class(const ShapePtr& w, const DomainClassParams& p, DomainClass which);

// 4-adjacency connectivity of a finite point set
bool is_connected(const PointSet& s);

}  // namespace ballot
