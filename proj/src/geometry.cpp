#include "ballot/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <unordered_set>

namespace ballot {

namespace {
// Inclusion threshold tie-break: a point whose clearance equals the e^{−ℓ}/2
// cutoff exactly is kept — (B(0,½))_0 must come out as {0}, and the origin
// sits exactly at the cutoff there. The guard band keeps the decision
// deterministic under floating-point noise.
constexpr double kGuard = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool above_cutoff(double dist, double half) { return dist > half - kGuard; }
}  // namespace

void sort_unique(PointSet& s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
}

bool set_contains(const PointSet& s, Point p) {
  return std::binary_search(s.begin(), s.end(), p);
}

PointSet set_intersect(const PointSet& a, const PointSet& b) {
  PointSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

PointSet set_union(const PointSet& a, const PointSet& b) {
  PointSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

PointSet set_diff(const PointSet& a, const PointSet& b) {
  PointSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

ShapePtr Shape::disk(double cx, double cy, double radius) {
  if (!(radius > 0)) throw std::invalid_argument("disk radius must be positive");
  return std::make_shared<Shape>(Kind::Disk, std::vector<ShapePtr>{}, cx, cy, radius);
}

ShapePtr Shape::unit_disk() { return disk(0, 0, 1); }

ShapePtr Shape::complement(ShapePtr s) {
  return std::make_shared<Shape>(Kind::Complement, std::vector<ShapePtr>{std::move(s)}, 0, 0, 0);
}

ShapePtr Shape::intersection(std::vector<ShapePtr> terms) {
  if (terms.empty()) throw std::invalid_argument("intersection needs at least one term");
  return std::make_shared<Shape>(Kind::Intersection, std::move(terms), 0, 0, 0);
}

ShapePtr Shape::union_of(std::vector<ShapePtr> terms) {
  if (terms.empty()) throw std::invalid_argument("union needs at least one term");
  return std::make_shared<Shape>(Kind::Union, std::move(terms), 0, 0, 0);
}

ShapePtr Shape::scale(ShapePtr s, double log_factor) {
  return std::make_shared<Shape>(Kind::Scale, std::vector<ShapePtr>{std::move(s)}, log_factor, 0, 0);
}

ShapePtr Shape::bulk(ShapePtr s, double eta) {
  if (eta < 0) throw std::invalid_argument("bulk shrinkage must be nonnegative");
  return std::make_shared<Shape>(Kind::Bulk, std::vector<ShapePtr>{std::move(s)}, eta, 0, 0);
}

double Shape::dist_to_complement(double x, double y) const {
  switch (kind_) {
    case Kind::Disk:
      return std::max(0.0, c_ - std::hypot(x - a_, y - b_));
    case Kind::Complement:
      return kids_[0]->dist_to_set(x, y);
    case Kind::Intersection: {
      double d = kInf;
      for (const auto& k : kids_) d = std::min(d, k->dist_to_complement(x, y));
      return d;
    }
    case Kind::Union: {
      double d = 0;
      for (const auto& k : kids_) d = std::max(d, k->dist_to_complement(x, y));
      return d;
    }
    case Kind::Scale: {
      const double f = std::exp(a_);
      return f * kids_[0]->dist_to_complement(x / f, y / f);
    }
    case Kind::Bulk:
      return std::max(0.0, kids_[0]->dist_to_complement(x, y) - a_);
  }
  return 0;
}

double Shape::dist_to_set(double x, double y) const {
  switch (kind_) {
    case Kind::Disk:
      return std::max(0.0, std::hypot(x - a_, y - b_) - c_);
    case Kind::Complement:
      return kids_[0]->dist_to_complement(x, y);
    case Kind::Intersection: {
      double d = 0;
      for (const auto& k : kids_) d = std::max(d, k->dist_to_set(x, y));
      return d;
    }
    case Kind::Union: {
      double d = kInf;
      for (const auto& k : kids_) d = std::min(d, k->dist_to_set(x, y));
      return d;
    }
    case Kind::Scale: {
      const double f = std::exp(a_);
      return f * kids_[0]->dist_to_set(x / f, y / f);
    }
    case Kind::Bulk: {
      // nearest point of W^η from outside: climb the distance gradient by the
      // missing clearance, then reach W itself (exact for radial shapes)
      const double dc = kids_[0]->dist_to_complement(x, y);
      if (dc >= a_) return 0.0;
      return (a_ - dc) + kids_[0]->dist_to_set(x, y);
    }
  }
  return 0;
}

double Shape::bound_radius() const {
  switch (kind_) {
    case Kind::Disk:
      return std::hypot(a_, b_) + c_;
    case Kind::Complement:
      return kInf;
    case Kind::Intersection: {
      double r = kInf;
      for (const auto& k : kids_) r = std::min(r, k->bound_radius());
      return r;
    }
    case Kind::Union: {
      double r = 0;
      for (const auto& k : kids_) r = std::max(r, k->bound_radius());
      return r;
    }
    case Kind::Scale:
      return std::exp(a_) * kids_[0]->bound_radius();
    case Kind::Bulk:
      return kids_[0]->bound_radius();
  }
  return kInf;
}

bool Shape::bounded() const { return std::isfinite(bound_radius()); }

nlohmann::json Shape::to_json() const {
  using nlohmann::json;
  switch (kind_) {
    case Kind::Disk:
      return json{{"disk", {{"center", {a_, b_}}, {"radius", c_}}}};
    case Kind::Complement:
      return json{{"complement", kids_[0]->to_json()}};
    case Kind::Intersection: {
      json terms = json::array();
      for (const auto& k : kids_) terms.push_back(k->to_json());
      return json{{"intersection", terms}};
    }
    case Kind::Union: {
      json terms = json::array();
      for (const auto& k : kids_) terms.push_back(k->to_json());
      return json{{"union", terms}};
    }
    case Kind::Scale:
      return json{{"scale", {{"log_factor", a_}, {"of", kids_[0]->to_json()}}}};
    case Kind::Bulk:
      return json{{"bulk", {{"eta", a_}, {"of", kids_[0]->to_json()}}}};
  }
  throw std::logic_error("unreachable shape kind");
}

ShapePtr Shape::from_json(const nlohmann::json& j) {
  if (j.contains("disk")) {
    const auto& d = j.at("disk");
    const auto& c = d.at("center");
    return disk(c.at(0).get<double>(), c.at(1).get<double>(), d.at("radius").get<double>());
  }
  if (j.contains("complement")) return complement(from_json(j.at("complement")));
  if (j.contains("intersection")) {
    std::vector<ShapePtr> terms;
    for (const auto& t : j.at("intersection")) terms.push_back(from_json(t));
    return intersection(std::move(terms));
  }
  if (j.contains("union")) {
    std::vector<ShapePtr> terms;
    for (const auto& t : j.at("union")) terms.push_back(from_json(t));
    return union_of(std::move(terms));
  }
  if (j.contains("scale")) {
    const auto& s = j.at("scale");
    return scale(from_json(s.at("of")), s.at("log_factor").get<double>());
  }
  if (j.contains("bulk")) {
    const auto& b = j.at("bulk");
    return bulk(from_json(b.at("of")), b.at("eta").get<double>());
  }
  throw std::runtime_error("unknown shape kind in json: " + j.dump());
}

bool lattice_member(const ShapePtr& w, double ell, Point p) {
  const double f = std::exp(-ell);
  return above_cutoff(w->dist_to_complement(f * p.x, f * p.y), f / 2.0);
}

DiscreteDomain discretize(const ShapePtr& w, double ell) {
  if (!w->bounded()) throw std::runtime_error("unbounded discretization");
  const double f = std::exp(-ell);
  const double half = f / 2.0;
  const double rad = w->bound_radius();
  const int64_t m = static_cast<int64_t>(std::ceil(rad / f)) + 2;

  DiscreteDomain out;
  out.scale = ell;
  for (int64_t ix = -m; ix <= m; ++ix) {
    for (int64_t iy = -m; iy <= m; ++iy) {
      if (above_cutoff(w->dist_to_complement(f * ix, f * iy), half)) {
        out.pts.push_back(Point{static_cast<int32_t>(ix), static_cast<int32_t>(iy)});
      }
    }
  }
  // the scan order is already lexicographic, so pts is sorted
  nlohmann::json prov{{"shape", w->to_json()}, {"ell", ell}};
  out.provenance = prov.dump();
  return out;
}

PointSet outer_boundary(const PointSet& d) {
  std::unordered_set<uint64_t> in;
  in.reserve(d.size() * 2);
  for (Point p : d) in.insert(point_key(p));
  PointSet out;
  const int dx[4] = {1, -1, 0, 0};
  const int dy[4] = {0, 0, 1, -1};
  for (Point p : d) {
    for (int k = 0; k < 4; ++k) {
      Point q{p.x + dx[k], p.y + dy[k]};
      if (!in.count(point_key(q))) out.push_back(q);
    }
  }
  sort_unique(out);
  return out;
}

ShapePtr bulk_shape(const ShapePtr& w, double eta) { return Shape::bulk(w, eta); }

DiscreteDomain annulus_domain(const ShapePtr& u, double n, const ShapePtr& v, double k) {
  DiscreteDomain un = discretize(u, n);
  // V^- is unbounded, so filter U_n by its membership predicate instead of
  // discretizing it
  const ShapePtr vminus = Shape::complement(v);
  const double f = std::exp(-k);
  const double half = f / 2.0;
  DiscreteDomain out;
  out.scale = n;
  for (Point p : un.pts) {
    if (above_cutoff(vminus->dist_to_complement(f * p.x, f * p.y), half)) out.pts.push_back(p);
  }
  if (out.pts.empty()) throw std::runtime_error("degenerate annulus");
  nlohmann::json prov{{"outer_shape", u->to_json()}, {"outer_ell", n},
                      {"hole_shape", v->to_json()},  {"hole_ell", k}};
  out.provenance = prov.dump();
  return out;
}

bool is_connected(const PointSet& s) {
  if (s.size() <= 1) return true;
  std::unordered_set<uint64_t> in;
  in.reserve(s.size() * 2);
  for (Point p : s) in.insert(point_key(p));
  std::unordered_set<uint64_t> seen;
  std::queue<Point> q;
  q.push(s[0]);
  seen.insert(point_key(s[0]));
  const int dx[4] = {1, -1, 0, 0};
  const int dy[4] = {0, 0, 1, -1};
  while (!q.empty()) {
    Point p = q.front();
    q.pop();
    for (int k = 0; k < 4; ++k) {
      Point nb{p.x + dx[k], p.y + dy[k]};
      uint64_t key = point_key(nb);
      if (in.count(key) && !seen.count(key)) {
        seen.insert(key);
        q.push(nb);
      }
    }
  }
  return seen.size() == s.size();
}

namespace {

// minimum of dist_to_complement over the closed disk B(0, r), by polar
// sampling; adequate for the radial shapes the class checks see
double min_clearance_on_disk(const Shape& w, double r) {
  double best = kInf;
  const int nr = 48, na = 256;
  for (int i = 0; i <= nr; ++i) {
    const double rho = r * i / nr;
    const int na_i = (i == 0) ? 1 : na;
    for (int j = 0; j < na_i; ++j) {
      const double th = 2 * M_PI * j / na_i;
      best = std::min(best, w.dist_to_complement(rho * std::cos(th), rho * std::sin(th)));
    }
  }
  return best;
}

// effective diameters of the primitive circles making up ∂W, tracking scale
// factors and bulk shrinkage along the way
void collect_boundary_diams(const Shape& s, double factor, double shrink,
                            std::vector<double>& out) {
  switch (s.kind()) {
    case Shape::Kind::Disk:
      if (s.pc() - shrink > 0) out.push_back(2 * (s.pc() - shrink) * factor);
      break;
    case Shape::Kind::Scale:
      collect_boundary_diams(*s.children()[0], factor * std::exp(s.pa()), shrink, out);
      break;
    case Shape::Kind::Bulk:
      collect_boundary_diams(*s.children()[0], factor, shrink + s.pa(), out);
      break;
    case Shape::Kind::Complement:
      collect_boundary_diams(*s.children()[0], factor, shrink, out);
      break;
    case Shape::Kind::Intersection:
    case Shape::Kind::Union:
      for (const auto& k : s.children()) collect_boundary_diams(*k, factor, shrink, out);
      break;
  }
}

// discretization scale for connectivity probes: resolve features of size eps
// by ≥ 8 lattice units, but keep the enumeration box below ~3e6 points
double connectivity_scale(double eps, double rad) {
  double ell = std::max(2.0, std::log(8.0 / eps));
  while (ell > 2.0) {
    const double est = 4.0 * (rad * rad + 1) * std::exp(2 * ell);
    if (est < 3e6) break;
    ell -= 0.5;
  }
  return ell;
}

}  // namespace

ClassCheckResult check_class(const ShapePtr& w, const DomainClassParams& p, DomainClass which) {
  ClassCheckResult res;
  auto fail = [&res](const std::string& why) {
    res.ok = false;
    res.reasons.push_back(why);
  };

  const double eps = p.eps;
  if (!(eps > 0 && eps < 1)) fail("eps out of range");

  if (min_clearance_on_disk(*w, eps) <= 0) fail("B(0,eps) not contained in W");
  if (!(w->bound_radius() <= 1.0 / eps + 1e-9)) fail("W not contained in B(0,1/eps)");

  std::vector<double> diams;
  collect_boundary_diams(*w, 1.0, 0.0, diams);
  for (double d : diams) {
    if (d < eps) {
      fail("boundary component diameter below eps");
      break;
    }
  }

  if (which == DomainClass::U_eps_eta) {
    if (p.eta < 0 || p.eta > 1.0 / eps) fail("eta out of range");
    if (min_clearance_on_disk(*Shape::bulk(w, p.eta), eps) <= 0) fail("B(0,eps) not contained in the bulk");
    const double ell = connectivity_scale(eps, w->bound_radius());
    if (!is_connected(discretize(w, ell).pts)) fail("U not connected");
  }

  if (which == DomainClass::V_eps) {
    // windowed probe of V^-: connectivity inside B(0, 2/eps), the unbounded
    // tail joins through the window edge
    const double win = 2.0 / eps;
    const ShapePtr probe = Shape::intersection({Shape::complement(w), Shape::disk(0, 0, win)});
    const double ell = connectivity_scale(eps, win);
    if (!is_connected(discretize(probe, ell).pts)) fail("V complement not connected");
  }

  return res;
}

}  // namespace ballot
