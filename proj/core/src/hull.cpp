#include "fbd/hull.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <numbers>

#include "fbd/certificate.hpp"
#include "fbd/poly.hpp"
#include "fbd/sampling.hpp"

namespace fbd {

namespace {

constexpr int kDx4[] = {1, -1, 0, 0};
constexpr int kDy4[] = {0, 0, 1, -1};
constexpr int kDx8[] = {1, -1, 0, 0, 1, 1, -1, -1};
constexpr int kDy8[] = {0, 0, 1, -1, 1, -1, 1, -1};

}  // namespace

PlanarCompact::PlanarCompact(BBox box, int resolution) : box_(box), res_(resolution) {
  if (resolution <= 0) throw InvalidArgument("resolution must be positive");
  if (!(box.x1 > box.x0 && box.y1 > box.y0)) throw InvalidArgument("bounding box must have positive extent");
  w_ = static_cast<int>(std::ceil((box.x1 - box.x0) * resolution - 1e-9));
  h_ = static_cast<int>(std::ceil((box.y1 - box.y0) * resolution - 1e-9));
  if (w_ < 3 || h_ < 3) throw InvalidArgument("grid needs at least 3x3 cells");
  mask_.assign(static_cast<std::size_t>(w_) * h_, 0);
}

void PlanarCompact::set(Cell c, bool v) {
  if (!in_grid(c)) throw IndexOutOfRange("cell outside the grid");
  mask_[index(c)] = v ? 1 : 0;
}

Cell PlanarCompact::cell_of(cplx z) const {
  return {static_cast<int>(std::floor((z.real() - box_.x0) * res_)),
          static_cast<int>(std::floor((z.imag() - box_.y0) * res_))};
}

cplx PlanarCompact::center_of(Cell c) const {
  return {box_.x0 + (c.x + 0.5) / res_, box_.y0 + (c.y + 0.5) / res_};
}

long long PlanarCompact::count() const { return std::count(mask_.begin(), mask_.end(), std::uint8_t{1}); }

double PlanarCompact::perimeter() const {
  long long edges = 0;
  for (int y = 0; y < h_; ++y)
    for (int x = 0; x < w_; ++x) {
      if (!at({x, y})) continue;
      for (int d = 0; d < 4; ++d) edges += !at({x + kDx4[d], y + kDy4[d]});
    }
  return static_cast<double>(edges) * cell_size();
}

PlanarCompact& PlanarCompact::add_disk(cplx center, double radius) {
  const Cell lo = cell_of(center - cplx(radius, radius)), hi = cell_of(center + cplx(radius, radius));
  for (int y = std::max(0, lo.y); y <= std::min(h_ - 1, hi.y); ++y)
    for (int x = std::max(0, lo.x); x <= std::min(w_ - 1, hi.x); ++x)
      if (std::abs(center_of({x, y}) - center) <= radius) mask_[index({x, y})] = 1;
  return *this;
}

PlanarCompact& PlanarCompact::add_annulus(cplx center, double inner, double outer) {
  const Cell lo = cell_of(center - cplx(outer, outer)), hi = cell_of(center + cplx(outer, outer));
  for (int y = std::max(0, lo.y); y <= std::min(h_ - 1, hi.y); ++y)
    for (int x = std::max(0, lo.x); x <= std::min(w_ - 1, hi.x); ++x) {
      const double d = std::abs(center_of({x, y}) - center);
      if (d <= outer && d >= inner) mask_[index({x, y})] = 1;
    }
  return *this;
}

namespace {

// 4-connected raster of the segment between two cell centers
std::vector<Cell> raster_segment(Cell a, Cell b) {
  std::vector<Cell> out{a};
  const int steps = 4 * (std::abs(b.x - a.x) + std::abs(b.y - a.y)) + 1;
  for (int i = 1; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const Cell c{static_cast<int>(std::lround(a.x + t * (b.x - a.x))),
                 static_cast<int>(std::lround(a.y + t * (b.y - a.y)))};
    Cell& last = out.back();
    if (c == last) continue;
    if (c.x != last.x && c.y != last.y) out.push_back({c.x, last.y});
    out.push_back(c);
  }
  return out;
}

}  // namespace

PlanarCompact& PlanarCompact::add_segment(cplx a, cplx b) {
  for (Cell c : raster_segment(cell_of(a), cell_of(b)))
    if (in_grid(c)) mask_[index(c)] = 1;
  return *this;
}

PlanarCompact& PlanarCompact::unite(const PlanarCompact& other) {
  if (!(other.box_ == box_) || other.res_ != res_) throw DimensionMismatch("compacts live on different grids");
  for (std::size_t i = 0; i < mask_.size(); ++i) mask_[i] |= other.mask_[i];
  return *this;
}

void PlanarCompact::validate() const {
  if (count() == 0) throw InvalidArgument("compact is empty");
  for (int x = 0; x < w_; ++x)
    if (at({x, 0}) || at({x, h_ - 1})) throw InvalidArgument("compact touches the bounding-box margin");
  for (int y = 0; y < h_; ++y)
    if (at({0, y}) || at({w_ - 1, y})) throw InvalidArgument("compact touches the bounding-box margin");
}

bool PlanarCompact::subset_of(const PlanarCompact& other) const {
  if (!(other.box_ == box_) || other.res_ != res_) throw DimensionMismatch("compacts live on different grids");
  for (std::size_t i = 0; i < mask_.size(); ++i)
    if (mask_[i] && !other.mask_[i]) return false;
  return true;
}

std::vector<int> PlanarCompact::components() const {
  std::vector<int> label(mask_.size(), 0);
  int next = 0;
  std::vector<Cell> stack;
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    if (!mask_[i] || label[i]) continue;
    label[i] = ++next;
    stack.push_back(cell_at(i));
    while (!stack.empty()) {
      const Cell c = stack.back();
      stack.pop_back();
      for (int d = 0; d < 4; ++d) {
        const Cell n{c.x + kDx4[d], c.y + kDy4[d]};
        if (at(n) && !label[index(n)]) {
          label[index(n)] = next;
          stack.push_back(n);
        }
      }
    }
  }
  return label;
}

nlohmann::json PlanarCompact::sidecar() const {
  return {{"bbox", {box_.x0, box_.y0, box_.x1, box_.y1}}, {"resolution", res_}, {"width", w_}, {"height", h_}};
}

void PlanarCompact::write_pgm(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << "P5\n" << w_ << ' ' << h_ << "\n255\n";
  // top row is the largest imaginary part
  for (int y = h_ - 1; y >= 0; --y)
    for (int x = 0; x < w_; ++x) out.put(static_cast<char>(mask_[index({x, y})] ? 255 : 0));
  std::ofstream side(path + ".json");
  if (!side) throw FormatError("cannot write " + path + ".json");
  side.precision(17);
  side << sidecar().dump(2) << '\n';
}

PlanarCompact PlanarCompact::read_pgm(const std::string& path) {
  std::ifstream side(path + ".json");
  if (!side) throw FormatError("missing sidecar " + path + ".json");
  const nlohmann::json j = nlohmann::json::parse(side);
  const auto& b = j.at("bbox");
  PlanarCompact k({b.at(0), b.at(1), b.at(2), b.at(3)}, j.at("resolution").get<int>());
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  in.get();
  if (!in || magic != "P5" || maxval != 255) throw FormatError(path + " is not an 8-bit P5 image");
  if (w != k.w_ || h != k.h_) throw FormatError("image size disagrees with the sidecar");
  std::vector<char> raw(static_cast<std::size_t>(w) * h);
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!in) throw FormatError(path + " is truncated");
  std::size_t i = 0;
  for (int y = h - 1; y >= 0; --y)
    for (int x = 0; x < w; ++x) k.mask_[k.index({x, y})] = raw[i++] != 0;
  return k;
}

PlanarCompact poly_hull(const PlanarCompact& k) {
  const int w = k.width(), h = k.height();
  std::vector<std::uint8_t> outside(k.mask().size(), 0);
  std::vector<Cell> stack;
  auto seed = [&](Cell c) {
    if (!k.at(c) && !outside[k.index(c)]) {
      outside[k.index(c)] = 1;
      stack.push_back(c);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed({x, 0});
    seed({x, h - 1});
  }
  for (int y = 0; y < h; ++y) {
    seed({0, y});
    seed({w - 1, y});
  }
  while (!stack.empty()) {
    const Cell c = stack.back();
    stack.pop_back();
    for (int d = 0; d < 8; ++d) {
      const Cell n{c.x + kDx8[d], c.y + kDy8[d]};
      if (k.in_grid(n)) seed(n);
    }
  }
  PlanarCompact out = k;
  for (std::size_t i = 0; i < outside.size(); ++i)
    if (!outside[i]) out.set(k.cell_at(i));
  return out;
}

bool is_poly_convex(const PlanarCompact& k) { return poly_hull(k) == k; }

namespace {

bool on_ring(const PlanarCompact& k, Cell c) {
  return c.x == 0 || c.y == 0 || c.x == k.width() - 1 || c.y == k.height() - 1;
}

// 8-connected path from q to the box boundary through empty cells; prefers cells clear of K
std::vector<Cell> escape_corridor(const PlanarCompact& k, Cell q) {
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<long long> parent(k.mask().size(), -1);
    std::deque<Cell> queue{q};
    parent[k.index(q)] = static_cast<long long>(k.index(q));
    auto clear = [&](Cell c) {
      if (pass == 1) return true;
      for (int d = 0; d < 8; ++d)
        if (k.at({c.x + kDx8[d], c.y + kDy8[d]})) return false;
      return true;
    };
    while (!queue.empty()) {
      const Cell c = queue.front();
      queue.pop_front();
      if (on_ring(k, c)) {
        std::vector<Cell> path;
        for (long long i = static_cast<long long>(k.index(c));; i = parent[i]) {
          path.push_back(k.cell_at(static_cast<std::size_t>(i)));
          if (parent[i] == i) break;
        }
        return path;
      }
      for (int d = 0; d < 8; ++d) {
        const Cell n{c.x + kDx8[d], c.y + kDy8[d]};
        if (!k.in_grid(n) || k.at(n) || parent[k.index(n)] >= 0 || !clear(n)) continue;
        parent[k.index(n)] = static_cast<long long>(k.index(c));
        queue.push_back(n);
      }
    }
  }
  return {};
}

// shortest 4-connected path between two cells avoiding `blocked`, staying off the outer ring
std::vector<Cell> route(const PlanarCompact& k, Cell from, Cell to, const std::vector<std::uint8_t>& blocked) {
  std::vector<long long> parent(k.mask().size(), -1);
  std::deque<Cell> queue{from};
  parent[k.index(from)] = static_cast<long long>(k.index(from));
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    if (c == to) {
      std::vector<Cell> path;
      for (long long i = static_cast<long long>(k.index(c));; i = parent[i]) {
        path.push_back(k.cell_at(static_cast<std::size_t>(i)));
        if (parent[i] == i) break;
      }
      std::reverse(path.begin(), path.end());
      return path;
    }
    for (int d = 0; d < 4; ++d) {
      const Cell n{c.x + kDx4[d], c.y + kDy4[d]};
      if (!k.in_grid(n) || on_ring(k, n) || parent[k.index(n)] >= 0 || blocked[k.index(n)]) continue;
      parent[k.index(n)] = static_cast<long long>(k.index(c));
      queue.push_back(n);
    }
  }
  return {};
}

bool misses(const PlanarCompact& k, const std::vector<Cell>& q) {
  return std::none_of(q.begin(), q.end(), [&](Cell c) { return k.at(c); });
}

struct Run {
  std::size_t first, last;  // path indices of the cells outside K
};

}  // namespace

ConnectResult connect_avoiding_ex(const PlanarCompact& k_in, cplx p1, cplx p2, const std::vector<cplx>& q) {
  k_in.validate();
  ConnectResult res;
  PlanarCompact k = k_in;
  if (!is_poly_convex(k)) {
    k = poly_hull(k);
    res.hulled_input = true;
  }
  const Cell c1 = k.cell_of(p1), c2 = k.cell_of(p2);
  if (!k.at(c1) || !k.at(c2)) throw InvalidArgument("p1 and p2 must lie in K");

  std::vector<Cell> qcells;
  for (cplx z : q) {
    const Cell c = k.cell_of(z);
    if (!k.in_grid(c)) continue;  // outside the box, hence outside every hull built here
    if (k.at(c) || c == c1 || c == c2) throw QTooCloseToK("a point of Q falls in a cell of K at this resolution");
    qcells.push_back(c);
  }

  const auto labels = k.components();
  if (k.component_of(c1, labels) == k.component_of(c2, labels)) {
    res.k = k;
    res.unchanged = true;
    return res;
  }

  // escape corridors gamma_i from each q to the boundary, disjoint from K
  std::vector<std::uint8_t> corridor(k.mask().size(), 0), qblock(k.mask().size(), 0);
  for (Cell c : qcells) {
    const auto path = escape_corridor(k, c);
    if (path.empty()) throw QTooCloseToK("a point of Q is enclosed by K");
    for (Cell p : path) corridor[k.index(p)] = 1;
    for (int d = 0; d < 8; ++d) {
      const Cell n{c.x + kDx8[d], c.y + kDy8[d]};
      if (k.in_grid(n) && !k.at(n)) qblock[k.index(n)] = 1;
    }
    qblock[k.index(c)] = 1;
  }

  // candidate curve gamma from p1 to p2 missing Q
  std::vector<Cell> gamma = raster_segment(c1, c2);
  const bool straight_ok = std::all_of(gamma.begin(), gamma.end(), [&](Cell c) {
    return k.in_grid(c) && !on_ring(k, c) && !qblock[k.index(c)];
  });
  if (!straight_ok) gamma = route(k, c1, c2, qblock);
  if (gamma.empty()) throw NoPathAtResolution("no curve from p1 to p2 avoids Q at this resolution; refine the grid");
  res.path = gamma;

  std::vector<Run> runs;
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    if (k.at(gamma[i])) continue;
    std::size_t j = i;
    while (j + 1 < gamma.size() && !k.at(gamma[j + 1])) ++j;
    runs.push_back({i, j});
    i = j;
  }

  auto thickened = [&](const Run& r, bool thick) {
    PlanarCompact add(k.bbox(), k.resolution());
    for (std::size_t i = r.first; i <= r.last; ++i) {
      add.set(gamma[i]);
      if (!thick) continue;
      for (int d = 0; d < 4; ++d) {
        const Cell n{gamma[i].x + kDx4[d], gamma[i].y + kDy4[d]};
        if (k.in_grid(n) && !on_ring(k, n) && !corridor[k.index(n)] && !qblock[k.index(n)]) add.set(n);
      }
    }
    return add;
  };
  auto crosses = [&](const Run& r) {
    for (std::size_t i = r.first; i <= r.last; ++i)
      if (corridor[k.index(gamma[i])]) return true;
    return false;
  };

  // K_0 = K with Gamma, the runs that stay clear of every corridor
  PlanarCompact cur = k;
  std::vector<Run> excised;
  for (const Run& r : runs) {
    if (crosses(r)) {
      excised.push_back(r);
      continue;
    }
    PlanarCompact trial = poly_hull(PlanarCompact(cur).unite(thickened(r, true)));
    if (!misses(trial, qcells)) trial = poly_hull(PlanarCompact(cur).unite(thickened(r, false)));
    if (!misses(trial, qcells)) {
      excised.push_back(r);
      continue;
    }
    cur = std::move(trial);
  }
  res.excised_runs = static_cast<int>(excised.size());

  for (const Run& r : excised) {
    const Cell a = gamma[r.first - 1], b = gamma[r.last + 1];
    const auto lab = cur.components();
    if (cur.component_of(a, lab) == cur.component_of(b, lab)) {
      // the component already joins both ends, so it serves as the detour
      ++res.skipped_runs;
      continue;
    }
    PlanarCompact trial = poly_hull(PlanarCompact(cur).unite(thickened(r, true)));
    if (!misses(trial, qcells)) trial = poly_hull(PlanarCompact(cur).unite(thickened(r, false)));
    if (!misses(trial, qcells))
      throw NoPathAtResolution("joining a run would enclose a point of Q at this resolution; refine the grid");
    cur = std::move(trial);
  }

  const auto lab = cur.components();
  if (cur.component_of(c1, lab) != cur.component_of(c2, lab) || !misses(cur, qcells) || !is_poly_convex(cur))
    throw NoPathAtResolution("routed set fails its postconditions at this resolution");
  res.k = std::move(cur);
  return res;
}

PlanarCompact connect_avoiding(const PlanarCompact& k, cplx p1, cplx p2, const std::vector<cplx>& q) {
  return connect_avoiding_ex(k, p1, p2, q).k;
}

cplx ComplexLine::parameter(const CPoint& z) const { return inner(z - a, b) / inner(b, b); }

nlohmann::json Lemma2Report::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const ProbeCertificate& p : probes) {
    const char* s = p.status == ProbeCertificate::Status::Certified ? "certified"
                    : p.status == ProbeCertificate::Status::InHull  ? "in_hull"
                                                                    : "on_line_outside_hull";
    arr.push_back({{"status", s},
                   {"exponent", p.exponent},
                   {"degree", p.degree},
                   {"g_at_probe", p.g_at_probe},
                   {"g_sup", p.g_sup},
                   {"f_kind", p.f_kind}});
  }
  return {{"probes", arr}, {"all_consistent", all_consistent}};
}

namespace {

struct Separator {
  std::string kind;
  CPoint u;                // functional z -> sum z_i conj(u_i)
  std::vector<cplx> roots; // f(z) = prod (l(z) - root)
  double theta = 0;        // sup of |f| over the balls
  double at_q = 0;
  double ratio() const { return at_q / theta; }
  int degree() const { return static_cast<int>(roots.size()); }
  cplx eval(const CPoint& z) const {
    const cplx w = inner(z, u);
    cplx v = 1;
    for (cplx r : roots) v *= w - r;
    return v;
  }
};

double disc_sup(const std::vector<cplx>& roots, cplx center, double radius) {
  double sup = 0;
  constexpr int n = 512;
  for (int i = 0; i < n; ++i) {
    const cplx w = center + std::polar(radius, 2 * std::numbers::pi * i / n);
    cplx v = 1;
    for (cplx r : roots) v *= w - r;
    sup = std::max(sup, std::abs(v));
  }
  return sup;
}

Separator best_separator(const std::vector<Ball>& balls, const CPoint& q) {
  Separator best;
  CPoint centroid = CPoint::zero(2);
  for (const Ball& b : balls) centroid += b.center * (1.0 / balls.size());
  std::vector<CPoint> dirs;
  if ((q - centroid).norm() > 0) dirs.push_back((q - centroid) * (1.0 / (q - centroid).norm()));
  for (int i = 0; i < 256; ++i) dirs.push_back(halton_direction(2, i, 17));
  for (const CPoint& u : dirs) {
    std::vector<cplx> images;
    for (const Ball& b : balls) images.push_back(inner(b.center, u));
    const cplx lq = inner(q, u);
    std::vector<std::pair<std::string, std::vector<cplx>>> cands;
    cplx mean = 0;
    for (cplx w : images) mean += w / static_cast<double>(images.size());
    cands.push_back({"linear", {mean}});
    for (cplx w : images) cands.push_back({"linear", {w}});
    if (balls.size() > 1) cands.push_back({"lemniscate", images});
    for (auto& [kind, roots] : cands) {
      Separator s{kind, u, roots, 0, 0};
      for (std::size_t i = 0; i < balls.size(); ++i)
        s.theta = std::max(s.theta, roots.size() == 1 ? std::abs(images[i] - roots[0]) + balls[i].radius
                                                      : disc_sup(roots, images[i], balls[i].radius));
      cplx v = 1;
      for (cplx r : roots) v *= lq - r;
      s.at_q = std::abs(v);
      if (s.theta <= 0) continue;
      const bool better = best.theta == 0 || std::pow(s.ratio(), 1.0 / s.degree()) > std::pow(best.ratio(), 1.0 / best.degree());
      if (better) best = s;
    }
  }
  return best;
}

}  // namespace

Lemma2Report lemma2_line_check(const std::vector<Ball>& balls, const ComplexLine& line, const PlanarCompact& k_prime,
                               const std::vector<CPoint>& probes, int sup_samples) {
  if (line.b.norm() == 0) throw InvalidArgument("line direction must be nonzero");
  std::vector<std::vector<CPoint>> boundary;
  double h_scale = 0;
  for (const Ball& b : balls) {
    if (b.center.dim() != 2) throw DimensionMismatch("lemma2_line_check works in C^2");
    std::vector<CPoint> pts;
    for (const CPoint& v : sphere_samples(2, b.radius, sup_samples, 23)) pts.push_back(b.center + v);
    for (const CPoint& z : pts) h_scale = std::max(h_scale, std::abs(line.defining(z)));
    boundary.push_back(std::move(pts));
  }
  const PlanarCompact line_hull = poly_hull(k_prime);
  Lemma2Report rep;
  for (const CPoint& q : probes) {
    for (const Ball& b : balls)
      if (distance(q, b.center) <= b.radius) throw InvalidArgument("probe lies inside the ball union");
    ProbeCertificate pc;
    const cplx hq = line.defining(q);
    if (std::abs(hq) <= 1e-12 * (1 + q.norm()) * line.b.norm()) {
      pc.status = line_hull.contains(line.parameter(q)) ? ProbeCertificate::Status::InHull
                                                        : ProbeCertificate::Status::OffHullOnLine;
      rep.probes.push_back(pc);
      continue;
    }
    if (balls.empty()) {
      // h alone: it vanishes on K' and not at q
      pc.degree = 1;
      pc.g_at_probe = std::abs(hq);
      pc.f_kind = "none";
      rep.probes.push_back(pc);
      continue;
    }
    const Separator f = best_separator(balls, q);
    if (!(f.ratio() > 1.0))
      throw CertificateSearchExhausted("no separating polynomial found for a probe (it may lie in the hull)");
    // smallest k with |h(q)| |f(q)|^k > sup|h| theta^k, then confirmed against sampled sup |g|
    int k = std::max(0, static_cast<int>(std::ceil(std::log(h_scale / std::abs(hq)) / std::log(f.ratio()))));
    for (;; ++k) {
      const int degree = 1 + k * f.degree();
      if (degree > kMaxPolyDegree)
        throw CertificateSearchExhausted("certificate needs degree above " + std::to_string(kMaxPolyDegree));
      double sup = 0;
      for (const auto& pts : boundary)
        for (const CPoint& z : pts) sup = std::max(sup, std::abs(line.defining(z)) * std::pow(std::abs(f.eval(z)), k));
      const double gq = std::abs(hq) * std::pow(f.at_q, k);
      if (gq > sup * kSampleWidening) {
        pc.exponent = k;
        pc.degree = degree;
        pc.g_at_probe = gq;
        pc.g_sup = sup;
        pc.f_kind = f.kind;
        break;
      }
    }
    rep.probes.push_back(pc);
  }
  return rep;
}

}  // namespace fbd
