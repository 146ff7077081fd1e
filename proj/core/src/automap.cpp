#include "fbd/automap.hpp"

#include <type_traits>

namespace fbd {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_axes(int dim, int axis, int source) {
  if (dim < 1 || dim > kMaxDim) throw DimensionMismatch("shear dimension out of range");
  if (axis < 0 || axis >= dim || source < 0 || source >= dim || axis == source)
    throw InvalidArgument("shear needs distinct axis and source coordinates");
}

}  // namespace

AutoMap AutoMap::affine(const CMatrix& m, const CPoint& b) {
  if (m.dim() != b.dim()) throw DimensionMismatch("affine matrix/offset dimension mismatch");
  CMatrix inv = m.inverse(1e-13);  // throws SingularDifferential
  return AutoMap(Affine{m, b, inv});
}

AutoMap AutoMap::shear(int dim, int axis, int source, Poly g) {
  check_axes(dim, axis, source);
  return AutoMap(Shear{dim, axis, source, std::move(g)});
}

AutoMap AutoMap::overshear(int dim, int axis, int source, Poly h, Poly g) {
  check_axes(dim, axis, source);
  return AutoMap(Overshear{dim, axis, source, std::move(h), std::move(g)});
}

AutoMap AutoMap::henon(cplx a, cplx c) {
  if (a == cplx(0)) throw InvalidArgument("Henon map requires a != 0");
  return AutoMap(Henon{a, c});
}

AutoMap AutoMap::half_scale(int dim) {
  if (dim < 1 || dim > kMaxDim) throw DimensionMismatch("dimension out of range");
  return AutoMap(HalfScale{dim});
}

AutoMap AutoMap::compose(std::vector<AutoMap> maps) {
  if (maps.empty()) throw InvalidArgument("compose: empty list (use identity)");
  const int d = maps.front().dim();
  for (const auto& m : maps)
    if (m.dim() != d) throw DimensionMismatch("compose: mixed dimensions");
  return AutoMap(Composition{d, std::make_shared<const std::vector<AutoMap>>(std::move(maps))});
}

AutoMap AutoMap::identity(int dim) {
  if (dim < 1 || dim > kMaxDim) throw DimensionMismatch("dimension out of range");
  return AutoMap(Composition{dim, std::make_shared<const std::vector<AutoMap>>()});
}

int AutoMap::dim() const {
  return std::visit(overloaded{[](const Affine& a) { return a.matrix.dim(); },
                               [](const Shear& s) { return s.dim; },
                               [](const Overshear& s) { return s.dim; },
                               [](const Henon&) { return 2; },
                               [](const HalfScale& h) { return h.dim; },
                               [](const Composition& c) { return c.dim; }},
                    v_);
}

std::string AutoMap::type_name() const {
  return std::visit(overloaded{[](const Affine&) { return "affine"; },
                               [](const Shear&) { return "shear"; },
                               [](const Overshear&) { return "overshear"; },
                               [](const Henon&) { return "henon"; },
                               [](const HalfScale&) { return "halfscale"; },
                               [](const Composition&) { return "composition"; }},
                    v_);
}

void AutoMap::check(const CPoint& z) const {
  if (z.dim() != dim())
    throw DimensionMismatch("point of dimension " + std::to_string(z.dim()) + " passed to map of dimension " +
                            std::to_string(dim()));
}

CPoint AutoMap::apply(const CPoint& z) const {
  check(z);
  return std::visit(overloaded{[&](const Affine& a) { return a.matrix * z + a.offset; },
                               [&](const Shear& s) {
                                 CPoint y = z;
                                 y[s.axis] += s.g(z[s.source]);
                                 return y;
                               },
                               [&](const Overshear& s) {
                                 CPoint y = z;
                                 const cplx t = z[s.source];
                                 y[s.axis] = std::exp(s.h(t)) * z[s.axis] + s.g(t);
                                 return y;
                               },
                               [&](const Henon& h) { return CPoint{z[0] * z[0] + h.c - h.a * z[1], z[0]}; },
                               [&](const HalfScale&) { return z * 0.5; },
                               [&](const Composition& c) {
                                 CPoint y = z;
                                 for (const auto& m : *c.maps) y = m.apply(y);
                                 return y;
                               }},
                    v_);
}

CPoint AutoMap::apply_inverse(const CPoint& z) const {
  check(z);
  return std::visit(overloaded{[&](const Affine& a) { return a.inverse_matrix * (z - a.offset); },
                               [&](const Shear& s) {
                                 CPoint y = z;
                                 y[s.axis] -= s.g(z[s.source]);
                                 return y;
                               },
                               [&](const Overshear& s) {
                                 CPoint y = z;
                                 const cplx t = z[s.source];
                                 y[s.axis] = (z[s.axis] - s.g(t)) * std::exp(-s.h(t));
                                 return y;
                               },
                               [&](const Henon& h) {
                                 return CPoint{z[1], (z[1] * z[1] + h.c - z[0]) / h.a};
                               },
                               [&](const HalfScale&) { return z * 2.0; },
                               [&](const Composition& c) {
                                 CPoint y = z;
                                 for (auto it = c.maps->rbegin(); it != c.maps->rend(); ++it) y = it->apply_inverse(y);
                                 return y;
                               }},
                    v_);
}

CPoint AutoMap::apply_diff(const CPoint& x, const CPoint& dx) const {
  check(x);
  check(dx);
  return std::visit(overloaded{[&](const Affine& a) { return a.matrix * dx; },
                               [&](const Shear& s) {
                                 CPoint d = dx;
                                 d[s.axis] += s.g.diff(x[s.source], dx[s.source]);
                                 return d;
                               },
                               [&](const Overshear& s) {
                                 CPoint d = dx;
                                 const cplx t = x[s.source], dt = dx[s.source];
                                 const cplx h0 = s.h(t);
                                 const cplx dh = s.h.diff(t, dt);
                                 d[s.axis] = std::exp(h0 + dh) * dx[s.axis] + x[s.axis] * std::exp(h0) * cexpm1(dh) +
                                             s.g.diff(t, dt);
                                 return d;
                               },
                               [&](const Henon& h) {
                                 return CPoint{dx[0] * (2.0 * x[0] + dx[0]) - h.a * dx[1], dx[0]};
                               },
                               [&](const HalfScale&) { return dx * 0.5; },
                               [&](const Composition& c) {
                                 CPoint base = x, d = dx;
                                 for (const auto& m : *c.maps) {
                                   d = m.apply_diff(base, d);
                                   base = m.apply(base);
                                 }
                                 return d;
                               }},
                    v_);
}

CMatrix AutoMap::jacobian_at(const CPoint& z) const {
  check(z);
  return std::visit(overloaded{[&](const Affine& a) { return a.matrix; },
                               [&](const Shear& s) {
                                 CMatrix j = CMatrix::identity(s.dim);
                                 j(s.axis, s.source) = s.g.jet(z[s.source]).deriv;
                                 return j;
                               },
                               [&](const Overshear& s) {
                                 CMatrix j = CMatrix::identity(s.dim);
                                 const PolyJet hj = s.h.jet(z[s.source]);
                                 const PolyJet gj = s.g.jet(z[s.source]);
                                 const cplx e = std::exp(hj.value);
                                 j(s.axis, s.axis) = e;
                                 j(s.axis, s.source) = hj.deriv * e * z[s.axis] + gj.deriv;
                                 return j;
                               },
                               [&](const Henon& h) { return CMatrix(2, {2.0 * z[0], -h.a, 1.0, 0.0}); },
                               [&](const HalfScale& h) { return CMatrix::scalar(h.dim, 0.5); },
                               [&](const Composition& c) {
                                 CMatrix j = CMatrix::identity(c.dim);
                                 CPoint y = z;
                                 for (const auto& m : *c.maps) {
                                   j = m.jacobian_at(y) * j;
                                   y = m.apply(y);
                                 }
                                 return j;
                               }},
                    v_);
}

namespace {
Poly negated(const Poly& p) {
  std::vector<cplx> c = p.coeffs();
  for (auto& x : c) x = -x;
  return Poly::factored(p.roots(), p.nodes(), std::move(c));
}
}  // namespace

AutoMap AutoMap::inverse() const {
  return std::visit(
      overloaded{[&](const Affine& a) {
                   return AutoMap(Affine{a.inverse_matrix, -(a.inverse_matrix * a.offset), a.matrix});
                 },
                 [&](const Shear& s) { return AutoMap(Shear{s.dim, s.axis, s.source, negated(s.g)}); },
                 [&](const Overshear& s) {
                   // z -> e^{-h} z - e^{-h} g is not polynomial-form; express as shear then scale.
                   std::vector<AutoMap> parts;
                   parts.push_back(AutoMap(Shear{s.dim, s.axis, s.source, negated(s.g)}));
                   parts.push_back(
                       AutoMap(Overshear{s.dim, s.axis, s.source, negated(s.h), Poly::constant(0.0)}));
                   return compose(std::move(parts));
                 },
                 [&](const Henon& h) {
                   // (z, w) -> (w, (w^2 + c - z) / a) = swap o shear, written as an affine/shear chain
                   std::vector<AutoMap> parts;
                   parts.push_back(AutoMap::linear(CMatrix(2, {0.0, 1.0, -1.0 / h.a, 0.0})));
                   parts.push_back(
                       AutoMap(Shear{2, 1, 0, Poly::dense({h.c / h.a, 0.0, 1.0 / h.a})}));
                   return compose(std::move(parts));
                 },
                 [&](const HalfScale& h) { return AutoMap::linear(CMatrix::scalar(h.dim, 2.0)); },
                 [&](const Composition& c) {
                   if (c.maps->empty()) return *this;
                   std::vector<AutoMap> inv;
                   for (auto it = c.maps->rbegin(); it != c.maps->rend(); ++it) inv.push_back(it->inverse());
                   return compose(std::move(inv));
                 }},
      v_);
}

std::size_t AutoMap::leaf_count() const {
  if (const auto* c = std::get_if<Composition>(&v_)) {
    std::size_t n = 0;
    for (const auto& m : *c->maps) n += m.leaf_count();
    return n;
  }
  return 1;
}

AutoMap compose_range(const std::vector<AutoMap>& maps, int i, int j) {
  if (i < 1) throw IndexOutOfRange("compose_range: i must be >= 1");
  const int dim = maps.empty() ? 2 : maps.front().dim();
  if (i > j) return AutoMap::identity(dim);
  if (j > static_cast<int>(maps.size())) throw IndexOutOfRange("compose_range: j beyond sequence length");
  if (i == j) return maps[i - 1];
  return AutoMap::compose(std::vector<AutoMap>(maps.begin() + (i - 1), maps.begin() + j));
}

// ---- JSON ----

nlohmann::json cplx_to_json(cplx c) { return nlohmann::json::array({c.real(), c.imag()}); }

cplx cplx_from_json(const nlohmann::json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) throw FormatError("complex number must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

nlohmann::json point_to_json(const CPoint& p) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < p.dim(); ++i) a.push_back(cplx_to_json(p[i]));
  return a;
}

CPoint point_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError("point must be an array of complex numbers");
  CPoint p(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) p[static_cast<int>(i)] = cplx_from_json(j[i]);
  return p;
}

nlohmann::json matrix_to_json(const CMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < m.dim(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.dim(); ++c) row.push_back(cplx_to_json(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

CMatrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw FormatError("matrix must be a non-empty array of rows");
  CMatrix m(static_cast<int>(j.size()));
  for (int r = 0; r < m.dim(); ++r) {
    if (j[r].size() != j.size()) throw FormatError("matrix must be square");
    for (int c = 0; c < m.dim(); ++c) m(r, c) = cplx_from_json(j[r][c]);
  }
  return m;
}

nlohmann::json poly_to_json(const Poly& p) {
  nlohmann::json j;
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& c : p.coeffs()) coeffs.push_back(cplx_to_json(c));
  j["coeffs"] = coeffs;
  bool dense = p.roots().empty();
  for (const auto& n : p.nodes()) dense = dense && n == cplx(0);
  if (!dense) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : p.nodes()) nodes.push_back(cplx_to_json(n));
    j["nodes"] = nodes;
    nlohmann::json roots = nlohmann::json::array();
    for (const auto& r : p.roots())
      roots.push_back({{"at", cplx_to_json(r.at)}, {"mult", r.mult}, {"scale", r.inv_scale}});
    j["roots"] = roots;
  }
  return j;
}

Poly poly_from_json(const nlohmann::json& j) {
  if (j.is_array()) {  // bare coefficient list
    std::vector<cplx> c;
    for (const auto& x : j) c.push_back(cplx_from_json(x));
    return Poly::dense(std::move(c));
  }
  std::vector<cplx> coeffs, nodes;
  std::vector<RootFactor> roots;
  for (const auto& x : j.at("coeffs")) coeffs.push_back(cplx_from_json(x));
  if (j.contains("nodes"))
    for (const auto& x : j["nodes"]) nodes.push_back(cplx_from_json(x));
  if (j.contains("roots"))
    for (const auto& r : j["roots"])
      roots.push_back({cplx_from_json(r.at("at")), r.at("mult").get<int>(), r.value("scale", 1.0)});
  return Poly::factored(std::move(roots), std::move(nodes), std::move(coeffs));
}

nlohmann::json AutoMap::to_json() const {
  return std::visit(
      overloaded{[](const Affine& a) -> nlohmann::json {
                   return {{"type", "affine"}, {"matrix", matrix_to_json(a.matrix)}, {"offset", point_to_json(a.offset)}};
                 },
                 [](const Shear& s) -> nlohmann::json {
                   return {{"type", "shear"}, {"dim", s.dim}, {"axis", s.axis}, {"source", s.source}, {"g", poly_to_json(s.g)}};
                 },
                 [](const Overshear& s) -> nlohmann::json {
                   return {{"type", "overshear"}, {"dim", s.dim},          {"axis", s.axis},
                           {"source", s.source}, {"h", poly_to_json(s.h)}, {"g", poly_to_json(s.g)}};
                 },
                 [](const Henon& h) -> nlohmann::json {
                   return {{"type", "henon"}, {"a", cplx_to_json(h.a)}, {"c", cplx_to_json(h.c)}};
                 },
                 [](const HalfScale& h) -> nlohmann::json { return {{"type", "halfscale"}, {"dim", h.dim}}; },
                 [](const Composition& c) -> nlohmann::json {
                   nlohmann::json maps = nlohmann::json::array();
                   for (const auto& m : *c.maps) maps.push_back(m.to_json());
                   return {{"type", "composition"}, {"dim", c.dim}, {"maps", maps}};
                 }},
      v_);
}

AutoMap AutoMap::from_json(const nlohmann::json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "affine") return affine(matrix_from_json(j.at("matrix")), point_from_json(j.at("offset")));
    if (type == "shear")
      return shear(j.value("dim", 2), j.at("axis").get<int>(), j.value("source", j.at("axis").get<int>() == 0 ? 1 : 0),
                   poly_from_json(j.at("g")));
    if (type == "overshear")
      return overshear(j.value("dim", 2), j.at("axis").get<int>(),
                       j.value("source", j.at("axis").get<int>() == 0 ? 1 : 0), poly_from_json(j.at("h")),
                       poly_from_json(j.at("g")));
    if (type == "henon") return henon(cplx_from_json(j.at("a")), cplx_from_json(j.at("c")));
    if (type == "halfscale") return half_scale(j.value("dim", 2));
    if (type == "composition") {
      std::vector<AutoMap> maps;
      for (const auto& m : j.at("maps")) maps.push_back(from_json(m));
      if (maps.empty()) return identity(j.value("dim", 2));
      return compose(std::move(maps));
    }
    throw FormatError("unknown map type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed map JSON: ") + e.what());
  }
}

}  // namespace fbd
