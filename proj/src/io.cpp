#include "invym/io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include "invym/error.hpp"

namespace invym {
namespace {

std::string fmt(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "infinite" : "-infinite");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_entries(std::ostringstream& os, const Mat& a) {
  for (double e : a.entries()) os << ',' << fmt(e);
}

std::string matrix_header(int n, const char* prefix) {
  std::string h;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) h += "," + std::string(prefix) + std::to_string(i) + std::to_string(j);
  }
  return h;
}

json numbers(const std::vector<double>& xs) {
  json out = json::array();
  for (double x : xs) out.push_back(number_to_json(x));
  return out;
}

}  // namespace

json measure_to_json(const AtomicMeasure& nu) {
  json out = json::array();
  for (const Atom& a : nu.atoms()) {
    out.push_back({{"weight", number_to_json(a.weight)}, {"location", mat_to_json(a.location)}});
  }
  return out;
}

AtomicMeasure measure_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw InvalidArgument("measure must be a nonempty array of atoms");
  std::vector<Atom> atoms;
  for (const json& a : j) {
    require_known_keys(a, {"weight", "location"}, "atom");
    if (!a.contains("location")) throw InvalidArgument("atom: missing 'location'");
    atoms.push_back({mat_from_json(a.at("location")), get_number(a, "weight")});
  }
  return AtomicMeasure(std::move(atoms));
}

json field_to_json(const YoungMeasureField& field) {
  json cells = json::array();
  for (const AtomicMeasure& nu : field.measures()) cells.push_back(measure_to_json(nu));
  return {{"mesh", {{"dim", field.mesh().dim()}, {"cells", field.mesh().cells_per_axis()}}},
          {"cells", cells}};
}

YoungMeasureField field_from_json(const json& j) {
  require_known_keys(j, {"mesh", "cells", "constant"}, "field");
  if (!j.is_object() || !j.contains("mesh")) throw InvalidArgument("field: missing 'mesh'");
  const json& m = j.at("mesh");
  require_known_keys(m, {"dim", "cells"}, "field.mesh");
  const Mesh mesh(get_int(m, "dim", 1), get_int(m, "cells", 1));
  if (j.contains("constant") == j.contains("cells")) {
    throw InvalidArgument("field: give exactly one of 'cells' or 'constant'");
  }
  if (j.contains("constant")) {
    return YoungMeasureField::constant(mesh, measure_from_json(j.at("constant")));
  }
  const json& cells = j.at("cells");
  if (!cells.is_array() || cells.size() != mesh.cell_count()) {
    throw InvalidArgument("field: 'cells' must list " + std::to_string(mesh.cell_count()) +
                          " measures");
  }
  std::vector<AtomicMeasure> measures;
  for (const json& c : cells) measures.push_back(measure_from_json(c));
  return YoungMeasureField(mesh, std::move(measures));
}

GradientField deformation_from_json(const json& j) {
  require_known_keys(j, {"affine", "nodes"}, "u_h");
  if (!j.is_object() || j.contains("affine") == j.contains("nodes")) {
    throw InvalidArgument("u_h: give exactly one of 'affine' or 'nodes'");
  }
  if (j.contains("affine")) return GradientField::affine(mat_from_json(j.at("affine")));
  const json& nodes = j.at("nodes");
  if (!nodes.is_array() || nodes.size() < 2) throw InvalidArgument("u_h: 'nodes' too short");
  if (nodes.front().is_number()) {
    std::vector<double> y;
    for (const json& v : nodes) {
      if (!v.is_number()) throw InvalidArgument("u_h: 1D nodes must be numbers");
      y.push_back(v.get<double>());
    }
    return interpolate_p1(y);
  }
  std::vector<Vec> y;
  for (const json& v : nodes) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw InvalidArgument("u_h: 2D nodes must be [y1, y2] pairs");
    }
    y.push_back(Vec{v[0].get<double>(), v[1].get<double>()});
  }
  const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(y.size()))));
  if (static_cast<std::size_t>(side) * side != y.size()) {
    throw InvalidArgument("u_h: 2D node count must be a square");
  }
  return interpolate_p1(side - 1, y);
}

json estimate_to_json(const EnvelopeEstimate& est) {
  json out{{"method", est.method},
           {"F", mat_to_json(est.F)},
           {"rho_tilde", number_to_json(est.rho_tilde)},
           {"value_upper", number_to_json(est.value_upper)}};
  if (est.value_exact) out["value_exact"] = number_to_json(*est.value_exact);
  if (est.witness_measure) out["witness"] = {{"kind", "measure"},
                                             {"atoms", measure_to_json(*est.witness_measure)}};
  if (est.witness_field) {
    out["witness"] = {{"kind", "field"},
                      {"pieces", est.witness_field->size()},
                      {"sup_gradient", number_to_json(est.witness_field->sup_gradient_norm())},
                      {"sup_inverse", number_to_json(est.witness_field->sup_inverse_norm())}};
  }
  return out;
}

json certificate_to_json(const Certificate& cert) {
  json checks = json::array();
  for (const Check& c : cert.checks) {
    checks.push_back({{"name", c.name},
                      {"status", to_string(c.status)},
                      {"residual", number_to_json(c.residual)},
                      {"note", c.note}});
  }
  return {{"theorem", cert.theorem},
          {"verdict", to_string(cert.verdict)},
          {"checks", checks},
          {"data", cert.data}};
}

json relax_to_json(const RelaxSolution& sol, double p, double q) {
  const ClassReport cls = classify(sol.field, p, q);
  return {{"energy", number_to_json(sol.energy)},
          {"iterations", sol.iterations},
          {"converged", sol.converged},
          {"kkt_residual", number_to_json(sol.kkt_residual)},
          {"energy_history", numbers(sol.energy_history)},
          {"moment_residual_history", numbers(sol.moment_residual_history)},
          {"classification",
           {{"moment_p", number_to_json(cls.moment_p.value())},
            {"moment_negq", number_to_json(cls.moment_negq.value())},
            {"inv_mass_deficit", number_to_json(cls.inv_mass_deficit)},
            {"positive_det_mass_deficit", number_to_json(cls.positive_det_mass_deficit)},
            {"in_Ypq", cls.in_Ypq},
            {"in_Ypq_plus", cls.in_Ypq_plus}}},
          {"field", field_to_json(sol.field)}};
}

json generation_to_json(const GenerationReport& report) {
  json series = json::array();
  for (const GenerationSeries& s : report.series) {
    series.push_back({{"v", s.v_name},
                      {"g", s.g_name},
                      {"k", s.k},
                      {"errors", numbers(s.errors)},
                      {"limit", number_to_json(s.limit)},
                      {"slope", number_to_json(s.slope)},
                      {"decays", s.decays}});
  }
  return {{"series", series},
          {"det_positive", report.det_positive},
          {"sup_gradient", number_to_json(report.sup_gradient)},
          {"sup_inverse", number_to_json(report.sup_inverse)}};
}

std::string measure_csv(const AtomicMeasure& nu) {
  std::ostringstream os;
  os << "atom,weight" << matrix_header(nu.dim(), "s") << '\n';
  std::size_t i = 0;
  for (const Atom& a : nu.atoms()) {
    os << i++ << ',' << fmt(a.weight);
    write_entries(os, a.location);
    os << '\n';
  }
  return os.str();
}

std::string field_csv(const YoungMeasureField& field) {
  std::ostringstream os;
  os << "cell,x0,y0,atom,weight" << matrix_header(field.matrix_dim(), "s") << '\n';
  for (std::size_t c = 0; c < field.mesh().cell_count(); ++c) {
    const auto [x0, y0] = field.mesh().cell_origin(c);
    std::size_t i = 0;
    for (const Atom& a : field.cell(c).atoms()) {
      os << c << ',' << fmt(x0) << ',' << fmt(y0) << ',' << i++ << ',' << fmt(a.weight);
      write_entries(os, a.location);
      os << '\n';
    }
  }
  return os.str();
}

std::string gradient_field_csv(const GradientField& field) {
  std::ostringstream os;
  const int n = field.dim();
  os << "piece,volume,cx,cy" << matrix_header(n, "g");
  for (int i = 0; i < n; ++i) os << ",b" << i;
  os << '\n';
  for (std::size_t p = 0; p < field.size(); ++p) {
    const Piece& piece = field.pieces()[p];
    const Point c = field.centroid(p);
    os << p << ',' << fmt(field.volume(p)) << ',' << fmt(c[0]) << ',' << fmt(c[1]);
    write_entries(os, piece.gradient);
    for (int i = 0; i < n; ++i) os << ',' << fmt(piece.shift[i]);
    os << '\n';
  }
  return os.str();
}

}  // namespace invym
