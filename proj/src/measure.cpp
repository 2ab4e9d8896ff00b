#include "invym/measure.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "invym/error.hpp"

namespace invym {
namespace {

void merge_into(std::vector<Atom>& atoms, const Atom& atom) {
  for (Atom& existing : atoms) {
    if (frob_norm(existing.location - atom.location) <= AtomicMeasure::kMergeTolerance) {
      existing.weight += atom.weight;
      return;
    }
  }
  atoms.push_back(atom);
}

}  // namespace

AtomicMeasure::AtomicMeasure(std::vector<Atom> atoms) {
  if (atoms.empty()) throw InvalidMeasure("atomic measure needs at least one atom");
  const int n = atoms.front().location.dim();
  double mass = 0.0;
  for (const Atom& a : atoms) {
    if (a.location.dim() != n) throw InvalidMeasure("atoms of different dimension");
    if (!std::isfinite(a.weight) || a.weight < 0.0) {
      throw InvalidMeasure("atom weights must be finite and nonnegative");
    }
    if (!a.location.all_finite()) throw InvalidMeasure("atom location not finite");
    mass += a.weight;
  }
  if (std::abs(mass - 1.0) > kMassTolerance) {
    throw InvalidMeasure("weights sum to " + std::to_string(mass) + ", expected 1");
  }
  atoms_.reserve(atoms.size());
  for (const Atom& a : atoms) {
    if (a.weight > 0.0) merge_into(atoms_, a);
  }
}

double AtomicMeasure::total_mass() const {
  double s = 0.0;
  for (const Atom& a : atoms_) s += a.weight;
  return s;
}

ExtReal pair(const AtomicMeasure& nu, const TestFn& v) {
  ExtReal total = 0.0;
  for (const Atom& a : nu.atoms()) {
    total = total + v(a.location).scaled(a.weight);
  }
  return total;
}

Mat first_moment(const AtomicMeasure& nu) {
  Mat m = Mat::zero(nu.dim());
  for (const Atom& a : nu.atoms()) m += a.location * a.weight;
  return m;
}

AtomicMeasure hat_pushforward(const AtomicMeasure& nu) {
  std::vector<Atom> out;
  out.reserve(nu.size());
  for (const Atom& a : nu.atoms()) {
    auto inv = try_invert(a.location);
    if (!inv) {
      throw SingularAtom("atom " + a.location.to_string() +
                         " is singular; hat pushforward undefined");
    }
    out.push_back({*inv, a.weight});
  }
  return AtomicMeasure(std::move(out));
}

AtomicMeasure truncate(const AtomicMeasure& nu, const CutoffFn& phi) {
  if (phi.kind() != CutoffKind::kPhiRho) {
    throw InvalidArgument("truncate expects a Phi_rho cut-off");
  }
  std::vector<Atom> out;
  double remainder = 0.0;
  for (const Atom& a : nu.atoms()) {
    const double keep = phi(a.location);
    if (keep > 0.0) out.push_back({a.location, a.weight * keep});
    remainder += a.weight * (1.0 - keep);
  }
  if (remainder > 0.0) out.push_back({Mat::identity(nu.dim()), remainder});
  return AtomicMeasure(std::move(out));
}

AtomicMeasure mixture(std::span<const std::pair<double, AtomicMeasure>> parts) {
  std::vector<Atom> out;
  for (const auto& [lambda, nu] : parts) {
    if (lambda < 0.0) throw InvalidMeasure("negative mixture coefficient");
    for (const Atom& a : nu.atoms()) out.push_back({a.location, lambda * a.weight});
  }
  return AtomicMeasure(std::move(out));
}

bool measures_equal(const AtomicMeasure& nu, const AtomicMeasure& mu,
                    std::span<const TestFn> family, double tol) {
  if (family.empty()) throw InvalidArgument("measures_equal needs a nonempty family");
  for (const TestFn& v : family) {
    const ExtReal a = pair(nu, v), b = pair(mu, v);
    if (a.is_infinite() || b.is_infinite()) {
      if (!(a == b)) return false;
      continue;
    }
    if (std::abs(a.value() - b.value()) > tol) return false;
  }
  return true;
}

Mesh::Mesh(int dim, int cells_per_axis) : dim_(dim), cells_per_axis_(cells_per_axis) {
  if (dim != 1 && dim != 2) throw InvalidArgument("mesh dimension must be 1 or 2");
  if (cells_per_axis < 1 || !std::has_single_bit(static_cast<unsigned>(cells_per_axis))) {
    throw InvalidArgument("cells per axis must be a power of two, got " +
                          std::to_string(cells_per_axis));
  }
}

std::size_t Mesh::cell_count() const {
  const auto n = static_cast<std::size_t>(cells_per_axis_);
  return dim_ == 1 ? n : n * n;
}

double Mesh::cell_volume() const { return 1.0 / static_cast<double>(cell_count()); }

std::array<double, 2> Mesh::cell_origin(std::size_t index) const {
  const double h = cell_size();
  const auto n = static_cast<std::size_t>(cells_per_axis_);
  if (dim_ == 1) return {h * static_cast<double>(index), 0.0};
  return {h * static_cast<double>(index % n), h * static_cast<double>(index / n)};
}

YoungMeasureField::YoungMeasureField(Mesh mesh, std::vector<AtomicMeasure> measures)
    : mesh_(mesh), measures_(std::move(measures)) {
  if (measures_.size() != mesh_.cell_count()) {
    throw InvalidMeasure("field has " + std::to_string(measures_.size()) +
                         " measures for " + std::to_string(mesh_.cell_count()) + " cells");
  }
  const int n = measures_.front().dim();
  for (const auto& nu : measures_) {
    if (nu.dim() != n) throw InvalidMeasure("cell measures of different dimension");
  }
}

YoungMeasureField YoungMeasureField::constant(Mesh mesh, const AtomicMeasure& nu) {
  return YoungMeasureField(mesh, std::vector<AtomicMeasure>(mesh.cell_count(), nu));
}

Moments moment_pq(const YoungMeasureField& field, double p, double q) {
  return moment_with_penalty(field, p, inverse_power(q));
}

Moments moment_with_penalty(const YoungMeasureField& field, double p, const TestFn& penalty) {
  Moments m;
  const double vol = field.mesh().cell_volume();
  for (const AtomicMeasure& nu : field.measures()) {
    double cell_p = 0.0, cell_q = 0.0;
    for (const Atom& a : nu.atoms()) {
      if (is_singular(a.location)) return Moments::make_infinite();
      const ExtReal pen = penalty(a.location);
      if (pen.is_infinite()) return Moments::make_infinite();
      cell_p += a.weight * std::pow(frob_norm(a.location), p);
      cell_q += a.weight * pen.value();
    }
    m.p_moment += vol * cell_p;
    m.q_moment += vol * cell_q;
  }
  return m;
}

AtomicMeasure homogenize(const YoungMeasureField& field) {
  const double lambda = field.mesh().cell_volume() / field.mesh().domain_volume();
  std::vector<std::pair<double, AtomicMeasure>> parts;
  parts.reserve(field.measures().size());
  for (const AtomicMeasure& nu : field.measures()) parts.emplace_back(lambda, nu);
  return mixture(parts);
}

ClassReport classify(const YoungMeasureField& field, double p, double q) {
  ClassReport r;
  const double lambda = field.mesh().cell_volume() / field.mesh().domain_volume();
  for (const AtomicMeasure& nu : field.measures()) {
    for (const Atom& a : nu.atoms()) {
      if (is_singular(a.location)) {
        r.inv_mass_deficit += lambda * a.weight;
        r.positive_det_mass_deficit += lambda * a.weight;
      } else if (!(a.location.det() > 0.0)) {
        r.positive_det_mass_deficit += lambda * a.weight;
      }
    }
  }
  const Moments m = moment_pq(field, p, q);
  if (m.infinite) {
    r.moment_p = ExtReal::infinity();
    r.moment_negq = ExtReal::infinity();
  } else {
    r.moment_p = m.p_moment;
    r.moment_negq = m.q_moment;
  }
  r.in_Ypq = r.inv_mass_deficit == 0.0 && !m.infinite;
  r.in_Ypq_plus = r.in_Ypq && r.positive_det_mass_deficit == 0.0;
  return r;
}

}  // namespace invym
