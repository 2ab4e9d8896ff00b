#include "invym/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "invym/error.hpp"

namespace invym {
namespace {

constexpr double kSingularThreshold = 1e-12;
constexpr double kRankOneTolerance = 1e-9;

void check_dim(int n) {
  if (n < 1 || n > Mat::kMaxDim) {
    throw InvalidArgument("matrix dimension must be 1, 2 or 3, got " +
                          std::to_string(n));
  }
}

void check_same(const Mat& a, const Mat& b) {
  if (a.dim() != b.dim()) {
    throw InvalidArgument("matrix dimensions differ: " +
                          std::to_string(a.dim()) + " vs " +
                          std::to_string(b.dim()));
  }
}

// Largest eigenvalue of a symmetric positive semidefinite matrix.
double largest_symmetric_eigenvalue(const Mat& s) {
  switch (s.dim()) {
    case 1:
      return s(0, 0);
    case 2: {
      const double half_trace = 0.5 * (s(0, 0) + s(1, 1));
      const double half_diff = 0.5 * (s(0, 0) - s(1, 1));
      return half_trace + std::hypot(half_diff, s(0, 1));
    }
    default: {
      // Trigonometric closed form for symmetric 3x3 matrices.
      const double p1 = s(0, 1) * s(0, 1) + s(0, 2) * s(0, 2) + s(1, 2) * s(1, 2);
      const double q = s.trace() / 3.0;
      if (p1 == 0.0) {
        return std::max({s(0, 0), s(1, 1), s(2, 2)});
      }
      const double p2 = (s(0, 0) - q) * (s(0, 0) - q) +
                        (s(1, 1) - q) * (s(1, 1) - q) +
                        (s(2, 2) - q) * (s(2, 2) - q) + 2.0 * p1;
      const double p = std::sqrt(p2 / 6.0);
      const Mat b = (s - Mat::identity(3) * q) * (1.0 / p);
      const double r = std::clamp(b.det() / 2.0, -1.0, 1.0);
      const double phi = std::acos(r) / 3.0;
      return q + 2.0 * p * std::cos(phi);
    }
  }
}

// Norm of the vector of all 2x2 minors; equals sigma_1 * sigma_2 up to a
// factor in [1, sqrt(3)] and is computed without cancellation.
double minors_norm(const Mat& a) {
  switch (a.dim()) {
    case 1:
      return 0.0;
    case 2:
      return std::abs(a.det());
    default: {
      double sum = 0.0;
      for (int r0 = 0; r0 < 3; ++r0) {
        for (int r1 = r0 + 1; r1 < 3; ++r1) {
          for (int c0 = 0; c0 < 3; ++c0) {
            for (int c1 = c0 + 1; c1 < 3; ++c1) {
              const double minor = a(r0, c0) * a(r1, c1) - a(r0, c1) * a(r1, c0);
              sum += minor * minor;
            }
          }
        }
      }
      return std::sqrt(sum);
    }
  }
}

}  // namespace

Vec::Vec(int n) : n_(n) {
  if (n < 1 || n > 3) throw InvalidArgument("vector dimension must be 1..3");
}

Vec::Vec(std::initializer_list<double> values) : Vec(static_cast<int>(values.size())) {
  std::copy(values.begin(), values.end(), v_.begin());
}

double Vec::norm() const { return std::sqrt(dot(*this)); }

double Vec::dot(const Vec& other) const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += v_[i] * other.v_[i];
  return s;
}

Vec Vec::operator+(const Vec& other) const {
  Vec r(n_);
  for (int i = 0; i < n_; ++i) r.v_[i] = v_[i] + other.v_[i];
  return r;
}

Vec Vec::operator-(const Vec& other) const {
  Vec r(n_);
  for (int i = 0; i < n_; ++i) r.v_[i] = v_[i] - other.v_[i];
  return r;
}

Vec Vec::operator*(double s) const {
  Vec r(n_);
  for (int i = 0; i < n_; ++i) r.v_[i] = v_[i] * s;
  return r;
}

bool Vec::operator==(const Vec& other) const {
  return n_ == other.n_ && std::equal(v_.begin(), v_.begin() + n_, other.v_.begin());
}

Mat::Mat(int n) : n_(n) { check_dim(n); }

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows)
    : Mat(static_cast<int>(rows.size())) {
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != n_) {
      throw InvalidArgument("matrix rows must all have length n");
    }
    int j = 0;
    for (double v : row) (*this)(i, j++) = v;
    ++i;
  }
  if (!all_finite()) throw InvalidArgument("matrix entries must be finite");
}

Mat Mat::identity(int n) {
  Mat r(n);
  for (int i = 0; i < n; ++i) r(i, i) = 1.0;
  return r;
}

Mat Mat::diag(std::initializer_list<double> values) {
  Mat r(static_cast<int>(values.size()));
  int i = 0;
  for (double v : values) {
    r(i, i) = v;
    ++i;
  }
  if (!r.all_finite()) throw InvalidArgument("matrix entries must be finite");
  return r;
}

Mat Mat::from_row_major(std::span<const double> values) {
  int n = 0;
  switch (values.size()) {
    case 1: n = 1; break;
    case 4: n = 2; break;
    case 9: n = 3; break;
    default:
      throw InvalidArgument("row-major matrix must have 1, 4 or 9 entries, got " +
                            std::to_string(values.size()));
  }
  Mat r(n);
  std::copy(values.begin(), values.end(), r.e_.begin());
  if (!r.all_finite()) throw InvalidArgument("matrix entries must be finite");
  return r;
}

Mat Mat::outer(const Vec& a, const Vec& m) {
  if (a.dim() != m.dim()) throw InvalidArgument("outer product of unequal vectors");
  Mat r(a.dim());
  for (int i = 0; i < a.dim(); ++i) {
    for (int j = 0; j < a.dim(); ++j) r(i, j) = a[i] * m[j];
  }
  return r;
}

Mat Mat::operator+(const Mat& other) const {
  check_same(*this, other);
  Mat r(n_);
  for (int k = 0; k < n_ * n_; ++k) r.e_[k] = e_[k] + other.e_[k];
  return r;
}

Mat Mat::operator-(const Mat& other) const {
  check_same(*this, other);
  Mat r(n_);
  for (int k = 0; k < n_ * n_; ++k) r.e_[k] = e_[k] - other.e_[k];
  return r;
}

Mat Mat::operator*(double s) const {
  Mat r(n_);
  for (int k = 0; k < n_ * n_; ++k) r.e_[k] = e_[k] * s;
  return r;
}

Mat Mat::operator*(const Mat& other) const {
  check_same(*this, other);
  Mat r(n_);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) {
      double s = 0.0;
      for (int k = 0; k < n_; ++k) s += (*this)(i, k) * other(k, j);
      r(i, j) = s;
    }
  }
  return r;
}

Vec Mat::operator*(const Vec& x) const {
  if (x.dim() != n_) throw InvalidArgument("matrix-vector dimension mismatch");
  Vec r(n_);
  for (int i = 0; i < n_; ++i) {
    double s = 0.0;
    for (int j = 0; j < n_; ++j) s += (*this)(i, j) * x[j];
    r[i] = s;
  }
  return r;
}

Mat& Mat::operator+=(const Mat& other) {
  check_same(*this, other);
  for (int k = 0; k < n_ * n_; ++k) e_[k] += other.e_[k];
  return *this;
}

bool Mat::operator==(const Mat& other) const {
  return n_ == other.n_ &&
         std::equal(e_.begin(), e_.begin() + n_ * n_, other.e_.begin());
}

Mat Mat::transpose() const {
  Mat r(n_);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) r(j, i) = (*this)(i, j);
  }
  return r;
}

double Mat::det() const {
  const Mat& a = *this;
  switch (n_) {
    case 1:
      return a(0, 0);
    case 2:
      return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    default:
      return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
             a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
             a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
  }
}

double Mat::trace() const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += (*this)(i, i);
  return s;
}

double Mat::dot(const Mat& other) const {
  check_same(*this, other);
  double s = 0.0;
  for (int k = 0; k < n_ * n_; ++k) s += e_[k] * other.e_[k];
  return s;
}

bool Mat::all_finite() const {
  return std::all_of(e_.begin(), e_.begin() + n_ * n_,
                     [](double v) { return std::isfinite(v); });
}

std::string Mat::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (int i = 0; i < n_; ++i) {
    os << (i ? ", [" : "[");
    for (int j = 0; j < n_; ++j) os << (j ? ", " : "") << (*this)(i, j);
    os << ']';
  }
  os << ']';
  return os.str();
}

double frob_norm(const Mat& a) { return std::sqrt(a.dot(a)); }

bool is_singular(const Mat& a) {
  const double scale = std::max(1.0, std::pow(frob_norm(a), a.dim()));
  return !(std::abs(a.det()) >= kSingularThreshold * scale);
}

std::optional<Mat> try_invert(const Mat& a) {
  if (is_singular(a)) return std::nullopt;
  const double d = a.det();
  Mat r(a.dim());
  switch (a.dim()) {
    case 1:
      r(0, 0) = 1.0 / d;
      break;
    case 2:
      r(0, 0) = a(1, 1) / d;
      r(0, 1) = -a(0, 1) / d;
      r(1, 0) = -a(1, 0) / d;
      r(1, 1) = a(0, 0) / d;
      break;
    default:
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          // Cofactor of (j, i) gives the adjugate entry (i, j).
          const int r0 = (j + 1) % 3, r1 = (j + 2) % 3;
          const int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
          r(i, j) = (a(r0, c0) * a(r1, c1) - a(r0, c1) * a(r1, c0)) / d;
        }
      }
  }
  return r;
}

Mat invert(const Mat& a) {
  auto inv = try_invert(a);
  if (!inv) {
    throw SingularError("matrix " + a.to_string() +
                        " is singular at working precision");
  }
  return *inv;
}

std::array<double, 3> singular_values(const Mat& a) {
  std::array<double, 3> s{0.0, 0.0, 0.0};
  const double top = std::sqrt(std::max(0.0, largest_symmetric_eigenvalue(a.transpose() * a)));
  s[0] = top;
  if (a.dim() == 1 || top == 0.0) return s;
  if (a.dim() == 2) {
    s[1] = std::abs(a.det()) / top;
    return s;
  }
  // sigma_2^2 + sigma_3^2 = |A|^2 - sigma_1^2 and sigma_2 sigma_3 = |det|/sigma_1.
  const double sum = std::max(0.0, a.dot(a) - top * top);
  const double prod = std::abs(a.det()) / top;
  const double disc = std::sqrt(std::max(0.0, sum * sum - 4.0 * prod * prod));
  const double s2sq = 0.5 * (sum + disc);
  s[1] = std::sqrt(s2sq);
  s[2] = s[1] > 0.0 ? prod / s[1] : 0.0;
  return s;
}

double largest_singular_value(const Mat& a) { return singular_values(a)[0]; }

double ball_radius(const Mat& a) {
  auto inv = try_invert(a);
  if (!inv) return std::numeric_limits<double>::infinity();
  return std::max(frob_norm(a), frob_norm(*inv));
}

bool in_rho_ball(const Mat& a, const RhoBall& ball) {
  if (ball.positive_det_only && !(a.det() > 0.0)) return false;
  return ball_radius(a) <= ball.rho;
}

std::optional<RankOne> rank_one_difference(const Mat& a, const Mat& b) {
  check_same(a, b);
  const Mat d = b - a;
  const double top = largest_singular_value(d);
  if (top == 0.0) return std::nullopt;
  if (minors_norm(d) / top > kRankOneTolerance * top) return std::nullopt;
  const int n = d.dim();
  int best_row = 0;
  double best_norm = -1.0;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += d(i, j) * d(i, j);
    if (s > best_norm) {
      best_norm = s;
      best_row = i;
    }
  }
  Vec m(n);
  const double row_norm = std::sqrt(best_norm);
  for (int j = 0; j < n; ++j) m[j] = d(best_row, j) / row_norm;
  return RankOne{d * m, m};
}

}  // namespace invym
