#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>

namespace invym {

// Small dense vector, dimension 1..3.
class Vec {
 public:
  Vec() = default;
  explicit Vec(int n);
  Vec(std::initializer_list<double> values);

  int dim() const { return n_; }
  double operator[](int i) const { return v_[i]; }
  double& operator[](int i) { return v_[i]; }

  double norm() const;
  double dot(const Vec& other) const;

  Vec operator+(const Vec& other) const;
  Vec operator-(const Vec& other) const;
  Vec operator*(double s) const;
  bool operator==(const Vec& other) const;

 private:
  int n_ = 0;
  std::array<double, 3> v_{};
};

// Dense n x n real matrix with n in {1, 2, 3}. Entries are stored row-major.
class Mat {
 public:
  static constexpr int kMaxDim = 3;

  Mat() : Mat(1) {}
  explicit Mat(int n);
  // Row-major construction; the size of `rows` fixes n.
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat zero(int n) { return Mat(n); }
  static Mat identity(int n);
  static Mat scalar(double value) { return Mat{{value}}; }
  static Mat diag(std::initializer_list<double> values);
  // n is inferred from the length (1, 4 or 9). Rejects non-finite entries.
  static Mat from_row_major(std::span<const double> values);
  static Mat outer(const Vec& a, const Vec& m);

  int dim() const { return n_; }
  double operator()(int i, int j) const { return e_[i * n_ + j]; }
  double& operator()(int i, int j) { return e_[i * n_ + j]; }
  std::span<const double> entries() const {
    return {e_.data(), static_cast<std::size_t>(n_ * n_)};
  }

  Mat operator+(const Mat& other) const;
  Mat operator-(const Mat& other) const;
  Mat operator*(double s) const;
  Mat operator*(const Mat& other) const;
  Vec operator*(const Vec& x) const;
  Mat& operator+=(const Mat& other);
  bool operator==(const Mat& other) const;

  Mat transpose() const;
  double det() const;
  double trace() const;
  // Frobenius inner product sum_ij A_ij B_ij.
  double dot(const Mat& other) const;
  bool all_finite() const;

  std::string to_string() const;

 private:
  int n_;
  std::array<double, 9> e_{};
};

inline Mat operator*(double s, const Mat& a) { return a * s; }

// |A| = sqrt(sum A_ij^2).
double frob_norm(const Mat& a);

// True when |det A| < 1e-12 * max(1, |A|^n): the matrix is treated as lying
// outside the invertible set at working precision.
bool is_singular(const Mat& a);

// A^{-1}; throws SingularError when is_singular(A).
Mat invert(const Mat& a);
std::optional<Mat> try_invert(const Mat& a);

// Singular values in non-increasing order (only the first dim() are valid).
std::array<double, 3> singular_values(const Mat& a);
double largest_singular_value(const Mat& a);

// The set R_rho = {A invertible : max(|A|, |A^{-1}|) <= rho}, optionally
// intersected with {det A > 0}.
struct RhoBall {
  double rho = 1.0;
  bool positive_det_only = false;
};

bool in_rho_ball(const Mat& a, const RhoBall& ball);

// max(|A|, |A^{-1}|), or +infinity for singular A. A lies in R_rho iff this
// is <= rho.
double ball_radius(const Mat& a);

struct RankOne {
  Vec a;
  Vec m;  // unit vector
};

// B - A = a (x) m when the difference has rank one (second singular value
// below 1e-9 times the first); empty for rank 0 or rank >= 2.
std::optional<RankOne> rank_one_difference(const Mat& a, const Mat& b);

}  // namespace invym
