#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "invym/error.hpp"
#include "invym/laminate.hpp"

namespace invym {
namespace {

const WeightFn kOne{"1", [](const Point&) { return 1.0; }};
const WeightFn kX{"x", [](const Point& p) { return p[0]; }};

SequenceSpec sawtooth(int k) {
  return {{Mat::scalar(1.0), Mat::scalar(-1.0)}, {0.5, 0.5}, k, std::nullopt};
}

SequenceSpec shear(int k) {
  return {{Mat::identity(2), Mat{{1, 1}, {0, 1}}}, {0.5, 0.5}, k, std::nullopt};
}

double volume_with_gradient(const GradientField& f, const Mat& g) {
  double v = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (frob_norm(f.pieces()[i].gradient - g) < 1e-14) v += f.volume(i);
  }
  return v;
}

TEST(Geometry, ClipAndArea) {
  const Polygon sq = box(0, 1, 0, 1);
  EXPECT_DOUBLE_EQ(polygon_area(sq), 1.0);
  const Polygon tri = clip_halfplane(sq, {1.0, 1.0}, 1.0);
  EXPECT_NEAR(polygon_area(tri), 0.5, 1e-15);
  const Point c = polygon_centroid(tri);
  EXPECT_NEAR(c[0], 1.0 / 3, 1e-15);
  EXPECT_TRUE(clip_halfplane(sq, {1.0, 0.0}, -0.5).empty());
  EXPECT_NEAR(polygon_area(clip_box(sq, 0.25, 0.5, 0.0, 2.0)), 0.25, 1e-15);
}

TEST(Build, SawtoothExactFractions) {
  const GradientField f = build_laminate_sequence(sawtooth(8));
  EXPECT_EQ(f.size(), 16u);
  EXPECT_NEAR(volume_with_gradient(f, Mat::scalar(1.0)), 0.5, 1e-15);
  EXPECT_LE(f.continuity_defect(), 1e-15);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(f.volume(i), 1.0 / 16, 1e-16);
  EXPECT_NEAR(f.evaluate(f.size() - 1, {1.0, 0.0})[0], 0.0, 1e-15);
}

TEST(Build, UnequalWeights) {
  const GradientField f = build_laminate_sequence(
      {{Mat::scalar(2.0), Mat::scalar(1.0)}, {0.25, 0.75}, 5, std::nullopt});
  EXPECT_NEAR(volume_with_gradient(f, Mat::scalar(2.0)), 0.25, 1e-15);
  EXPECT_NEAR(f.average_gradient()(0, 0), 1.25, 1e-15);
  EXPECT_NEAR(f.evaluate(f.size() - 1, {1.0, 0.0})[0], 1.25, 1e-14);
}

TEST(Build, ShearLaminate) {
  const GradientField f = build_laminate_sequence(shear(4));
  EXPECT_NEAR(volume_with_gradient(f, Mat::identity(2)), 0.5, 1e-15);
  EXPECT_LE(f.continuity_defect(), 1e-14);
  EXPECT_NEAR(f.min_det(), 1.0, 1e-15);
  EXPECT_NEAR(empirical_pairing(f, determinant(), kOne), 1.0, 1e-15);
}

TEST(Build, ObliqueNormalExactFractions) {
  // B - A = a (x) m with m = (1, 2)/sqrt(5).
  const Vec m{1.0 / std::sqrt(5.0), 2.0 / std::sqrt(5.0)};
  const Mat a = Mat::identity(2);
  const Mat b = a + Mat::outer(Vec{0.3, -0.2}, m);
  const Mat c = a + Mat::outer(Vec{-0.1, 0.4}, m);
  const GradientField f =
      build_laminate_sequence({{a, b, c}, {0.2, 0.5, 0.3}, 7, std::nullopt});
  EXPECT_NEAR(volume_with_gradient(f, a), 0.2, 1e-12);
  EXPECT_NEAR(volume_with_gradient(f, b), 0.5, 1e-12);
  EXPECT_NEAR(volume_with_gradient(f, c), 0.3, 1e-12);
  EXPECT_NEAR(f.total_volume(), 1.0, 1e-13);
  EXPECT_LE(f.continuity_defect(), 1e-10);
}

TEST(Build, Errors) {
  EXPECT_THROW(build_laminate_sequence(
                   {{Mat::identity(2), Mat::identity(2) * 2.0}, {0.5, 0.5}, 2, std::nullopt}),
               NotRankOne);
  const Mat a = Mat::identity(2);
  EXPECT_THROW(build_laminate_sequence({{a, a + Mat::outer(Vec{1, 0}, Vec{1, 0}),
                                         a + Mat::outer(Vec{1, 0}, Vec{0, 1})},
                                        {0.3, 0.3, 0.4}, 2, std::nullopt}),
               NotRankOne);
  EXPECT_THROW(build_laminate_sequence(sawtooth(kMaxLaminatePieces)), BudgetExceeded);
  EXPECT_THROW(build_laminate_sequence(sawtooth(0)), InvalidArgument);
  EXPECT_THROW(build_laminate_sequence(
                   {{Mat::scalar(1), Mat::scalar(2)}, {0.6, 0.6}, 2, std::nullopt}),
               InvalidArgument);
}

TEST(Build, PositiveDetAtomsGivePositivePieces) {
  const GradientField f = build_laminate_sequence(
      {{Mat::scalar(1.0), Mat::scalar(2.0)}, {0.5, 0.5}, 16, std::nullopt});
  EXPECT_GT(f.min_det(), 0.0);
  const GradientField s = build_laminate_sequence(shear(9));
  EXPECT_GT(s.min_det(), 0.0);
}

TEST(EmpiricalPairing, Examples) {
  for (int k : {1, 3, 8, 64}) {
    const GradientField f = build_laminate_sequence(sawtooth(k));
    EXPECT_NEAR(empirical_pairing(f, frobenius_power(2.0), kOne), 1.0, 1e-14);
    EXPECT_NEAR(empirical_pairing(f, determinant(), kOne), 0.0, 1e-14);
  }
  const GradientField sing = GradientField::affine(Mat::scalar(0.0));
  EXPECT_TRUE(std::isinf(empirical_pairing(sing, restrict_to_ball(determinant(), 2.0), kOne)));
}

TEST(VerifyGeneration, PolynomialDecay) {
  const TestFn v = scalar_1d([](double s) { return s * s + s; }, Growth::cp(2), "s^2+s");
  const auto r = verify_generation(sawtooth(1), {v, frobenius_power(2.0)}, {kX, kOne},
                                   {4, 8, 16, 32, 64});
  ASSERT_EQ(r.series.size(), 4u);
  // s^2 + s against g = x: error = 1/(4k).
  EXPECT_NEAR(r.series[0].errors.back(), 1.0 / 256, 1e-13);
  EXPECT_LE(r.series[0].slope, -0.9);
  EXPECT_TRUE(r.series[0].decays);
  // |s|^2 is constant on the laminate: no error at all.
  for (double e : r.series[2].errors) EXPECT_LE(e, 1e-13);
  EXPECT_TRUE(r.series[2].decays);
  EXPECT_FALSE(r.det_positive);
  EXPECT_EQ(r.sup_gradient, 1.0);
}

TEST(VerifyGeneration, ConstantAndShearAreExact) {
  const auto c = verify_generation({{Mat::scalar(1.5)}, {1.0}, 1, std::nullopt},
                                   {frobenius_power(2.0)}, {kX}, {4, 8});
  for (double e : c.series[0].errors) EXPECT_LE(e, 1e-13);
  const auto s = verify_generation(shear(1), {determinant(), frobenius_power(2.0)}, {kOne},
                                   {2, 4, 8});
  for (const auto& series : s.series) {
    for (double e : series.errors) EXPECT_LE(e, 1e-13);
  }
  EXPECT_TRUE(s.det_positive);
}

TEST(BoundaryGlue, SawtoothExample) {
  const GradientField f = build_laminate_sequence(sawtooth(8));
  const GlueResult g = boundary_glue(f, Mat::scalar(0.0), 1.0 / 8, 0.5);
  EXPECT_NEAR(g.modified_volume, 0.25, 1e-14);
  EXPECT_TRUE(g.within_ball);
  EXPECT_TRUE(g.exact);
  EXPECT_LE(g.field.continuity_defect(), 1e-14);
  for (std::size_t i = 0; i < g.field.size(); ++i) {
    const Point c = g.field.centroid(i);
    const double slope = g.field.pieces()[i].gradient(0, 0);
    if (c[0] < 1.0 / 8 || c[0] > 7.0 / 8) {
      EXPECT_NEAR(std::abs(slope), 1.5, 1e-15);
    } else {
      EXPECT_NEAR(std::abs(slope), 1.0, 1e-15);
    }
  }
  EXPECT_NEAR(g.field.evaluate(0, {0.0, 0.0})[0], 0.0, 1e-15);
  EXPECT_NEAR(g.field.evaluate(g.field.size() - 1, {1.0, 0.0})[0], 0.0, 1e-15);
  ASSERT_TRUE(g.field.affine_boundary_datum());
}

TEST(BoundaryGlue, NonzeroDatumMatchesEndpoints) {
  const GradientField f = build_laminate_sequence(sawtooth(16));
  const GlueResult g = boundary_glue(f, Mat::scalar(0.4), 0.25, 1.0);
  EXPECT_NEAR(g.field.evaluate(g.field.size() - 1, {1.0, 0.0})[0], 0.4, 1e-14);
  EXPECT_LE(g.field.continuity_defect(), 1e-14);
  EXPECT_LE(g.modified_volume, 0.5 + 1e-14);
  const double pv = empirical_pairing(f, frobenius_power(2.0), kOne);
  const double gv = empirical_pairing(g.field, frobenius_power(2.0), kOne);
  EXPECT_LE(std::abs(pv - gv), 4.0 * g.modified_volume + 1e-14);
}

TEST(BoundaryGlue, AlreadyAffineUnchanged) {
  const GradientField f = GradientField::affine(Mat::scalar(0.7));
  const GlueResult g = boundary_glue(f, Mat::scalar(0.7), 0.1, 0.5);
  EXPECT_EQ(g.modified_volume, 0.0);
}

TEST(BoundaryGlue, Infeasible) {
  const GradientField f = build_laminate_sequence(sawtooth(8));
  EXPECT_THROW(boundary_glue(f, Mat::scalar(1.2), 0.125, 0.5), InfeasibleLayer);
  // Average slope over a thin layer beyond alpha + epsilon.
  const GradientField slow = GradientField::affine(Mat::scalar(1.0));
  EXPECT_THROW(boundary_glue(slow, Mat::scalar(-1.0), 0.05, 0.5), InfeasibleLayer);
}

TEST(BoundaryGlue, LayerVolumeShrinks) {
  const GradientField f = build_laminate_sequence(sawtooth(64));
  double prev = 1.0;
  for (int ell : {4, 8, 16, 32}) {
    const GlueResult g = boundary_glue(f, Mat::scalar(0.0), 1.0 / ell, 0.5);
    EXPECT_LE(g.modified_volume, 2.0 / ell + 1e-14);
    EXPECT_LT(g.modified_volume, prev);
    prev = g.modified_volume;
  }
}

TEST(BoundaryGlue, TwoDimensionalBand) {
  const GradientField f = build_laminate_sequence(shear(8));
  const Mat F{{1, 0.5}, {0, 1}};
  const GlueResult g = boundary_glue(f, F, 1.0 / 8, 0.5);
  EXPECT_FALSE(g.exact);
  EXPECT_LE(g.field.continuity_defect(), 1e-12);
  EXPECT_NEAR(g.field.total_volume(), 1.0, 1e-13);
  const auto datum = g.field.affine_boundary_datum();
  ASSERT_TRUE(datum);
  EXPECT_LE(frob_norm(*datum - F), 1e-12);
  EXPECT_GT(g.min_det, 0.0);
  EXPECT_LE(g.modified_volume, 1.0 - 0.75 * 0.75 + 1e-12);
  // Identity field with F = I needs no change at all.
  const GlueResult id = boundary_glue(GradientField::affine(Mat::identity(2)),
                                      Mat::identity(2), 0.1, 0.5);
  EXPECT_NEAR(id.modified_volume, 0.0, 1e-14);
}

TEST(MixDeformations, PairingBound) {
  const GradientField y1 = boundary_glue(build_laminate_sequence(sawtooth(8)),
                                         Mat::scalar(0.0), 0.125, 0.5).field;
  const GradientField y2 = boundary_glue(build_laminate_sequence(
      {{Mat::scalar(2.0), Mat::scalar(-2.0)}, {0.5, 0.5}, 4, std::nullopt}),
      Mat::scalar(0.0), 0.125, 0.5).field;
  const TestFn v = frobenius_power(2.0);
  const double p1 = empirical_pairing(y1, v, kOne), p2 = empirical_pairing(y2, v, kOne);
  for (double lambda : {0.0, 0.3, 0.5, 0.77, 1.0}) {
    const MixResult m = mix_deformations(y1, y2, lambda, 6);
    EXPECT_LE(m.residual_fraction, 2.0 / 64 + 1e-15);
    EXPECT_LE(m.field.continuity_defect(), 1e-12);
    const double osc = 2.5 * 2.5;
    EXPECT_LE(std::abs(empirical_pairing(m.field, v, kOne) - lambda * p1 - (1 - lambda) * p2),
              m.residual_fraction * osc + 1e-12);
  }
  const MixResult same = mix_deformations(y1, y1, 0.37, 6);
  EXPECT_NEAR(empirical_pairing(same.field, v, kOne), p1, same.residual_fraction * 2.25 + 1e-12);
}

TEST(MixDeformations, TwoDimensional) {
  const Mat A = Mat::identity(2);
  const GradientField y1 = boundary_glue(build_laminate_sequence(shear(4)), A, 0.125, 0.5).field;
  const GradientField y2 = GradientField::affine(A);
  const MixResult m = mix_deformations(y1, y2, 0.5, 3);
  EXPECT_EQ(m.residual_fraction, 0.0);
  EXPECT_LE(m.field.continuity_defect(), 1e-12);
  EXPECT_NEAR(m.field.total_volume(), 1.0, 1e-12);
  const TestFn v = frobenius_power(2.0);
  EXPECT_NEAR(empirical_pairing(m.field, v, kOne),
              0.5 * empirical_pairing(y1, v, kOne) + 0.5 * 2.0, 1e-12);
}

TEST(MixDeformations, RejectsDifferentData) {
  const GradientField y1 = GradientField::affine(Mat::scalar(1.0));
  const GradientField y2 = GradientField::affine(Mat::scalar(2.0));
  EXPECT_THROW(mix_deformations(y1, y2, 0.5, 2), InvalidArgument);
  EXPECT_THROW(mix_deformations(build_laminate_sequence(shear(2)), GradientField::affine(
                   Mat::identity(2)), 0.5, 2), InvalidArgument);
}

TEST(YoungMeasureOf, CellMeasuresAndAverages) {
  const GradientField f = build_laminate_sequence(sawtooth(8));
  const Mesh mesh(1, 4);
  const YoungMeasureField y = young_measure_of(f, mesh);
  for (const AtomicMeasure& nu : y.measures()) {
    ASSERT_EQ(nu.size(), 2u);
    EXPECT_NEAR(nu.atoms()[0].weight, 0.5, 1e-14);
  }
  for (const Mat& g : f.cell_average_gradients(mesh)) EXPECT_NEAR(g(0, 0), 0.0, 1e-14);
}

}  // namespace
}  // namespace invym
