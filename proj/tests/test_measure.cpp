#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "invym/error.hpp"
#include "invym/measure.hpp"
#include "test_util.hpp"

namespace invym {
namespace {

TEST(AtomicMeasure, ValidatesAndMerges) {
  EXPECT_THROW(AtomicMeasure({}), InvalidMeasure);
  EXPECT_THROW(AtomicMeasure({{Mat::identity(2), 0.5}}), InvalidMeasure);
  EXPECT_THROW(AtomicMeasure({{Mat::identity(2), 1.5}, {Mat::zero(2), -0.5}}), InvalidMeasure);
  EXPECT_THROW(AtomicMeasure({{Mat::identity(2), 0.5}, {Mat::identity(3), 0.5}}),
               InvalidMeasure);
  const AtomicMeasure nu({{Mat::identity(2), 0.25},
                          {Mat::identity(2) + Mat::diag({1e-12, 0}), 0.25},
                          {Mat::zero(2), 0.5},
                          {Mat::diag({5, 5}), 0.0}});
  ASSERT_EQ(nu.size(), 2u);
  EXPECT_EQ(nu.atoms()[0].weight, 0.5);
  EXPECT_EQ(nu.atoms()[0].location, Mat::identity(2));
}

TEST(Pair, Examples) {
  EXPECT_EQ(pair(AtomicMeasure::dirac(Mat::identity(2)), determinant()).value(), 1.0);
  const Mat a = Mat::diag({1, 2}), b = Mat{{0, 3}, {1, 0}};
  const AtomicMeasure nu({{a, 0.5}, {b, 0.5}});
  EXPECT_DOUBLE_EQ(pair(nu, frobenius_power(2.0)).value(),
                   0.5 * (std::pow(frob_norm(a), 2) + std::pow(frob_norm(b), 2)));
  const TestFn orho = restrict_to_ball(frobenius_power(1.0), 3.0);
  EXPECT_TRUE(pair(AtomicMeasure::dirac(Mat{{1, 0}, {0, 0}}), orho).is_infinite());
  EXPECT_THROW(pair(AtomicMeasure::dirac(Mat::zero(2)), inverse_power(2.0)), DomainError);
}

TEST(Pair, LinearInMeasure) {
  std::mt19937_64 rng(31);
  const std::vector<TestFn> fs{determinant(), frobenius_power(2.0), inverse_power(1.0),
                               make_phi_rho(2.0).as_testfn()};
  for (int t = 0; t < 100; ++t) {
    const AtomicMeasure nu = testing::random_measure(2, 3, rng);
    const AtomicMeasure mu = testing::random_measure(2, 4, rng);
    const double lambda = (t % 11) / 10.0;
    const std::vector<std::pair<double, AtomicMeasure>> parts{{lambda, nu}, {1 - lambda, mu}};
    const AtomicMeasure mix = mixture(parts);
    for (const TestFn& f : fs) {
      const double lhs = pair(mix, f).value();
      const double rhs = lambda * pair(nu, f).value() + (1 - lambda) * pair(mu, f).value();
      EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST(FirstMoment, Examples) {
  const Mat a{{1, 2}, {3, 4}};
  EXPECT_EQ(first_moment(AtomicMeasure::dirac(a)), a);
  EXPECT_EQ(first_moment(AtomicMeasure({{Mat::identity(2) * 2.0, 0.5}, {Mat::zero(2), 0.5}})),
            Mat::identity(2));
  EXPECT_EQ(first_moment(AtomicMeasure({{Mat::diag({1, 1}), 0.5}, {Mat::diag({-1, 1}), 0.5}})),
            Mat::diag({0, 1}));
}

TEST(HatPushforward, Examples) {
  const Mat a{{2, 1}, {0, 1}};
  const AtomicMeasure h = hat_pushforward(AtomicMeasure::dirac(a));
  EXPECT_LE(frob_norm(h.atoms()[0].location - invert(a)), 1e-15);
  const AtomicMeasure sym({{Mat::identity(2) * 2.0, 0.5}, {Mat::identity(2) * 0.5, 0.5}});
  const std::vector<TestFn> fam{frobenius_power(1.0), determinant()};
  EXPECT_TRUE(measures_equal(hat_pushforward(sym), sym, fam, 1e-14));
  EXPECT_THROW(hat_pushforward(AtomicMeasure({{Mat::zero(2), 0.5}, {a, 0.5}})), SingularAtom);
}

TEST(HatPushforward, TwiceIsIdentity) {
  std::mt19937_64 rng(32);
  for (int t = 0; t < 100; ++t) {
    const AtomicMeasure nu = testing::random_measure(1 + t % 3, 4, rng);
    const AtomicMeasure back = hat_pushforward(hat_pushforward(nu));
    ASSERT_EQ(back.size(), nu.size());
    for (std::size_t i = 0; i < nu.size(); ++i) {
      EXPECT_LE(frob_norm(back.atoms()[i].location - nu.atoms()[i].location),
                1e-11 * frob_norm(nu.atoms()[i].location));
      EXPECT_EQ(back.atoms()[i].weight, nu.atoms()[i].weight);
    }
  }
}

TEST(HatPushforward, MomentDuality) {
  std::mt19937_64 rng(33);
  const Mesh mesh(1, 4);
  for (int t = 0; t < 50; ++t) {
    std::vector<AtomicMeasure> cells, hats;
    for (int c = 0; c < 4; ++c) {
      cells.push_back(testing::random_measure(2, 3, rng));
      hats.push_back(hat_pushforward(cells.back()));
    }
    const Moments m = moment_pq(YoungMeasureField(mesh, cells), 2.0, 3.0);
    const Moments h = moment_pq(YoungMeasureField(mesh, hats), 3.0, 2.0);
    EXPECT_NEAR(m.p_moment, h.q_moment, 1e-10 * m.p_moment);
    EXPECT_NEAR(m.q_moment, h.p_moment, 1e-10 * m.q_moment);
  }
}

TEST(Truncate, Examples) {
  const CutoffFn phi = make_phi_rho(2.0);
  const AtomicMeasure id = AtomicMeasure::dirac(Mat::identity(2));
  const AtomicMeasure t1 = truncate(id, phi);
  ASSERT_EQ(t1.size(), 1u);
  EXPECT_EQ(t1.atoms()[0].location, Mat::identity(2));
  const Mat a = Mat::diag({1.2, 1.0});
  const Mat b = Mat::diag({10, 10});
  const AtomicMeasure t2 = truncate(AtomicMeasure({{a, 0.5}, {b, 0.5}}), phi);
  ASSERT_EQ(t2.size(), 2u);
  EXPECT_EQ(t2.atoms()[0].location, a);
  EXPECT_EQ(t2.atoms()[0].weight, 0.5);
  EXPECT_EQ(t2.atoms()[1].location, Mat::identity(2));
  EXPECT_EQ(t2.atoms()[1].weight, 0.5);
  EXPECT_THROW(truncate(id, make_det_cutoff(0.1, false)), InvalidArgument);
}

TEST(Truncate, ProbabilityOnLargerBallAndMomentBound) {
  std::mt19937_64 rng(34);
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + t % 3;
    const AtomicMeasure nu = testing::random_measure(n, 5, rng, 2.0);
    const double rho = 1.0 + t % 4;
    const AtomicMeasure out = truncate(nu, make_phi_rho(rho));
    EXPECT_NEAR(out.total_mass(), 1.0, 1e-12);
    for (const Atom& a : out.atoms()) {
      if (a.location == Mat::identity(n)) continue;
      EXPECT_TRUE(in_rho_ball(a.location, {rho + 1.0, false}));
    }
    const double before = pair(nu, frobenius_power(2.0)).value();
    const double after = pair(out, frobenius_power(2.0)).value();
    EXPECT_LE(after, before + n + 1e-12);
  }
}

TEST(Truncate, ExactOnceRhoCoversAtoms) {
  std::mt19937_64 rng(35);
  for (int t = 0; t < 50; ++t) {
    const AtomicMeasure nu = testing::random_measure(2, 4, rng);
    double scale = 0.0;
    for (const Atom& a : nu.atoms()) scale = std::max(scale, ball_radius(a.location));
    const TestFn f = make_phi_rho(3.0).as_testfn();
    const AtomicMeasure out = truncate(nu, make_phi_rho(scale));
    EXPECT_EQ(pair(out, f).value(), pair(nu, f).value());
  }
}

TEST(MeasuresEqual, Examples) {
  const std::vector<TestFn> fam{make_phi_rho(1.5).as_testfn(), frobenius_power(1.0)};
  const AtomicMeasure id = AtomicMeasure::dirac(Mat::identity(2));
  EXPECT_TRUE(measures_equal(id, id, fam, 0.0));
  EXPECT_FALSE(measures_equal(AtomicMeasure::dirac(Mat::identity(2) * 2.0),
                              AtomicMeasure::dirac(Mat::identity(2) * 0.5), fam, 1e-6));
  const Mat a = Mat::diag({1, 2}), b = Mat::diag({3, 1});
  EXPECT_TRUE(measures_equal(AtomicMeasure({{a, 0.3}, {b, 0.7}}),
                             AtomicMeasure({{b, 0.7}, {a, 0.3}}), fam, 1e-15));
  EXPECT_THROW(measures_equal(id, id, {}, 0.0), InvalidArgument);
}

TEST(Mesh, PowerOfTwoCells) {
  EXPECT_THROW(Mesh(1, 3), InvalidArgument);
  EXPECT_THROW(Mesh(3, 4), InvalidArgument);
  const Mesh m(2, 4);
  EXPECT_EQ(m.cell_count(), 16u);
  EXPECT_DOUBLE_EQ(m.cell_volume(), 1.0 / 16);
  EXPECT_EQ(m.cell_origin(5)[0], 0.25);
  EXPECT_EQ(m.cell_origin(5)[1], 0.25);
  EXPECT_THROW(YoungMeasureField(m, {AtomicMeasure::dirac(Mat::identity(2))}), InvalidMeasure);
}

TEST(Moments, Examples) {
  const Mesh mesh(2, 2);
  const Moments m = moment_pq(YoungMeasureField::constant(mesh,
                              AtomicMeasure::dirac(Mat::identity(2))), 2, 2);
  EXPECT_FALSE(m.infinite);
  EXPECT_NEAR(m.p_moment, 2.0, 1e-14);
  EXPECT_NEAR(m.q_moment, 2.0, 1e-14);
  const Moments d = moment_pq(YoungMeasureField::constant(mesh,
                              AtomicMeasure::dirac(Mat::diag({2, 0.5}))), 1, 1);
  EXPECT_NEAR(d.p_moment, std::sqrt(4.25), 1e-14);
  EXPECT_NEAR(d.q_moment, std::sqrt(4.25), 1e-14);
  const AtomicMeasure sing({{Mat::identity(2), 0.9}, {Mat{{1, 0}, {0, 0}}, 0.1}});
  EXPECT_TRUE(moment_pq(YoungMeasureField::constant(mesh, sing), 2, 2).infinite);
}

TEST(Homogenize, Examples) {
  const Mat a = Mat::diag({1, 2}), b = Mat::diag({2, 1});
  const YoungMeasureField f(Mesh(1, 2), {AtomicMeasure::dirac(a), AtomicMeasure::dirac(b)});
  const AtomicMeasure h = homogenize(f);
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h.atoms()[0].weight, 0.5);
  const AtomicMeasure nu({{a, 0.25}, {b, 0.75}});
  const AtomicMeasure hc = homogenize(YoungMeasureField::constant(Mesh(2, 4), nu));
  const std::vector<TestFn> fam{determinant(), frobenius_power(2.0)};
  EXPECT_TRUE(measures_equal(hc, nu, fam, 1e-14));
}

TEST(Homogenize, PairingIdentity) {
  std::mt19937_64 rng(36);
  const Mesh mesh(2, 2);
  std::vector<AtomicMeasure> cells;
  for (int c = 0; c < 4; ++c) cells.push_back(testing::random_measure(2, 3, rng));
  const YoungMeasureField f(mesh, cells);
  double direct = 0.0;
  for (const AtomicMeasure& nu : cells) direct += mesh.cell_volume() * pair(nu, determinant()).value();
  EXPECT_NEAR(pair(homogenize(f), determinant()).value(), direct, 1e-14);
}

TEST(Classify, Examples) {
  const Mesh mesh(1, 2);
  const ClassReport id =
      classify(YoungMeasureField::constant(mesh, AtomicMeasure::dirac(Mat::identity(2))), 2, 2);
  EXPECT_TRUE(id.in_Ypq);
  EXPECT_TRUE(id.in_Ypq_plus);
  const ClassReport refl =
      classify(YoungMeasureField::constant(mesh, AtomicMeasure::dirac(Mat::diag({-1, 1}))), 2, 2);
  EXPECT_TRUE(refl.in_Ypq);
  EXPECT_FALSE(refl.in_Ypq_plus);
  EXPECT_EQ(refl.positive_det_mass_deficit, 1.0);
  const AtomicMeasure sing({{Mat::identity(2), 0.9}, {Mat{{1, 0}, {0, 0}}, 0.1}});
  const ClassReport s = classify(YoungMeasureField::constant(mesh, sing), 2, 2);
  EXPECT_FALSE(s.in_Ypq);
  EXPECT_FALSE(s.in_Ypq_plus);
  EXPECT_NEAR(s.inv_mass_deficit, 0.1, 1e-15);
  EXPECT_TRUE(s.moment_p.is_infinite());
}

TEST(Classify, PlusImpliesMembership) {
  std::mt19937_64 rng(37);
  for (int t = 0; t < 200; ++t) {
    std::vector<AtomicMeasure> cells;
    for (int c = 0; c < 2; ++c) cells.push_back(testing::random_measure(2, 2, rng));
    const ClassReport r = classify(YoungMeasureField(Mesh(1, 2), cells), 2, 2);
    if (r.in_Ypq_plus) EXPECT_TRUE(r.in_Ypq);
    if (r.in_Ypq) EXPECT_EQ(r.inv_mass_deficit, 0.0);
  }
}

}  // namespace
}  // namespace invym
