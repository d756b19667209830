#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracle_helpers.hpp"
#include "sloc/errors.hpp"
#include "sloc/geometry.hpp"
#include "sloc/measures.hpp"
#include "sloc/rng.hpp"

using namespace sloc;

TEST_CASE("gauge evaluation across every descriptor kind")
{
    Eigen::Vector3d v(1.0, -2.0, 0.5);

    CHECK(gauge_eval(NormSpec::lp(1.0, 3), v) == doctest::Approx(3.5));
    CHECK(gauge_eval(NormSpec::lp(2.0, 3), v) ==
          doctest::Approx(std::sqrt(5.25)));
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(gauge_eval(NormSpec::lp(inf, 3), v) == doctest::Approx(2.0));
    CHECK(gauge_eval(NormSpec::lp(3.0, 3), v) ==
          doctest::Approx(std::cbrt(1.0 + 8.0 + 0.125)));

    Eigen::VectorXd w(3);
    w << 2.0, 1.0, 4.0;
    CHECK(gauge_eval(NormSpec::weighted_lp(1.0, w), v) ==
          doctest::Approx(2.0 + 2.0 + 2.0));
    CHECK(gauge_eval(NormSpec::weighted_lp(inf, w), v) ==
          doctest::Approx(2.0));

    // Facet rows of the unit cube reproduce the sup norm.
    Eigen::MatrixXd faces(6, 3);
    faces << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1;
    CHECK(gauge_eval(NormSpec::facets(faces), v) == doctest::Approx(2.0));

    // Vertex columns of the cross-polytope reproduce the sum norm.
    Eigen::MatrixXd verts(3, 6);
    verts << 1, -1, 0, 0, 0, 0, 0, 0, 1, -1, 0, 0, 0, 0, 0, 0, 1, -1;
    CHECK(gauge_eval(NormSpec::vertices(verts), v) ==
          doctest::Approx(3.5).epsilon(1e-9));

    Eigen::MatrixXd map(2, 3);
    map << 1, 1, 0, 0, 0, 2;
    CHECK(gauge_eval(NormSpec::linear_map(map), v) ==
          doctest::Approx(std::sqrt(1.0 + 1.0)).epsilon(1e-12));

    CHECK_THROWS_AS(NormSpec::lp(0.5, 3), sloc::Error);
    Eigen::VectorXd negw(2);
    negw << 1.0, -1.0;
    CHECK_THROWS_AS(NormSpec::weighted_lp(2.0, negw), sloc::Error);
}

TEST_CASE("gauge axioms on random vectors")
{
    RngStream s(19, 0);
    const auto specs = {NormSpec::lp(1.0, 4), NormSpec::lp(2.5, 4),
                        NormSpec::lp(std::numeric_limits<double>::infinity(),
                                     4)};
    for (const auto& spec : specs)
        for (int rep = 0; rep < 40; ++rep) {
            const Eigen::VectorXd x = s.gaussian_vector(4);
            const Eigen::VectorXd y = s.gaussian_vector(4);
            const double lam = std::abs(s.next_gaussian()) + 0.1;
            const double gx = gauge_eval(spec, x);
            const double gy = gauge_eval(spec, y);
            CHECK(gauge_eval(spec, lam * x) ==
                  doctest::Approx(lam * gx).epsilon(1e-10));
            CHECK(gauge_eval(spec, (-1.0) * x) ==
                  doctest::Approx(gx).epsilon(1e-12));
            CHECK(gauge_eval(spec, x + y) <= gx + gy + 1e-10 * (gx + gy));
        }
}

TEST_CASE("polar pairs and the pairing inequality")
{
    const auto p3 = NormSpec::lp(3.0, 3);
    const auto q = polar_gauge(p3);
    CHECK(q.p() == doctest::Approx(1.5).epsilon(1e-12));
    RngStream s(23, 0);
    for (int rep = 0; rep < 60; ++rep) {
        const Eigen::VectorXd x = s.gaussian_vector(3);
        const Eigen::VectorXd y = s.gaussian_vector(3);
        CHECK(x.dot(y) <=
              gauge_eval(p3, x) * gauge_eval(q, y) + 1e-9);
    }
    // Aligned vectors meet the bound with equality for conjugate powers.
    Eigen::Vector3d x(1.0, 1.0, 1.0);
    Eigen::Vector3d y(2.0, 2.0, 2.0);
    CHECK(x.dot(y) == doctest::Approx(gauge_eval(p3, x) * gauge_eval(q, y))
                          .epsilon(1e-10));

    // Facet and vertex descriptions of dual polytopes swap under polarity.
    Eigen::MatrixXd faces(4, 2);
    faces << 1, 0, -1, 0, 0, 1, 0, -1;
    const auto cube_gauge = NormSpec::facets(faces);
    const auto cross_gauge = polar_gauge(cube_gauge);
    Eigen::Vector2d t(0.7, -0.2);
    CHECK(gauge_eval(cross_gauge, t) == doctest::Approx(0.9).epsilon(1e-9));
    CHECK_THROWS_AS(polar_gauge(NormSpec::linear_map(faces)), sloc::Error);
}

TEST_CASE("closed-form gaussian norm expectations")
{
    const auto l1 = gaussian_norm_expectation(NormSpec::lp(1.0, 10), 10, 1, 0);
    CHECK(l1.se == 0.0);
    CHECK(l1.value ==
          doctest::Approx(10.0 * oracle::ref::abs_gaussian_mean)
              .epsilon(1e-12));
    const auto l2 = gaussian_norm_expectation(NormSpec::lp(2.0, 8), 10, 1, 0);
    CHECK(l2.se == 0.0);
    CHECK(l2.value == doctest::Approx(oracle::ref::chi_mean_8).epsilon(1e-12));
}

TEST_CASE("sampled sup-norm expectation matches quadrature")
{
    const double q50 = oracle::gaussian_maxabs_mean(50);
    CHECK(q50 == doctest::Approx(oracle::ref::maxabs_mean_50).epsilon(1e-7));
    const auto inf = std::numeric_limits<double>::infinity();
    const auto mc = gaussian_norm_expectation(NormSpec::lp(inf, 50), 200000,
                                              7, 0, 1);
    CHECK(mc.se > 0.0);
    CHECK(std::abs(mc.value - q50) < 4.0 * mc.se);

    const double q10 = oracle::gaussian_maxabs_mean(10);
    CHECK(q10 == doctest::Approx(oracle::ref::maxabs_mean_10).epsilon(1e-7));
}

TEST_CASE("vertex-program gauge agrees with the sum norm in expectation")
{
    Eigen::MatrixXd verts(4, 8);
    verts.setZero();
    for (int i = 0; i < 4; ++i) {
        verts(i, 2 * i) = 1.0;
        verts(i, 2 * i + 1) = -1.0;
    }
    const auto mc =
        gaussian_norm_expectation(NormSpec::vertices(verts), 20000, 9, 0, 1);
    CHECK(std::abs(mc.value - 4.0 * oracle::ref::abs_gaussian_mean) <
          5.0 * mc.se);
}

TEST_CASE("mean width closed forms and consistency")
{
    const auto ball = mean_width(NormSpec::lp(2.0, 7), 10000, 1, 0);
    CHECK(ball.value == 1.0);
    CHECK(ball.se == 0.0);

    // Sphere average times the gaussian radius factor recovers the
    // gaussian expectation of the gauge.
    const int n = 10;
    const double cn = oracle::chi_mean(n);
    CHECK(cn == doctest::Approx(oracle::ref::chi_mean_10).epsilon(1e-12));
    const auto M = mean_width(NormSpec::lp(1.0, n), 200000, 13, 0, 1);
    CHECK(M.se > 0.0);
    const double lhs = cn * M.value;
    const double want = n * oracle::ref::abs_gaussian_mean;
    CHECK(std::abs(lhs - want) < 3.0 * cn * M.se);
}

TEST_CASE("catalog bodies")
{
    const BodySpec cube = make_isotropic_cube_body(4);
    CHECK(cube.n == 4);
    CHECK(cube.volume ==
          doctest::Approx(std::pow(2.0 * std::sqrt(3.0), 4)).epsilon(1e-12));
    // Bit-exact closed constants for the two special shapes.
    CHECK(isotropic_constant(cube) == 1.0 / (2.0 * std::sqrt(3.0)));
    const BodySpec disc = make_isotropic_ball_body(2);
    CHECK(isotropic_constant(disc) ==
          1.0 / std::sqrt(4.0 * std::numbers::pi));
    CHECK(disc.volume ==
          doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-12));

    const BodySpec ball3 = make_isotropic_ball_body(3);
    CHECK(ball3.volume ==
          doctest::Approx(4.0 / 3.0 * std::numbers::pi *
                          std::pow(5.0, 1.5)).epsilon(1e-12));

    // The gauge of each body evaluates one on its boundary scale.
    Eigen::VectorXd corner = Eigen::VectorXd::Constant(4, std::sqrt(3.0));
    CHECK(gauge_eval(cube.gauge, corner) == doctest::Approx(1.0).epsilon(1e-12));
    Eigen::Vector3d rad(std::sqrt(5.0), 0.0, 0.0);
    CHECK(gauge_eval(ball3.gauge, rad) == doctest::Approx(1.0).epsilon(1e-12));

    // Uniform samples from each body are isotropic.
    RngStream s(31, 0);
    const Eigen::MatrixXd x = cube.sampler.sample(50000, s);
    for (int i = 0; i < 4; ++i)
        CHECK(x.row(i).squaredNorm() / x.cols() ==
              doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("norm comparison experiment sits at one for the gaussian family")
{
    const auto fam = DistributionFamily::standard_gaussian(10);
    const auto rep = compare_norms_experiment(fam, NormSpec::lp(1.0, 10),
                                              100000, 17, 0, 10.0, 0.0, 1);
    CHECK(rep.ratio == doctest::Approx(1.0).epsilon(0.02));
    CHECK(std::abs(rep.ratio - 1.0) < 3.0 * rep.ratio_se);
    CHECK(rep.mean_gaussian ==
          doctest::Approx(10.0 * oracle::ref::abs_gaussian_mean)
              .epsilon(1e-12));
    CHECK(rep.n == 10);
    CHECK(rep.count == 100000);
}

TEST_CASE("norm comparison captures the exponential sum-norm deficit")
{
    const auto fam = DistributionFamily::product_exponential_centered(10);
    const auto rep = compare_norms_experiment(fam, NormSpec::lp(1.0, 10),
                                              100000, 17, 0, 10.0, 2.0, 1);
    CHECK(std::abs(rep.ratio - oracle::ref::exp_l1_over_gaussian_l1) <
          5.0 * rep.ratio_se + 0.005);
    CHECK(rep.bound > 0.0);  // reporting-only scaled bound is populated
    CHECK(rep.tau_hat == 2.0);
}

TEST_CASE("uniform-body lower bounds")
{
    const CorollaryReport cube = corollary_checks(
        make_isotropic_cube_body(3), 100000, 19, 0, 0.01, 2.0, 1);
    // E gauge of a uniform draw is n/(n+1); the polar mean is 1.5 n.
    CHECK(cube.mean_gauge == doctest::Approx(0.75).epsilon(0.01));
    CHECK(cube.mean_polar == doctest::Approx(4.5).epsilon(0.01));
    CHECK(cube.mean_gauge >= 0.25);
    CHECK(cube.mean_polar + 2.0 * cube.se_polar >= 3.0);
    CHECK(cube.width_M > 0.0);
    CHECK(cube.width_Mstar > 0.0);
    CHECK(cube.lower_i > 0.0);
    CHECK(cube.lower_ii > 0.0);

    const CorollaryReport ball = corollary_checks(
        make_isotropic_ball_body(3), 100000, 19, 1, 0.01, 0.0, 1);
    CHECK(ball.mean_gauge == doctest::Approx(0.75).epsilon(0.01));
    // Exact polar mean n(n+2)/(n+1) for the scaled euclidean ball.
    CHECK(ball.mean_polar == doctest::Approx(3.75).epsilon(0.01));
    CHECK(ball.mean_polar + 2.0 * ball.se_polar >= 3.0);
}
