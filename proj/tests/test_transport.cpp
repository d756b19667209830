#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracle_helpers.hpp"
#include "sloc/errors.hpp"
#include "sloc/measures.hpp"
#include "sloc/rng.hpp"
#include "sloc/transport.hpp"

using namespace sloc;

namespace {
DiscreteMeasure make(const Eigen::MatrixXd& atoms, const Eigen::VectorXd& w)
{
    return DiscreteMeasure(atoms, w);
}
}  // namespace

TEST_CASE("identical measures cost nothing")
{
    Eigen::MatrixXd a(2, 3);
    a << 0, 1, -2, 3, 0.5, 1;
    Eigen::VectorXd w(3);
    w << 0.5, 0.25, 0.25;
    CHECK(t2_distance(make(a, w), make(a, w)) == doctest::Approx(0.0));
}

TEST_CASE("point masses and translations")
{
    Eigen::MatrixXd a(2, 1), b(2, 1);
    a << 1.0, 2.0;
    b << -1.0, 5.0;
    Eigen::VectorXd one(1);
    one << 1.0;
    CHECK(t2_distance(make(a, one), make(b, one)) ==
          doctest::Approx(4.0 + 9.0).epsilon(1e-12));

    // Translating every atom by v costs exactly |v|^2.
    Eigen::MatrixXd x(2, 3);
    x << 0, 1, 4, -1, 2, 2;
    Eigen::VectorXd w(3);
    w << 0.25, 0.5, 0.25;
    Eigen::Vector2d v(0.3, -0.7);
    Eigen::MatrixXd shifted = x.colwise() + v;
    CHECK(t2_distance(make(x, w), make(shifted, w)) ==
          doctest::Approx(v.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("hand-worked asymmetric pair")
{
    // mu = .75 at 0, .25 at 4; nu = .5 at 1, .5 at 3.  Optimal plan splits
    // the heavy atom: .5 -> 1, .25 -> 3, and sends .25 from 4 to 3.
    Eigen::MatrixXd xa(1, 2), xb(1, 2);
    xa << 0, 4;
    xb << 1, 3;
    Eigen::VectorXd wa(2), wb(2);
    wa << 0.75, 0.25;
    wb << 0.5, 0.5;
    const double want = 0.5 * 1.0 + 0.25 * 9.0 + 0.25 * 1.0;
    const TransportPlan plan = transport_plan(make(xa, wa), make(xb, wb));
    CHECK(plan.cost == doctest::Approx(want).epsilon(1e-12));
    CHECK(plan.flow.rows() == 2);
    CHECK(plan.flow.cols() == 2);
    // Plan marginals reproduce the measures.
    CHECK((plan.flow.rowwise().sum() - wa).norm() < 1e-12);
    CHECK((plan.flow.colwise().sum().transpose() - wb).norm() < 1e-12);
    CHECK(plan.flow.minCoeff() >= -1e-15);
}

TEST_CASE("solver agrees with exhaustive matching on random instances")
{
    RngStream s(17, 0);
    for (int rep = 0; rep < 20; ++rep) {
        const int dim = 1 + rep % 2;
        const int na = 2 + static_cast<int>(s.next_u32() % 3u);  // 2..4
        const int nb = 2 + static_cast<int>(s.next_u32() % 3u);
        const int D = 8;  // weights live on the 1/8 grid
        Eigen::MatrixXd xa(dim, na), xb(dim, nb);
        for (int j = 0; j < na; ++j)
            for (int d = 0; d < dim; ++d) xa(d, j) = s.next_gaussian();
        for (int j = 0; j < nb; ++j)
            for (int d = 0; d < dim; ++d) xb(d, j) = s.next_gaussian();
        auto units = [&](int m) {
            // m positive integers summing to D.
            std::vector<int> c(m, 1);
            for (int r = m; r < D; ++r)
                ++c[s.next_u32() % static_cast<std::uint32_t>(m)];
            return c;
        };
        const std::vector<int> ca = units(na), cb = units(nb);
        Eigen::VectorXd wa(na), wb(nb);
        for (int j = 0; j < na; ++j) wa[j] = double(ca[j]) / D;
        for (int j = 0; j < nb; ++j) wb[j] = double(cb[j]) / D;
        const double got = t2_distance(make(xa, wa), make(xb, wb));
        const double want = oracle::brute_force_t2(xa, wa, xb, wb, D);
        CHECK(got == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("symmetry of the distance")
{
    Eigen::MatrixXd xa(1, 3), xb(1, 2);
    xa << -2, 0, 1;
    xb << -1, 2;
    Eigen::VectorXd wa(3), wb(2);
    wa << 0.25, 0.25, 0.5;
    wb << 0.625, 0.375;
    const double ab = t2_distance(make(xa, wa), make(xb, wb));
    const double ba = t2_distance(make(xb, wb), make(xa, wa));
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ab == doctest::Approx(oracle::brute_force_t2(xa, wa, xb, wb, 8))
                    .epsilon(1e-10));
}

TEST_CASE("support size beyond the solver capability refuses")
{
    const int m = 200;
    Eigen::MatrixXd xa(1, m), xb(1, m);
    for (int j = 0; j < m; ++j) {
        xa(0, j) = j;
        xb(0, j) = j + 0.25;
    }
    Eigen::VectorXd w = Eigen::VectorXd::Constant(m, 1.0 / m);
    CHECK_THROWS_AS(t2_distance(make(xa, w), make(xb, w)), CapabilityError);
}
