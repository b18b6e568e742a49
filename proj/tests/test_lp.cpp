#include <flexcz/lp.hpp>
#include <flexcz/polytope.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace flexcz;

namespace
{

lp::Problem box_problem(Index n, double lo, double hi)
{
    lp::Problem p = lp::Problem::free(n);
    p.lower.setConstant(lo);
    p.upper.setConstant(hi);
    return p;
}

} // namespace

TEST(Lp, MinimumAtLowerBound)
{
    lp::Problem p = box_problem(1, 0.0, 1.0);
    p.objective << 1.0;
    const auto sol = lp::solve(p);
    ASSERT_EQ(sol.status, lp::Status::optimal);
    EXPECT_DOUBLE_EQ(sol.x[0], 0.0);
    EXPECT_DOUBLE_EQ(sol.objective_value, 0.0);
}

TEST(Lp, TextbookVertexTieBreak)
{
    lp::Problem p = lp::Problem::free(2);
    p.objective << -1.0, -1.0;
    p.lower.setZero();
    p.A_ineq.resize(1, 2);
    p.A_ineq << 1.0, 1.0;
    p.b_ineq.resize(1);
    p.b_ineq << 1.0;
    const auto sol = lp::solve(p);
    ASSERT_EQ(sol.status, lp::Status::optimal);
    EXPECT_NEAR(sol.objective_value, -1.0, 1e-12);
    // the lowest-index entering column reaches the vertex (1, 0)
    EXPECT_NEAR(sol.x[0], 1.0, 1e-12);
    EXPECT_NEAR(sol.x[1], 0.0, 1e-12);
}

TEST(Lp, CrossingRowsInfeasible)
{
    lp::Problem p = lp::Problem::free(1);
    p.objective << 1.0;
    p.A_ineq.resize(2, 1);
    p.A_ineq << -1.0, 1.0;
    p.b_ineq.resize(2);
    p.b_ineq << -1.0, 0.0;
    EXPECT_EQ(lp::solve(p).status, lp::Status::infeasible);
}

TEST(Lp, InvertedBoundsInfeasible)
{
    lp::Problem p = box_problem(1, 1.0, 0.0);
    p.objective << 1.0;
    EXPECT_EQ(lp::solve(p).status, lp::Status::infeasible);
}

TEST(Lp, UnboundedRay)
{
    lp::Problem p = lp::Problem::free(2);
    p.objective << -1.0, 0.0;
    p.lower.setZero();
    p.A_ineq.resize(1, 2);
    p.A_ineq << -1.0, 1.0;
    p.b_ineq.resize(1);
    p.b_ineq << 1.0;
    EXPECT_EQ(lp::solve(p).status, lp::Status::unbounded);
}

TEST(Lp, EqualityRowsNative)
{
    // min x + 2y  s.t. x + y = 3, x - y = 1
    lp::Problem p = lp::Problem::free(2);
    p.objective << 1.0, 2.0;
    p.A_eq.resize(2, 2);
    p.A_eq << 1.0, 1.0, 1.0, -1.0;
    p.b_eq.resize(2);
    p.b_eq << 3.0, 1.0;
    const auto sol = lp::solve(p);
    ASSERT_EQ(sol.status, lp::Status::optimal);
    EXPECT_NEAR(sol.x[0], 2.0, 1e-12);
    EXPECT_NEAR(sol.x[1], 1.0, 1e-12);
}

TEST(Lp, RedundantEqualityRows)
{
    lp::Problem p = box_problem(3, -5.0, 5.0);
    p.objective << 1.0, -1.0, 0.5;
    p.A_eq.resize(3, 3);
    p.A_eq << 1, 1, 0,
              0, 1, 1,
              1, 2, 1;
    p.b_eq.resize(3);
    p.b_eq << 1, 2, 3;
    lp::Simplex s(p);
    ASSERT_TRUE(s.feasible());
    const auto sol = s.minimize(p.objective);
    ASSERT_EQ(sol.status, lp::Status::optimal);
    EXPECT_LE((p.A_eq * sol.x - p.b_eq).cwiseAbs().maxCoeff(), 1e-9);
    const auto cert = s.dual_certificate();
    EXPECT_NEAR(cert.objective, sol.objective_value, 1e-6);
}

TEST(Lp, DimensionMismatchThrows)
{
    lp::Problem p = lp::Problem::free(2);
    p.A_ineq.resize(1, 3);
    p.b_ineq.resize(1);
    EXPECT_THROW(lp::solve(p), DimensionError);
}

TEST(Lp, WarmStartMatchesColdStart)
{
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    const Index n = 6, m = 14;
    lp::Problem p = box_problem(n, -3.0, 3.0);
    p.A_ineq.resize(m, n);
    p.b_ineq.resize(m);
    for (Index i = 0; i < m; ++i)
    {
        for (Index j = 0; j < n; ++j)
            p.A_ineq(i, j) = nd(rng);
        p.b_ineq[i] = 1.0 + std::abs(nd(rng));
    }
    lp::Simplex warm(p);
    for (int k = 0; k < 20; ++k)
    {
        Vector c(n);
        for (Index j = 0; j < n; ++j)
            c[j] = nd(rng);
        p.objective = c;
        const auto cold = lp::solve(p);
        const auto hot = warm.minimize(c);
        ASSERT_EQ(cold.status, lp::Status::optimal);
        ASSERT_EQ(hot.status, lp::Status::optimal);
        EXPECT_NEAR(cold.objective_value, hot.objective_value, 1e-9);
    }
}

TEST(VariableBounds, UnitSquare)
{
    HPolytope P(2);
    P.add_ineq(Vector::Unit(2, 0), 1.0);
    P.add_ineq(-Vector::Unit(2, 0), 0.0);
    P.add_ineq(Vector::Unit(2, 1), 1.0);
    P.add_ineq(-Vector::Unit(2, 1), 0.0);
    const auto [lb, ub] = variable_bounds(P, 0);
    EXPECT_DOUBLE_EQ(lb, 0.0);
    EXPECT_DOUBLE_EQ(ub, 1.0);
}

TEST(VariableBounds, Triangle)
{
    HPolytope P(2);
    P.add_ineq(-Vector::Unit(2, 0), 0.0);
    P.add_ineq(-Vector::Unit(2, 1), 0.0);
    P.add_ineq(Vector::Ones(2), 2.0);
    const auto [lb, ub] = variable_bounds(P, 1);
    EXPECT_NEAR(lb, 0.0, 1e-12);
    EXPECT_NEAR(ub, 2.0, 1e-12);
    const Bounds all = all_variable_bounds(P);
    EXPECT_NEAR(all.lower[0], 0.0, 1e-12);
    EXPECT_NEAR(all.upper[0], 2.0, 1e-12);
}

TEST(VariableBounds, UnboundedCoordinateNamed)
{
    HPolytope P(2);
    P.add_ineq(-Vector::Unit(2, 0), 0.0);
    P.add_ineq(Vector::Unit(2, 1), 1.0);
    P.add_ineq(-Vector::Unit(2, 1), 0.0);
    try
    {
        variable_bounds(P, 0);
        FAIL() << "expected UnboundedError";
    }
    catch (const UnboundedError& e)
    {
        EXPECT_NE(std::string(e.what()).find("coordinate 0"), std::string::npos);
    }
    const std::vector<std::string> names{"x", "y"};
    try
    {
        all_variable_bounds(P, &names);
        FAIL() << "expected UnboundedError";
    }
    catch (const UnboundedError& e)
    {
        EXPECT_NE(std::string(e.what()).find("coordinate x"), std::string::npos);
    }
}

TEST(VariableBounds, EmptyPolytopeThrows)
{
    HPolytope P(1);
    P.add_ineq(Vector::Constant(1, 1.0), 0.0);
    P.add_ineq(Vector::Constant(1, -1.0), -1.0);
    EXPECT_THROW(variable_bounds(P, 0), InfeasibleError);
}
