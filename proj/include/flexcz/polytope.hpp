#ifndef FLEXCZ_POLYTOPE_HPP_
#define FLEXCZ_POLYTOPE_HPP_

#include "error.hpp"
#include "lp.hpp"
#include "types.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace flexcz
{

/// {x | h'x <= zeta}
struct Halfspace
{
    Vector h;
    double zeta = 0.0;

    Halfspace() = default;

    Halfspace(Vector normal, double offset) : h(std::move(normal)), zeta(offset)
    {
        if (h.size() == 0 || !h.allFinite() || !std::isfinite(zeta))
            throw NumericalError("Halfspace: normal and offset must be finite.");
        if (h.cwiseAbs().maxCoeff() == 0.0)
            throw DimensionError("Halfspace: normal must be nonzero.");
    }
};

/// Linear constraint in either relation; used for batched set updates.
struct LinearConstraint
{
    enum class Relation { less_equal, equal };

    Vector h;
    double zeta = 0.0;
    Relation relation = Relation::less_equal;

    static LinearConstraint halfspace(Vector h, double zeta)
    {
        return {std::move(h), zeta, Relation::less_equal};
    }

    static LinearConstraint hyperplane(Vector h, double zeta)
    {
        return {std::move(h), zeta, Relation::equal};
    }
};

/// Polytope in halfspace representation with equality rows kept apart.
/// Row tags are optional labels used by the conversion pipeline to split
/// rows into offline and online groups.
struct HPolytope
{
    RowMatrix A_ineq;
    Vector b_ineq;
    RowMatrix A_eq;
    Vector b_eq;
    std::vector<std::string> ineq_tags;
    std::vector<std::string> eq_tags;
    bool irredundant = false;

    HPolytope() = default;

    explicit HPolytope(Index n)
    {
        A_ineq.resize(0, n);
        b_ineq.resize(0);
        A_eq.resize(0, n);
        b_eq.resize(0);
    }

    HPolytope(RowMatrix Ai, Vector bi, RowMatrix Ae, Vector be)
        : A_ineq(std::move(Ai)), b_ineq(std::move(bi)), A_eq(std::move(Ae)), b_eq(std::move(be))
    {
        validate();
    }

    Index dim() const { return A_ineq.cols(); }
    Index num_ineq() const { return A_ineq.rows(); }
    Index num_eq() const { return A_eq.rows(); }

    void validate() const
    {
        if (A_ineq.cols() != A_eq.cols())
            throw DimensionError("HPolytope: inequality and equality blocks must have the same column count.");
        if (A_ineq.rows() != b_ineq.size() || A_eq.rows() != b_eq.size())
            throw DimensionError("HPolytope: row count does not match rhs length.");
        if (!ineq_tags.empty() && static_cast<Index>(ineq_tags.size()) != A_ineq.rows())
            throw DimensionError("HPolytope: one tag per inequality row required.");
        if (!eq_tags.empty() && static_cast<Index>(eq_tags.size()) != A_eq.rows())
            throw DimensionError("HPolytope: one tag per equality row required.");
    }

    Halfspace halfspace(Index i) const
    {
        return Halfspace(A_ineq.row(i).transpose(), b_ineq[i]);
    }

    void add_ineq(const Vector& h, double zeta, std::string tag = {})
    {
        append_row(A_ineq, b_ineq, h, zeta);
        if (!tag.empty() || !ineq_tags.empty())
        {
            ineq_tags.resize(static_cast<std::size_t>(A_ineq.rows() - 1));
            ineq_tags.push_back(std::move(tag));
        }
    }

    void add_eq(const Vector& h, double zeta, std::string tag = {})
    {
        append_row(A_eq, b_eq, h, zeta);
        if (!tag.empty() || !eq_tags.empty())
        {
            eq_tags.resize(static_cast<std::size_t>(A_eq.rows() - 1));
            eq_tags.push_back(std::move(tag));
        }
    }

    bool contains(const Vector& x, double tol = eps_feas) const
    {
        if (x.size() != dim())
            throw DimensionError("HPolytope::contains: point dimension mismatch.");
        if (num_ineq() > 0 && ((A_ineq * x - b_ineq).array() > tol).any())
            return false;
        if (num_eq() > 0 && ((A_eq * x - b_eq).cwiseAbs().array() > tol).any())
            return false;
        return true;
    }

    private:
        static void append_row(RowMatrix& A, Vector& b, const Vector& h, double zeta)
        {
            if (h.size() != A.cols())
                throw DimensionError("HPolytope: row length must equal the dimension.");
            A.conservativeResize(A.rows() + 1, Eigen::NoChange);
            A.row(A.rows() - 1) = h.transpose();
            b.conservativeResize(b.size() + 1);
            b[b.size() - 1] = zeta;
        }
};

/// Box given by per-coordinate bounds.
struct Bounds
{
    Vector lower;
    Vector upper;
};

namespace detail
{

/// Builds the LP feasibility problem of a polytope. Rows with a single
/// nonzero become variable bounds; empty rows are checked directly.
inline lp::Problem polytope_problem(const HPolytope& P)
{
    P.validate();
    const Index n = P.dim();
    lp::Problem prob = lp::Problem::free(n);

    bool conflict = false;
    std::vector<Index> keep_ineq, keep_eq;

    auto singleton = [](const auto& row, Index& col) {
        Index count = 0;
        for (Index j = 0; j < row.size(); ++j)
        {
            if (row[j] != 0.0)
            {
                ++count;
                col = j;
                if (count > 1) break;
            }
        }
        return count;
    };

    for (Index i = 0; i < P.num_ineq(); ++i)
    {
        Index j = -1;
        const Index cnt = singleton(P.A_ineq.row(i), j);
        if (cnt == 0)
        {
            if (P.b_ineq[i] < -eps_feas) conflict = true;
        }
        else if (cnt == 1)
        {
            const double a = P.A_ineq(i, j);
            const double v = P.b_ineq[i] / a;
            if (a > 0.0) prob.upper[j] = std::min(prob.upper[j], v);
            else prob.lower[j] = std::max(prob.lower[j], v);
        }
        else
        {
            keep_ineq.push_back(i);
        }
    }
    for (Index i = 0; i < P.num_eq(); ++i)
    {
        Index j = -1;
        const Index cnt = singleton(P.A_eq.row(i), j);
        if (cnt == 0)
        {
            if (std::abs(P.b_eq[i]) > eps_feas) conflict = true;
        }
        else if (cnt == 1)
        {
            const double v = P.b_eq[i] / P.A_eq(i, j);
            prob.upper[j] = std::min(prob.upper[j], v);
            prob.lower[j] = std::max(prob.lower[j], v);
        }
        else
        {
            keep_eq.push_back(i);
        }
    }

    prob.A_ineq.resize(static_cast<Index>(keep_ineq.size()), n);
    prob.b_ineq.resize(static_cast<Index>(keep_ineq.size()));
    for (std::size_t k = 0; k < keep_ineq.size(); ++k)
    {
        prob.A_ineq.row(static_cast<Index>(k)) = P.A_ineq.row(keep_ineq[k]);
        prob.b_ineq[static_cast<Index>(k)] = P.b_ineq[keep_ineq[k]];
    }
    prob.A_eq.resize(static_cast<Index>(keep_eq.size()), n);
    prob.b_eq.resize(static_cast<Index>(keep_eq.size()));
    for (std::size_t k = 0; k < keep_eq.size(); ++k)
    {
        prob.A_eq.row(static_cast<Index>(k)) = P.A_eq.row(keep_eq[k]);
        prob.b_eq[static_cast<Index>(k)] = P.b_eq[keep_eq[k]];
    }

    // tolerate bounds that cross by round-off only
    for (Index j = 0; j < n; ++j)
    {
        if (prob.lower[j] > prob.upper[j])
        {
            if (prob.lower[j] - prob.upper[j] <= eps_feas * std::max(1.0, std::abs(prob.lower[j])))
                prob.upper[j] = prob.lower[j];
        }
    }
    if (conflict && n > 0)
    {
        prob.lower[0] = 1.0;
        prob.upper[0] = 0.0;
    }
    return prob;
}

} // namespace detail

/// Support value max h'x over the polytope; nullopt when unbounded.
inline std::optional<double> support(const HPolytope& P, const Vector& h)
{
    if (h.size() != P.dim())
        throw DimensionError("support(HPolytope): direction dimension mismatch.");
    lp::Simplex s(detail::polytope_problem(P));
    if (!s.feasible())
        throw InfeasibleError("support(HPolytope): polytope is empty.");
    const lp::Solution sol = s.minimize(-h);
    if (sol.status == lp::Status::unbounded)
        return std::nullopt;
    return -sol.objective_value;
}

inline bool is_empty(const HPolytope& P)
{
    lp::Simplex s(detail::polytope_problem(P));
    return !s.feasible();
}

/// Range of coordinate i over the polytope (two LPs).
inline std::pair<double, double> variable_bounds(const HPolytope& P, Index i)
{
    if (i < 0 || i >= P.dim())
        throw DimensionError("variable_bounds: coordinate " + std::to_string(i) + " out of range.");
    lp::Simplex s(detail::polytope_problem(P));
    if (!s.feasible())
        throw InfeasibleError("variable_bounds: polytope is empty.");
    Vector c = Vector::Zero(P.dim());
    c[i] = 1.0;
    const lp::Solution lo = s.minimize(c);
    const lp::Solution hi = s.minimize(-c);
    if (lo.status == lp::Status::unbounded || hi.status == lp::Status::unbounded)
        throw UnboundedError("variable_bounds: coordinate " + std::to_string(i) + " is unbounded.");
    return {lo.objective_value, -hi.objective_value};
}

/// Ranges of all coordinates. One phase 1, then the 2n objectives are
/// re-optimized from the previous basis. A coordinate sitting on one of its
/// own declared bounds at any visited optimum needs no LP for that side.
inline Bounds all_variable_bounds(const HPolytope& P, const std::vector<std::string>* names = nullptr)
{
    const lp::Problem prob = detail::polytope_problem(P);
    const Index n = P.dim();
    lp::Options opt;
    opt.refine = false;
    lp::Simplex s(prob, opt);
    if (!s.feasible())
        throw InfeasibleError("variable_bounds: polytope is empty.");

    Bounds out{Vector::Constant(n, -inf), Vector::Constant(n, inf)};
    std::vector<char> have_lo(static_cast<std::size_t>(n), 0), have_hi(static_cast<std::size_t>(n), 0);

    auto harvest = [&](const Vector& x) {
        for (Index j = 0; j < n; ++j)
        {
            if (!have_lo[j] && std::isfinite(prob.lower[j]) && x[j] == prob.lower[j])
            {
                have_lo[j] = 1;
                out.lower[j] = prob.lower[j];
            }
            if (!have_hi[j] && std::isfinite(prob.upper[j]) && x[j] == prob.upper[j])
            {
                have_hi[j] = 1;
                out.upper[j] = prob.upper[j];
            }
        }
    };

    auto name = [&](Index i) {
        return names && i < static_cast<Index>(names->size()) ? (*names)[i] : std::to_string(i);
    };

    Vector c = Vector::Zero(n);
    for (Index i = 0; i < n; ++i)
    {
        for (int side = 0; side < 2; ++side)
        {
            if (side == 0 ? have_lo[i] : have_hi[i])
                continue;
            c.setZero();
            c[i] = side == 0 ? 1.0 : -1.0;
            const lp::Solution sol = s.minimize(c);
            if (sol.status == lp::Status::unbounded)
                throw UnboundedError("variable_bounds: coordinate " + name(i) + " is unbounded.");
            if (side == 0)
            {
                out.lower[i] = sol.x[i];
                have_lo[i] = 1;
            }
            else
            {
                out.upper[i] = sol.x[i];
                have_hi[i] = 1;
            }
            harvest(sol.x);
        }
        if (out.lower[i] > out.upper[i])
            std::swap(out.lower[i], out.upper[i]);
    }
    return out;
}

} // namespace flexcz

#endif
