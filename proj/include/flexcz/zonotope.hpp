#ifndef FLEXCZ_ZONOTOPE_HPP_
#define FLEXCZ_ZONOTOPE_HPP_

/**
 * @file zonotope.hpp
 * @brief Zonotopes and constrained zonotopes.
 *
 * A constrained zonotope <c, G, A, b> is the set
 *   { c + G a  |  A a = b,  ||a||_inf <= 1 }.
 * All types are immutable values; operations return fresh objects.
 * G and A are dense row-major and keep zero columns explicitly.
 */

#include "error.hpp"
#include "lp.hpp"
#include "polytope.hpp"
#include "types.hpp"

#include <algorithm>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace flexcz
{

class Zonotope
{
    public:
        Zonotope() = default;

        Zonotope(Vector c, RowMatrix G) : c_(std::move(c)), G_(std::move(G))
        {
            if (G_.rows() != c_.size())
                throw DimensionError("Zonotope: generator row count must equal center length.");
            if (!c_.allFinite() || !G_.allFinite())
                throw NumericalError("Zonotope: non-finite entry.");
        }

        Index dim() const { return c_.size(); }
        Index num_generators() const { return G_.cols(); }
        const Vector& center() const { return c_; }
        const RowMatrix& generators() const { return G_; }

        double support(const Vector& d) const
        {
            if (d.size() != dim())
                throw DimensionError("Zonotope::support: direction dimension mismatch.");
            return d.dot(c_) + (G_.transpose() * d).cwiseAbs().sum();
        }

    private:
        Vector c_;
        RowMatrix G_;
};

class ConstrainedZonotope;

inline ConstrainedZonotope reserve_generators(const ConstrainedZonotope& Z, Index k);

namespace detail
{

// single new constraint row: h'G and rhs, plus the slack coefficient
struct RowUpdate
{
    Eigen::RowVectorXd hG;
    double rhs = 0.0;
    double slack = 0.0;     // d_m / 2 for halfspaces
    bool adds_generator = false;
};

inline ConstrainedZonotope append_rows(const ConstrainedZonotope& Z, const std::vector<RowUpdate>& rows);

} // namespace detail

/// Rows [A | b] of a constrained zonotope. Blocks are immutable and shared
/// between sets derived from one another.
struct ConstraintBlock
{
    RowMatrix A;
    Vector b;
};

class ConstrainedZonotope
{
    public:
        using Block = std::shared_ptr<const ConstraintBlock>;

        ConstrainedZonotope() : ConstrainedZonotope(Vector(0), RowMatrix(0, 0), RowMatrix(0, 0), Vector(0)) {}

        ConstrainedZonotope(Vector c, RowMatrix G, RowMatrix A, Vector b)
            : ConstrainedZonotope(std::move(c), std::make_shared<const RowMatrix>(std::move(G)),
                  {std::make_shared<const ConstraintBlock>(ConstraintBlock{std::move(A), std::move(b)})}, 0, true)
        {
        }

        // a zonotope is a constrained zonotope without constraints
        explicit ConstrainedZonotope(const Zonotope& Z)
            : ConstrainedZonotope(Z.center(), Z.generators(), RowMatrix(0, Z.num_generators()), Vector(0))
        {
        }

        Index dim() const { return c_.size(); }
        Index num_generators() const { return G_->cols(); }
        Index num_constraints() const { return m_; }

        /// Trailing zero generator columns set aside by reserve_generators.
        /// Halfspace intersections fill these before appending new columns.
        Index reserved_generators() const { return reserved_; }

        const Vector& center() const { return c_; }
        const RowMatrix& generators() const { return *G_; }

        /// Row blocks in order; stacking them gives A and b.
        const std::vector<Block>& constraint_blocks() const { return blocks_; }

        RowMatrix constraint_matrix() const
        {
            if (blocks_.size() == 1)
                return blocks_.front()->A;
            RowMatrix A(m_, num_generators());
            Index r = 0;
            for (const auto& blk : blocks_)
            {
                A.middleRows(r, blk->A.rows()) = blk->A;
                r += blk->A.rows();
            }
            return A;
        }

        Vector constraint_vector() const
        {
            Vector b(m_);
            Index r = 0;
            for (const auto& blk : blocks_)
            {
                b.segment(r, blk->b.size()) = blk->b;
                r += blk->b.size();
            }
            return b;
        }

        /// Same constraints, new center and generators. The constraint rows
        /// are shared, not copied.
        ConstrainedZonotope with_generators(Vector c, RowMatrix G) const
        {
            const bool keep = G.cols() == num_generators();
            return ConstrainedZonotope(std::move(c), std::make_shared<const RowMatrix>(std::move(G)), blocks_,
                keep ? reserved_ : 0, false);
        }

        /// Marks the last k generator columns, which must already be zero in
        /// G and A, as reserved. Storage is shared.
        ConstrainedZonotope with_reserved_tail(Index k) const
        {
            if (k < 0 || k > num_generators())
                throw DimensionError("with_reserved_tail: count out of range.");
            bool zero = !(G_->rightCols(k).array() != 0.0).any();
            for (const auto& blk : blocks_)
                zero = zero && !(blk->A.rightCols(k).array() != 0.0).any();
            if (!zero)
                throw DimensionError("with_reserved_tail: reserved columns must be zero.");
            return ConstrainedZonotope(c_, G_, blocks_, std::max(reserved_, k), false);
        }

        friend bool operator==(const ConstrainedZonotope& x, const ConstrainedZonotope& y)
        {
            if (x.dim() != y.dim() || x.num_generators() != y.num_generators()
                || x.num_constraints() != y.num_constraints())
                return false;
            return x.c_ == y.c_ && *x.G_ == *y.G_ && x.constraint_matrix() == y.constraint_matrix()
                && x.constraint_vector() == y.constraint_vector();
        }

    private:
        friend ConstrainedZonotope detail::append_rows(const ConstrainedZonotope&, const std::vector<detail::RowUpdate>&);
        friend ConstrainedZonotope reserve_generators(const ConstrainedZonotope&, Index);

        // check_constraints = false when the blocks come from an already validated set
        ConstrainedZonotope(Vector c, std::shared_ptr<const RowMatrix> G, std::vector<Block> blocks, Index reserved,
            bool check_constraints)
            : c_(std::move(c)), G_(std::move(G)), blocks_(std::move(blocks)), reserved_(reserved)
        {
            if (G_->rows() != c_.size())
                throw DimensionError("ConstrainedZonotope: generator row count must equal center length.");
            for (const auto& blk : blocks_)
            {
                if (blk->A.cols() != G_->cols())
                    throw DimensionError("ConstrainedZonotope: constraint and generator column counts differ.");
                if (blk->A.rows() != blk->b.size())
                    throw DimensionError("ConstrainedZonotope: constraint row count must equal b length.");
                if (check_constraints && (!blk->A.allFinite() || !blk->b.allFinite()))
                    throw NumericalError("ConstrainedZonotope: non-finite entry.");
                m_ += blk->A.rows();
            }
            if (!c_.allFinite() || (check_constraints && !G_->allFinite()))
                throw NumericalError("ConstrainedZonotope: non-finite entry.");
        }

        Vector c_;
        std::shared_ptr<const RowMatrix> G_;
        std::vector<Block> blocks_;
        Index m_ = 0;
        Index reserved_ = 0;
};

/// Box [lb, ub] as a zonotope with diagonal generators. Zero-width
/// coordinates keep their (zero) generator column.
inline Zonotope bounding_zonotope(const Vector& lb, const Vector& ub)
{
    if (lb.size() != ub.size())
        throw DimensionError("bounding_zonotope: bound vectors differ in length.");
    for (Index i = 0; i < lb.size(); ++i)
    {
        if (!std::isfinite(lb[i]) || !std::isfinite(ub[i]))
            throw NumericalError("bounding_zonotope: non-finite bound at coordinate " + std::to_string(i) + ".");
        if (lb[i] > ub[i])
            throw InfeasibleError("bounding_zonotope: lower bound exceeds upper bound at coordinate "
                + std::to_string(i) + ".");
    }
    const Vector c = 0.5 * (ub + lb);
    RowMatrix G = RowMatrix::Zero(lb.size(), lb.size());
    G.diagonal() = 0.5 * (ub - lb);
    return Zonotope(c, std::move(G));
}

/// Interval-hull slack of a halfspace over the current generators:
/// d_m = zeta - h'c + sum_i |h'g_i|.
inline double interval_slack(const ConstrainedZonotope& Z, const Vector& h, double zeta)
{
    return zeta - h.dot(Z.center()) + (Z.generators().transpose() * h).cwiseAbs().sum();
}

namespace detail
{

inline double clamp_slack(double dm, double scale, const char* who)
{
    // allow round-off when the halfspace touches the interval hull exactly
    if (dm < 0.0)
    {
        if (dm >= -eps_feas * std::max(1.0, scale))
            return 0.0;
        throw EmptyIntersectionError(std::string(who)
            + ": halfspace misses the interval hull of the generators (d_m = " + std::to_string(dm) + ").");
    }
    return dm;
}

// h'G and h'c accumulated over the nonzeros of h in ascending order, so the
// result does not depend on who computes it
inline void project_row(const Vector& c, const RowMatrix& G, const Vector& h, Eigen::RowVectorXd& hG, double& hc)
{
    hG = Eigen::RowVectorXd::Zero(G.cols());
    hc = 0.0;
    for (Index j = 0; j < h.size(); ++j)
    {
        const double a = h[j];
        if (a == 0.0)
            continue;
        hG.noalias() += a * G.row(j);
        hc += a * c[j];
    }
}

inline RowUpdate halfspace_row(const Vector& c, const RowMatrix& G, const Vector& h, double zeta)
{
    RowUpdate u;
    double hc = 0.0;
    project_row(c, G, h, u.hG, hc);
    const double dm = clamp_slack(zeta - hc + u.hG.cwiseAbs().sum(), std::abs(zeta) + std::abs(hc),
        "intersect_halfspace");
    u.slack = 0.5 * dm;
    u.rhs = zeta - hc - 0.5 * dm;
    u.adds_generator = true;
    return u;
}

inline RowUpdate hyperplane_row(const Vector& c, const RowMatrix& G, const Vector& h, double zeta)
{
    RowUpdate u;
    double hc = 0.0;
    project_row(c, G, h, u.hG, hc);
    u.rhs = zeta - hc;
    return u;
}

// assembles <c, [G 0], [[A 0]; rows], [b; rhs]> in one allocation. Slack
// coefficients go into reserved zero columns when enough are left; then G
// is shared and A grows by a single contiguous copy.
inline ConstrainedZonotope append_rows(const ConstrainedZonotope& Z, const std::vector<RowUpdate>& rows)
{
    const Index n = Z.dim();
    const Index ng = Z.num_generators();
    const Index m = Z.num_constraints();
    Index added = 0;
    for (const auto& r : rows)
    {
        added += r.adds_generator ? 1 : 0;
        if (!r.hG.allFinite() || !std::isfinite(r.rhs) || !std::isfinite(r.slack))
            throw NumericalError("intersect: non-finite constraint row.");
    }

    const bool in_place = added <= Z.reserved_;
    const Index ng2 = in_place ? ng : ng + added;
    const Index m2 = m + static_cast<Index>(rows.size());

    std::shared_ptr<const RowMatrix> G2 = Z.G_;
    if (!in_place)
    {
        RowMatrix G(n, ng2);
        G.leftCols(ng) = Z.generators();
        G.rightCols(added).setZero();
        G2 = std::make_shared<const RowMatrix>(std::move(G));
    }

    std::vector<ConstrainedZonotope::Block> blocks;
    if (in_place)
    {
        blocks = Z.blocks_;
    }
    else if (m > 0)
    {
        // widen the existing rows into one block
        ConstraintBlock wide{RowMatrix(m, ng2), Z.constraint_vector()};
        Index r = 0;
        for (const auto& blk : Z.blocks_)
            for (Index i = 0; i < blk->A.rows(); ++i, ++r)
            {
                std::copy_n(blk->A.row(i).data(), ng, wide.A.row(r).data());
                std::fill_n(wide.A.row(r).data() + ng, added, 0.0);
            }
        blocks.push_back(std::make_shared<const ConstraintBlock>(std::move(wide)));
    }

    ConstraintBlock fresh{RowMatrix::Zero(m2 - m, ng2), Vector(m2 - m)};
    Index col = in_place ? ng - Z.reserved_ : ng;
    for (std::size_t k = 0; k < rows.size(); ++k)
    {
        const Index i = static_cast<Index>(k);
        fresh.A.block(i, 0, 1, ng) = rows[k].hG;
        if (rows[k].adds_generator)
            fresh.A(i, col++) = rows[k].slack;
        fresh.b[i] = rows[k].rhs;
    }
    if (!rows.empty())
        blocks.push_back(std::make_shared<const ConstraintBlock>(std::move(fresh)));
    return ConstrainedZonotope(Z.center(), std::move(G2), std::move(blocks), in_place ? Z.reserved_ - added : 0,
        false);
}

inline void check_normal(const ConstrainedZonotope& Z, const Vector& h, const char* who)
{
    if (h.size() != Z.dim())
        throw DimensionError(std::string(who) + ": normal length must equal the set dimension.");
    if (!h.allFinite())
        throw NumericalError(std::string(who) + ": non-finite normal.");
}

} // namespace detail

/// Z cap {h'x <= zeta}: one new generator column and one constraint row.
inline ConstrainedZonotope intersect_halfspace(const ConstrainedZonotope& Z, const Halfspace& hs)
{
    detail::check_normal(Z, hs.h, "intersect_halfspace");
    return detail::append_rows(Z, {detail::halfspace_row(Z.center(), Z.generators(), hs.h, hs.zeta)});
}

/// Z cap {h'x = zeta}: one constraint row, no new generator.
inline ConstrainedZonotope intersect_hyperplane(const ConstrainedZonotope& Z, const Vector& h, double zeta)
{
    detail::check_normal(Z, h, "intersect_hyperplane");
    if (h.cwiseAbs().maxCoeff() == 0.0)
        throw DimensionError("intersect_hyperplane: normal must be nonzero.");
    return detail::append_rows(Z, {detail::hyperplane_row(Z.center(), Z.generators(), h, zeta)});
}

/// Sequential application of several constraints, assembled in a single
/// allocation. Appended generator columns are zero, so every row can be
/// computed against the generators of the input set.
inline ConstrainedZonotope intersect(const ConstrainedZonotope& Z, std::span<const LinearConstraint> rows)
{
    std::vector<detail::RowUpdate> updates;
    updates.reserve(rows.size());
    for (const auto& r : rows)
    {
        detail::check_normal(Z, r.h, "intersect");
        if (r.relation == LinearConstraint::Relation::equal)
            updates.push_back(detail::hyperplane_row(Z.center(), Z.generators(), r.h, r.zeta));
        else
            updates.push_back(detail::halfspace_row(Z.center(), Z.generators(), r.h, r.zeta));
    }
    return detail::append_rows(Z, updates);
}

/// M Z = <Mc, MG, A, b>. Only the nonzeros of M are visited, so a
/// coordinate selection costs one generator-row copy per selected row.
inline ConstrainedZonotope linear_map(const ConstrainedZonotope& Z, const RowMatrix& M)
{
    if (M.cols() != Z.dim())
        throw DimensionError("linear_map: matrix column count must equal the set dimension.");
    Vector c(M.rows());
    RowMatrix G(M.rows(), Z.num_generators());
    Eigen::RowVectorXd row;
    for (Index i = 0; i < M.rows(); ++i)
    {
        detail::project_row(Z.center(), Z.generators(), M.row(i).transpose(), row, c[i]);
        G.row(i) = row;
    }
    return Z.with_generators(std::move(c), std::move(G));
}

/// Appends k zero generator columns (zero in G and A); the set is unchanged.
inline ConstrainedZonotope append_zero_generators(const ConstrainedZonotope& Z, Index k)
{
    RowMatrix G = RowMatrix::Zero(Z.dim(), Z.num_generators() + k);
    G.leftCols(Z.num_generators()) = Z.generators();
    RowMatrix A = RowMatrix::Zero(Z.num_constraints(), Z.num_generators() + k);
    A.leftCols(Z.num_generators()) = Z.constraint_matrix();
    return ConstrainedZonotope(Z.center(), std::move(G), std::move(A), Z.constraint_vector());
}

/// append_zero_generators, but the new columns are kept for the slack
/// generators of later halfspace intersections. The set is unchanged.
inline ConstrainedZonotope reserve_generators(const ConstrainedZonotope& Z, Index k)
{
    if (k < 0)
        throw DimensionError("reserve_generators: count must be non-negative.");
    const auto padded = append_zero_generators(Z, k);
    return ConstrainedZonotope(padded.c_, padded.G_, padded.blocks_, Z.reserved_ + k, false);
}

// ---- LP-backed queries ----

namespace detail
{

// feasibility problem over the internal factors
inline lp::Problem factor_problem(const ConstrainedZonotope& Z)
{
    lp::Problem p = lp::Problem::free(Z.num_generators());
    p.lower.setConstant(-1.0);
    p.upper.setConstant(1.0);
    p.A_eq = Z.constraint_matrix();
    p.b_eq = Z.constraint_vector();
    return p;
}

} // namespace detail

struct SupportResult
{
    double value = 0.0;
    Vector witness;
};

/// Support-function evaluator that keeps one simplex tableau alive so a
/// sweep over many directions reuses the previous optimal basis.
class SupportOracle
{
    public:
        explicit SupportOracle(const ConstrainedZonotope& Z, lp::Options opt = {})
            : Z_(&Z), simplex_(detail::factor_problem(Z), opt)
        {
        }

        bool empty() const { return !simplex_.feasible(); }

        SupportResult operator()(const Vector& d)
        {
            if (d.size() != Z_->dim())
                throw DimensionError("support: direction dimension mismatch.");
            if (!d.allFinite())
                throw NumericalError("support: non-finite direction.");
            if (empty())
                throw InfeasibleError("support: constrained zonotope is empty.");
            const Vector g = Z_->generators().transpose() * d;
            const lp::Solution sol = simplex_.minimize(-g);
            if (sol.status != lp::Status::optimal)
                throw NumericalError("support: LP over the internal factors did not reach optimality.");
            SupportResult r;
            r.witness = Z_->center() + Z_->generators() * sol.x;
            r.value = d.dot(Z_->center()) + g.dot(sol.x);
            return r;
        }

        const lp::Simplex& simplex() const { return simplex_; }

    private:
        const ConstrainedZonotope* Z_;
        lp::Simplex simplex_;
};

inline SupportResult support(const ConstrainedZonotope& Z, const Vector& d)
{
    SupportOracle oracle(Z);
    return oracle(d);
}

inline std::vector<double> support_values(const ConstrainedZonotope& Z, std::span<const Vector> directions)
{
    SupportOracle oracle(Z);
    std::vector<double> out;
    out.reserve(directions.size());
    for (const auto& d : directions)
        out.push_back(oracle(d).value);
    return out;
}

inline bool is_empty(const ConstrainedZonotope& Z)
{
    if (Z.num_constraints() == 0)
        return false;
    lp::Simplex s(detail::factor_problem(Z));
    return !s.feasible();
}

/// True iff some factor vector a with ||a||_inf <= 1, Aa = b maps within tol
/// (inf-norm) of x.
inline bool contains(const ConstrainedZonotope& Z, const Vector& x, double tol = default_contains_tol)
{
    if (x.size() != Z.dim())
        throw DimensionError("contains: point dimension mismatch.");
    lp::Problem p = detail::factor_problem(Z);
    const Index n = Z.dim();
    p.A_ineq.resize(2 * n, Z.num_generators());
    p.A_ineq.topRows(n) = Z.generators();
    p.A_ineq.bottomRows(n) = -Z.generators();
    p.b_ineq.resize(2 * n);
    const Vector r = x - Z.center();
    p.b_ineq.head(n) = r.array() + tol;
    p.b_ineq.tail(n) = -r.array() + tol;
    lp::Simplex s(p);
    return s.feasible();
}

/// True iff the halfspace removes part of the set.
inline bool halfspace_is_cutting(const ConstrainedZonotope& Z, const Halfspace& hs)
{
    detail::check_normal(Z, hs.h, "halfspace_is_cutting");
    SupportOracle oracle(Z);
    if (oracle.empty())
        throw InfeasibleError("halfspace_is_cutting: constrained zonotope is empty.");
    return oracle(hs.h).value > hs.zeta + eps_feas;
}

/// Unit directions at n uniform angles starting from angle 0.
inline std::vector<Vector> uniform_directions_2d(Index count)
{
    std::vector<Vector> dirs;
    dirs.reserve(static_cast<std::size_t>(count));
    for (Index k = 0; k < count; ++k)
    {
        const double th = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(count);
        Vector d(2);
        d << std::cos(th), std::sin(th);
        dirs.push_back(std::move(d));
    }
    return dirs;
}

} // namespace flexcz

#endif
