#ifndef FLEXCZ_AGGREGATE_HPP_
#define FLEXCZ_AGGREGATE_HPP_

/**
 * @file aggregate.hpp
 * @brief Polytope to constrained zonotope conversion and FOR computation.
 *
 * The conversion starts from a bounding box, applies every equality row as a
 * hyperplane and every static inequality row as a halfspace (offline), then
 * the dynamic inequality rows (online). Offline rows are computed against
 * the box generators only: appended slack columns are zero and never change
 * h'G, so rows are independent and can be filled by any number of workers.
 */

#include "error.hpp"
#include "grid.hpp"
#include "polytope.hpp"
#include "types.hpp"
#include "zonotope.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace flexcz
{

enum class BoundsMode
{
    exact_lp,   // two LPs per variable
    enlarged,   // caller-supplied box scaled about its center
};

struct ConversionConfig
{
    BoundsMode bounds_mode = BoundsMode::exact_lp;
    double enlarge_factor = 1.0;
    bool prune_redundant = false;
    std::set<std::string> dynamic_tags{tags::gen_bound};
    bool parallel = false;
    unsigned threads = 0;               // 0 = hardware concurrency, at least 2

    static ConversionConfig exact() { return {}; }

    static ConversionConfig enlarged(double factor)
    {
        ConversionConfig c;
        c.bounds_mode = BoundsMode::enlarged;
        c.enlarge_factor = factor;
        return c;
    }
};

struct ConversionReport
{
    double bounds_seconds = 0.0;        // part of offline_seconds
    double offline_seconds = 0.0;
    double online_seconds = 0.0;
    double projection_seconds = 0.0;
    Index n = 0;                        // polytope dimension
    Index n_g = 0;
    Index m = 0;
    Index rows_static = 0;              // equality + static inequality rows applied offline
    Index rows_dynamic = 0;
    Index rows_skipped = 0;             // pruned as non-cutting
    unsigned threads = 1;
    std::string bounds_mode = "exact";
};

struct Conversion
{
    ConstrainedZonotope offline;        // after the static rows
    ConstrainedZonotope cz;             // after the dynamic rows
    ConversionReport report;
};

namespace detail
{

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline unsigned worker_count(const ConversionConfig& cfg)
{
    if (!cfg.parallel)
        return 1;
    if (cfg.threads > 0)
        return cfg.threads;
    return std::max(2u, std::thread::hardware_concurrency());
}

/// Runs body(begin, end) over contiguous chunks of [0, count). The first
/// exception (by chunk order) is rethrown after all workers joined.
template<typename Body>
void parallel_chunks(Index count, unsigned workers, Body&& body)
{
    if (workers <= 1 || count < 2)
    {
        body(Index(0), count);
        return;
    }
    const Index chunks = std::min<Index>(workers, count);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chunks));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(chunks));
    for (Index t = 0; t < chunks; ++t)
    {
        const Index begin = count * t / chunks;
        const Index end = count * (t + 1) / chunks;
        pool.emplace_back([&, t, begin, end]() {
            try
            {
                body(begin, end);
            }
            catch (...)
            {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool)
        th.join();
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

inline bool is_dynamic(const HPolytope& P, Index i, const ConversionConfig& cfg)
{
    return !P.ineq_tags.empty() && cfg.dynamic_tags.count(P.ineq_tags[static_cast<std::size_t>(i)]) > 0;
}

inline Bounds pad(Bounds B)
{
    // the LP bounds are exact up to round-off; widen by a hair so the box
    // provably contains the polytope
    for (Index i = 0; i < B.lower.size(); ++i)
    {
        B.lower[i] -= 1e-9 * (1.0 + std::abs(B.lower[i]));
        B.upper[i] += 1e-9 * (1.0 + std::abs(B.upper[i]));
    }
    return B;
}

} // namespace detail

/// Box [c - f r, c + f r] for the box [lb, ub] = [c - r, c + r].
inline Bounds enlarge(const Bounds& base, double factor)
{
    if (!(factor >= 1.0))
        throw DimensionError("enlarge: factor must be at least 1.");
    if (base.lower.size() != base.upper.size())
        throw DimensionError("enlarge: bound vectors differ in length.");
    Bounds out;
    const Vector c = 0.5 * (base.upper + base.lower);
    const Vector r = 0.5 * (base.upper - base.lower);
    out.lower = c - factor * r;
    out.upper = c + factor * r;
    return out;
}

/// Converts a bounded polytope into an equal constrained zonotope. In
/// enlarged mode `base` must bound the polytope (it is scaled by the factor).
inline Conversion polytope_to_cz(const HPolytope& P, const ConversionConfig& cfg, const Bounds* base = nullptr,
    const std::vector<std::string>* names = nullptr)
{
    P.validate();
    const Index n = P.dim();
    Conversion out;
    ConversionReport& rep = out.report;
    rep.n = n;
    rep.threads = detail::worker_count(cfg);

    const auto t_off = detail::Clock::now();

    Bounds box;
    if (cfg.bounds_mode == BoundsMode::exact_lp)
    {
        box = detail::pad(all_variable_bounds(P, names));
        rep.bounds_mode = "exact";
    }
    else
    {
        if (base == nullptr)
            throw DimensionError("polytope_to_cz: enlarged bounds need a base box.");
        if (base->lower.size() != n || base->upper.size() != n)
            throw DimensionError("polytope_to_cz: base box dimension mismatch.");
        box = enlarge(*base, cfg.enlarge_factor);
        rep.bounds_mode = "enlarged:" + std::to_string(cfg.enlarge_factor);
    }
    rep.bounds_seconds = detail::seconds_since(t_off);

    const Zonotope Zb = bounding_zonotope(box.lower, box.upper);
    const ConstrainedZonotope Z0(Zb);

    // row plan: equalities, then static inequalities, in input order
    std::vector<Index> static_ineq, dynamic_ineq;
    for (Index i = 0; i < P.num_ineq(); ++i)
        (detail::is_dynamic(P, i, cfg) ? dynamic_ineq : static_ineq).push_back(i);

    if (cfg.prune_redundant && !static_ineq.empty())
    {
        // sequential LP check against the set built so far
        ConstrainedZonotope cur = Z0;
        std::vector<LinearConstraint> eqs;
        for (Index i = 0; i < P.num_eq(); ++i)
            eqs.push_back(LinearConstraint::hyperplane(P.A_eq.row(i).transpose(), P.b_eq[i]));
        cur = intersect(cur, eqs);
        std::vector<Index> kept;
        for (Index i : static_ineq)
        {
            const Halfspace hs = P.halfspace(i);
            if (halfspace_is_cutting(cur, hs))
            {
                cur = intersect_halfspace(cur, hs);
                kept.push_back(i);
            }
            else
            {
                ++rep.rows_skipped;
            }
        }
        static_ineq = std::move(kept);
    }

    const Index me = P.num_eq();
    const Index mi = static_cast<Index>(static_ineq.size());
    const Index m_off = me + mi;
    // zero columns set aside for the slack generators of the online rows
    const Index reserve = static_cast<Index>(dynamic_ineq.size());
    const Index ng_off = n + mi + reserve;

    RowMatrix G = RowMatrix::Zero(n, ng_off);
    G.leftCols(n) = Zb.generators();
    RowMatrix A = RowMatrix::Zero(m_off, ng_off);
    Vector b(m_off);

    const Vector& c0 = Zb.center();
    const RowMatrix& G0 = Zb.generators();
    detail::parallel_chunks(m_off, rep.threads, [&](Index begin, Index end) {
        for (Index r = begin; r < end; ++r)
        {
            detail::RowUpdate u;
            if (r < me)
            {
                u = detail::hyperplane_row(c0, G0, P.A_eq.row(r).transpose(), P.b_eq[r]);
            }
            else
            {
                const Index src = static_ineq[static_cast<std::size_t>(r - me)];
                u = detail::halfspace_row(c0, G0, P.A_ineq.row(src).transpose(), P.b_ineq[src]);
                A(r, n + (r - me)) = u.slack;
            }
            A.block(r, 0, 1, n) = u.hG;
            b[r] = u.rhs;
        }
    });
    out.offline = ConstrainedZonotope(c0, std::move(G), std::move(A), std::move(b)).with_reserved_tail(reserve);
    rep.rows_static = m_off;
    rep.offline_seconds = detail::seconds_since(t_off);

    const auto t_on = detail::Clock::now();
    std::vector<LinearConstraint> online;
    online.reserve(dynamic_ineq.size());
    for (Index i : dynamic_ineq)
        online.push_back(LinearConstraint::halfspace(P.A_ineq.row(i).transpose(), P.b_ineq[i]));
    out.cz = online.empty() ? out.offline : intersect(out.offline, online);
    rep.online_seconds = detail::seconds_since(t_on);
    rep.rows_dynamic = static_cast<Index>(online.size());
    rep.n_g = out.cz.num_generators();
    rep.m = out.cz.num_constraints();
    return out;
}

// ---- FOR pipeline ----

struct ForResult
{
    FeasibleSet feasible;
    Conversion conversion;
    ConstrainedZonotope projected;
    std::vector<std::string> selection;
    ConversionReport report;
};

inline FeasibleSet build_for_mode(const GridCase& c, int N, LossMode mode)
{
    if (mode == LossMode::loss_linearized)
    {
        const OperatingPoint op = nominal_operating_point(c, N);
        return build_feasible_set(c, N, mode, op);
    }
    return build_feasible_set(c, N, mode);
}

/// Builds the feasible set, converts it and projects onto the selection.
inline ForResult compute_for(const GridCase& c, int N, LossMode mode, const std::vector<std::string>& selection,
    const ConversionConfig& cfg)
{
    ForResult res;
    res.feasible = build_for_mode(c, N, mode);
    res.selection = selection;
    const RowMatrix M = coupling_projection_matrix(res.feasible.index, selection);
    res.conversion = polytope_to_cz(res.feasible.polytope, cfg, &res.feasible.apriori, &res.feasible.index.names());

    const auto t0 = detail::Clock::now();
    res.projected = linear_map(res.conversion.cz, M);
    res.conversion.report.projection_seconds = detail::seconds_since(t0);
    res.report = res.conversion.report;
    return res;
}

// ---- post-construction updates ----

struct UpdateResult
{
    ConstrainedZonotope cz;
    double seconds = 0.0;
    Index rows_skipped = 0;
};

/// Applies additional rows in order. With prune, halfspaces that do not cut
/// the current set are dropped (one LP each).
inline UpdateResult update_with_constraints(const ConstrainedZonotope& cz, const std::vector<LinearConstraint>& rows,
    bool prune = true)
{
    UpdateResult out;
    const auto t0 = detail::Clock::now();
    if (!prune)
    {
        out.cz = intersect(cz, rows);
    }
    else
    {
        std::vector<LinearConstraint> kept;
        for (const auto& r : rows)
        {
            if (r.relation == LinearConstraint::Relation::less_equal
                && !halfspace_is_cutting(cz, Halfspace(r.h, r.zeta)))
            {
                ++out.rows_skipped;
                continue;
            }
            kept.push_back(r);
        }
        out.cz = kept.empty() ? cz : intersect(cz, kept);
    }
    out.seconds = detail::seconds_since(t0);
    return out;
}

// ---- 2-D output ----

struct Hull2D
{
    std::vector<Eigen::Vector2d> vertices;  // counter-clockwise
    std::vector<double> angles;             // sampled directions
    std::vector<double> support;            // support value per direction
};

namespace detail
{

inline double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b)
{
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// monotone chain; points closer to a hull edge than tol are dropped
inline std::vector<Eigen::Vector2d> monotone_chain(std::vector<Eigen::Vector2d> pts, double tol)
{
    std::sort(pts.begin(), pts.end(), [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    if (pts.size() < 3)
        return pts;
    std::vector<Eigen::Vector2d> h(2 * pts.size());
    std::size_t k = 0;
    auto keep_turn = [tol](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return cross(o, a, b) > tol * std::max((b - o).norm(), 1e-300);
    };
    for (std::size_t i = 0; i < pts.size(); ++i)
    {
        while (k >= 2 && !keep_turn(h[k - 2], h[k - 1], pts[i]))
            --k;
        h[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i)
    {
        while (k >= t && !keep_turn(h[k - 2], h[k - 1], pts[i - 1]))
            --k;
        h[k++] = pts[i - 1];
    }
    h.resize(k - 1);
    return h;
}

} // namespace detail

inline constexpr Index default_hull_directions = 720;
inline constexpr double hull_dedup_distance = 1e-7;

/// Vertices of a 2-D constrained zonotope from support witnesses over
/// n_dirs uniform directions.
inline Hull2D hull_2d(const ConstrainedZonotope& cz, Index n_dirs = default_hull_directions)
{
    if (cz.dim() != 2)
        throw DimensionError("hull_2d: set must be 2-dimensional.");
    if (n_dirs < 3)
        throw DimensionError("hull_2d: need at least 3 directions.");
    SupportOracle oracle(cz);
    if (oracle.empty())
        throw InfeasibleError("hull_2d: constrained zonotope is empty.");

    Hull2D out;
    std::vector<Eigen::Vector2d> pts;
    const auto dirs = uniform_directions_2d(n_dirs);
    for (Index k = 0; k < n_dirs; ++k)
    {
        const auto r = oracle(dirs[static_cast<std::size_t>(k)]);
        out.angles.push_back(2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n_dirs));
        out.support.push_back(r.value);
        const Eigen::Vector2d w(r.witness[0], r.witness[1]);
        const bool dup = std::any_of(pts.begin(), pts.end(),
            [&w](const Eigen::Vector2d& p) { return (p - w).norm() < hull_dedup_distance; });
        if (!dup)
            pts.push_back(w);
    }
    out.vertices = detail::monotone_chain(std::move(pts), hull_dedup_distance);
    return out;
}

/// Shoelace area of a counter-clockwise polygon.
inline double polygon_area(const std::vector<Eigen::Vector2d>& poly)
{
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i)
    {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % poly.size()];
        a += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * std::abs(a);
}

// ---- conditional FOR ----

/// Range [lo, hi] of coordinate i over a non-empty set.
inline std::pair<double, double> coordinate_range(const ConstrainedZonotope& cz, Index i)
{
    SupportOracle oracle(cz);
    if (oracle.empty())
        throw InfeasibleError("coordinate_range: constrained zonotope is empty.");
    const Vector e = Vector::Unit(cz.dim(), i);
    const double hi = oracle(e).value;
    const double lo = -oracle(-e).value;
    return {lo, hi};
}

/// Slice of a FOR over (p(1), p(2), q(2)) at p(1) = value, projected onto
/// (p(2), q(2)).
inline ConstrainedZonotope conditional_for(const ConstrainedZonotope& cz_for, double p1_value)
{
    if (cz_for.dim() != 3)
        throw DimensionError("conditional_for: expected a set over (p(1), p(2), q(2)).");
    const auto [lo, hi] = coordinate_range(cz_for, 0);
    const double tol = eps_feas * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
    if (p1_value < lo - tol || p1_value > hi + tol)
        throw InfeasibleError("conditional_for: p(1) = " + std::to_string(p1_value)
            + " is outside the feasible interval [" + std::to_string(lo) + ", " + std::to_string(hi) + "].");
    // slices exactly at an end of the interval are faces the LP may reject;
    // evaluate them a hair inside
    const double inset = std::min(1e-7 * std::max(1.0, std::max(std::abs(lo), std::abs(hi))), 0.5 * (hi - lo));
    const double v = std::clamp(p1_value, lo + inset, hi - inset);
    const ConstrainedZonotope slice = intersect_hyperplane(cz_for, Vector::Unit(3, 0), v);
    RowMatrix M = RowMatrix::Zero(2, 3);
    M(0, 1) = 1.0;
    M(1, 2) = 1.0;
    ConstrainedZonotope out = linear_map(slice, M);
    if (is_empty(out))
        throw InfeasibleError("conditional_for: empty slice at p(1) = " + std::to_string(p1_value) + ".");
    return out;
}

} // namespace flexcz

#endif
