#ifndef FLEXCZ_BASELINE_HPP_
#define FLEXCZ_BASELINE_HPP_

/**
 * @file baseline.hpp
 * @brief Exact polytope projection by Fourier-Motzkin elimination.
 *
 * Equalities are substituted away first. The remaining inequality system is
 * reduced one variable at a time, always picking the variable whose
 * elimination creates the fewest rows, with LP redundancy removal in
 * between to keep the row count in check.
 */

#include "error.hpp"
#include "lp.hpp"
#include "polytope.hpp"
#include "types.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <string>
#include <vector>

namespace flexcz
{

inline constexpr Index default_fm_row_cap = 2000000;

/// x = T y + t maps the reduced coordinates y back to the original ones.
struct EqualityElimination
{
    HPolytope reduced;                  // inequality-only, over y
    RowMatrix T;
    Vector t;
    std::vector<Index> free_vars;       // original index of each y coordinate
    std::vector<Index> pivot_vars;      // original indices that were substituted

    Vector lift(const Vector& y) const { return T * y + t; }
};

namespace detail
{

inline constexpr double fm_zero = 1e-12;

inline bool contains_index(const std::vector<Index>& v, Index i)
{
    return std::find(v.begin(), v.end(), i) != v.end();
}

} // namespace detail

/// Substitutes one variable per independent equality row. Variables listed
/// in protect are only used as pivots when a row has no other choice.
inline EqualityElimination eliminate_equalities(const HPolytope& P, const std::vector<Index>& protect = {})
{
    P.validate();
    const Index n = P.dim();
    const Index me = P.num_eq();

    // reduced row echelon form of [A_eq | b_eq]
    RowMatrix E(me, n + 1);
    if (me > 0)
    {
        E.leftCols(n) = P.A_eq;
        E.col(n) = P.b_eq;
    }
    std::vector<char> is_pivot(static_cast<std::size_t>(n), 0);
    std::vector<Index> pivot_col;
    std::vector<Index> pivot_row;
    Index r = 0;
    for (Index pass = 0; pass < me && r < me; ++pass)
    {
        // largest entry among the unreduced rows, unprotected columns first
        Index best_i = -1, best_j = -1;
        double best = 0.0;
        for (int allow_protected = 0; allow_protected < 2 && best_i < 0; ++allow_protected)
        {
            for (Index i = r; i < me; ++i)
            {
                const double scale = std::max(1.0, E.row(i).head(n).cwiseAbs().maxCoeff());
                for (Index j = 0; j < n; ++j)
                {
                    if (is_pivot[static_cast<std::size_t>(j)])
                        continue;
                    if (!allow_protected && detail::contains_index(protect, j))
                        continue;
                    const double a = std::abs(E(i, j)) / scale;
                    if (a > best && std::abs(E(i, j)) > 1e-10)
                    {
                        best = a;
                        best_i = i;
                        best_j = j;
                    }
                }
            }
        }
        if (best_i < 0)
            break;
        E.row(r).swap(E.row(best_i));
        E.row(r) /= E(r, best_j);
        for (Index i = 0; i < me; ++i)
        {
            if (i == r || E(i, best_j) == 0.0)
                continue;
            E.row(i) -= E(i, best_j) * E.row(r);
            E(i, best_j) = 0.0;
        }
        is_pivot[static_cast<std::size_t>(best_j)] = 1;
        pivot_col.push_back(best_j);
        pivot_row.push_back(r);
        ++r;
    }
    for (Index i = r; i < me; ++i)
    {
        const double scale = std::max(1.0, P.b_eq.cwiseAbs().maxCoeff());
        if (std::abs(E(i, n)) > 1e-9 * scale)
            throw InfeasibleError("eliminate_equalities: equality rows are inconsistent.");
    }

    EqualityElimination out;
    for (Index j = 0; j < n; ++j)
        if (!is_pivot[static_cast<std::size_t>(j)])
            out.free_vars.push_back(j);
    const Index k = static_cast<Index>(out.free_vars.size());
    out.pivot_vars = pivot_col;

    out.T = RowMatrix::Zero(n, k);
    out.t = Vector::Zero(n);
    for (Index f = 0; f < k; ++f)
        out.T(out.free_vars[static_cast<std::size_t>(f)], f) = 1.0;
    for (std::size_t p = 0; p < pivot_col.size(); ++p)
    {
        const Index row = pivot_row[p];
        const Index col = pivot_col[p];
        out.t[col] = E(row, n);
        for (Index f = 0; f < k; ++f)
        {
            const double a = E(row, out.free_vars[static_cast<std::size_t>(f)]);
            out.T(col, f) = std::abs(a) <= detail::fm_zero ? 0.0 : -a;
        }
    }

    out.reduced = HPolytope(k);
    const RowMatrix AT = P.A_ineq * out.T;
    const Vector rhs = P.b_ineq - P.A_ineq * out.t;
    for (Index i = 0; i < P.num_ineq(); ++i)
    {
        Vector h = AT.row(i).transpose();
        for (Index f = 0; f < k; ++f)
            if (std::abs(h[f]) <= detail::fm_zero)
                h[f] = 0.0;
        if (k == 0 || h.cwiseAbs().maxCoeff() == 0.0)
        {
            if (rhs[i] < -eps_feas * std::max(1.0, std::abs(P.b_ineq[i])))
                throw InfeasibleError("eliminate_equalities: inequality row " + std::to_string(i)
                    + " contradicts the equalities.");
            continue;
        }
        out.reduced.add_ineq(h, rhs[i], P.ineq_tags.empty() ? std::string() : P.ineq_tags[i]);
    }
    return out;
}

/// Drops rows implied by the others (LP per row, checked against the rows
/// still kept). The set is unchanged.
inline HPolytope redundancy_prune(const HPolytope& P)
{
    P.validate();
    const Index n = P.dim();
    const Index m = P.num_ineq();

    // exact duplicates up to positive scaling: keep the tightest
    std::vector<Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Index(0));
    RowMatrix Hn(m, n);
    Vector bn(m);
    for (Index i = 0; i < m; ++i)
    {
        const double s = P.A_ineq.row(i).cwiseAbs().maxCoeff();
        Hn.row(i) = s > 0.0 ? RowMatrix(P.A_ineq.row(i) / s) : RowMatrix(P.A_ineq.row(i));
        bn[i] = s > 0.0 ? P.b_ineq[i] / s : P.b_ineq[i];
    }
    std::vector<char> keep(static_cast<std::size_t>(m), 1);
    for (Index i = 0; i < m; ++i)
    {
        if (!keep[static_cast<std::size_t>(i)])
            continue;
        for (Index j = i + 1; j < m; ++j)
        {
            if (keep[static_cast<std::size_t>(j)] && (Hn.row(i) - Hn.row(j)).cwiseAbs().maxCoeff() <= detail::fm_zero)
            {
                const Index drop = bn[j] >= bn[i] ? j : i;
                keep[static_cast<std::size_t>(drop)] = 0;
                if (drop == i)
                    break;
            }
        }
    }

    for (Index i = 0; i < m; ++i)
    {
        if (!keep[static_cast<std::size_t>(i)])
            continue;
        HPolytope rest(n);
        rest.A_eq = P.A_eq;
        rest.b_eq = P.b_eq;
        for (Index j = 0; j < m; ++j)
            if (j != i && keep[static_cast<std::size_t>(j)])
                rest.add_ineq(P.A_ineq.row(j).transpose(), P.b_ineq[j]);
        lp::Simplex s(detail::polytope_problem(rest));
        if (!s.feasible())
            continue;
        const lp::Solution sol = s.minimize(-P.A_ineq.row(i).transpose());
        if (sol.status != lp::Status::optimal)
            continue;
        if (-sol.objective_value <= P.b_ineq[i] + eps_feas * std::max(1.0, std::abs(P.b_ineq[i])))
            keep[static_cast<std::size_t>(i)] = 0;
    }

    HPolytope out(n);
    out.A_eq = P.A_eq;
    out.b_eq = P.b_eq;
    out.eq_tags = P.eq_tags;
    for (Index i = 0; i < m; ++i)
        if (keep[static_cast<std::size_t>(i)])
            out.add_ineq(P.A_ineq.row(i).transpose(), P.b_ineq[i],
                P.ineq_tags.empty() ? std::string() : P.ineq_tags[i]);
    out.irredundant = true;
    return out;
}

struct FmOptions
{
    Index prune_every = 1;              // 0: only the final pass
    Index row_cap = default_fm_row_cap;
};

struct FmStats
{
    Index eliminated = 0;
    Index peak_rows = 0;
    double seconds = 0.0;
};

namespace detail
{

// rows scaled to unit max-norm, all-zero rows checked and dropped, parallel
// duplicates merged
inline void normalize_rows(RowMatrix& A, Vector& b)
{
    std::vector<Index> live;
    for (Index i = 0; i < A.rows(); ++i)
    {
        for (Index j = 0; j < A.cols(); ++j)
            if (std::abs(A(i, j)) <= fm_zero)
                A(i, j) = 0.0;
        const double s = A.cols() > 0 ? A.row(i).cwiseAbs().maxCoeff() : 0.0;
        if (s == 0.0)
        {
            if (b[i] < -eps_feas * std::max(1.0, std::abs(b[i])))
                throw InfeasibleError("fourier_motzkin_project: polytope is empty.");
            continue;
        }
        A.row(i) /= s;
        b[i] /= s;
        live.push_back(i);
    }
    std::sort(live.begin(), live.end(), [&A](Index x, Index y) {
        for (Index j = 0; j < A.cols(); ++j)
            if (A(x, j) != A(y, j))
                return A(x, j) < A(y, j);
        return false;
    });
    std::vector<Index> kept;
    for (Index i : live)
    {
        if (!kept.empty() && (A.row(kept.back()) - A.row(i)).cwiseAbs().maxCoeff() <= fm_zero)
        {
            b[kept.back()] = std::min(b[kept.back()], b[i]);
            continue;
        }
        kept.push_back(i);
    }
    RowMatrix A2(static_cast<Index>(kept.size()), A.cols());
    Vector b2(static_cast<Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k)
    {
        A2.row(static_cast<Index>(k)) = A.row(kept[k]);
        b2[static_cast<Index>(k)] = b[kept[k]];
    }
    A = std::move(A2);
    b = std::move(b2);
}

} // namespace detail

/// Projection of an inequality-only polytope onto the coordinates in keep
/// (in that order).
inline HPolytope fourier_motzkin_project(const HPolytope& P, const std::vector<Index>& keep, const FmOptions& opt = {},
    FmStats* stats = nullptr)
{
    const auto t0 = std::chrono::steady_clock::now();
    P.validate();
    if (P.num_eq() > 0)
        throw DimensionError("fourier_motzkin_project: eliminate equality rows first.");
    if (keep.empty())
        throw DimensionError("fourier_motzkin_project: keep set must be non-empty.");
    for (Index k : keep)
        if (k < 0 || k >= P.dim())
            throw DimensionError("fourier_motzkin_project: keep index " + std::to_string(k) + " out of range.");

    // columns: the kept coordinates first, then the ones still to eliminate
    std::vector<Index> cols = keep;
    for (Index j = 0; j < P.dim(); ++j)
        if (!detail::contains_index(keep, j))
            cols.push_back(j);
    const Index nk = static_cast<Index>(keep.size());
    RowMatrix A(P.num_ineq(), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
        A.col(static_cast<Index>(j)) = P.A_ineq.col(cols[j]);
    Vector b = P.b_ineq;
    detail::normalize_rows(A, b);

    FmStats st;
    st.peak_rows = A.rows();
    Index since_prune = 0;
    while (A.cols() > nk)
    {
        // column with the fewest generated rows
        Index pick = -1;
        double best = inf;
        for (Index j = nk; j < A.cols(); ++j)
        {
            Index pos = 0, neg = 0;
            for (Index i = 0; i < A.rows(); ++i)
            {
                pos += A(i, j) > 0.0 ? 1 : 0;
                neg += A(i, j) < 0.0 ? 1 : 0;
            }
            const double cost = static_cast<double>(pos) * static_cast<double>(neg) - static_cast<double>(pos + neg);
            if (cost < best)
            {
                best = cost;
                pick = j;
            }
        }

        std::vector<Index> pos, neg, zero;
        for (Index i = 0; i < A.rows(); ++i)
            (A(i, pick) > 0.0 ? pos : A(i, pick) < 0.0 ? neg : zero).push_back(i);
        const double next_rows = static_cast<double>(zero.size())
            + static_cast<double>(pos.size()) * static_cast<double>(neg.size());
        if (next_rows > static_cast<double>(opt.row_cap))
            throw RowCapError("fourier_motzkin_project: eliminating a variable would create "
                + std::to_string(static_cast<long long>(next_rows)) + " rows (cap "
                + std::to_string(opt.row_cap) + "); use the constrained zonotope pipeline instead.");

        const Index m2 = static_cast<Index>(next_rows);
        RowMatrix A2(m2, A.cols() - 1);
        Vector b2(m2);
        Index r = 0;
        auto put = [&](const Eigen::RowVectorXd& row, double rhs) {
            A2.row(r).head(pick) = row.head(pick);
            A2.row(r).tail(A.cols() - pick - 1) = row.tail(A.cols() - pick - 1);
            b2[r] = rhs;
            ++r;
        };
        for (Index i : zero)
            put(A.row(i), b[i]);
        for (Index i : pos)
        {
            for (Index j : neg)
            {
                const double ap = A(i, pick);
                const double an = -A(j, pick);
                put(an * A.row(i) + ap * A.row(j), an * b[i] + ap * b[j]);
            }
        }
        A = std::move(A2);
        b = std::move(b2);
        detail::normalize_rows(A, b);
        ++st.eliminated;
        st.peak_rows = std::max(st.peak_rows, A.rows());

        if (opt.prune_every > 0 && ++since_prune >= opt.prune_every && A.cols() > nk)
        {
            since_prune = 0;
            HPolytope tmp(A, b, RowMatrix(0, A.cols()), Vector(0));
            tmp = redundancy_prune(tmp);
            A = std::move(tmp.A_ineq);
            b = std::move(tmp.b_ineq);
        }
    }

    HPolytope out(A, b, RowMatrix(0, nk), Vector(0));
    out = redundancy_prune(out);
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (stats)
        *stats = st;
    return out;
}

/// Projection of a general polytope (equalities allowed) onto keep. Kept
/// coordinates that are fixed by the equalities come back as equality rows.
inline HPolytope project_polytope(const HPolytope& P, const std::vector<Index>& keep, const FmOptions& opt = {},
    FmStats* stats = nullptr)
{
    const EqualityElimination el = eliminate_equalities(P, keep);
    const Index nk = static_cast<Index>(keep.size());

    // kept coordinates as affine functions of the reduced variables
    RowMatrix K(nk, el.T.cols());
    Vector k0(nk);
    for (Index i = 0; i < nk; ++i)
    {
        K.row(i) = el.T.row(keep[static_cast<std::size_t>(i)]);
        k0[i] = el.t[keep[static_cast<std::size_t>(i)]];
    }

    // reduced variables that are themselves kept coordinates
    std::vector<Index> keep_reduced, keep_pos;
    for (Index i = 0; i < nk; ++i)
    {
        const auto it = std::find(el.free_vars.begin(), el.free_vars.end(), keep[static_cast<std::size_t>(i)]);
        if (it != el.free_vars.end())
        {
            keep_reduced.push_back(static_cast<Index>(it - el.free_vars.begin()));
            keep_pos.push_back(i);
        }
    }

    HPolytope out(nk);
    if (!keep_reduced.empty())
    {
        const HPolytope proj = fourier_motzkin_project(el.reduced, keep_reduced, opt, stats);
        for (Index r = 0; r < proj.num_ineq(); ++r)
        {
            Vector h = Vector::Zero(nk);
            for (std::size_t k = 0; k < keep_pos.size(); ++k)
                h[keep_pos[k]] = proj.A_ineq(r, static_cast<Index>(k));
            out.add_ineq(h, proj.b_ineq[r]);
        }
    }
    else if (is_empty(el.reduced))
    {
        throw InfeasibleError("project_polytope: polytope is empty.");
    }

    // a kept coordinate that was substituted depends on kept free ones only
    for (Index i = 0; i < nk; ++i)
    {
        if (detail::contains_index(keep_pos, i))
            continue;
        Vector h = Vector::Zero(nk);
        h[i] = 1.0;
        for (Index f = 0; f < K.cols(); ++f)
        {
            if (K(i, f) == 0.0)
                continue;
            const auto it = std::find(keep_reduced.begin(), keep_reduced.end(), f);
            if (it == keep_reduced.end())
                throw NumericalError("project_polytope: kept coordinate depends on an eliminated variable.");
            h[keep_pos[static_cast<std::size_t>(it - keep_reduced.begin())]] -= K(i, f);
        }
        out.add_eq(h, k0[i]);
    }
    out.irredundant = true;
    return out;
}

} // namespace flexcz

#endif
