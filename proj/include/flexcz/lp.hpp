#ifndef FLEXCZ_LP_HPP_
#define FLEXCZ_LP_HPP_

/**
 * @file lp.hpp
 * @brief Dense bounded-variable primal simplex.
 *
 * Solves   min c'x  s.t.  A_ineq x <= b_ineq,  A_eq x = b_eq,  lower <= x <= upper
 * with a two-phase method on a dense tableau. Equalities are kept as rows
 * (no splitting), inequalities get a slack column, and variable bounds are
 * handled by the upper-bounding technique so they never become rows.
 *
 * Pricing is Dantzig's rule with lowest-index tie breaking. After a run of
 * degenerate pivots the solver falls back to Bland's rule until progress is
 * made again, which rules out cycling.
 *
 * A Simplex object keeps its tableau after phase 1, so a sequence of
 * objectives over the same feasible region can be re-optimized from the
 * previous optimal basis (used for variable bounds and support sweeps).
 */

#include "error.hpp"
#include "types.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace flexcz::lp
{

enum class Status
{
    optimal,
    infeasible,
    unbounded,
};

inline const char* to_string(Status s)
{
    switch (s)
    {
        case Status::optimal: return "optimal";
        case Status::infeasible: return "infeasible";
        case Status::unbounded: return "unbounded";
    }
    return "unknown";
}

struct Problem
{
    Vector objective;       // minimized
    RowMatrix A_ineq;
    Vector b_ineq;
    RowMatrix A_eq;
    Vector b_eq;
    Vector lower;
    Vector upper;

    Index num_vars() const { return objective.size(); }

    // empty problem over n free variables
    static Problem free(Index n)
    {
        Problem p;
        p.objective = Vector::Zero(n);
        p.A_ineq.resize(0, n);
        p.b_ineq.resize(0);
        p.A_eq.resize(0, n);
        p.b_eq.resize(0);
        p.lower = Vector::Constant(n, -inf);
        p.upper = Vector::Constant(n, inf);
        return p;
    }

    void validate() const
    {
        const Index n = num_vars();
        if (A_ineq.cols() != n || A_eq.cols() != n)
            throw DimensionError("lp::Problem: constraint matrix column count must equal objective length.");
        if (A_ineq.rows() != b_ineq.size() || A_eq.rows() != b_eq.size())
            throw DimensionError("lp::Problem: row count does not match rhs length.");
        if (lower.size() != n || upper.size() != n)
            throw DimensionError("lp::Problem: bound vectors must have one entry per variable.");
        if (!objective.allFinite() || !A_ineq.allFinite() || !A_eq.allFinite()
            || !b_ineq.allFinite() || !b_eq.allFinite())
            throw NumericalError("lp::Problem: non-finite coefficient.");
        for (Index j = 0; j < n; ++j)
        {
            if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] == inf || upper[j] == -inf)
                throw NumericalError("lp::Problem: invalid bound on variable " + std::to_string(j) + ".");
        }
    }
};

struct Solution
{
    Status status = Status::infeasible;
    Vector x;
    double objective_value = 0.0;
    Index iterations = 0;
};

/// Dual information recovered from the final basis. Row order is
/// [inequality rows; equality rows].
struct DualCertificate
{
    Vector y;
    Vector reduced_costs;       // structural variables only
    double objective = 0.0;     // dual objective value
    double infeasibility = 0.0; // worst sign violation of the reduced costs
};

struct Options
{
    double feas_tol = eps_feas;
    double pivot_tol = eps_pivot;
    double opt_tol = 1e-9;
    Index max_iterations = 0;   // 0 = automatic
    Index bland_after = 50;     // consecutive degenerate pivots before Bland's rule
    bool refine = true;         // recompute the final basic solution from the original data
};

class Simplex
{
    public:

        explicit Simplex(const Problem& problem, Options options = {})
            : opt_(options)
        {
            problem.validate();
            setup(problem);
            run_phase1();
        }

        bool feasible() const { return feasible_; }

        Index num_rows() const { return M_; }
        Index num_columns() const { return N_; }

        /// Minimizes c'x over the feasible region, starting from the current basis.
        Solution minimize(const Vector& c)
        {
            if (c.size() != n_)
                throw DimensionError("lp::Simplex::minimize: objective length must equal variable count.");
            if (!c.allFinite())
                throw NumericalError("lp::Simplex::minimize: non-finite objective.");

            Solution sol;
            if (!feasible_)
            {
                sol.status = Status::infeasible;
                return sol;
            }

            cost_ = Vector::Zero(N_);
            cost_.head(n_) = c;
            price_from_scratch();

            const Index start = iterations_;
            const Status st = iterate(false);
            sol.iterations = iterations_ - start;
            sol.status = st;
            last_status_ = st;

            Vector xfull = current_point();
            if (st == Status::optimal && opt_.refine)
                refine(xfull);

            sol.x = xfull.head(n_);
            sol.objective_value = c.dot(sol.x);
            return sol;
        }

        /// Duals of the last optimal solve, from B' y = c_B on the original data.
        DualCertificate dual_certificate() const
        {
            if (!feasible_ || last_status_ != Status::optimal)
                throw NumericalError("lp::Simplex::dual_certificate: no optimal basis available.");

            Eigen::SparseMatrix<double> B = basis_matrix();
            Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
            lu.compute(B);
            if (lu.info() != Eigen::Success)
                throw NumericalError("lp::Simplex::dual_certificate: singular basis.");

            Vector cB(M_);
            for (Index i = 0; i < M_; ++i)
                cB[i] = basis_[i] >= 0 ? cost_[basis_[i]] : 0.0;

            DualCertificate cert;
            cert.y = lu.transpose().solve(cB);
            Vector r = cost_ - Vector(A_.transpose() * cert.y);
            cert.reduced_costs = r.head(n_);

            double obj = b_.dot(cert.y);
            double infeas = 0.0;
            for (Index j = 0; j < N_; ++j)
            {
                if (std::abs(r[j]) <= opt_.opt_tol)
                    continue;
                if (r[j] > 0.0)
                {
                    if (std::isfinite(lo_[j])) obj += r[j] * lo_[j];
                    else infeas = std::max(infeas, r[j]);
                }
                else
                {
                    if (std::isfinite(up_[j])) obj += r[j] * up_[j];
                    else infeas = std::max(infeas, -r[j]);
                }
            }
            cert.objective = obj;
            cert.infeasibility = infeas;
            return cert;
        }

    private:

        enum class State : std::uint8_t { basic, at_lower, at_upper, free_zero };

        static constexpr Index artificial = -1;

        // ---- setup ----

        void setup(const Problem& p)
        {
            n_ = p.num_vars();
            mi_ = p.A_ineq.rows();
            me_ = p.A_eq.rows();
            M_ = mi_ + me_;
            N_ = n_ + mi_;

            lo_.resize(N_);
            up_.resize(N_);
            lo_.head(n_) = p.lower;
            up_.head(n_) = p.upper;
            lo_.tail(mi_).setZero();
            up_.tail(mi_).setConstant(inf);

            b_.resize(M_);
            b_.head(mi_) = p.b_ineq;
            b_.tail(me_) = p.b_eq;

            T_.setZero(M_, N_);
            if (mi_ > 0)
            {
                T_.topLeftCorner(mi_, n_) = p.A_ineq;
                T_.block(0, n_, mi_, mi_).setIdentity();
            }
            if (me_ > 0)
                T_.bottomLeftCorner(me_, n_) = p.A_eq;
            A_ = T_.sparseView();

            for (Index j = 0; j < N_; ++j)
            {
                if (lo_[j] > up_[j])
                {
                    bounds_conflict_ = true;
                    break;
                }
            }

            state_.assign(static_cast<std::size_t>(N_), State::at_lower);
            for (Index j = 0; j < n_; ++j)
            {
                if (std::isfinite(lo_[j])) state_[j] = State::at_lower;
                else if (std::isfinite(up_[j])) state_[j] = State::at_upper;
                else state_[j] = State::free_zero;
            }

            if (opt_.max_iterations <= 0)
                opt_.max_iterations = 50 * (M_ + N_) + 1000;
        }

        double nonbasic_value(Index j) const
        {
            switch (state_[j])
            {
                case State::at_lower: return lo_[j];
                case State::at_upper: return up_[j];
                default: return 0.0;
            }
        }

        Vector current_point() const
        {
            Vector x(N_);
            for (Index j = 0; j < N_; ++j)
                x[j] = state_[j] == State::basic ? 0.0 : nonbasic_value(j);
            for (Index i = 0; i < M_; ++i)
                if (basis_[i] >= 0) x[basis_[i]] = beta_[i];
            return x;
        }

        // ---- phase 1 ----

        void run_phase1()
        {
            if (bounds_conflict_)
            {
                feasible_ = false;
                return;
            }

            Vector xn(N_);
            for (Index j = 0; j < N_; ++j)
                xn[j] = nonbasic_value(j);
            const Vector r = b_ - T_ * xn;

            basis_.assign(static_cast<std::size_t>(M_), artificial);
            sigma_ = Vector::Ones(M_);
            beta_.resize(M_);
            for (Index i = 0; i < M_; ++i)
            {
                if (i < mi_ && r[i] >= 0.0)
                {
                    basis_[i] = n_ + i;
                    state_[n_ + i] = State::basic;
                    beta_[i] = r[i];
                }
                else
                {
                    if (r[i] < 0.0)
                    {
                        sigma_[i] = -1.0;
                        T_.row(i) *= -1.0;
                    }
                    beta_[i] = std::abs(r[i]);
                }
            }

            // phase-1 reduced costs: -sum of artificial rows
            cost_ = Vector::Zero(N_);
            d_ = Vector::Zero(N_);
            for (Index i = 0; i < M_; ++i)
                if (basis_[i] == artificial)
                    d_ -= T_.row(i).transpose();
            for (Index i = 0; i < M_; ++i)
                if (basis_[i] >= 0) d_[basis_[i]] = 0.0;

            const Status st = iterate(true);
            if (st != Status::optimal)
                throw NumericalError("lp::Simplex: phase 1 did not terminate.");

            double infeas = 0.0;
            for (Index i = 0; i < M_; ++i)
                if (basis_[i] == artificial) infeas += std::max(beta_[i], 0.0);

            const double scale = std::max(1.0, b_.size() > 0 ? b_.cwiseAbs().maxCoeff() : 0.0);
            feasible_ = infeas <= opt_.feas_tol * scale;
            if (feasible_)
                drive_out_artificials();
        }

        void drive_out_artificials()
        {
            for (Index i = 0; i < M_; ++i)
            {
                if (basis_[i] != artificial)
                    continue;
                Index best = -1;
                double best_abs = 1e-9;
                for (Index j = 0; j < N_; ++j)
                {
                    if (state_[j] == State::basic)
                        continue;
                    const double a = std::abs(T_(i, j));
                    if (a > best_abs)
                    {
                        best_abs = a;
                        best = j;
                    }
                }
                if (best < 0)
                {
                    // redundant row; the artificial stays basic at zero
                    beta_[i] = 0.0;
                    continue;
                }
                const double xq = nonbasic_value(best);
                Vector col = T_.col(best);
                // degenerate pivot: the artificial is (numerically) zero
                const double t = beta_[i] / col[i];
                beta_ -= t * col;
                pivot(i, best, col);
                beta_[i] = xq + t;
            }
        }

        // ---- phase 2 ----

        void price_from_scratch()
        {
            Vector cB(M_);
            for (Index i = 0; i < M_; ++i)
                cB[i] = basis_[i] >= 0 ? cost_[basis_[i]] : 0.0;
            d_ = cost_ - T_.transpose() * cB;
            for (Index i = 0; i < M_; ++i)
                if (basis_[i] >= 0) d_[basis_[i]] = 0.0;
        }

        // ---- main loop ----

        void basic_bounds(Index i, bool phase1, double& lb, double& ub) const
        {
            const Index k = basis_[i];
            if (k == artificial)
            {
                lb = 0.0;
                ub = phase1 ? inf : 0.0;
            }
            else
            {
                lb = lo_[k];
                ub = up_[k];
            }
        }

        Status iterate(bool phase1)
        {
            Index degenerate_run = 0;
            Vector col(M_);

            while (true)
            {
                if (iterations_ >= opt_.max_iterations)
                    throw NumericalError("lp::Simplex: iteration limit reached.");

                const bool bland = degenerate_run >= opt_.bland_after;

                // pricing
                Index q = -1;
                double q_dir = 0.0;
                double q_score = 0.0;
                for (Index j = 0; j < N_; ++j)
                {
                    const State s = state_[j];
                    if (s == State::basic)
                        continue;
                    const double dj = d_[j];
                    double dir = 0.0;
                    if (s == State::at_lower && dj < -opt_.opt_tol && up_[j] > lo_[j]) dir = 1.0;
                    else if (s == State::at_upper && dj > opt_.opt_tol && up_[j] > lo_[j]) dir = -1.0;
                    else if (s == State::free_zero && std::abs(dj) > opt_.opt_tol) dir = dj < 0.0 ? 1.0 : -1.0;
                    if (dir == 0.0)
                        continue;
                    if (bland)
                    {
                        q = j;
                        q_dir = dir;
                        break;
                    }
                    if (std::abs(dj) > q_score)
                    {
                        q_score = std::abs(dj);
                        q = j;
                        q_dir = dir;
                    }
                }
                if (q < 0)
                    return Status::optimal;

                for (Index i = 0; i < M_; ++i)
                    col[i] = T_(i, q);

                // ratio test
                const double flip_len = (std::isfinite(lo_[q]) && std::isfinite(up_[q])) ? up_[q] - lo_[q] : inf;
                Index r = -1;
                double t_r = inf;

                if (!bland)
                {
                    // Harris two-pass
                    double t_relax = inf;
                    for (Index i = 0; i < M_; ++i)
                    {
                        const double a = col[i];
                        if (std::abs(a) <= opt_.pivot_tol)
                            continue;
                        const double rate = -q_dir * a;
                        double lb, ub;
                        basic_bounds(i, phase1, lb, ub);
                        if (rate < 0.0 && std::isfinite(lb))
                            t_relax = std::min(t_relax, (beta_[i] - lb + opt_.feas_tol) / -rate);
                        else if (rate > 0.0 && std::isfinite(ub))
                            t_relax = std::min(t_relax, (ub - beta_[i] + opt_.feas_tol) / rate);
                    }
                    double best_abs = 0.0;
                    for (Index i = 0; i < M_; ++i)
                    {
                        const double a = col[i];
                        if (std::abs(a) <= opt_.pivot_tol)
                            continue;
                        const double rate = -q_dir * a;
                        double lb, ub;
                        basic_bounds(i, phase1, lb, ub);
                        double lim = inf;
                        if (rate < 0.0 && std::isfinite(lb)) lim = (beta_[i] - lb) / -rate;
                        else if (rate > 0.0 && std::isfinite(ub)) lim = (ub - beta_[i]) / rate;
                        if (!std::isfinite(lim) || !(lim <= t_relax))
                            continue;
                        if (std::abs(a) > best_abs)
                        {
                            best_abs = std::abs(a);
                            r = i;
                            t_r = std::max(lim, 0.0);
                        }
                    }
                }
                else
                {
                    // textbook ratio test, ties to the lowest basic index
                    for (Index i = 0; i < M_; ++i)
                    {
                        const double a = col[i];
                        if (std::abs(a) <= opt_.pivot_tol)
                            continue;
                        const double rate = -q_dir * a;
                        double lb, ub;
                        basic_bounds(i, phase1, lb, ub);
                        double lim = inf;
                        if (rate < 0.0 && std::isfinite(lb)) lim = (beta_[i] - lb) / -rate;
                        else if (rate > 0.0 && std::isfinite(ub)) lim = (ub - beta_[i]) / rate;
                        if (!std::isfinite(lim))
                            continue;
                        lim = std::max(lim, 0.0);
                        if (r < 0 || lim < t_r - 1e-12 || (lim <= t_r + 1e-12 && basis_[i] < basis_[r]))
                        {
                            r = i;
                            t_r = lim;
                        }
                    }
                }

                const bool flip = std::isfinite(flip_len) && flip_len <= t_r;
                if (!flip && r < 0)
                    return Status::unbounded;

                const double t = flip ? flip_len : t_r;
                const double xq_old = nonbasic_value(q);
                ++iterations_;

                if (t <= 1e-12) ++degenerate_run;
                else degenerate_run = 0;

                if (t != 0.0)
                    beta_.noalias() -= (q_dir * t) * col;

                if (flip)
                {
                    state_[q] = state_[q] == State::at_lower ? State::at_upper : State::at_lower;
                    continue;
                }

                // leaving variable goes to the bound it hit
                const Index k = basis_[r];
                if (k != artificial)
                {
                    const double rate = -q_dir * col[r];
                    state_[k] = rate < 0.0 ? State::at_lower : State::at_upper;
                }
                pivot(r, q, col);
                beta_[r] = xq_old + q_dir * t;
            }
        }

        void pivot(Index r, Index q, const Vector& col)
        {
            const double piv = col[r];
            T_.row(r) /= piv;

            nz_.clear();
            const double* prow = T_.row(r).data();
            for (Index j = 0; j < N_; ++j)
                if (prow[j] != 0.0) nz_.push_back(j);
            const bool sparse_row = static_cast<Index>(nz_.size()) * 3 < N_;

            for (Index i = 0; i < M_; ++i)
            {
                if (i == r)
                    continue;
                const double a = col[i];
                if (a == 0.0)
                    continue;
                double* row = T_.row(i).data();
                if (sparse_row)
                {
                    for (Index j : nz_)
                        row[j] -= a * prow[j];
                }
                else
                {
                    T_.row(i).noalias() -= a * T_.row(r);
                }
                row[q] = 0.0;
            }
            const double dq = d_[q];
            if (dq != 0.0)
            {
                for (Index j : nz_)
                    d_[j] -= dq * prow[j];
            }
            d_[q] = 0.0;
            T_(r, q) = 1.0;

            if (basis_[r] >= 0)
                state_[basis_[r]] = state_[basis_[r]] == State::basic ? State::at_lower : state_[basis_[r]];
            basis_[r] = q;
            state_[q] = State::basic;
        }

        // ---- refinement ----

        Eigen::SparseMatrix<double> basis_matrix() const
        {
            std::vector<Eigen::Triplet<double>> trips;
            trips.reserve(static_cast<std::size_t>(A_.nonZeros() / std::max<Index>(N_, 1) * M_ + M_));
            for (Index i = 0; i < M_; ++i)
            {
                const Index k = basis_[i];
                if (k == artificial)
                {
                    trips.emplace_back(i, i, sigma_[i]);
                    continue;
                }
                for (Eigen::SparseMatrix<double>::InnerIterator it(A_, k); it; ++it)
                    trips.emplace_back(it.row(), i, it.value());
            }
            Eigen::SparseMatrix<double> B(M_, M_);
            B.setFromTriplets(trips.begin(), trips.end());
            return B;
        }

        void refine(Vector& x) const
        {
            if (M_ == 0)
                return;
            Eigen::SparseMatrix<double> B = basis_matrix();
            Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
            lu.compute(B);
            if (lu.info() != Eigen::Success)
                return;

            Vector xn = x;
            for (Index i = 0; i < M_; ++i)
                if (basis_[i] >= 0) xn[basis_[i]] = 0.0;
            const Vector rhs = b_ - A_ * xn;
            const Vector xb = lu.solve(rhs);
            if (lu.info() != Eigen::Success || !xb.allFinite())
                return;

            // keep the refined point only if it is at least as feasible
            double viol = 0.0;
            for (Index i = 0; i < M_; ++i)
            {
                const Index k = basis_[i];
                if (k == artificial)
                {
                    viol = std::max(viol, std::abs(xb[i]));
                    continue;
                }
                viol = std::max(viol, lo_[k] - xb[i]);
                viol = std::max(viol, xb[i] - up_[k]);
            }
            if (viol > 10.0 * opt_.feas_tol)
                return;

            for (Index i = 0; i < M_; ++i)
                if (basis_[i] >= 0) x[basis_[i]] = xb[i];
        }

        Options opt_;
        Index n_ = 0, mi_ = 0, me_ = 0, M_ = 0, N_ = 0;
        Vector lo_, up_, b_;
        Eigen::SparseMatrix<double> A_;
        RowMatrix T_;
        Vector beta_, sigma_, d_, cost_;
        std::vector<Index> basis_;
        std::vector<State> state_;
        std::vector<Index> nz_;
        bool bounds_conflict_ = false;
        bool feasible_ = false;
        Status last_status_ = Status::infeasible;
        Index iterations_ = 0;
};

/// One-shot solve of the problem's own objective.
inline Solution solve(const Problem& problem, const Options& options = {})
{
    Simplex s(problem, options);
    return s.minimize(problem.objective);
}

} // namespace flexcz::lp

#endif
