#ifndef FLEXCZ_TESTS_ORACLES_HPP_
#define FLEXCZ_TESTS_ORACLES_HPP_

// Reference computations that share no code with the library: brute-force
// vertex enumeration, Andrew's monotone-chain hull, shoelace area.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace oracles
{

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double vertex_support(const std::vector<Vec>& verts, const Vec& d)
{
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& v : verts)
        best = std::max(best, d.dot(v));
    return best;
}

/// Vertices of {x | A x <= b, E x = f} by trying every choice of n active
/// rows (equalities always active). Only for tiny instances.
inline std::vector<Vec> enumerate_vertices(const Mat& A, const Vec& b, const Mat& E, const Vec& f, double tol = 1e-9)
{
    const int n = static_cast<int>(A.cols());
    const int m = static_cast<int>(A.rows());
    const int p = static_cast<int>(E.rows());
    const int k = n - p;
    std::vector<Vec> out;
    if (k < 0 || k > m)
        return out;

    std::vector<int> pick(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        pick[static_cast<std::size_t>(i)] = i;

    auto consider = [&]() {
        Mat S(n, n);
        Vec r(n);
        for (int i = 0; i < p; ++i)
        {
            S.row(i) = E.row(i);
            r[i] = f[i];
        }
        for (int i = 0; i < k; ++i)
        {
            S.row(p + i) = A.row(pick[static_cast<std::size_t>(i)]);
            r[p + i] = b[pick[static_cast<std::size_t>(i)]];
        }
        Eigen::FullPivLU<Mat> lu(S);
        if (lu.rank() < n)
            return;
        const Vec x = lu.solve(r);
        if (m > 0 && ((A * x - b).array() > tol).any())
            return;
        if (p > 0 && ((E * x - f).cwiseAbs().array() > tol).any())
            return;
        for (const auto& v : out)
            if ((v - x).cwiseAbs().maxCoeff() < 1e-7)
                return;
        out.push_back(x);
    };

    if (k == 0)
    {
        consider();
        return out;
    }
    while (true)
    {
        consider();
        int i = k - 1;
        while (i >= 0 && pick[static_cast<std::size_t>(i)] == m - k + i)
            --i;
        if (i < 0)
            break;
        ++pick[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j)
            pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

struct P2
{
    double x, y;
};

inline double cross(const P2& o, const P2& a, const P2& b)
{
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

/// Counter-clockwise convex hull (monotone chain), collinear points dropped.
inline std::vector<P2> convex_hull(std::vector<P2> pts)
{
    std::sort(pts.begin(), pts.end(), [](const P2& a, const P2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    if (pts.size() < 3)
        return pts;
    std::vector<P2> h(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
    {
        while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 1e-12)
            --k;
        h[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i)
    {
        while (k >= t && cross(h[k - 2], h[k - 1], pts[i - 1]) <= 1e-12)
            --k;
        h[k++] = pts[i - 1];
    }
    h.resize(k - 1);
    return h;
}

inline double shoelace(const std::vector<P2>& poly)
{
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i)
    {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % poly.size()];
        a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * std::abs(a);
}

/// Area of the convex polygon given as vertex list (any order).
inline double polygon_area(const std::vector<Vec>& verts)
{
    std::vector<P2> pts;
    for (const auto& v : verts)
        pts.push_back({v[0], v[1]});
    return shoelace(convex_hull(pts));
}

} // namespace oracles

#endif
