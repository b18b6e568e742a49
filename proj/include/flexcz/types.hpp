#ifndef FLEXCZ_TYPES_HPP_
#define FLEXCZ_TYPES_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>

namespace flexcz
{

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double inf = std::numeric_limits<double>::infinity();

// feasibility tolerance shared by the LP kernel and the set operations
inline constexpr double eps_feas = 1e-8;

// pivot tolerance of the simplex kernel
inline constexpr double eps_pivot = 1e-10;

// default membership tolerance (per-unit coordinates)
inline constexpr double default_contains_tol = 1e-6;

inline bool all_finite(const Eigen::Ref<const Vector>& v)
{
    return v.allFinite();
}

template<typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m)
{
    return m.allFinite();
}

} // namespace flexcz

#endif
