#ifndef FLEXCZ_FLEXCZ_HPP_
#define FLEXCZ_FLEXCZ_HPP_

#include "aggregate.hpp"
#include "baseline.hpp"
#include "error.hpp"
#include "grid.hpp"
#include "lp.hpp"
#include "polytope.hpp"
#include "serialize.hpp"
#include "types.hpp"
#include "zonotope.hpp"

#endif
