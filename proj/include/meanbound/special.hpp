// special.hpp
//
// Quantiles of the Beta and Student-t distributions, backed by Boost.Math
// (regularized incomplete beta inversion, accurate well below 1e-10).
#pragma once

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "core.hpp"

namespace meanbound::special {

/// Q(p, Beta(a, b)).
inline double beta_quantile(double p, double a, double b) {
    if (!(p >= 0.0 && p <= 1.0)) detail::fail("beta quantile level must lie in [0,1]");
    if (!(a > 0.0 && b > 0.0)) detail::fail("beta parameters must be positive");
    return boost::math::quantile(boost::math::beta_distribution<double>(a, b), p);
}

/// t_{p, df}.
inline double student_t_quantile(double p, double degrees_of_freedom) {
    if (!(p > 0.0 && p < 1.0)) detail::fail("t quantile level must lie in (0,1)");
    if (!(degrees_of_freedom > 0.0)) detail::fail("degrees of freedom must be positive");
    return boost::math::quantile(boost::math::students_t_distribution<double>(degrees_of_freedom), p);
}

}  // namespace meanbound::special
