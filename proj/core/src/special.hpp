#pragma once

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

namespace wecan::detail {

inline double digamma(double x) { return boost::math::digamma(x); }
inline double trigamma(double x) { return boost::math::trigamma(x); }
inline double lgamma(double x) { return boost::math::lgamma(x); }
inline double lbeta(double a, double b) { return lgamma(a) + lgamma(b) - lgamma(a + b); }

}  // namespace wecan::detail
