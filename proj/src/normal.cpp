#include "grftail/normal.hpp"

#include <boost/math/distributions/normal.hpp>

#include "grftail/errors.hpp"

namespace grftail {

double normal_isf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("normal_isf needs p in (0, 1)");
    return boost::math::quantile(boost::math::complement(boost::math::normal_distribution<>(), p));
}

}  // namespace grftail
