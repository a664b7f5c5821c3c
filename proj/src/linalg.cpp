#include "sfa/linalg.hpp"

#include <algorithm>
#include <stdexcept>

namespace sfa {

double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile of empty sample");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile level out of [0,1]");
    std::sort(v.begin(), v.end());
    const double pos = q * (static_cast<double>(v.size()) - 1.0);
    const size_t lo = static_cast<size_t>(pos);
    if (lo + 1 >= v.size()) return v.back();
    const double w = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - w) + v[lo + 1] * w;
}

} // namespace sfa
