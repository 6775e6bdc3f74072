#ifndef OMX_QUAD_HPP
#define OMX_QUAD_HPP

#include <cstddef>

#include "omx/types.hpp"

namespace omx {

/// out[k] = trapezoid of f over nodes [0..k] with spacing dt.
template <typename T>
std::vector<T> prefix_trapezoid(const std::vector<T>& f, double dt) {
    std::vector<T> out(f.size());
    if (f.empty()) return out;
    out[0] = T{};
    for (std::size_t k = 1; k < f.size(); ++k)
        out[k] = out[k - 1] + (f[k - 1] + f[k]) * (0.5 * dt);
    return out;
}

/// out[k] = trapezoid of f over nodes [k..N].
template <typename T>
std::vector<T> suffix_trapezoid(const std::vector<T>& f, double dt) {
    std::vector<T> out(f.size());
    if (f.empty()) return out;
    out.back() = T{};
    for (std::size_t k = f.size() - 1; k-- > 0;)
        out[k] = out[k + 1] + (f[k] + f[k + 1]) * (0.5 * dt);
    return out;
}

template <typename T>
T trapezoid(const std::vector<T>& f, double dt) {
    if (f.size() < 2) return T{};
    T sum = (f.front() + f.back()) * 0.5;
    for (std::size_t k = 1; k + 1 < f.size(); ++k) sum += f[k];
    return sum * dt;
}

}  // namespace omx

#endif
