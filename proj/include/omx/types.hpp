#ifndef OMX_TYPES_HPP
#define OMX_TYPES_HPP

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace omx {

using Complex = std::complex<double>;
using RealVec = std::vector<double>;
using ComplexVec = std::vector<Complex>;

inline constexpr Complex kImag{0.0, 1.0};

/// Bad scenario/configuration input (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical-consistency guard tripped (CLI exit code 3).
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Two grid-sampled objects were combined across different grids.
struct GridMismatchError : std::runtime_error {
    explicit GridMismatchError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace omx

#endif
