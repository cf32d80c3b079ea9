#pragma once

// Frozen expected values, produced once by golden_gen (see golden_gen.cpp)
// from the independent Euler/Richardson reference in reference_ode.hpp.
// Instance: c = 1, T = 1, b^S = (1, -1, 0), sigma^S = (0, 1, 0), q_bar = 1,
// mean holdings 0, terminal cost (x - 1/2)^2.
//
// Known exact values corroborate the reference: a2_1(0) = 1/3 (closed form)
// and a2_3(0) = -2/3 (1 + a2_3 integrates to exp(-ln 3)); the extrapolated
// entries below agree with both to 2.4e-13.

#include "mfgprice/coefficients.hpp"

namespace golden {

// t = 0 ten-vector, plain Euler, h = 1e-6 (first-order accurate, ~2.4e-7).
constexpr mfgprice::Vec10 kEulerAlphaHalf = {
    -0.1127966702565984,
    -0.088079967697446707,
    0.072647430084614384,
    0.4559600161512759,
    0.33333308919712096,
    -0.24525312149969603,
    -0.66666691080287632,
    -0.26773411073355929,
    -0.12262656074984984,
    -0.16666672770072224
};

// t = 0 ten-vector, Richardson-extrapolated Euler, h = 1e-6 (~1e-12).
constexpr mfgprice::Vec10 kOracleAlphaHalf = {
    -0.11279660265584947,
    -0.088080372553044906,
    0.072647362302527704,
    0.45595981372350264,
    0.3333333333335623,
    -0.24525296078057182,
    -0.6666666666664226,
    -0.26773379392609359,
    -0.12262648039029057,
    -0.16666666666661381
};

// Scalars assembled from the extrapolated vector.
constexpr double kWBarAlphaHalf = -1.9999999999976856;
constexpr double kValueAtQbarAlphaHalf = -1.6412163676099802;
constexpr double kA22AtZero = -0.24525296078057182;
constexpr double kA23AtZero = -0.6666666666664226;

}  // namespace golden
