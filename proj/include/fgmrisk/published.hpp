#pragma once

#include <array>

// Published reference values for the worked example (lambda 0.1,
// lambda_bar 2.3, mu 3, mu_bar 0.2), six decimals as printed.
namespace fgmrisk::published {

inline constexpr std::array<double, 10> kAbscissae{0, 1, 2, 5, 7, 10, 15, 20, 50, 70};
inline constexpr std::array<double, 6> kThetas{-0.9, -0.5, -0.1, 0.1, 0.5, 0.9};

/// Ruin probability without dividends, rows by kAbscissae, columns by kThetas.
inline constexpr double kRuinByTheta[10][6] = {
    {0.923700, 0.808017, 0.694653, 0.638820, 0.528807, 0.420945},
    {0.906484, 0.766009, 0.629915, 0.563467, 0.433686, 0.307949},
    {0.888003, 0.724172, 0.570650, 0.497607, 0.358674, 0.228911},
    {0.831762, 0.608107, 0.423229, 0.343831, 0.208380, 0.100718},
    {0.795628, 0.540438, 0.346536, 0.268996, 0.146531, 0.060380},
    {0.744222, 0.452611, 0.256692, 0.186208, 0.086812, 0.028761},
    {0.665780, 0.336734, 0.155646, 0.100887, 0.036402, 0.008589},
    {0.595603, 0.250520, 0.094376, 0.054662, 0.015276, 0.002591},
    {0.305291, 0.042479, 0.004690, 0.001383, 0.000083, 0.000002},
    {0.195532, 0.013013, 0.000634, 0.000119, 0.000003, 0.000000},
};

/// psi(x) ~ c_slow e^{z_slow x} + c_fast e^{z_fast x} for each theta.
struct TwoTermExpansion {
  double theta, c_slow, z_slow, c_fast, z_fast;
};

inline constexpr std::array<TwoTermExpansion, 6> kRuinExpansions{{
    {-0.9, 0.929934, -0.022277, -0.006234, -0.744001},
    {-0.5, 0.817753, -0.059151, -0.009736, -0.712238},
    {-0.1, 0.698198, -0.100061, -0.003545, -0.676439},
    {0.1, 0.634275, -0.122565, 0.004545, -0.656490},
    {0.5, 0.492433, -0.173655, 0.036374, -0.610511},
    {0.9, 0.309485, -0.239185, 0.111461, -0.550092},
}};

/// Threshold example: b = 5, d = 0.1, delta = 0.01, no dependence.
inline constexpr double kThresholdB = 5.0;
inline constexpr double kThresholdD = 0.1;
inline constexpr double kThresholdDelta = 0.01;

struct ThresholdRow {
  double x, psi0, psi, v;
};

inline constexpr std::array<ThresholdRow, 10> kThresholdTable{{
    {0, 0.666667, 0.796440, 2.259472},
    {1, 0.596560, 0.753626, 2.790339},
    {2, 0.533825, 0.715315, 3.293343},
    {5, 0.382502, 0.622904, 4.689607},
    {7, 0.306284, 0.563044, 5.694612},
    {10, 0.219462, 0.481915, 6.883176},
    {15, 0.125917, 0.371835, 8.180807},
    {20, 0.072245, 0.286900, 8.938193},
    {50, 0.002577, 0.060536, 9.958020},
    {70, 0.000279, 0.021455, 9.995128},
}};

/// Exponents of the threshold example: psi0, inner psi, outer psi (2), inner v (2), outer v (2).
struct ThresholdExponents {
  double z_psi0, z5, z7, z8, z9, z10, z11, z12;
};

inline constexpr ThresholdExponents kThresholdExponents{-0.111111, -0.111111, -0.051863, -19.281470,
                                                        0.049220,  -0.140506, -0.107684, -19.405407};

/// Printed coefficients of the threshold example (global parameterization).
inline constexpr double kC4 = 0.389315, kC5 = 0.407125, kC7 = 0.809486, kC8 = -1.24332e39;
inline constexpr double kC9 = 4.555889, kC10 = -2.296416, kC11 = -9.149114, kC12 = 4.07834e40;

}  // namespace fgmrisk::published
