#pragma once

#include <numbers>

namespace kmag {

/// CODATA 2018 values, SI units.
struct PhysicalConstants {
    double vacuum_permeability = 1.25663706212e-6;  // N/A^2
    double bohr_magneton = 9.2740100783e-24;        // J/T
    double reduced_planck = 1.054571817e-34;        // J s
};

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Frequencies are angular (rad/s) everywhere inside the library. These are the
// only two places where ordinary frequency (Hz) enters or leaves.
constexpr double angular_from_hz(double hz) { return two_pi * hz; }
constexpr double hz_from_angular(double omega) { return omega / two_pi; }

}  // namespace kmag
