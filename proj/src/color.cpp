#include "coconet/color.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace coconet::color {

namespace {

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

// CIE transfer with the 6/29 breakpoint.
double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  constexpr double delta3 = delta * delta * delta;
  return t > delta3 ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

// sRGB -> XYZ (D65, 2 degree observer).
constexpr double kM[9] = {
    0.4124564, 0.3575761, 0.1804375,  //
    0.2126729, 0.7151522, 0.0721750,  //
    0.0193339, 0.1191920, 0.9503041,
};
constexpr double kXn = 0.95047;
constexpr double kYn = 1.00000;
constexpr double kZn = 1.08883;

}  // namespace

std::array<double, 3> rgb_to_lab(double r, double g, double b) {
  for (double c : {r, g, b}) {
    if (!(c >= 0.0 && c <= 1.0)) {
      throw std::domain_error("rgb_to_lab: channel " + std::to_string(c) + " outside [0,1]");
    }
  }
  const double rl = srgb_to_linear(r);
  const double gl = srgb_to_linear(g);
  const double bl = srgb_to_linear(b);

  const double x = kM[0] * rl + kM[1] * gl + kM[2] * bl;
  const double y = kM[3] * rl + kM[4] * gl + kM[5] * bl;
  const double z = kM[6] * rl + kM[7] * gl + kM[8] * bl;

  const double fx = lab_f(x / kXn);
  const double fy = lab_f(y / kYn);
  const double fz = lab_f(z / kZn);

  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

}  // namespace coconet::color
