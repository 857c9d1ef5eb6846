#pragma once

#include <array>

namespace coconet::color {

// sRGB (channels in [0,1]) to CIE L*a*b* under the D65 reference white:
// inverse sRGB companding, linear RGB -> XYZ, then the CIE f() cube-root
// transfer. L* lands in [0,100]; a*,b* roughly in [-128,128]. Throws on
// out-of-range channels.
std::array<double, 3> rgb_to_lab(double r, double g, double b);

}  // namespace coconet::color
