#pragma once
// interp.hpp - Catmull-Rom cubic sampling of a 2-D plane with
// clamp-to-edge borders. Shared by the image resampler and the PSF
// kernel rescaling.

#include <algorithm>
#include <cmath>

namespace optigrade::detail {

/// Catmull-Rom (cubic convolution, a = -0.5) weights for the four taps
/// around a sample at fractional offset t in [0, 1).
inline void catmull_rom_weights(double t, double w[4]) {
    double t2 = t * t;
    double t3 = t2 * t;
    w[0] = -0.5 * t + t2 - 0.5 * t3;
    w[1] = 1.0 - 2.5 * t2 + 1.5 * t3;
    w[2] = 0.5 * t + 2.0 * t2 - 1.5 * t3;
    w[3] = -0.5 * t2 + 0.5 * t3;
}

inline int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

/// Samples plane (row-major, width x height) at continuous (x, y) via the
/// 4x4 Catmull-Rom neighborhood, clamping taps to the edge. The sum is
/// anchored at the nearest base sample so flat regions reproduce exactly.
inline double cubic_sample_plane(const double* plane, int width, int height,
                                 double x, double y) {
    double fx = std::floor(x);
    double fy = std::floor(y);
    int bx = int(fx);
    int by = int(fy);
    double wx[4], wy[4];
    catmull_rom_weights(x - fx, wx);
    catmull_rom_weights(y - fy, wy);

    int ix[4], iy[4];
    for (int k = 0; k < 4; ++k) {
        ix[k] = clamp_index(bx - 1 + k, width);
        iy[k] = clamp_index(by - 1 + k, height);
    }
    const double anchor = plane[size_t(clamp_index(by, height)) * width + clamp_index(bx, width)];
    double acc = 0.0;
    for (int j = 0; j < 4; ++j) {
        const double* row = plane + size_t(iy[j]) * width;
        double rowacc = 0.0;
        for (int i = 0; i < 4; ++i) rowacc += wx[i] * (row[ix[i]] - anchor);
        acc += wy[j] * rowacc;
    }
    return anchor + acc;
}

}  // namespace optigrade::detail
