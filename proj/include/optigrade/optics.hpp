#pragma once
// optics.hpp - aperture functions, far-field diffraction PSF simulation,
// and the sensor-geometry quantities (GSD, Q, Airy size) derived from them.
//
// Conventions:
//  * Aperture masks are sampled at cell centers on a square grid placed
//    symmetrically around the half-integer grid center, so a mask built
//    from a 4-fold symmetric aperture is exactly invariant under 90 degree
//    array rotation.
//  * PSF kernels carry their image-plane sample pitch in diffraction units
//    of lambda*f/D per pixel. The Airy first-zero ring has diameter 2.44 in
//    those units, i.e. 2.44*q detector pixels at pitch 1/q.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "optigrade/common.hpp"
#include "optigrade/detail/fft.hpp"
#include "optigrade/detail/interp.hpp"

namespace optigrade::optics {

inline constexpr double kDefaultWavelength = 550e-9;  // m
inline constexpr int kDefaultApertureGrid = 1024;
inline constexpr double kDefaultFillFraction = 0.25;
inline constexpr int kDefaultKernelSize = 63;

/// Airy first-zero ring diameter in units of lambda*f/D.
inline constexpr double kAiryFirstZeroDiameter = 2.44;

/// Kernel support captures this many first-zero diameters of the ring
/// pattern; four rings hold >99% of the encircled energy for a clear
/// circular aperture.
inline constexpr double kKernelSupportRings = 4.0;

// ---------------------------------------------------------------------------
// Sensor geometry
// ---------------------------------------------------------------------------

struct OpticalConfig {
    double wavelength = kDefaultWavelength;  ///< m
    double focal_length = 0.0;               ///< m
    double aperture_diameter = 0.0;          ///< m
    double pixel_pitch = 0.0;                ///< m/pixel on the sensor
    double altitude = 0.0;                   ///< m above ground

    void validate() const {
        auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
        if (!ok(wavelength) || !ok(focal_length) || !ok(aperture_diameter) ||
            !ok(pixel_pitch) || !ok(altitude))
            throw InvalidArgument("optical config fields must be finite and positive");
    }
};

/// Ground sample distance, m/pixel. A single altitude is used across the
/// whole frame (flat-ground approximation).
inline double gsd(const OpticalConfig& cfg) {
    cfg.validate();
    return cfg.pixel_pitch * cfg.altitude / cfg.focal_length;
}

/// Q = lambda*f / (D*p): ratio of optical to detector resolution.
/// Q < 1 is detector limited, Q > 1 diffraction limited.
inline double q_value(const OpticalConfig& cfg) {
    cfg.validate();
    return cfg.wavelength * cfg.focal_length / (cfg.aperture_diameter * cfg.pixel_pitch);
}

/// Diameter of the first dark ring of the Airy pattern at the focal
/// plane, in meters: 2.44*lambda*f/D.
inline double airy_first_zero(const OpticalConfig& cfg) {
    cfg.validate();
    return kAiryFirstZeroDiameter * cfg.wavelength * cfg.focal_length / cfg.aperture_diameter;
}

/// Clear-circular-aperture diffraction intensity |2*J1(x)/x|^2 at radial
/// distance r from the pattern center at the focal plane, normalized to 1
/// at r = 0. x = pi*D*r/(lambda*f).
inline double analytic_circular_psf(const OpticalConfig& cfg, double radius) {
    cfg.validate();
    if (!(radius >= 0.0)) throw InvalidArgument("radius must be non-negative");
    double x = std::numbers::pi * cfg.aperture_diameter * radius /
               (cfg.wavelength * cfg.focal_length);
    if (x < 1e-8) return 1.0;  // lim 2*J1(x)/x = 1
    double v = 2.0 * std::cyl_bessel_j(1.0, x) / x;
    return v * v;
}

// ---------------------------------------------------------------------------
// Apertures
// ---------------------------------------------------------------------------

enum class ApertureKind { Circular, Cassegrain };

inline const char* to_string(ApertureKind k) {
    return k == ApertureKind::Circular ? "circular" : "cassegrain";
}

inline ApertureKind aperture_kind_from_string(const std::string& s) {
    if (s == "circular") return ApertureKind::Circular;
    if (s == "cassegrain") return ApertureKind::Cassegrain;
    throw InvalidArgument("unknown aperture kind: " + s);
}

struct ApertureSpec {
    ApertureKind kind = ApertureKind::Circular;
    double diameter = 0.5;  ///< m

    // Cassegrain-only geometry, as fractions of the aperture diameter.
    double obscuration_ratio = 0.3;
    int spider_count = 4;
    double spider_width_ratio = 0.02;

    static ApertureSpec circular(double diameter_m = 0.5) {
        return ApertureSpec{ApertureKind::Circular, diameter_m, 0.0, 0, 0.0};
    }
    static ApertureSpec cassegrain(double diameter_m = 0.5, double obscuration = 0.3,
                                   int spiders = 4, double spider_width = 0.02) {
        return ApertureSpec{ApertureKind::Cassegrain, diameter_m, obscuration, spiders,
                            spider_width};
    }

    void validate() const {
        if (!(std::isfinite(diameter) && diameter > 0.0))
            throw InvalidArgument("aperture diameter must be positive");
        if (kind == ApertureKind::Cassegrain) {
            if (!(obscuration_ratio > 0.0 && obscuration_ratio < 1.0))
                throw InvalidArgument("obscuration ratio must lie in (0, 1)");
            if (spider_count < 0) throw InvalidArgument("spider count must be >= 0");
            if (spider_count > 0 && !(spider_width_ratio > 0.0))
                throw InvalidArgument("spider width ratio must be positive");
        }
    }
};

/// Discrete transmission grid of an aperture. Cell values are 1 inside the
/// pupil, 0 where blocked, and 1/2 on the exact analytic rim.
struct ApertureMask {
    Grid<double> values;
    double meters_per_cell = 0.0;
    double diameter = 0.0;  ///< m, the full aperture diameter

    int grid_size() const { return values.width; }
    /// Fraction of the grid side spanned by the aperture diameter.
    double fill_fraction() const {
        return diameter / (meters_per_cell * values.width);
    }
    double sum() const {
        double s = 0.0;
        for (double v : values.data) s += v;
        return s;
    }
};

namespace detail_optics {

/// Unit vector at angle 2*pi*k/n. When n is a multiple of 4 the results
/// are exactly closed under quarter-turn rotation (c, s) -> (-s, c), which
/// keeps masks with 4m spiders bit-exactly symmetric.
inline void unit_direction(int k, int n, double& c, double& s) {
    k = ((k % n) + n) % n;
    if (n % 4 == 0) {
        int quarter_len = n / 4;
        int quarter = k / quarter_len;
        int rem = k % quarter_len;
        double ang = 2.0 * std::numbers::pi * rem / n;
        double c0 = std::cos(ang), s0 = std::sin(ang);
        switch (quarter) {
            case 0: c = c0;  s = s0;  break;
            case 1: c = -s0; s = c0;  break;
            case 2: c = -c0; s = -s0; break;
            default: c = s0; s = -c0; break;
        }
        return;
    }
    double ang = 2.0 * std::numbers::pi * k / n;
    c = std::cos(ang);
    s = std::sin(ang);
}

}  // namespace detail_optics

/// Builds the discrete aperture function on a grid_size^2 grid, with the
/// aperture diameter spanning fill_fraction of the grid side; the rest is
/// zero padding, which sets the PSF sampling density.
inline ApertureMask build_aperture(const ApertureSpec& spec, int grid_size = kDefaultApertureGrid,
                                   double fill_fraction = kDefaultFillFraction) {
    spec.validate();
    if (grid_size < 32) throw InvalidArgument("aperture grid must be at least 32 cells");
    if (!(fill_fraction > 0.0 && fill_fraction <= 1.0))
        throw InvalidArgument("fill fraction must lie in (0, 1]");

    const double radius_cells = fill_fraction * grid_size / 2.0;  // D/2 in cells
    const double obscuration_cells =
        spec.kind == ApertureKind::Cassegrain ? spec.obscuration_ratio * radius_cells : 0.0;
    if (spec.kind == ApertureKind::Cassegrain && 2.0 * obscuration_cells < 2.0)
        throw InvalidArgument("aperture grid too small to resolve the central obscuration");

    const int n_spiders = spec.kind == ApertureKind::Cassegrain ? spec.spider_count : 0;
    const double spider_half_width = spec.spider_width_ratio * 2.0 * radius_cells / 2.0;
    std::vector<double> spider_c(n_spiders), spider_s(n_spiders);
    for (int k = 0; k < n_spiders; ++k)
        detail_optics::unit_direction(k, n_spiders, spider_c[k], spider_s[k]);

    const double rim_tol = 1e-12 * radius_cells;

    ApertureMask mask;
    mask.values = Grid<double>(grid_size, grid_size);
    mask.meters_per_cell = spec.diameter / (fill_fraction * grid_size);
    mask.diameter = spec.diameter;

    for (int y = 0; y < grid_size; ++y) {
        double dy = (2 * y - (grid_size - 1)) / 2.0;  // half-integer cell offsets
        for (int x = 0; x < grid_size; ++x) {
            double dx = (2 * x - (grid_size - 1)) / 2.0;
            double r = std::hypot(dx, dy);
            double v;
            if (r < radius_cells - rim_tol)
                v = 1.0;
            else if (r <= radius_cells + rim_tol)
                v = 0.5;
            else
                v = 0.0;
            if (v > 0.0 && spec.kind == ApertureKind::Cassegrain) {
                if (r <= obscuration_cells) {
                    v = 0.0;
                } else {
                    for (int k = 0; k < n_spiders && v > 0.0; ++k) {
                        double along = dx * spider_c[k] + dy * spider_s[k];
                        double across = -dx * spider_s[k] + dy * spider_c[k];
                        if (along >= 0.0 && std::abs(across) <= spider_half_width) v = 0.0;
                    }
                }
            }
            mask.values.at(y, x) = v;
        }
    }
    return mask;
}

// ---------------------------------------------------------------------------
// PSF simulation
// ---------------------------------------------------------------------------

/// Discrete point spread function: non-negative weights on an odd square
/// grid summing to one, with the pattern center on the central cell.
struct PsfKernel {
    Grid<double> weights;
    double pixel_pitch = 0.0;  ///< image-plane pitch, units of lambda*f/D per pixel
    double q = 0.0;            ///< lambda*f/(D * pixel_pitch) = 1/pixel_pitch

    int size() const { return weights.width; }
    int center() const { return (weights.width - 1) / 2; }
    double sum() const {
        double s = 0.0;
        for (double v : weights.data) s += v;
        return s;
    }
};

namespace detail_optics {

inline void normalize_unit_sum(Grid<double>& g) {
    double s = 0.0;
    for (double v : g.data) s += v;
    if (!(s > 0.0)) throw InvalidArgument("kernel has no energy to normalize");
    for (double& v : g.data) v /= s;
}

}  // namespace detail_optics

/// Far-field diffraction PSF of an aperture mask: the squared magnitude of
/// the mask's 2-D DFT, center-shifted and normalized to unit sum. The grid
/// side must be a power of two; the result is cropped by one row and
/// column to an odd side so the zero-frequency bin is the exact center.
inline PsfKernel simulate_psf(const ApertureMask& mask) {
    const int n = mask.grid_size();
    if (mask.values.height != n || !is_power_of_two(n))
        throw InvalidArgument("PSF simulation requires a square power-of-two mask grid");
    if (!(mask.sum() > 0.0)) throw InvalidArgument("degenerate aperture: mask is all zero");

    Grid<double> power = detail::power_spectrum_centered(mask.values);

    // Drop the Nyquist row/column (index 0 after the shift) so the DC bin
    // at (n/2, n/2) becomes the central cell of an odd grid.
    const int side = n - 1;
    PsfKernel psf;
    psf.weights = Grid<double>(side, side);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) psf.weights.at(y, x) = power.at(y + 1, x + 1);
    detail_optics::normalize_unit_sum(psf.weights);

    psf.pixel_pitch = mask.fill_fraction();  // lambda*f/D per frequency bin
    psf.q = 1.0 / psf.pixel_pitch;
    return psf;
}

namespace detail_optics {

/// Rescales a simulated PSF onto a kernel whose pixel pitch corresponds to
/// sampling quality q_eff, sampling the source with Catmull-Rom taps
/// centered on the pattern peak. Negative interpolation lobes are clamped
/// before the unit-sum renormalization.
inline PsfKernel resample_psf_to_q(const PsfKernel& dense, double q_eff, int kernel_size) {
    if (kernel_size < 3 || kernel_size % 2 == 0)
        throw InvalidArgument("kernel size must be odd and at least 3");
    const double target_pitch = 1.0 / q_eff;                    // lambda*f/D per pixel
    const double step = target_pitch / dense.pixel_pitch;       // source bins per pixel
    const int half = (kernel_size - 1) / 2;
    const int c = dense.center();

    PsfKernel out;
    out.weights = Grid<double>(kernel_size, kernel_size);
    for (int b = -half; b <= half; ++b) {
        for (int a = -half; a <= half; ++a) {
            double v = detail::cubic_sample_plane(dense.weights.data.data(), dense.size(),
                                                  dense.size(), c + a * step, c + b * step);
            out.weights.at(b + half, a + half) = std::max(v, 0.0);
        }
    }
    normalize_unit_sum(out.weights);
    out.pixel_pitch = target_pitch;
    out.q = q_eff;
    return out;
}

inline PsfKernel condition_kernel(const ApertureSpec& spec, double q_eff, int kernel_size,
                                  int grid_size, double fill_fraction) {
    ApertureMask mask = build_aperture(spec, grid_size, fill_fraction);
    PsfKernel dense = simulate_psf(mask);
    return resample_psf_to_q(dense, q_eff, kernel_size);
}

/// Smallest odd size covering the ring support at sampling quality q.
inline int support_for_q(double q) {
    int s = int(std::ceil(kKernelSupportRings * kAiryFirstZeroDiameter * q));
    if (s % 2 == 0) ++s;
    return std::max(s, 3);
}

}  // namespace detail_optics

/// PSF kernel for one degradation condition: the simulated pattern
/// resampled so the circular-aperture first-zero ring spans 2.44*q pixels
/// at the detector plane, truncated to kernel_size and renormalized.
inline PsfKernel kernel_for_condition(const ApertureSpec& spec, double q,
                                      int kernel_size = kDefaultKernelSize,
                                      int grid_size = kDefaultApertureGrid,
                                      double fill_fraction = kDefaultFillFraction) {
    if (!(q > 0.0 && q <= 4.0)) throw InvalidArgument("q must lie in (0, 4]");
    if (kKernelSupportRings * kAiryFirstZeroDiameter * q < 3.0)
        throw InvalidArgument("degenerate kernel: q too small for a 3x3 support");
    if (kernel_size < 3 || kernel_size % 2 == 0)
        throw InvalidArgument("kernel size must be odd and at least 3");
    return detail_optics::condition_kernel(spec, q, kernel_size, grid_size, fill_fraction);
}

// ---------------------------------------------------------------------------
// Kernel analysis
// ---------------------------------------------------------------------------

/// Angularly averaged radial intensity profile of a kernel, sampled every
/// radius_step pixels out to max_radius (defaults to the largest inscribed
/// radius). Uses Catmull-Rom interpolation between cells.
inline std::vector<double> radial_profile(const PsfKernel& kernel, double radius_step = 0.02,
                                          double max_radius = 0.0, int angles = 256) {
    const int n = kernel.size();
    const double c = kernel.center();
    if (max_radius <= 0.0) max_radius = c - 2.0;
    const int steps = int(max_radius / radius_step) + 1;
    std::vector<double> profile(steps);
    for (int i = 0; i < steps; ++i) {
        double r = i * radius_step;
        double acc = 0.0;
        for (int a = 0; a < angles; ++a) {
            double ang = 2.0 * std::numbers::pi * a / angles;
            double x = c + r * std::cos(ang);
            double y = c + r * std::sin(ang);
            acc += detail::cubic_sample_plane(kernel.weights.data.data(), n, n, x, y);
        }
        profile[i] = acc / angles;
    }
    return profile;
}

/// Diameter of the first dark ring in kernel pixels, located as the first
/// local minimum of the angular-average profile that falls below a tenth
/// of the peak. Returns 0 if no ring is found within max_radius.
inline double first_zero_diameter(const PsfKernel& kernel, double radius_step = 0.02,
                                  double max_radius = 0.0) {
    std::vector<double> p = radial_profile(kernel, radius_step, max_radius);
    const double peak = p.empty() ? 0.0 : p[0];
    for (size_t i = 1; i + 1 < p.size(); ++i) {
        if (p[i] < 0.1 * peak && p[i] <= p[i - 1] && p[i] < p[i + 1])
            return 2.0 * radius_step * double(i);
    }
    return 0.0;
}

/// Fraction of kernel energy within radius_px of the central cell.
inline double encircled_energy(const PsfKernel& kernel, double radius_px) {
    const int c = kernel.center();
    double acc = 0.0;
    for (int y = 0; y < kernel.size(); ++y)
        for (int x = 0; x < kernel.size(); ++x)
            if (std::hypot(double(x - c), double(y - c)) <= radius_px)
                acc += kernel.weights.at(y, x);
    return acc;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

/// Row-major plain-text rendering, one row per line, decimal floats.
inline std::string kernel_to_text(const PsfKernel& kernel) {
    std::string out;
    out.reserve(size_t(kernel.size()) * kernel.size() * 17);
    char buf[40];
    for (int y = 0; y < kernel.size(); ++y) {
        for (int x = 0; x < kernel.size(); ++x) {
            std::snprintf(buf, sizeof(buf), "%.9e", kernel.weights.at(y, x));
            if (x) out += ' ';
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace optigrade::optics
