#pragma once
// resample.hpp - planar floating-point images, Catmull-Rom resampling,
// sliding-window PSF convolution, and the two-stage degradation pipeline
// (blur at an intermediate scale, then decimate to the target GSD).

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "optigrade/common.hpp"
#include "optigrade/detail/interp.hpp"
#include "optigrade/optics.hpp"

namespace optigrade::resample {

/// Image with 1 or 3 planar channels of samples in [0, 1].
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> data;        ///< channel-major planes, row-major within
    std::optional<double> gsd;       ///< m/pixel when known

    static Image zeros(int w, int h, int c = 1) {
        Image img;
        img.width = w;
        img.height = h;
        img.channels = c;
        img.data.assign(size_t(c) * w * h, 0.0);
        return img;
    }
    static Image constant(int w, int h, int c, double value) {
        Image img = zeros(w, h, c);
        std::fill(img.data.begin(), img.data.end(), value);
        return img;
    }

    double* plane(int c) { return data.data() + size_t(c) * width * height; }
    const double* plane(int c) const { return data.data() + size_t(c) * width * height; }
    double& at(int c, int y, int x) { return plane(c)[size_t(y) * width + x]; }
    double at(int c, int y, int x) const { return plane(c)[size_t(y) * width + x]; }

    void validate() const {
        if (width < 1 || height < 1) throw InvalidArgument("image dimensions must be >= 1");
        if (channels != 1 && channels != 3)
            throw InvalidArgument("image must have 1 or 3 channels");
        if (data.size() != size_t(channels) * width * height)
            throw InvalidArgument("image buffer size mismatch");
        if (gsd && !(*gsd > 0.0)) throw InvalidArgument("image gsd must be positive");
    }
};

/// One degradation condition: the GSD change plus the optical quality and
/// aperture shape of the simulated sensor.
struct DegradeSpec {
    double source_gsd = 0.0;  ///< m/pixel of the input
    double target_gsd = 0.0;  ///< m/pixel of the output
    double q = 1.0;
    optics::ApertureSpec aperture = optics::ApertureSpec::circular();
    double wavelength = optics::kDefaultWavelength;  ///< carried as metadata
    int intermediate_kernel_size = optics::kDefaultKernelSize;

    double scale() const { return target_gsd / source_gsd; }  // phi

    void validate() const {
        if (!(source_gsd > 0.0 && target_gsd > 0.0))
            throw InvalidArgument("GSD values must be positive");
        if (!(target_gsd > source_gsd))
            throw InvalidArgument("target GSD must exceed source GSD");
        if (!(q > 0.0 && q <= 4.0)) throw InvalidArgument("q must lie in (0, 4]");
        aperture.validate();
        if (intermediate_kernel_size < 3 || intermediate_kernel_size % 2 == 0)
            throw InvalidArgument("intermediate kernel size must be odd and >= 3");
    }
};

// ---------------------------------------------------------------------------
// Resampling and convolution
// ---------------------------------------------------------------------------

/// Catmull-Rom resampling under the half-pixel-centered mapping
/// x_src = (x_dst + 0.5) * w_src/w_dst - 0.5, clamp-to-edge at borders,
/// output clipped to [0, 1]. Used for both decimation and upscaling.
inline Image bicubic_resample(const Image& src, int out_width, int out_height) {
    src.validate();
    if (out_width < 1 || out_height < 1)
        throw InvalidArgument("output dimensions must be >= 1");

    Image dst = Image::zeros(out_width, out_height, src.channels);
    if (src.gsd) dst.gsd = *src.gsd * double(src.width) / double(out_width);

    const double sx = double(src.width) / out_width;
    const double sy = double(src.height) / out_height;
    for (int c = 0; c < src.channels; ++c) {
        const double* in = src.plane(c);
        double* out = dst.plane(c);
        for (int y = 0; y < out_height; ++y) {
            double fy = (y + 0.5) * sy - 0.5;
            for (int x = 0; x < out_width; ++x) {
                double fx = (x + 0.5) * sx - 0.5;
                double v = detail::cubic_sample_plane(in, src.width, src.height, fx, fy);
                out[size_t(y) * out_width + x] = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    return dst;
}

/// Direct spatial convolution with a unit-sum kernel, clamp-to-edge
/// borders, same output dimensions. Rows are computed independently, so
/// the result is identical for any worker count. No clipping here; the
/// degradation pipeline clips between stages.
inline Image convolve(const Image& src, const optics::PsfKernel& kernel, int threads = 1) {
    src.validate();
    const int k = kernel.size();
    if (k > src.width || k > src.height)
        throw InvalidArgument("kernel larger than image");
    const int half = kernel.center();
    const int w = src.width, h = src.height;

    Image dst = Image::zeros(w, h, src.channels);
    dst.gsd = src.gsd;

    // true convolution: flip the kernel once, then correlate
    Grid<double> flipped(k, k);
    for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx)
            flipped.at(ky, kx) = kernel.weights.at(k - 1 - ky, k - 1 - kx);
    const double* kw = flipped.data.data();

    for (int c = 0; c < src.channels; ++c) {
        const double* in = src.plane(c);
        double* out = dst.plane(c);
        parallel_for(h, threads, [&](int y) {
            const bool row_interior = (y >= half && y + half < h);
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                if (row_interior && x >= half && x + half < w) {
                    const double* base = in + size_t(y - half) * w + (x - half);
                    for (int ky = 0; ky < k; ++ky) {
                        const double* irow = base + size_t(ky) * w;
                        const double* krow = kw + size_t(ky) * k;
                        double racc = 0.0;
                        for (int kx = 0; kx < k; ++kx) racc += krow[kx] * irow[kx];
                        acc += racc;
                    }
                } else {
                    for (int ky = 0; ky < k; ++ky) {
                        int iy = detail::clamp_index(y + ky - half, h);
                        const double* irow = in + size_t(iy) * w;
                        const double* krow = kw + size_t(ky) * k;
                        double racc = 0.0;
                        for (int kx = 0; kx < k; ++kx)
                            racc += krow[kx] * irow[detail::clamp_index(x + kx - half, w)];
                        acc += racc;
                    }
                }
                out[size_t(y) * w + x] = acc;
            }
        });
    }
    return dst;
}

namespace detail_resample {

inline void clip_unit(Image& img) {
    for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
}

/// Intermediate plan for one degradation: blur happens at the largest
/// scale (finest pixels) at which the ring support of the condition's PSF
/// still fits the kernel budget.
struct DegradePlan {
    int out_width = 0, out_height = 0;       // final dimensions
    int mid_width = 0, mid_height = 0;       // blur-stage dimensions
    double q_effective = 0.0;                // sampling quality at the blur stage
    int kernel_size = 0;
};

inline DegradePlan plan_degrade(int width, int height, const DegradeSpec& spec) {
    const double phi = spec.scale();
    DegradePlan plan;
    plan.out_width = int(std::lround(width / phi));
    plan.out_height = int(std::lround(height / phi));
    if (plan.out_width < 8 || plan.out_height < 8)
        throw InvalidArgument("degraded image would be smaller than 8 pixels");

    const double ring_span = optics::kKernelSupportRings * optics::kAiryFirstZeroDiameter;
    const double m_max = spec.intermediate_kernel_size / (ring_span * spec.q);
    int mid_width = width;
    if (phi > m_max)
        mid_width = std::min(width, int(std::floor(plan.out_width * m_max)));
    mid_width = std::max(mid_width, plan.out_width);
    plan.mid_width = mid_width;
    plan.mid_height = mid_width == width
                          ? height
                          : std::max(plan.out_height,
                                     int(std::lround(double(height) * mid_width / width)));

    plan.q_effective = spec.q * double(plan.mid_width) / double(plan.out_width);
    int support = int(std::ceil(ring_span * plan.q_effective));
    if (support % 2 == 0) ++support;
    plan.kernel_size = std::clamp(support, 3, spec.intermediate_kernel_size);
    int max_fit = std::min(plan.mid_width, plan.mid_height);
    if (max_fit % 2 == 0) --max_fit;
    plan.kernel_size = std::min(plan.kernel_size, max_fit);
    return plan;
}

}  // namespace detail_resample

/// Caches the dense simulated PSF per aperture so repeated degradations
/// (e.g. a sweep over a dataset) pay for the FFT once.
class DegradeContext {
public:
    const optics::PsfKernel& dense_psf(const optics::ApertureSpec& spec) {
        std::string key = std::string(optics::to_string(spec.kind)) + '|' +
                          format_fixed6(spec.diameter) + '|' +
                          format_fixed6(spec.obscuration_ratio) + '|' +
                          std::to_string(spec.spider_count) + '|' +
                          format_fixed6(spec.spider_width_ratio);
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            it = cache_.emplace(key, optics::simulate_psf(optics::build_aperture(spec))).first;
        }
        return it->second;
    }

private:
    std::map<std::string, optics::PsfKernel> cache_;
};

/// Degrades an image to a coarser GSD: resample to the blur scale, convolve
/// with the condition's PSF kernel, then decimate to the final dimensions
/// round(width/phi) x round(height/phi). Output carries the target GSD.
inline Image degrade(const Image& src, const DegradeSpec& spec, int threads = 1,
                     DegradeContext* context = nullptr) {
    src.validate();
    spec.validate();
    if (src.gsd && std::abs(*src.gsd - spec.source_gsd) > 1e-9 * spec.source_gsd)
        throw InvalidArgument("image gsd metadata disagrees with source_gsd");

    const auto plan = detail_resample::plan_degrade(src.width, src.height, spec);

    Image mid = (plan.mid_width == src.width && plan.mid_height == src.height)
                    ? src
                    : bicubic_resample(src, plan.mid_width, plan.mid_height);

    optics::PsfKernel kernel;
    if (context) {
        kernel = optics::detail_optics::resample_psf_to_q(context->dense_psf(spec.aperture),
                                                          plan.q_effective, plan.kernel_size);
    } else {
        kernel = optics::detail_optics::condition_kernel(spec.aperture, plan.q_effective,
                                                         plan.kernel_size,
                                                         optics::kDefaultApertureGrid,
                                                         optics::kDefaultFillFraction);
    }
    Image blurred = convolve(mid, kernel, threads);
    detail_resample::clip_unit(blurred);

    Image out = bicubic_resample(blurred, plan.out_width, plan.out_height);
    out.gsd = spec.target_gsd;
    return out;
}

}  // namespace optigrade::resample
