#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>

#include "optigrade/optics.hpp"
#include "oracles.hpp"

using namespace optigrade;
using namespace optigrade::optics;
using Catch::Approx;

namespace {

OpticalConfig make_config(double lambda, double f, double d, double p, double a = 1.0) {
    OpticalConfig cfg;
    cfg.wavelength = lambda;
    cfg.focal_length = f;
    cfg.aperture_diameter = d;
    cfg.pixel_pitch = p;
    cfg.altitude = a;
    return cfg;
}

/// 90 degree array rotation: out(y, x) = in(n-1-x, y).
Grid<double> rot90(const Grid<double>& in) {
    Grid<double> out(in.width, in.height);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) out.at(y, x) = in.at(in.height - 1 - x, y);
    return out;
}

}  // namespace

TEST_CASE("gsd evaluates p*A/f", "[optics]") {
    CHECK(gsd(make_config(550e-9, 0.01, 0.1, 2.4e-6, 50.0)) == Approx(0.012).epsilon(1e-12));
    CHECK(gsd(make_config(550e-9, 0.01, 0.1, 2.4e-6, 100.0)) == Approx(0.024).epsilon(1e-12));
    // unit magnification: f = A
    CHECK(gsd(make_config(550e-9, 7.5, 0.1, 1e-6, 7.5)) == Approx(1e-6).epsilon(1e-12));
}

TEST_CASE("invalid optical configs are rejected", "[optics]") {
    CHECK_THROWS_AS(gsd(make_config(550e-9, 0.0, 0.1, 2.4e-6)), InvalidArgument);
    CHECK_THROWS_AS(q_value(make_config(-550e-9, 1.0, 0.1, 2.4e-6)), InvalidArgument);
    CHECK_THROWS_AS(airy_first_zero(make_config(550e-9, 1.0, 0.1, 0.0)), InvalidArgument);
}

TEST_CASE("q_value evaluates lambda*f/(D*p)", "[optics]") {
    CHECK(q_value(make_config(550e-9, 1.0, 0.1, 5.5e-6)) == Approx(1.0).epsilon(1e-12));
    CHECK(q_value(make_config(550e-9, 1.0, 0.1, 1.1e-5)) == Approx(0.5).epsilon(1e-12));
}

TEST_CASE("q_value is invariant under joint rescaling", "[optics]") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> factor(0.1, 10.0);
    OpticalConfig base = make_config(550e-9, 1.3, 0.21, 4.2e-6);
    double q0 = q_value(base);
    for (int i = 0; i < 20; ++i) {
        double c = factor(rng);
        OpticalConfig fd = base;
        fd.focal_length *= c;
        fd.aperture_diameter *= c;
        CHECK(q_value(fd) == Approx(q0).epsilon(1e-12));
        OpticalConfig lp = base;
        lp.wavelength *= c;
        lp.pixel_pitch *= c;
        CHECK(q_value(lp) == Approx(q0).epsilon(1e-12));
    }
}

TEST_CASE("airy_first_zero evaluates 2.44*lambda*f/D", "[optics]") {
    CHECK(airy_first_zero(make_config(550e-9, 1.0, 0.1, 5.5e-6)) ==
          Approx(1.342e-5).epsilon(1e-12));
    CHECK(airy_first_zero(make_config(550e-9, 1.0, 0.2, 5.5e-6)) ==
          Approx(6.71e-6).epsilon(1e-12));
}

TEST_CASE("airy_first_zero in detector pixels equals 2.44*q", "[optics]") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.2, 5.0);
    for (int i = 0; i < 20; ++i) {
        OpticalConfig cfg = make_config(550e-9 * u(rng), u(rng), 0.1 * u(rng), 1e-6 * u(rng));
        CHECK(airy_first_zero(cfg) / cfg.pixel_pitch ==
              Approx(2.44 * q_value(cfg)).epsilon(1e-12));
    }
}

TEST_CASE("analytic_circular_psf matches Bessel structure", "[optics]") {
    OpticalConfig cfg = make_config(550e-9, 1.0, 0.1, 5.5e-6);
    const double unit = cfg.wavelength * cfg.focal_length / cfg.aperture_diameter;  // lf/D

    CHECK(analytic_circular_psf(cfg, 0.0) == 1.0);

    // first dark ring at the first root of J1
    double r1 = oracle::kBesselJ1FirstRoot / std::numbers::pi * unit;
    CHECK(analytic_circular_psf(cfg, r1) < 1e-9);

    // first side lobe: located independently with the libm-based evaluator
    double x_peak = oracle::argmax_airy(oracle::kBesselJ1FirstRoot, oracle::kBesselJ1SecondRoot);
    CHECK(x_peak / std::numbers::pi == Approx(1.635).margin(5e-3));
    double r_peak = x_peak / std::numbers::pi * unit;
    CHECK(analytic_circular_psf(cfg, r_peak) == Approx(0.017498).margin(1e-4));
    CHECK(analytic_circular_psf(cfg, r_peak) == Approx(oracle::airy_intensity(x_peak)).epsilon(1e-9));
}

TEST_CASE("build_aperture circular disc area matches the analytic ratio", "[optics]") {
    ApertureMask mask = build_aperture(ApertureSpec::circular(0.5), 512, 0.25);
    double frac = mask.sum() / (512.0 * 512.0);
    double expected = std::numbers::pi / 4.0 * 0.25 * 0.25;
    CHECK(frac == Approx(expected).epsilon(0.01));
    CHECK(mask.meters_per_cell == Approx(0.5 / 128.0));
}

TEST_CASE("build_aperture cell values and center", "[optics]") {
    ApertureMask mask = build_aperture(ApertureSpec::circular(0.5), 128, 0.5);
    for (double v : mask.values.data) CHECK((v == 0.0 || v == 0.5 || v == 1.0));
    // all four cells around the half-integer center lie inside the disc
    CHECK(mask.values.at(64, 64) == 1.0);
    CHECK(mask.values.at(63, 63) == 1.0);
}

TEST_CASE("cassegrain mask is a pointwise subset of the circular mask", "[optics]") {
    ApertureMask circ = build_aperture(ApertureSpec::circular(0.5), 256, 0.5);
    ApertureMask cass = build_aperture(ApertureSpec::cassegrain(0.5, 0.3, 4, 0.02), 256, 0.5);
    REQUIRE(circ.values.size() == cass.values.size());
    for (size_t i = 0; i < circ.values.size(); ++i) CHECK(cass.values.data[i] <= circ.values.data[i]);
    CHECK(cass.sum() < circ.sum());
}

TEST_CASE("build_aperture validation", "[optics]") {
    CHECK_THROWS_AS(build_aperture(ApertureSpec::circular(0.5), 16, 0.25), InvalidArgument);
    CHECK_THROWS_AS(build_aperture(ApertureSpec::circular(0.5), 512, 0.0), InvalidArgument);
    CHECK_THROWS_AS(build_aperture(ApertureSpec::circular(-1.0), 512, 0.25), InvalidArgument);
    CHECK_THROWS_AS(build_aperture(ApertureSpec::cassegrain(0.5, 1.2), 512, 0.25),
                    InvalidArgument);
    // obscuration smaller than two cells across
    CHECK_THROWS_AS(build_aperture(ApertureSpec::cassegrain(0.5, 0.2), 32, 0.25),
                    InvalidArgument);
    ApertureSpec bad = ApertureSpec::cassegrain(0.5, 0.3, 4, 0.0);
    CHECK_THROWS_AS(build_aperture(bad, 512, 0.25), InvalidArgument);
}

TEST_CASE("simulate_psf of an open square is separable with a central peak", "[optics]") {
    const int n = 64;
    ApertureMask mask;
    mask.values = Grid<double>(n, n, 0.0);
    for (int y = n / 4; y < 3 * n / 4; ++y)
        for (int x = n / 4; x < 3 * n / 4; ++x) mask.values.at(y, x) = 1.0;
    mask.meters_per_cell = 1e-3;
    mask.diameter = 1e-3 * n / 2;

    PsfKernel psf = simulate_psf(mask);
    CHECK(psf.sum() == Approx(1.0).margin(1e-9));
    const int c = psf.center();
    double peak = psf.weights.at(c, c);
    for (double v : psf.weights.data) {
        CHECK(v >= 0.0);
        CHECK(v <= peak);
    }
    // |FFT|^2 of a separable mask factorizes over rows and columns
    for (int y = 0; y < psf.size(); y += 5)
        for (int x = 0; x < psf.size(); x += 5)
            CHECK(psf.weights.at(y, x) * peak ==
                  Approx(psf.weights.at(y, c) * psf.weights.at(c, x)).margin(1e-12));
}

TEST_CASE("simulate_psf rejects degenerate input", "[optics]") {
    ApertureMask empty;
    empty.values = Grid<double>(64, 64, 0.0);
    empty.meters_per_cell = 1e-3;
    empty.diameter = 1e-3 * 16;
    CHECK_THROWS_AS(simulate_psf(empty), InvalidArgument);

    CHECK_THROWS_AS(simulate_psf(build_aperture(ApertureSpec::circular(0.5), 100, 0.25)),
                    InvalidArgument);  // not a power of two
}

TEST_CASE("simulated circular PSF matches the analytic profile", "[optics]") {
    const double fill = 0.25;
    ApertureMask mask = build_aperture(ApertureSpec::circular(0.5), 512, fill);
    PsfKernel psf = simulate_psf(mask);
    const int c = psf.center();
    const double peak = psf.weights.at(c, c);
    const double rho_third_zero = oracle::kBesselJ1ThirdRoot / (std::numbers::pi * fill);

    double sq = 0.0;
    long count = 0;
    for (int y = 0; y < psf.size(); ++y)
        for (int x = 0; x < psf.size(); ++x) {
            double rho = std::hypot(double(x - c), double(y - c));
            if (rho > rho_third_zero) continue;
            double diff = psf.weights.at(y, x) / peak -
                          oracle::airy_intensity(std::numbers::pi * rho * fill);
            sq += diff * diff;
            ++count;
        }
    double rms = std::sqrt(sq / double(count));
    CHECK(rms < 0.01);
}

TEST_CASE("circular PSF is radially symmetric", "[optics]") {
    ApertureMask mask = build_aperture(ApertureSpec::circular(0.5), 512, 0.25);
    PsfKernel psf = simulate_psf(mask);
    const int c = psf.center();
    const double peak = psf.weights.at(c, c);
    const double rho_second_zero = oracle::kBesselJ1SecondRoot / (std::numbers::pi * 0.25);

    // group cells by exact squared radius; all members must agree
    std::map<long, std::pair<double, double>> rings;  // 4*rho^2 -> (min, max)
    for (int y = 0; y < psf.size(); ++y)
        for (int x = 0; x < psf.size(); ++x) {
            long dx = 2 * (x - c), dy = 2 * (y - c);
            long key = dx * dx + dy * dy;
            double rho2 = double(key) / 4.0;
            if (rho2 > rho_second_zero * rho_second_zero) continue;
            double v = psf.weights.at(y, x);
            auto it = rings.find(key);
            if (it == rings.end())
                rings.emplace(key, std::make_pair(v, v));
            else {
                it->second.first = std::min(it->second.first, v);
                it->second.second = std::max(it->second.second, v);
            }
        }
    for (const auto& [key, mm] : rings)
        CHECK(mm.second - mm.first <= 0.02 * mm.second + 1e-9 * peak);
}

TEST_CASE("four-spider cassegrain PSF is invariant under 90 degree rotation", "[optics]") {
    ApertureMask mask = build_aperture(ApertureSpec::cassegrain(0.5, 0.3, 4, 0.02), 256, 0.25);
    ApertureMask rotated = mask;
    rotated.values = rot90(mask.values);

    // the mask itself is exactly symmetric
    for (size_t i = 0; i < mask.values.size(); ++i)
        REQUIRE(mask.values.data[i] == rotated.values.data[i]);

    PsfKernel a = simulate_psf(mask);
    PsfKernel b = simulate_psf(rotated);
    double maxdiff = 0.0;
    for (size_t i = 0; i < a.weights.size(); ++i)
        maxdiff = std::max(maxdiff, std::abs(a.weights.data[i] - b.weights.data[i]));
    CHECK(maxdiff <= 1e-9);
}

TEST_CASE("obscuration pushes encircled energy outward", "[optics]") {
    const double fill = 0.25;
    PsfKernel circ = simulate_psf(build_aperture(ApertureSpec::circular(0.5), 512, fill));
    PsfKernel cass =
        simulate_psf(build_aperture(ApertureSpec::cassegrain(0.5, 0.3, 4, 0.02), 512, fill));
    const double first_zero_radius = 1.22 / fill;  // bins
    for (double r : {1.0, 2.0, 3.0, 4.0, first_zero_radius}) {
        CHECK(encircled_energy(cass, r) <= encircled_energy(circ, r));
    }
    CHECK(encircled_energy(cass, first_zero_radius) < encircled_energy(circ, first_zero_radius));
}

TEST_CASE("halving the fill fraction doubles the first-zero radius in bins", "[optics]") {
    PsfKernel fine = simulate_psf(build_aperture(ApertureSpec::circular(0.5), 512, 0.25));
    PsfKernel coarse = simulate_psf(build_aperture(ApertureSpec::circular(0.5), 512, 0.125));
    double d1 = first_zero_diameter(fine, 0.02, 8.0);
    double d2 = first_zero_diameter(coarse, 0.02, 15.0);
    REQUIRE(d1 > 0.0);
    REQUIRE(d2 > 0.0);
    CHECK(std::abs(d2 / 2.0 - d1) <= 2.0);  // radii within one bin
    CHECK(d1 == Approx(2.0 * 1.22 / 0.25).margin(0.5));
}

TEST_CASE("kernel_for_condition produces unit-sum centered kernels", "[optics]") {
    for (auto spec : {ApertureSpec::circular(0.5), ApertureSpec::cassegrain(0.5)}) {
        for (double q : {0.5, 1.0, 1.5}) {
            PsfKernel k = kernel_for_condition(spec, q, 63, 512, 0.25);
            CHECK(k.size() == 63);
            CHECK(k.sum() == Approx(1.0).margin(1e-9));
            CHECK(k.q == q);
            const int c = k.center();
            double peak = k.weights.at(c, c);
            for (double v : k.weights.data) {
                CHECK(v >= 0.0);
                CHECK(v <= peak);
            }
        }
    }
}

TEST_CASE("kernel_for_condition first-zero scaling", "[optics]") {
    // on the dense simulated grid the ring is fully resolved; its diameter
    // through the resampling scale gives the ring size in detector pixels
    const double fill = 0.25;
    PsfKernel dense = simulate_psf(build_aperture(ApertureSpec::circular(0.5), 512, fill));
    double d_bins = first_zero_diameter(dense, 0.02, 8.0);
    REQUIRE(d_bins > 0.0);
    for (double q : {0.5, 1.0, 1.5}) {
        double d_px = d_bins * q * fill;  // bins -> detector pixels at quality q
        CHECK(std::abs(d_px - 2.44 * q) <= 0.5);
    }

    // at q = 3 the kernel oversamples the pattern and the ring is
    // resolvable directly on the final grid
    PsfKernel k = kernel_for_condition(ApertureSpec::circular(0.5), 3.0, 63, 512, fill);
    double d_direct = first_zero_diameter(k, 0.02, 6.0);
    CHECK(std::abs(d_direct - 2.44 * 3.0) <= 0.5);
}

TEST_CASE("kernel_for_condition rejects out-of-range conditions", "[optics]") {
    CHECK_THROWS_AS(kernel_for_condition(ApertureSpec::circular(0.5), 0.0), InvalidArgument);
    CHECK_THROWS_AS(kernel_for_condition(ApertureSpec::circular(0.5), 4.5), InvalidArgument);
    CHECK_THROWS_AS(kernel_for_condition(ApertureSpec::circular(0.5), 0.25), InvalidArgument);
    CHECK_THROWS_AS(kernel_for_condition(ApertureSpec::circular(0.5), 1.0, 64), InvalidArgument);
}

TEST_CASE("kernel text export is row-major with one row per line", "[optics]") {
    PsfKernel k = kernel_for_condition(ApertureSpec::circular(0.5), 1.0, 5, 128, 0.25);
    std::string text = kernel_to_text(k);
    size_t lines = std::count(text.begin(), text.end(), '\n');
    CHECK(lines == 5);
    double first = std::strtod(text.c_str(), nullptr);
    CHECK(first == Approx(k.weights.at(0, 0)).epsilon(1e-8));
}
