#include <doctest.h>

#include <cmath>

#include "tempogs/loss.hpp"
#include "tempogs/random.hpp"

using namespace tempogs;

namespace {

Image random_image(Rng& rng, int w, int h) {
    Image img(w, h);
    for (double& v : img.pixels) v = rng.uniform(0.0, 1.0);
    return img;
}

// Independent windowed-statistics oracle: direct per-window double loop with a
// renormalized Gaussian window over luma, matching the metric definition.
double brute_force_mean_luminance_term(const Image& x, const Image& y, const SsimSettings& st) {
    const auto lx = to_luma(x);
    const auto ly = to_luma(y);
    const int r = st.window / 2;
    double total = 0;
    for (int cy = 0; cy < x.height; ++cy) {
        for (int cx = 0; cx < x.width; ++cx) {
            double wsum = 0, mx = 0, my = 0;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    const int px = cx + dx, py = cy + dy;
                    if (px < 0 || px >= x.width || py < 0 || py >= x.height) continue;
                    const double w = std::exp(-0.5 * (dx * dx + dy * dy) /
                                              (st.window_sigma * st.window_sigma));
                    wsum += w;
                    mx += w * lx[static_cast<size_t>(py) * x.width + px];
                    my += w * ly[static_cast<size_t>(py) * x.width + px];
                }
            }
            mx /= wsum;
            my /= wsum;
            // Constant offset leaves variances untouched; SSIM reduces to l.
            total += (2 * mx * my + st.c1) / (mx * mx + my * my + st.c1);
        }
    }
    return total / (static_cast<double>(x.width) * x.height);
}

}  // namespace

TEST_SUITE("loss") {

TEST_CASE("zero confidence annihilates the loss") {
    Rng rng(1);
    const Image rendered = random_image(rng, 32, 24);
    const Image target = random_image(rng, 32, 24);
    const ConfidenceMap zero = ConfidenceMap::uniform(0, 4, 4, 0.0);
    const LossResult r = loss_init(rendered, target, zero);
    CHECK(r.value == 0.0);
    for (double g : r.gradient.pixels) CHECK(g == 0.0);
}

TEST_CASE("perfect render has zero loss under any confidence") {
    Rng rng(2);
    const Image img = random_image(rng, 32, 24);
    ConfidenceMap conf = ConfidenceMap::uniform(0, 4, 4, 1.0);
    conf.values[5] = 0.0;
    const LossResult r = loss_init(img, img, conf);
    CHECK(std::abs(r.value) < 1e-9);
}

TEST_CASE("constant offset matches the hand-computed statistics oracle") {
    Rng rng(3);
    const Image target = random_image(rng, 24, 20);
    Image rendered = target;
    for (double& v : rendered.pixels) v += 0.1;

    const ConfidenceMap whole = ConfidenceMap::uniform(0, 1, 1, 1.0);
    LossSettings st;
    const LossResult r = loss_init(rendered, target, whole, st);

    const double expected_l1 = 0.1;
    const double expected_ssim_mean = brute_force_mean_luminance_term(rendered, target, st.ssim);
    const double expected = expected_l1 + st.ssim_weight * (1.0 - expected_ssim_mean);
    CHECK(r.value == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("literal eq2 switch restores the per-pixel sum and unit weight") {
    Rng rng(4);
    const Image target = random_image(rng, 16, 12);
    Image rendered = target;
    for (double& v : rendered.pixels) v += 0.1;

    const ConfidenceMap whole = ConfidenceMap::uniform(0, 1, 1, 1.0);
    LossSettings literal;
    literal.literal_eq2 = true;
    const LossResult r = loss_init(rendered, target, whole, literal);
    const double l1_sum = 0.1 * 3 * 16 * 12;
    const double ssim_mean = brute_force_mean_luminance_term(rendered, target, literal.ssim);
    CHECK(r.value == doctest::Approx(l1_sum + (1.0 - ssim_mean)).epsilon(1e-9));
}

TEST_CASE("loss is non-negative") {
    Rng rng(5);
    for (int t = 0; t < 5; ++t) {
        const Image a = random_image(rng, 24, 16);
        const Image b = random_image(rng, 24, 16);
        ConfidenceMap conf = ConfidenceMap::uniform(0, 3, 4, 1.0);
        for (double& v : conf.values) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
        CHECK(loss_init(a, b, conf).value >= 0.0);
    }
}

TEST_CASE("loss gradient matches finite differences") {
    Rng rng(6);
    const int w = 20, h = 16;
    Image rendered = random_image(rng, w, h);
    const Image target = random_image(rng, w, h);
    // Keep |rendered - target| away from the L1 kink so central differences
    // see a constant sign.
    for (size_t i = 0; i < rendered.pixels.size(); ++i) {
        if (std::abs(rendered.pixels[i] - target.pixels[i]) < 1e-3) {
            rendered.pixels[i] += 2e-3;
        }
    }
    ConfidenceMap conf = ConfidenceMap::uniform(0, 4, 5, 1.0);
    for (size_t p = 0; p < conf.values.size(); ++p) conf.values[p] = (p % 3 == 0) ? 0.0 : 1.0;

    const LossResult base = loss_init(rendered, target, conf);
    const double step = 1e-6;
    Rng pick(7);
    for (int k = 0; k < 50; ++k) {
        const size_t idx = pick.uniform_index(rendered.pixels.size());
        const double saved = rendered.pixels[idx];
        rendered.pixels[idx] = saved + step;
        const double lp = loss_init(rendered, target, conf).value;
        rendered.pixels[idx] = saved - step;
        const double lm = loss_init(rendered, target, conf).value;
        rendered.pixels[idx] = saved;
        const double fd = (lp - lm) / (2 * step);
        const double a = base.gradient.pixels[idx];
        CHECK(std::abs(a - fd) <= std::max(1e-7, 1e-4 * std::max(std::abs(a), std::abs(fd))));
    }
}

TEST_CASE("dimension mismatch raises") {
    Image a(16, 16, 0.5), b(16, 18, 0.5);
    CHECK_THROWS(loss_init(a, b, ConfidenceMap::uniform(0, 2, 2)));
}

}  // TEST_SUITE
