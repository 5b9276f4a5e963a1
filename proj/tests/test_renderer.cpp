#include <doctest.h>

#include <cmath>

#include "support/gradcheck.hpp"
#include "tempogs/renderer.hpp"

using namespace tempogs;
using namespace tempogs::testsupport;

namespace {

Camera centered_camera(int size = 100, double f = 100.0) {
    Camera cam;
    cam.width = cam.height = size;
    cam.fx = cam.fy = f;
    cam.cx = cam.cy = size / 2.0;
    return cam;
}

Gaussian3D axis_gaussian(double z, double scale, double opacity, const Vec3& color) {
    Gaussian3D g;
    g.position = Vec3(0, 0, z);
    g.scale = Vec3::Constant(scale);
    g.opacity = opacity;
    g.color = color;
    return g;
}

}  // namespace

TEST_SUITE("renderer") {

TEST_CASE("empty model renders pure background") {
    const Camera cam = centered_camera();
    const Image black = render(std::vector<Gaussian3D>{}, cam, Vec3(0, 0, 0));
    for (double v : black.pixels) CHECK(v == 0.0);
    const Image tinted = render(std::vector<Gaussian3D>{}, cam, Vec3(0.2, 0.4, 0.6));
    CHECK(tinted.at(10, 20, 0) == doctest::Approx(0.2));
    CHECK(tinted.at(10, 20, 1) == doctest::Approx(0.4));
    CHECK(tinted.at(10, 20, 2) == doctest::Approx(0.6));
}

TEST_CASE("single on-axis gaussian matches the brute-force alpha formula") {
    // Identity pose, isotropic splat on the optical axis: the screen
    // covariance is (f*s/z)^2 I plus the low-pass floor, so every pixel value
    // can be evaluated by hand.
    const Camera cam = centered_camera(100, 100.0);
    const double z = 2.0, s = 0.02, opacity = 0.95;
    const auto g = axis_gaussian(z, s, opacity, Vec3(1, 1, 1));
    const RenderSettings st;
    const Image img = render({g}, cam, Vec3(0, 0, 0), st);

    const double sigma2 = (cam.fx * s / z) * (cam.fx * s / z) + st.low_pass;
    int brighter_than_center = 0;
    for (int row = 0; row < cam.height; ++row) {
        for (int col = 0; col < cam.width; ++col) {
            const double dx = col - cam.cx, dy = row - cam.cy;
            const double power = 0.5 * (dx * dx + dy * dy) / sigma2;
            const double expected = power > st.power_cutoff ? 0.0 : opacity * std::exp(-power);
            CHECK(img.at(row, col, 0) == doctest::Approx(expected).epsilon(1e-9));
            if (img.at(row, col, 0) > img.at(50, 50, 0)) ++brighter_than_center;
        }
    }
    CHECK(brighter_than_center == 0);

    // Monotone decay with radius along the central scanline.
    for (int col = 51; col < 99; ++col) {
        CHECK(img.at(50, col, 0) >= img.at(50, col + 1, 0));
    }
}

TEST_CASE("two stacked gaussians composite front to back") {
    const Camera cam = centered_camera();
    // Both project to the image center; alpha at the center equals opacity.
    auto red = axis_gaussian(1.0, 0.05, 0.6, Vec3(1, 0, 0));
    auto blue = axis_gaussian(2.0, 0.10, 0.6, Vec3(0, 0, 1));
    const Image img = render({blue, red}, cam, Vec3(0, 0, 0));
    CHECK(img.at(50, 50, 0) == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(img.at(50, 50, 2) == doctest::Approx(0.4 * 0.6).epsilon(1e-9));
    CHECK(img.at(50, 50, 1) == doctest::Approx(0.0));
}

TEST_CASE("compositing weights sum to one") {
    // With every color and the background set to 1 the output equals
    // sum(alpha_i T_i) + T_final, which must be 1 everywhere.
    Rng rng(404);
    for (int trial = 0; trial < 5; ++trial) {
        auto scene = gradcheck_scene(rng, 5);
        for (auto& g : scene) g.color = Vec3(1, 1, 1);
        const Image img = render(scene, gradcheck_camera(), Vec3(1, 1, 1));
        for (double v : img.pixels) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("sequential render is bit deterministic, parallel matches to 1e-6") {
    Rng rng(7);
    const auto scene = gradcheck_scene(rng, 5);
    const Camera cam = gradcheck_camera();
    const Image a = render(scene, cam, Vec3(0.1, 0.2, 0.3));
    const Image b = render(scene, cam, Vec3(0.1, 0.2, 0.3));
    REQUIRE(a.pixels.size() == b.pixels.size());
    for (size_t i = 0; i < a.pixels.size(); ++i) CHECK(a.pixels[i] == b.pixels[i]);

    RenderSettings par;
    par.threads = 2;
    const Image c = render(scene, cam, Vec3(0.1, 0.2, 0.3), par);
    for (size_t i = 0; i < a.pixels.size(); ++i) {
        CHECK(std::abs(a.pixels[i] - c.pixels[i]) < 1e-6);
    }
}

TEST_CASE("zero loss gradient yields zero parameter gradients") {
    Rng rng(11);
    const auto scene = gradcheck_scene(rng, 4);
    const Camera cam = gradcheck_camera();
    const Image zero(cam.width, cam.height, 0.0);
    const RenderGradients g = render_backward(scene, cam, Vec3(0, 0, 0), zero);
    for (size_t i = 0; i < scene.size(); ++i) {
        CHECK(g.position[i].norm() == 0.0);
        CHECK(g.rotation[i].norm() == 0.0);
        CHECK(g.scale[i].norm() == 0.0);
        CHECK(g.opacity[i] == 0.0);
        CHECK(g.color[i].norm() == 0.0);
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(2024);
    const Camera cam = gradcheck_camera();
    int total = 0, failures = 0;
    for (int scene_i = 0; scene_i < 10; ++scene_i) {
        const auto scene = gradcheck_scene(rng, 5);
        const Vec3 bg(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9));
        const Image lg = random_loss_gradient(rng, cam.width, cam.height);
        const auto res = gradcheck_scene_once(scene, cam, bg, lg);
        total += res.coordinates;
        failures += res.failures;
        if (res.failures > 0) {
            MESSAGE("scene ", scene_i, " worst: ", res.worst_detail);
        }
    }
    CHECK(total > 0);
    CHECK(failures == 0);
}

TEST_CASE("color gradient of a covering splat equals alpha-weighted gradient sum") {
    // Single splat: dL/dcolor_ch = sum_pixels g_ch * alpha(px) * T(px) with
    // T = 1 in front. The oracle recomputes alpha per pixel from the formula.
    const Camera cam = centered_camera(64, 60.0);
    const double z = 2.0, s = 0.5, opacity = 0.9;
    const auto g = axis_gaussian(z, s, opacity, Vec3(0.5, 0.5, 0.5));
    const RenderSettings st;
    Image lg(cam.width, cam.height);
    Rng rng(5);
    for (double& v : lg.pixels) v = rng.uniform(-1.0, 1.0);

    const double sigma2 = (cam.fx * s / z) * (cam.fx * s / z) + st.low_pass;
    Vec3 expected = Vec3::Zero();
    for (int row = 0; row < cam.height; ++row) {
        for (int col = 0; col < cam.width; ++col) {
            const double dx = col - cam.cx, dy = row - cam.cy;
            const double power = 0.5 * (dx * dx + dy * dy) / sigma2;
            if (power > st.power_cutoff) continue;
            const double alpha = opacity * std::exp(-power);
            for (int ch = 0; ch < 3; ++ch) expected[ch] += lg.at(row, col, ch) * alpha;
        }
    }
    const RenderGradients grads = render_backward({g}, cam, Vec3(0, 0, 0), lg, st);
    for (int ch = 0; ch < 3; ++ch) {
        CHECK(grads.color[0][ch] == doctest::Approx(expected[ch]).epsilon(1e-9));
    }
}

TEST_CASE("rendered values stay in [0,1]") {
    Rng rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        const auto scene = gradcheck_scene(rng, 5);
        const Image img = render(scene, gradcheck_camera(),
                                 Vec3(rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)));
        for (double v : img.pixels) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

}  // TEST_SUITE
