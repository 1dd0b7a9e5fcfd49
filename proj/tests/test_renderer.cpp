#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "weathergs/error.hpp"
#include "weathergs/renderer.hpp"
#include "weathergs/rng.hpp"
#include "weathergs/threading.hpp"
#include "support/test_support.hpp"

using namespace wgs;
using namespace wgs::testing;

TEST_CASE("jacobian_perspective closed forms") {
    double j[2][3];

    jacobian_perspective({0, 0, 1}, 1, 1, j);
    CHECK(j[0][0] == 1.0);
    CHECK(j[0][1] == 0.0);
    CHECK(j[0][2] == 0.0);
    CHECK(j[1][1] == 1.0);
    CHECK(j[1][2] == 0.0);

    jacobian_perspective({0, 0, 2}, 1, 1, j);
    CHECK(j[0][0] == 0.5);
    CHECK(j[1][1] == 0.5);

    jacobian_perspective({1, 1, 2}, 2, 1, j);
    CHECK(j[0][0] == doctest::Approx(1.0));
    CHECK(j[0][2] == doctest::Approx(-0.5));
    CHECK(j[1][1] == doctest::Approx(0.5));
    CHECK(j[1][2] == doctest::Approx(-0.25));
}

namespace {

Camera center_camera(double fx = 100, int size = 128) {
    Camera cam;
    cam.fx = cam.fy = fx;
    cam.cx = cam.cy = size / 2.0;
    cam.width = cam.height = size;
    return cam;
}

Gaussian unit_gaussian_at(const Vec3& p) {
    Gaussian g;
    g.position = p;
    g.opacity_logit = 0.0;  // alpha 0.5
    g.color = {1, 0, 0};
    return g;
}

}  // namespace

TEST_CASE("project_gaussian unit covariance at unit depth") {
    const Camera cam = center_camera(100, 128);
    Gaussian g = unit_gaussian_at({0, 0, 1});
    g.log_scales = {0, 0, 0};  // Sigma = I

    const auto p = project_gaussian(g, cam, 0);
    REQUIRE(p.has_value());
    CHECK(p->mean2d.x == doctest::Approx(64.0));
    CHECK(p->mean2d.y == doctest::Approx(64.0));
    CHECK(p->cov2d.m[0][0] == doctest::Approx(100.0 * 100.0 + 0.3));
    CHECK(p->cov2d.m[1][1] == doctest::Approx(100.0 * 100.0 + 0.3));
    CHECK(p->cov2d.m[0][1] == doctest::Approx(0.0));
    CHECK(p->depth == 1.0);
}

TEST_CASE("project_gaussian culls behind camera") {
    const Camera cam = center_camera();
    const Gaussian g = unit_gaussian_at({0, 0, -1});
    CHECK(!project_gaussian(g, cam, 0).has_value());
}

TEST_CASE("isotropic covariance unchanged by roll") {
    Camera cam = center_camera();
    Gaussian g = unit_gaussian_at({0, 0, 2});
    g.log_scales = {std::log(0.5), std::log(0.5), std::log(0.5)};
    const auto base = project_gaussian(g, cam, 0);

    Camera rolled = cam;
    rolled.rotation_wc = Quat::from_axis_angle({0, 0, 1}, kPi / 2).rotation_matrix();
    const auto after = project_gaussian(g, rolled, 0);
    REQUIRE(base.has_value());
    REQUIRE(after.has_value());
    CHECK(after->cov2d.m[0][0] == doctest::Approx(base->cov2d.m[0][0]));
    CHECK(after->cov2d.m[1][1] == doctest::Approx(base->cov2d.m[1][1]));
    CHECK(after->cov2d.m[0][1] == doctest::Approx(base->cov2d.m[0][1]).epsilon(1e-9));
}

TEST_CASE("eval_gaussian_2d closed forms") {
    Projected2D p;
    p.mean2d = {10, 10};
    p.cov2d.m[0][0] = 1;
    p.cov2d.m[1][1] = 1;
    p.conic_a = 1;
    p.conic_b = 0;
    p.conic_c = 1;
    p.radius_x = p.radius_y = 3.0;
    p.opacity = 1.0;

    CHECK(eval_gaussian_2d(p, {10, 10}) == doctest::Approx(1.0));
    CHECK(eval_gaussian_2d(p, {11, 10}) == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));

    Projected2D q = p;
    q.cov2d.m[0][0] = 4;
    q.conic_a = 0.25;
    q.radius_x = 6.0;
    q.opacity = 0.5;
    CHECK(eval_gaussian_2d(q, {12, 10}) == doctest::Approx(0.5 * std::exp(-0.5)).epsilon(1e-9));

    // outside the 3-sigma bbox: exactly 0
    CHECK(eval_gaussian_2d(p, {13.5, 10}) == 0.0);
}

TEST_CASE("depth_sort ordering and ties") {
    std::vector<Projected2D> items(3);
    items[0].depth = 3;
    items[0].source_index = 0;
    items[1].depth = 1;
    items[1].source_index = 1;
    items[2].depth = 2;
    items[2].source_index = 2;
    CHECK(depth_sort(items) == std::vector<uint32_t>{1, 2, 0});

    std::vector<Projected2D> ties(2);
    ties[0].depth = 1.0;
    ties[0].source_index = 5;
    ties[1].depth = 1.0;
    ties[1].source_index = 2;
    CHECK(depth_sort(ties) == std::vector<uint32_t>{1, 0});

    std::vector<Projected2D> sorted(3);
    for (int i = 0; i < 3; ++i) {
        sorted[i].depth = i + 1.0;
        sorted[i].source_index = static_cast<uint32_t>(i);
    }
    CHECK(depth_sort(sorted) == std::vector<uint32_t>{0, 1, 2});
}

TEST_CASE("composite_pixel closed forms") {
    using C = std::pair<Vec3, double>;
    {
        const std::vector<C> one = {{{1, 0, 0}, 0.99}};
        const Vec3 c = composite_pixel(one);
        CHECK(c.x == doctest::Approx(0.99));
        CHECK(c.y == 0.0);
    }
    {
        const std::vector<C> two = {{{1, 0, 0}, 0.5}, {{0, 1, 0}, 0.5}};
        const Vec3 c = composite_pixel(two);
        CHECK(c.x == doctest::Approx(0.5));
        CHECK(c.y == doctest::Approx(0.25));
        CHECK(c.z == 0.0);
    }
    {
        const Vec3 c = composite_pixel({}, {0.2, 0.3, 0.4});
        CHECK(c.x == doctest::Approx(0.2));
        CHECK(c.y == doctest::Approx(0.3));
        CHECK(c.z == doctest::Approx(0.4));
    }
}

TEST_CASE("render matches the global-sort reference bit for bit") {
    const Camera cam = gradcheck_camera();
    for (uint64_t seed = 0; seed < 30; ++seed) {
        const GaussianCloud cloud = random_gradcheck_scene(derive_seed(100, seed));
        const ImageBuffer tiled = render(cloud, cam);
        const ImageBuffer ref = reference_render(cloud, cam);
        CHECK(images_bitwise_equal(tiled, ref));
    }
    // larger frame exercises multiple tiles
    const Camera big = center_camera(60, 100);
    Rng rng(5);
    GaussianCloud cloud;
    for (int i = 0; i < 200; ++i) {
        Gaussian g;
        g.position = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(1.5, 4.0)};
        g.rotation = Quat(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized();
        g.log_scales = {std::log(rng.uniform(0.02, 0.3)), std::log(rng.uniform(0.02, 0.3)),
                        std::log(rng.uniform(0.02, 0.3))};
        g.opacity_logit = logit(rng.uniform(0.1, 0.95));
        g.color = {rng.uniform(), rng.uniform(), rng.uniform()};
        cloud.gaussians.push_back(g);
    }
    CHECK(images_bitwise_equal(render(cloud, big), reference_render(cloud, big)));
}

TEST_CASE("all gaussians culled leaves a uniform background image") {
    const Camera cam = gradcheck_camera();
    GaussianCloud cloud;
    cloud.gaussians.push_back(unit_gaussian_at({0, 0, -5}));
    RenderOptions opt;
    opt.background = {0.25, 0.5, 0.75};
    const ImageBuffer img = render(cloud, cam, opt);
    for (const auto& p : img.pixels) {
        CHECK(p.x == doctest::Approx(0.25));
        CHECK(p.y == doctest::Approx(0.5));
        CHECK(p.z == doctest::Approx(0.75));
    }
}

TEST_CASE("huge opaque gaussian saturates the center pixel") {
    const Camera cam = gradcheck_camera();
    Gaussian g;
    g.position = {0, 0, 2};
    g.log_scales = {std::log(3.0), std::log(3.0), std::log(3.0)};
    g.opacity_logit = logit(0.999);
    g.color = {1, 0, 0};
    GaussianCloud cloud;
    cloud.gaussians.push_back(g);
    const ImageBuffer img = render(cloud, cam);
    CHECK(img.at(8, 8).x == doctest::Approx(0.99).epsilon(1e-3));
    CHECK(img.at(8, 8).y == 0.0);
    CHECK(img.at(8, 8).z == 0.0);
}

TEST_CASE("render is storage-order invariant") {
    const Camera cam = gradcheck_camera();
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        GaussianCloud cloud = random_gradcheck_scene(derive_seed(200, trial));
        const ImageBuffer base = render(cloud, cam);
        GaussianCloud shuffled = cloud;
        rng.shuffle(shuffled.gaussians);
        CHECK(images_bitwise_equal(base, render(shuffled, cam)));
    }
}

TEST_CASE("render determinism across repeated runs and thread counts") {
    const Camera cam = center_camera(80, 64);
    Rng rng(3);
    GaussianCloud cloud;
    for (int i = 0; i < 500; ++i) {
        Gaussian g;
        g.position = {rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), rng.uniform(1.0, 3.0)};
        g.rotation = Quat(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized();
        g.log_scales = {std::log(rng.uniform(0.02, 0.2)), std::log(rng.uniform(0.02, 0.2)),
                        std::log(rng.uniform(0.02, 0.2))};
        g.opacity_logit = logit(rng.uniform(0.2, 0.9));
        g.color = {rng.uniform(), rng.uniform(), rng.uniform()};
        cloud.gaussians.push_back(g);
    }
    const ImageBuffer once = render(cloud, cam);
    CHECK(images_bitwise_equal(once, render(cloud, cam)));

    const int saved = thread_count();
    set_thread_count(1);
    const ImageBuffer single = render(cloud, cam);
    set_thread_count(4);
    const ImageBuffer multi = render(cloud, cam);
    set_thread_count(saved);
    CHECK(images_bitwise_equal(once, single));
    CHECK(images_bitwise_equal(once, multi));
}

TEST_CASE("gaussian behind the camera changes nothing") {
    const Camera cam = gradcheck_camera();
    GaussianCloud cloud = random_gradcheck_scene(77);
    const ImageBuffer base = render(cloud, cam);
    GaussianCloud extra = cloud;
    Gaussian behind = unit_gaussian_at({0.2, 0.1, -2.0});
    behind.log_scales = {0, 0, 0};
    extra.gaussians.push_back(behind);
    CHECK(images_bitwise_equal(base, render(extra, cam)));
}

TEST_CASE("transmittance invariants on random pixels") {
    const Camera cam = center_camera(40, 64);
    Rng rng(9);
    GaussianCloud cloud;
    for (int i = 0; i < 120; ++i) {
        Gaussian g;
        g.position = {rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(1.0, 4.0)};
        g.rotation = Quat(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized();
        g.log_scales = {std::log(rng.uniform(0.05, 0.6)), std::log(rng.uniform(0.05, 0.6)),
                        std::log(rng.uniform(0.05, 0.6))};
        g.opacity_logit = logit(rng.uniform(0.2, 0.97));
        g.color = {rng.uniform(), rng.uniform(), rng.uniform()};
        cloud.gaussians.push_back(g);
    }
    RenderAux aux;
    (void)render(cloud, cam, {}, &aux);

    size_t checked = 0;
    for (int y = 0; y < 64 && checked < 1000; ++y)
        for (int x = 0; x < 64 && checked < 1000; ++x) {
            const auto contribs = aux.contributions_for_pixel(x, y);
            double t = 1.0;
            double weight_sum = 0.0;
            for (const auto& cb : contribs) {
                CHECK(cb.t_before <= t + 1e-15);  // nonincreasing
                CHECK(cb.alpha >= kAlphaSkip);
                CHECK(cb.alpha <= kAlphaClamp);
                weight_sum += cb.alpha * cb.t_before;
                t = cb.t_before * (1.0 - cb.alpha);
            }
            CHECK(weight_sum <= 1.0 + 1e-12);
            ++checked;
        }
    CHECK(checked == 1000);
}

TEST_CASE("render rejects an empty cloud") {
    const Camera cam = gradcheck_camera();
    CHECK_THROWS_AS(render(GaussianCloud{}, cam), Error);
}

TEST_CASE("render_backward rejects mismatched aux") {
    const Camera cam = gradcheck_camera();
    GaussianCloud cloud = random_gradcheck_scene(5);
    RenderAux aux;
    (void)render(cloud, cam, {}, &aux);
    cloud.gaussians.push_back(cloud.gaussians[0]);
    ImageBuffer dl(cam.width, cam.height);
    CHECK_THROWS_AS(render_backward(cloud, cam, aux, dl), Error);
}
