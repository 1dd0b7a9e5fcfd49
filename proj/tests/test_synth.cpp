#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "weathergs/error.hpp"
#include "weathergs/image_io.hpp"
#include "weathergs/metrics.hpp"
#include "weathergs/rng.hpp"
#include "weathergs/synth.hpp"
#include "support/temp_dir.hpp"
#include "support/test_support.hpp"

using namespace wgs;
using namespace wgs::testing;
namespace fs = std::filesystem;

TEST_CASE("generate_cameras geometry") {
    const Vec3 look_at{0, 0.5, 0};
    const auto cams = generate_cameras(4, 4.0, 2.0, look_at, 100, 100, 64, 64);
    REQUIRE(cams.size() == 4);

    // Azimuths 0/90/180/270: positions on the circle.
    const Vec3 p0 = cams[0].position_world();
    CHECK(p0.x == doctest::Approx(4.0));
    CHECK(p0.y == doctest::Approx(2.0));
    CHECK(p0.z == doctest::Approx(0.0).epsilon(1e-9));
    const Vec3 p1 = cams[1].position_world();
    CHECK(p1.x == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(p1.z == doctest::Approx(4.0));

    // Forward axis passes through look_at: the ray from the camera center
    // along +z (camera space) hits look_at exactly.
    for (const Camera& cam : cams) {
        const Vec3 pos = cam.position_world();
        const Vec3 fwd = cam.rotation_wc.row(2);
        const Vec3 to_target = look_at - pos;
        const double off_axis = to_target.cross(fwd).norm() / to_target.norm();
        CHECK(off_axis < 1e-9);
        // rotation orthonormal
        const Mat3 rrt = cam.rotation_wc * cam.rotation_wc.transposed();
        CHECK(rrt.max_abs_diff(Mat3::identity()) < 1e-12);
    }

    const auto many = generate_cameras(24, 3.5, 2.0, look_at, 100, 100, 64, 64);
    for (size_t i = 0; i < many.size(); ++i)
        for (size_t j = i + 1; j < many.size(); ++j)
            CHECK((many[i].position_world() - many[j].position_world()).norm() > 1e-6);

    CHECK_THROWS_AS(generate_cameras(4, 0.0, 2.0, look_at, 100, 100, 64, 64), Error);
    CHECK_THROWS_AS(generate_cameras(2, 4.0, 2.0, look_at, 100, 100, 64, 64), Error);
}

TEST_CASE("render_clean_view") {
    SUBCASE("empty scene is uniform background") {
        SceneSpec scene;
        scene.background = {0.1, 0.2, 0.3};
        const auto cams = generate_cameras(3, 3.0, 1.5, {0, 0, 0}, 80, 80, 32, 32);
        const ImageBuffer img = render_clean_view(scene, cams[0]);
        for (const auto& p : img.pixels) {
            CHECK(p.x == 0.1);
            CHECK(p.y == 0.2);
            CHECK(p.z == 0.3);
        }
    }

    SUBCASE("checker plane facing the camera has the projected period") {
        // Plane at z=2 facing a camera at the origin looking down +z; world
        // period 0.5 at depth 2 with fx=64 projects to 64*0.5/2 = 16 px.
        SceneSpec scene;
        PlanePrimitive plane;
        plane.center = {0, 0, 2};
        plane.u_axis = {1, 0, 0};
        plane.v_axis = {0, 1, 0};
        plane.half_u = plane.half_v = 10;
        plane.texture = {TextureKind::Checker, {1, 0, 0}, {0, 0, 1}, 0.5};
        scene.planes.push_back(plane);

        Camera cam;
        cam.fx = cam.fy = 64;
        cam.cx = cam.cy = 32;
        cam.width = cam.height = 64;

        const ImageBuffer img = render_clean_view(scene, cam);
        // Walking 16 px along x must land in the other checker cell; 32 px
        // returns to the same cell.
        const Vec3 a = img.at(4, 4), b = img.at(20, 4), c = img.at(36, 4);
        CHECK(a.x != b.x);
        CHECK(a.x == c.x);
    }

    SUBCASE("deterministic") {
        const SceneSpec scene = default_scene();
        const auto cams = generate_cameras(3, 3.5, 2.2, {0, 0.45, 0}, 110, 110, 64, 64);
        CHECK(images_bitwise_equal(render_clean_view(scene, cams[1]),
                                   render_clean_view(scene, cams[1])));
    }

    SUBCASE("default scene covers the full frame from orbit cameras") {
        // The enclosing dome guarantees every ray hits textured content.
        const SceneSpec scene = default_scene();
        const auto cams = generate_cameras(8, 3.5, 2.2, {0, 0.45, 0}, 110, 110, 96, 96);
        for (const auto& cam : cams) {
            const ImageBuffer img = render_clean_view(scene, cam);
            size_t background_pixels = 0;
            for (const auto& p : img.pixels)
                if (p.x == scene.background.x && p.y == scene.background.y &&
                    p.z == scene.background.z)
                    ++background_pixels;
            // dome texture includes the background color; just require that
            // plenty of pixels differ from it (texture variation everywhere)
            CHECK(background_pixels < img.pixel_count());
        }
    }
}

TEST_CASE("sample_points") {
    const SceneSpec scene = default_scene();
    const PointCloud a = sample_points(scene, 100, 5);
    CHECK(a.points.size() == 100);

    // Points lie on a primitive surface: distance to the nearest surface is ~0.
    for (const auto& p : a.points) {
        double best = 1e30;
        for (const auto& plane : scene.planes) {
            const Vec3 d = p.position - plane.center;
            const double du = d.dot(plane.u_axis), dv = d.dot(plane.v_axis);
            if (std::abs(du) <= plane.half_u + 1e-9 && std::abs(dv) <= plane.half_v + 1e-9) {
                const Vec3 n = plane.u_axis.cross(plane.v_axis).normalized();
                best = std::min(best, std::abs(d.dot(n)));
            }
        }
        for (const auto& s : scene.spheres)
            best = std::min(best, std::abs((p.position - s.center).norm() - s.radius));
        CHECK(best < 1e-9);
    }

    const PointCloud b = sample_points(scene, 100, 5);
    REQUIRE(b.points.size() == a.points.size());
    for (size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i].position.x == b.points[i].position.x);
        CHECK(a.points[i].color.x == b.points[i].color.x);
    }

    const PointCloud c = sample_points(scene, 100, 6);
    bool any_different = false;
    for (size_t i = 0; i < a.points.size(); ++i)
        if (a.points[i].position.x != c.points[i].position.x) any_different = true;
    CHECK(any_different);
}

TEST_CASE("add_snow") {
    const ImageBuffer gray(64, 64, {0.3, 0.3, 0.3});

    SUBCASE("zero density is identity") {
        WeatherParams p = WeatherParams::snow_default();
        p.density = 0;
        const auto [img, mask] = add_snow(gray, p, 1);
        CHECK(images_bitwise_equal(img, gray));
        CHECK(mask.ones() == 0);
    }

    SUBCASE("kind mismatch") {
        CHECK_THROWS_AS(add_snow(gray, WeatherParams::rain_default(), 1), Error);
    }

    SUBCASE("single blob peaks at its center") {
        // density chosen so exactly one blob lands on a 64x64 image
        WeatherParams p = WeatherParams::snow_default();
        p.density = 1.0 / (64.0 * 64.0 / 1e4);
        const auto [img, mask] = add_snow(gray, p, 2);
        CHECK(mask.ones() > 0);
        size_t brightest = 0;
        double best = -1;
        for (size_t i = 0; i < img.pixel_count(); ++i) {
            const double lum = img.pixels[i].x + img.pixels[i].y + img.pixels[i].z;
            if (lum > best) {
                best = lum;
                brightest = i;
            }
        }
        // reconstruct the blob center the same way the op drew it
        Rng rng(2);
        const double cx = rng.uniform(0.0, 64), cy = rng.uniform(0.0, 64);
        const int bx = static_cast<int>(brightest % 64), by = static_cast<int>(brightest / 64);
        CHECK(std::abs(bx + 0.5 - cx) <= 1.0);
        CHECK(std::abs(by + 0.5 - cy) <= 1.0);
    }

    SUBCASE("psnr decreases monotonically with density") {
        const SceneSpec scene = default_scene();
        const auto cams = generate_cameras(3, 3.5, 2.2, {0, 0.45, 0}, 110, 110, 128, 128);
        const ImageBuffer clean = render_clean_view(scene, cams[0]);
        double prev = 1e9;
        for (const double density : {5.0, 10.0, 20.0}) {
            WeatherParams p = WeatherParams::snow_default();
            p.density = density;
            const auto [img, mask] = add_snow(clean, p, 42);
            const double val = psnr(img, clean);
            CHECK(val < prev);
            prev = val;
        }
    }

    SUBCASE("same seed is bit identical") {
        const auto [a, ma] = add_snow(gray, WeatherParams::snow_default(), 3);
        const auto [b, mb] = add_snow(gray, WeatherParams::snow_default(), 3);
        CHECK(images_bitwise_equal(a, b));
        CHECK(ma.values == mb.values);
    }
}

TEST_CASE("add_rain") {
    const ImageBuffer gray(96, 96, {0.3, 0.3, 0.3});

    SUBCASE("zero density is identity") {
        WeatherParams p = WeatherParams::rain_default();
        p.density = 0;
        const auto [img, mask] = add_rain(gray, p, 1);
        CHECK(images_bitwise_equal(img, gray));
        CHECK(mask.ones() == 0);
    }

    SUBCASE("per-streak mask orientation follows streak_angle") {
        WeatherParams p = WeatherParams::rain_default();
        p.streak_angle_deg = 10.0;
        const auto [img, mask] = add_rain(gray, p, 7);
        REQUIRE(mask.ones() > 50);

        // flood fill the mask into components; each isolated streak's
        // principal axis must sit near the configured angle
        const int w = mask.width, h = mask.height;
        std::vector<uint8_t> seen(mask.values.size(), 0);
        std::vector<double> deviations;
        for (size_t start = 0; start < mask.values.size(); ++start) {
            if (!mask.values[start] || seen[start]) continue;
            std::vector<uint32_t> stack = {static_cast<uint32_t>(start)}, comp;
            seen[start] = 1;
            while (!stack.empty()) {
                const uint32_t q = stack.back();
                stack.pop_back();
                comp.push_back(q);
                const int qx = static_cast<int>(q % w), qy = static_cast<int>(q / w);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int xx = qx + dx, yy = qy + dy;
                        if (xx < 0 || xx >= w || yy < 0 || yy >= h) continue;
                        const uint32_t r = static_cast<uint32_t>(yy) * w + xx;
                        if (mask.values[r] && !seen[r]) {
                            seen[r] = 1;
                            stack.push_back(r);
                        }
                    }
            }
            if (comp.size() < 15) continue;
            double mx = 0, my = 0;
            for (uint32_t q : comp) {
                mx += q % w;
                my += q / w;
            }
            mx /= comp.size();
            my /= comp.size();
            double cxx = 0, cxy = 0, cyy = 0;
            for (uint32_t q : comp) {
                const double dx = static_cast<double>(q % w) - mx;
                const double dy = static_cast<double>(q / w) - my;
                cxx += dx * dx;
                cxy += dx * dy;
                cyy += dy * dy;
            }
            const double angle = 0.5 * std::atan2(2 * cxy, cxx - cyy);
            double from_vertical = 90.0 - angle * 180.0 / kPi;
            while (from_vertical > 90.0) from_vertical -= 180.0;
            while (from_vertical < -90.0) from_vertical += 180.0;
            deviations.push_back(std::abs(from_vertical - 10.0));
        }
        REQUIRE(deviations.size() >= 3);
        std::sort(deviations.begin(), deviations.end());
        // median streak within 5 degrees (overlapping streaks can merge
        // into blobs with mixed orientations)
        CHECK(deviations[deviations.size() / 2] < 5.0);
    }

    SUBCASE("same seed is bit identical") {
        const auto [a, ma] = add_rain(gray, WeatherParams::rain_default(), 3);
        const auto [b, mb] = add_rain(gray, WeatherParams::rain_default(), 3);
        CHECK(images_bitwise_equal(a, b));
        CHECK(ma.values == mb.values);
    }
}

TEST_CASE("add_lens_droplets") {
    std::vector<ImageBuffer> views;
    for (int i = 0; i < 4; ++i) views.push_back(random_target(100 + i, 64, 64));

    SUBCASE("zero droplets is identity") {
        WeatherParams p = WeatherParams::lens_default();
        p.droplet_count = 0;
        const auto [out, mask] = add_lens_droplets(views, p, 1);
        CHECK(mask.ones() == 0);
        for (size_t i = 0; i < views.size(); ++i) CHECK(images_bitwise_equal(out[i], views[i]));
    }

    SUBCASE("pixels outside the mask are untouched in every view") {
        const auto [out, mask] = add_lens_droplets(views, WeatherParams::lens_default(), 2);
        CHECK(mask.ones() > 0);
        for (size_t v = 0; v < views.size(); ++v)
            for (size_t i = 0; i < mask.values.size(); ++i)
                if (!mask.values[i]) {
                    CHECK(out[v].pixels[i].x == views[v].pixels[i].x);
                    CHECK(out[v].pixels[i].y == views[v].pixels[i].y);
                    CHECK(out[v].pixels[i].z == views[v].pixels[i].z);
                }
    }

    SUBCASE("mask area approximates the analytic disk area") {
        // single large droplet, guaranteed non-overlapping
        WeatherParams p = WeatherParams::lens_default();
        p.droplet_count = 1;
        p.droplet_radius_lo = p.droplet_radius_hi = 12.0;
        std::vector<ImageBuffer> big = {random_target(1, 128, 128), random_target(2, 128, 128),
                                        random_target(3, 128, 128)};
        // search for a seed whose droplet is fully inside the frame
        for (uint64_t seed = 0;; ++seed) {
            Rng probe(seed);
            const double cx = probe.uniform(0.0, 128), cy = probe.uniform(0.0, 128);
            if (cx < 13 || cx > 115 || cy < 13 || cy > 115) continue;
            const auto [out, mask] = add_lens_droplets(big, p, seed);
            const double area = static_cast<double>(mask.ones());
            CHECK(area == doctest::Approx(kPi * 12.0 * 12.0).epsilon(0.10));
            break;
        }
    }

    SUBCASE("dimension mismatch rejected") {
        std::vector<ImageBuffer> bad = views;
        bad.push_back(ImageBuffer(32, 32));
        CHECK_THROWS_AS(add_lens_droplets(bad, WeatherParams::lens_default(), 1), Error);
    }
}

TEST_CASE("make_dataset") {
    TempDir dir;
    const SceneSpec scene = default_scene();
    const auto cams = generate_cameras(24, 3.5, 2.2, {0, 0.45, 0}, 110, 110, 64, 64);
    const WeatherRecipe recipe = {WeatherParams::snow_default(), WeatherParams::lens_default()};
    SynthConfig cfg;
    cfg.point_count = 500;

    const DatasetManifest m = make_dataset(scene, cams, recipe, dir.file("ds"), 11, cfg);

    SUBCASE("split: every 8th view is test") {
        CHECK(m.views.size() == 24);
        CHECK(m.count_split(Split::Test) == 3);
        CHECK(m.count_split(Split::Train) == 21);
        CHECK(m.views[0].split == Split::Test);
        CHECK(m.views[8].split == Split::Test);
        CHECK(m.views[16].split == Split::Test);
    }

    SUBCASE("mask soundness: corrupted-vs-clean differences are inside the masks") {
        for (const auto& view : m.views) {
            const ImageBuffer clean = load_image(view.clean_path);
            const ImageBuffer corrupted = load_image(view.corrupted_path);
            const MaskImage particles = load_mask(*view.gt_particle_mask_path);
            const MaskImage occlusion = load_mask(*view.gt_occlusion_mask_path);
            for (size_t i = 0; i < clean.pixel_count(); ++i) {
                const bool differs = clean.pixels[i].x != corrupted.pixels[i].x ||
                                     clean.pixels[i].y != corrupted.pixels[i].y ||
                                     clean.pixels[i].z != corrupted.pixels[i].z;
                if (differs) {
                    const bool masked = particles.values[i] || occlusion.values[i];
                    CHECK(masked);
                }
            }
        }
    }

    SUBCASE("occlusion masks identical across views") {
        const MaskImage first = load_mask(*m.views[0].gt_occlusion_mask_path);
        for (const auto& view : m.views)
            CHECK(load_mask(*view.gt_occlusion_mask_path).values == first.values);
    }

    SUBCASE("rerun is byte identical") {
        TempDir dir2;
        (void)make_dataset(scene, cams, recipe, dir2.file("ds"), 11, cfg);
        for (const char* rel :
             {"manifest.json", "points.txt", "clean/view_000.ppm", "corrupted/view_003.ppm",
              "masks_particles/view_005.pgm", "masks_occlusion/view_001.pgm"}) {
            std::ifstream a(dir.file("ds") + "/" + rel, std::ios::binary);
            std::ifstream b(dir2.file("ds") + "/" + rel, std::ios::binary);
            REQUIRE(a.good());
            REQUIRE(b.good());
            const std::string sa((std::istreambuf_iterator<char>(a)),
                                 std::istreambuf_iterator<char>());
            const std::string sb((std::istreambuf_iterator<char>(b)),
                                 std::istreambuf_iterator<char>());
            CHECK(sa == sb);
        }
    }

    SUBCASE("no weather means corrupted equals clean bitwise") {
        TempDir dir3;
        const DatasetManifest m2 =
            make_dataset(scene, cams, WeatherRecipe{}, dir3.file("ds"), 11, cfg);
        for (const auto& view : m2.views) {
            std::ifstream a(view.clean_path, std::ios::binary);
            std::ifstream b(view.corrupted_path, std::ios::binary);
            const std::string sa((std::istreambuf_iterator<char>(a)),
                                 std::istreambuf_iterator<char>());
            const std::string sb((std::istreambuf_iterator<char>(b)),
                                 std::istreambuf_iterator<char>());
            CHECK(sa == sb);
        }
    }
}
