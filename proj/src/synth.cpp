#include "weathergs/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "weathergs/error.hpp"
#include "weathergs/image_io.hpp"
#include "weathergs/rng.hpp"
#include "weathergs/threading.hpp"

namespace fs = std::filesystem;

namespace wgs {

void SceneSpec::validate() const {
    require(!empty(), ErrorCode::Validation, "scene: needs at least one primitive");
    for (const auto& p : planes) {
        require(p.half_u > 0 && p.half_v > 0, ErrorCode::Validation,
                "scene: plane extents must be positive");
        require(p.texture.period > 0, ErrorCode::Validation, "scene: texture period must be positive");
    }
    for (const auto& s : spheres) {
        require(s.radius > 0, ErrorCode::Validation, "scene: sphere radius must be positive");
        require(s.texture.period > 0, ErrorCode::Validation, "scene: texture period must be positive");
    }
}

namespace {

Vec3 texture_color(const Texture& t, double u, double v) {
    switch (t.kind) {
        case TextureKind::Solid:
            return t.color_a;
        case TextureKind::Checker: {
            const long long iu = static_cast<long long>(std::floor(u / t.period));
            const long long iv = static_cast<long long>(std::floor(v / t.period));
            return ((iu + iv) & 1) ? t.color_b : t.color_a;
        }
        case TextureKind::Stripes: {
            const long long iu = static_cast<long long>(std::floor(u / t.period));
            return (iu & 1) ? t.color_b : t.color_a;
        }
    }
    return t.color_a;
}

Vec3 plane_color(const PlanePrimitive& p, const Vec3& hit) {
    const Vec3 d = hit - p.center;
    return texture_color(p.texture, d.dot(p.u_axis), d.dot(p.v_axis));
}

Vec3 sphere_color(const SpherePrimitive& s, const Vec3& hit) {
    const Vec3 d = (hit - s.center).normalized();
    const double theta = std::atan2(d.z, d.x);           // longitude
    const double phi = std::acos(std::clamp(d.y, -1.0, 1.0));  // latitude
    return texture_color(s.texture, theta, phi);
}

constexpr double kRayEps = 1e-9;

bool hit_plane(const PlanePrimitive& p, const Vec3& origin, const Vec3& dir, double& t_out) {
    const Vec3 n = p.u_axis.cross(p.v_axis).normalized();
    const double denom = dir.dot(n);
    if (std::abs(denom) < 1e-12) return false;
    const double t = (p.center - origin).dot(n) / denom;
    if (t <= kRayEps) return false;
    const Vec3 hit = origin + dir * t - p.center;
    if (std::abs(hit.dot(p.u_axis)) > p.half_u || std::abs(hit.dot(p.v_axis)) > p.half_v)
        return false;
    t_out = t;
    return true;
}

bool hit_sphere(const SpherePrimitive& s, const Vec3& origin, const Vec3& dir, double& t_out) {
    const Vec3 oc = origin - s.center;
    const double b = oc.dot(dir);
    const double c = oc.dot(oc) - s.radius * s.radius;
    const double disc = b * b - c;
    if (disc < 0.0) return false;
    const double sq = std::sqrt(disc);
    const double t1 = -b - sq;
    if (t1 > kRayEps) {
        t_out = t1;
        return true;
    }
    const double t2 = -b + sq;  // inside the sphere
    if (t2 > kRayEps) {
        t_out = t2;
        return true;
    }
    return false;
}

}  // namespace

SceneSpec default_scene() {
    // Palette with luminance pinned to [0.30, 0.39] so texture edges never
    // look like bright weather particles to the preprocess stage.
    const Vec3 rust{0.62, 0.28, 0.24};
    const Vec3 teal{0.18, 0.36, 0.48};
    const Vec3 violet{0.45, 0.32, 0.52};
    const Vec3 green{0.14, 0.42, 0.26};
    const Vec3 amber{0.50, 0.36, 0.16};
    const Vec3 blue{0.22, 0.30, 0.58};
    const Vec3 cyan{0.16, 0.38, 0.50};
    const Vec3 coral{0.52, 0.28, 0.26};

    SceneSpec scene;
    scene.background = {0.30, 0.34, 0.40};

    PlanePrimitive ground;
    ground.name = "ground";
    ground.center = {0, 0, 0};
    ground.u_axis = {1, 0, 0};
    ground.v_axis = {0, 0, 1};
    ground.half_u = 3.0;
    ground.half_v = 3.0;
    ground.texture = {TextureKind::Checker, rust, teal, 0.75};
    scene.planes.push_back(ground);

    SpherePrimitive a;
    a.name = "sphere_checker";
    a.center = {-0.9, 0.45, 0.3};
    a.radius = 0.45;
    a.texture = {TextureKind::Checker, violet, green, 0.7};
    scene.spheres.push_back(a);

    SpherePrimitive b;
    b.name = "sphere_stripes";
    b.center = {0.8, 0.5, -0.4};
    b.radius = 0.5;
    b.texture = {TextureKind::Stripes, amber, blue, 0.6};
    scene.spheres.push_back(b);

    SpherePrimitive c;
    c.name = "sphere_small";
    c.center = {0.1, 1.1, 0.65};
    c.radius = 0.3;
    c.texture = {TextureKind::Checker, teal, coral, 0.8};
    scene.spheres.push_back(c);

    SpherePrimitive dome;
    dome.name = "dome";
    dome.center = {0, 0.5, 0};
    dome.radius = 6.0;
    dome.texture = {TextureKind::Checker, cyan, coral, 0.28};
    scene.spheres.push_back(dome);

    return scene;
}

std::vector<Camera> generate_cameras(int count, double orbit_radius, double height,
                                     const Vec3& look_at, double fx, double fy, int width,
                                     int height_px) {
    require(count >= 3, ErrorCode::Validation, "generate_cameras: count must be >= 3");
    require(orbit_radius > 0, ErrorCode::Validation, "generate_cameras: radius must be positive");
    require(width >= 1 && height_px >= 1 && fx > 0 && fy > 0, ErrorCode::Validation,
            "generate_cameras: bad intrinsics");

    std::vector<Camera> cameras;
    cameras.reserve(count);
    const Vec3 up{0, 1, 0};
    for (int i = 0; i < count; ++i) {
        const double azimuth = 2.0 * kPi * i / count;
        const Vec3 pos{look_at.x + orbit_radius * std::cos(azimuth), height,
                       look_at.z + orbit_radius * std::sin(azimuth)};
        const Vec3 forward = (look_at - pos).normalized();
        const Vec3 right = forward.cross(up).normalized();
        const Vec3 down = forward.cross(right);

        Camera cam;
        cam.fx = fx;
        cam.fy = fy;
        cam.cx = width / 2.0;
        cam.cy = height_px / 2.0;
        cam.width = width;
        cam.height = height_px;
        for (int k = 0; k < 3; ++k) {
            cam.rotation_wc.m[0][k] = right[k];
            cam.rotation_wc.m[1][k] = down[k];
            cam.rotation_wc.m[2][k] = forward[k];
        }
        cam.translation_wc = -(cam.rotation_wc * pos);
        cameras.push_back(cam);
    }
    return cameras;
}

ImageBuffer render_clean_view(const SceneSpec& scene, const Camera& camera) {
    ImageBuffer img(camera.width, camera.height, scene.background);
    if (scene.empty()) return img;
    const Vec3 origin = camera.position_world();

    parallel_for(static_cast<size_t>(camera.height), 8, [&](size_t yb, size_t ye) {
        for (size_t y = yb; y < ye; ++y) {
            for (int x = 0; x < camera.width; ++x) {
                const Vec3 dir = camera.ray_direction(x, static_cast<int>(y));
                double best_t = 1e30;
                Vec3 color = scene.background;
                for (const auto& p : scene.planes) {
                    double t;
                    if (hit_plane(p, origin, dir, t) && t < best_t) {
                        best_t = t;
                        color = plane_color(p, origin + dir * t);
                    }
                }
                for (const auto& s : scene.spheres) {
                    double t;
                    if (hit_sphere(s, origin, dir, t) && t < best_t) {
                        best_t = t;
                        color = sphere_color(s, origin + dir * t);
                    }
                }
                img.at(x, static_cast<int>(y)) = color;
            }
        }
    });
    return img;
}

PointCloud sample_points(const SceneSpec& scene, size_t count, uint64_t seed) {
    scene.validate();
    require(count >= 1, ErrorCode::Validation, "sample_points: count must be >= 1");

    struct Surface {
        double area;
        bool is_plane;
        size_t index;
    };
    std::vector<Surface> surfaces;
    double total_area = 0.0;
    for (size_t i = 0; i < scene.planes.size(); ++i) {
        const double area = 4.0 * scene.planes[i].half_u * scene.planes[i].half_v;
        surfaces.push_back({area, true, i});
        total_area += area;
    }
    for (size_t i = 0; i < scene.spheres.size(); ++i) {
        const double area = 4.0 * kPi * scene.spheres[i].radius * scene.spheres[i].radius;
        surfaces.push_back({area, false, i});
        total_area += area;
    }

    Rng rng(seed);
    PointCloud cloud;
    cloud.points.reserve(count);
    for (size_t n = 0; n < count; ++n) {
        double pick = rng.uniform() * total_area;
        size_t si = 0;
        while (si + 1 < surfaces.size() && pick > surfaces[si].area) {
            pick -= surfaces[si].area;
            ++si;
        }
        PointSample ps;
        if (surfaces[si].is_plane) {
            const auto& p = scene.planes[surfaces[si].index];
            const double u = rng.uniform(-p.half_u, p.half_u);
            const double v = rng.uniform(-p.half_v, p.half_v);
            ps.position = p.center + p.u_axis * u + p.v_axis * v;
            ps.color = texture_color(p.texture, u, v);
        } else {
            const auto& s = scene.spheres[surfaces[si].index];
            // Uniform direction on the sphere.
            const double z = rng.uniform(-1.0, 1.0);
            const double a = rng.uniform(0.0, 2.0 * kPi);
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const Vec3 d{r * std::cos(a), z, r * std::sin(a)};
            ps.position = s.center + d * s.radius;
            ps.color = sphere_color(s, ps.position);
        }
        cloud.points.push_back(ps);
    }
    return cloud;
}

WeatherParams WeatherParams::snow_default() {
    WeatherParams p;
    p.kind = Kind::Snow;
    p.density = 15.0;
    p.size_lo = 0.8;
    p.size_hi = 2.0;
    p.brightness = 0.9;
    return p;
}

WeatherParams WeatherParams::rain_default() {
    WeatherParams p;
    p.kind = Kind::Rain;
    p.density = 15.0;
    p.size_lo = 10.0;
    p.size_hi = 22.0;
    p.brightness = 0.9;
    p.streak_angle_deg = 12.0;
    return p;
}

WeatherParams WeatherParams::lens_default() {
    WeatherParams p;
    p.kind = Kind::LensDroplets;
    p.droplet_count = 6;
    p.droplet_radius_lo = 8.0;
    p.droplet_radius_hi = 16.0;
    p.attenuation = 0.6;
    p.blur_sigma = 4.0;
    return p;
}

void WeatherParams::validate() const {
    require(density >= 0.0, ErrorCode::Validation, "weather: density must be >= 0");
    require(size_lo >= 0.0 && size_hi >= size_lo, ErrorCode::Validation,
            "weather: size range must be nonempty and nonnegative");
    require(brightness >= 0.0 && brightness <= 1.0, ErrorCode::Validation,
            "weather: brightness must be in [0,1]");
    require(droplet_count >= 0, ErrorCode::Validation, "weather: droplet_count must be >= 0");
    require(droplet_radius_lo >= 0.0 && droplet_radius_hi >= droplet_radius_lo,
            ErrorCode::Validation, "weather: droplet radius range must be nonempty");
    require(attenuation >= 0.0 && attenuation <= 1.0, ErrorCode::Validation,
            "weather: attenuation must be in [0,1]");
    require(blur_sigma >= 0.0, ErrorCode::Validation, "weather: blur_sigma must be >= 0");
}

namespace {

constexpr double kMaskAlphaThresh = 0.1;

// Artifact alpha is accumulated as 1 - prod(1 - a_i); pixels at or below the
// mask threshold stay bit-identical to the input, which keeps the mask
// soundness invariant exact.
std::pair<ImageBuffer, MaskImage> blend_artifacts(const ImageBuffer& image,
                                                  const std::vector<double>& transmission,
                                                  const Vec3& artifact_color) {
    ImageBuffer out = image;
    MaskImage mask(image.width, image.height, 0);
    for (size_t i = 0; i < image.pixel_count(); ++i) {
        const double alpha = 1.0 - transmission[i];
        if (alpha > kMaskAlphaThresh) {
            mask.values[i] = 1;
            const Vec3& in = image.pixels[i];
            out.pixels[i] = in + (artifact_color - in) * alpha;
        }
    }
    return {std::move(out), std::move(mask)};
}

}  // namespace

std::pair<ImageBuffer, MaskImage> add_snow(const ImageBuffer& image,
                                           const WeatherParams& params, uint64_t seed) {
    require(params.kind == WeatherParams::Kind::Snow, ErrorCode::Validation,
            "add_snow: params.kind must be snow");
    params.validate();

    const int w = image.width, h = image.height;
    std::vector<double> trans(image.pixel_count(), 1.0);
    const int n_blobs =
        static_cast<int>(std::lround(params.density * (static_cast<double>(w) * h) / 1e4));

    Rng rng(seed);
    for (int i = 0; i < n_blobs; ++i) {
        const double cx = rng.uniform(0.0, w);
        const double cy = rng.uniform(0.0, h);
        const double sigma = rng.uniform(params.size_lo, params.size_hi);
        const int x0 = std::max(0, static_cast<int>(std::floor(cx - 4 * sigma)));
        const int x1 = std::min(w - 1, static_cast<int>(std::ceil(cx + 4 * sigma)));
        const int y0 = std::max(0, static_cast<int>(std::floor(cy - 4 * sigma)));
        const int y1 = std::min(h - 1, static_cast<int>(std::ceil(cy + 4 * sigma)));
        const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
                const double a = params.brightness * std::exp(-(dx * dx + dy * dy) * inv2s2);
                trans[static_cast<size_t>(y) * w + x] *= 1.0 - a;
            }
        }
    }
    return blend_artifacts(image, trans, {1.0, 1.0, 1.0});
}

std::pair<ImageBuffer, MaskImage> add_rain(const ImageBuffer& image,
                                           const WeatherParams& params, uint64_t seed) {
    require(params.kind == WeatherParams::Kind::Rain, ErrorCode::Validation,
            "add_rain: params.kind must be rain");
    params.validate();

    const int w = image.width, h = image.height;
    std::vector<double> trans(image.pixel_count(), 1.0);
    const int n_streaks =
        static_cast<int>(std::lround(params.density * (static_cast<double>(w) * h) / 1e4));

    Rng rng(seed);
    for (int i = 0; i < n_streaks; ++i) {
        const double cx = rng.uniform(0.0, w);
        const double cy = rng.uniform(0.0, h);
        const double angle = deg_to_rad(params.streak_angle_deg + rng.uniform(-3.0, 3.0));
        const double len = rng.uniform(params.size_lo, params.size_hi);
        const double width_px = rng.uniform(1.0, 2.0);
        // Direction measured from the vertical (image y axis).
        const Vec2 dir{std::sin(angle), std::cos(angle)};
        const double half = len / 2.0;
        const double prof = 1.0 / (2.0 * (width_px / 2.0) * (width_px / 2.0));

        const double margin = 3.0 * width_px + 2.0;
        const int x0 = std::max(0, static_cast<int>(std::floor(cx - half * std::abs(dir.x) - margin)));
        const int x1 = std::min(w - 1, static_cast<int>(std::ceil(cx + half * std::abs(dir.x) + margin)));
        const int y0 = std::max(0, static_cast<int>(std::floor(cy - half * dir.y - margin)));
        const int y1 = std::min(h - 1, static_cast<int>(std::ceil(cy + half * dir.y + margin)));

        auto capsule_alpha = [&](double px, double py) {
            const double rx = px - cx, ry = py - cy;
            double along = rx * dir.x + ry * dir.y;
            along = std::clamp(along, -half, half);
            const double qx = rx - along * dir.x, qy = ry - along * dir.y;
            const double d2 = qx * qx + qy * qy;
            return params.brightness * std::exp(-d2 * prof);
        };
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double px = x + 0.5, py = y + 0.5;
                // Box blur along the streak direction: 3 taps, 1 px apart.
                const double a = (capsule_alpha(px - dir.x, py - dir.y) + capsule_alpha(px, py) +
                                  capsule_alpha(px + dir.x, py + dir.y)) / 3.0;
                trans[static_cast<size_t>(y) * w + x] *= 1.0 - a;
            }
        }
    }
    return blend_artifacts(image, trans, {0.92, 0.94, 1.0});
}

ImageBuffer gaussian_blur(const ImageBuffer& image, double sigma) {
    if (sigma <= 0.0) return image;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;

    const int w = image.width, h = image.height;
    auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
    ImageBuffer tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Vec3 acc{0, 0, 0};
            for (int i = -radius; i <= radius; ++i)
                acc += image.at(clampi(x + i, 0, w - 1), y) * k[i + radius];
            tmp.at(x, y) = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Vec3 acc{0, 0, 0};
            for (int i = -radius; i <= radius; ++i)
                acc += tmp.at(x, clampi(y + i, 0, h - 1)) * k[i + radius];
            out.at(x, y) = acc;
        }
    return out;
}

std::pair<std::vector<ImageBuffer>, MaskImage> add_lens_droplets(
    const std::vector<ImageBuffer>& views, const WeatherParams& params, uint64_t seed) {
    require(params.kind == WeatherParams::Kind::LensDroplets, ErrorCode::Validation,
            "add_lens_droplets: params.kind must be lens_droplets");
    params.validate();
    require(!views.empty(), ErrorCode::Validation, "add_lens_droplets: no views");
    const int w = views[0].width, h = views[0].height;
    for (const auto& v : views)
        require(v.width == w && v.height == h, ErrorCode::DimensionMismatch,
                "add_lens_droplets: views must share dimensions");

    // Droplets are fixed in image coordinates: sampled once, applied to all.
    Rng rng(seed);
    struct Disk { double cx, cy, r; };
    std::vector<Disk> disks;
    for (int i = 0; i < params.droplet_count; ++i) {
        Disk d;
        d.cx = rng.uniform(0.0, w);
        d.cy = rng.uniform(0.0, h);
        d.r = rng.uniform(params.droplet_radius_lo, params.droplet_radius_hi);
        disks.push_back(d);
    }

    MaskImage mask(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            for (const Disk& d : disks) {
                const double dx = px - d.cx, dy = py - d.cy;
                if (dx * dx + dy * dy <= d.r * d.r) {
                    mask.at(x, y) = 1;
                    break;
                }
            }
        }

    const Vec3 gray{0.5, 0.5, 0.5};
    std::vector<ImageBuffer> out(views.size());
    parallel_for(views.size(), 1, [&](size_t b, size_t e) {
        for (size_t i = b; i < e; ++i) {
            const ImageBuffer blurred = gaussian_blur(views[i], params.blur_sigma);
            out[i] = views[i];
            for (size_t p = 0; p < out[i].pixel_count(); ++p) {
                if (!mask.values[p]) continue;
                const Vec3 base = blurred.pixels[p];
                out[i].pixels[p] = base + (gray - base) * params.attenuation;
            }
        }
    });
    return {std::move(out), std::move(mask)};
}

DatasetManifest make_dataset(const SceneSpec& scene, const std::vector<Camera>& cameras,
                             const WeatherRecipe& recipe, const std::string& out_dir,
                             uint64_t seed, const SynthConfig& config) {
    scene.validate();
    require(cameras.size() >= 3, ErrorCode::Validation, "make_dataset: needs >= 3 cameras");
    for (const auto& p : recipe) p.validate();

    fs::create_directories(fs::path(out_dir) / "clean");
    fs::create_directories(fs::path(out_dir) / "corrupted");
    fs::create_directories(fs::path(out_dir) / "masks_particles");
    fs::create_directories(fs::path(out_dir) / "masks_occlusion");

    const size_t n = cameras.size();
    std::vector<ImageBuffer> clean(n), corrupted(n);
    std::vector<MaskImage> particle_masks(n);

    parallel_for(n, 1, [&](size_t b, size_t e) {
        for (size_t i = b; i < e; ++i) {
            clean[i] = render_clean_view(scene, cameras[i]);
            corrupted[i] = clean[i];
            particle_masks[i] = MaskImage(clean[i].width, clean[i].height, 0);
            for (size_t r = 0; r < recipe.size(); ++r) {
                const WeatherParams& wp = recipe[r];
                if (wp.kind == WeatherParams::Kind::LensDroplets) continue;
                const uint64_t view_seed = derive_seed(seed, (r << 24) ^ (0x9A00ULL + i));
                auto [img, m] = wp.kind == WeatherParams::Kind::Snow
                                    ? add_snow(corrupted[i], wp, view_seed)
                                    : add_rain(corrupted[i], wp, view_seed);
                corrupted[i] = std::move(img);
                for (size_t px = 0; px < m.values.size(); ++px)
                    particle_masks[i].values[px] |= m.values[px];
            }
        }
    });

    MaskImage occlusion(clean[0].width, clean[0].height, 0);
    for (size_t r = 0; r < recipe.size(); ++r) {
        const WeatherParams& wp = recipe[r];
        if (wp.kind != WeatherParams::Kind::LensDroplets) continue;
        auto [views, m] = add_lens_droplets(corrupted, wp, derive_seed(seed, 0xD60ULL + r));
        corrupted = std::move(views);
        for (size_t px = 0; px < m.values.size(); ++px) occlusion.values[px] |= m.values[px];
    }

    const PointCloud points = sample_points(scene, config.point_count, derive_seed(seed, 0x9017ULL));

    DatasetManifest manifest;
    manifest.scene_name = "synthetic";
    manifest.seed = seed;
    manifest.points_path = (fs::path(out_dir) / "points.txt").string();

    {
        std::ofstream out(manifest.points_path, std::ios::binary);
        require(out.good(), ErrorCode::IoFailure, "make_dataset: cannot write points file");
        char line[256];
        for (const auto& p : points.points) {
            std::snprintf(line, sizeof(line), "%.17g %.17g %.17g %.17g %.17g %.17g\n",
                          p.position.x, p.position.y, p.position.z, p.color.x, p.color.y,
                          p.color.z);
            out << line;
        }
    }

    for (size_t i = 0; i < n; ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "view_%03zu", i);
        ViewRecord rec;
        rec.camera = cameras[i];
        rec.split = (i % 8 == 0) ? Split::Test : Split::Train;
        rec.clean_path = (fs::path(out_dir) / "clean" / (std::string(name) + ".ppm")).string();
        rec.corrupted_path =
            (fs::path(out_dir) / "corrupted" / (std::string(name) + ".ppm")).string();
        rec.gt_particle_mask_path =
            (fs::path(out_dir) / "masks_particles" / (std::string(name) + ".pgm")).string();
        rec.gt_occlusion_mask_path =
            (fs::path(out_dir) / "masks_occlusion" / (std::string(name) + ".pgm")).string();
        save_image(rec.clean_path, clean[i]);
        save_image(rec.corrupted_path, corrupted[i]);
        save_mask(*rec.gt_particle_mask_path, particle_masks[i]);
        save_mask(*rec.gt_occlusion_mask_path, occlusion);
        manifest.views.push_back(std::move(rec));
    }

    save_manifest((fs::path(out_dir) / "manifest.json").string(), manifest);
    return manifest;
}

}  // namespace wgs
