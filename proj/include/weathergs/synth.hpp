#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "weathergs/manifest.hpp"
#include "weathergs/scene.hpp"

namespace wgs {

enum class TextureKind { Solid, Checker, Stripes };

/// Deterministic function of surface coordinates. period is in world units
/// for planes and radians for spheres.
struct Texture {
    TextureKind kind = TextureKind::Solid;
    Vec3 color_a{0.5, 0.5, 0.5};
    Vec3 color_b{0.5, 0.5, 0.5};
    double period = 1.0;
};

/// Finite textured rectangle.
struct PlanePrimitive {
    std::string name;
    Vec3 center;
    Vec3 u_axis{1, 0, 0};
    Vec3 v_axis{0, 0, 1};
    double half_u = 1.0, half_v = 1.0;
    Texture texture;
};

/// Sphere; rays hit it from outside or inside, so a large sphere can
/// enclose the scene as a textured backdrop.
struct SpherePrimitive {
    std::string name;
    Vec3 center;
    double radius = 1.0;
    Texture texture;
};

struct SceneSpec {
    std::vector<PlanePrimitive> planes;
    std::vector<SpherePrimitive> spheres;
    Vec3 background{0.30, 0.34, 0.40};

    bool empty() const { return planes.empty() && spheres.empty(); }
    void validate() const;
};

/// The desk-scale test scene: checkered ground, three textured spheres and
/// an enclosing textured dome. Texture luminances stay within a narrow band
/// so weather artifacts are the only high-contrast content.
SceneSpec default_scene();

struct WeatherParams {
    enum class Kind { Snow, Rain, LensDroplets };
    Kind kind = Kind::Snow;

    double density = 15.0;          // artifacts per 10^4 pixels (snow/rain)
    double size_lo = 0.8;           // snow: blob sigma range (px)
    double size_hi = 2.0;           // rain: streak length range (px)
    double brightness = 0.9;        // particle peak alpha
    double streak_angle_deg = 12.0; // rain: degrees from vertical

    int droplet_count = 6;
    double droplet_radius_lo = 8.0;
    double droplet_radius_hi = 16.0;
    double attenuation = 0.6;       // pull toward gray inside droplets
    double blur_sigma = 4.0;

    uint64_t seed = 0;

    static WeatherParams snow_default();
    static WeatherParams rain_default();
    static WeatherParams lens_default();
    void validate() const;
};

using WeatherRecipe = std::vector<WeatherParams>;

/// count cameras evenly spaced on a circle of orbit_radius at world height
/// `height` (y axis), all looking at look_at.
std::vector<Camera> generate_cameras(int count, double orbit_radius, double height,
                                     const Vec3& look_at, double fx, double fy, int width,
                                     int height_px);

/// Analytic ray-traced rendering: nearest primitive intersection, flat
/// texture shading, background elsewhere.
ImageBuffer render_clean_view(const SceneSpec& scene, const Camera& camera);

/// Area-weighted uniform surface samples carrying their texture colors.
PointCloud sample_points(const SceneSpec& scene, size_t count, uint64_t seed);

/// Soft isotropic bright blobs. The artifact alpha layer is applied only
/// where it exceeds 0.1, which makes the returned mask exact: every
/// modified pixel is inside it.
std::pair<ImageBuffer, MaskImage> add_snow(const ImageBuffer& image,
                                           const WeatherParams& params, uint64_t seed);

/// Oriented blurred streaks; same alpha/mask rule as add_snow.
std::pair<ImageBuffer, MaskImage> add_rain(const ImageBuffer& image,
                                           const WeatherParams& params, uint64_t seed);

/// One set of droplet disks sampled once and applied at identical pixel
/// positions in every view (lens adhesion): inside each disk the image is
/// Gaussian-blurred and attenuated toward gray. Returns the shared mask.
std::pair<std::vector<ImageBuffer>, MaskImage> add_lens_droplets(
    const std::vector<ImageBuffer>& views, const WeatherParams& params, uint64_t seed);

struct SynthConfig {
    size_t point_count = 4000;
};

/// Writes the full dataset tree (clean, corrupted, ground-truth masks,
/// points, manifest) under out_dir. Every 8th view (index 0, 8, ...) goes to
/// the test split. Fully deterministic per seed.
DatasetManifest make_dataset(const SceneSpec& scene, const std::vector<Camera>& cameras,
                             const WeatherRecipe& recipe, const std::string& out_dir,
                             uint64_t seed, const SynthConfig& config = {});

/// Separable Gaussian blur, clamp-to-edge, kernel truncated at 3 sigma.
ImageBuffer gaussian_blur(const ImageBuffer& image, double sigma);

}  // namespace wgs
