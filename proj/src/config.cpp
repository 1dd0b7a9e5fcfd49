#include "weathergs/config.hpp"

#include <fstream>

#include <json.hpp>

#include "weathergs/error.hpp"

using ordered_json = nlohmann::ordered_json;

namespace wgs {

namespace {

void reject_unknown(const ordered_json& obj, std::initializer_list<const char*> allowed,
                    const std::string& ctx) {
    for (const auto& [key, _] : obj.items()) {
        if (!key.empty() && key[0] == '_') continue;
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) { ok = true; break; }
        require(ok, ErrorCode::SchemaError, "config: unknown key '" + key + "' in " + ctx);
    }
}

Vec3 vec3_from(const ordered_json& j, const std::string& ctx) {
    require(j.is_array() && j.size() == 3, ErrorCode::SchemaError,
            "config: " + ctx + " must be a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

ordered_json vec3_to(const Vec3& v) { return ordered_json::array({v.x, v.y, v.z}); }

Texture texture_from(const ordered_json& j, const std::string& ctx) {
    reject_unknown(j, {"kind", "color_a", "color_b", "period"}, ctx);
    Texture t;
    const std::string kind = j.value("kind", "solid");
    if (kind == "solid") t.kind = TextureKind::Solid;
    else if (kind == "checker") t.kind = TextureKind::Checker;
    else if (kind == "stripes") t.kind = TextureKind::Stripes;
    else fail(ErrorCode::SchemaError, "config: unknown texture kind '" + kind + "' in " + ctx);
    if (j.contains("color_a")) t.color_a = vec3_from(j.at("color_a"), ctx + ".color_a");
    if (j.contains("color_b")) t.color_b = vec3_from(j.at("color_b"), ctx + ".color_b");
    t.period = j.value("period", 1.0);
    return t;
}

ordered_json texture_to(const Texture& t) {
    ordered_json j;
    j["kind"] = t.kind == TextureKind::Solid ? "solid"
                : t.kind == TextureKind::Checker ? "checker" : "stripes";
    j["color_a"] = vec3_to(t.color_a);
    j["color_b"] = vec3_to(t.color_b);
    j["period"] = t.period;
    return j;
}

SceneSpec scene_from(const ordered_json& j) {
    if (j.is_string()) {
        require(j.get<std::string>() == "default", ErrorCode::SchemaError,
                "config: scene string must be \"default\"");
        return default_scene();
    }
    reject_unknown(j, {"builtin", "background", "planes", "spheres"}, "scene");
    if (j.contains("builtin")) {
        require(j.at("builtin").get<std::string>() == "default", ErrorCode::SchemaError,
                "config: scene.builtin must be \"default\"");
        SceneSpec scene = default_scene();
        if (j.contains("background")) scene.background = vec3_from(j.at("background"), "scene.background");
        return scene;
    }
    SceneSpec scene;
    if (j.contains("background")) scene.background = vec3_from(j.at("background"), "scene.background");
    if (j.contains("planes")) {
        for (const auto& pj : j.at("planes")) {
            reject_unknown(pj, {"name", "center", "u_axis", "v_axis", "half_u", "half_v", "texture"},
                           "scene.planes[]");
            PlanePrimitive p;
            p.name = pj.value("name", "plane");
            p.center = vec3_from(pj.at("center"), "plane.center");
            p.u_axis = vec3_from(pj.at("u_axis"), "plane.u_axis").normalized();
            p.v_axis = vec3_from(pj.at("v_axis"), "plane.v_axis").normalized();
            p.half_u = pj.value("half_u", 1.0);
            p.half_v = pj.value("half_v", 1.0);
            if (pj.contains("texture")) p.texture = texture_from(pj.at("texture"), "plane.texture");
            scene.planes.push_back(std::move(p));
        }
    }
    if (j.contains("spheres")) {
        for (const auto& sj : j.at("spheres")) {
            reject_unknown(sj, {"name", "center", "radius", "texture"}, "scene.spheres[]");
            SpherePrimitive s;
            s.name = sj.value("name", "sphere");
            s.center = vec3_from(sj.at("center"), "sphere.center");
            s.radius = sj.value("radius", 1.0);
            if (sj.contains("texture")) s.texture = texture_from(sj.at("texture"), "sphere.texture");
            scene.spheres.push_back(std::move(s));
        }
    }
    return scene;
}

WeatherParams weather_from(const ordered_json& j, const std::string& ctx) {
    reject_unknown(j, {"kind", "density", "size_range", "brightness", "streak_angle_deg",
                       "droplet_count", "droplet_radius_range", "attenuation", "blur_sigma"},
                   ctx);
    const std::string kind = j.at("kind").get<std::string>();
    WeatherParams p;
    if (kind == "snow") p = WeatherParams::snow_default();
    else if (kind == "rain") p = WeatherParams::rain_default();
    else if (kind == "lens_droplets") p = WeatherParams::lens_default();
    else fail(ErrorCode::SchemaError, "config: unknown weather kind '" + kind + "'");

    if (j.contains("density")) p.density = j.at("density").get<double>();
    if (j.contains("size_range")) {
        const auto& r = j.at("size_range");
        require(r.is_array() && r.size() == 2, ErrorCode::SchemaError,
                "config: size_range must be [lo, hi]");
        p.size_lo = r[0].get<double>();
        p.size_hi = r[1].get<double>();
    }
    if (j.contains("brightness")) p.brightness = j.at("brightness").get<double>();
    if (j.contains("streak_angle_deg")) p.streak_angle_deg = j.at("streak_angle_deg").get<double>();
    if (j.contains("droplet_count")) p.droplet_count = j.at("droplet_count").get<int>();
    if (j.contains("droplet_radius_range")) {
        const auto& r = j.at("droplet_radius_range");
        require(r.is_array() && r.size() == 2, ErrorCode::SchemaError,
                "config: droplet_radius_range must be [lo, hi]");
        p.droplet_radius_lo = r[0].get<double>();
        p.droplet_radius_hi = r[1].get<double>();
    }
    if (j.contains("attenuation")) p.attenuation = j.at("attenuation").get<double>();
    if (j.contains("blur_sigma")) p.blur_sigma = j.at("blur_sigma").get<double>();
    return p;
}

ordered_json weather_to(const WeatherParams& p) {
    ordered_json j;
    j["kind"] = p.kind == WeatherParams::Kind::Snow ? "snow"
                : p.kind == WeatherParams::Kind::Rain ? "rain" : "lens_droplets";
    j["density"] = p.density;
    j["size_range"] = ordered_json::array({p.size_lo, p.size_hi});
    j["brightness"] = p.brightness;
    j["streak_angle_deg"] = p.streak_angle_deg;
    j["droplet_count"] = p.droplet_count;
    j["droplet_radius_range"] = ordered_json::array({p.droplet_radius_lo, p.droplet_radius_hi});
    j["attenuation"] = p.attenuation;
    j["blur_sigma"] = p.blur_sigma;
    return j;
}

template <typename T>
void maybe(const ordered_json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void PipelineConfig::validate() const {
    scene.validate();
    require(cameras.count >= 3, ErrorCode::Validation, "config: cameras.count must be >= 3");
    require(cameras.orbit_radius > 0, ErrorCode::Validation,
            "config: cameras.orbit_radius must be positive");
    require(cameras.width >= 1 && cameras.height_px >= 1 && cameras.fx > 0 && cameras.fy > 0,
            ErrorCode::Validation, "config: bad camera intrinsics");
    for (const auto& w : weather) w.validate();
    preprocess.validate();
    train.validate();
    require(synth.point_count >= 1, ErrorCode::Validation, "config: point_count must be >= 1");
    require(!out_dir.empty(), ErrorCode::Validation, "config: out_dir must be set");
    require(threads >= 0, ErrorCode::Validation, "config: threads must be >= 0");
}

PipelineConfig default_pipeline_config() {
    PipelineConfig c;
    c.scene = default_scene();
    c.weather = {WeatherParams::snow_default(), WeatherParams::lens_default()};
    return c;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoFailure, "load_pipeline_config: cannot open " + path);
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::SchemaError, "load_pipeline_config: " + path + ": " + e.what());
    }
    reject_unknown(j, {"scene", "cameras", "weather", "preprocess", "train", "synth",
                       "instruction", "out_dir", "seed", "threads"},
                   "config root");

    PipelineConfig c;
    c.scene = j.contains("scene") ? scene_from(j.at("scene")) : default_scene();

    if (j.contains("cameras")) {
        const auto& cj = j.at("cameras");
        reject_unknown(cj, {"count", "orbit_radius", "height", "look_at", "fx", "fy", "width",
                            "height_px"},
                       "cameras");
        maybe(cj, "count", c.cameras.count);
        maybe(cj, "orbit_radius", c.cameras.orbit_radius);
        maybe(cj, "height", c.cameras.height);
        if (cj.contains("look_at")) c.cameras.look_at = vec3_from(cj.at("look_at"), "cameras.look_at");
        maybe(cj, "fx", c.cameras.fx);
        maybe(cj, "fy", c.cameras.fy);
        maybe(cj, "width", c.cameras.width);
        maybe(cj, "height_px", c.cameras.height_px);
    }

    if (j.contains("weather")) {
        require(j.at("weather").is_array(), ErrorCode::SchemaError,
                "config: weather must be an array");
        for (size_t i = 0; i < j.at("weather").size(); ++i)
            c.weather.push_back(weather_from(j.at("weather")[i],
                                             "weather[" + std::to_string(i) + "]"));
    } else {
        c.weather = {WeatherParams::snow_default(), WeatherParams::lens_default()};
    }

    if (j.contains("preprocess")) {
        const auto& pj = j.at("preprocess");
        reject_unknown(pj, {"theta", "t", "aef_contrast_thresh", "aef_max_blob_px",
                            "led_variance_sigma", "mask_dilate_px"},
                       "preprocess");
        maybe(pj, "theta", c.preprocess.theta);
        maybe(pj, "t", c.preprocess.t);
        maybe(pj, "aef_contrast_thresh", c.preprocess.aef_contrast_thresh);
        maybe(pj, "aef_max_blob_px", c.preprocess.aef_max_blob_px);
        maybe(pj, "led_variance_sigma", c.preprocess.led_variance_sigma);
        maybe(pj, "mask_dilate_px", c.preprocess.mask_dilate_px);
    }

    if (j.contains("train")) {
        const auto& tj = j.at("train");
        reject_unknown(tj, {"lambda", "iterations", "lr_position", "lr_rotation", "lr_log_scales",
                            "lr_opacity", "lr_color", "adam_beta1", "adam_beta2", "adam_eps",
                            "prune_opacity_thresh", "densify_grad_thresh", "densify_interval",
                            "prune_interval", "densify_stop_iter", "max_gaussians",
                            "init_target_count", "background", "l1_use_squared"},
                       "train");
        maybe(tj, "lambda", c.train.lambda);
        maybe(tj, "iterations", c.train.iterations);
        maybe(tj, "lr_position", c.train.lr_position);
        maybe(tj, "lr_rotation", c.train.lr_rotation);
        maybe(tj, "lr_log_scales", c.train.lr_log_scales);
        maybe(tj, "lr_opacity", c.train.lr_opacity);
        maybe(tj, "lr_color", c.train.lr_color);
        maybe(tj, "adam_beta1", c.train.adam_beta1);
        maybe(tj, "adam_beta2", c.train.adam_beta2);
        maybe(tj, "adam_eps", c.train.adam_eps);
        maybe(tj, "prune_opacity_thresh", c.train.prune_opacity_thresh);
        maybe(tj, "densify_grad_thresh", c.train.densify_grad_thresh);
        maybe(tj, "densify_interval", c.train.densify_interval);
        maybe(tj, "prune_interval", c.train.prune_interval);
        maybe(tj, "densify_stop_iter", c.train.densify_stop_iter);
        maybe(tj, "max_gaussians", c.train.max_gaussians);
        maybe(tj, "init_target_count", c.train.init_target_count);
        if (tj.contains("background")) c.train.background = vec3_from(tj.at("background"), "train.background");
        maybe(tj, "l1_use_squared", c.train.l1_use_squared);
    }

    if (j.contains("synth")) {
        reject_unknown(j.at("synth"), {"point_count"}, "synth");
        maybe(j.at("synth"), "point_count", c.synth.point_count);
    }
    maybe(j, "instruction", c.instruction);
    maybe(j, "out_dir", c.out_dir);
    maybe(j, "seed", c.seed);
    maybe(j, "threads", c.threads);
    return c;
}

namespace {

ordered_json config_to_json(const PipelineConfig& c) {
    ordered_json j;
    ordered_json scene;
    scene["background"] = vec3_to(c.scene.background);
    scene["planes"] = ordered_json::array();
    for (const auto& p : c.scene.planes) {
        ordered_json pj;
        pj["name"] = p.name;
        pj["center"] = vec3_to(p.center);
        pj["u_axis"] = vec3_to(p.u_axis);
        pj["v_axis"] = vec3_to(p.v_axis);
        pj["half_u"] = p.half_u;
        pj["half_v"] = p.half_v;
        pj["texture"] = texture_to(p.texture);
        scene["planes"].push_back(std::move(pj));
    }
    scene["spheres"] = ordered_json::array();
    for (const auto& s : c.scene.spheres) {
        ordered_json sj;
        sj["name"] = s.name;
        sj["center"] = vec3_to(s.center);
        sj["radius"] = s.radius;
        sj["texture"] = texture_to(s.texture);
        scene["spheres"].push_back(std::move(sj));
    }
    j["scene"] = std::move(scene);

    ordered_json cams;
    cams["count"] = c.cameras.count;
    cams["orbit_radius"] = c.cameras.orbit_radius;
    cams["height"] = c.cameras.height;
    cams["look_at"] = vec3_to(c.cameras.look_at);
    cams["fx"] = c.cameras.fx;
    cams["fy"] = c.cameras.fy;
    cams["width"] = c.cameras.width;
    cams["height_px"] = c.cameras.height_px;
    j["cameras"] = std::move(cams);

    j["weather"] = ordered_json::array();
    for (const auto& w : c.weather) j["weather"].push_back(weather_to(w));

    ordered_json pp;
    pp["theta"] = c.preprocess.theta;
    pp["t"] = c.preprocess.t;
    pp["aef_contrast_thresh"] = c.preprocess.aef_contrast_thresh;
    pp["aef_max_blob_px"] = c.preprocess.aef_max_blob_px;
    pp["led_variance_sigma"] = c.preprocess.led_variance_sigma;
    pp["mask_dilate_px"] = c.preprocess.mask_dilate_px;
    j["preprocess"] = std::move(pp);

    ordered_json tr;
    tr["lambda"] = c.train.lambda;
    tr["iterations"] = c.train.iterations;
    tr["lr_position"] = c.train.lr_position;
    tr["lr_rotation"] = c.train.lr_rotation;
    tr["lr_log_scales"] = c.train.lr_log_scales;
    tr["lr_opacity"] = c.train.lr_opacity;
    tr["lr_color"] = c.train.lr_color;
    tr["adam_beta1"] = c.train.adam_beta1;
    tr["adam_beta2"] = c.train.adam_beta2;
    tr["adam_eps"] = c.train.adam_eps;
    tr["prune_opacity_thresh"] = c.train.prune_opacity_thresh;
    tr["densify_grad_thresh"] = c.train.densify_grad_thresh;
    tr["densify_interval"] = c.train.densify_interval;
    tr["prune_interval"] = c.train.prune_interval;
    tr["densify_stop_iter"] = c.train.densify_stop_iter;
    tr["max_gaussians"] = c.train.max_gaussians;
    tr["init_target_count"] = c.train.init_target_count;
    tr["background"] = vec3_to(c.train.background);
    tr["l1_use_squared"] = c.train.l1_use_squared;
    j["train"] = std::move(tr);

    ordered_json sy;
    sy["point_count"] = c.synth.point_count;
    j["synth"] = std::move(sy);

    j["instruction"] = c.instruction;
    j["out_dir"] = c.out_dir;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    return j;
}

}  // namespace

void save_pipeline_config(const std::string& path, const PipelineConfig& config) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::IoFailure, "save_pipeline_config: cannot open " + path);
    out << config_to_json(config).dump(2) << "\n";
}

uint64_t config_hash(const PipelineConfig& config) {
    const std::string s = config_to_json(config).dump();
    uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

}  // namespace wgs
