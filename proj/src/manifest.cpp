#include "weathergs/manifest.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "weathergs/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace wgs {

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& ctx) {
    for (const auto& [key, _] : obj.items()) {
        if (!key.empty() && key[0] == '_') continue;  // annotation
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) { ok = true; break; }
        require(ok, ErrorCode::SchemaError, "manifest: unknown key '" + key + "' in " + ctx);
    }
}

template <typename T>
T get_required(const json& obj, const char* key, const std::string& ctx) {
    require(obj.contains(key), ErrorCode::SchemaError,
            "manifest: missing required key '" + std::string(key) + "' in " + ctx);
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorCode::SchemaError, "manifest: bad type for '" + std::string(key) + "' in " + ctx);
    }
}

json camera_to_json(const Camera& c) {
    json j;
    j["fx"] = c.fx;
    j["fy"] = c.fy;
    j["cx"] = c.cx;
    j["cy"] = c.cy;
    j["width"] = c.width;
    j["height"] = c.height;
    j["near_clip"] = c.near_clip;
    std::vector<double> rot(9);
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) rot[i * 3 + k] = c.rotation_wc.m[i][k];
    j["rotation_wc"] = rot;
    j["translation_wc"] = {c.translation_wc.x, c.translation_wc.y, c.translation_wc.z};
    return j;
}

Camera camera_from_json(const json& j, const std::string& ctx) {
    reject_unknown_keys(j, {"fx", "fy", "cx", "cy", "width", "height", "near_clip",
                            "rotation_wc", "translation_wc"}, ctx);
    Camera c;
    c.fx = get_required<double>(j, "fx", ctx);
    c.fy = get_required<double>(j, "fy", ctx);
    c.cx = get_required<double>(j, "cx", ctx);
    c.cy = get_required<double>(j, "cy", ctx);
    c.width = get_required<int>(j, "width", ctx);
    c.height = get_required<int>(j, "height", ctx);
    c.near_clip = j.value("near_clip", 0.01);
    const auto rot = get_required<std::vector<double>>(j, "rotation_wc", ctx);
    require(rot.size() == 9, ErrorCode::SchemaError, "manifest: rotation_wc needs 9 entries");
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) c.rotation_wc.m[i][k] = rot[i * 3 + k];
    const auto t = get_required<std::vector<double>>(j, "translation_wc", ctx);
    require(t.size() == 3, ErrorCode::SchemaError, "manifest: translation_wc needs 3 entries");
    c.translation_wc = {t[0], t[1], t[2]};
    require(c.width >= 1 && c.height >= 1 && c.fx > 0 && c.fy > 0, ErrorCode::Validation,
            "manifest: camera dimensions/focals out of range in " + ctx);
    return c;
}

std::string resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    if (path.is_absolute()) return path.lexically_normal().string();
    return (base / path).lexically_normal().string();
}

std::string relativize(const fs::path& base, const std::string& p) {
    const fs::path path = fs::path(p).lexically_normal();
    const fs::path rel = path.lexically_relative(base);
    if (!rel.empty() && rel.native()[0] != '.') return rel.generic_string();
    return path.generic_string();
}

void check_exists(const std::string& path, const char* what) {
    require(fs::exists(path), ErrorCode::DanglingPath,
            std::string("manifest: ") + what + " does not exist: " + path);
}

}  // namespace

DatasetManifest load_manifest(const std::string& path, bool check_files) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoFailure, "load_manifest: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorCode::SchemaError, "load_manifest: " + path + ": " + e.what());
    }
    const fs::path base = fs::path(path).parent_path();

    reject_unknown_keys(j, {"scene_name", "seed", "points_path", "config_hash", "views"},
                        "manifest root");
    DatasetManifest m;
    m.scene_name = get_required<std::string>(j, "scene_name", "manifest root");
    m.seed = get_required<uint64_t>(j, "seed", "manifest root");
    m.points_path = resolve(base, get_required<std::string>(j, "points_path", "manifest root"));
    if (j.contains("config_hash")) m.config_hash = j.at("config_hash").get<uint64_t>();

    const json views = get_required<json>(j, "views", "manifest root");
    require(views.is_array(), ErrorCode::SchemaError, "manifest: views must be an array");
    for (size_t i = 0; i < views.size(); ++i) {
        const std::string ctx = "views[" + std::to_string(i) + "]";
        const json& v = views[i];
        reject_unknown_keys(v, {"split", "camera", "clean_path", "corrupted_path",
                                "processed_path", "gt_particle_mask_path",
                                "gt_occlusion_mask_path", "pred_mask_path"}, ctx);
        ViewRecord rec;
        const auto split = get_required<std::string>(v, "split", ctx);
        require(split == "train" || split == "test", ErrorCode::SchemaError,
                "manifest: split must be train or test in " + ctx);
        rec.split = split == "train" ? Split::Train : Split::Test;
        rec.camera = camera_from_json(get_required<json>(v, "camera", ctx), ctx + ".camera");
        rec.clean_path = resolve(base, get_required<std::string>(v, "clean_path", ctx));
        rec.corrupted_path = resolve(base, get_required<std::string>(v, "corrupted_path", ctx));
        auto optional_path = [&](const char* key) -> std::optional<std::string> {
            if (!v.contains(key)) return std::nullopt;
            return resolve(base, v.at(key).get<std::string>());
        };
        rec.processed_path = optional_path("processed_path");
        rec.gt_particle_mask_path = optional_path("gt_particle_mask_path");
        rec.gt_occlusion_mask_path = optional_path("gt_occlusion_mask_path");
        rec.pred_mask_path = optional_path("pred_mask_path");
        m.views.push_back(std::move(rec));
    }

    require(!m.views.empty(), ErrorCode::Validation, "manifest: no views");
    require(m.count_split(Split::Train) >= 1, ErrorCode::Validation,
            "manifest: needs at least one train view");
    require(m.count_split(Split::Test) >= 1, ErrorCode::Validation,
            "manifest: needs at least one test view");

    if (check_files) {
        check_exists(m.points_path, "points file");
        for (const auto& v : m.views) {
            check_exists(v.clean_path, "clean image");
            check_exists(v.corrupted_path, "corrupted image");
            if (v.processed_path) check_exists(*v.processed_path, "processed image");
            if (v.gt_particle_mask_path) check_exists(*v.gt_particle_mask_path, "particle mask");
            if (v.gt_occlusion_mask_path) check_exists(*v.gt_occlusion_mask_path, "occlusion mask");
            if (v.pred_mask_path) check_exists(*v.pred_mask_path, "predicted mask");
        }
    }
    return m;
}

void save_manifest(const std::string& path, const DatasetManifest& manifest) {
    const fs::path base = fs::path(path).parent_path();
    ordered_json j;
    j["scene_name"] = manifest.scene_name;
    j["seed"] = manifest.seed;
    j["points_path"] = relativize(base, manifest.points_path);
    j["config_hash"] = manifest.config_hash;
    j["views"] = ordered_json::array();
    for (const auto& v : manifest.views) {
        ordered_json rec;
        rec["split"] = v.split == Split::Train ? "train" : "test";
        rec["camera"] = camera_to_json(v.camera);
        rec["clean_path"] = relativize(base, v.clean_path);
        rec["corrupted_path"] = relativize(base, v.corrupted_path);
        if (v.processed_path) rec["processed_path"] = relativize(base, *v.processed_path);
        if (v.gt_particle_mask_path)
            rec["gt_particle_mask_path"] = relativize(base, *v.gt_particle_mask_path);
        if (v.gt_occlusion_mask_path)
            rec["gt_occlusion_mask_path"] = relativize(base, *v.gt_occlusion_mask_path);
        if (v.pred_mask_path) rec["pred_mask_path"] = relativize(base, *v.pred_mask_path);
        j["views"].push_back(std::move(rec));
    }
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::IoFailure, "save_manifest: cannot open " + path);
    out << j.dump(2) << "\n";
    require(out.good(), ErrorCode::IoFailure, "save_manifest: write failed for " + path);
}

void validate_for_training(const DatasetManifest& manifest) {
    require(manifest.count_split(Split::Train) >= 2, ErrorCode::Validation,
            "training needs at least 2 train views");
    require(manifest.count_split(Split::Test) >= 1, ErrorCode::Validation,
            "training needs at least 1 test view");
}

Camera load_camera_json(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoFailure, "load_camera_json: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorCode::SchemaError, "load_camera_json: " + path + ": " + e.what());
    }
    return camera_from_json(j, "camera spec");
}

}  // namespace wgs
