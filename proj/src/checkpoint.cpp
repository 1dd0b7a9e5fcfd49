#include "weathergs/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "weathergs/error.hpp"

namespace wgs {

namespace {
constexpr char kMagic[4] = {'W', 'G', 'S', '1'};
constexpr uint32_t kVersion = 1;
constexpr size_t kDoublesPerGaussian = 14;

void pack(const Gaussian& g, double* out) {
    out[0] = g.position.x; out[1] = g.position.y; out[2] = g.position.z;
    out[3] = g.rotation.w; out[4] = g.rotation.x; out[5] = g.rotation.y; out[6] = g.rotation.z;
    out[7] = g.log_scales.x; out[8] = g.log_scales.y; out[9] = g.log_scales.z;
    out[10] = g.opacity_logit;
    out[11] = g.color.x; out[12] = g.color.y; out[13] = g.color.z;
}

Gaussian unpack(const double* in) {
    Gaussian g;
    g.position = {in[0], in[1], in[2]};
    g.rotation = {in[3], in[4], in[5], in[6]};
    g.log_scales = {in[7], in[8], in[9]};
    g.opacity_logit = in[10];
    g.color = {in[11], in[12], in[13]};
    return g;
}
}  // namespace

void save_checkpoint(const std::string& path, const GaussianCloud& cloud,
                     uint64_t config_hash) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::IoFailure, "save_checkpoint: cannot open " + path);
    out.write(kMagic, 4);
    const uint32_t version = kVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&config_hash), sizeof(config_hash));
    const uint64_t count = cloud.count();
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    std::vector<double> buf(kDoublesPerGaussian);
    for (const Gaussian& g : cloud.gaussians) {
        pack(g, buf.data());
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(double)));
    }
    require(out.good(), ErrorCode::IoFailure, "save_checkpoint: write failed for " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::IoFailure, "load_checkpoint: cannot open " + path);

    char magic[4];
    in.read(magic, 4);
    require(in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0,
            ErrorCode::CheckpointCorrupt, path + ": bad checkpoint magic");

    uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    require(in.gcount() == sizeof(version), ErrorCode::CheckpointCorrupt,
            path + ": truncated checkpoint header");
    require(version == kVersion, ErrorCode::VersionMismatch,
            path + ": unsupported checkpoint version " + std::to_string(version));

    CheckpointData data;
    in.read(reinterpret_cast<char*>(&data.config_hash), sizeof(data.config_hash));
    uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    require(in.good(), ErrorCode::CheckpointCorrupt, path + ": truncated checkpoint header");

    data.cloud.gaussians.reserve(count);
    std::vector<double> buf(kDoublesPerGaussian);
    for (uint64_t i = 0; i < count; ++i) {
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(double)));
        require(in.gcount() == static_cast<std::streamsize>(buf.size() * sizeof(double)),
                ErrorCode::CheckpointCorrupt, path + ": truncated checkpoint payload");
        data.cloud.gaussians.push_back(unpack(buf.data()));
    }
    // Trailing bytes mean the count field and payload disagree.
    in.peek();
    require(in.eof(), ErrorCode::CheckpointCorrupt, path + ": trailing bytes after payload");
    return data;
}

}  // namespace wgs
