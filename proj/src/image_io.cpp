#include "weathergs/image_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "weathergs/error.hpp"

namespace wgs {

namespace {

uint8_t quantize(double c) {
    return static_cast<uint8_t>(std::lround(clamp01(c) * 255.0));
}

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    for (;;) {
        const int c = in.peek();
        if (c == EOF) break;
        if (c == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        if (std::isspace(c)) {
            in.get();
            continue;
        }
        break;
    }
    in >> tok;
    return tok;
}

struct PnmHeader {
    int width = 0, height = 0, maxval = 0;
};

PnmHeader read_header(std::istream& in, const std::string& magic, const std::string& path) {
    const std::string m = next_token(in);
    require(m == magic, ErrorCode::MalformedHeader,
            path + ": expected " + magic + " header, got '" + m + "'");
    PnmHeader h;
    try {
        h.width = std::stoi(next_token(in));
        h.height = std::stoi(next_token(in));
        h.maxval = std::stoi(next_token(in));
    } catch (const std::exception&) {
        fail(ErrorCode::MalformedHeader, path + ": malformed " + magic + " header");
    }
    require(h.width >= 1 && h.height >= 1, ErrorCode::MalformedHeader,
            path + ": bad dimensions");
    require(h.maxval == 255, ErrorCode::MalformedHeader, path + ": maxval must be 255");
    // Single whitespace byte separates header from raster.
    in.get();
    return h;
}

}  // namespace

void save_image(const std::string& path, const ImageBuffer& image) {
    require(image.width >= 1 && image.height >= 1, ErrorCode::Validation,
            "save_image: empty image");
    for (const Vec3& p : image.pixels)
        require(std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z),
                ErrorCode::Validation, "save_image: non-finite channel");

    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::IoFailure, "save_image: cannot open " + path);
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    std::vector<uint8_t> raw;
    raw.reserve(image.pixel_count() * 3);
    for (const Vec3& p : image.pixels) {
        raw.push_back(quantize(p.x));
        raw.push_back(quantize(p.y));
        raw.push_back(quantize(p.z));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(out.good(), ErrorCode::IoFailure, "save_image: write failed for " + path);
}

ImageBuffer load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::IoFailure, "load_image: cannot open " + path);
    const PnmHeader h = read_header(in, "P6", path);

    std::vector<uint8_t> raw(static_cast<size_t>(h.width) * h.height * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(in.gcount() == static_cast<std::streamsize>(raw.size()),
            ErrorCode::MalformedHeader, path + ": truncated P6 raster");

    ImageBuffer img(h.width, h.height);
    for (size_t i = 0; i < img.pixel_count(); ++i) {
        img.pixels[i] = {raw[3 * i] / 255.0, raw[3 * i + 1] / 255.0, raw[3 * i + 2] / 255.0};
    }
    return img;
}

void save_mask(const std::string& path, const MaskImage& mask) {
    require(mask.width >= 1 && mask.height >= 1, ErrorCode::Validation,
            "save_mask: empty mask");
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::IoFailure, "save_mask: cannot open " + path);
    out << "P5\n" << mask.width << " " << mask.height << "\n255\n";
    std::vector<uint8_t> raw(mask.values.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        require(mask.values[i] <= 1, ErrorCode::Validation, "save_mask: non-binary value");
        raw[i] = mask.values[i] ? 255 : 0;
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(out.good(), ErrorCode::IoFailure, "save_mask: write failed for " + path);
}

MaskImage load_mask(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::IoFailure, "load_mask: cannot open " + path);
    const PnmHeader h = read_header(in, "P5", path);

    std::vector<uint8_t> raw(static_cast<size_t>(h.width) * h.height);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(in.gcount() == static_cast<std::streamsize>(raw.size()),
            ErrorCode::MalformedHeader, path + ": truncated P5 raster");

    MaskImage mask(h.width, h.height);
    for (size_t i = 0; i < raw.size(); ++i) {
        require(raw[i] == 0 || raw[i] == 255, ErrorCode::MalformedHeader,
                path + ": mask pixel is neither 0 nor 255");
        mask.values[i] = raw[i] ? 1 : 0;
    }
    return mask;
}

}  // namespace wgs
