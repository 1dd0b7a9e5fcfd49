#pragma once

#include <string>

#include "weathergs/scene.hpp"

namespace wgs {

/// Binary PPM (P6), maxval 255. Channels are quantized with round(c * 255)
/// after clamping to [0,1]; a save/load round trip is exact to 1/255.
void save_image(const std::string& path, const ImageBuffer& image);
ImageBuffer load_image(const std::string& path);

/// Binary PGM (P5), values 0 and 255 only. Exact round trip; loading a file
/// with any other pixel value is an error.
void save_mask(const std::string& path, const MaskImage& mask);
MaskImage load_mask(const std::string& path);

}  // namespace wgs
