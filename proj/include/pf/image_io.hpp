#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pf/image.hpp"

namespace pf {

/// Loads a PNG (8-bit gray/RGB/RGBA/palette; alpha composited over white)
/// or a binary PPM/PGM (P6/P5, maxval 255). Format chosen by file content.
/// Throws std::runtime_error on missing or corrupt files.
PixelImage load_image(const std::string& path);

/// 8-bit PNG, gray or RGB depending on channel count.
void save_png(const std::string& path, const PixelImage& img);

/// Binary PPM (P6) for 3 channels, PGM (P5) for 1, maxval 255.
void save_pnm(const std::string& path, const PixelImage& img);

/// Dispatches on extension: .png -> PNG, .ppm/.pgm -> PNM.
void save_image(const std::string& path, const PixelImage& img);

/// 16-bit binary PGM (P5, maxval 65535, MSB first). Used for label maps.
void save_pgm16(const std::string& path, const std::vector<uint16_t>& values,
                int width, int height);

}  // namespace pf
