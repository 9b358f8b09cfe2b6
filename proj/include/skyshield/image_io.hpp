#pragma once

#include <filesystem>

#include "skyshield/types.hpp"

namespace skyshield {

// Masks are binary PGM (P5), maxval 255: 0 = background, 255 = foreground.
Mask read_mask_pgm(const std::filesystem::path& path);
void write_mask_pgm(const Mask& mask, const std::filesystem::path& path);

// Surfaces are grayscale PFM ("Pf", scale -1.0 = little-endian float32,
// bottom-to-top row order). In-memory surfaces are double; writing rounds
// to float32.
ImageD read_image_pfm(const std::filesystem::path& path);
void write_image_pfm(const ImageD& img, const std::filesystem::path& path);

}  // namespace skyshield
