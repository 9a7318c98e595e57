// SPDX-License-Identifier: Apache-2.0

#ifndef FGRN_PNG_IO_HPP
#define FGRN_PNG_IO_HPP

#include <string>
#include <vector>

#include "fgrn/image_ops.hpp"

namespace fgrn {

/// Decodes a PNG into a [0,1] planar image. Palette, gray and alpha inputs
/// are expanded/flattened to 8-bit RGB.
PlanarImage png_load(const std::string& path);

/// Encodes as 8-bit RGB (no alpha) via round_to_byte. Lossless for values on
/// the 8-bit grid.
void png_save(const std::string& path, const PlanarImage& img);

/// All *.png files in a directory, sorted by filename. Returns (name, image).
std::vector<std::pair<std::string, PlanarImage>> png_load_dir(const std::string& dir);

} // namespace fgrn

#endif // FGRN_PNG_IO_HPP
