// SPDX-License-Identifier: Apache-2.0

#include "png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstring>
#include <filesystem>

#include "fgrn/error.hpp"

namespace fgrn {

PlanarImage png_load(const std::string& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        raise(ErrorCode::DecodeError, "cannot read PNG " + path + ": " + image.message);
    image.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        raise(ErrorCode::DecodeError, "cannot decode PNG " + path + ": " + image.message);
    }
    auto img = rgb8_to_image(buffer.data(), static_cast<int>(image.height), static_cast<int>(image.width));
    return img;
}

void png_save(const std::string& path, const PlanarImage& img) {
    const auto rgb = image_to_rgb8(img);
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, rgb.data(), 0, nullptr))
        raise(ErrorCode::DecodeError, "cannot write PNG " + path + ": " + image.message);
}

std::vector<std::pair<std::string, PlanarImage>> png_load_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) raise(ErrorCode::DecodeError, "not a directory: " + dir);
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().extension() == ".png") names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    std::vector<std::pair<std::string, PlanarImage>> out;
    for (const auto& name : names) out.emplace_back(name, png_load((fs::path(dir) / name).string()));
    return out;
}

} // namespace fgrn
