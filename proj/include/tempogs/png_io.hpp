#pragma once

#include <filesystem>

#include "tempogs/image.hpp"

namespace tempogs {

// 8-bit RGB PNG. Values are clamped to [0,1] and quantized on write; reads
// return values on the 8-bit grid k/255.
void save_png(const std::filesystem::path& path, const Image& image);
Image load_png(const std::filesystem::path& path);

}  // namespace tempogs
