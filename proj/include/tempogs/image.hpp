#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace tempogs {

// Row-major RGB raster. Values are nominally in [0,1]; the renderer clamps at
// output, intermediate arithmetic (e.g. offset images in metric tests) may
// leave the range.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;  // height * width * 3

    Image() = default;
    Image(int w, int h, double fill = 0.0)
        : width(w), height(h), pixels(static_cast<size_t>(w) * h * 3, fill) {}

    double& at(int row, int col, int ch) {
        return pixels[(static_cast<size_t>(row) * width + col) * 3 + ch];
    }
    double at(int row, int col, int ch) const {
        return pixels[(static_cast<size_t>(row) * width + col) * 3 + ch];
    }

    bool same_size(const Image& other) const {
        return width == other.width && height == other.height;
    }

    size_t pixel_count() const { return static_cast<size_t>(width) * height; }

    void clamp01() {
        for (double& v : pixels) v = std::clamp(v, 0.0, 1.0);
    }

    // Quantize to the 8-bit grid used by the PNG dataset files.
    Image quantized() const {
        Image out = *this;
        for (double& v : out.pixels) {
            v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
        }
        return out;
    }
};

inline void require_same_size(const Image& a, const Image& b) {
    if (!a.same_size(b)) {
        throw std::invalid_argument("image dimension mismatch: " +
                                    std::to_string(a.width) + "x" + std::to_string(a.height) +
                                    " vs " + std::to_string(b.width) + "x" +
                                    std::to_string(b.height));
    }
}

// Rec.601 luma, used by all SSIM variants and their gradients.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

inline std::vector<double> to_luma(const Image& img) {
    std::vector<double> luma(img.pixel_count());
    for (size_t i = 0; i < luma.size(); ++i) {
        luma[i] = kLumaR * img.pixels[3 * i] + kLumaG * img.pixels[3 * i + 1] +
                  kLumaB * img.pixels[3 * i + 2];
    }
    return luma;
}

}  // namespace tempogs
