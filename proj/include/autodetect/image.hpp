#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace autodetect {

/// H x W x C image with interleaved (row-major, channel-last) float samples
/// in [0, 1]. Channels is 1 (grayscale) or 3 (RGB).
class ImageTensor {
public:
    ImageTensor() = default;
    ImageTensor(int height, int width, int channels, float fill = 0.0f);
    /// Takes ownership of `data`; values are clamped into [0, 1].
    ImageTensor(int height, int width, int channels, std::vector<float> data);

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float at(int y, int x, int c) const { return data_[index(y, x, c)]; }
    /// Writes a sample, clamping into [0, 1].
    void set(int y, int x, int c, float v);

    std::span<const float> data() const { return data_; }

    friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

private:
    std::size_t index(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

/// Per-pixel reconstruction error, one non-negative value per pixel.
class ErrorMap {
public:
    ErrorMap() = default;
    ErrorMap(int height, int width, std::vector<double> data);

    int height() const { return height_; }
    int width() const { return width_; }
    double at(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    std::span<const double> data() const { return data_; }

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

/// Bilinear resize with half-pixel centers: output pixel d samples the
/// source at (d + 0.5) * in / out - 0.5, clamped to the border. Equal
/// dimensions return an exact copy.
ImageTensor resize_bilinear(const ImageTensor& img, int out_h, int out_w);

/// Snaps every sample onto the 8-bit grid, round(v * 255) / 255.
ImageTensor quantize8(const ImageTensor& img);

}  // namespace autodetect
