#include "autodetect/image.hpp"

#include "autodetect/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace autodetect {

namespace {

void check_dims(int height, int width, int channels) {
    if (height < 1 || width < 1 || (channels != 1 && channels != 3)) {
        throw Error("invalid image dimensions " + std::to_string(height) + "x" + std::to_string(width) +
                    "x" + std::to_string(channels));
    }
}

float clamp01(float v) {
    // NaN collapses to 0 so the range invariant survives bad inputs.
    if (!(v > 0.0f)) return 0.0f;
    return v < 1.0f ? v : 1.0f;
}

}  // namespace

ImageTensor::ImageTensor(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels) {
    check_dims(height, width, channels);
    data_.assign(static_cast<std::size_t>(height) * width * channels, clamp01(fill));
}

ImageTensor::ImageTensor(int height, int width, int channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    check_dims(height, width, channels);
    if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
        throw Error("image data length does not match dimensions");
    }
    for (auto& v : data_) v = clamp01(v);
}

void ImageTensor::set(int y, int x, int c, float v) {
    data_[index(y, x, c)] = clamp01(v);
}

ErrorMap::ErrorMap(int height, int width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
    if (height < 1 || width < 1 || data_.size() != static_cast<std::size_t>(height) * width) {
        throw Error("error map data length does not match dimensions");
    }
    for (auto v : data_) {
        if (!(v >= 0.0)) throw Error("error map values must be non-negative");
    }
}

ImageTensor resize_bilinear(const ImageTensor& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw Error("resize target must be at least 1x1");
    if (out_h == img.height() && out_w == img.width()) return img;

    const int in_h = img.height();
    const int in_w = img.width();
    const int ch = img.channels();

    struct Tap {
        int lo, hi;
        double frac;
    };
    auto taps = [](int in, int out) {
        std::vector<Tap> t(static_cast<std::size_t>(out));
        const double scale = static_cast<double>(in) / out;
        for (int d = 0; d < out; ++d) {
            double src = (d + 0.5) * scale - 0.5;
            src = std::clamp(src, 0.0, static_cast<double>(in - 1));
            int lo = static_cast<int>(std::floor(src));
            int hi = std::min(lo + 1, in - 1);
            t[d] = {lo, hi, src - lo};
        }
        return t;
    };
    const auto ty = taps(in_h, out_h);
    const auto tx = taps(in_w, out_w);

    std::vector<float> out(static_cast<std::size_t>(out_h) * out_w * ch);
    std::size_t k = 0;
    for (int y = 0; y < out_h; ++y) {
        const auto& a = ty[y];
        for (int x = 0; x < out_w; ++x) {
            const auto& b = tx[x];
            for (int c = 0; c < ch; ++c) {
                double top = (1.0 - b.frac) * img.at(a.lo, b.lo, c) + b.frac * img.at(a.lo, b.hi, c);
                double bot = (1.0 - b.frac) * img.at(a.hi, b.lo, c) + b.frac * img.at(a.hi, b.hi, c);
                out[k++] = static_cast<float>((1.0 - a.frac) * top + a.frac * bot);
            }
        }
    }
    return ImageTensor(out_h, out_w, ch, std::move(out));
}

ImageTensor quantize8(const ImageTensor& img) {
    std::vector<float> out(img.data().begin(), img.data().end());
    for (auto& v : out) {
        double q = std::floor(static_cast<double>(v) * 255.0 + 0.5);
        v = static_cast<float>(std::clamp(q, 0.0, 255.0) / 255.0);
    }
    return ImageTensor(img.height(), img.width(), img.channels(), std::move(out));
}

}  // namespace autodetect
