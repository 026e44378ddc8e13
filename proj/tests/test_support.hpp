#pragma once

#include "autodetect/image.hpp"
#include "autodetect/rng.hpp"

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

namespace autodetect::testing {

// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("autodetect_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline ImageTensor random_image(RngState& rng, int h, int w, int c) {
    std::vector<float> data(static_cast<std::size_t>(h) * w * c);
    for (auto& v : data) v = static_cast<float>(rng_uniform(rng));
    return ImageTensor(h, w, c, std::move(data));
}

// Random image whose samples lie exactly on the 8-bit grid.
inline ImageTensor random_grid_image(RngState& rng, int h, int w, int c) {
    std::vector<float> data(static_cast<std::size_t>(h) * w * c);
    for (auto& v : data) v = static_cast<float>(static_cast<double>(rng_below(rng, 256)) / 255.0);
    return ImageTensor(h, w, c, std::move(data));
}

}  // namespace autodetect::testing
