#pragma once

#include "autodetect/error.hpp"
#include "autodetect/image.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace autodetect {

enum class ImageFormat { png, ppm };

/// Raised by the image codecs. `kind` separates unreadable files from
/// unsupported formats and damaged content.
class ImageIoError : public Error {
public:
    enum class Kind { io, unsupported_format, corrupt };

    ImageIoError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Loads an 8-bit PNG or binary PNM (P6 RGB, P5 grayscale). Samples map to
/// [0, 1] by v / maxval; channel order is RGB.
ImageTensor load_image(const std::filesystem::path& path);
ImageTensor decode_image(const std::vector<std::uint8_t>& bytes);

/// Writes 8-bit samples, round(v * 255) clamped to [0, 255]. PPM output is
/// P6 for RGB and P5 for grayscale and is bit-exact for a given tensor.
void save_image(const ImageTensor& img, const std::filesystem::path& path, ImageFormat format);
std::vector<std::uint8_t> encode_image(const ImageTensor& img, ImageFormat format);

/// Picks the format from the extension: ".ppm"/".pnm"/".pgm" give PPM,
/// anything else PNG.
ImageFormat format_for_path(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace autodetect
