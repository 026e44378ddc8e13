#include "autodetect/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace autodetect {

namespace {

using Kind = ImageIoError::Kind;

std::uint8_t to_byte(float v) {
    double q = std::floor(static_cast<double>(v) * 255.0 + 0.5);
    return static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
}

// ---------------------------------------------------------------- PNM

class PnmReader {
public:
    explicit PnmReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    ImageTensor read() {
        if (bytes_.size() < 2 || bytes_[0] != 'P' || (bytes_[1] != '6' && bytes_[1] != '5')) {
            throw ImageIoError(Kind::unsupported_format, "not a binary PNM file");
        }
        const int channels = bytes_[1] == '6' ? 3 : 1;
        pos_ = 2;
        const long width = header_int();
        const long height = header_int();
        const long maxval = header_int();
        // Exactly one whitespace byte separates the header from the raster.
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
            throw ImageIoError(Kind::corrupt, "corrupt PNM header: missing raster separator");
        }
        ++pos_;
        if (width < 1 || height < 1 || width > 1 << 16 || height > 1 << 16) {
            throw ImageIoError(Kind::corrupt, "corrupt PNM header: bad dimensions");
        }
        if (maxval < 1 || maxval > 65535) {
            throw ImageIoError(Kind::corrupt, "corrupt PNM header: bad maxval");
        }
        if (maxval > 255) {
            throw ImageIoError(Kind::unsupported_format, "16-bit PNM is not supported");
        }
        const std::size_t n = static_cast<std::size_t>(width) * height * channels;
        if (bytes_.size() - pos_ < n) {
            throw ImageIoError(Kind::corrupt, "corrupt PNM: raster truncated");
        }
        std::vector<float> data(n);
        for (std::size_t i = 0; i < n; ++i) {
            data[i] = static_cast<float>(bytes_[pos_ + i] / static_cast<double>(maxval));
        }
        return ImageTensor(static_cast<int>(height), static_cast<int>(width), channels, std::move(data));
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    long header_int() {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
            throw ImageIoError(Kind::corrupt, "corrupt PNM header");
        }
        long v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + (bytes_[pos_++] - '0');
            if (v > 1 << 20) throw ImageIoError(Kind::corrupt, "corrupt PNM header: value too large");
        }
        return v;
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> encode_pnm(const ImageTensor& img) {
    std::string header = std::string(img.channels() == 3 ? "P6" : "P5") + "\n" + std::to_string(img.width()) +
                         " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + img.size());
    for (float v : img.data()) out.push_back(to_byte(v));
    return out;
}

// ---------------------------------------------------------------- PNG

struct PngBuffer {
    const std::vector<std::uint8_t>* bytes;
    std::size_t pos;
};

void png_read_from_buffer(png_structp png, png_bytep out, png_size_t len) {
    auto* buf = static_cast<PngBuffer*>(png_get_io_ptr(png));
    if (buf->bytes->size() - buf->pos < len) png_error(png, "unexpected end of PNG data");
    std::memcpy(out, buf->bytes->data() + buf->pos, len);
    buf->pos += len;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

void png_flush_noop(png_structp) {}

[[noreturn]] void png_throw(png_structp, png_const_charp msg) {
    throw ImageIoError(Kind::corrupt, std::string("corrupt PNG: ") + msg);
}

void png_warn_silent(png_structp, png_const_charp) {}

// RAII owner for libpng read/write structs.
class PngHandle {
public:
    explicit PngHandle(bool writing) : writing_(writing) {
        png_ = writing ? png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw, png_warn_silent)
                       : png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw, png_warn_silent);
        if (png_ == nullptr) throw ImageIoError(Kind::io, "libpng initialization failed");
        info_ = png_create_info_struct(png_);
        if (info_ == nullptr) {
            destroy();
            throw ImageIoError(Kind::io, "libpng initialization failed");
        }
    }
    ~PngHandle() { destroy(); }
    PngHandle(const PngHandle&) = delete;
    PngHandle& operator=(const PngHandle&) = delete;

    png_structp png() const { return png_; }
    png_infop info() const { return info_; }

private:
    void destroy() {
        if (png_ == nullptr) return;
        if (writing_) {
            png_destroy_write_struct(&png_, info_ != nullptr ? &info_ : nullptr);
        } else {
            png_destroy_read_struct(&png_, info_ != nullptr ? &info_ : nullptr, nullptr);
        }
        png_ = nullptr;
    }

    bool writing_;
    png_structp png_ = nullptr;
    png_infop info_ = nullptr;
};

ImageTensor decode_png(const std::vector<std::uint8_t>& bytes) {
    PngHandle h(false);
    PngBuffer buf{&bytes, 8};
    png_set_read_fn(h.png(), &buf, png_read_from_buffer);
    png_set_sig_bytes(h.png(), 8);
    png_read_info(h.png(), h.info());

    const auto width = png_get_image_width(h.png(), h.info());
    const auto height = png_get_image_height(h.png(), h.info());
    const int bit_depth = png_get_bit_depth(h.png(), h.info());
    const int color = png_get_color_type(h.png(), h.info());
    if (bit_depth > 8) throw ImageIoError(Kind::unsupported_format, "16-bit PNG is not supported");
    if (png_get_interlace_type(h.png(), h.info()) != PNG_INTERLACE_NONE) {
        throw ImageIoError(Kind::unsupported_format, "interlaced PNG is not supported");
    }

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(h.png());
    if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(h.png());
    if (png_get_valid(h.png(), h.info(), PNG_INFO_tRNS)) png_set_tRNS_to_alpha(h.png());
    png_set_strip_alpha(h.png());
    png_read_update_info(h.png(), h.info());

    const int channels = png_get_channels(h.png(), h.info());
    if (channels != 1 && channels != 3) {
        throw ImageIoError(Kind::unsupported_format, "unsupported PNG channel layout");
    }
    const std::size_t row_bytes = png_get_rowbytes(h.png(), h.info());
    std::vector<std::uint8_t> raster(row_bytes * height);
    std::vector<png_bytep> rows(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = raster.data() + y * row_bytes;
    png_read_image(h.png(), rows.data());
    png_read_end(h.png(), nullptr);

    std::vector<float> data(static_cast<std::size_t>(width) * height * channels);
    for (png_uint_32 y = 0; y < height; ++y) {
        for (std::size_t i = 0; i < static_cast<std::size_t>(width) * channels; ++i) {
            data[y * width * channels + i] = static_cast<float>(rows[y][i] / 255.0);
        }
    }
    return ImageTensor(static_cast<int>(height), static_cast<int>(width), channels, std::move(data));
}

std::vector<std::uint8_t> encode_png(const ImageTensor& img) {
    std::vector<std::uint8_t> out;
    PngHandle h(true);
    png_set_write_fn(h.png(), &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(h.png(), h.info(), img.width(), img.height(), 8,
                 img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(h.png(), 6);
    png_write_info(h.png(), h.info());

    const std::size_t row_len = static_cast<std::size_t>(img.width()) * img.channels();
    std::vector<std::uint8_t> row(row_len);
    const auto data = img.data();
    for (int y = 0; y < img.height(); ++y) {
        for (std::size_t i = 0; i < row_len; ++i) row[i] = to_byte(data[y * row_len + i]);
        png_write_row(h.png(), row.data());
    }
    png_write_end(h.png(), nullptr);
    return out;
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError(Kind::io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw ImageIoError(Kind::io, "read failed for " + path.string());
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ImageIoError(Kind::io, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ImageIoError(Kind::io, "write failed for " + path.string());
}

ImageTensor decode_image(const std::vector<std::uint8_t>& bytes) {
    static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    if (bytes.size() >= 8 && std::equal(std::begin(kPngSig), std::end(kPngSig), bytes.begin())) {
        return decode_png(bytes);
    }
    if (bytes.size() >= 2 && bytes[0] == 'P') {
        return PnmReader(bytes).read();
    }
    throw ImageIoError(Kind::unsupported_format, "unrecognized image format");
}

ImageTensor load_image(const std::filesystem::path& path) {
    try {
        return decode_image(read_file_bytes(path));
    } catch (const ImageIoError& e) {
        if (e.kind() == Kind::io) throw;
        throw ImageIoError(e.kind(), path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_image(const ImageTensor& img, ImageFormat format) {
    if (img.empty()) throw Error("cannot encode an empty image");
    return format == ImageFormat::ppm ? encode_pnm(img) : encode_png(img);
}

void save_image(const ImageTensor& img, const std::filesystem::path& path, ImageFormat format) {
    write_file_bytes(path, encode_image(img, format));
}

ImageFormat format_for_path(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return (ext == ".ppm" || ext == ".pnm" || ext == ".pgm") ? ImageFormat::ppm : ImageFormat::png;
}

}  // namespace autodetect
