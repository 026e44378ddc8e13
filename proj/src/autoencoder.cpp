#include "autodetect/autoencoder.hpp"

#include "autodetect/image_io.hpp"
#include "autodetect/parallel.hpp"
#include "autodetect/rng.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

namespace autodetect::ae {

void ArchDescriptor::validate() const {
    if (input_side < 8 || input_side % 8 != 0) {
        throw Error("autoencoder input side " + std::to_string(input_side) + " is not a positive multiple of 8");
    }
    if (channels != 1 && channels != 3) throw Error("autoencoder channels must be 1 or 3");
    for (int w : widths) {
        if (w < 1) throw Error("autoencoder widths must be at least 1");
    }
}

void TrainConfig::validate() const {
    if (epochs < 0) throw Error("epochs must be non-negative");
    if (batch_size < 1) throw Error("batch size must be at least 1");
    if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw Error("Adam betas must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw Error("Adam epsilon must be positive");
}

std::array<LayerShape, kLayers> layer_shapes(const ArchDescriptor& arch) {
    const auto [c1, c2, c3] = arch.widths;
    const int io[kLayers][2] = {{arch.channels, c1}, {c1, c2}, {c2, c3}, {c3, c2}, {c2, c1}, {c1, arch.channels}};
    std::array<LayerShape, kLayers> out{};
    std::size_t offset = 0;
    for (int l = 0; l < kLayers; ++l) {
        auto& s = out[l];
        s.in_channels = io[l][0];
        s.out_channels = io[l][1];
        s.stride = l < 3 ? 2 : 1;
        s.upsample = l >= 3;
        s.weight_offset = offset;
        offset += static_cast<std::size_t>(s.out_channels) * s.in_channels * 9;
        s.bias_offset = offset;
        offset += static_cast<std::size_t>(s.out_channels);
    }
    return out;
}

std::size_t param_count(const ArchDescriptor& arch) {
    const auto shapes = layer_shapes(arch);
    return shapes.back().bias_offset + static_cast<std::size_t>(shapes.back().out_channels);
}

template <typename T>
Planar<T> to_planar(const ImageTensor& img) {
    const int h = img.height(), w = img.width(), c = img.channels();
    Planar<T> out(img.size());
    const auto data = img.data();
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                out[(static_cast<std::size_t>(ch) * h + y) * w + x] = data[(static_cast<std::size_t>(y) * w + x) * c + ch];
    return out;
}

template <typename T>
BasicModel<T> init_model_as(const ArchDescriptor& arch, std::uint64_t seed) {
    arch.validate();
    BasicModel<T> model;
    model.arch = arch;
    model.params.assign(param_count(arch), T(0));
    RngState rng{seed};
    for (const auto& s : layer_shapes(arch)) {
        const double bound = std::sqrt(6.0 / (s.in_channels * 9.0));
        const std::size_t n = static_cast<std::size_t>(s.out_channels) * s.in_channels * 9;
        for (std::size_t i = 0; i < n; ++i) {
            model.params[s.weight_offset + i] = static_cast<T>(rng_uniform(rng, -bound, bound));
        }
    }
    return model;
}

AEModel init_model(const ArchDescriptor& arch, std::uint64_t seed) { return init_model_as<float>(arch, seed); }

namespace {

// ------------------------------------------------------------------ kernels
//
// Planes are channel-first. A conv layer lowers its zero-padded input to a
// (in_channels * 9) x (out_side^2) column matrix and runs as a GEMM against
// the [out][in * 9] kernel matrix. Output side is (in - 1) / stride + 1.

// Every buffer Eigen touches comes from an aligned allocator: Eigen peels
// scalar prefixes up to the next packet boundary, so with arbitrary heap
// alignment the summation order (and the low bits of the result) would
// change from run to run.
template <typename T>
using AVec = std::vector<T, Eigen::aligned_allocator<T>>;

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

int out_side(int in, int stride) { return (in - 1) / stride + 1; }

// Column matrix of a conv input: row (ic * 9 + ky * 3 + kx), column
// (oy * side_out + ox) holds input pixel (oy * stride + ky - 1,
// ox * stride + kx - 1), zero outside the image. With `upsample` the input
// is first enlarged x2 by nearest neighbour.
template <typename T>
void im2col(const T* in, int c, int side, bool upsample, int stride, AVec<T>& col) {
    const int s = upsample ? side * 2 : side;
    const int so = out_side(s, stride);
    const std::size_t n = static_cast<std::size_t>(so) * so;
    col.assign(static_cast<std::size_t>(c) * 9 * n, T(0));
    for (int ch = 0; ch < c; ++ch) {
        const T* src = in + static_cast<std::size_t>(ch) * side * side;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                T* dst = col.data() + (static_cast<std::size_t>(ch) * 9 + ky * 3 + kx) * n;
                for (int oy = 0; oy < so; ++oy) {
                    const int iy = oy * stride + ky - 1;
                    if (iy < 0 || iy >= s) continue;
                    const T* srow = src + static_cast<std::size_t>(upsample ? iy / 2 : iy) * side;
                    T* drow = dst + static_cast<std::size_t>(oy) * so;
                    for (int ox = 0; ox < so; ++ox) {
                        const int ix = ox * stride + kx - 1;
                        if (ix < 0 || ix >= s) continue;
                        drow[ox] = srow[upsample ? ix / 2 : ix];
                    }
                }
            }
        }
    }
}

// Adjoint of im2col without the upsample: scatters column gradients back
// onto a c x side x side input gradient (overwritten).
template <typename T>
void col2im(const AVec<T>& col, int c, int side, int stride, T* gin) {
    const int so = out_side(side, stride);
    const std::size_t n = static_cast<std::size_t>(so) * so;
    std::fill(gin, gin + static_cast<std::size_t>(c) * side * side, T(0));
    for (int ch = 0; ch < c; ++ch) {
        T* dst = gin + static_cast<std::size_t>(ch) * side * side;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const T* src = col.data() + (static_cast<std::size_t>(ch) * 9 + ky * 3 + kx) * n;
                for (int oy = 0; oy < so; ++oy) {
                    const int iy = oy * stride + ky - 1;
                    if (iy < 0 || iy >= side) continue;
                    const T* srow = src + static_cast<std::size_t>(oy) * so;
                    T* drow = dst + static_cast<std::size_t>(iy) * side;
                    for (int ox = 0; ox < so; ++ox) {
                        const int ix = ox * stride + kx - 1;
                        if (ix < 0 || ix >= side) continue;
                        drow[ix] += srow[ox];
                    }
                }
            }
        }
    }
}

// Adjoint of the x2 nearest-neighbour upsample: each input cell receives the
// sum of its 2x2 block.
template <typename T>
void upsample2_backward(const T* gout, int c, int side_in, T* gin) {
    const int side_out = side_in * 2;
    for (int ch = 0; ch < c; ++ch) {
        const T* g = gout + static_cast<std::size_t>(ch) * side_out * side_out;
        T* dst = gin + static_cast<std::size_t>(ch) * side_in * side_in;
        for (int y = 0; y < side_in; ++y) {
            const T* r0 = g + static_cast<std::size_t>(2 * y) * side_out;
            const T* r1 = r0 + side_out;
            for (int x = 0; x < side_in; ++x) {
                dst[static_cast<std::size_t>(y) * side_in + x] = r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1];
            }
        }
    }
}

template <typename T>
T sigmoid(T z) {
    return T(1) / (T(1) + std::exp(-z));
}

// Activations of one forward pass, kept for the backward pass.
// act[0] is the input, act[l + 1] the (post-nonlinearity) output of layer l,
// col[l] the column matrix layer l multiplied.
template <typename T>
struct Trace {
    std::array<AVec<T>, kLayers + 1> act;
    std::array<AVec<T>, kLayers> col;
    std::array<int, kLayers + 1> side{};
};

template <typename T>
void run_forward(const BasicModel<T>& model, const AVec<T>& params, const Planar<T>& input, Trace<T>& t) {
    const auto& arch = model.arch;
    if (input.size() != static_cast<std::size_t>(arch.input_side) * arch.input_side * arch.channels) {
        throw Error("autoencoder input does not match the architecture");
    }
    const auto shapes = layer_shapes(arch);
    t.act[0].assign(input.begin(), input.end());
    t.side[0] = arch.input_side;
    for (int l = 0; l < kLayers; ++l) {
        const auto& s = shapes[l];
        const int side_in = s.upsample ? t.side[l] * 2 : t.side[l];
        const int side_out = out_side(side_in, s.stride);
        const auto n = static_cast<Eigen::Index>(side_out) * side_out;
        const auto k = static_cast<Eigen::Index>(s.in_channels) * 9;
        im2col(t.act[l].data(), s.in_channels, t.side[l], s.upsample, s.stride, t.col[l]);
        t.side[l + 1] = side_out;
        auto& out = t.act[l + 1];
        out.resize(static_cast<std::size_t>(s.out_channels) * n);

        ConstMatMap<T> w(params.data() + s.weight_offset, s.out_channels, k);
        ConstMatMap<T> col(t.col[l].data(), k, n);
        Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bias(params.data() + s.bias_offset, s.out_channels);
        MatMap<T> o(out.data(), s.out_channels, n);
        o.noalias() = w * col;
        o.colwise() += bias;
        if (l + 1 < kLayers) {
            for (auto& z : out) z = z > T(0) ? z : T(0);
        } else {
            for (auto& z : out) z = sigmoid(z);
        }
    }
}

// Backpropagates d(loss)/d(output) through the trace, accumulating into grads.
template <typename T>
void run_backward(const BasicModel<T>& model, const AVec<T>& params, const Trace<T>& t, AVec<T> gout, AVec<T>& grads) {
    const auto shapes = layer_shapes(model.arch);
    const auto& out = t.act[kLayers];
    for (std::size_t i = 0; i < gout.size(); ++i) gout[i] *= out[i] * (T(1) - out[i]);

    AVec<T> gcol;
    AVec<T> glayer;
    AVec<T> gin;
    for (int l = kLayers - 1; l >= 0; --l) {
        const auto& s = shapes[l];
        const int side_in = s.upsample ? t.side[l] * 2 : t.side[l];
        const auto n = static_cast<Eigen::Index>(t.side[l + 1]) * t.side[l + 1];
        const auto k = static_cast<Eigen::Index>(s.in_channels) * 9;

        ConstMatMap<T> g(gout.data(), s.out_channels, n);
        ConstMatMap<T> col(t.col[l].data(), k, n);
        MatMap<T> gw(grads.data() + s.weight_offset, s.out_channels, k);
        Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> gb(grads.data() + s.bias_offset, s.out_channels);
        gw.noalias() += g * col.transpose();
        gb += g.rowwise().sum();
        if (l == 0) break;

        ConstMatMap<T> w(params.data() + s.weight_offset, s.out_channels, k);
        gcol.resize(static_cast<std::size_t>(k * n));
        MatMap<T> gc(gcol.data(), k, n);
        gc.noalias() = w.transpose() * g;

        glayer.resize(static_cast<std::size_t>(s.in_channels) * side_in * side_in);
        col2im(gcol, s.in_channels, side_in, s.stride, glayer.data());
        if (s.upsample) {
            gin.resize(t.act[l].size());
            upsample2_backward(glayer.data(), s.in_channels, t.side[l], gin.data());
        } else {
            gin.swap(glayer);
        }
        // act[l] is a ReLU output for every l > 0.
        const auto& a = t.act[l];
        for (std::size_t i = 0; i < gin.size(); ++i) {
            if (!(a[i] > T(0))) gin[i] = T(0);
        }
        gout.swap(gin);
    }
}

}  // namespace

template <typename T>
Planar<T> forward_planar(const BasicModel<T>& model, const Planar<T>& input) {
    Trace<T> t;
    const AVec<T> params(model.params.begin(), model.params.end());
    run_forward(model, params, input, t);
    const auto& out = t.act[kLayers];
    return Planar<T>(out.begin(), out.end());
}

namespace {

void check_image(const ArchDescriptor& arch, const ImageTensor& img) {
    if (img.height() != arch.input_side || img.width() != arch.input_side || img.channels() != arch.channels) {
        throw Error("image is " + std::to_string(img.height()) + "x" + std::to_string(img.width()) + "x" +
                    std::to_string(img.channels()) + ", model expects " + std::to_string(arch.input_side) + "x" +
                    std::to_string(arch.input_side) + "x" + std::to_string(arch.channels));
    }
}

ImageTensor from_planar(const Planar<float>& p, int side, int channels) {
    std::vector<float> data(p.size());
    for (int c = 0; c < channels; ++c)
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x)
                data[(static_cast<std::size_t>(y) * side + x) * channels + c] =
                    p[(static_cast<std::size_t>(c) * side + y) * side + x];
    return ImageTensor(side, side, channels, std::move(data));
}

}  // namespace

std::vector<ImageTensor> forward(const AEModel& model, std::span<const ImageTensor> batch) {
    for (const auto& img : batch) check_image(model.arch, img);
    std::vector<ImageTensor> out(batch.size());
    parallel_for(batch.size(), [&](std::size_t i) {
        out[i] = from_planar(forward_planar(model, to_planar<float>(batch[i])), model.arch.input_side,
                             model.arch.channels);
    });
    return out;
}

template <typename T>
double loss_and_grads(const BasicModel<T>& model, std::span<const Planar<T>> batch, std::vector<T>& grads) {
    if (batch.empty()) throw Error("loss requires a non-empty batch");
    const std::size_t n_params = model.params.size();
    const std::size_t sample_size = batch.front().size();
    const double denom = static_cast<double>(batch.size()) * static_cast<double>(sample_size);

    const AVec<T> params(model.params.begin(), model.params.end());
    std::vector<AVec<T>> per_sample(batch.size());
    std::vector<double> sq_sums(batch.size(), 0.0);
    parallel_for(batch.size(), [&](std::size_t i) {
        Trace<T> t;
        run_forward(model, params, batch[i], t);
        const auto& recon = t.act[kLayers];
        AVec<T> gout(recon.size());
        double sq = 0.0;
        for (std::size_t k = 0; k < recon.size(); ++k) {
            const double d = static_cast<double>(recon[k]) - static_cast<double>(batch[i][k]);
            sq += d * d;
            gout[k] = static_cast<T>(2.0 * d / denom);
        }
        sq_sums[i] = sq;
        per_sample[i].assign(n_params, T(0));
        run_backward(model, params, t, std::move(gout), per_sample[i]);
    });

    grads.assign(n_params, T(0));
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        total += sq_sums[i];
        const auto& g = per_sample[i];
        for (std::size_t k = 0; k < n_params; ++k) grads[k] += g[k];
    }
    return total / denom;
}

double loss_and_grads(const AEModel& model, std::span<const ImageTensor> batch, std::vector<float>& grads) {
    std::vector<Planar<float>> planar;
    planar.reserve(batch.size());
    for (const auto& img : batch) {
        check_image(model.arch, img);
        planar.push_back(to_planar<float>(img));
    }
    return loss_and_grads<float>(model, planar, grads);
}

template <typename T>
void adam_step(BasicModel<T>& model, std::span<const T> grads, OptState<T>& opt, const TrainConfig& cfg) {
    const std::size_t n = model.params.size();
    if (grads.size() != n) throw Error("gradient size does not match the model");
    if (opt.m.empty() && opt.v.empty()) {
        opt.m.assign(n, T(0));
        opt.v.assign(n, T(0));
    }
    if (opt.m.size() != n || opt.v.size() != n) throw Error("optimizer state does not match the model");

    ++opt.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(opt.step));
    const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
    for (std::size_t i = 0; i < n; ++i) {
        const T g = grads[i];
        opt.m[i] = b1 * opt.m[i] + (T(1) - b1) * g;
        opt.v[i] = b2 * opt.v[i] + (T(1) - b2) * g * g;
        const double m_hat = opt.m[i] / bc1;
        const double v_hat = opt.v[i] / bc2;
        model.params[i] = static_cast<T>(model.params[i] - cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
}

TrainResult train_images(std::span<const ImageTensor> images, const ArchDescriptor& arch, const TrainConfig& cfg,
                         const EpochCallback& on_epoch) {
    arch.validate();
    cfg.validate();
    if (images.empty()) throw Error("training set is empty");

    std::vector<Planar<float>> data;
    data.reserve(images.size());
    for (const auto& img : images) {
        check_image(arch, img);
        data.push_back(to_planar<float>(img));
    }

    TrainResult result;
    result.model = init_model(arch, cfg.seed);
    OptState<float> opt;
    // Shuffling gets its own stream so it never overlaps the init stream.
    RngState shuffle_rng{cfg.seed ^ 0x6A09E667F3BCC909ULL};
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<float> grads;
    const auto batch = static_cast<std::size_t>(cfg.batch_size);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[static_cast<std::size_t>(rng_below(shuffle_rng, i))]);
        }
        double weighted = 0.0;
        std::vector<Planar<float>> chunk;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            chunk.clear();
            for (std::size_t k = start; k < end; ++k) chunk.push_back(data[order[k]]);
            const double loss = loss_and_grads<float>(result.model, chunk, grads);
            weighted += loss * static_cast<double>(end - start);
            adam_step<float>(result.model, grads, opt, cfg);
        }
        const double mean_loss = weighted / static_cast<double>(order.size());
        result.epoch_losses.push_back(mean_loss);
        result.model.epochs_seen += 1;
        result.model.final_loss = mean_loss;
        if (on_epoch) on_epoch(epoch + 1, mean_loss);
    }
    return result;
}

ImageTensor load_model_input(const std::filesystem::path& path, const ArchDescriptor& arch) {
    ImageTensor img = load_image(path);
    if (img.channels() != arch.channels) {
        throw Error(path.string() + " has " + std::to_string(img.channels()) + " channels, model expects " +
                    std::to_string(arch.channels));
    }
    return resize_bilinear(img, arch.input_side, arch.input_side);
}

TrainResult train(const Manifest& manifest, const ArchDescriptor& arch, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    arch.validate();
    if (manifest.records.empty()) throw Error("training manifest is empty");
    std::vector<ImageTensor> images(manifest.size());
    parallel_for(manifest.size(), [&](std::size_t i) {
        images[i] = load_model_input(manifest.resolve(manifest.records[i]), arch);
    });
    return train_images(images, arch, cfg, on_epoch);
}

ErrorMap error_map(const AEModel& model, const ImageTensor& img) {
    check_image(model.arch, img);
    const auto input = to_planar<float>(img);
    const auto recon = forward_planar(model, input);
    const int side = model.arch.input_side;
    const int ch = model.arch.channels;
    const std::size_t plane = static_cast<std::size_t>(side) * side;
    std::vector<double> err(plane, 0.0);
    for (int c = 0; c < ch; ++c) {
        for (std::size_t p = 0; p < plane; ++p) {
            const double d = static_cast<double>(recon[c * plane + p]) - static_cast<double>(input[c * plane + p]);
            err[p] += d * d;
        }
    }
    for (auto& e : err) e /= ch;
    return ErrorMap(side, side, std::move(err));
}

// ------------------------------------------------------------------ model file

namespace {

constexpr char kMagic[4] = {'A', 'D', 'A', 'E'};

class ByteWriter {
public:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        bytes_.insert(bytes_.end(), b, b + n);
    }
    template <typename U>
    void le(U v) {
        using Bits = std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint64_t>;
        Bits bits;
        std::memcpy(&bits, &v, sizeof(U));
        for (std::size_t i = 0; i < sizeof(U); ++i) bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    template <typename U>
    U le() {
        using Bits = std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint64_t>;
        need(sizeof(U));
        Bits bits = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<Bits>(bytes_[pos_ + i]) << (8 * i);
        pos_ += sizeof(U);
        U v;
        std::memcpy(&v, &bits, sizeof(U));
        return v;
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw ModelFileError(ModelFileError::Kind::truncated, "model file is truncated");
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const AEModel& model) {
    ByteWriter w;
    w.raw(kMagic, 4);
    w.le<std::uint32_t>(kModelFormatVersion);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(model.arch.input_side));
    w.le<std::uint32_t>(static_cast<std::uint32_t>(model.arch.channels));
    for (int width : model.arch.widths) w.le<std::uint32_t>(static_cast<std::uint32_t>(width));
    w.le<std::uint32_t>(model.epochs_seen);
    w.le<double>(model.final_loss);
    w.le<std::uint64_t>(model.params.size());
    for (float p : model.params) w.le<float>(p);
    return w.take();
}

AEModel deserialize_model(const std::vector<std::uint8_t>& bytes) {
    using Kind = ModelFileError::Kind;
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw ModelFileError(Kind::bad_magic, "not an ADAE model file (bad magic)");
    }
    std::vector<std::uint8_t> body(bytes.begin() + 4, bytes.end());
    ByteReader r(body);
    const auto version = r.le<std::uint32_t>();
    if (version != kModelFormatVersion) {
        throw ModelFileError(Kind::version_mismatch, "model format version " + std::to_string(version) +
                                                         " is not supported (expected " +
                                                         std::to_string(kModelFormatVersion) + ")");
    }
    AEModel model;
    model.arch.input_side = static_cast<int>(r.le<std::uint32_t>());
    model.arch.channels = static_cast<int>(r.le<std::uint32_t>());
    for (auto& width : model.arch.widths) width = static_cast<int>(r.le<std::uint32_t>());
    model.epochs_seen = r.le<std::uint32_t>();
    model.final_loss = r.le<double>();
    const auto count = r.le<std::uint64_t>();
    try {
        model.arch.validate();
    } catch (const Error& e) {
        throw ModelFileError(Kind::invalid, std::string("model file has an invalid architecture: ") + e.what());
    }
    if (count != param_count(model.arch)) {
        throw ModelFileError(Kind::invalid, "model parameter count does not match its architecture");
    }
    if (r.remaining() < count * 4) throw ModelFileError(Kind::truncated, "model file is truncated");
    if (r.remaining() > count * 4) throw ModelFileError(Kind::invalid, "model file has trailing bytes");
    model.params.resize(count);
    for (auto& p : model.params) {
        p = r.le<float>();
        if (!std::isfinite(p)) throw ModelFileError(Kind::invalid, "model file contains non-finite weights");
    }
    return model;
}

void save_model(const AEModel& model, const std::filesystem::path& path) {
    try {
        write_file_bytes(path, serialize_model(model));
    } catch (const ImageIoError& e) {
        throw ModelFileError(ModelFileError::Kind::io, e.what());
    }
}

AEModel load_model(const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes;
    try {
        bytes = read_file_bytes(path);
    } catch (const ImageIoError& e) {
        throw ModelFileError(ModelFileError::Kind::io, e.what());
    }
    try {
        return deserialize_model(bytes);
    } catch (const ModelFileError& e) {
        throw ModelFileError(e.kind(), path.string() + ": " + e.what());
    }
}

template Planar<float> to_planar<float>(const ImageTensor&);
template Planar<double> to_planar<double>(const ImageTensor&);
template BasicModel<float> init_model_as<float>(const ArchDescriptor&, std::uint64_t);
template BasicModel<double> init_model_as<double>(const ArchDescriptor&, std::uint64_t);
template Planar<float> forward_planar<float>(const BasicModel<float>&, const Planar<float>&);
template Planar<double> forward_planar<double>(const BasicModel<double>&, const Planar<double>&);
template double loss_and_grads<float>(const BasicModel<float>&, std::span<const Planar<float>>, std::vector<float>&);
template double loss_and_grads<double>(const BasicModel<double>&, std::span<const Planar<double>>,
                                       std::vector<double>&);
template void adam_step<float>(BasicModel<float>&, std::span<const float>, OptState<float>&, const TrainConfig&);
template void adam_step<double>(BasicModel<double>&, std::span<const double>, OptState<double>&, const TrainConfig&);

}  // namespace autodetect::ae
