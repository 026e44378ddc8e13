#pragma once

#include "autodetect/error.hpp"
#include "autodetect/image.hpp"
#include "autodetect/manifest.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

namespace autodetect::ae {

/// Three stride-2 3x3 conv stages (ReLU) and a mirrored decoder of
/// nearest-neighbour x2 upsampling followed by a stride-1 3x3 conv, with
/// ReLU between stages and a sigmoid on the output.
struct ArchDescriptor {
    int input_side = 64;
    int channels = 3;
    std::array<int, 3> widths{16, 32, 64};

    /// Throws Error unless the side is a positive multiple of 8, channels is
    /// 1 or 3 and every width is at least 1.
    void validate() const;

    friend bool operator==(const ArchDescriptor&, const ArchDescriptor&) = default;
};

constexpr int kLayers = 6;

struct LayerShape {
    int in_channels = 0;
    int out_channels = 0;
    int stride = 1;
    bool upsample = false;  // input is upsampled x2 before the conv
    std::size_t weight_offset = 0;  // [out][in][3][3]
    std::size_t bias_offset = 0;    // [out]
};

std::array<LayerShape, kLayers> layer_shapes(const ArchDescriptor& arch);
std::size_t param_count(const ArchDescriptor& arch);

/// Autoencoder parameters in one flat vector, layers in forward order and
/// each layer's kernel followed by its bias.
template <typename T>
struct BasicModel {
    ArchDescriptor arch;
    std::vector<T> params;
    std::uint32_t epochs_seen = 0;
    double final_loss = 0.0;

    friend bool operator==(const BasicModel&, const BasicModel&) = default;
};

using AEModel = BasicModel<float>;

/// Planar (channel-first) sample in the model's scalar type.
template <typename T>
using Planar = std::vector<T>;

template <typename T>
Planar<T> to_planar(const ImageTensor& img);

/// Kernels uniform in +-sqrt(6 / fan_in), fan_in = in_channels * 9, drawn
/// in layer order from a splitmix64 stream seeded by `seed`; biases zero.
template <typename T>
BasicModel<T> init_model_as(const ArchDescriptor& arch, std::uint64_t seed);
AEModel init_model(const ArchDescriptor& arch, std::uint64_t seed);

template <typename T>
Planar<T> forward_planar(const BasicModel<T>& model, const Planar<T>& input);

/// Reconstructions for a batch; every image must be input_side square with
/// arch.channels channels.
std::vector<ImageTensor> forward(const AEModel& model, std::span<const ImageTensor> batch);

/// Mean squared error over batch * H * W * C and its exact gradient with
/// respect to every parameter (same layout as model.params). Per-sample
/// gradients are computed in parallel and summed in sample order.
template <typename T>
double loss_and_grads(const BasicModel<T>& model, std::span<const Planar<T>> batch, std::vector<T>& grads);

double loss_and_grads(const AEModel& model, std::span<const ImageTensor> batch, std::vector<float>& grads);

struct TrainConfig {
    int epochs = 200;
    double learning_rate = 1e-4;
    int batch_size = 64;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

template <typename T>
struct OptState {
    std::vector<T> m;
    std::vector<T> v;
    std::uint64_t step = 0;
};

/// Adam with bias correction. A fresh (empty) state is sized on first use.
template <typename T>
void adam_step(BasicModel<T>& model, std::span<const T> grads, OptState<T>& opt, const TrainConfig& cfg);

struct TrainResult {
    AEModel model;
    std::vector<double> epoch_losses;  // mean per-sample MSE of each epoch
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

/// Trains from init_model(arch, cfg.seed). Each epoch reshuffles with a
/// stream derived from cfg.seed and runs ceil(N / batch) Adam steps.
TrainResult train_images(std::span<const ImageTensor> images, const ArchDescriptor& arch, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {});

/// Loads every manifest image, resizes it to arch.input_side and trains.
TrainResult train(const Manifest& manifest, const ArchDescriptor& arch, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Channel-mean squared reconstruction error per pixel.
ErrorMap error_map(const AEModel& model, const ImageTensor& img);

/// Loads an image and resizes it to the model input side.
ImageTensor load_model_input(const std::filesystem::path& path, const ArchDescriptor& arch);

class ModelFileError : public Error {
public:
    enum class Kind { io, bad_magic, version_mismatch, truncated, invalid };

    ModelFileError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// "ADAE" magic, u32 version, u32 input side, u32 channels, 3 x u32 widths,
/// u32 epochs seen, f64 final loss, u64 parameter count, then the
/// parameters as little-endian f32.
std::vector<std::uint8_t> serialize_model(const AEModel& model);
AEModel deserialize_model(const std::vector<std::uint8_t>& bytes);
void save_model(const AEModel& model, const std::filesystem::path& path);
AEModel load_model(const std::filesystem::path& path);

}  // namespace autodetect::ae
