#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pgvc/aligned.hpp"
#include "pgvc/diffusion.hpp"
#include "pgvc/palette.hpp"
#include "pgvc/video.hpp"

namespace pgvc {

struct NetworkConfig {
    int base_channels = 32;
    int window_frames = 8;
    int height = 32;
    int width = 32;
    int timesteps = 200;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    int palette_dim = 15;

    void validate() const;
    NoiseSchedule schedule() const { return make_schedule(timesteps, beta_start, beta_end); }

    friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct TensorSpec {
    std::string name;
    std::vector<int> shape;

    std::size_t numel() const;
};

/// Every learnable tensor of the denoiser, in checkpoint order.
std::vector<TensorSpec> parameter_specs(const NetworkConfig& config);

/// Learnable weights. Conv kernels are [out][in][3][3]; matrices are row-major [out][in].
template <typename Scalar>
struct Parameters {
    AlignedVector<Scalar> in_w, in_b;          // 4 -> C
    AlignedVector<Scalar> palette_proj;        // C x 15, no bias
    AlignedVector<Scalar> time_proj;           // C x 2C
    AlignedVector<Scalar> ref_w, ref_b;        // reference encoder, 3 -> C
    AlignedVector<Scalar> body1_w, body1_b;    // C -> C
    AlignedVector<Scalar> temporal_dw;         // C x 3 depthwise over frames
    AlignedVector<Scalar> temporal_pw;         // C x C pointwise
    AlignedVector<Scalar> temporal_b;          // C
    AlignedVector<Scalar> body2_w, body2_b;    // C -> C
    AlignedVector<Scalar> out_w, out_b;        // C -> 3

    /// Visits tensors in `parameter_specs` order.
    template <typename F>
    void for_each(F&& f) {
        f(in_w); f(in_b); f(palette_proj); f(time_proj); f(ref_w); f(ref_b);
        f(body1_w); f(body1_b); f(temporal_dw); f(temporal_pw); f(temporal_b);
        f(body2_w); f(body2_b); f(out_w); f(out_b);
    }
    template <typename F>
    void for_each(F&& f) const {
        const_cast<Parameters*>(this)->for_each([&](AlignedVector<Scalar>& v) { f(static_cast<const AlignedVector<Scalar>&>(v)); });
    }

    friend bool operator==(const Parameters&, const Parameters&) = default;
};

template <typename Scalar>
Parameters<Scalar> zero_parameters(const NetworkConfig& config);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
template <typename Scalar>
Parameters<Scalar> init_parameters(const NetworkConfig& config, std::uint64_t seed);

template <typename To, typename From>
Parameters<To> cast_parameters(const Parameters<From>& p);

struct TrainingMetadata {
    std::int64_t steps = 0;
    double final_loss = 0.0;
    std::uint64_t seed = 0;

    friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

struct Checkpoint {
    NetworkConfig config;
    Parameters<float> params;
    TrainingMetadata metadata;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

/// C-vector W_proj * flatten(palette). No bias, so the all-black palette maps to zero.
std::vector<double> project_palette(const Palette& palette, std::span<const double> proj, int channels);
/// Same product on a raw 15-vector.
std::vector<double> project_palette_vector(std::span<const double> flat, std::span<const double> proj, int channels);

/// Interleaved sin/cos encoding of t, length 2*channels.
std::vector<double> timestep_encoding(int t, int channels);

/// Conditioning inputs for one denoiser pass.
struct Conditioning {
    int timestep = 1;
    Palette palette;
    /// Reference frame, RGB.
    Frame reference;
};

template <typename Scalar>
struct ForwardCache;

/// Forward/backward evaluator of the toy spatiotemporal denoiser. Holds scratch buffers,
/// so a single instance must not be shared across threads.
template <typename Scalar>
class Denoiser {
public:
    explicit Denoiser(const NetworkConfig& config);
    ~Denoiser();
    Denoiser(Denoiser&&) noexcept;
    Denoiser& operator=(Denoiser&&) noexcept;

    const NetworkConfig& config() const { return config_; }

    /// input: N x 4 x H x W; returns N x 3 x H x W predicted noise.
    AlignedVector<Scalar> forward(const Parameters<Scalar>& params, std::span<const Scalar> input, int frames,
                                int height, int width, const Conditioning& cond, bool keep_cache = false);

    /// Gradients of sum(grad_output * output) for the last cached forward pass.
    Parameters<Scalar> backward(const Parameters<Scalar>& params, std::span<const Scalar> grad_output);

private:
    NetworkConfig config_;
    std::unique_ptr<ForwardCache<Scalar>> cache_;
};

/// Network epsilon prediction on a 4-channel assembled window.
LatentWindow predict_eps(const LatentWindow& z_in, const Conditioning& cond, const Checkpoint& ckpt);

struct TrainingExample {
    LatentWindow color;   // N x 3 x H x W clean target
    LatentWindow gray;    // N x 1 x H x W
    Frame reference;
    Palette palette;
};

struct LossResult {
    double loss = 0.0;
    Parameters<double> grads;
};

/// Mean squared error between eps and the network prediction on forward_noise(color, t, eps).
double training_loss(const TrainingExample& example, int t, const LatentWindow& eps,
                     const Parameters<double>& params, const NetworkConfig& config);

/// Loss and exact reverse-mode gradients for every tensor.
LossResult loss_and_gradients(const TrainingExample& example, int t, const LatentWindow& eps,
                              const Parameters<double>& params, const NetworkConfig& config);

struct TrainOptions {
    std::int64_t steps = 2000;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    int warmup_steps = 100;
    /// Windows per step; the loss is the batch mean.
    int batch_size = 1;
    /// Probability of replacing the palette by the all-black (null) palette.
    double palette_dropout = 0.0;
    /// Called every `log_every` steps with (step, loss) when set.
    std::function<void(std::int64_t, double)> on_log;
    int log_every = 100;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<double> losses;
};

/// Adam training on (color, gray) clips. Deterministic in `options.seed`.
TrainResult train(std::span<const SynthClip> dataset, const NetworkConfig& config, const TrainOptions& options);

/// Gray frame replicated to RGB; the reference-encoder input used in training and sampling.
Frame reference_from_gray(const Frame& gray);

}  // namespace pgvc
