#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "pgvc/network.hpp"

namespace pgvc {

/// Fixed-length segments covering a video; the last start is clamped so every
/// segment spans a full window.
struct WindowPlan {
    int video_len = 0;
    int window = 0;
    int overlap = 0;
    std::vector<int> starts;

    /// Frames per segment: min(window, video_len).
    int segment_length() const { return std::min(window, video_len); }
};

WindowPlan plan_windows(int video_len, int window, int overlap);

/// Noise owned by one frame: its initial z_T (3 x H x W, planar) and the seed of its
/// per-step ancestral noise stream.
struct FrameNoise {
    std::vector<double> initial;
    std::uint64_t step_seed = 0;
};

/// Noise of video frame `frame` under `seed`: standard-normal z_T plus its step stream seed.
FrameNoise make_frame_noise(std::uint64_t seed, int frame, int height, int width);

/// Runs the ancestral DDPM loop for one window on a prepared denoiser.
class WindowSampler {
public:
    explicit WindowSampler(const Checkpoint& ckpt);

    /// gray: N x 1 x H x W. Returns the clamped N x 3 x H x W color window.
    LatentWindow sample(const LatentWindow& gray, const Palette& palette, const Frame& reference,
                        std::span<const FrameNoise> noise, const NoiseSchedule& schedule);

private:
    Parameters<float> params_;
    Denoiser<float> net_;
};

LatentWindow sample_window(const LatentWindow& gray, const Palette& palette, const Frame& reference,
                           const Checkpoint& ckpt, std::span<const FrameNoise> noise, const NoiseSchedule& schedule);

enum class NoiseMode {
    /// One noise tensor per video frame; overlapping segments see identical noise.
    shared,
    /// Every segment draws its own noise.
    independent,
};

struct ProgressiveOptions {
    int window = 8;
    int overlap = 2;
    std::uint64_t seed = 0;
    NoiseMode noise = NoiseMode::shared;
};

struct ProgressiveResult {
    Video video;
    WindowPlan plan;
    /// Per-segment outputs before averaging, N x 3 x H x W.
    std::vector<LatentWindow> segments;
};

ProgressiveResult progressive_colorize_detailed(const Video& gray, const Palette& palette, const Frame& reference,
                                                const Checkpoint& ckpt, const ProgressiveOptions& options);

/// Colorizes a 1-channel video window by window and averages overlapped frames.
Video progressive_colorize(const Video& gray, const Palette& palette, const Frame& reference, const Checkpoint& ckpt,
                           const ProgressiveOptions& options);

/// Mean absolute difference between consecutive segments on the frames they share.
/// Zero when no frame is covered twice.
double overlap_discrepancy(const ProgressiveResult& result);

}  // namespace pgvc
