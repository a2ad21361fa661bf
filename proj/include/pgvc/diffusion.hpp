#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pgvc/video.hpp"

namespace pgvc {

/// Linear-beta DDPM schedule. Timesteps are 1-based: index t-1 holds step t.
struct NoiseSchedule {
    std::vector<double> betas;
    std::vector<double> alphas;
    std::vector<double> alpha_bars;

    int steps() const { return static_cast<int>(betas.size()); }
    double beta(int t) const { return betas.at(t - 1); }
    double alpha(int t) const { return alphas.at(t - 1); }
    /// alpha_bar(0) is 1 by convention.
    double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bars.at(t - 1); }
};

NoiseSchedule make_schedule(int steps, double beta_start, double beta_end);

/// N x C x H x W block of scalars (frames, channels, rows, columns).
struct LatentWindow {
    int frames = 0;
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    LatentWindow() = default;
    LatentWindow(int frames, int channels, int height, int width, double fill = 0.0);

    std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const LatentWindow& o) const {
        return frames == o.frames && channels == o.channels && height == o.height && width == o.width;
    }
    double& at(int n, int c, int y, int x) {
        return data[((static_cast<std::size_t>(n) * channels + c) * height + y) * width + x];
    }
    double at(int n, int c, int y, int x) const {
        return data[((static_cast<std::size_t>(n) * channels + c) * height + y) * width + x];
    }

    friend bool operator==(const LatentWindow&, const LatentWindow&) = default;
};

/// Planar window of `count` frames starting at `start`.
LatentWindow window_from_video(const Video& video, std::size_t start, int count);
/// Frame `n` of a 1- or 3-channel window, clamped to [0,1].
Frame frame_from_window(const LatentWindow& window, int n);

/// sqrt(alpha_bar_t) * z0 + sqrt(1 - alpha_bar_t) * eps.
LatentWindow forward_noise(const LatentWindow& z0, int t, const LatentWindow& eps, const NoiseSchedule& schedule);

/// Channel concat per frame, gray channel first.
LatentWindow assemble_input(const LatentWindow& gray, const LatentWindow& noisy);

struct SplitInput {
    LatentWindow gray;
    LatentWindow noisy;
};
SplitInput disassemble_input(const LatentWindow& assembled);

/// Adds emb[c] at every (frame, row, column) of channel c.
LatentWindow fuse_palette(const LatentWindow& features, std::span<const double> embedding);

}  // namespace pgvc
