#include "pgvc/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "pgvc/error.hpp"

namespace pgvc {

NoiseSchedule make_schedule(int steps, double beta_start, double beta_end) {
    if (steps < 1) throw InvalidArgument("schedule needs at least one timestep");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw InvalidArgument("schedule requires 0 < beta_start <= beta_end < 1");
    NoiseSchedule s;
    s.betas.resize(steps);
    s.alphas.resize(steps);
    s.alpha_bars.resize(steps);
    double running = 1.0;
    for (int i = 0; i < steps; ++i) {
        const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
        s.betas[i] = beta_start + (beta_end - beta_start) * frac;
        s.alphas[i] = 1.0 - s.betas[i];
        running *= s.alphas[i];
        s.alpha_bars[i] = running;
    }
    return s;
}

LatentWindow::LatentWindow(int frames, int channels, int height, int width, double fill)
    : frames(frames), channels(channels), height(height), width(width) {
    if (frames < 1 || channels < 1 || height < 1 || width < 1)
        throw InvalidArgument("latent window dimensions must be positive");
    data.assign(static_cast<std::size_t>(frames) * channels * height * width, fill);
}

LatentWindow window_from_video(const Video& video, std::size_t start, int count) {
    if (count < 1 || start + static_cast<std::size_t>(count) > video.size())
        throw InvalidArgument("window exceeds video length");
    const int ch = video.channels();
    LatentWindow w(count, ch, video.height(), video.width());
    const std::size_t plane = w.plane();
    for (int n = 0; n < count; ++n) {
        const auto src = video[start + n].data();
        for (std::size_t i = 0; i < plane; ++i)
            for (int c = 0; c < ch; ++c) w.data[(static_cast<std::size_t>(n) * ch + c) * plane + i] = src[i * ch + c];
    }
    return w;
}

Frame frame_from_window(const LatentWindow& window, int n) {
    if (window.channels != 1 && window.channels != 3) throw InvalidArgument("window must have 1 or 3 channels");
    if (n < 0 || n >= window.frames) throw InvalidArgument("frame index outside window");
    const int ch = window.channels;
    const std::size_t plane = window.plane();
    std::vector<double> data(plane * ch);
    for (std::size_t i = 0; i < plane; ++i)
        for (int c = 0; c < ch; ++c)
            data[i * ch + c] = std::clamp(window.data[(static_cast<std::size_t>(n) * ch + c) * plane + i], 0.0, 1.0);
    return Frame(window.width, window.height, ch, std::move(data));
}

LatentWindow forward_noise(const LatentWindow& z0, int t, const LatentWindow& eps, const NoiseSchedule& schedule) {
    if (!z0.same_shape(eps)) throw InvalidArgument("forward_noise: signal and noise shapes differ");
    if (t < 1 || t > schedule.steps()) throw InvalidArgument("forward_noise: timestep out of range");
    const double a = std::sqrt(schedule.alpha_bar(t));
    const double b = std::sqrt(1.0 - schedule.alpha_bar(t));
    LatentWindow out = z0;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = a * z0.data[i] + b * eps.data[i];
    return out;
}

LatentWindow assemble_input(const LatentWindow& gray, const LatentWindow& noisy) {
    if (gray.channels != 1 || noisy.channels != 3) throw InvalidArgument("assemble_input expects 1 + 3 channels");
    if (gray.frames != noisy.frames || gray.height != noisy.height || gray.width != noisy.width)
        throw InvalidArgument("assemble_input: gray and noisy windows differ in shape");
    LatentWindow out(gray.frames, 4, gray.height, gray.width);
    const std::size_t plane = gray.plane();
    for (int n = 0; n < gray.frames; ++n) {
        std::copy_n(&gray.data[n * plane], plane, &out.data[(n * 4) * plane]);
        std::copy_n(&noisy.data[n * 3 * plane], 3 * plane, &out.data[(n * 4 + 1) * plane]);
    }
    return out;
}

SplitInput disassemble_input(const LatentWindow& in) {
    if (in.channels != 4) throw InvalidArgument("disassemble_input expects 4 channels");
    SplitInput out{LatentWindow(in.frames, 1, in.height, in.width), LatentWindow(in.frames, 3, in.height, in.width)};
    const std::size_t plane = in.plane();
    for (int n = 0; n < in.frames; ++n) {
        std::copy_n(&in.data[(n * 4) * plane], plane, &out.gray.data[n * plane]);
        std::copy_n(&in.data[(n * 4 + 1) * plane], 3 * plane, &out.noisy.data[n * 3 * plane]);
    }
    return out;
}

LatentWindow fuse_palette(const LatentWindow& features, std::span<const double> embedding) {
    if (embedding.size() != static_cast<std::size_t>(features.channels))
        throw InvalidArgument("fuse_palette: embedding length differs from channel count");
    LatentWindow out = features;
    const std::size_t plane = features.plane();
    for (int n = 0; n < features.frames; ++n) {
        for (int c = 0; c < features.channels; ++c) {
            double* p = &out.data[(static_cast<std::size_t>(n) * features.channels + c) * plane];
            for (std::size_t i = 0; i < plane; ++i) p[i] += embedding[c];
        }
    }
    return out;
}

}  // namespace pgvc
