#include "pgvc/sampler.hpp"

#include <cmath>

#include "pgvc/error.hpp"
#include "pgvc/rng.hpp"

namespace pgvc {

WindowPlan plan_windows(int video_len, int window, int overlap) {
    if (video_len < 1) throw InvalidArgument("video must have at least one frame");
    if (window < 1) throw InvalidArgument("window must be >= 1");
    if (overlap < 0 || overlap >= window) throw InvalidArgument("overlap must satisfy 0 <= overlap < window");
    WindowPlan plan{video_len, window, overlap, {}};
    if (video_len <= window) {
        plan.starts = {0};
        return plan;
    }
    const int stride = window - overlap;
    for (int s = 0;; s += stride) {
        if (s + window >= video_len) {
            plan.starts.push_back(video_len - window);
            break;
        }
        plan.starts.push_back(s);
    }
    return plan;
}

FrameNoise make_frame_noise(std::uint64_t seed, int frame, int height, int width) {
    FrameNoise noise;
    seed = derive_seed(seed, static_cast<std::uint64_t>(frame));
    Rng rng(derive_seed(seed, 0x1));
    noise.initial.resize(3 * static_cast<std::size_t>(height) * width);
    for (double& v : noise.initial) v = rng.normal();
    noise.step_seed = derive_seed(seed, 0x2);
    return noise;
}

WindowSampler::WindowSampler(const Checkpoint& ckpt)
    : params_(ckpt.params), net_(ckpt.config) {}

LatentWindow WindowSampler::sample(const LatentWindow& gray, const Palette& palette, const Frame& reference,
                                   std::span<const FrameNoise> noise, const NoiseSchedule& schedule) {
    if (gray.channels != 1) throw InvalidArgument("sample_window expects a 1-channel gray window");
    if (noise.size() != static_cast<std::size_t>(gray.frames))
        throw InvalidArgument("sample_window needs one noise tensor per frame");
    const int N = gray.frames;
    const std::size_t P = gray.plane();
    for (const FrameNoise& fn : noise) {
        if (fn.initial.size() != 3 * P) throw InvalidArgument("frame noise has the wrong size");
    }

    LatentWindow z(N, 3, gray.height, gray.width);
    for (int n = 0; n < N; ++n) std::copy(noise[n].initial.begin(), noise[n].initial.end(), z.data.begin() + n * 3 * P);

    std::vector<float> input(static_cast<std::size_t>(N) * 4 * P);
    for (int n = 0; n < N; ++n)
        for (std::size_t i = 0; i < P; ++i) input[n * 4 * P + i] = static_cast<float>(gray.data[n * P + i]);

    for (int t = schedule.steps(); t >= 1; --t) {
        for (int n = 0; n < N; ++n)
            for (std::size_t i = 0; i < 3 * P; ++i) input[n * 4 * P + P + i] = static_cast<float>(z.data[n * 3 * P + i]);
        const auto eps = net_.forward(params_, input, N, gray.height, gray.width, {t, palette, reference});

        const double alpha = schedule.alpha(t);
        const double beta = schedule.beta(t);
        const double ab = schedule.alpha_bar(t);
        const double ab_prev = schedule.alpha_bar(t - 1);
        const double coef = beta / std::sqrt(1.0 - ab);
        const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
        const double sigma = t > 1 ? std::sqrt(beta * (1.0 - ab_prev) / (1.0 - ab)) : 0.0;
        for (int n = 0; n < N; ++n) {
            double* zn = z.data.data() + n * 3 * P;
            const float* en = eps.data() + n * 3 * P;
            if (t > 1) {
                Rng xi(derive_seed(noise[n].step_seed, static_cast<std::uint64_t>(t)));
                for (std::size_t i = 0; i < 3 * P; ++i) zn[i] = inv_sqrt_alpha * (zn[i] - coef * en[i]) + sigma * xi.normal();
            } else {
                for (std::size_t i = 0; i < 3 * P; ++i) zn[i] = inv_sqrt_alpha * (zn[i] - coef * en[i]);
            }
        }
    }
    for (double& v : z.data) v = std::clamp(v, 0.0, 1.0);
    return z;
}

LatentWindow sample_window(const LatentWindow& gray, const Palette& palette, const Frame& reference,
                           const Checkpoint& ckpt, std::span<const FrameNoise> noise, const NoiseSchedule& schedule) {
    WindowSampler sampler(ckpt);
    return sampler.sample(gray, palette, reference, noise, schedule);
}

ProgressiveResult progressive_colorize_detailed(const Video& gray, const Palette& palette, const Frame& reference,
                                                const Checkpoint& ckpt, const ProgressiveOptions& options) {
    if (gray.channels() != 1) throw InvalidArgument("progressive_colorize expects a 1-channel video");
    const int len = static_cast<int>(gray.size());
    ProgressiveResult result;
    result.plan = plan_windows(len, options.window, options.overlap);
    const int seg_len = result.plan.segment_length();
    const int H = gray.height(), W = gray.width();
    const std::size_t P = static_cast<std::size_t>(H) * W;
    const NoiseSchedule schedule = ckpt.config.schedule();

    std::vector<FrameNoise> global;
    if (options.noise == NoiseMode::shared) {
        global.reserve(len);
        for (int f = 0; f < len; ++f) global.push_back(make_frame_noise(options.seed, f, H, W));
    }

    WindowSampler sampler(ckpt);
    std::vector<double> sum(static_cast<std::size_t>(len) * 3 * P, 0.0);
    std::vector<int> count(len, 0);
    for (std::size_t s = 0; s < result.plan.starts.size(); ++s) {
        const int start = result.plan.starts[s];
        std::vector<FrameNoise> slice;
        for (int n = 0; n < seg_len; ++n) {
            slice.push_back(options.noise == NoiseMode::shared
                                ? global[start + n]
                                : make_frame_noise(derive_seed(options.seed, 0x5e9 + s), start + n, H, W));
        }
        LatentWindow out =
            sampler.sample(window_from_video(gray, start, seg_len), palette, reference, slice, schedule);
        for (int n = 0; n < seg_len; ++n) {
            double* dst = sum.data() + static_cast<std::size_t>(start + n) * 3 * P;
            const double* src = out.data.data() + static_cast<std::size_t>(n) * 3 * P;
            for (std::size_t i = 0; i < 3 * P; ++i) dst[i] += src[i];
            ++count[start + n];
        }
        result.segments.push_back(std::move(out));
    }

    std::vector<Frame> frames;
    frames.reserve(len);
    for (int f = 0; f < len; ++f) {
        std::vector<double> px(3 * P);
        const double* src = sum.data() + static_cast<std::size_t>(f) * 3 * P;
        for (std::size_t i = 0; i < P; ++i)
            for (int c = 0; c < 3; ++c) px[i * 3 + c] = std::clamp(src[c * P + i] / count[f], 0.0, 1.0);
        frames.emplace_back(W, H, 3, std::move(px));
    }
    result.video = Video(std::move(frames), gray.fps());
    return result;
}

Video progressive_colorize(const Video& gray, const Palette& palette, const Frame& reference, const Checkpoint& ckpt,
                           const ProgressiveOptions& options) {
    return progressive_colorize_detailed(gray, palette, reference, ckpt, options).video;
}

double overlap_discrepancy(const ProgressiveResult& result) {
    const auto& starts = result.plan.starts;
    const int seg_len = result.plan.segment_length();
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s + 1 < starts.size(); ++s) {
        const int a0 = starts[s], b0 = starts[s + 1];
        const LatentWindow& a = result.segments[s];
        const LatentWindow& b = result.segments[s + 1];
        const std::size_t fsz = 3 * a.plane();
        for (int f = b0; f < a0 + seg_len; ++f) {
            const double* pa = a.data.data() + static_cast<std::size_t>(f - a0) * fsz;
            const double* pb = b.data.data() + static_cast<std::size_t>(f - b0) * fsz;
            for (std::size_t i = 0; i < fsz; ++i) total += std::abs(pa[i] - pb[i]);
            count += fsz;
        }
    }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
}

}  // namespace pgvc
