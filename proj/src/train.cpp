#include <cmath>
#include <map>
#include <sstream>

#include "pgvc/error.hpp"
#include "pgvc/network.hpp"
#include "pgvc/rng.hpp"

namespace pgvc {

namespace {

struct AdamState {
    std::vector<std::vector<float>> m, v;
};

}  // namespace

TrainResult train(std::span<const SynthClip> dataset, const NetworkConfig& config, const TrainOptions& options) {
    config.validate();
    if (dataset.empty()) throw InvalidArgument("training dataset is empty");
    if (options.steps < 0) throw InvalidArgument("steps must be >= 0");
    if (options.batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    const int N = config.window_frames;
    for (const SynthClip& clip : dataset) {
        if (clip.color.size() < static_cast<std::size_t>(N))
            throw InvalidArgument("training clip shorter than window_frames (" + std::to_string(N) + ")");
        if (clip.color.channels() != 3 || clip.gray.channels() != 1 || clip.gray.size() != clip.color.size())
            throw InvalidArgument("training clips need matching RGB and gray videos");
        if (clip.color.width() != config.width || clip.color.height() != config.height)
            throw InvalidArgument("training clip size differs from the network config");
    }

    TrainResult result;
    Parameters<float> params = init_parameters<float>(config, derive_seed(options.seed, 0x1417));
    const NoiseSchedule schedule = config.schedule();
    Denoiser<float> net(config);
    Rng rng(derive_seed(options.seed, 0x5a3b));

    AdamState adam;
    params.for_each([&](AlignedVector<float>& p) {
        adam.m.emplace_back(p.size(), 0.0f);
        adam.v.emplace_back(p.size(), 0.0f);
    });
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

    std::map<std::pair<std::size_t, std::size_t>, Palette> palette_cache;
    const std::size_t P = static_cast<std::size_t>(config.height) * config.width;

    const int batch = options.batch_size;
    std::vector<float> eps, input, grad;
    for (std::int64_t step = 0; step < options.steps; ++step) {
        Parameters<float> g = zero_parameters<float>(config);
        double loss = 0.0;
        for (int b = 0; b < batch; ++b) {
            const std::size_t clip_idx = rng.index(dataset.size());
            const SynthClip& clip = dataset[clip_idx];
            const std::size_t len = clip.color.size();
            const std::size_t start = rng.index(len - N + 1);
            const std::size_t ref_idx = rng.index(len);
            const std::size_t pal_idx = rng.index(len);
            const bool drop_palette = rng.uniform() < options.palette_dropout;
            const int t = static_cast<int>(rng.integer(1, schedule.steps()));

            auto key = std::make_pair(clip_idx, pal_idx);
            auto it = palette_cache.find(key);
            if (it == palette_cache.end())
                it = palette_cache.emplace(key, kmeans_extract(clip.color[pal_idx], derive_seed(clip_idx, pal_idx))).first;
            const Palette palette = drop_palette ? Palette::black() : it->second;

            const LatentWindow color = window_from_video(clip.color, start, N);
            const LatentWindow gray = window_from_video(clip.gray, start, N);
            const double sa = std::sqrt(schedule.alpha_bar(t));
            const double sb = std::sqrt(1.0 - schedule.alpha_bar(t));

            eps.resize(color.size());
            for (float& e : eps) e = static_cast<float>(rng.normal());
            input.resize(static_cast<std::size_t>(N) * 4 * P);
            for (int n = 0; n < N; ++n) {
                for (std::size_t i = 0; i < P; ++i) input[(n * 4) * P + i] = static_cast<float>(gray.data[n * P + i]);
                for (int c = 0; c < 3; ++c) {
                    for (std::size_t i = 0; i < P; ++i) {
                        const std::size_t src = (static_cast<std::size_t>(n) * 3 + c) * P + i;
                        input[(n * 4 + 1 + c) * P + i] = static_cast<float>(sa * color.data[src] + sb * eps[src]);
                    }
                }
            }

            const Conditioning cond{t, palette, reference_from_gray(clip.gray[ref_idx])};
            const auto pred = net.forward(params, input, N, config.height, config.width, cond, true);
            grad.resize(pred.size());
            double sample_loss = 0.0;
            const float scale = 2.0f / static_cast<float>(pred.size() * batch);
            for (std::size_t i = 0; i < pred.size(); ++i) {
                const float r = pred[i] - eps[i];
                sample_loss += static_cast<double>(r) * r;
                grad[i] = scale * r;
            }
            sample_loss /= static_cast<double>(pred.size());
            if (!std::isfinite(sample_loss)) {
                std::ostringstream msg;
                msg << "training diverged at step " << step << " (t=" << t << ", loss=" << sample_loss
                    << "); try a smaller learning rate";
                throw Error(msg.str());
            }
            loss += sample_loss / batch;

            Parameters<float> gb = net.backward(params, grad);
            std::vector<AlignedVector<float>*> dst;
            g.for_each([&](AlignedVector<float>& v) { dst.push_back(&v); });
            std::size_t ti = 0;
            gb.for_each([&](AlignedVector<float>& v) {
                auto& d = *dst[ti++];
                for (std::size_t i = 0; i < v.size(); ++i) d[i] += v[i];
            });
        }
        result.losses.push_back(loss);

        const double warm = options.warmup_steps > 0
                                ? std::min(1.0, static_cast<double>(step + 1) / options.warmup_steps)
                                : 1.0;
        const double lr = options.lr * warm;
        const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step + 1));
        const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step + 1));
        std::vector<AlignedVector<float>*> grads;
        g.for_each([&](AlignedVector<float>& v) { grads.push_back(&v); });
        std::size_t ti = 0;
        params.for_each([&](AlignedVector<float>& p) {
            auto& m = adam.m[ti];
            auto& v = adam.v[ti];
            const auto& gr = *grads[ti];
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[i] = static_cast<float>(kBeta1 * m[i] + (1.0 - kBeta1) * gr[i]);
                v[i] = static_cast<float>(kBeta2 * v[i] + (1.0 - kBeta2) * gr[i] * gr[i]);
                const double mh = m[i] / bc1;
                const double vh = v[i] / bc2;
                p[i] = static_cast<float>(p[i] - lr * mh / (std::sqrt(vh) + kEps));
            }
            ++ti;
        });

        if (options.on_log && options.log_every > 0 && (step + 1) % options.log_every == 0)
            options.on_log(step + 1, loss);
    }

    result.checkpoint.config = config;
    result.checkpoint.params = std::move(params);
    result.checkpoint.metadata.steps = options.steps;
    result.checkpoint.metadata.final_loss = result.losses.empty() ? 0.0 : result.losses.back();
    result.checkpoint.metadata.seed = options.seed;
    return result;
}

}  // namespace pgvc
