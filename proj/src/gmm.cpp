#include "pgvc/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "pgvc/error.hpp"
#include "pgvc/rng.hpp"

namespace pgvc {

namespace {

// log N(x; mean, diag(var))
double log_gaussian(const Rgb& x, const Rgb& mean, const Rgb& var) {
    double acc = 0.0;
    for (int c = 0; c < 3; ++c) {
        const double d = x[c] - mean[c];
        acc += std::log(2.0 * std::numbers::pi * var[c]) + d * d / var[c];
    }
    return -0.5 * acc;
}

double log_sum_exp(std::span<const double> v) {
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

// Per-pixel log(w_k) + log N_k into `scratch`; returns the pixel log density.
double joint_log(const GmmModel& model, const Rgb& x, std::vector<double>& scratch) {
    const std::size_t k = model.components();
    scratch.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        scratch[j] = model.weights[j] > 0.0
                         ? std::log(model.weights[j]) + log_gaussian(x, model.means[j], model.variances[j])
                         : -std::numeric_limits<double>::infinity();
    }
    return log_sum_exp(scratch);
}

}  // namespace

void GmmModel::validate() const {
    if (weights.empty()) throw InvalidArgument("GMM needs at least one component");
    if (means.size() != weights.size() || variances.size() != weights.size())
        throw InvalidArgument("GMM component arrays differ in length");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw InvalidArgument("GMM weights must be non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("GMM weights must sum to 1");
    for (const Rgb& v : variances) {
        for (double x : v) {
            if (!(x >= kGmmVarianceFloor)) throw InvalidArgument("GMM variance below floor");
        }
    }
}

std::vector<Rgb> variance_filter(std::span<const Rgb> pixels, double threshold) {
    std::vector<Rgb> kept;
    for (const Rgb& p : pixels) {
        const double mean = (p[0] + p[1] + p[2]) / 3.0;
        const double var =
            ((p[0] - mean) * (p[0] - mean) + (p[1] - mean) * (p[1] - mean) + (p[2] - mean) * (p[2] - mean)) / 3.0;
        if (var >= threshold) kept.push_back(p);
    }
    return kept;
}

std::vector<Rgb> collect_training_pixels(std::span<const Video> dataset, int frames_per_video,
                                         std::uint64_t seed, double threshold) {
    if (dataset.empty()) throw InvalidArgument("GMM training needs a non-empty dataset");
    if (frames_per_video < 1) throw InvalidArgument("frames_per_video must be >= 1");
    Rng rng(seed);
    std::vector<Rgb> pixels;
    for (const Video& video : dataset) {
        if (video.channels() != 3) throw InvalidArgument("GMM training videos must be RGB");
        std::vector<std::size_t> idx(video.size());
        std::iota(idx.begin(), idx.end(), 0);
        const std::size_t take = std::min<std::size_t>(frames_per_video, video.size());
        for (std::size_t i = 0; i < take; ++i) std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
        idx.resize(take);
        std::sort(idx.begin(), idx.end());
        for (std::size_t fi : idx) {
            const auto d = video[fi].data();
            for (std::size_t p = 0; p < video[fi].pixel_count(); ++p)
                pixels.push_back({d[3 * p] * 255.0, d[3 * p + 1] * 255.0, d[3 * p + 2] * 255.0});
        }
    }
    return variance_filter(pixels, threshold);
}

double log_likelihood(const GmmModel& model, std::span<const Rgb> pixels) {
    std::vector<double> scratch;
    double total = 0.0;
    for (const Rgb& x : pixels) total += joint_log(model, x, scratch);
    return total;
}

EmResult fit_em(std::span<const Rgb> pixels, const EmOptions& options) {
    const int k = options.components;
    if (k < 1) throw InvalidArgument("GMM needs at least one component");
    if (pixels.size() < static_cast<std::size_t>(k))
        throw InvalidArgument("fewer pixels (" + std::to_string(pixels.size()) + ") than GMM components (" +
                              std::to_string(k) + ")");
    const std::size_t n = pixels.size();
    const double nd = static_cast<double>(n);

    EmResult result;
    const bool identical = std::all_of(pixels.begin(), pixels.end(), [&](const Rgb& p) { return p == pixels[0]; });
    if (identical) {
        result.model.weights = {1.0};
        result.model.means = {pixels[0]};
        result.model.variances = {Rgb{kGmmVarianceFloor, kGmmVarianceFloor, kGmmVarianceFloor}};
        result.log_likelihood.push_back(log_likelihood(result.model, pixels));
        return result;
    }

    Rgb global_mean{0, 0, 0};
    for (const Rgb& p : pixels)
        for (int c = 0; c < 3; ++c) global_mean[c] += p[c];
    for (double& m : global_mean) m /= nd;
    Rgb global_var{0, 0, 0};
    for (const Rgb& p : pixels)
        for (int c = 0; c < 3; ++c) global_var[c] += (p[c] - global_mean[c]) * (p[c] - global_mean[c]);
    for (double& v : global_var) v = std::max(v / nd, kGmmVarianceFloor);

    GmmModel& model = result.model;
    model.weights.assign(k, 1.0 / k);
    model.means = kmeans_pp_seed(pixels, k, options.seed);
    model.variances.assign(k, global_var);

    std::vector<double> resp(n * k);
    std::vector<double> scratch;
    double prev = log_likelihood(model, pixels);
    result.log_likelihood.push_back(prev);
    for (int iter = 0; iter < options.max_iters; ++iter) {
        // E-step.
        for (std::size_t i = 0; i < n; ++i) {
            const double lse = joint_log(model, pixels[i], scratch);
            double sum = 0.0;
            for (int j = 0; j < k; ++j) {
                const double r = std::exp(scratch[j] - lse);
                resp[i * k + j] = r;
                sum += r;
            }
            result.max_responsibility_error = std::max(result.max_responsibility_error, std::abs(sum - 1.0));
        }
        // M-step; a component with no mass keeps its parameters at zero weight.
        std::vector<double> nk(k, 0.0);
        std::vector<Rgb> sum_x(k, Rgb{0, 0, 0});
        for (std::size_t i = 0; i < n; ++i) {
            for (int j = 0; j < k; ++j) {
                const double r = resp[i * k + j];
                nk[j] += r;
                for (int c = 0; c < 3; ++c) sum_x[j][c] += r * pixels[i][c];
            }
        }
        for (int j = 0; j < k; ++j) {
            model.weights[j] = nk[j] / nd;
            if (nk[j] <= 0.0) continue;
            for (int c = 0; c < 3; ++c) model.means[j][c] = sum_x[j][c] / nk[j];
        }
        std::vector<Rgb> sum_sq(k, Rgb{0, 0, 0});
        for (std::size_t i = 0; i < n; ++i) {
            for (int j = 0; j < k; ++j) {
                const double r = resp[i * k + j];
                for (int c = 0; c < 3; ++c) {
                    const double d = pixels[i][c] - model.means[j][c];
                    sum_sq[j][c] += r * d * d;
                }
            }
        }
        for (int j = 0; j < k; ++j) {
            if (nk[j] <= 0.0) continue;
            for (int c = 0; c < 3; ++c) model.variances[j][c] = std::max(sum_sq[j][c] / nk[j], kGmmVarianceFloor);
        }
        const double wsum = std::accumulate(model.weights.begin(), model.weights.end(), 0.0);
        for (double& w : model.weights) w /= wsum;

        const double ll = log_likelihood(model, pixels);
        result.log_likelihood.push_back(ll);
        const double rel = (ll - prev) / std::max(std::abs(prev), 1e-300);
        prev = ll;
        if (rel < options.tol) break;
    }
    return result;
}

Palette sample_palette(const GmmModel& model, std::uint64_t seed) {
    model.validate();
    Rng rng(seed);
    std::array<Rgb, kPaletteSize> colors{};
    for (Rgb& color : colors) {
        const double u = rng.uniform();
        std::size_t j = 0;
        double acc = model.weights[0];
        while (u >= acc && j + 1 < model.components()) acc += model.weights[++j];
        for (int c = 0; c < 3; ++c) {
            const double v = model.means[j][c] + std::sqrt(model.variances[j][c]) * rng.normal();
            color[c] = std::clamp(v, 0.0, 1.0);
        }
    }
    return Palette(colors);
}

void save_gmm(const GmmModel& model, const std::filesystem::path& path) {
    model.validate();
    nlohmann::ordered_json j;
    j["K"] = model.components();
    j["weights"] = model.weights;
    j["means"] = model.means;
    j["variances"] = model.variances;
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    // nlohmann emits the shortest decimal that round-trips each double exactly.
    os << j.dump(2) << '\n';
    if (!os) throw IoError("write failed: " + path.string());
}

GmmModel load_gmm(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("missing GMM file: " + path.string());
    GmmModel model;
    try {
        nlohmann::json j;
        is >> j;
        const auto k = j.at("K").get<std::size_t>();
        model.weights = j.at("weights").get<std::vector<double>>();
        model.means = j.at("means").get<std::vector<Rgb>>();
        model.variances = j.at("variances").get<std::vector<Rgb>>();
        if (model.weights.size() != k) throw FormatError("GMM file: K does not match weight count");
        model.validate();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed GMM file " + path.string() + ": " + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError("invalid GMM file " + path.string() + ": " + e.what());
    }
    return model;
}

}  // namespace pgvc
