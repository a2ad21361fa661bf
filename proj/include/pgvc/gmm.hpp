#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pgvc/palette.hpp"
#include "pgvc/video.hpp"

namespace pgvc {

inline constexpr double kGmmVarianceFloor = 1e-4;

/// Diagonal-covariance Gaussian mixture over RGB.
struct GmmModel {
    std::vector<double> weights;
    std::vector<Rgb> means;
    std::vector<Rgb> variances;

    std::size_t components() const { return weights.size(); }
    /// Throws InvalidArgument if weights/variances violate the model invariants.
    void validate() const;

    friend bool operator==(const GmmModel&, const GmmModel&) = default;
};

/// Keeps pixels (0-255 scale) whose population variance across R,G,B is >= threshold.
std::vector<Rgb> variance_filter(std::span<const Rgb> pixels, double threshold = 50.0);

/// Pixels (0-255 scale) of up to `frames_per_video` distinct random frames per video,
/// variance-filtered.
std::vector<Rgb> collect_training_pixels(std::span<const Video> dataset, int frames_per_video,
                                         std::uint64_t seed, double threshold = 50.0);

struct EmOptions {
    int components = 8;
    std::uint64_t seed = 0;
    int max_iters = 100;
    double tol = 1e-6;
};

struct EmResult {
    GmmModel model;
    /// Log-likelihood of the initial model followed by one entry per EM iteration.
    std::vector<double> log_likelihood;
    /// Largest deviation of per-pixel responsibility sums from 1 seen in any E-step.
    double max_responsibility_error = 0.0;
};

/// EM fit on pixels in [0,1]. All-identical input yields a single component.
EmResult fit_em(std::span<const Rgb> pixels, const EmOptions& options = {});

double log_likelihood(const GmmModel& model, std::span<const Rgb> pixels);

/// Five i.i.d. draws from the mixture, clamped to [0,1].
Palette sample_palette(const GmmModel& model, std::uint64_t seed);

void save_gmm(const GmmModel& model, const std::filesystem::path& path);
GmmModel load_gmm(const std::filesystem::path& path);

}  // namespace pgvc
