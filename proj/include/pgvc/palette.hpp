#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pgvc/video.hpp"

namespace pgvc {

using Rgb = std::array<double, 3>;

inline constexpr std::size_t kPaletteSize = 5;
inline constexpr std::size_t kPaletteDim = 3 * kPaletteSize;

/// Strict weak order used for palette layout: ascending luma, then (R,G,B).
bool palette_less(const Rgb& a, const Rgb& b);

/// Five RGB colors in [0,1], always held in canonical order.
class Palette {
public:
    /// Validates range and canonicalizes.
    explicit Palette(const std::array<Rgb, kPaletteSize>& colors);
    /// All-black palette; projects to the zero embedding.
    Palette();

    static Palette black() { return Palette(); }

    const std::array<Rgb, kPaletteSize>& colors() const { return colors_; }
    const Rgb& operator[](std::size_t i) const { return colors_[i]; }

    /// Color-major 15-vector r1,g1,b1,...,r5,g5,b5.
    std::array<double, kPaletteDim> flatten() const;
    static Palette unflatten(std::span<const double> values);

    friend bool operator==(const Palette&, const Palette&) = default;

private:
    std::array<Rgb, kPaletteSize> colors_{};
};

/// Sorts five colors into canonical order. Idempotent and permutation-invariant.
std::array<Rgb, kPaletteSize> canonicalize(std::array<Rgb, kPaletteSize> colors);

struct KMeansResult {
    std::vector<Rgb> centroids;
    std::vector<int> assignment;
    /// Objective after each assignment step; non-increasing.
    std::vector<double> objective;
    int iterations = 0;
};

/// k-means++ initial centroids (D^2 sampling).
std::vector<Rgb> kmeans_pp_seed(std::span<const Rgb> points, int k, std::uint64_t seed);

/// Lloyd's algorithm with k-means++ seeding. Deterministic in (points, seed).
KMeansResult kmeans(std::span<const Rgb> points, int k, std::uint64_t seed, int max_iters = 100);

/// Sum of squared distances from each point to its nearest centroid.
double kmeans_objective(std::span<const Rgb> points, std::span<const Rgb> centroids);

/// Inputs above this many pixels are uniformly subsampled before clustering.
inline constexpr std::size_t kMaxClusterPixels = 100'000;

/// Gathers RGB pixels from 3-channel frames.
std::vector<Rgb> collect_pixels(std::span<const Frame> frames);

/// Five dominant colors of the given frames.
Palette kmeans_extract(std::span<const Frame> frames, std::uint64_t seed, int max_iters = 100);
Palette kmeans_extract(const Frame& frame, std::uint64_t seed, int max_iters = 100);

void save_palette(const Palette& palette, const std::filesystem::path& path);
Palette load_palette(const std::filesystem::path& path);

}  // namespace pgvc
