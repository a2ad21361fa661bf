#include "pgvc/palette.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "pgvc/error.hpp"
#include "pgvc/rng.hpp"

namespace pgvc {

namespace {

double squared_distance(const Rgb& a, const Rgb& b) {
    const double dr = a[0] - b[0], dg = a[1] - b[1], db = a[2] - b[2];
    return dr * dr + dg * dg + db * db;
}

void check_color(const Rgb& c) {
    for (double v : c) {
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("palette channel outside [0,1]");
    }
}

}  // namespace

bool palette_less(const Rgb& a, const Rgb& b) {
    const double la = luma(a[0], a[1], a[2]);
    const double lb = luma(b[0], b[1], b[2]);
    if (la != lb) return la < lb;
    return a < b;
}

std::array<Rgb, kPaletteSize> canonicalize(std::array<Rgb, kPaletteSize> colors) {
    std::stable_sort(colors.begin(), colors.end(), palette_less);
    return colors;
}

Palette::Palette(const std::array<Rgb, kPaletteSize>& colors) {
    for (const Rgb& c : colors) check_color(c);
    colors_ = canonicalize(colors);
}

Palette::Palette() = default;

std::array<double, kPaletteDim> Palette::flatten() const {
    std::array<double, kPaletteDim> out{};
    for (std::size_t i = 0; i < kPaletteSize; ++i) {
        for (std::size_t c = 0; c < 3; ++c) out[3 * i + c] = colors_[i][c];
    }
    return out;
}

Palette Palette::unflatten(std::span<const double> values) {
    if (values.size() != kPaletteDim) throw InvalidArgument("palette vector must have 15 entries");
    std::array<Rgb, kPaletteSize> colors{};
    for (std::size_t i = 0; i < kPaletteSize; ++i) colors[i] = {values[3 * i], values[3 * i + 1], values[3 * i + 2]};
    return Palette(colors);
}

double kmeans_objective(std::span<const Rgb> points, std::span<const Rgb> centroids) {
    double total = 0.0;
    for (const Rgb& p : points) {
        double best = std::numeric_limits<double>::infinity();
        for (const Rgb& c : centroids) best = std::min(best, squared_distance(p, c));
        total += best;
    }
    return total;
}

std::vector<Rgb> kmeans_pp_seed(std::span<const Rgb> points, int k, std::uint64_t seed) {
    if (k < 1) throw InvalidArgument("k must be >= 1");
    if (points.empty()) throw InvalidArgument("k-means needs at least one point");
    Rng rng(seed);
    const std::size_t n = points.size();

    std::vector<Rgb> centroids;
    centroids.reserve(k);
    centroids.push_back(points[rng.index(n)]);
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points[i], centroids[0]);
    while (static_cast<int>(centroids.size()) < k) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t chosen = 0;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            chosen = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (d2[i] > 0.0 && acc > target) {
                    chosen = i;
                    break;
                }
            }
            // Guard against rounding landing on a zero-weight tail.
            while (d2[chosen] == 0.0 && chosen > 0) --chosen;
        } else {
            chosen = rng.index(n);
        }
        centroids.push_back(points[chosen]);
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
    }
    return centroids;
}

KMeansResult kmeans(std::span<const Rgb> points, int k, std::uint64_t seed, int max_iters) {
    std::vector<Rgb> centroids = kmeans_pp_seed(points, k, seed);
    const std::size_t n = points.size();
    KMeansResult result;
    result.assignment.assign(n, -1);
    std::vector<double> dist(n);
    for (int iter = 0; iter < std::max(max_iters, 1); ++iter) {
        bool changed = false;
        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = squared_distance(points[i], centroids[0]);
            for (int c = 1; c < k; ++c) {
                const double d = squared_distance(points[i], centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (result.assignment[i] != best) {
                result.assignment[i] = best;
                changed = true;
            }
            dist[i] = best_d;
            objective += best_d;
        }
        result.objective.push_back(objective);
        result.iterations = iter + 1;
        if (!changed && iter > 0) break;

        // Sums are offsets from each cluster's first member, so a cluster of identical
        // pixels reproduces that color bit for bit.
        std::vector<Rgb> anchor(k), sums(k, Rgb{0, 0, 0});
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const int a = result.assignment[i];
            if (counts[a]++ == 0) anchor[a] = points[i];
            for (int c = 0; c < 3; ++c) sums[a][c] += points[i][c] - anchor[a][c];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                for (int ch = 0; ch < 3; ++ch)
                    centroids[c][ch] = anchor[c][ch] + sums[c][ch] / static_cast<double>(counts[c]);
            }
        }
        // Empty clusters take the pixel farthest from its current centroid.
        for (int c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            const auto far = std::max_element(dist.begin(), dist.end());
            const std::size_t idx = static_cast<std::size_t>(far - dist.begin());
            centroids[c] = points[idx];
            dist[idx] = 0.0;
        }
    }
    result.centroids = std::move(centroids);
    return result;
}

std::vector<Rgb> collect_pixels(std::span<const Frame> frames) {
    std::vector<Rgb> pixels;
    for (const Frame& f : frames) {
        if (f.channels() != 3) throw InvalidArgument("palette extraction needs RGB frames");
        const auto d = f.data();
        for (std::size_t i = 0; i < f.pixel_count(); ++i) pixels.push_back({d[3 * i], d[3 * i + 1], d[3 * i + 2]});
    }
    return pixels;
}

Palette kmeans_extract(std::span<const Frame> frames, std::uint64_t seed, int max_iters) {
    if (frames.empty()) throw InvalidArgument("kmeans_extract needs at least one frame");
    std::vector<Rgb> pixels = collect_pixels(frames);
    if (pixels.size() > kMaxClusterPixels) {
        // Seeded selection sampling keeps pixel order.
        Rng rng(derive_seed(seed, 0x5eb5a3b1eULL));
        std::vector<Rgb> kept;
        kept.reserve(kMaxClusterPixels);
        std::size_t needed = kMaxClusterPixels;
        for (std::size_t i = 0; i < pixels.size() && needed > 0; ++i) {
            if (rng.index(pixels.size() - i) < needed) {
                kept.push_back(pixels[i]);
                --needed;
            }
        }
        pixels = std::move(kept);
    }
    const KMeansResult r = kmeans(pixels, static_cast<int>(kPaletteSize), seed, max_iters);
    std::array<Rgb, kPaletteSize> colors{};
    for (std::size_t i = 0; i < kPaletteSize; ++i) {
        for (int c = 0; c < 3; ++c) colors[i][c] = std::clamp(r.centroids[i][c], 0.0, 1.0);
    }
    return Palette(colors);
}

Palette kmeans_extract(const Frame& frame, std::uint64_t seed, int max_iters) {
    return kmeans_extract(std::span<const Frame>(&frame, 1), seed, max_iters);
}

void save_palette(const Palette& palette, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["colors"] = nlohmann::json::array();
    for (const Rgb& c : palette.colors()) j["colors"].push_back({c[0], c[1], c[2]});
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    os << j.dump(2) << '\n';
    if (!os) throw IoError("write failed: " + path.string());
}

Palette load_palette(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("missing palette file: " + path.string());
    try {
        nlohmann::json j;
        is >> j;
        const auto& colors = j.at("colors");
        if (!colors.is_array() || colors.size() != kPaletteSize)
            throw FormatError("palette file must list exactly 5 colors: " + path.string());
        std::array<Rgb, kPaletteSize> out{};
        for (std::size_t i = 0; i < kPaletteSize; ++i) {
            const auto c = colors.at(i).get<std::vector<double>>();
            if (c.size() != 3) throw FormatError("palette color must have 3 channels: " + path.string());
            out[i] = {c[0], c[1], c[2]};
        }
        return Palette(out);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed palette file " + path.string() + ": " + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError("invalid palette file " + path.string() + ": " + e.what());
    }
}

}  // namespace pgvc
