#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>

#include "pgvc/error.hpp"
#include "pgvc/palette.hpp"
#include "pgvc/rng.hpp"

using namespace pgvc;

namespace {

// Frame whose pixels cycle through `colors` in equal proportion.
Frame frame_of(const std::vector<Rgb>& colors, int w, int h) {
    Frame f(w, h, 3);
    for (std::size_t i = 0; i < f.pixel_count(); ++i)
        for (int c = 0; c < 3; ++c) f.data()[3 * i + c] = colors[i % colors.size()][c];
    return f;
}

// Exhaustive minimum of the k-means objective over every assignment of points to k labels.
double brute_force_optimum(const std::vector<Rgb>& pts, int k) {
    const std::size_t n = pts.size();
    std::vector<int> label(n, 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        std::vector<Rgb> sum(k, Rgb{0, 0, 0});
        std::vector<int> cnt(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (int c = 0; c < 3; ++c) sum[label[i]][c] += pts[i][c];
            ++cnt[label[i]];
        }
        double obj = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const int l = label[i];
            for (int c = 0; c < 3; ++c) {
                const double d = pts[i][c] - sum[l][c] / cnt[l];
                obj += d * d;
            }
        }
        best = std::min(best, obj);
        std::size_t j = 0;
        while (j < n && ++label[j] == k) label[j++] = 0;
        if (j == n) break;
    }
    return best;
}

const Rgb kWhite{1, 1, 1}, kBlack{0, 0, 0}, kGray{0.5, 0.5, 0.5}, kRed{1, 0, 0}, kBlue{0, 0, 1};

}  // namespace

TEST_CASE("canonical order") {
    const Palette p({kWhite, kBlack, kGray, kRed, kBlue});
    CHECK(p[0] == kBlack);
    CHECK(p[1] == kBlue);
    CHECK(p[2] == kRed);
    CHECK(p[3] == kGray);
    CHECK(p[4] == kWhite);
    CHECK(Palette(p.colors()) == p);

    SUBCASE("permutation invariant") {
        std::array<Rgb, 5> cols{kWhite, kBlack, kGray, kRed, kBlue};
        std::sort(cols.begin(), cols.end());
        do {
            CHECK(canonicalize(cols) == p.colors());
        } while (std::next_permutation(cols.begin(), cols.end()));
    }

    SUBCASE("ties") {
        const Rgb a{0.2, 0.3, 0.4};
        const Palette q({a, kWhite, a, kBlack, kRed});
        CHECK(q[1] == a);
        CHECK(q[2] == a);
        CHECK(Palette(q.colors()) == q);
        // Equal luma, lexicographic tiebreak.
        const Rgb x{0.0, 0.114 / 0.587, 0.0}, y{0.0, 0.0, 1.0};
        CHECK(palette_less(x, y) == (x < y));
    }
}

TEST_CASE("flatten layout") {
    CHECK(Palette::black().flatten() == std::array<double, 15>{});
    const Palette reds({kRed, kRed, kRed, kRed, kRed});
    const auto v = reds.flatten();
    for (int i = 0; i < 15; ++i) CHECK(v[i] == (i % 3 == 0 ? 1.0 : 0.0));
    const Palette p({kWhite, kBlack, kGray, kRed, Rgb{0.1, 0.7, 0.33}});
    const auto f = p.flatten();
    CHECK(Palette::unflatten(f) == p);
    CHECK_THROWS_AS(Palette({Rgb{1.2, 0, 0}, kBlack, kBlack, kBlack, kBlack}), InvalidArgument);
}

TEST_CASE("kmeans recovers five equal-proportion colors exactly") {
    const std::vector<Rgb> colors{{0.9, 0.1, 0.1}, {0.1, 0.2, 0.9}, {0.1, 0.75, 0.2}, {0.95, 0.85, 0.1}, {0.3, 0.3, 0.3}};
    const Frame f = frame_of(colors, 20, 20);
    const Palette expected({colors[0], colors[1], colors[2], colors[3], colors[4]});
    for (std::uint64_t seed = 0; seed < 25; ++seed) CHECK(kmeans_extract(f, seed) == expected);
}

TEST_CASE("kmeans on a uniform frame duplicates the color") {
    const Rgb c{0.25, 0.5, 0.75};
    const Palette p = kmeans_extract(frame_of({c}, 8, 8), 3);
    for (const Rgb& x : p.colors()) CHECK(x == c);
}

TEST_CASE("kmeans two-cluster case matches exhaustive optimum") {
    std::vector<Rgb> pts(10, kBlack);
    pts.insert(pts.end(), 10, kWhite);
    const KMeansResult r = kmeans(pts, 2, 5);
    std::vector<Rgb> c = r.centroids;
    std::sort(c.begin(), c.end());
    CHECK(c[0] == kBlack);
    CHECK(c[1] == kWhite);
    CHECK(r.objective.back() == 0.0);
    CHECK(brute_force_optimum(std::vector<Rgb>(pts.begin() + 6, pts.begin() + 14), 2) == 0.0);
}

TEST_CASE("kmeans objective is monotone and near the exhaustive optimum") {
    for (std::uint64_t trial = 0; trial < 12; ++trial) {
        Rng rng(trial);
        std::vector<Rgb> pts(9);
        for (Rgb& p : pts) p = {rng.uniform(), rng.uniform(), rng.uniform()};
        const int k = 2 + static_cast<int>(trial % 2);
        const KMeansResult r = kmeans(pts, k, trial);
        for (std::size_t i = 1; i < r.objective.size(); ++i) CHECK(r.objective[i] <= r.objective[i - 1] + 1e-12);
        CHECK(r.objective.back() >= brute_force_optimum(pts, k) - 1e-12);
        CHECK(kmeans_objective(pts, r.centroids) <= r.objective.back() + 1e-12);
    }
}

TEST_CASE("kmeans determinism and errors") {
    Rng rng(9);
    std::vector<Rgb> pts(500);
    for (Rgb& p : pts) p = {rng.uniform(), rng.uniform(), rng.uniform()};
    const auto a = kmeans(pts, 5, 17);
    const auto b = kmeans(pts, 5, 17);
    CHECK(a.centroids == b.centroids);
    CHECK(a.objective == b.objective);
    for (std::size_t i = 1; i < a.objective.size(); ++i) CHECK(a.objective[i] <= a.objective[i - 1]);
    CHECK_THROWS_AS(kmeans(pts, 0, 1), InvalidArgument);
    CHECK_THROWS_AS(kmeans_extract(Frame(4, 4, 1), 1), InvalidArgument);
    CHECK_THROWS_AS(kmeans_extract(std::span<const Frame>{}, 1), InvalidArgument);
}

TEST_CASE("kmeans_extract subsamples large inputs deterministically") {
    Frame big(400, 300, 3);
    Rng rng(1);
    for (double& v : big.data()) v = rng.uniform();
    std::vector<Frame> frames{big};
    const Palette a = kmeans_extract(frames, 4);
    CHECK(a == kmeans_extract(frames, 4));
}

TEST_CASE("palette file round trip") {
    const auto path = std::filesystem::temp_directory_path() / "pgvc_palette_rt.json";
    const Palette p({Rgb{0.1, 0.2, 0.30000000000000004}, Rgb{1.0 / 3, 0.7, 0.9}, kRed, kBlue, Rgb{0.123456789012345, 0.5, 0.5}});
    save_palette(p, path);
    CHECK(load_palette(path) == p);
    std::ofstream(path) << R"({"colors": [[0,0,0],[1,1,1]]})";
    CHECK_THROWS_AS(load_palette(path), FormatError);
}
