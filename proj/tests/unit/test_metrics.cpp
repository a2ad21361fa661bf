#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "pgvc/error.hpp"
#include "pgvc/metrics.hpp"
#include "pgvc/rng.hpp"

using namespace pgvc;

namespace {

Frame solid(int w, int h, double r, double g, double b) {
    Frame f(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            f.at(x, y, 0) = r;
            f.at(x, y, 1) = g;
            f.at(x, y, 2) = b;
        }
    return f;
}

Frame random_rgb(int w, int h, std::uint64_t seed) {
    Frame f(w, h, 3);
    Rng rng(seed);
    for (double& v : f.data()) v = rng.uniform();
    return f;
}

// Population statistics computed independently of the library.
double colorfulness_oracle(const std::vector<std::array<double, 3>>& px) {
    double mrg = 0, myb = 0;
    for (const auto& p : px) {
        mrg += p[0] - p[1];
        myb += 0.5 * (p[0] + p[1]) - p[2];
    }
    mrg /= px.size();
    myb /= px.size();
    double vrg = 0, vyb = 0;
    for (const auto& p : px) {
        vrg += std::pow(p[0] - p[1] - mrg, 2);
        vyb += std::pow(0.5 * (p[0] + p[1]) - p[2] - myb, 2);
    }
    vrg /= px.size();
    vyb /= px.size();
    return std::sqrt(vrg + vyb) + 0.3 * std::sqrt(mrg * mrg + myb * myb);
}

const Palette kPalette({Rgb{0.9, 0.1, 0.1}, Rgb{0.1, 0.2, 0.9}, Rgb{0.2, 0.7, 0.3}, Rgb{0.95, 0.9, 0.2}, Rgb{0.4, 0.4, 0.4}});

}  // namespace

TEST_CASE("colorfulness") {
    CHECK(colorfulness(solid(4, 4, 0.3, 0.3, 0.3)) == 0.0);
    CHECK(std::abs(colorfulness(solid(4, 4, 1, 0, 0)) - 85.53) < 0.01);
    Frame two(2, 1, 3);
    two.at(0, 0, 0) = 1;
    two.at(1, 0, 2) = 1;
    CHECK(std::abs(colorfulness(two) - 272.63) < 0.05);

    const Frame f = random_rgb(9, 7, 3);
    std::vector<std::array<double, 3>> px;
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 9; ++x) px.push_back({255 * f.at(x, y, 0), 255 * f.at(x, y, 1), 255 * f.at(x, y, 2)});
    CHECK(colorfulness(f) == doctest::Approx(colorfulness_oracle(px)).epsilon(1e-12));

    // Spatial permutation leaves the statistics unchanged.
    Frame g(9, 7, 3);
    std::vector<int> order(63);
    for (int i = 0; i < 63; ++i) order[i] = i;
    std::reverse(order.begin(), order.end());
    for (int i = 0; i < 63; ++i)
        for (int c = 0; c < 3; ++c) g.at(i % 9, i / 9, c) = f.at(order[i] % 9, order[i] / 9, c);
    CHECK(colorfulness(g) == doctest::Approx(colorfulness(f)).epsilon(1e-12));
    CHECK_THROWS_AS(colorfulness(Frame(4, 4, 1)), InvalidArgument);
}

TEST_CASE("psnr") {
    const Frame a = solid(6, 5, 0.2, 0.4, 0.6);
    CHECK(psnr(a, a) == kPsnrCap);
    CHECK(psnr(a, solid(6, 5, 0.3, 0.5, 0.7)) == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(psnr(solid(3, 3, 0, 0, 0), solid(3, 3, 1, 1, 1)) == doctest::Approx(0.0));
    double prev = kPsnrCap + 1;
    const Frame base = random_rgb(16, 16, 1);
    for (double amp : {0.01, 0.05, 0.1}) {
        Frame noisy = base;
        Rng rng(2);
        for (double& v : noisy.data()) v = std::clamp(v + rng.uniform(-amp, amp), 0.0, 1.0);
        const double p = psnr(noisy, base);
        CHECK(p < prev);
        prev = p;
    }
    CHECK_THROWS_AS(psnr(a, solid(5, 5, 0, 0, 0)), InvalidArgument);
}

TEST_CASE("ssim") {
    const Frame a = random_rgb(16, 16, 4);
    const Frame b = random_rgb(16, 16, 5);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(ssim(a, b) - ssim(b, a)) < 1e-12);
    CHECK(ssim(solid(12, 12, 0, 0, 0), solid(12, 12, 1, 1, 1)) == doctest::Approx(1e-4 / 1.0001).epsilon(1e-9));
    CHECK(ssim(a, b) < 0.5);
    CHECK_THROWS_AS(ssim(solid(10, 12, 0, 0, 0), solid(10, 12, 0, 0, 0)), InvalidArgument);

    SynthConfig sc;
    sc.num_clips = 2;
    sc.frames_per_clip = 3;
    for (const auto& clip : synth_generate(sc))
        for (const Frame& f : clip.color.frames()) CHECK(ssim(f, f) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("palette adherence") {
    // Each 2x2 block holds one guidance color; every frame shows all five equally.
    std::vector<Frame> frames;
    for (int shift = 0; shift < 3; ++shift) {
        Frame f(10, 2, 3);
        for (int x = 0; x < 10; ++x)
            for (int y = 0; y < 2; ++y)
                for (int c = 0; c < 3; ++c) f.at(x, y, c) = kPalette[(x / 2 + shift) % 5][c];
        frames.push_back(f);
    }
    const Video v(frames);
    CHECK(palette_adherence(v, kPalette) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));

    const Video white({solid(4, 4, 1, 1, 1), solid(4, 4, 1, 1, 1)});
    CHECK(palette_adherence(white, Palette::black()) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));

    const Palette other({Rgb{0.1, 0.1, 0.1}, Rgb{0.5, 0.5, 0.5}, Rgb{0.9, 0.9, 0.9}, Rgb{0.0, 1.0, 0.0}, Rgb{1.0, 0.0, 1.0}});
    CHECK(palette_distance(kPalette, other) == doctest::Approx(palette_distance(other, kPalette)).epsilon(1e-15));
    CHECK(palette_distance(kPalette, kPalette) == 0.0);
    CHECK(palette_distance(kPalette, other) > 0.0);
}

TEST_CASE("evaluate") {
    SynthConfig sc;
    sc.num_clips = 1;
    sc.frames_per_clip = 3;
    sc.width = 16;
    sc.height = 16;
    const auto clip = synth_generate(sc)[0];

    const auto same = evaluate(clip.color, &clip.color, nullptr, {"psnr", "ssim"});
    REQUIRE(same.size() == 2);
    CHECK(same[0].name == "psnr");
    CHECK(same[0].aggregate == kPsnrCap);
    CHECK(same[1].aggregate == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(same[0].per_frame.size() == 3);

    std::vector<Frame> reps;
    for (const Frame& f : clip.gray.frames()) reps.push_back(gray_to_rgb(f));
    const Video replicated(reps);
    CHECK(evaluate(replicated, nullptr, nullptr, {"colorful"})[0].aggregate == 0.0);

    const auto all = evaluate(clip.color, &replicated, &kPalette, {"colorful", "psnr", "ssim", "palette-adherence"});
    for (const auto& r : all) {
        double mean = 0;
        for (double v : r.per_frame) mean += v;
        CHECK(r.aggregate == doctest::Approx(mean / r.per_frame.size()).epsilon(1e-9));
    }

    CHECK_THROWS_AS(evaluate(clip.color, nullptr, nullptr, {"psnr"}), InvalidArgument);
    CHECK_THROWS_AS(evaluate(clip.color, nullptr, nullptr, {"palette-adherence"}), InvalidArgument);
    CHECK_THROWS_AS(evaluate(clip.color, nullptr, nullptr, {"lpips"}), InvalidArgument);

    const auto json = nlohmann::json::parse(report_to_json(all));
    CHECK(json["metrics"].size() == 4);
    CHECK(json["fid"].is_null());
}
