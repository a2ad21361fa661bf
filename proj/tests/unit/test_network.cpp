#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "grad_oracle.hpp"
#include "pgvc/error.hpp"
#include "pgvc/network.hpp"
#include "pgvc/rng.hpp"

using namespace pgvc;

namespace {

NetworkConfig tiny_config() {
    NetworkConfig c;
    c.base_channels = 8;
    c.window_frames = 3;
    c.height = 6;
    c.width = 5;
    c.timesteps = 50;
    return c;
}

Frame random_frame(int w, int h, int ch, std::uint64_t seed) {
    Frame f(w, h, ch);
    Rng rng(seed);
    for (double& v : f.data()) v = rng.uniform();
    return f;
}

TrainingExample random_example(const NetworkConfig& c, std::uint64_t seed, const Palette& palette) {
    TrainingExample ex{LatentWindow(c.window_frames, 3, c.height, c.width), LatentWindow(c.window_frames, 1, c.height, c.width),
                       random_frame(c.width, c.height, 3, seed + 1), palette};
    Rng rng(seed);
    for (double& v : ex.color.data) v = rng.uniform();
    for (double& v : ex.gray.data) v = rng.uniform();
    return ex;
}

LatentWindow random_noise(const NetworkConfig& c, std::uint64_t seed) {
    LatentWindow eps(c.window_frames, 3, c.height, c.width);
    Rng rng(seed);
    for (double& v : eps.data) v = rng.normal();
    return eps;
}

Checkpoint checkpoint_from(const NetworkConfig& c, const Parameters<double>& p) {
    return {c, cast_parameters<float>(p), {}};
}

LatentWindow random_input(const NetworkConfig& c, std::uint64_t seed) {
    LatentWindow z(c.window_frames, 4, c.height, c.width);
    Rng rng(seed);
    for (double& v : z.data) v = rng.normal();
    return z;
}

const Palette kPalette({Rgb{0.9, 0.1, 0.1}, Rgb{0.1, 0.2, 0.9}, Rgb{0.2, 0.7, 0.3}, Rgb{0.95, 0.9, 0.2}, Rgb{0.4, 0.4, 0.4}});

}  // namespace

TEST_CASE("parameter table") {
    const auto specs = parameter_specs(NetworkConfig{});
    CHECK(specs.size() == 15);
    CHECK(specs[2].name == "palette_proj.weight");
    CHECK(specs[2].shape == std::vector<int>{32, 15});
    const auto p = init_parameters<double>(NetworkConfig{}, 1);
    std::size_t i = 0;
    p.for_each([&](const AlignedVector<double>& v) { CHECK(v.size() == specs[i++].numel()); });
    for (double b : p.in_b) CHECK(b == 0.0);
    for (double w : p.body1_w) CHECK(std::abs(w) <= 1.0 / std::sqrt(32.0 * 9));
    CHECK_THROWS_AS(zero_parameters<double>(NetworkConfig{7}), InvalidArgument);
    NetworkConfig bad;
    bad.window_frames = 1;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("predict_eps contracts") {
    const NetworkConfig c = tiny_config();
    const auto z = random_input(c, 3);
    const Frame ref = random_frame(c.width, c.height, 3, 4);

    SUBCASE("zero checkpoint gives zero output of the right shape") {
        const auto out = predict_eps(z, {10, kPalette, ref}, checkpoint_from(c, zero_parameters<double>(c)));
        CHECK(out.frames == c.window_frames);
        CHECK(out.channels == 3);
        CHECK(out.height == c.height);
        CHECK(out.width == c.width);
        for (double v : out.data) CHECK(v == 0.0);
    }

    SUBCASE("palette changes the output unless W_proj is zero") {
        const auto params = init_parameters<double>(c, 7);
        const auto ck = checkpoint_from(c, params);
        const auto a = predict_eps(z, {10, kPalette, ref}, ck);
        const auto b = predict_eps(z, {10, Palette::black(), ref}, ck);
        CHECK(a.same_shape(b));
        CHECK_FALSE(a == b);
        CHECK(a == predict_eps(z, {10, kPalette, ref}, ck));

        auto no_proj = params;
        std::fill(no_proj.palette_proj.begin(), no_proj.palette_proj.end(), 0.0);
        const auto ck0 = checkpoint_from(c, no_proj);
        CHECK(predict_eps(z, {10, kPalette, ref}, ck0) == predict_eps(z, {10, Palette::black(), ref}, ck0));
    }

    SUBCASE("timestep and reference matter") {
        const auto ck = checkpoint_from(c, init_parameters<double>(c, 8));
        CHECK_FALSE(predict_eps(z, {10, kPalette, ref}, ck) == predict_eps(z, {11, kPalette, ref}, ck));
        CHECK_FALSE(predict_eps(z, {10, kPalette, ref}, ck) ==
                    predict_eps(z, {10, kPalette, random_frame(c.width, c.height, 3, 99)}, ck));
    }

    SUBCASE("errors") {
        const auto ck = checkpoint_from(c, init_parameters<double>(c, 8));
        CHECK_THROWS_AS(predict_eps(LatentWindow(3, 3, 6, 5), {10, kPalette, ref}, ck), InvalidArgument);
        CHECK_THROWS_AS(predict_eps(z, {0, kPalette, ref}, ck), InvalidArgument);
        CHECK_THROWS_AS(predict_eps(z, {10, kPalette, Frame(5, 6, 1)}, ck), InvalidArgument);
        auto wrong = ck;
        wrong.config.base_channels = 16;
        CHECK_THROWS_AS(predict_eps(z, {10, kPalette, ref}, wrong), InvalidArgument);
    }
}

TEST_CASE("training loss") {
    const NetworkConfig c = tiny_config();
    const auto ex = random_example(c, 1, kPalette);
    const auto zero = zero_parameters<double>(c);

    SUBCASE("zero residual") {
        CHECK(training_loss(ex, 5, LatentWindow(c.window_frames, 3, c.height, c.width), zero, c) == 0.0);
    }
    SUBCASE("unit residual") {
        // The zero network predicts 0, so eps = -1 everywhere leaves a residual of 1.
        CHECK(training_loss(ex, 5, LatentWindow(c.window_frames, 3, c.height, c.width, -1.0), zero, c) ==
              doctest::Approx(1.0));
    }
    SUBCASE("matches loss_and_gradients") {
        const auto p = init_parameters<double>(c, 2);
        const auto eps = random_noise(c, 3);
        CHECK(loss_and_gradients(ex, 17, eps, p, c).loss == doctest::Approx(training_loss(ex, 17, eps, p, c)).epsilon(1e-12));
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    const NetworkConfig c = tiny_config();
    const auto params = init_parameters<double>(c, 21);
    // Non-zero biases so every path carries signal.
    auto p = params;
    Rng rng(22);
    for (auto* b : {&p.in_b, &p.ref_b, &p.body1_b, &p.temporal_b, &p.body2_b, &p.out_b})
        for (double& v : *b) v = rng.uniform(-0.2, 0.2);
    const auto ex = random_example(c, 5, kPalette);
    const auto eps = random_noise(c, 6);
    const int t = 23;
    const auto analytic = loss_and_gradients(ex, t, eps, p, c).grads;
    const auto samples = testing::finite_difference_check(
        [&](const Parameters<double>& q) { return training_loss(ex, t, eps, q, c); }, p, analytic, c, 14, 77);
    CHECK(samples.size() >= 200);
    double worst = 0;
    for (const auto& s : samples) {
        INFO(s.tensor << "[" << s.index << "] analytic=" << s.analytic << " numeric=" << s.numeric);
        CHECK(s.relative_error() < 1e-3);
        worst = std::max(worst, s.relative_error());
    }
    MESSAGE("worst relative error " << worst);
}

TEST_CASE("W_proj gradient vanishes for the all-black palette") {
    const NetworkConfig c = tiny_config();
    const auto p = init_parameters<double>(c, 31);
    const auto ex = random_example(c, 9, Palette::black());
    const auto g = loss_and_gradients(ex, 12, random_noise(c, 10), p, c).grads;
    for (double v : g.palette_proj) CHECK(v == 0.0);
    double other = 0;
    for (double v : g.time_proj) other += std::abs(v);
    CHECK(other > 0.0);
}

TEST_CASE("float and double evaluators agree") {
    const NetworkConfig c = tiny_config();
    const auto pd = init_parameters<double>(c, 41);
    const auto pf = cast_parameters<float>(pd);
    const auto z = random_input(c, 42);
    const Conditioning cond{30, kPalette, random_frame(c.width, c.height, 3, 43)};
    Denoiser<double> nd(c);
    Denoiser<float> nf(c);
    std::vector<float> zf(z.data.begin(), z.data.end());
    const auto od = nd.forward(cast_parameters<double>(pf), z.data, z.frames, z.height, z.width, cond);
    const auto of = nf.forward(pf, zf, z.frames, z.height, z.width, cond);
    for (std::size_t i = 0; i < od.size(); ++i) CHECK(of[i] == doctest::Approx(od[i]).epsilon(1e-4).scale(1.0));
    CHECK_THROWS_AS(nd.backward(pd, od), InvalidArgument);
}

TEST_CASE("checkpoint round trip and validation") {
    const NetworkConfig c = tiny_config();
    Checkpoint ck{c, init_parameters<float>(c, 5), {123, 0.04567891234, 99}};
    const auto bytes = serialize_checkpoint(ck);
    CHECK(deserialize_checkpoint(bytes) == ck);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "PGVC");

    const auto path = std::filesystem::temp_directory_path() / "pgvc_ckpt_rt.pgvc";
    save_checkpoint(ck, path);
    CHECK(load_checkpoint(path) == ck);

    SUBCASE("bad magic") {
        auto b = bytes;
        b[0] = 'X';
        CHECK_THROWS_AS(deserialize_checkpoint(b), FormatError);
    }
    SUBCASE("bad version") {
        auto b = bytes;
        b[4] = 9;
        CHECK_THROWS_AS(deserialize_checkpoint(b), FormatError);
    }
    SUBCASE("truncated data") {
        auto b = bytes;
        b.pop_back();
        CHECK_THROWS_AS(deserialize_checkpoint(b), FormatError);
    }
    SUBCASE("corrupted shape table") {
        std::string s(bytes.begin(), bytes.end());
        const auto pos = s.find("[8,4,3,3]");
        REQUIRE(pos != std::string::npos);
        s.replace(pos, 9, "[8,4,3,2]");
        CHECK_THROWS_AS(deserialize_checkpoint(std::vector<std::uint8_t>(s.begin(), s.end())), FormatError);
    }
    SUBCASE("renamed tensor") {
        std::string s(bytes.begin(), bytes.end());
        const auto pos = s.find("body1.weight");
        s.replace(pos, 12, "bodyX.weight");
        CHECK_THROWS_AS(deserialize_checkpoint(std::vector<std::uint8_t>(s.begin(), s.end())), FormatError);
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.pgvc"), IoError); }
}
