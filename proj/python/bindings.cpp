#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pgvc/error.hpp"
#include "pgvc/gmm.hpp"
#include "pgvc/llm_palette.hpp"
#include "pgvc/metrics.hpp"
#include "pgvc/network.hpp"
#include "pgvc/sampler.hpp"

namespace py = pybind11;
using namespace pgvc;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (H, W) or (H, W, 3) array -> Frame.
Frame to_frame(const Array& a) {
    if (a.ndim() == 2) {
        Frame f(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), 1);
        std::copy(a.data(), a.data() + a.size(), f.data().begin());
        return f;
    }
    if (a.ndim() != 3 || a.shape(2) != 3) throw InvalidArgument("expected an (H, W) or (H, W, 3) array");
    std::vector<double> px(a.data(), a.data() + a.size());
    return Frame(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), 3, std::move(px));
}

Array from_frame(const Frame& f) {
    std::vector<py::ssize_t> shape{f.height(), f.width()};
    if (f.channels() == 3) shape.push_back(3);
    Array a(shape);
    std::copy(f.data().begin(), f.data().end(), a.mutable_data());
    return a;
}

// (F, H, W) or (F, H, W, 3) array -> Video.
Video to_video(const Array& a) {
    if (a.ndim() != 3 && a.ndim() != 4) throw InvalidArgument("expected an (F, H, W) or (F, H, W, 3) array");
    const py::ssize_t per = a.size() / a.shape(0);
    std::vector<Frame> frames;
    for (py::ssize_t i = 0; i < a.shape(0); ++i) {
        std::vector<py::ssize_t> shape(a.shape() + 1, a.shape() + a.ndim());
        Array one(shape);
        std::copy(a.data() + i * per, a.data() + (i + 1) * per, one.mutable_data());
        frames.push_back(to_frame(one));
    }
    return Video(std::move(frames));
}

Array from_video(const Video& v) {
    std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(v.size()), v.height(), v.width()};
    if (v.channels() == 3) shape.push_back(3);
    Array a(shape);
    double* out = a.mutable_data();
    for (const Frame& f : v.frames()) out = std::copy(f.data().begin(), f.data().end(), out);
    return a;
}

Palette to_palette(const Array& a) {
    if (a.ndim() != 2 || a.shape(0) != kPaletteSize || a.shape(1) != 3) throw InvalidArgument("palette must be a (5, 3) array");
    std::array<Rgb, kPaletteSize> colors;
    for (int i = 0; i < kPaletteSize; ++i)
        for (int c = 0; c < 3; ++c) colors[i][c] = a.at(i, c);
    return Palette(colors);
}

Array from_palette(const Palette& p) {
    Array a(std::vector<py::ssize_t>{kPaletteSize, 3});
    for (int i = 0; i < kPaletteSize; ++i)
        for (int c = 0; c < 3; ++c) a.mutable_at(i, c) = p[i][c];
    return a;
}

std::vector<Rgb> to_pixels(const Array& a) {
    if (a.ndim() != 2 || a.shape(1) != 3) throw InvalidArgument("pixels must be an (N, 3) array");
    std::vector<Rgb> px(a.shape(0));
    for (py::ssize_t i = 0; i < a.shape(0); ++i) px[i] = {a.at(i, 0), a.at(i, 1), a.at(i, 2)};
    return px;
}

py::dict gmm_to_dict(const GmmModel& m) {
    const py::ssize_t k = static_cast<py::ssize_t>(m.components());
    Array means({k, py::ssize_t{3}}), variances({k, py::ssize_t{3}});
    for (py::ssize_t i = 0; i < k; ++i)
        for (int c = 0; c < 3; ++c) {
            means.mutable_at(i, c) = m.means[i][c];
            variances.mutable_at(i, c) = m.variances[i][c];
        }
    py::dict d;
    d["weights"] = py::cast(m.weights);
    d["means"] = means;
    d["variances"] = variances;
    return d;
}

GmmModel gmm_from_dict(const py::dict& d) {
    GmmModel m;
    m.weights = d["weights"].cast<std::vector<double>>();
    m.means = to_pixels(d["means"].cast<Array>());
    m.variances = to_pixels(d["variances"].cast<Array>());
    m.validate();
    return m;
}

}  // namespace

PYBIND11_MODULE(_pgvc, m) {
    m.doc() = "Palette-guided video colorization toolkit";

    // Base first: translators registered later take precedence.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<NetworkError>(m, "NetworkError", PyExc_ConnectionError);

    m.def(
        "synth_generate",
        [](int clips, int frames, int width, int height, int shapes, std::uint64_t seed) {
            SynthConfig sc{clips, frames, width, height, shapes, 12, seed};
            py::list out;
            for (const auto& c : synth_generate(sc)) out.append(py::make_tuple(from_video(c.color), from_video(c.gray)));
            return out;
        },
        py::arg("clips") = 8, py::arg("frames") = 16, py::arg("width") = 32, py::arg("height") = 32,
        py::arg("shapes") = 3, py::arg("seed") = 0, "List of (color (F,H,W,3), gray (F,H,W)) clips.");

    m.def("read_video", [](const std::filesystem::path& p) { return from_video(read_video(p)); });
    m.def("write_video", [](const Array& v, const std::filesystem::path& dir) { return write_video(to_video(v), dir); });

    m.def(
        "kmeans_extract", [](const Array& img, std::uint64_t seed) { return from_palette(kmeans_extract(to_frame(img), seed)); },
        py::arg("image"), py::arg("seed") = 0);
    m.def("load_palette", [](const std::filesystem::path& p) { return from_palette(load_palette(p)); });
    m.def("save_palette", [](const Array& p, const std::filesystem::path& path) { save_palette(to_palette(p), path); });
    m.def("canonical_palette", [](const Array& p) { return from_palette(to_palette(p)); });

    m.def(
        "fit_em",
        [](const Array& pixels, int components, std::uint64_t seed, int max_iters) {
            const auto r = fit_em(to_pixels(pixels), {components, seed, max_iters, 1e-6});
            py::dict d = gmm_to_dict(r.model);
            d["log_likelihood"] = py::cast(r.log_likelihood);
            return d;
        },
        py::arg("pixels"), py::arg("components") = 8, py::arg("seed") = 0, py::arg("max_iters") = 100);
    m.def(
        "sample_palette", [](const py::dict& gmm, std::uint64_t seed) { return from_palette(sample_palette(gmm_from_dict(gmm), seed)); },
        py::arg("gmm"), py::arg("seed") = 0);
    m.def(
        "offline_palette", [](const std::string& tags, std::uint64_t seed) { return from_palette(offline_lookup(TagList::parse(tags), seed)); },
        py::arg("tags"), py::arg("seed") = 0);
    m.def("build_prompt", [](const std::string& tags) { return build_prompt(TagList::parse(tags)); });

    m.def(
        "make_schedule",
        [](int steps, double beta_start, double beta_end) {
            const NoiseSchedule s = make_schedule(steps, beta_start, beta_end);
            std::vector<double> betas, alpha_bars;
            for (int t = 1; t <= steps; ++t) {
                betas.push_back(s.beta(t));
                alpha_bars.push_back(s.alpha_bar(t));
            }
            return py::make_tuple(py::array(py::cast(betas)), py::array(py::cast(alpha_bars)));
        },
        py::arg("steps") = 200, py::arg("beta_start") = 1e-4, py::arg("beta_end") = 0.02, "(betas, alpha_bars) for t = 1..T.");

    m.def("colorfulness", [](const Array& img) { return colorfulness(to_frame(img)); });
    m.def("psnr", [](const Array& a, const Array& b) { return psnr(to_frame(a), to_frame(b)); });
    m.def("ssim", [](const Array& a, const Array& b) { return ssim(to_frame(a), to_frame(b)); });
    m.def("palette_adherence", [](const Array& video, const Array& p) { return palette_adherence(to_video(video), to_palette(p)); });

    m.def(
        "train",
        [](const py::list& clips, const std::filesystem::path& out, int steps, std::uint64_t seed, int channels,
           int window, int timesteps, double lr, int batch) {
            std::vector<SynthClip> data;
            for (const auto& item : clips) {
                const auto pair = item.cast<py::tuple>();
                data.push_back({to_video(pair[0].cast<Array>()), to_video(pair[1].cast<Array>())});
            }
            if (data.empty()) throw InvalidArgument("train needs at least one clip");
            NetworkConfig config;
            config.base_channels = channels;
            config.window_frames = window;
            config.timesteps = timesteps;
            config.width = data.front().color.width();
            config.height = data.front().color.height();
            TrainOptions opt;
            opt.steps = steps;
            opt.seed = seed;
            opt.lr = lr;
            opt.batch_size = batch;
            TrainResult r;
            {
                py::gil_scoped_release release;
                r = train(data, config, opt);
            }
            save_checkpoint(r.checkpoint, out);
            return r.losses;
        },
        py::arg("clips"), py::arg("out"), py::arg("steps") = 2000, py::arg("seed") = 0, py::arg("channels") = 32,
        py::arg("window") = 8, py::arg("timesteps") = 200, py::arg("lr") = 1e-3, py::arg("batch") = 1,
        "Trains on [(color, gray), ...], writes the checkpoint, returns the loss curve.");

    m.def(
        "colorize",
        [](const std::filesystem::path& ckpt_path, const Array& gray, const Array& palette, int window, int overlap,
           std::uint64_t seed) {
            const Checkpoint ckpt = load_checkpoint(ckpt_path);
            const Video g = to_video(gray);
            const Palette p = to_palette(palette);
            Video out;
            {
                py::gil_scoped_release release;
                out = progressive_colorize(g, p, reference_from_gray(g[0]), ckpt, {window, overlap, seed, NoiseMode::shared});
            }
            return from_video(out);
        },
        py::arg("checkpoint"), py::arg("gray"), py::arg("palette"), py::arg("window") = 8, py::arg("overlap") = 2,
        py::arg("seed") = 0, "Colorizes an (F, H, W) gray clip; returns (F, H, W, 3).");
    m.def("plan_windows", [](int len, int window, int overlap) { return plan_windows(len, window, overlap).starts; });
}
