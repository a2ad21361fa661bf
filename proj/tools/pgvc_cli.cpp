// pgvc: synth, palette, fit-gmm, train, colorize, eval.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pgvc/error.hpp"
#include "pgvc/gmm.hpp"
#include "pgvc/llm_palette.hpp"
#include "pgvc/metrics.hpp"
#include "pgvc/network.hpp"
#include "pgvc/sampler.hpp"

using namespace pgvc;
namespace fs = std::filesystem;

namespace {

constexpr const char* kApiKeyEnv = "PGVC_API_KEY";

// Removes `path` on scope exit unless committed; only if it did not exist before.
class OutputGuard {
public:
    explicit OutputGuard(fs::path path) : path_(std::move(path)), existed_(fs::exists(path_)) {}
    ~OutputGuard() {
        if (!committed_ && !existed_) {
            std::error_code ec;
            fs::remove_all(path_, ec);
        }
    }
    void commit() { committed_ = true; }

private:
    fs::path path_;
    bool existed_;
    bool committed_ = false;
};

std::pair<int, int> parse_size(const std::string& s) {
    static const std::regex re(R"((\d+)x(\d+))");
    std::smatch m;
    if (!std::regex_match(s, m, re)) throw InvalidArgument("size must look like WxH, got '" + s + "'");
    return {std::stoi(m[1]), std::stoi(m[2])};
}

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

// A data directory holds one subdirectory per clip, each with color/ and gray/ manifests.
std::vector<SynthClip> load_dataset(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("data directory not found: " + dir.string());
    std::vector<fs::path> clip_dirs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory() && fs::exists(e.path() / "color" / "manifest.json")) clip_dirs.push_back(e.path());
    std::sort(clip_dirs.begin(), clip_dirs.end());
    if (clip_dirs.empty()) throw InvalidArgument("no clips with color/manifest.json under " + dir.string());
    std::vector<SynthClip> clips;
    for (const auto& d : clip_dirs) {
        Video color = read_video(d / "color");
        Video gray = fs::exists(d / "gray" / "manifest.json") ? read_video(d / "gray") : rgb_to_gray(color);
        if (color.channels() != 3) throw InvalidArgument(d.string() + "/color is not RGB");
        clips.push_back({std::move(color), std::move(gray)});
    }
    return clips;
}

int cmd_synth(int clips, int frames, const std::string& size, int shapes, std::uint64_t seed, const fs::path& out) {
    const auto [w, h] = parse_size(size);
    SynthConfig sc;
    sc.num_clips = clips;
    sc.frames_per_clip = frames;
    sc.width = w;
    sc.height = h;
    sc.num_shapes = shapes;
    sc.seed = seed;
    sc.validate();
    OutputGuard guard(out);
    const auto data = synth_generate(sc);
    for (std::size_t i = 0; i < data.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "clip_%03zu", i);
        write_video(data[i].color, out / name / "color");
        write_video(data[i].gray, out / name / "gray");
    }
    guard.commit();
    std::cerr << "wrote " << data.size() << " clips to " << out.string() << "\n";
    return 0;
}

struct PaletteSource {
    std::string from_image;
    std::string from_gmm;
    std::string from_file;
    std::string tags;
    bool offline = false;
    std::string endpoint;
    std::string model = "gpt-4o-mini";
    int timeout = 30;
    int retries = 0;
};

Palette resolve_palette(const PaletteSource& src, std::uint64_t seed) {
    if (!src.from_image.empty()) return kmeans_extract(read_ppm(src.from_image), seed);
    if (!src.from_gmm.empty()) return sample_palette(load_gmm(src.from_gmm), seed);
    if (!src.from_file.empty()) return load_palette(src.from_file);
    const TagList tags = TagList::parse(src.tags);
    if (src.offline) return offline_lookup(tags, seed);
    ChatEndpoint ep;
    ep.url = src.endpoint;
    if (const char* key = std::getenv(kApiKeyEnv)) ep.api_key = key;
    ep.model = src.model;
    ep.timeout = std::chrono::seconds(src.timeout);
    ep.retries = src.retries;
    return request_colors(ep, tags);
}

// Adds the palette selection flags; exactly one source is required.
void add_palette_flags(CLI::App* cmd, PaletteSource& src, bool with_file) {
    auto* group = cmd->add_option_group("palette source");
    group->add_option("--from-image", src.from_image, "K-means palette of a PPM image");
    group->add_option("--from-gmm", src.from_gmm, "Sample from a fitted GMM file");
    if (with_file) group->add_option("--palette", src.from_file, "Palette JSON file");
    auto* tags = group->add_option("--tags", src.tags, "Comma-separated content tags");
    group->require_option(1);
    auto* offline = cmd->add_flag("--offline", src.offline, "Use the built-in tag table");
    auto* endpoint = cmd->add_option("--endpoint", src.endpoint, "Chat-completion URL (key from $PGVC_API_KEY)");
    offline->needs(tags)->excludes(endpoint);
    endpoint->needs(tags);
    cmd->add_option("--model", src.model, "Model name sent to the endpoint");
    cmd->add_option("--timeout", src.timeout, "Endpoint timeout in seconds")->check(CLI::PositiveNumber);
    cmd->add_option("--retries", src.retries, "Endpoint retries")->check(CLI::NonNegativeNumber);
    cmd->callback([&src] {
        if (!src.tags.empty() && !src.offline && src.endpoint.empty())
            throw CLI::ValidationError("--tags", "needs either --offline or --endpoint");
    });
}

int cmd_palette(const PaletteSource& src, std::uint64_t seed, const fs::path& out) {
    const Palette p = resolve_palette(src, seed);
    ensure_parent(out);
    OutputGuard guard(out);
    save_palette(p, out);
    load_palette(out);
    guard.commit();
    std::cerr << "wrote palette to " << out.string() << "\n";
    return 0;
}

int cmd_fit_gmm(const fs::path& data, int components, int frames_per_video, double threshold, int max_iters,
                std::uint64_t seed, const fs::path& out) {
    const auto clips = load_dataset(data);
    std::vector<Video> videos;
    for (const auto& c : clips) videos.push_back(c.color);
    std::vector<Rgb> pixels = collect_training_pixels(videos, frames_per_video, seed, threshold);
    if (pixels.empty()) throw InvalidArgument("no pixels survive the variance filter");
    for (Rgb& p : pixels)
        for (double& v : p) v /= 255.0;
    std::cerr << "fitting " << components << " components on " << pixels.size() << " pixels\n";
    EmOptions eo;
    eo.components = components;
    eo.seed = seed;
    eo.max_iters = max_iters;
    const EmResult r = fit_em(pixels, eo);
    std::cerr << "log-likelihood " << r.log_likelihood.back() << " after " << r.log_likelihood.size() - 1
              << " iterations\n";
    ensure_parent(out);
    OutputGuard guard(out);
    save_gmm(r.model, out);
    load_gmm(out);
    guard.commit();
    return 0;
}

int cmd_train(const fs::path& data, NetworkConfig config, TrainOptions opt, const fs::path& out) {
    const auto clips = load_dataset(data);
    config.width = clips.front().color.width();
    config.height = clips.front().color.height();
    opt.on_log = [&](std::int64_t step, double loss) {
        std::cerr << "step " << step << "/" << opt.steps << " loss " << loss << "\n";
    };
    const TrainResult r = train(clips, config, opt);
    ensure_parent(out);
    OutputGuard guard(out);
    save_checkpoint(r.checkpoint, out);
    load_checkpoint(out);
    guard.commit();
    std::cerr << "wrote checkpoint to " << out.string() << "\n";
    return 0;
}

int cmd_colorize(const fs::path& ckpt_path, const fs::path& gray_path, const PaletteSource& src,
                 const std::string& ref_path, int window, int overlap, std::uint64_t seed, bool independent,
                 const fs::path& out) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const Video gray = read_video(gray_path);
    if (gray.channels() != 1) throw InvalidArgument("colorize needs a 1-channel input manifest");
    if (gray.width() != ckpt.config.width || gray.height() != ckpt.config.height)
        throw InvalidArgument("input frames do not match the checkpoint resolution");
    const Palette palette = resolve_palette(src, seed);
    Frame ref = ref_path.empty() ? reference_from_gray(gray[0]) : read_ppm(ref_path);
    if (ref.channels() == 1) ref = gray_to_rgb(ref);
    ProgressiveOptions po;
    po.window = window;
    po.overlap = overlap;
    po.seed = seed;
    po.noise = independent ? NoiseMode::independent : NoiseMode::shared;
    const auto plan = plan_windows(static_cast<int>(gray.size()), window, overlap);
    std::cerr << "colorizing " << gray.size() << " frames in " << plan.starts.size() << " windows\n";
    const Video result = progressive_colorize(gray, palette, ref, ckpt, po);
    OutputGuard guard(out);
    write_video(result, out);
    read_video(out);
    guard.commit();
    std::cerr << "wrote " << out.string() << "\n";
    return 0;
}

int cmd_eval(const fs::path& pred_path, const std::string& ref_path, const std::string& palette_path,
             const std::string& metrics, const std::string& out) {
    const Video pred = read_video(pred_path);
    std::optional<Video> ref;
    if (!ref_path.empty()) ref = read_video(ref_path);
    std::optional<Palette> palette;
    if (!palette_path.empty()) palette = load_palette(palette_path);
    std::vector<std::string> names;
    std::stringstream ss(metrics);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) names.push_back(item);
    if (names.empty()) throw InvalidArgument("--metrics is empty");
    const auto reports = evaluate(pred, ref ? &*ref : nullptr, palette ? &*palette : nullptr, names);
    for (const auto& r : reports) std::cerr << r.name << " " << r.aggregate << "\n";
    if (out.empty()) {
        std::cout << report_to_json(reports) << "\n";
        return 0;
    }
    ensure_parent(out);
    OutputGuard guard(out);
    save_report(reports, out);
    guard.commit();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Palette-guided video colorization toolkit"};
    app.require_subcommand(1);
    std::uint64_t seed = 0;
    int rc = 0;

    auto* synth = app.add_subcommand("synth", "Generate synthetic color/gray clips");
    int clips = 8, frames = 16, shapes = 3;
    std::string size = "32x32", out;
    synth->add_option("--clips", clips)->check(CLI::PositiveNumber);
    synth->add_option("--frames", frames)->check(CLI::PositiveNumber);
    synth->add_option("--size", size, "WxH");
    synth->add_option("--shapes", shapes)->check(CLI::NonNegativeNumber);
    synth->add_option("--seed", seed);
    synth->add_option("--out", out)->required();

    auto* palette = app.add_subcommand("palette", "Create a palette file");
    PaletteSource psrc;
    std::string palette_out = "palette.json";
    add_palette_flags(palette, psrc, false);
    palette->add_option("--seed", seed);
    palette->add_option("--out", palette_out);

    auto* fit = app.add_subcommand("fit-gmm", "Fit a color GMM to training clips");
    std::string data;
    int components = 8, fpv = 4, em_iters = 100;
    double threshold = 50.0;
    std::string gmm_out = "gmm.json";
    fit->add_option("--data", data)->required();
    fit->add_option("--components", components)->check(CLI::PositiveNumber);
    fit->add_option("--frames-per-video", fpv)->check(CLI::PositiveNumber);
    fit->add_option("--threshold", threshold, "Variance filter threshold (0-255 scale)");
    fit->add_option("--max-iters", em_iters)->check(CLI::PositiveNumber);
    fit->add_option("--seed", seed);
    fit->add_option("--out", gmm_out);

    auto* tr = app.add_subcommand("train", "Train the toy denoiser");
    NetworkConfig config;
    TrainOptions topt;
    std::string ckpt_out = "model.pgvc";
    tr->add_option("--data", data)->required();
    tr->add_option("--steps", topt.steps)->check(CLI::NonNegativeNumber);
    tr->add_option("--lr", topt.lr);
    tr->add_option("--batch", topt.batch_size)->check(CLI::PositiveNumber);
    tr->add_option("--warmup", topt.warmup_steps)->check(CLI::NonNegativeNumber);
    tr->add_option("--palette-dropout", topt.palette_dropout)->check(CLI::Range(0.0, 1.0));
    tr->add_option("--log-every", topt.log_every);
    tr->add_option("--channels", config.base_channels);
    tr->add_option("--window", config.window_frames);
    tr->add_option("--timesteps", config.timesteps);
    tr->add_option("--beta-start", config.beta_start);
    tr->add_option("--beta-end", config.beta_end);
    tr->add_option("--seed", seed);
    tr->add_option("--out", ckpt_out);

    auto* col = app.add_subcommand("colorize", "Colorize a gray clip");
    std::string ckpt_in, gray_in, ref_in, col_out;
    int window = 8, overlap = 2;
    bool independent = false;
    PaletteSource csrc;
    col->add_option("--ckpt", ckpt_in)->required();
    col->add_option("--gray", gray_in)->required();
    add_palette_flags(col, csrc, true);
    col->add_option("--ref", ref_in, "Reference frame PPM (default: first gray frame)");
    col->add_option("--window", window)->check(CLI::PositiveNumber);
    col->add_option("--overlap", overlap)->check(CLI::NonNegativeNumber);
    col->add_flag("--independent-noise", independent, "Draw fresh noise per window");
    col->add_option("--seed", seed);
    col->add_option("--out", col_out)->required();

    auto* ev = app.add_subcommand("eval", "Compute metrics");
    std::string pred_in, eval_ref, eval_palette, metrics = "colorful", report_out;
    ev->add_option("--pred", pred_in)->required();
    ev->add_option("--ref", eval_ref);
    ev->add_option("--palette", eval_palette);
    ev->add_option("--metrics", metrics, "Comma list of colorful, psnr, ssim, palette-adherence");
    ev->add_option("--out", report_out, "Report file (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) rc = cmd_synth(clips, frames, size, shapes, seed, out);
        else if (*palette) rc = cmd_palette(psrc, seed, palette_out);
        else if (*fit) rc = cmd_fit_gmm(data, components, fpv, threshold, em_iters, seed, gmm_out);
        else if (*tr) {
            topt.seed = seed;
            rc = cmd_train(data, config, topt, ckpt_out);
        } else if (*col) rc = cmd_colorize(ckpt_in, gray_in, csrc, ref_in, window, overlap, seed, independent, col_out);
        else if (*ev) rc = cmd_eval(pred_in, eval_ref, eval_palette, metrics, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}
