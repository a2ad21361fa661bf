#include "pgvc/video.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pgvc/error.hpp"
#include "pgvc/rng.hpp"

namespace pgvc {

namespace fs = std::filesystem;

Frame::Frame(int width, int height, int channels)
    : Frame(width, height, channels,
            std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0) *
                                std::max(channels, 0))) {}

Frame::Frame(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    if (width < 1 || height < 1) throw InvalidArgument("frame dimensions must be positive");
    if (channels != 1 && channels != 3) throw InvalidArgument("frame must have 1 or 3 channels");
    if (data_.size() != pixel_count() * channels_)
        throw InvalidArgument("frame data length does not match width*height*channels");
    for (double v : data_) {
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("frame intensity outside [0,1]");
    }
}

Video::Video(std::vector<Frame> frames, double fps) : frames_(std::move(frames)), fps_(fps) {
    if (frames_.empty()) throw InvalidArgument("video must contain at least one frame");
    for (const Frame& f : frames_) {
        if (!f.same_shape(frames_.front()))
            throw InvalidArgument("video frames differ in width, height or channels");
    }
}

std::uint8_t quantize_byte(double v) {
    const double scaled = std::floor(v * 255.0 + 0.5);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

Frame rgb_to_gray(const Frame& frame) {
    if (frame.channels() != 3) throw InvalidArgument("rgb_to_gray expects a 3-channel frame");
    std::vector<double> out(frame.pixel_count());
    const auto in = frame.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::clamp(luma(in[3 * i], in[3 * i + 1], in[3 * i + 2]), 0.0, 1.0);
    }
    return Frame(frame.width(), frame.height(), 1, std::move(out));
}

Video rgb_to_gray(const Video& video) {
    if (video.channels() != 3) throw InvalidArgument("video is already grayscale");
    std::vector<Frame> frames;
    frames.reserve(video.size());
    for (const Frame& f : video.frames()) frames.push_back(rgb_to_gray(f));
    return Video(std::move(frames), video.fps());
}

Frame gray_to_rgb(const Frame& frame) {
    if (frame.channels() == 3) return frame;
    std::vector<double> out(frame.pixel_count() * 3);
    const auto in = frame.data();
    for (std::size_t i = 0; i < in.size(); ++i) out[3 * i] = out[3 * i + 1] = out[3 * i + 2] = in[i];
    return Frame(frame.width(), frame.height(), 3, std::move(out));
}

void write_ppm(const Frame& frame, const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    os << "P6\n" << frame.width() << ' ' << frame.height() << "\n255\n";
    std::vector<std::uint8_t> bytes(frame.pixel_count() * 3);
    const auto in = frame.data();
    for (std::size_t i = 0; i < frame.pixel_count(); ++i) {
        for (int c = 0; c < 3; ++c) {
            const double v = frame.channels() == 3 ? in[3 * i + c] : in[i];
            bytes[3 * i + c] = quantize_byte(v);
        }
    }
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed: " + path.string());
}

namespace {

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string header_token(std::istream& is, const fs::path& path) {
    std::string tok;
    while (is) {
        int ch = is.peek();
        if (ch == '#') {
            std::string discard;
            std::getline(is, discard);
        } else if (std::isspace(ch)) {
            is.get();
        } else {
            break;
        }
    }
    is >> tok;
    if (tok.empty()) throw FormatError("truncated PPM header: " + path.string());
    return tok;
}

int header_int(std::istream& is, const fs::path& path) {
    const std::string tok = header_token(is, path);
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size() || v < 1) throw FormatError("");
        return v;
    } catch (const std::exception&) {
        throw FormatError("malformed PPM header value '" + tok + "' in " + path.string());
    }
}

}  // namespace

Frame read_ppm(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("missing frame file: " + path.string());
    const std::string magic = header_token(is, path);
    if (magic != "P6" && magic != "P5") throw FormatError("not a binary PPM/PGM file: " + path.string());
    const int channels = magic == "P6" ? 3 : 1;
    const int width = header_int(is, path);
    const int height = header_int(is, path);
    const int maxval = header_int(is, path);
    if (maxval != 255) throw FormatError("only maxval 255 is supported: " + path.string());
    is.get();  // single whitespace byte before raster
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(width) * height * channels);
    is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (is.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw FormatError("truncated raster in " + path.string());
    std::vector<double> data(bytes.size());
    std::transform(bytes.begin(), bytes.end(), data.begin(), [](std::uint8_t b) { return b / 255.0; });
    return Frame(width, height, channels, std::move(data));
}

Video read_video(const fs::path& manifest_or_dir) {
    const fs::path manifest = fs::is_directory(manifest_or_dir) ? manifest_or_dir / "manifest.json" : manifest_or_dir;
    std::ifstream is(manifest);
    if (!is) throw IoError("missing manifest: " + manifest.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed manifest " + manifest.string() + ": " + e.what());
    }
    int width = 0, height = 0, channels = 0;
    double fps = 24.0;
    std::vector<std::string> names;
    try {
        width = j.at("width").get<int>();
        height = j.at("height").get<int>();
        channels = j.at("channels").get<int>();
        fps = j.value("fps", 24.0);
        names = j.at("frames").get<std::vector<std::string>>();
        if (j.contains("frame_count") && j.at("frame_count").get<std::size_t>() != names.size())
            throw FormatError("manifest frame_count does not match frame list");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed manifest " + manifest.string() + ": " + e.what());
    }
    if (channels != 1 && channels != 3) throw FormatError("manifest channels must be 1 or 3");
    const fs::path base = manifest.parent_path();
    std::vector<Frame> frames;
    frames.reserve(names.size());
    for (const std::string& name : names) {
        Frame f = read_ppm(base / name);
        if (f.width() != width || f.height() != height)
            throw FormatError("frame " + name + " is " + std::to_string(f.width()) + "x" +
                              std::to_string(f.height()) + ", manifest says " + std::to_string(width) + "x" +
                              std::to_string(height));
        if (channels == 1 && f.channels() == 3) {
            // Gray frames are stored as P6 with equal channels; keep the first.
            std::vector<double> g(f.pixel_count());
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = f.data()[3 * i];
            f = Frame(width, height, 1, std::move(g));
        } else if (channels == 3 && f.channels() == 1) {
            f = gray_to_rgb(f);
        }
        frames.push_back(std::move(f));
    }
    if (frames.empty()) throw FormatError("manifest lists no frames: " + manifest.string());
    return Video(std::move(frames), fps);
}

fs::path write_video(const Video& video, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create directory " + out_dir.string() + ": " + ec.message());
    std::vector<std::string> names;
    names.reserve(video.size());
    for (std::size_t i = 0; i < video.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%05u.ppm", static_cast<unsigned>(i));
        write_ppm(video[i], out_dir / name);
        names.emplace_back(name);
    }
    nlohmann::ordered_json j;
    j["width"] = video.width();
    j["height"] = video.height();
    j["channels"] = video.channels();
    j["fps"] = video.fps();
    j["frame_count"] = video.size();
    j["frames"] = names;
    const fs::path manifest = out_dir / "manifest.json";
    std::ofstream os(manifest);
    if (!os) throw IoError("cannot open for writing: " + manifest.string());
    os << j.dump(2) << '\n';
    if (!os) throw IoError("write failed: " + manifest.string());
    return manifest;
}

void SynthConfig::validate() const {
    if (num_clips < 1) throw InvalidArgument("num_clips must be >= 1");
    if (frames_per_clip < 1) throw InvalidArgument("frames_per_clip must be >= 1");
    if (width < 8 || height < 8) throw InvalidArgument("synthetic frames must be at least 8x8");
    if (num_shapes < 0) throw InvalidArgument("num_shapes must be >= 0");
    if (shape_palette_size < 1 || shape_palette_size > static_cast<int>(synth_shape_colors().size()))
        throw InvalidArgument("shape_palette_size must be in [1, " +
                              std::to_string(synth_shape_colors().size()) + "]");
}

namespace {

constexpr std::array<std::array<double, 3>, 12> kShapeColors{{
    {0.90, 0.10, 0.10},  // red
    {0.10, 0.20, 0.90},  // blue
    {0.10, 0.75, 0.20},  // green
    {0.95, 0.85, 0.10},  // yellow
    {0.85, 0.10, 0.80},  // magenta
    {0.10, 0.80, 0.85},  // cyan
    {0.95, 0.50, 0.10},  // orange
    {0.50, 0.15, 0.75},  // purple
    {0.60, 0.90, 0.10},  // lime
    {0.95, 0.45, 0.60},  // pink
    {0.05, 0.50, 0.50},  // teal
    {0.60, 0.30, 0.10},  // brown
}};

// Neutral backgrounds keep all color ambiguity in the shapes.
constexpr std::array<double, 4> kBackgroundLevels{0.12, 0.35, 0.62, 0.88};

struct Shape {
    bool disk;
    double cx, cy, vx, vy, half_w, half_h;
    std::array<double, 3> color;

    bool covers(double x, double y) const {
        const double dx = x - cx, dy = y - cy;
        if (disk) return dx * dx + dy * dy <= half_w * half_w;
        return std::abs(dx) <= half_w && std::abs(dy) <= half_h;
    }
};

}  // namespace

std::span<const std::array<double, 3>> synth_shape_colors() { return kShapeColors; }

std::vector<SynthClip> synth_generate(const SynthConfig& config) {
    config.validate();
    std::vector<SynthClip> clips;
    clips.reserve(config.num_clips);
    const double min_dim = std::min(config.width, config.height);
    for (int clip = 0; clip < config.num_clips; ++clip) {
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(clip)));
        const double bg = kBackgroundLevels[rng.index(kBackgroundLevels.size())];

        std::vector<std::size_t> color_ids(config.shape_palette_size);
        for (std::size_t i = 0; i < color_ids.size(); ++i) color_ids[i] = i;
        std::vector<Shape> shapes;
        for (int s = 0; s < config.num_shapes; ++s) {
            // Distinct colors per clip while the palette lasts.
            std::size_t pick;
            if (s < config.shape_palette_size) {
                const std::size_t j = s + rng.index(color_ids.size() - s);
                std::swap(color_ids[s], color_ids[j]);
                pick = color_ids[s];
            } else {
                pick = color_ids[rng.index(color_ids.size())];
            }
            Shape sh{};
            sh.disk = rng.uniform() < 0.5;
            sh.half_w = rng.uniform(0.12, 0.25) * min_dim;
            sh.half_h = sh.disk ? sh.half_w : rng.uniform(0.12, 0.25) * min_dim;
            sh.cx = rng.uniform(0.2, 0.8) * config.width;
            sh.cy = rng.uniform(0.2, 0.8) * config.height;
            sh.vx = rng.uniform(-1.0, 1.0) * min_dim / 32.0;
            sh.vy = rng.uniform(-1.0, 1.0) * min_dim / 32.0;
            sh.color = kShapeColors[pick];
            shapes.push_back(sh);
        }

        std::vector<Frame> frames;
        frames.reserve(config.frames_per_clip);
        for (int t = 0; t < config.frames_per_clip; ++t) {
            Frame f(config.width, config.height, 3);
            for (int y = 0; y < config.height; ++y) {
                for (int x = 0; x < config.width; ++x) {
                    std::array<double, 3> c{bg, bg, bg};
                    for (const Shape& sh : shapes) {
                        Shape moved = sh;
                        moved.cx += sh.vx * t;
                        moved.cy += sh.vy * t;
                        if (moved.covers(x + 0.5, y + 0.5)) c = sh.color;
                    }
                    for (int ch = 0; ch < 3; ++ch) f.at(x, y, ch) = c[ch];
                }
            }
            frames.push_back(std::move(f));
        }
        Video color(std::move(frames));
        Video gray = rgb_to_gray(color);
        clips.push_back({std::move(color), std::move(gray)});
    }
    return clips;
}

}  // namespace pgvc
