#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace pgvc {

/// A single image with row-major, channel-interleaved intensities in [0,1].
class Frame {
public:
    Frame() = default;
    /// Zero-filled frame.
    Frame(int width, int height, int channels);
    /// Validates size and range of `data`.
    Frame(int width, int height, int channels, std::vector<double> data);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    double at(int x, int y, int c) const { return data_[index(x, y, c)]; }
    double& at(int x, int y, int c) { return data_[index(x, y, c)]; }

    bool same_shape(const Frame& other) const {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }

    friend bool operator==(const Frame&, const Frame&) = default;

private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

/// Ordered frame sequence sharing one shape. Never empty.
class Video {
public:
    Video() = default;
    explicit Video(std::vector<Frame> frames, double fps = 24.0);

    std::size_t size() const { return frames_.size(); }
    bool empty() const { return frames_.empty(); }
    int width() const { return frames_.front().width(); }
    int height() const { return frames_.front().height(); }
    int channels() const { return frames_.front().channels(); }
    double fps() const { return fps_; }

    const Frame& operator[](std::size_t i) const { return frames_[i]; }
    const std::vector<Frame>& frames() const { return frames_; }

    friend bool operator==(const Video&, const Video&) = default;

private:
    std::vector<Frame> frames_;
    double fps_ = 24.0;
};

// Rec. 601 luma weights.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

inline double luma(double r, double g, double b) { return kLumaR * r + kLumaG * g + kLumaB * b; }

/// Quantize one intensity to a byte: round-half-up of v*255, clamped.
std::uint8_t quantize_byte(double v);

Frame rgb_to_gray(const Frame& frame);
Video rgb_to_gray(const Video& video);

/// Replicate a 1-channel frame into 3 equal channels.
Frame gray_to_rgb(const Frame& frame);

// PPM (P6, maxval 255). Gray frames are written with equal channels.
void write_ppm(const Frame& frame, const std::filesystem::path& path);
/// Reads P6 as RGB and P5 as gray.
Frame read_ppm(const std::filesystem::path& path);

/// Reads `manifest.json` (or the manifest inside a directory) and every frame it lists.
Video read_video(const std::filesystem::path& manifest_or_dir);
/// Writes frame_%05u.ppm files and manifest.json into `out_dir`. Returns the manifest path.
std::filesystem::path write_video(const Video& video, const std::filesystem::path& out_dir);

struct SynthConfig {
    int num_clips = 8;
    int frames_per_clip = 16;
    int width = 32;
    int height = 32;
    int num_shapes = 3;
    int shape_palette_size = 12;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthClip {
    Video color;
    Video gray;
};

/// The fixed set of saturated colors shapes are drawn from.
std::span<const std::array<double, 3>> synth_shape_colors();

/// Moving solid rectangles and disks over a solid background. Deterministic in `config.seed`.
std::vector<SynthClip> synth_generate(const SynthConfig& config);

}  // namespace pgvc
