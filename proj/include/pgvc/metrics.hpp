#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pgvc/palette.hpp"
#include "pgvc/video.hpp"

namespace pgvc {

/// Hasler-Suesstrunk colorfulness on the 0-255 scale.
double colorfulness(const Frame& frame);

/// PSNR in dB for [0,1] data; identical inputs give kPsnrCap.
inline constexpr double kPsnrCap = 99.0;
double psnr(const Frame& pred, const Frame& ref);

/// Single-scale SSIM on Rec. 601 luminance, 11x11 Gaussian window (sigma 1.5), valid positions only.
double ssim(const Frame& pred, const Frame& ref);

/// Symmetric average nearest-neighbour RGB distance between two palettes.
double palette_distance(const Palette& a, const Palette& b);

/// Mean over frames of palette_distance(kmeans_extract(frame), palette). Lower is closer.
double palette_adherence(const Video& video, const Palette& palette);
std::vector<double> palette_adherence_per_frame(const Video& video, const Palette& palette);

struct MetricReport {
    std::string name;
    std::vector<double> per_frame;
    double aggregate = 0.0;
};

/// Known names: colorful, psnr, ssim, palette-adherence.
std::vector<MetricReport> evaluate(const Video& pred, const Video* ref, const Palette* palette,
                                   const std::vector<std::string>& metrics);

std::string report_to_json(const std::vector<MetricReport>& reports);
void save_report(const std::vector<MetricReport>& reports, const std::filesystem::path& path);

}  // namespace pgvc
