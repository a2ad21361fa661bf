#include "pgvc/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "pgvc/error.hpp"

namespace pgvc {

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;
constexpr std::uint64_t kAdherenceSeed = 0;

std::vector<double> luminance(const Frame& f) {
    if (f.channels() == 1) return {f.data().begin(), f.data().end()};
    std::vector<double> out(f.pixel_count());
    const auto d = f.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = luma(d[3 * i], d[3 * i + 1], d[3 * i + 2]);
    return out;
}

std::array<double, kSsimWindow> gaussian_kernel() {
    std::array<double, kSsimWindow> k{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double x = i - kSsimWindow / 2;
        k[i] = std::exp(-x * x / (2.0 * kSsimSigma * kSsimSigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double colorfulness(const Frame& frame) {
    if (frame.channels() != 3) throw InvalidArgument("colorfulness needs an RGB frame");
    const auto d = frame.data();
    const std::size_t n = frame.pixel_count();
    double sum_rg = 0, sum_yb = 0, sq_rg = 0, sq_yb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = d[3 * i] * 255.0, g = d[3 * i + 1] * 255.0, b = d[3 * i + 2] * 255.0;
        const double rg = r - g;
        const double yb = 0.5 * (r + g) - b;
        sum_rg += rg;
        sum_yb += yb;
        sq_rg += rg * rg;
        sq_yb += yb * yb;
    }
    const double nd = static_cast<double>(n);
    const double mu_rg = sum_rg / nd, mu_yb = sum_yb / nd;
    const double var_rg = std::max(sq_rg / nd - mu_rg * mu_rg, 0.0);
    const double var_yb = std::max(sq_yb / nd - mu_yb * mu_yb, 0.0);
    return std::sqrt(var_rg + var_yb) + 0.3 * std::sqrt(mu_rg * mu_rg + mu_yb * mu_yb);
}

double psnr(const Frame& pred, const Frame& ref) {
    if (!pred.same_shape(ref)) throw InvalidArgument("psnr: frames differ in shape");
    const auto a = pred.data();
    const auto b = ref.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    const double mse = acc / static_cast<double>(a.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Frame& pred, const Frame& ref) {
    if (!pred.same_shape(ref)) throw InvalidArgument("ssim: frames differ in shape");
    const int w = pred.width(), h = pred.height();
    if (w < kSsimWindow || h < kSsimWindow) throw InvalidArgument("ssim: image smaller than the 11x11 window");
    const auto x = luminance(pred);
    const auto y = luminance(ref);
    const auto k = gaussian_kernel();
    double total = 0.0;
    std::size_t count = 0;
    for (int oy = 0; oy + kSsimWindow <= h; ++oy) {
        for (int ox = 0; ox + kSsimWindow <= w; ++ox) {
            double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
            for (int j = 0; j < kSsimWindow; ++j) {
                for (int i = 0; i < kSsimWindow; ++i) {
                    const double wt = k[j] * k[i];
                    const std::size_t idx = static_cast<std::size_t>(oy + j) * w + (ox + i);
                    const double a = x[idx], b = y[idx];
                    mx += wt * a;
                    my += wt * b;
                    xx += wt * a * a;
                    yy += wt * b * b;
                    xy += wt * a * b;
                }
            }
            const double vx = xx - mx * mx, vy = yy - my * my, cov = xy - mx * my;
            total += ((2 * mx * my + kSsimC1) * (2 * cov + kSsimC2)) /
                     ((mx * mx + my * my + kSsimC1) * (vx + vy + kSsimC2));
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

double palette_distance(const Palette& a, const Palette& b) {
    auto directed = [](const Palette& from, const Palette& to) {
        double acc = 0.0;
        for (const Rgb& p : from.colors()) {
            double best = std::numeric_limits<double>::infinity();
            for (const Rgb& q : to.colors()) {
                const double d = std::sqrt((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) +
                                           (p[2] - q[2]) * (p[2] - q[2]));
                best = std::min(best, d);
            }
            acc += best;
        }
        return acc / static_cast<double>(kPaletteSize);
    };
    return 0.5 * (directed(a, b) + directed(b, a));
}

std::vector<double> palette_adherence_per_frame(const Video& video, const Palette& palette) {
    if (video.channels() != 3) throw InvalidArgument("palette adherence needs an RGB video");
    std::vector<double> out;
    out.reserve(video.size());
    for (const Frame& f : video.frames()) out.push_back(palette_distance(kmeans_extract(f, kAdherenceSeed), palette));
    return out;
}

double palette_adherence(const Video& video, const Palette& palette) {
    return mean_of(palette_adherence_per_frame(video, palette));
}

std::vector<MetricReport> evaluate(const Video& pred, const Video* ref, const Palette* palette,
                                   const std::vector<std::string>& metrics) {
    std::vector<MetricReport> reports;
    for (const std::string& name : metrics) {
        MetricReport r{name, {}, 0.0};
        if (name == "colorful") {
            for (const Frame& f : pred.frames()) r.per_frame.push_back(colorfulness(f));
        } else if (name == "psnr" || name == "ssim") {
            if (ref == nullptr) throw InvalidArgument(name + " requires a reference video");
            if (ref->size() != pred.size()) throw InvalidArgument(name + ": prediction and reference lengths differ");
            for (std::size_t i = 0; i < pred.size(); ++i)
                r.per_frame.push_back(name == "psnr" ? psnr(pred[i], (*ref)[i]) : ssim(pred[i], (*ref)[i]));
        } else if (name == "palette-adherence") {
            if (palette == nullptr) throw InvalidArgument("palette-adherence requires a guidance palette");
            r.per_frame = palette_adherence_per_frame(pred, *palette);
        } else {
            throw InvalidArgument("unknown metric '" + name + "' (expected colorful, psnr, ssim, palette-adherence)");
        }
        r.aggregate = mean_of(r.per_frame);
        reports.push_back(std::move(r));
    }
    return reports;
}

std::string report_to_json(const std::vector<MetricReport>& reports) {
    nlohmann::ordered_json j;
    j["metrics"] = nlohmann::json::array();
    for (const MetricReport& r : reports)
        j["metrics"].push_back({{"name", r.name}, {"per_frame", r.per_frame}, {"aggregate", r.aggregate}});
    // Needs pretrained feature networks; not computed.
    j["fid"] = nullptr;
    j["fvd"] = nullptr;
    j["lpips"] = nullptr;
    return j.dump(2);
}

void save_report(const std::vector<MetricReport>& reports, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    os << report_to_json(reports) << '\n';
    if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace pgvc
