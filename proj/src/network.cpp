#include "pgvc/network.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "pgvc/error.hpp"
#include "pgvc/rng.hpp"

namespace pgvc {

void NetworkConfig::validate() const {
    if (base_channels < 8) throw InvalidArgument("base_channels must be >= 8");
    if (window_frames < 2) throw InvalidArgument("window_frames must be >= 2");
    if (height < 1 || width < 1) throw InvalidArgument("network height/width must be positive");
    if (palette_dim != static_cast<int>(kPaletteDim)) throw InvalidArgument("palette_dim must be 15");
    make_schedule(timesteps, beta_start, beta_end);
}

std::size_t TensorSpec::numel() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
}

std::vector<TensorSpec> parameter_specs(const NetworkConfig& config) {
    const int c = config.base_channels;
    return {
        {"in_conv.weight", {c, 4, 3, 3}},
        {"in_conv.bias", {c}},
        {"palette_proj.weight", {c, config.palette_dim}},
        {"time_proj.weight", {c, 2 * c}},
        {"ref_encoder.weight", {c, 3, 3, 3}},
        {"ref_encoder.bias", {c}},
        {"body1.weight", {c, c, 3, 3}},
        {"body1.bias", {c}},
        {"temporal.depthwise", {c, 3}},
        {"temporal.pointwise", {c, c}},
        {"temporal.bias", {c}},
        {"body2.weight", {c, c, 3, 3}},
        {"body2.bias", {c}},
        {"out_conv.weight", {3, c, 3, 3}},
        {"out_conv.bias", {3}},
    };
}

template <typename Scalar>
Parameters<Scalar> zero_parameters(const NetworkConfig& config) {
    config.validate();
    Parameters<Scalar> p;
    const auto specs = parameter_specs(config);
    std::size_t i = 0;
    p.for_each([&](AlignedVector<Scalar>& v) { v.assign(specs[i++].numel(), Scalar(0)); });
    return p;
}

template <typename Scalar>
Parameters<Scalar> init_parameters(const NetworkConfig& config, std::uint64_t seed) {
    Parameters<Scalar> p = zero_parameters<Scalar>(config);
    const auto specs = parameter_specs(config);
    Rng rng(seed);
    std::size_t i = 0;
    p.for_each([&](AlignedVector<Scalar>& v) {
        const TensorSpec& spec = specs[i++];
        if (spec.shape.size() == 1) return;  // biases stay zero
        const std::size_t fan_in = spec.numel() / static_cast<std::size_t>(spec.shape[0]);
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (Scalar& x : v) x = static_cast<Scalar>(rng.uniform(-bound, bound));
    });
    return p;
}

template <typename To, typename From>
Parameters<To> cast_parameters(const Parameters<From>& p) {
    Parameters<To> out;
    std::vector<const AlignedVector<From>*> src;
    p.for_each([&](const AlignedVector<From>& v) { src.push_back(&v); });
    std::size_t i = 0;
    out.for_each([&](AlignedVector<To>& v) {
        const auto& s = *src[i++];
        v.resize(s.size());
        for (std::size_t k = 0; k < s.size(); ++k) v[k] = static_cast<To>(s[k]);
    });
    return out;
}

std::vector<double> project_palette(const Palette& palette, std::span<const double> proj, int channels) {
    const auto flat = palette.flatten();
    return project_palette_vector(flat, proj, channels);
}

std::vector<double> project_palette_vector(std::span<const double> flat, std::span<const double> proj, int channels) {
    if (flat.size() != kPaletteDim) throw InvalidArgument("project_palette: palette vector must have 15 entries");
    if (proj.size() != static_cast<std::size_t>(channels) * kPaletteDim)
        throw InvalidArgument("project_palette: projection must be C x 15");
    std::vector<double> out(channels, 0.0);
    for (int c = 0; c < channels; ++c) {
        for (std::size_t j = 0; j < kPaletteDim; ++j) out[c] += proj[c * kPaletteDim + j] * flat[j];
    }
    return out;
}

std::vector<double> timestep_encoding(int t, int channels) {
    std::vector<double> e(2 * static_cast<std::size_t>(channels));
    for (int k = 0; k < channels; ++k) {
        const double freq = std::pow(10000.0, -static_cast<double>(k) / channels);
        e[2 * k] = std::sin(t * freq);
        e[2 * k + 1] = std::cos(t * freq);
    }
    return e;
}

Frame reference_from_gray(const Frame& gray) { return gray_to_rgb(gray); }

namespace {

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MapMat = Eigen::Map<RowMat<S>>;
template <typename S>
using MapConstMat = Eigen::Map<const RowMat<S>>;

// col[(ci*9 + ky*3 + kx) * P + y*W + x] = in[ci][y+ky-1][x+kx-1], zero outside.
template <typename S>
void im2col(const S* in, int cin, int h, int w, S* col) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int ci = 0; ci < cin; ++ci) {
        const S* src = in + ci * plane;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                S* dst = col + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * plane;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + ky - 1;
                    S* row = dst + static_cast<std::size_t>(y) * w;
                    if (sy < 0 || sy >= h) {
                        std::fill(row, row + w, S(0));
                        continue;
                    }
                    const S* srow = src + static_cast<std::size_t>(sy) * w;
                    for (int x = 0; x < w; ++x) {
                        const int sx = x + kx - 1;
                        row[x] = (sx < 0 || sx >= w) ? S(0) : srow[sx];
                    }
                }
            }
        }
    }
}

template <typename S>
void col2im_add(const S* col, int cin, int h, int w, S* out) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int ci = 0; ci < cin; ++ci) {
        S* dst = out + ci * plane;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const S* src = col + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * plane;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + ky - 1;
                    if (sy < 0 || sy >= h) continue;
                    const S* row = src + static_cast<std::size_t>(y) * w;
                    S* drow = dst + static_cast<std::size_t>(sy) * w;
                    for (int x = 0; x < w; ++x) {
                        const int sx = x + kx - 1;
                        if (sx >= 0 && sx < w) drow[sx] += row[x];
                    }
                }
            }
        }
    }
}

// 3x3 same-padded convolution of one frame; `col` receives the im2col buffer.
template <typename S>
void conv_forward(const S* in, int cin, int h, int w, const AlignedVector<S>& weight, const AlignedVector<S>& bias,
                  int cout, S* col, S* out) {
    const Eigen::Index plane = static_cast<Eigen::Index>(h) * w;
    im2col(in, cin, h, w, col);
    MapConstMat<S> wm(weight.data(), cout, cin * 9);
    MapConstMat<S> cm(col, cin * 9, plane);
    MapMat<S> om(out, cout, plane);
    om.noalias() = wm * cm;
    for (int o = 0; o < cout; ++o) om.row(o).array() += bias[o];
}

// Accumulates weight/bias gradients; writes input gradient when `grad_in` is non-null.
template <typename S>
void conv_backward(const S* col, int cin, int h, int w, const AlignedVector<S>& weight, int cout, const S* grad_out,
                   AlignedVector<S>& grad_w, AlignedVector<S>& grad_b, S* grad_in, AlignedVector<S>& scratch) {
    const Eigen::Index plane = static_cast<Eigen::Index>(h) * w;
    MapConstMat<S> go(grad_out, cout, plane);
    MapConstMat<S> cm(col, cin * 9, plane);
    MapMat<S> gw(grad_w.data(), cout, cin * 9);
    gw.noalias() += go * cm.transpose();
    for (int o = 0; o < cout; ++o) grad_b[o] += go.row(o).sum();
    if (grad_in == nullptr) return;
    scratch.resize(static_cast<std::size_t>(cin) * 9 * plane);
    MapConstMat<S> wm(weight.data(), cout, cin * 9);
    MapMat<S> gc(scratch.data(), cin * 9, plane);
    gc.noalias() = wm.transpose() * go;
    col2im_add(scratch.data(), cin, h, w, grad_in);
}

template <typename S>
S sigmoid(S x) {
    return S(1) / (S(1) + std::exp(-x));
}

}  // namespace

template <typename Scalar>
struct ForwardCache {
    int frames = 0, height = 0, width = 0;
    int ref_height = 0, ref_width = 0;
    AlignedVector<Scalar> col_in, col_ref, col_b1, col_b2, col_out;
    AlignedVector<Scalar> a1, s1, mixed_depth, m, a2, s2;
    std::array<Scalar, kPaletteDim> palette{};
    AlignedVector<Scalar> time_enc;
    AlignedVector<Scalar> scratch, scratch2;
};

template <typename Scalar>
Denoiser<Scalar>::Denoiser(const NetworkConfig& config) : config_(config), cache_(std::make_unique<ForwardCache<Scalar>>()) {
    config_.validate();
}

template <typename Scalar>
Denoiser<Scalar>::~Denoiser() = default;
template <typename Scalar>
Denoiser<Scalar>::Denoiser(Denoiser&&) noexcept = default;
template <typename Scalar>
Denoiser<Scalar>& Denoiser<Scalar>::operator=(Denoiser&&) noexcept = default;

template <typename Scalar>
AlignedVector<Scalar> Denoiser<Scalar>::forward(const Parameters<Scalar>& p, std::span<const Scalar> input, int frames,
                                              int height, int width, const Conditioning& cond, bool keep_cache) {
    using S = Scalar;
    const int C = config_.base_channels;
    if (frames < 1 || height < 1 || width < 1) throw InvalidArgument("denoiser: empty window");
    const std::size_t P = static_cast<std::size_t>(height) * width;
    if (input.size() != static_cast<std::size_t>(frames) * 4 * P)
        throw InvalidArgument("denoiser: input must be N x 4 x H x W");
    if (cond.reference.channels() != 3) throw InvalidArgument("denoiser: reference frame must be RGB");
    if (p.in_w.size() != static_cast<std::size_t>(C) * 36 || p.body1_w.size() != static_cast<std::size_t>(C) * C * 9)
        throw InvalidArgument("denoiser: parameters do not match the network config");

    ForwardCache<S>& k = *cache_;
    k.frames = frames;
    k.height = height;
    k.width = width;
    const std::size_t NCP = static_cast<std::size_t>(frames) * C * P;
    const std::size_t colC = static_cast<std::size_t>(C) * 9 * P;

    // Conditioning vector: palette projection + timestep embedding + reference embedding.
    AlignedVector<S> cond_vec(C, S(0));
    const auto flat = cond.palette.flatten();
    for (std::size_t j = 0; j < kPaletteDim; ++j) k.palette[j] = static_cast<S>(flat[j]);
    for (int c = 0; c < C; ++c) {
        S acc = 0;
        for (std::size_t j = 0; j < kPaletteDim; ++j) acc += p.palette_proj[c * kPaletteDim + j] * k.palette[j];
        cond_vec[c] += acc;
    }
    const auto enc = timestep_encoding(cond.timestep, C);
    k.time_enc.assign(enc.begin(), enc.end());
    for (int c = 0; c < C; ++c) {
        S acc = 0;
        for (int j = 0; j < 2 * C; ++j) acc += p.time_proj[static_cast<std::size_t>(c) * 2 * C + j] * k.time_enc[j];
        cond_vec[c] += acc;
    }
    {
        const Frame& ref = cond.reference;
        k.ref_height = ref.height();
        k.ref_width = ref.width();
        const std::size_t RP = ref.pixel_count();
        AlignedVector<S> ref_planar(3 * RP);
        const auto rd = ref.data();
        for (std::size_t i = 0; i < RP; ++i)
            for (int c = 0; c < 3; ++c) ref_planar[c * RP + i] = static_cast<S>(rd[3 * i + c]);
        k.col_ref.resize(27 * RP);
        AlignedVector<S> ref_feat(static_cast<std::size_t>(C) * RP);
        conv_forward(ref_planar.data(), 3, ref.height(), ref.width(), p.ref_w, p.ref_b, C, k.col_ref.data(),
                     ref_feat.data());
        for (int c = 0; c < C; ++c) {
            S acc = 0;
            for (std::size_t i = 0; i < RP; ++i) acc += ref_feat[c * RP + i];
            cond_vec[c] += acc / static_cast<S>(RP);
        }
    }

    // in_conv + broadcast conditioning.
    AlignedVector<S> h1(NCP);
    k.col_in.resize(static_cast<std::size_t>(frames) * 36 * P);
    for (int n = 0; n < frames; ++n) {
        conv_forward(input.data() + n * 4 * P, 4, height, width, p.in_w, p.in_b, C, k.col_in.data() + n * 36 * P,
                     h1.data() + n * C * P);
        for (int c = 0; c < C; ++c) {
            S* plane = h1.data() + (static_cast<std::size_t>(n) * C + c) * P;
            for (std::size_t i = 0; i < P; ++i) plane[i] += cond_vec[c];
        }
    }

    // body1 + swish.
    k.col_b1.resize(frames * colC);
    k.a1.resize(NCP);
    k.s1.resize(NCP);
    for (int n = 0; n < frames; ++n)
        conv_forward(h1.data() + n * C * P, C, height, width, p.body1_w, p.body1_b, C, k.col_b1.data() + n * colC,
                     k.a1.data() + n * C * P);
    for (std::size_t i = 0; i < NCP; ++i) k.s1[i] = k.a1[i] * sigmoid(k.a1[i]);

    // Temporal mixing: depthwise kernel-3 conv over frames, pointwise channel mix, residual.
    k.mixed_depth.assign(NCP, S(0));
    for (int n = 0; n < frames; ++n) {
        for (int c = 0; c < C; ++c) {
            S* dst = k.mixed_depth.data() + (static_cast<std::size_t>(n) * C + c) * P;
            for (int tap = 0; tap < 3; ++tap) {
                const int src_n = n + tap - 1;
                if (src_n < 0 || src_n >= frames) continue;
                const S wgt = p.temporal_dw[c * 3 + tap];
                const S* src = k.s1.data() + (static_cast<std::size_t>(src_n) * C + c) * P;
                for (std::size_t i = 0; i < P; ++i) dst[i] += wgt * src[i];
            }
        }
    }
    k.m = k.s1;
    {
        MapConstMat<S> pw(p.temporal_pw.data(), C, C);
        for (int n = 0; n < frames; ++n) {
            MapConstMat<S> d(k.mixed_depth.data() + n * C * P, C, static_cast<Eigen::Index>(P));
            MapMat<S> out(k.m.data() + n * C * P, C, static_cast<Eigen::Index>(P));
            out.noalias() += pw * d;
            for (int c = 0; c < C; ++c) out.row(c).array() += p.temporal_b[c];
        }
    }

    // body2 + swish.
    k.col_b2.resize(frames * colC);
    k.a2.resize(NCP);
    k.s2.resize(NCP);
    for (int n = 0; n < frames; ++n)
        conv_forward(k.m.data() + n * C * P, C, height, width, p.body2_w, p.body2_b, C, k.col_b2.data() + n * colC,
                     k.a2.data() + n * C * P);
    for (std::size_t i = 0; i < NCP; ++i) k.s2[i] = k.a2[i] * sigmoid(k.a2[i]);

    // out_conv.
    AlignedVector<S> out(static_cast<std::size_t>(frames) * 3 * P);
    k.col_out.resize(frames * colC);
    for (int n = 0; n < frames; ++n)
        conv_forward(k.s2.data() + n * C * P, C, height, width, p.out_w, p.out_b, 3, k.col_out.data() + n * colC,
                     out.data() + n * 3 * P);

    if (!keep_cache) k.frames = 0;
    return out;
}

template <typename Scalar>
Parameters<Scalar> Denoiser<Scalar>::backward(const Parameters<Scalar>& p, std::span<const Scalar> grad_output) {
    using S = Scalar;
    ForwardCache<S>& k = *cache_;
    if (k.frames == 0) throw InvalidArgument("denoiser: backward called without a cached forward pass");
    const int C = config_.base_channels;
    const int frames = k.frames, height = k.height, width = k.width;
    const std::size_t P = static_cast<std::size_t>(height) * width;
    const std::size_t NCP = static_cast<std::size_t>(frames) * C * P;
    const std::size_t colC = static_cast<std::size_t>(C) * 9 * P;
    if (grad_output.size() != static_cast<std::size_t>(frames) * 3 * P)
        throw InvalidArgument("denoiser: gradient shape differs from output");

    Parameters<S> g = zero_parameters<S>(config_);
    const AlignedVector<S> grad_out(grad_output.begin(), grad_output.end());

    // out_conv -> ds2 -> da2.
    AlignedVector<S> grad(NCP, S(0));
    for (int n = 0; n < frames; ++n)
        conv_backward(k.col_out.data() + n * colC, C, height, width, p.out_w, 3, grad_out.data() + n * 3 * P,
                      g.out_w, g.out_b, grad.data() + n * C * P, k.scratch);
    for (std::size_t i = 0; i < NCP; ++i) {
        const S sg = sigmoid(k.a2[i]);
        grad[i] *= sg * (S(1) + k.a2[i] * (S(1) - sg));
    }

    // body2 -> dm.
    AlignedVector<S> grad_m(NCP, S(0));
    for (int n = 0; n < frames; ++n)
        conv_backward(k.col_b2.data() + n * colC, C, height, width, p.body2_w, C, grad.data() + n * C * P, g.body2_w,
                      g.body2_b, grad_m.data() + n * C * P, k.scratch);

    // Temporal mixing. Residual path passes dm straight to ds1.
    AlignedVector<S> grad_s1 = grad_m;
    AlignedVector<S> grad_depth(NCP);
    {
        MapConstMat<S> pw(p.temporal_pw.data(), C, C);
        MapMat<S> gpw(g.temporal_pw.data(), C, C);
        for (int n = 0; n < frames; ++n) {
            MapConstMat<S> dm(grad_m.data() + n * C * P, C, static_cast<Eigen::Index>(P));
            MapConstMat<S> d(k.mixed_depth.data() + n * C * P, C, static_cast<Eigen::Index>(P));
            gpw.noalias() += dm * d.transpose();
            for (int c = 0; c < C; ++c) g.temporal_b[c] += dm.row(c).sum();
            MapMat<S> dd(grad_depth.data() + n * C * P, C, static_cast<Eigen::Index>(P));
            dd.noalias() = pw.transpose() * dm;
        }
    }
    for (int n = 0; n < frames; ++n) {
        for (int c = 0; c < C; ++c) {
            const S* dd = grad_depth.data() + (static_cast<std::size_t>(n) * C + c) * P;
            for (int tap = 0; tap < 3; ++tap) {
                const int src_n = n + tap - 1;
                if (src_n < 0 || src_n >= frames) continue;
                const std::size_t off = (static_cast<std::size_t>(src_n) * C + c) * P;
                const S* src = k.s1.data() + off;
                S* gs = grad_s1.data() + off;
                const S wgt = p.temporal_dw[c * 3 + tap];
                S acc = 0;
                for (std::size_t i = 0; i < P; ++i) {
                    acc += dd[i] * src[i];
                    gs[i] += wgt * dd[i];
                }
                g.temporal_dw[c * 3 + tap] += acc;
            }
        }
    }
    for (std::size_t i = 0; i < NCP; ++i) {
        const S sg = sigmoid(k.a1[i]);
        grad_s1[i] *= sg * (S(1) + k.a1[i] * (S(1) - sg));
    }

    // body1 -> dh1.
    AlignedVector<S> grad_h1(NCP, S(0));
    for (int n = 0; n < frames; ++n)
        conv_backward(k.col_b1.data() + n * colC, C, height, width, p.body1_w, C, grad_s1.data() + n * C * P,
                      g.body1_w, g.body1_b, grad_h1.data() + n * C * P, k.scratch);

    // Broadcast conditioning collects the spatial/temporal sum of dh1.
    AlignedVector<S> grad_cond(C, S(0));
    for (int n = 0; n < frames; ++n)
        for (int c = 0; c < C; ++c) {
            const S* src = grad_h1.data() + (static_cast<std::size_t>(n) * C + c) * P;
            S acc = 0;
            for (std::size_t i = 0; i < P; ++i) acc += src[i];
            grad_cond[c] += acc;
        }
    for (int c = 0; c < C; ++c) {
        for (std::size_t j = 0; j < kPaletteDim; ++j) g.palette_proj[c * kPaletteDim + j] += grad_cond[c] * k.palette[j];
        for (int j = 0; j < 2 * C; ++j)
            g.time_proj[static_cast<std::size_t>(c) * 2 * C + j] += grad_cond[c] * k.time_enc[j];
    }
    {
        const std::size_t RP = static_cast<std::size_t>(k.ref_height) * k.ref_width;
        AlignedVector<S> grad_ref(static_cast<std::size_t>(C) * RP);
        for (int c = 0; c < C; ++c) std::fill_n(grad_ref.data() + c * RP, RP, grad_cond[c] / static_cast<S>(RP));
        conv_backward(k.col_ref.data(), 3, k.ref_height, k.ref_width, p.ref_w, C, grad_ref.data(), g.ref_w, g.ref_b,
                      static_cast<S*>(nullptr), k.scratch);
    }

    // in_conv: input is data, no input gradient needed.
    for (int n = 0; n < frames; ++n)
        conv_backward(k.col_in.data() + n * 36 * P, 4, height, width, p.in_w, C, grad_h1.data() + n * C * P, g.in_w,
                      g.in_b, static_cast<S*>(nullptr), k.scratch);
    return g;
}

template struct Parameters<float>;
template struct Parameters<double>;
template class Denoiser<float>;
template class Denoiser<double>;
template Parameters<float> zero_parameters<float>(const NetworkConfig&);
template Parameters<double> zero_parameters<double>(const NetworkConfig&);
template Parameters<float> init_parameters<float>(const NetworkConfig&, std::uint64_t);
template Parameters<double> init_parameters<double>(const NetworkConfig&, std::uint64_t);
template Parameters<float> cast_parameters<float, double>(const Parameters<double>&);
template Parameters<double> cast_parameters<double, float>(const Parameters<float>&);
template Parameters<float> cast_parameters<float, float>(const Parameters<float>&);
template Parameters<double> cast_parameters<double, double>(const Parameters<double>&);

namespace {

std::vector<double> window_to_vector(const LatentWindow& w) { return w.data; }

}  // namespace

LatentWindow predict_eps(const LatentWindow& z_in, const Conditioning& cond, const Checkpoint& ckpt) {
    if (z_in.channels != 4) throw InvalidArgument("predict_eps expects a 4-channel assembled window");
    if (cond.timestep < 1 || cond.timestep > ckpt.config.timesteps)
        throw InvalidArgument("predict_eps: timestep out of range");
    Denoiser<double> net(ckpt.config);
    const auto params = cast_parameters<double>(ckpt.params);
    auto out = net.forward(params, window_to_vector(z_in), z_in.frames, z_in.height, z_in.width, cond);
    LatentWindow result(z_in.frames, 3, z_in.height, z_in.width);
    result.data.assign(out.begin(), out.end());
    return result;
}

namespace {

void check_example(const TrainingExample& ex, const LatentWindow& eps) {
    if (ex.color.channels != 3 || ex.gray.channels != 1) throw InvalidArgument("training example: bad channel counts");
    if (!ex.color.same_shape(eps)) throw InvalidArgument("training example: noise shape differs from target");
    if (ex.gray.frames != ex.color.frames || ex.gray.height != ex.color.height || ex.gray.width != ex.color.width)
        throw InvalidArgument("training example: gray and color windows differ");
}

}  // namespace

double training_loss(const TrainingExample& ex, int t, const LatentWindow& eps, const Parameters<double>& params,
                     const NetworkConfig& config) {
    check_example(ex, eps);
    const NoiseSchedule schedule = config.schedule();
    const LatentWindow z_in = assemble_input(ex.gray, forward_noise(ex.color, t, eps, schedule));
    Denoiser<double> net(config);
    const auto pred = net.forward(params, z_in.data, z_in.frames, z_in.height, z_in.width, {t, ex.palette, ex.reference});
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += (pred[i] - eps.data[i]) * (pred[i] - eps.data[i]);
    return acc / static_cast<double>(pred.size());
}

LossResult loss_and_gradients(const TrainingExample& ex, int t, const LatentWindow& eps,
                              const Parameters<double>& params, const NetworkConfig& config) {
    check_example(ex, eps);
    const NoiseSchedule schedule = config.schedule();
    const LatentWindow z_in = assemble_input(ex.gray, forward_noise(ex.color, t, eps, schedule));
    Denoiser<double> net(config);
    const auto pred =
        net.forward(params, z_in.data, z_in.frames, z_in.height, z_in.width, {t, ex.palette, ex.reference}, true);
    const double inv = 1.0 / static_cast<double>(pred.size());
    std::vector<double> grad(pred.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = pred[i] - eps.data[i];
        acc += r * r;
        grad[i] = 2.0 * r * inv;
    }
    return {acc * inv, net.backward(params, grad)};
}

}  // namespace pgvc
