#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "model/config.hpp"
#include "model/nn.hpp"

namespace scafm {

// ---------------------------------------------------------------------------
// grid geometry

// Token bookkeeping for one (h, w) feature grid and one shift setting.
// perm[dst] = src maps token order to window order: windows row-major,
// tokens row-major inside each window, after an up-left cyclic shift.
struct GridPlan {
    int h = 0, w = 0, wsize = 0, shift = 0;
    int windows = 0;
    int window_tokens = 0;
    std::vector<int> perm;
    std::vector<int> inv;
    std::vector<int8_t> region; // region id per window slot; empty when shift == 0
};

inline GridPlan make_grid_plan(int h, int w, int wsize, int shift) {
    require(h % wsize == 0 && w % wsize == 0, ErrorCode::dimension,
            "grid must be a multiple of the window size");
    GridPlan p;
    p.h = h;
    p.w = w;
    p.wsize = wsize;
    p.shift = shift;
    int nwr = h / wsize, nwc = w / wsize;
    p.windows = nwr * nwc;
    p.window_tokens = wsize * wsize;
    int n = h * w;
    p.perm.resize(n);
    p.inv.resize(n);
    if (shift > 0) p.region.resize(n);

    auto band = [&](int x, int extent) {
        if (x < extent - wsize) return 0;
        if (x < extent - shift) return 1;
        return 2;
    };

    int dst = 0;
    for (int wr = 0; wr < nwr; ++wr) {
        for (int wc = 0; wc < nwc; ++wc) {
            for (int ir = 0; ir < wsize; ++ir) {
                for (int ic = 0; ic < wsize; ++ic, ++dst) {
                    int r = wr * wsize + ir; // shifted-grid coords
                    int c = wc * wsize + ic;
                    int sr = (r + shift) % h;
                    int sc = (c + shift) % w;
                    p.perm[dst] = sr * w + sc;
                    p.inv[sr * w + sc] = dst;
                    if (shift > 0)
                        p.region[dst] =
                            static_cast<int8_t>(3 * band(r, h) + band(c, w));
                }
            }
        }
    }
    return p;
}

template <typename T>
Tensor<T> permute_rows(const Tensor<T>& x, const std::vector<int>& idx) {
    int n = x.dim(0), c = x.dim(1);
    Tensor<T> y({n, c});
    for (int i = 0; i < n; ++i)
        std::copy_n(x.data() + static_cast<int64_t>(idx[i]) * c, c,
                    y.data() + static_cast<int64_t>(i) * c);
    return y;
}

// [h*w, C] token layout <-> [C, h, w] feature-map layout
template <typename T>
Tensor<T> tokens_to_spatial(const Tensor<T>& t, int h, int w) {
    int c = t.dim(1);
    Tensor<T> sp({c, h, w});
    ECMap<T> Tm(t.data(), h * w, c);
    EMap<T>(sp.data(), c, h * w).noalias() = Tm.transpose();
    return sp;
}

template <typename T>
Tensor<T> spatial_to_tokens(const Tensor<T>& sp) {
    int c = sp.dim(0), h = sp.dim(1), w = sp.dim(2);
    Tensor<T> t({h * w, c});
    ECMap<T> Sm(sp.data(), c, h * w);
    EMap<T>(t.data(), h * w, c).noalias() = Sm.transpose();
    return t;
}

template <typename T>
Tensor<T> tensor_add(const Tensor<T>& a, const Tensor<T>& b) {
    Tensor<T> y = a;
    for (int64_t i = 0; i < y.numel(); ++i) y[i] += b[i];
    return y;
}

// ---------------------------------------------------------------------------
// public window / sub-pixel rearrangements (exact mutual inverses)

template <typename T>
struct WindowSet {
    Tensor<T> windows; // [nW, wsize*wsize, C]
    int h = 0, w = 0, wsize = 0;
};

// Splits a [C, h, w] map into non-overlapping windows of wsize x wsize token
// groups, zero-padding bottom/right when the size does not divide.
template <typename T>
WindowSet<T> window_partition(const Tensor<T>& f, int wsize) {
    int c = f.dim(0), h = f.dim(1), w = f.dim(2);
    int hp = (h + wsize - 1) / wsize * wsize;
    int wp = (w + wsize - 1) / wsize * wsize;
    int nwr = hp / wsize, nwc = wp / wsize;
    WindowSet<T> ws;
    ws.h = h;
    ws.w = w;
    ws.wsize = wsize;
    ws.windows.reshape({nwr * nwc, wsize * wsize, c});
    for (int wr = 0; wr < nwr; ++wr)
        for (int wc = 0; wc < nwc; ++wc) {
            int wd = wr * nwc + wc;
            for (int ir = 0; ir < wsize; ++ir)
                for (int ic = 0; ic < wsize; ++ic) {
                    int r = wr * wsize + ir, cc = wc * wsize + ic;
                    T* dst = ws.windows.data() +
                             (static_cast<int64_t>(wd) * wsize * wsize + ir * wsize + ic) * c;
                    if (r >= h || cc >= w) {
                        std::fill(dst, dst + c, T(0));
                    } else {
                        for (int ch = 0; ch < c; ++ch)
                            dst[ch] = f[(static_cast<int64_t>(ch) * h + r) * w + cc];
                    }
                }
        }
    return ws;
}

template <typename T>
Tensor<T> window_reverse(const WindowSet<T>& ws) {
    int c = ws.windows.dim(2);
    int h = ws.h, w = ws.w, wsize = ws.wsize;
    int nwc = (w + wsize - 1) / wsize;
    Tensor<T> f({c, h, w});
    for (int r = 0; r < h; ++r)
        for (int cc = 0; cc < w; ++cc) {
            int wd = (r / wsize) * nwc + cc / wsize;
            int slot = (r % wsize) * wsize + cc % wsize;
            const T* src = ws.windows.data() +
                           (static_cast<int64_t>(wd) * wsize * wsize + slot) * c;
            for (int ch = 0; ch < c; ++ch)
                f[(static_cast<int64_t>(ch) * h + r) * w + cc] = src[ch];
        }
    return f;
}

// [C*f*f, h, w] -> [C, f*h, f*w]; input channel c*f*f + dr*f + dc feeds
// output pixel (f*r + dr, f*c + dc).
template <typename T>
Tensor<T> depth_to_space(const Tensor<T>& x, int f) {
    int cin = x.dim(0), h = x.dim(1), w = x.dim(2);
    require(cin % (f * f) == 0, ErrorCode::dimension,
            "depth_to_space needs channels divisible by f^2");
    int cout = cin / (f * f);
    Tensor<T> y({cout, h * f, w * f});
    for (int co = 0; co < cout; ++co)
        for (int dr = 0; dr < f; ++dr)
            for (int dc = 0; dc < f; ++dc) {
                const T* src = x.data() +
                               static_cast<int64_t>(co * f * f + dr * f + dc) * h * w;
                for (int r = 0; r < h; ++r) {
                    T* dst = y.data() +
                             (static_cast<int64_t>(co) * h * f + r * f + dr) * (w * f) + dc;
                    for (int c = 0; c < w; ++c) dst[static_cast<int64_t>(c) * f] = src[r * w + c];
                }
            }
    return y;
}

template <typename T>
Tensor<T> space_to_depth(const Tensor<T>& x, int f) {
    int cin = x.dim(0), hf = x.dim(1), wf = x.dim(2);
    require(hf % f == 0 && wf % f == 0, ErrorCode::dimension,
            "space_to_depth needs dims divisible by f");
    int h = hf / f, w = wf / f;
    Tensor<T> y({cin * f * f, h, w});
    for (int co = 0; co < cin; ++co)
        for (int dr = 0; dr < f; ++dr)
            for (int dc = 0; dc < f; ++dc) {
                T* dst = y.data() +
                         static_cast<int64_t>(co * f * f + dr * f + dc) * h * w;
                for (int r = 0; r < h; ++r) {
                    const T* src = x.data() +
                                   (static_cast<int64_t>(co) * hf + r * f + dr) * wf + dc;
                    for (int c = 0; c < w; ++c) dst[r * w + c] = src[static_cast<int64_t>(c) * f];
                }
            }
    return y;
}

// ---------------------------------------------------------------------------
// attention and transformer layers

template <typename T>
struct WindowAttention {
    int ch = 0, heads = 0, wsize = 0, head_dim = 0;
    Dense<T> qkv;  // ch -> 3*ch
    Dense<T> proj; // ch -> ch
    Tensor<T> rel_bias, g_rel_bias; // [(2w-1)^2, heads]
    std::vector<int> rel_index;     // [M*M]

    static constexpr T kMaskOff = T(-1e9);

    struct Ctx {
        typename Dense<T>::Ctx qkv_ctx, proj_ctx;
        Tensor<T> qkv_out; // [n, 3*ch]
        Tensor<T> probs;   // [windows, heads, M, M]
    };

    void init_shapes(int channels, int num_heads, int window) {
        ch = channels;
        heads = num_heads;
        wsize = window;
        head_dim = ch / heads;
        qkv.init_shapes(ch, 3 * ch);
        proj.init_shapes(ch, ch);
        int span = 2 * wsize - 1;
        rel_bias.reshape({span * span, heads});
        g_rel_bias.reshape({span * span, heads});
        int m = wsize * wsize;
        rel_index.resize(static_cast<size_t>(m) * m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                int dr = i / wsize - j / wsize + wsize - 1;
                int dc = i % wsize - j % wsize + wsize - 1;
                rel_index[static_cast<size_t>(i) * m + j] = dr * span + dc;
            }
    }

    // wtok: [n, ch] in window order (n = windows * M)
    Tensor<T> forward(const Tensor<T>& wtok, const GridPlan& plan, Ctx* ctx) const {
        int n = wtok.dim(0);
        int m = plan.window_tokens;
        T scale = T(1) / std::sqrt(T(head_dim));

        Tensor<T> qkv_out = qkv.forward(wtok, ctx ? &ctx->qkv_ctx : nullptr);
        if (ctx) ctx->probs.reshape({plan.windows, heads, m, m});

        Tensor<T> attn_out({n, ch});
        using Stride = Eigen::OuterStride<Eigen::Dynamic>;
        using CSMap = Eigen::Map<const EMat<T>, 0, Stride>;
        using SMap = Eigen::Map<EMat<T>, 0, Stride>;

        EMat<T> s(m, m);
        for (int wd = 0; wd < plan.windows; ++wd) {
            const T* base = qkv_out.data() + static_cast<int64_t>(wd) * m * 3 * ch;
            const int8_t* reg =
                plan.shift > 0 ? plan.region.data() + static_cast<int64_t>(wd) * m : nullptr;
            for (int hd = 0; hd < heads; ++hd) {
                CSMap q(base + hd * head_dim, m, head_dim, Stride(3 * ch));
                CSMap k(base + ch + hd * head_dim, m, head_dim, Stride(3 * ch));
                CSMap v(base + 2 * ch + hd * head_dim, m, head_dim, Stride(3 * ch));

                s.noalias() = q * k.transpose();
                s *= scale;
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < m; ++j) {
                        s(i, j) += rel_bias[static_cast<int64_t>(
                                                rel_index[static_cast<size_t>(i) * m + j]) *
                                                heads +
                                            hd];
                        if (reg && reg[i] != reg[j]) s(i, j) += kMaskOff;
                    }
                // row-wise softmax
                for (int i = 0; i < m; ++i) {
                    T mx = s.row(i).maxCoeff();
                    T sum = 0;
                    for (int j = 0; j < m; ++j) {
                        T e = std::exp(s(i, j) - mx);
                        s(i, j) = e;
                        sum += e;
                    }
                    s.row(i) /= sum;
                }
                if (ctx)
                    std::copy_n(s.data(), static_cast<int64_t>(m) * m,
                                ctx->probs.data() +
                                    (static_cast<int64_t>(wd) * heads + hd) * m * m);

                SMap o(attn_out.data() + static_cast<int64_t>(wd) * m * ch + hd * head_dim,
                       m, head_dim, Stride(ch));
                o.noalias() = s * v;
            }
        }
        if (ctx) ctx->qkv_out = std::move(qkv_out);
        return proj.forward(attn_out, ctx ? &ctx->proj_ctx : nullptr);
    }

    Tensor<T> backward(const Tensor<T>& gy, const GridPlan& plan, Ctx& ctx) {
        int n = gy.dim(0);
        int m = plan.window_tokens;
        T scale = T(1) / std::sqrt(T(head_dim));

        Tensor<T> g_attn = proj.backward(gy, ctx.proj_ctx);
        Tensor<T> g_qkv({n, 3 * ch});

        using Stride = Eigen::OuterStride<Eigen::Dynamic>;
        using CSMap = Eigen::Map<const EMat<T>, 0, Stride>;
        using SMap = Eigen::Map<EMat<T>, 0, Stride>;

        for (int wd = 0; wd < plan.windows; ++wd) {
            const T* base = ctx.qkv_out.data() + static_cast<int64_t>(wd) * m * 3 * ch;
            T* gbase = g_qkv.data() + static_cast<int64_t>(wd) * m * 3 * ch;
            for (int hd = 0; hd < heads; ++hd) {
                CSMap q(base + hd * head_dim, m, head_dim, Stride(3 * ch));
                CSMap k(base + ch + hd * head_dim, m, head_dim, Stride(3 * ch));
                CSMap v(base + 2 * ch + hd * head_dim, m, head_dim, Stride(3 * ch));
                ECMap<T> p(ctx.probs.data() + (static_cast<int64_t>(wd) * heads + hd) * m * m,
                           m, m);
                CSMap go(g_attn.data() + static_cast<int64_t>(wd) * m * ch + hd * head_dim,
                         m, head_dim, Stride(ch));

                EMat<T> gp = go * v.transpose();
                SMap gv(gbase + 2 * ch + hd * head_dim, m, head_dim, Stride(3 * ch));
                gv.noalias() = p.transpose() * go;

                EMat<T> gs(m, m);
                for (int i = 0; i < m; ++i) {
                    T dot = 0;
                    for (int j = 0; j < m; ++j) dot += gp(i, j) * p(i, j);
                    for (int j = 0; j < m; ++j) gs(i, j) = p(i, j) * (gp(i, j) - dot);
                }
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < m; ++j)
                        g_rel_bias[static_cast<int64_t>(
                                       rel_index[static_cast<size_t>(i) * m + j]) *
                                       heads +
                                   hd] += gs(i, j);

                SMap gq(gbase + hd * head_dim, m, head_dim, Stride(3 * ch));
                SMap gk(gbase + ch + hd * head_dim, m, head_dim, Stride(3 * ch));
                gq.noalias() = gs * k * scale;
                gk.noalias() = gs.transpose() * q * scale;
            }
        }
        return qkv.backward(g_qkv, ctx.qkv_ctx);
    }
};

// One transformer layer: LN -> windowed MHSA (optionally cyclic-shifted and
// masked) -> residual, then LN -> MLP -> residual.
template <typename T>
struct SwinLayer {
    int ch = 0;
    bool shifted = false;
    LayerNorm<T> norm1, norm2;
    WindowAttention<T> attn;
    Dense<T> fc1, fc2;
    Gelu<T> gelu;

    struct Ctx {
        typename LayerNorm<T>::Ctx n1, n2;
        typename WindowAttention<T>::Ctx at;
        typename Dense<T>::Ctx f1, f2;
        typename Gelu<T>::Ctx gl;
    };

    void init_shapes(const ModelConfig& cfg, bool shift) {
        ch = cfg.embed_dim;
        shifted = shift;
        norm1.init_shapes(ch);
        norm2.init_shapes(ch);
        attn.init_shapes(ch, cfg.num_heads, cfg.window_size);
        int hidden = std::max(1, static_cast<int>(std::lround(cfg.mlp_ratio * ch)));
        fc1.init_shapes(ch, hidden);
        fc2.init_shapes(hidden, ch);
    }

    Tensor<T> forward(const Tensor<T>& x, const GridPlan& plan, Ctx* ctx) const {
        Tensor<T> h1 = norm1.forward(x, ctx ? &ctx->n1 : nullptr);
        Tensor<T> wtok = permute_rows(h1, plan.perm);
        Tensor<T> a = attn.forward(wtok, plan, ctx ? &ctx->at : nullptr);
        Tensor<T> x1 = x;
        {
            // scatter attention output back to token order and add
            int c = x.dim(1);
            for (int i = 0; i < x.dim(0); ++i) {
                const T* src = a.data() + static_cast<int64_t>(plan.inv[i]) * c;
                T* dst = x1.data() + static_cast<int64_t>(i) * c;
                for (int j = 0; j < c; ++j) dst[j] += src[j];
            }
        }
        Tensor<T> h2 = norm2.forward(x1, ctx ? &ctx->n2 : nullptr);
        Tensor<T> m1 = fc1.forward(h2, ctx ? &ctx->f1 : nullptr);
        Tensor<T> m2 = gelu.forward(m1, ctx ? &ctx->gl : nullptr);
        Tensor<T> m3 = fc2.forward(m2, ctx ? &ctx->f2 : nullptr);
        return tensor_add(x1, m3);
    }

    Tensor<T> backward(const Tensor<T>& gy, const GridPlan& plan, Ctx& ctx) {
        Tensor<T> gm2 = fc2.backward(gy, ctx.f2);
        Tensor<T> gm1 = gelu.backward(gm2, ctx.gl);
        Tensor<T> gh2 = fc1.backward(gm1, ctx.f1);
        Tensor<T> gx1 = tensor_add(gy, norm2.backward(gh2, ctx.n2));

        Tensor<T> ga = permute_rows(gx1, plan.perm); // window order
        Tensor<T> g_wtok = attn.backward(ga, ctx.at);
        Tensor<T> gh1 = permute_rows(g_wtok, plan.inv);
        return tensor_add(gx1, norm1.backward(gh1, ctx.n1));
    }
};

// A residual group: a stack of alternating plain/shifted layers followed by a
// 3x3 convolution, wrapped in an identity skip.
template <typename T>
struct ResidualGroup {
    std::vector<SwinLayer<T>> layers;
    Conv3x3<T> conv;

    struct Ctx {
        std::vector<typename SwinLayer<T>::Ctx> layer_ctx;
        typename Conv3x3<T>::Ctx conv_ctx;
    };

    void init_shapes(const ModelConfig& cfg) {
        layers.resize(cfg.stl_per_rstb);
        for (int i = 0; i < cfg.stl_per_rstb; ++i)
            layers[static_cast<size_t>(i)].init_shapes(cfg, i % 2 == 1);
        conv.init_shapes(cfg.embed_dim, cfg.embed_dim);
    }

    Tensor<T> forward(const Tensor<T>& x, const GridPlan& plan0, const GridPlan& plan1,
                      int h, int w, int group_idx, Ctx* ctx) const {
        if (ctx) ctx->layer_ctx.resize(layers.size());
        Tensor<T> t = x;
        for (size_t i = 0; i < layers.size(); ++i) {
            const GridPlan& plan = layers[i].shifted ? plan1 : plan0;
            t = layers[i].forward(t, plan, ctx ? &ctx->layer_ctx[i] : nullptr);
            for (int64_t j = 0; j < t.numel(); ++j)
                if (!std::isfinite(static_cast<double>(t[j])))
                    raise(ErrorCode::numeric,
                          "non-finite activation in group " + std::to_string(group_idx) +
                              " layer " + std::to_string(i));
        }
        Tensor<T> sp = tokens_to_spatial(t, h, w);
        Tensor<T> cs = conv.forward(sp, ctx ? &ctx->conv_ctx : nullptr);
        return tensor_add(x, spatial_to_tokens(cs));
    }

    Tensor<T> backward(const Tensor<T>& gy, const GridPlan& plan0, const GridPlan& plan1,
                       int h, int w, Ctx& ctx) {
        Tensor<T> g_cs = tokens_to_spatial(gy, h, w);
        Tensor<T> g_sp = conv.backward(g_cs, ctx.conv_ctx);
        Tensor<T> g = spatial_to_tokens(g_sp);
        for (size_t i = layers.size(); i-- > 0;) {
            const GridPlan& plan = layers[i].shifted ? plan1 : plan0;
            g = layers[i].backward(g, plan, ctx.layer_ctx[i]);
        }
        return tensor_add(g, gy);
    }
};

// ---------------------------------------------------------------------------
// full model

template <typename T>
class SwinUpsampler {
public:
    struct ParamRef {
        std::string name;
        Tensor<T>* value;
        Tensor<T>* grad;
    };

    struct Ctx {
        int h = 0, w = 0, hp = 0, wp = 0;
        GridPlan plan0, plan1;
        typename Conv3x3<T>::Ctx shallow_ctx;
        std::vector<typename ResidualGroup<T>::Ctx> group_ctx;
        typename Conv3x3<T>::Ctx conv_after_ctx;
        std::vector<typename Conv3x3<T>::Ctx> up_ctx;
        typename Conv3x3<T>::Ctx last_ctx;
    };

    explicit SwinUpsampler(const ModelConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        shallow_.init_shapes(cfg_.in_channels, cfg_.embed_dim);
        groups_.resize(static_cast<size_t>(cfg_.rstb_count));
        for (auto& g : groups_) g.init_shapes(cfg_);
        conv_after_.init_shapes(cfg_.embed_dim, cfg_.embed_dim);
        up_convs_.resize(static_cast<size_t>(cfg_.upsample_stages()));
        for (auto& u : up_convs_) u.init_shapes(cfg_.embed_dim, 4 * cfg_.embed_dim);
        conv_last_.init_shapes(cfg_.embed_dim, 1);
        build_registry();
    }

    const ModelConfig& config() const { return cfg_; }

    // x: [1, h, w] normalized values; result [1, sigma*h, sigma*w], unclamped.
    Tensor<T> forward(const Tensor<T>& x, Ctx* ctx) const {
        require(x.ndim() == 3 && x.dim(0) == 1, ErrorCode::dimension,
                "model input must be [1, h, w], got " + x.shape_str());
        int h = x.dim(1), w = x.dim(2);
        int ws = cfg_.window_size;
        require(h >= ws && w >= ws, ErrorCode::dimension,
                "model input " + std::to_string(h) + "x" + std::to_string(w) +
                    " smaller than window size " + std::to_string(ws));

        int hp = (h + ws - 1) / ws * ws;
        int wp = (w + ws - 1) / ws * ws;
        Tensor<T> xp = reflect_pad(x, hp, wp);

        Ctx local;
        Ctx& cx = ctx ? *ctx : local;
        if (ctx) {
            cx.h = h;
            cx.w = w;
            cx.hp = hp;
            cx.wp = wp;
            cx.plan0 = make_grid_plan(hp, wp, ws, 0);
            cx.plan1 = make_grid_plan(hp, wp, ws, ws / 2);
            cx.group_ctx.resize(groups_.size());
            cx.up_ctx.resize(up_convs_.size());
        }
        const GridPlan plan0 = ctx ? cx.plan0 : make_grid_plan(hp, wp, ws, 0);
        const GridPlan plan1 = ctx ? cx.plan1 : make_grid_plan(hp, wp, ws, ws / 2);

        Tensor<T> f0 = shallow_.forward(xp, ctx ? &cx.shallow_ctx : nullptr);
        Tensor<T> t = spatial_to_tokens(f0);
        for (size_t g = 0; g < groups_.size(); ++g)
            t = groups_[g].forward(t, plan0, plan1, hp, wp, static_cast<int>(g),
                                   ctx ? &cx.group_ctx[g] : nullptr);
        Tensor<T> fdf =
            conv_after_.forward(tokens_to_spatial(t, hp, wp), ctx ? &cx.conv_after_ctx : nullptr);
        Tensor<T> fsum = tensor_add(f0, fdf);

        Tensor<T> u = fsum;
        for (size_t s = 0; s < up_convs_.size(); ++s) {
            Tensor<T> c4 = up_convs_[s].forward(u, ctx ? &cx.up_ctx[s] : nullptr);
            u = depth_to_space(c4, 2);
        }
        Tensor<T> y = conv_last_.forward(u, ctx ? &cx.last_ctx : nullptr);

        if (hp == h && wp == w) return y;
        // crop the padding back off at output scale
        int s = cfg_.sigma;
        Tensor<T> out({1, s * h, s * w});
        for (int r = 0; r < s * h; ++r)
            std::copy_n(y.data() + static_cast<int64_t>(r) * (s * wp), s * w,
                        out.data() + static_cast<int64_t>(r) * (s * w));
        return out;
    }

    // Accumulates parameter gradients; gy matches the forward output shape.
    void backward(const Tensor<T>& gy, Ctx& cx) {
        int s = cfg_.sigma;
        Tensor<T> g({1, s * cx.hp, s * cx.wp});
        for (int r = 0; r < s * cx.h; ++r)
            std::copy_n(gy.data() + static_cast<int64_t>(r) * (s * cx.w), s * cx.w,
                        g.data() + static_cast<int64_t>(r) * (s * cx.wp));

        Tensor<T> gu = conv_last_.backward(g, cx.last_ctx);
        for (size_t si = up_convs_.size(); si-- > 0;) {
            Tensor<T> gc4 = space_to_depth(gu, 2);
            gu = up_convs_[si].backward(gc4, cx.up_ctx[si]);
        }
        // gu is now the gradient of fsum = f0 + fdf
        Tensor<T> g_fdf_sp = conv_after_.backward(gu, cx.conv_after_ctx);
        Tensor<T> gt = spatial_to_tokens(g_fdf_sp);
        for (size_t gi = groups_.size(); gi-- > 0;)
            gt = groups_[gi].backward(gt, cx.plan0, cx.plan1, cx.hp, cx.wp, cx.group_ctx[gi]);

        Tensor<T> g_f0 = tensor_add(gu, tokens_to_spatial(gt, cx.hp, cx.wp));
        shallow_.backward(g_f0, cx.shallow_ctx); // input gradient discarded
    }

    const std::vector<ParamRef>& params() { return registry_; }
    std::vector<ParamRef> const& params() const { return registry_; }

    void zero_grads() {
        for (auto& p : registry_) p.grad->fill(T(0));
    }

    int64_t total_params() const {
        int64_t n = 0;
        for (const auto& p : registry_) n += p.value->numel();
        return n;
    }

    void init_params(uint64_t seed) {
        Rng rng(seed);
        auto trunc_normal = [&](Tensor<T>& t, double std) {
            for (int64_t i = 0; i < t.numel(); ++i) {
                double z;
                do { z = rng.normal(); } while (std::abs(z) > 2.0);
                t[i] = static_cast<T>(z * std);
            }
        };
        auto kaiming_uniform = [&](Tensor<T>& t, int fan_in) {
            double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (int64_t i = 0; i < t.numel(); ++i)
                t[i] = static_cast<T>(rng.uniform(-bound, bound));
        };
        for (auto& p : registry_) {
            const std::string& n = p.name;
            if (ends_with(n, ".gamma")) {
                p.value->fill(T(1));
            } else if (ends_with(n, ".beta") || ends_with(n, ".bias")) {
                p.value->fill(T(0));
            } else if (ends_with(n, ".weight") && p.value->ndim() == 4) {
                kaiming_uniform(*p.value, p.value->dim(1) * 9);
            } else {
                trunc_normal(*p.value, 0.02); // dense weights and bias tables
            }
        }
    }

private:
    static bool ends_with(const std::string& s, const std::string& suffix) {
        return s.size() >= suffix.size() &&
               s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
    }

    Tensor<T> reflect_pad(const Tensor<T>& x, int hp, int wp) const {
        int h = x.dim(1), w = x.dim(2);
        if (hp == h && wp == w) return x;
        Tensor<T> y({1, hp, wp});
        for (int r = 0; r < hp; ++r) {
            int sr = r < h ? r : 2 * h - 2 - r;
            for (int c = 0; c < wp; ++c) {
                int sc = c < w ? c : 2 * w - 2 - c;
                y[static_cast<int64_t>(r) * wp + c] = x[static_cast<int64_t>(sr) * w + sc];
            }
        }
        return y;
    }

    void build_registry() {
        auto add = [&](const std::string& name, Tensor<T>& v, Tensor<T>& g) {
            registry_.push_back({name, &v, &g});
        };
        add("shallow.weight", shallow_.w, shallow_.gw);
        add("shallow.bias", shallow_.b, shallow_.gb);
        for (size_t gi = 0; gi < groups_.size(); ++gi) {
            std::string gp = "rstb" + std::to_string(gi);
            auto& grp = groups_[gi];
            for (size_t li = 0; li < grp.layers.size(); ++li) {
                std::string lp = gp + ".stl" + std::to_string(li);
                auto& l = grp.layers[li];
                add(lp + ".norm1.gamma", l.norm1.gamma, l.norm1.ggamma);
                add(lp + ".norm1.beta", l.norm1.beta, l.norm1.gbeta);
                add(lp + ".attn.qkv.weight", l.attn.qkv.w, l.attn.qkv.gw);
                add(lp + ".attn.qkv.bias", l.attn.qkv.b, l.attn.qkv.gb);
                add(lp + ".attn.proj.weight", l.attn.proj.w, l.attn.proj.gw);
                add(lp + ".attn.proj.bias", l.attn.proj.b, l.attn.proj.gb);
                add(lp + ".attn.rel_bias", l.attn.rel_bias, l.attn.g_rel_bias);
                add(lp + ".norm2.gamma", l.norm2.gamma, l.norm2.ggamma);
                add(lp + ".norm2.beta", l.norm2.beta, l.norm2.gbeta);
                add(lp + ".mlp.fc1.weight", l.fc1.w, l.fc1.gw);
                add(lp + ".mlp.fc1.bias", l.fc1.b, l.fc1.gb);
                add(lp + ".mlp.fc2.weight", l.fc2.w, l.fc2.gw);
                add(lp + ".mlp.fc2.bias", l.fc2.b, l.fc2.gb);
            }
            add(gp + ".conv.weight", grp.conv.w, grp.conv.gw);
            add(gp + ".conv.bias", grp.conv.b, grp.conv.gb);
        }
        add("conv_after.weight", conv_after_.w, conv_after_.gw);
        add("conv_after.bias", conv_after_.b, conv_after_.gb);
        for (size_t s = 0; s < up_convs_.size(); ++s) {
            add("up" + std::to_string(s) + ".weight", up_convs_[s].w, up_convs_[s].gw);
            add("up" + std::to_string(s) + ".bias", up_convs_[s].b, up_convs_[s].gb);
        }
        add("recon.weight", conv_last_.w, conv_last_.gw);
        add("recon.bias", conv_last_.b, conv_last_.gb);
    }

    ModelConfig cfg_;
    Conv3x3<T> shallow_;
    std::vector<ResidualGroup<T>> groups_;
    Conv3x3<T> conv_after_;
    std::vector<Conv3x3<T>> up_convs_;
    Conv3x3<T> conv_last_;
    std::vector<ParamRef> registry_;
};

} // namespace scafm
