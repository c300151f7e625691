#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "model/tensor.hpp"

// Building-block layers with explicit forward/backward passes. Forward is
// const and thread-safe given fixed parameters; a null Ctx pointer means
// inference (nothing is saved). backward() accumulates parameter gradients,
// so callers zero them between optimizer steps.
namespace scafm {

template <typename T>
using EMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using EMap = Eigen::Map<EMat<T>>;
template <typename T>
using ECMap = Eigen::Map<const EMat<T>>;

template <typename T>
struct Dense {
    int in = 0, out = 0;
    Tensor<T> w, gw; // [out, in]
    Tensor<T> b, gb; // [out]

    struct Ctx {
        Tensor<T> x;
    };

    void init_shapes(int in_dim, int out_dim) {
        in = in_dim;
        out = out_dim;
        w.reshape({out, in});
        gw.reshape({out, in});
        b.reshape({out});
        gb.reshape({out});
    }

    // x [n, in] -> y [n, out]
    Tensor<T> forward(const Tensor<T>& x, Ctx* ctx) const {
        int n = x.dim(0);
        Tensor<T> y({n, out});
        ECMap<T> X(x.data(), n, in);
        ECMap<T> W(w.data(), out, in);
        EMap<T> Y(y.data(), n, out);
        Y.noalias() = X * W.transpose();
        Y.rowwise() += Eigen::Map<const Eigen::RowVector<T, Eigen::Dynamic>>(b.data(), out);
        if (ctx) ctx->x = x;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy, const Ctx& ctx) {
        int n = gy.dim(0);
        Tensor<T> gx({n, in});
        ECMap<T> GY(gy.data(), n, out);
        ECMap<T> X(ctx.x.data(), n, in);
        ECMap<T> W(w.data(), out, in);
        EMap<T>(gx.data(), n, in).noalias() = GY * W;
        EMap<T>(gw.data(), out, in).noalias() += GY.transpose() * X;
        Eigen::Map<Eigen::RowVector<T, Eigen::Dynamic>>(gb.data(), out) +=
            GY.colwise().sum();
        return gx;
    }
};

template <typename T>
struct LayerNorm {
    int ch = 0;
    Tensor<T> gamma, ggamma, beta, gbeta; // [ch]
    static constexpr T eps = T(1e-5);

    struct Ctx {
        Tensor<T> xhat;  // [n, ch]
        Tensor<T> rstd;  // [n]
    };

    void init_shapes(int channels) {
        ch = channels;
        gamma.reshape({ch});
        gamma.fill(T(1));
        ggamma.reshape({ch});
        beta.reshape({ch});
        gbeta.reshape({ch});
    }

    // x [n, ch], normalized per row
    Tensor<T> forward(const Tensor<T>& x, Ctx* ctx) const {
        int n = x.dim(0);
        Tensor<T> y({n, ch});
        if (ctx) {
            ctx->xhat.reshape({n, ch});
            ctx->rstd.reshape({n});
        }
        for (int i = 0; i < n; ++i) {
            const T* xi = x.data() + static_cast<int64_t>(i) * ch;
            T* yi = y.data() + static_cast<int64_t>(i) * ch;
            T mean = 0;
            for (int c = 0; c < ch; ++c) mean += xi[c];
            mean /= T(ch);
            T var = 0;
            for (int c = 0; c < ch; ++c) {
                T d = xi[c] - mean;
                var += d * d;
            }
            var /= T(ch);
            T rstd = T(1) / std::sqrt(var + eps);
            for (int c = 0; c < ch; ++c) {
                T xh = (xi[c] - mean) * rstd;
                yi[c] = gamma[c] * xh + beta[c];
                if (ctx) ctx->xhat[static_cast<int64_t>(i) * ch + c] = xh;
            }
            if (ctx) ctx->rstd[i] = rstd;
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy, const Ctx& ctx) {
        int n = gy.dim(0);
        Tensor<T> gx({n, ch});
        for (int i = 0; i < n; ++i) {
            const T* gyi = gy.data() + static_cast<int64_t>(i) * ch;
            const T* xh = ctx.xhat.data() + static_cast<int64_t>(i) * ch;
            T* gxi = gx.data() + static_cast<int64_t>(i) * ch;
            T sum_g = 0, sum_gx = 0;
            for (int c = 0; c < ch; ++c) {
                T g = gyi[c] * gamma[c];
                sum_g += g;
                sum_gx += g * xh[c];
                ggamma[c] += gyi[c] * xh[c];
                gbeta[c] += gyi[c];
            }
            T inv = T(1) / T(ch);
            T rstd = ctx.rstd[i];
            for (int c = 0; c < ch; ++c) {
                T g = gyi[c] * gamma[c];
                gxi[c] = rstd * (g - sum_g * inv - xh[c] * sum_gx * inv);
            }
        }
        return gx;
    }
};

// GELU with the exact erf formulation.
template <typename T>
struct Gelu {
    struct Ctx {
        Tensor<T> x;
    };

    Tensor<T> forward(const Tensor<T>& x, Ctx* ctx) const {
        Tensor<T> y = x;
        const T inv_sqrt2 = T(0.70710678118654752440);
        for (int64_t i = 0; i < y.numel(); ++i) {
            T v = y[i];
            y[i] = T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2));
        }
        if (ctx) ctx->x = x;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy, const Ctx& ctx) const {
        Tensor<T> gx = gy;
        const T inv_sqrt2 = T(0.70710678118654752440);
        const T inv_sqrt2pi = T(0.39894228040143267794);
        for (int64_t i = 0; i < gx.numel(); ++i) {
            T v = ctx.x[i];
            T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
            T pdf = inv_sqrt2pi * std::exp(T(-0.5) * v * v);
            gx[i] = gy[i] * (cdf + v * pdf);
        }
        return gx;
    }
};

// 3x3 convolution, stride 1, zero padding 1: [cin, h, w] -> [cout, h, w].
// Row blocks are lowered to a column matrix and handled as GEMMs.
template <typename T>
struct Conv3x3 {
    int cin = 0, cout = 0;
    Tensor<T> w, gw; // [cout, cin, 3, 3]
    Tensor<T> b, gb; // [cout]

    struct Ctx {
        Tensor<T> x;
    };

    void init_shapes(int in_ch, int out_ch) {
        cin = in_ch;
        cout = out_ch;
        w.reshape({cout, cin, 3, 3});
        gw.reshape({cout, cin, 3, 3});
        b.reshape({cout});
        gb.reshape({cout});
    }

    static constexpr int kRowBlock = 16;

    // col layout: [cin*9, rows*w] for a block of rows
    static void im2col_block(const T* x, int cin, int h, int w, int r0, int rows,
                             T* col) {
        int stride = rows * w;
        for (int ci = 0; ci < cin; ++ci) {
            const T* xc = x + static_cast<int64_t>(ci) * h * w;
            for (int kr = 0; kr < 3; ++kr) {
                for (int kc = 0; kc < 3; ++kc) {
                    T* dst = col + static_cast<int64_t>((ci * 9 + kr * 3 + kc)) * stride;
                    for (int r = 0; r < rows; ++r) {
                        int sr = r0 + r + kr - 1;
                        T* drow = dst + static_cast<int64_t>(r) * w;
                        if (sr < 0 || sr >= h) {
                            std::fill(drow, drow + w, T(0));
                            continue;
                        }
                        const T* srow = xc + static_cast<int64_t>(sr) * w;
                        for (int c = 0; c < w; ++c) {
                            int sc = c + kc - 1;
                            drow[c] = (sc < 0 || sc >= w) ? T(0) : srow[sc];
                        }
                    }
                }
            }
        }
    }

    Tensor<T> forward(const Tensor<T>& x, Ctx* ctx) const {
        int h = x.dim(1), w_ = x.dim(2);
        Tensor<T> y({cout, h, w_});
        Tensor<T> col({cin * 9, kRowBlock * w_});
        ECMap<T> W(w.data(), cout, cin * 9);
        for (int r0 = 0; r0 < h; r0 += kRowBlock) {
            int rows = std::min(kRowBlock, h - r0);
            im2col_block(x.data(), cin, h, w_, r0, rows, col.data());
            ECMap<T> C(col.data(), cin * 9, rows * w_);
            // y block [cout, rows*w]
            for (int oc = 0; oc < cout; ++oc) {
                Eigen::Map<Eigen::RowVector<T, Eigen::Dynamic>> yrow(
                    y.data() + (static_cast<int64_t>(oc) * h + r0) * w_, rows * w_);
                yrow.noalias() = W.row(oc) * C.topRows(cin * 9);
                yrow.array() += b[oc];
            }
        }
        if (ctx) ctx->x = x;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gy, const Ctx& ctx) {
        const Tensor<T>& x = ctx.x;
        int h = x.dim(1), w_ = x.dim(2);
        Tensor<T> gx({cin, h, w_});
        Tensor<T> col({cin * 9, kRowBlock * w_});
        Tensor<T> gcol({cin * 9, kRowBlock * w_});
        ECMap<T> W(w.data(), cout, cin * 9);
        EMap<T> GW(gw.data(), cout, cin * 9);

        for (int r0 = 0; r0 < h; r0 += kRowBlock) {
            int rows = std::min(kRowBlock, h - r0);
            im2col_block(x.data(), cin, h, w_, r0, rows, col.data());
            // gather the gy block [cout, rows*w]
            EMat<T> GY(cout, rows * w_);
            for (int oc = 0; oc < cout; ++oc)
                GY.row(oc) = Eigen::Map<const Eigen::RowVector<T, Eigen::Dynamic>>(
                    gy.data() + (static_cast<int64_t>(oc) * h + r0) * w_, rows * w_);

            GW.noalias() += GY * ECMap<T>(col.data(), cin * 9, rows * w_).transpose();
            for (int oc = 0; oc < cout; ++oc) gb[oc] += GY.row(oc).sum();

            EMap<T> GC(gcol.data(), cin * 9, rows * w_);
            GC.topRows(cin * 9).noalias() = W.transpose() * GY;
            // col2im scatter-add
            int stride = rows * w_;
            for (int ci = 0; ci < cin; ++ci) {
                T* gxc = gx.data() + static_cast<int64_t>(ci) * h * w_;
                for (int kr = 0; kr < 3; ++kr) {
                    for (int kc = 0; kc < 3; ++kc) {
                        const T* src =
                            gcol.data() + static_cast<int64_t>(ci * 9 + kr * 3 + kc) * stride;
                        for (int r = 0; r < rows; ++r) {
                            int sr = r0 + r + kr - 1;
                            if (sr < 0 || sr >= h) continue;
                            T* grow = gxc + static_cast<int64_t>(sr) * w_;
                            const T* srow = src + static_cast<int64_t>(r) * w_;
                            for (int c = 0; c < w_; ++c) {
                                int sc = c + kc - 1;
                                if (sc >= 0 && sc < w_) grow[sc] += srow[c];
                            }
                        }
                    }
                }
            }
        }
        return gx;
    }
};

} // namespace scafm
