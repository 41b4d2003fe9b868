#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "s2s/image.hpp"
#include "s2s/rng.hpp"
#include "s2s/tensor.hpp"

namespace s2s::nn {

struct ArchConfig {
    int n_branches = 3;
    int base_channels = 16;
    int enc_conv_blocks = 4;  // stride-2 downsampling convs
    int enc_res_blocks = 3;
    int dec_conv_blocks = 4;  // nearest-up + conv blocks; must equal enc_conv_blocks
    int dec_res_blocks = 4;

    void validate() const {
        if (n_branches < 1) throw std::invalid_argument("n_branches must be >= 1");
        if (base_channels < 1) throw std::invalid_argument("base_channels must be >= 1");
        if (enc_conv_blocks < 1) throw std::invalid_argument("enc_conv_blocks must be >= 1");
        if (enc_res_blocks < 0 || dec_res_blocks < 0)
            throw std::invalid_argument("residual block counts must be >= 0");
        if (dec_conv_blocks != enc_conv_blocks)
            throw std::invalid_argument("dec_conv_blocks must equal enc_conv_blocks so the decoder restores the input size");
    }

    int total_stride() const { return 1 << enc_conv_blocks; }
    // channel width after encoder conv block k (0-based): base, then twice base
    int enc_out_channels(int k) const { return k == 0 ? base_channels : 2 * base_channels; }
    int enc_in_channels(int k) const { return k == 0 ? 1 : enc_out_channels(k - 1); }
    int bottleneck_channels() const { return enc_out_channels(enc_conv_blocks - 1); }
    // decoder up block j (0-based) mirrors the encoder's input widths in reverse;
    // the last block stays at base width and the head maps base -> 1
    int dec_out_channels(int j) const {
        if (j == dec_conv_blocks - 1) return base_channels;
        return enc_in_channels(enc_conv_blocks - 1 - j);
    }
    int dec_in_channels(int j) const { return j == 0 ? bottleneck_channels() : dec_out_channels(j - 1); }
};

// 3x3 convolution, pad 1. W is out_c x (in_c*9) row-major, b is out_c.
template <class T>
struct Conv2d {
    int in_c = 0, out_c = 0, stride = 1;
    std::vector<T> W, b;

    Conv2d() = default;
    Conv2d(int ic, int oc, int s)
        : in_c(ic), out_c(oc), stride(s), W(static_cast<std::size_t>(oc) * ic * 9, T(0)), b(oc, T(0)) {}

    void init_he_uniform(Rng& rng) {
        const double bound = std::sqrt(6.0 / (static_cast<double>(in_c) * 9.0));
        for (auto& w : W) w = static_cast<T>((2.0 * rng.uniform() - 1.0) * bound);
        for (auto& bb : b) bb = T(0);
    }

    Tensor<T> forward(const Tensor<T>& x, std::vector<T>& col) const {
        int oh = 0, ow = 0;
        im2col3(x, stride, col, oh, ow);
        Tensor<T> y(out_c, oh, ow);
        const int n = oh * ow;
        gemm(false, false, out_c, n, in_c * 9, T(1), W.data(), in_c * 9, col.data(), n, T(0),
             y.v.data(), n);
        for (int ci = 0; ci < out_c; ++ci) {
            T* row = y.v.data() + static_cast<std::size_t>(ci) * n;
            for (int i = 0; i < n; ++i) row[i] += b[ci];
        }
        return y;
    }

    Tensor<T> forward(const Tensor<T>& x) const {
        std::vector<T> col;
        return forward(x, col);
    }

    // Accumulates dW/db into grad and returns dx. x is the saved forward input.
    Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& dy, Conv2d<T>& grad) const {
        std::vector<T> col;
        int oh = 0, ow = 0;
        im2col3(x, stride, col, oh, ow);
        const int n = oh * ow;
        const int k = in_c * 9;
        gemm(false, true, out_c, k, n, T(1), dy.v.data(), n, col.data(), n, T(1), grad.W.data(), k);
        for (int ci = 0; ci < out_c; ++ci) {
            const T* row = dy.v.data() + static_cast<std::size_t>(ci) * n;
            T s = T(0);
            for (int i = 0; i < n; ++i) s += row[i];
            grad.b[ci] += s;
        }
        std::vector<T> dcol(col.size());
        gemm(true, false, k, n, out_c, T(1), W.data(), k, dy.v.data(), n, T(0), dcol.data(), n);
        Tensor<T> dx(x.c, x.h, x.w);
        col2im3(dcol, stride, dx, oh, ow);
        return dx;
    }
};

template <class T>
void relu_inplace(Tensor<T>& t) {
    for (auto& v : t.v)
        if (v < T(0)) v = T(0);
}

// Masks dy by the saved post-activation (y > 0 iff pre-activation > 0).
template <class T>
void relu_backward_inplace(Tensor<T>& dy, const Tensor<T>& y) {
    for (std::size_t i = 0; i < dy.v.size(); ++i)
        if (!(y.v[i] > T(0))) dy.v[i] = T(0);
}

// out = ReLU(x + conv2(ReLU(conv1(x)))), both convs stride 1 at equal width
template <class T>
struct ResBlock {
    Conv2d<T> c1, c2;
    ResBlock() = default;
    explicit ResBlock(int ch) : c1(ch, ch, 1), c2(ch, ch, 1) {}

    struct Trace {
        Tensor<T> x, a1, y;  // input, post-ReLU of conv1, post-ReLU output
    };

    Tensor<T> forward(const Tensor<T>& x, Trace& tr) const {
        tr.x = x;
        Tensor<T> a1 = c1.forward(x);
        relu_inplace(a1);
        tr.a1 = a1;
        Tensor<T> y = c2.forward(a1);
        for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += x.v[i];
        relu_inplace(y);
        tr.y = y;
        return y;
    }

    Tensor<T> backward(const Trace& tr, Tensor<T> dy, ResBlock<T>& grad) const {
        relu_backward_inplace(dy, tr.y);
        Tensor<T> da1 = c2.backward(tr.a1, dy, grad.c2);
        relu_backward_inplace(da1, tr.a1);
        Tensor<T> dx = c1.backward(tr.x, da1, grad.c1);
        for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += dy.v[i];
        return dx;
    }
};

template <class T>
struct Encoder {
    std::vector<Conv2d<T>> convs;  // each followed by ReLU
    std::vector<ResBlock<T>> res;

    struct Trace {
        std::vector<Tensor<T>> conv_in, conv_out;
        std::vector<typename ResBlock<T>::Trace> res;
    };

    Tensor<T> forward(const Tensor<T>& x, Trace& tr) const {
        tr.conv_in.clear();
        tr.conv_out.clear();
        tr.res.resize(res.size());
        Tensor<T> cur = x;
        for (const auto& c : convs) {
            tr.conv_in.push_back(cur);
            cur = c.forward(cur);
            relu_inplace(cur);
            tr.conv_out.push_back(cur);
        }
        for (std::size_t i = 0; i < res.size(); ++i) cur = res[i].forward(cur, tr.res[i]);
        return cur;
    }

    Tensor<T> forward(const Tensor<T>& x) const {
        Trace tr;
        return forward(x, tr);
    }

    Tensor<T> backward(const Trace& tr, Tensor<T> dy, Encoder<T>& grad) const {
        for (std::size_t i = res.size(); i-- > 0;) dy = res[i].backward(tr.res[i], std::move(dy), grad.res[i]);
        for (std::size_t i = convs.size(); i-- > 0;) {
            relu_backward_inplace(dy, tr.conv_out[i]);
            dy = convs[i].backward(tr.conv_in[i], dy, grad.convs[i]);
        }
        return dy;
    }
};

template <class T>
Tensor<T> nearest_up2(const Tensor<T>& x) {
    Tensor<T> y(x.c, x.h * 2, x.w * 2);
    for (int ci = 0; ci < x.c; ++ci)
        for (int z = 0; z < y.h; ++z)
            for (int xx = 0; xx < y.w; ++xx) y.at(ci, z, xx) = x.at(ci, z / 2, xx / 2);
    return y;
}

template <class T>
Tensor<T> nearest_up2_backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.c, dy.h / 2, dy.w / 2);
    for (int ci = 0; ci < dy.c; ++ci)
        for (int z = 0; z < dy.h; ++z)
            for (int xx = 0; xx < dy.w; ++xx) dx.at(ci, z / 2, xx / 2) += dy.at(ci, z, xx);
    return dx;
}

template <class T>
struct Decoder {
    std::vector<ResBlock<T>> res;
    std::vector<Conv2d<T>> ups;  // applied after nearest x2, each followed by ReLU
    Conv2d<T> head;              // 3x3 to one channel, sigmoid

    struct Trace {
        std::vector<typename ResBlock<T>::Trace> res;
        std::vector<Tensor<T>> up_in, up_out;  // conv input (post-upsample), post-ReLU output
        Tensor<T> head_in, out;                // head conv input, sigmoid output
    };

    Tensor<T> forward(const Tensor<T>& x, Trace& tr) const {
        tr.res.resize(res.size());
        tr.up_in.clear();
        tr.up_out.clear();
        Tensor<T> cur = x;
        for (std::size_t i = 0; i < res.size(); ++i) cur = res[i].forward(cur, tr.res[i]);
        for (const auto& c : ups) {
            cur = nearest_up2(cur);
            tr.up_in.push_back(cur);
            cur = c.forward(cur);
            relu_inplace(cur);
            tr.up_out.push_back(cur);
        }
        tr.head_in = cur;
        cur = head.forward(cur);
        for (auto& v : cur.v) v = T(1) / (T(1) + std::exp(-v));
        tr.out = cur;
        return cur;
    }

    Tensor<T> forward(const Tensor<T>& x) const {
        Trace tr;
        return forward(x, tr);
    }

    Tensor<T> backward(const Trace& tr, Tensor<T> dy, Decoder<T>& grad) const {
        for (std::size_t i = 0; i < dy.v.size(); ++i) {
            const T s = tr.out.v[i];
            dy.v[i] *= s * (T(1) - s);
        }
        dy = head.backward(tr.head_in, dy, grad.head);
        for (std::size_t i = ups.size(); i-- > 0;) {
            relu_backward_inplace(dy, tr.up_out[i]);
            dy = ups[i].backward(tr.up_in[i], dy, grad.ups[i]);
            dy = nearest_up2_backward(dy);
        }
        for (std::size_t i = res.size(); i-- > 0;) dy = res[i].backward(tr.res[i], std::move(dy), grad.res[i]);
        return dy;
    }
};

template <class T>
struct Model {
    ArchConfig arch;
    std::vector<Encoder<T>> encoders;
    Decoder<T> decoder;
    std::uint64_t seed = 0;

    // Applies f(conv) to every convolution in checkpoint declaration order:
    // encoders 1..K (convs, then residual pairs), then the decoder
    // (residual pairs, up convs, head).
    template <class F>
    void visit(F&& f) {
        for (auto& e : encoders) {
            for (auto& c : e.convs) f(c);
            for (auto& r : e.res) {
                f(r.c1);
                f(r.c2);
            }
        }
        for (auto& r : decoder.res) {
            f(r.c1);
            f(r.c2);
        }
        for (auto& c : decoder.ups) f(c);
        f(decoder.head);
    }

    template <class F>
    void visit(F&& f) const {
        const_cast<Model<T>*>(this)->visit([&](Conv2d<T>& c) { f(static_cast<const Conv2d<T>&>(c)); });
    }

    // Same order as visit, with a stable human-readable name per convolution.
    template <class F>
    void visit_named(F&& f) {
        for (std::size_t e = 0; e < encoders.size(); ++e) {
            const std::string pre = "encoder" + std::to_string(e + 1) + ".";
            for (std::size_t i = 0; i < encoders[e].convs.size(); ++i)
                f(encoders[e].convs[i], pre + "conv" + std::to_string(i + 1));
            for (std::size_t i = 0; i < encoders[e].res.size(); ++i) {
                f(encoders[e].res[i].c1, pre + "res" + std::to_string(i + 1) + ".conv1");
                f(encoders[e].res[i].c2, pre + "res" + std::to_string(i + 1) + ".conv2");
            }
        }
        for (std::size_t i = 0; i < decoder.res.size(); ++i) {
            f(decoder.res[i].c1, "decoder.res" + std::to_string(i + 1) + ".conv1");
            f(decoder.res[i].c2, "decoder.res" + std::to_string(i + 1) + ".conv2");
        }
        for (std::size_t i = 0; i < decoder.ups.size(); ++i)
            f(decoder.ups[i], "decoder.up" + std::to_string(i + 1));
        f(decoder.head, "decoder.head");
    }
};

template <class T>
Model<T> build_model(const ArchConfig& arch, std::uint64_t seed) {
    arch.validate();
    Model<T> m;
    m.arch = arch;
    m.seed = seed;
    Rng rng(seed);
    m.encoders.resize(arch.n_branches);
    for (auto& e : m.encoders) {
        for (int k = 0; k < arch.enc_conv_blocks; ++k)
            e.convs.emplace_back(arch.enc_in_channels(k), arch.enc_out_channels(k), 2);
        for (int k = 0; k < arch.enc_res_blocks; ++k) e.res.emplace_back(arch.bottleneck_channels());
    }
    for (int k = 0; k < arch.dec_res_blocks; ++k)
        m.decoder.res.emplace_back(arch.bottleneck_channels());
    for (int j = 0; j < arch.dec_conv_blocks; ++j)
        m.decoder.ups.emplace_back(arch.dec_in_channels(j), arch.dec_out_channels(j), 1);
    m.decoder.head = Conv2d<T>(arch.base_channels, 1, 1);
    m.visit([&](Conv2d<T>& c) { c.init_he_uniform(rng); });
    return m;
}

template <class T>
Model<T> make_zero_like(const Model<T>& m) {
    Model<T> g;
    g.arch = m.arch;
    g.seed = m.seed;
    g.encoders.resize(m.encoders.size());
    for (std::size_t i = 0; i < m.encoders.size(); ++i) {
        for (const auto& c : m.encoders[i].convs) g.encoders[i].convs.emplace_back(c.in_c, c.out_c, c.stride);
        for (const auto& r : m.encoders[i].res) g.encoders[i].res.emplace_back(r.c1.in_c);
    }
    for (const auto& r : m.decoder.res) g.decoder.res.emplace_back(r.c1.in_c);
    for (const auto& c : m.decoder.ups) g.decoder.ups.emplace_back(c.in_c, c.out_c, c.stride);
    g.decoder.head = Conv2d<T>(m.decoder.head.in_c, m.decoder.head.out_c, 1);
    return g;
}

template <class T>
void zero_params(Model<T>& m) {
    m.visit([](Conv2d<T>& c) {
        std::fill(c.W.begin(), c.W.end(), T(0));
        std::fill(c.b.begin(), c.b.end(), T(0));
    });
}

template <class T>
std::size_t param_count(const Model<T>& m) {
    std::size_t n = 0;
    m.visit([&](const Conv2d<T>& c) { n += c.W.size() + c.b.size(); });
    return n;
}

template <class T>
Tensor<T> image_to_tensor(const img::Image& im) {
    Tensor<T> t(1, im.height(), im.width());
    for (std::size_t i = 0; i < im.size(); ++i) t.v[i] = static_cast<T>(im[i]);
    return t;
}

template <class T>
img::Image tensor_to_image(const Tensor<T>& t) {
    if (t.c != 1) throw std::invalid_argument("expected a single-channel tensor");
    std::vector<double> px(t.v.size());
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<double>(t.v[i]);
    return img::Image::from_clamped(t.w, t.h, px);
}

template <class T>
void check_forward_dims(const Model<T>& m, int w, int h) {
    const int s = m.arch.total_stride();
    if (w % s != 0 || h % s != 0)
        throw std::invalid_argument("image dimensions must be divisible by " + std::to_string(s) +
                                    "; pad the input (denoise reflect-pads automatically)");
}

template <class T>
Tensor<T> forward_tensor(const Model<T>& m, const Tensor<T>& x, int branch) {
    if (branch < 1 || branch > static_cast<int>(m.encoders.size()))
        throw std::invalid_argument("branch index out of range");
    check_forward_dims(m, x.w, x.h);
    Tensor<T> z = m.encoders[branch - 1].forward(x);
    return m.decoder.forward(z);
}

template <class T>
img::Image forward(const Model<T>& m, const img::Image& im, int branch) {
    return tensor_to_image(forward_tensor(m, image_to_tensor<T>(im), branch));
}

}  // namespace s2s::nn
