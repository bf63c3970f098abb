// Copyright 2026 The asrser Authors
// SPDX-License-Identifier: Apache-2.0

#include "asrser/numkernel/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace asrser::nk {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op)
{
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                             to_string(b.shape()));
    }
}

void require_rank(const Tensor& x, std::size_t rank, const char* op)
{
    if (x.rank() != rank) {
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                             to_string(x.shape()));
    }
}

struct AxisView {
    std::size_t outer = 1;
    std::size_t extent = 1;
    std::size_t inner = 1;
};

AxisView axis_view(const Shape& shape, std::size_t axis, const char* op)
{
    if (axis >= shape.size()) {
        throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) + " invalid for shape " +
                             to_string(shape));
    }
    AxisView v;
    for (std::size_t i = 0; i < axis; ++i) v.outer *= shape[i];
    v.extent = shape[axis];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) v.inner *= shape[i];
    return v;
}

// out[m,n] += a[m,k] * b[n,k]^T
void gemm_nt_acc(const Tensor& a, const Tensor& b, Tensor& out)
{
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[j * k + p];
            out[i * n + j] += s;
        }
    }
}

// out[k,n] += a[m,k]^T * b[m,n]
void gemm_tn_acc(const Tensor& a, const Tensor& b, Tensor& out)
{
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) out[p * n + j] += av * b[i * n + j];
        }
    }
}

void accumulate(Tensor& dst, const Tensor& src)
{
    auto d = dst.data();
    auto s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

double stable_sigmoid(double x)
{
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

// ---- plain tensor kernels -------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b)
{
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw DimensionError("matmul: incompatible shapes " + to_string(a.shape()) + " and " + to_string(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] += av * b[p * n + j];
        }
    }
    return out;
}

Tensor transpose(const Tensor& x)
{
    require_rank(x, 2, "transpose");
    const std::size_t m = x.dim(0), n = x.dim(1);
    Tensor out({n, m});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x[i * n + j];
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "add");
    Tensor out = a;
    accumulate(out, b);
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "sub");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "mul");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
    return out;
}

Tensor scale(double s, const Tensor& x)
{
    Tensor out = x;
    for (auto& v : out.data()) v *= s;
    return out;
}

Tensor add_rowwise(const Tensor& x, const Tensor& bias)
{
    require_rank(x, 2, "add_rowwise");
    if (bias.rank() != 1 || bias.dim(0) != x.dim(1)) {
        throw DimensionError("add_rowwise: bias " + to_string(bias.shape()) + " does not fit rows of " +
                             to_string(x.shape()));
    }
    Tensor out = x;
    const std::size_t n = x.dim(1);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bias[i % n];
    return out;
}

Tensor relu(const Tensor& x)
{
    Tensor out = x;
    for (auto& v : out.data()) v = v < 0.0 ? 0.0 : v;  // NaN passes through
    return out;
}

Tensor sigmoid(const Tensor& x)
{
    Tensor out = x;
    for (auto& v : out.data()) v = stable_sigmoid(v);
    return out;
}

Tensor softmax(const Tensor& x, std::size_t axis)
{
    auto v = axis_view(x.shape(), axis, "softmax");
    Tensor out = x;
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t k = 0; k < v.inner; ++k) {
            const std::size_t base = o * v.extent * v.inner + k;
            double mx = out[base];
            for (std::size_t i = 1; i < v.extent; ++i) mx = std::max(mx, out[base + i * v.inner]);
            double total = 0.0;
            for (std::size_t i = 0; i < v.extent; ++i) {
                double e = std::exp(out[base + i * v.inner] - mx);
                out[base + i * v.inner] = e;
                total += e;
            }
            for (std::size_t i = 0; i < v.extent; ++i) out[base + i * v.inner] /= total;
        }
    }
    return out;
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis)
{
    if (parts.empty()) throw DimensionError("concat: no inputs");
    const Shape& first = parts.front().shape();
    axis_view(first, axis, "concat");
    Shape out_shape = first;
    out_shape[axis] = 0;
    for (const auto& p : parts) {
        bool ok = p.rank() == first.size();
        for (std::size_t d = 0; ok && d < first.size(); ++d) ok = d == axis || p.shape()[d] == first[d];
        if (!ok) {
            throw DimensionError("concat: shape " + to_string(p.shape()) + " incompatible with " + to_string(first) +
                                 " along axis " + std::to_string(axis));
        }
        out_shape[axis] += p.shape()[axis];
    }
    Tensor out(out_shape);
    auto ov = axis_view(out_shape, axis, "concat");
    std::size_t offset = 0;
    for (const auto& p : parts) {
        auto pv = axis_view(p.shape(), axis, "concat");
        const std::size_t block = pv.extent * pv.inner;
        for (std::size_t o = 0; o < ov.outer; ++o) {
            std::copy_n(p.data().begin() + static_cast<std::ptrdiff_t>(o * block), block,
                        out.data().begin() + static_cast<std::ptrdiff_t>(o * ov.extent * ov.inner + offset * ov.inner));
        }
        offset += pv.extent;
    }
    return out;
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end)
{
    auto v = axis_view(x.shape(), axis, "slice");
    if (begin >= end || end > v.extent) {
        throw DimensionError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                             ") invalid for shape " + to_string(x.shape()) + " axis " + std::to_string(axis));
    }
    Shape out_shape = x.shape();
    out_shape[axis] = end - begin;
    Tensor out(out_shape);
    const std::size_t block = (end - begin) * v.inner;
    for (std::size_t o = 0; o < v.outer; ++o) {
        std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(o * v.extent * v.inner + begin * v.inner), block,
                    out.data().begin() + static_cast<std::ptrdiff_t>(o * block));
    }
    return out;
}

Tensor mean_pool(const Tensor& x)
{
    require_rank(x, 2, "mean_pool");
    const std::size_t seq = x.dim(0), d = x.dim(1);
    Tensor out({d});
    for (std::size_t i = 0; i < seq; ++i) {
        for (std::size_t j = 0; j < d; ++j) out[j] += x[i * d + j];
    }
    for (auto& v : out.data()) v /= static_cast<double>(seq);
    return out;
}

Tensor outer_augmented(const Tensor& a, const Tensor& t)
{
    require_rank(a, 1, "outer_augmented");
    require_rank(t, 1, "outer_augmented");
    const std::size_t da = a.dim(0) + 1, dt = t.dim(0) + 1;
    Tensor out({da * dt});
    for (std::size_t i = 0; i < da; ++i) {
        const double ai = i + 1 < da ? a[i] : 1.0;
        for (std::size_t j = 0; j < dt; ++j) out[i * dt + j] = ai * (j + 1 < dt ? t[j] : 1.0);
    }
    return out;
}

// ---- recorded ops ----------------------------------------------------------

Var matmul(Var a, Var b)
{
    Tape& tape = common_tape({a, b});
    const auto ia = a.id(), ib = b.id();
    return tape.record(matmul(a.value(), b.value()), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        if (t.requires_grad(ia)) gemm_nt_acc(g, t.value(ib), t.grad(ia));
        if (t.requires_grad(ib)) gemm_tn_acc(t.value(ia), g, t.grad(ib));
    });
}

Var transpose(Var x)
{
    Tape& tape = x.tape();
    const auto ix = x.id();
    return tape.record(transpose(x.value()), {ix}, [ix](Tape& t, std::size_t self) {
        accumulate(t.grad(ix), transpose(t.grad(self)));
    });
}

Var add(Var a, Var b)
{
    Tape& tape = common_tape({a, b});
    const auto ia = a.id(), ib = b.id();
    return tape.record(add(a.value(), b.value()), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        if (t.requires_grad(ia)) accumulate(t.grad(ia), g);
        if (t.requires_grad(ib)) accumulate(t.grad(ib), g);
    });
}

Var sub(Var a, Var b)
{
    Tape& tape = common_tape({a, b});
    const auto ia = a.id(), ib = b.id();
    return tape.record(sub(a.value(), b.value()), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        if (t.requires_grad(ia)) accumulate(t.grad(ia), g);
        if (t.requires_grad(ib)) {
            Tensor& gb = t.grad(ib);
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i];
        }
    });
}

Var mul(Var a, Var b)
{
    Tape& tape = common_tape({a, b});
    const auto ia = a.id(), ib = b.id();
    return tape.record(mul(a.value(), b.value()), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        if (t.requires_grad(ia)) {
            Tensor& ga = t.grad(ia);
            const Tensor& vb = t.value(ib);
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * vb[i];
        }
        if (t.requires_grad(ib)) {
            Tensor& gb = t.grad(ib);
            const Tensor& va = t.value(ia);
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * va[i];
        }
    });
}

Var scale(double s, Var x)
{
    Tape& tape = x.tape();
    const auto ix = x.id();
    return tape.record(scale(s, x.value()), {ix}, [ix, s](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad(ix);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += s * g[i];
    });
}

Var scale(Var s, Var x)
{
    Tape& tape = common_tape({s, x});
    if (s.value().size() != 1) {
        throw DimensionError("scale: factor must hold one element, got shape " + to_string(s.shape()));
    }
    const auto is = s.id(), ix = x.id();
    return tape.record(scale(s.value()[0], x.value()), {is, ix}, [is, ix](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        if (t.requires_grad(is)) {
            const Tensor& vx = t.value(ix);
            double acc = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * vx[i];
            t.grad(is)[0] += acc;
        }
        if (t.requires_grad(ix)) {
            const double sv = t.value(is)[0];
            Tensor& gx = t.grad(ix);
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += sv * g[i];
        }
    });
}

Var add_rowwise(Var x, Var bias)
{
    Tape& tape = common_tape({x, bias});
    const auto ix = x.id(), ib = bias.id();
    return tape.record(add_rowwise(x.value(), bias.value()), {ix, ib}, [ix, ib](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        if (t.requires_grad(ix)) accumulate(t.grad(ix), g);
        if (t.requires_grad(ib)) {
            Tensor& gb = t.grad(ib);
            const std::size_t n = gb.size();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i % n] += g[i];
        }
    });
}

Var relu(Var x)
{
    Tape& tape = x.tape();
    const auto ix = x.id();
    return tape.record(relu(x.value()), {ix}, [ix](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& vx = t.value(ix);
        Tensor& gx = t.grad(ix);
        for (std::size_t i = 0; i < gx.size(); ++i) {
            if (vx[i] > 0.0) gx[i] += g[i];
        }
    });
}

Var sigmoid(Var x)
{
    Tape& tape = x.tape();
    const auto ix = x.id();
    return tape.record(sigmoid(x.value()), {ix}, [ix](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& y = t.value(self);
        Tensor& gx = t.grad(ix);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
    });
}

Var softmax(Var x, std::size_t axis)
{
    Tape& tape = x.tape();
    const auto ix = x.id();
    return tape.record(softmax(x.value(), axis), {ix}, [ix, axis](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& y = t.value(self);
        Tensor& gx = t.grad(ix);
        auto v = axis_view(y.shape(), axis, "softmax");
        for (std::size_t o = 0; o < v.outer; ++o) {
            for (std::size_t k = 0; k < v.inner; ++k) {
                const std::size_t base = o * v.extent * v.inner + k;
                double inner = 0.0;
                for (std::size_t i = 0; i < v.extent; ++i) inner += g[base + i * v.inner] * y[base + i * v.inner];
                for (std::size_t i = 0; i < v.extent; ++i) {
                    const std::size_t at = base + i * v.inner;
                    gx[at] += y[at] * (g[at] - inner);
                }
            }
        }
    });
}

Var concat(std::span<const Var> parts, std::size_t axis)
{
    if (parts.empty()) throw DimensionError("concat: no inputs");
    Tape& tape = parts.front().tape();
    std::vector<Tensor> values;
    std::vector<std::size_t> ids;
    std::vector<std::size_t> extents;
    values.reserve(parts.size());
    for (const auto& p : parts) {
        if (&p.tape() != &tape) throw TapeError("concat operands belong to different tapes");
        values.push_back(p.value());
        ids.push_back(p.id());
    }
    Tensor out = concat(std::span<const Tensor>(values), axis);
    for (const auto& v : values) extents.push_back(v.shape()[axis]);
    auto inputs = ids;
    return tape.record(std::move(out), std::move(inputs), [ids, extents, axis](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        std::size_t offset = 0;
        for (std::size_t p = 0; p < ids.size(); ++p) {
            if (t.requires_grad(ids[p])) accumulate(t.grad(ids[p]), slice(g, axis, offset, offset + extents[p]));
            offset += extents[p];
        }
    });
}

Var concat(std::initializer_list<Var> parts, std::size_t axis)
{
    return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end)
{
    Tape& tape = x.tape();
    const auto ix = x.id();
    return tape.record(slice(x.value(), axis, begin, end), {ix}, [ix, axis, begin](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad(ix);
        auto xv = axis_view(gx.shape(), axis, "slice");
        auto gv = axis_view(g.shape(), axis, "slice");
        const std::size_t block = gv.extent * gv.inner;
        for (std::size_t o = 0; o < xv.outer; ++o) {
            const std::size_t dst = o * xv.extent * xv.inner + begin * xv.inner;
            for (std::size_t i = 0; i < block; ++i) gx[dst + i] += g[o * block + i];
        }
    });
}

std::vector<Var> split(Var x, std::span<const std::size_t> sizes, std::size_t axis)
{
    std::size_t total = 0;
    for (auto s : sizes) total += s;
    if (axis >= x.shape().size() || total != x.shape()[axis]) {
        throw DimensionError("split: sizes do not add up to axis extent of " + to_string(x.shape()));
    }
    std::vector<Var> out;
    std::size_t offset = 0;
    for (auto s : sizes) {
        out.push_back(slice(x, axis, offset, offset + s));
        offset += s;
    }
    return out;
}

Var reshape(Var x, Shape shape)
{
    Tape& tape = x.tape();
    const auto ix = x.id();
    return tape.record(x.value().reshaped(std::move(shape)), {ix}, [ix](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad(ix);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
    });
}

Var mean_pool(Var x)
{
    Tape& tape = x.tape();
    const auto ix = x.id();
    return tape.record(mean_pool(x.value()), {ix}, [ix](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        Tensor& gx = t.grad(ix);
        const std::size_t seq = gx.dim(0), d = gx.dim(1);
        const double inv = 1.0 / static_cast<double>(seq);
        for (std::size_t i = 0; i < seq; ++i) {
            for (std::size_t j = 0; j < d; ++j) gx[i * d + j] += g[j] * inv;
        }
    });
}

Var outer_augmented(Var a, Var t)
{
    Tape& tape = common_tape({a, t});
    const auto ia = a.id(), it = t.id();
    return tape.record(outer_augmented(a.value(), t.value()), {ia, it}, [ia, it](Tape& tp, std::size_t self) {
        const Tensor& g = tp.grad(self);
        const Tensor& va = tp.value(ia);
        const Tensor& vt = tp.value(it);
        const std::size_t da = va.size() + 1, dt = vt.size() + 1;
        if (tp.requires_grad(ia)) {
            Tensor& ga = tp.grad(ia);
            for (std::size_t i = 0; i + 1 < da; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < dt; ++j) acc += g[i * dt + j] * (j + 1 < dt ? vt[j] : 1.0);
                ga[i] += acc;
            }
        }
        if (tp.requires_grad(it)) {
            Tensor& gt = tp.grad(it);
            for (std::size_t j = 0; j + 1 < dt; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < da; ++i) acc += g[i * dt + j] * (i + 1 < da ? va[i] : 1.0);
                gt[j] += acc;
            }
        }
    });
}

Var sum(Var x)
{
    Tape& tape = x.tape();
    const auto ix = x.id();
    double total = 0.0;
    for (double v : x.value().data()) total += v;
    return tape.record(Tensor::scalar(total), {ix}, [ix](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        for (auto& v : t.grad(ix).data()) v += g;
    });
}

Var dot(Var a, Var b) { return sum(mul(a, b)); }

Var softmax_cross_entropy(Var logits, std::span<const std::size_t> labels)
{
    const Tensor& z = logits.value();
    require_rank(z, 2, "softmax_cross_entropy");
    const std::size_t rows = z.dim(0), k = z.dim(1);
    if (labels.size() != rows) {
        throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                             to_string(z.shape()));
    }
    Tensor probs = softmax(z, 1);
    double loss = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (labels[r] >= k) throw DimensionError("softmax_cross_entropy: label out of range");
        double mx = z[r * k];
        for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, z[r * k + j]);
        double lse = 0.0;
        for (std::size_t j = 0; j < k; ++j) lse += std::exp(z[r * k + j] - mx);
        loss += mx + std::log(lse) - z[r * k + labels[r]];
    }
    loss /= static_cast<double>(rows);
    std::vector<std::size_t> lab(labels.begin(), labels.end());
    const auto il = logits.id();
    return logits.tape().record(Tensor::scalar(loss), {il},
                                [il, probs = std::move(probs), lab = std::move(lab)](Tape& t, std::size_t self) {
                                    const double g = t.grad(self)[0];
                                    Tensor& gz = t.grad(il);
                                    const std::size_t rows = gz.dim(0), k = gz.dim(1);
                                    const double w = g / static_cast<double>(rows);
                                    for (std::size_t r = 0; r < rows; ++r) {
                                        for (std::size_t j = 0; j < k; ++j) {
                                            gz[r * k + j] += w * (probs[r * k + j] - (j == lab[r] ? 1.0 : 0.0));
                                        }
                                    }
                                });
}

Var mse(Var pred, const Tensor& target)
{
    const Tensor& p = pred.value();
    require_rank(p, 2, "mse");
    require_same_shape(p, target, "mse");
    const double rows = static_cast<double>(p.dim(0));
    double loss = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double d = p[i] - target[i];
        loss += d * d;
    }
    loss /= rows;
    const auto ip = pred.id();
    return pred.tape().record(Tensor::scalar(loss), {ip}, [ip, target, rows](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        const Tensor& vp = t.value(ip);
        Tensor& gp = t.grad(ip);
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g * 2.0 * (vp[i] - target[i]) / rows;
    });
}

}  // namespace asrser::nk
