#include "hqcnn/nn.hpp"

#include "hqcnn/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace hqcnn::nn {

std::size_t element_count(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), values(element_count(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != element_count(shape)) {
        throw ShapeError("tensor of shape " + shape_string(shape) + " cannot hold " +
                         std::to_string(values.size()) + " values");
    }
}

Tensor Tensor::parameter(Shape s) {
    Tensor t(std::move(s));
    t.grad.assign(t.values.size(), 0.0);
    return t;
}

void Tensor::zero_grad() {
    grad.assign(values.size(), 0.0);
}

Tensor Tensor::reshaped(Shape s) const {
    if (element_count(s) != values.size()) {
        throw ShapeError("cannot reshape " + shape_string(shape) + " to " + shape_string(s));
    }
    return Tensor(std::move(s), values);
}

namespace {

struct Dims4 {
    std::size_t b, c, h, w;
};

Dims4 as_batched(const Tensor& t, const char* what) {
    if (t.rank() == 3) return {1, t.dim(0), t.dim(1), t.dim(2)};
    if (t.rank() == 4) return {t.dim(0), t.dim(1), t.dim(2), t.dim(3)};
    throw ShapeError(std::string(what) + " expects a [C,H,W] or [B,C,H,W] tensor, got " +
                     shape_string(t.shape));
}

void check_conv_shapes(const Dims4& in, const Tensor& weight, const Tensor& bias) {
    if (weight.rank() != 4 || weight.dim(2) != 3 || weight.dim(3) != 3) {
        throw ShapeError("conv2d weight must be [out,in,3,3], got " + shape_string(weight.shape));
    }
    if (weight.dim(1) != in.c) {
        throw ShapeError("conv2d weight expects " + std::to_string(weight.dim(1)) +
                         " input channels, input has " + std::to_string(in.c));
    }
    if (bias.rank() != 1 || bias.dim(0) != weight.dim(0)) {
        throw ShapeError("conv2d bias must be [" + std::to_string(weight.dim(0)) + "], got " +
                         shape_string(bias.shape));
    }
}

} // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias) {
    const Dims4 in = as_batched(input, "conv2d");
    check_conv_shapes(in, weight, bias);
    const std::size_t cout = weight.dim(0);
    const auto H = static_cast<std::ptrdiff_t>(in.h);
    const auto W = static_cast<std::ptrdiff_t>(in.w);

    Shape out_shape = input.rank() == 3 ? Shape{cout, in.h, in.w} : Shape{in.b, cout, in.h, in.w};
    Tensor out(std::move(out_shape));
    const std::size_t plane = in.h * in.w;

    for (std::size_t b = 0; b < in.b; ++b) {
        for (std::size_t o = 0; o < cout; ++o) {
            double* dst = &out.values[(b * cout + o) * plane];
            std::fill(dst, dst + plane, bias.values[o]);
            for (std::size_t c = 0; c < in.c; ++c) {
                const double* src = &input.values[(b * in.c + c) * plane];
                const double* k = &weight.values[(o * in.c + c) * 9];
                for (std::ptrdiff_t i = 0; i < H; ++i) {
                    for (std::ptrdiff_t j = 0; j < W; ++j) {
                        double s = 0.0;
                        for (std::ptrdiff_t m = 0; m < 3; ++m) {
                            const auto y = i + m - 1;
                            if (y < 0 || y >= H) continue;
                            for (std::ptrdiff_t n = 0; n < 3; ++n) {
                                const auto x = j + n - 1;
                                if (x < 0 || x >= W) continue;
                                s += src[y * W + x] * k[m * 3 + n];
                            }
                        }
                        dst[i * W + j] += s;
                    }
                }
            }
        }
    }
    return out;
}

Tensor relu(const Tensor& t) {
    Tensor out = t;
    out.grad.clear();
    for (auto& v : out.values) v = std::max(v, 0.0);
    return out;
}

Tensor maxpool2(const Tensor& t) {
    MaxPool2 pool;
    return pool.forward(t);
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    if (weight.rank() != 2) throw ShapeError("linear weight must be [out,in]");
    const std::size_t out_f = weight.dim(0);
    const std::size_t in_f = weight.dim(1);
    if (bias.rank() != 1 || bias.dim(0) != out_f) {
        throw ShapeError("linear bias must be [" + std::to_string(out_f) + "], got " +
                         shape_string(bias.shape));
    }
    std::size_t batch = 1;
    if (x.rank() == 2) {
        batch = x.dim(0);
        if (x.dim(1) != in_f) {
            throw ShapeError("linear expects " + std::to_string(in_f) + " input features, got " +
                             shape_string(x.shape));
        }
    } else if (x.rank() != 1 || x.dim(0) != in_f) {
        throw ShapeError("linear expects " + std::to_string(in_f) + " input features, got " +
                         shape_string(x.shape));
    }
    Tensor out(x.rank() == 2 ? Shape{batch, out_f} : Shape{out_f});
    for (std::size_t b = 0; b < batch; ++b) {
        const double* row = &x.values[b * in_f];
        for (std::size_t o = 0; o < out_f; ++o) {
            const double* w = &weight.values[o * in_f];
            double s = bias.values[o];
            for (std::size_t i = 0; i < in_f; ++i) s += w[i] * row[i];
            out.values[b * out_f + o] = s;
        }
    }
    return out;
}

Tensor flatten(const Tensor& t) {
    if (t.rank() < 1) throw ShapeError("cannot flatten a scalar");
    const std::size_t b = t.dim(0);
    return t.reshaped({b, b == 0 ? 0 : t.size() / b});
}

Tensor dropout(const Tensor& t, double p, bool training, Rng& rng) {
    Dropout d(p);
    return d.forward(t, training, rng);
}

LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
    if (logits.rank() != 2) throw ShapeError("logits must be [B,K], got " + shape_string(logits.shape));
    const std::size_t batch = logits.dim(0);
    const std::size_t k = logits.dim(1);
    if (labels.size() != batch) {
        throw ShapeError("got " + std::to_string(labels.size()) + " labels for batch of " +
                         std::to_string(batch));
    }
    if (batch == 0) throw ShapeError("empty batch");

    LossResult r{0.0, Tensor(logits.shape)};
    for (std::size_t b = 0; b < batch; ++b) {
        const int label = labels[b];
        if (label < 0 || static_cast<std::size_t>(label) >= k) {
            throw ValidationError("class index " + std::to_string(label) + " outside [0, " +
                                  std::to_string(k) + ")");
        }
        const double* row = &logits.values[b * k];
        const double mx = *std::max_element(row, row + k);
        double z = 0.0;
        for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
        const double log_z = std::log(z) + mx;
        r.loss += log_z - row[label];
        for (std::size_t j = 0; j < k; ++j) {
            const double p = std::exp(row[j] - log_z);
            r.d_logits.values[b * k + j] =
                (p - (j == static_cast<std::size_t>(label) ? 1.0 : 0.0)) / static_cast<double>(batch);
        }
    }
    r.loss /= static_cast<double>(batch);
    return r;
}

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels)
    : weight(Tensor::parameter({out_channels, in_channels, 3, 3})),
      bias(Tensor::parameter({out_channels})) {}

void Conv2d::init(Rng& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(weight.dim(1) * 9));
    for (auto& v : weight.values) v = rng.uniform(-bound, bound);
    for (auto& v : bias.values) v = rng.uniform(-bound, bound);
}

Tensor Conv2d::forward(const Tensor& input) {
    input_ = input;
    return conv2d(input, weight, bias);
}

Tensor Conv2d::backward(const Tensor& d_out) {
    const Dims4 in = as_batched(input_, "conv2d");
    const std::size_t cout = weight.dim(0);
    if (d_out.size() != in.b * cout * in.h * in.w) {
        throw ShapeError("conv2d backward: gradient shape " + shape_string(d_out.shape) +
                         " does not match forward output");
    }
    if (!weight.has_grad()) weight.zero_grad();
    if (!bias.has_grad()) bias.zero_grad();

    const auto H = static_cast<std::ptrdiff_t>(in.h);
    const auto W = static_cast<std::ptrdiff_t>(in.w);
    const std::size_t plane = in.h * in.w;
    Tensor d_in(input_.shape);

    for (std::size_t b = 0; b < in.b; ++b) {
        for (std::size_t o = 0; o < cout; ++o) {
            const double* g = &d_out.values[(b * cout + o) * plane];
            double bsum = 0.0;
            for (std::size_t p = 0; p < plane; ++p) bsum += g[p];
            bias.grad[o] += bsum;
            for (std::size_t c = 0; c < in.c; ++c) {
                const double* src = &input_.values[(b * in.c + c) * plane];
                double* dsrc = &d_in.values[(b * in.c + c) * plane];
                const double* k = &weight.values[(o * in.c + c) * 9];
                double* dk = &weight.grad[(o * in.c + c) * 9];
                for (std::ptrdiff_t i = 0; i < H; ++i) {
                    for (std::ptrdiff_t j = 0; j < W; ++j) {
                        const double go = g[i * W + j];
                        if (go == 0.0) continue;
                        for (std::ptrdiff_t m = 0; m < 3; ++m) {
                            const auto y = i + m - 1;
                            if (y < 0 || y >= H) continue;
                            for (std::ptrdiff_t n = 0; n < 3; ++n) {
                                const auto x = j + n - 1;
                                if (x < 0 || x >= W) continue;
                                dk[m * 3 + n] += go * src[y * W + x];
                                dsrc[y * W + x] += go * k[m * 3 + n];
                            }
                        }
                    }
                }
            }
        }
    }
    return d_in;
}

Linear::Linear(std::size_t in_features, std::size_t out_features)
    : weight(Tensor::parameter({out_features, in_features})), bias(Tensor::parameter({out_features})) {}

void Linear::init(Rng& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(weight.dim(1)));
    for (auto& v : weight.values) v = rng.uniform(-bound, bound);
    for (auto& v : bias.values) v = rng.uniform(-bound, bound);
}

Tensor Linear::forward(const Tensor& input) {
    input_ = input;
    return linear(input, weight, bias);
}

Tensor Linear::backward(const Tensor& d_out) {
    const std::size_t out_f = weight.dim(0);
    const std::size_t in_f = weight.dim(1);
    const std::size_t batch = input_.rank() == 2 ? input_.dim(0) : 1;
    if (d_out.size() != batch * out_f) {
        throw ShapeError("linear backward: gradient shape " + shape_string(d_out.shape) +
                         " does not match forward output");
    }
    if (!weight.has_grad()) weight.zero_grad();
    if (!bias.has_grad()) bias.zero_grad();

    Tensor d_in(input_.shape);
    for (std::size_t b = 0; b < batch; ++b) {
        const double* x = &input_.values[b * in_f];
        double* dx = &d_in.values[b * in_f];
        for (std::size_t o = 0; o < out_f; ++o) {
            const double g = d_out.values[b * out_f + o];
            bias.grad[o] += g;
            const double* w = &weight.values[o * in_f];
            double* dw = &weight.grad[o * in_f];
            for (std::size_t i = 0; i < in_f; ++i) {
                dw[i] += g * x[i];
                dx[i] += g * w[i];
            }
        }
    }
    return d_in;
}

Tensor ReLU::forward(const Tensor& input) {
    input_ = input;
    return relu(input);
}

Tensor ReLU::backward(const Tensor& d_out) const {
    if (d_out.size() != input_.size()) throw ShapeError("relu backward: size mismatch");
    Tensor d_in(input_.shape);
    for (std::size_t i = 0; i < d_in.size(); ++i) {
        d_in.values[i] = input_.values[i] > 0.0 ? d_out.values[i] : 0.0;
    }
    return d_in;
}

Tensor MaxPool2::forward(const Tensor& input) {
    if (input.rank() < 2) throw ShapeError("maxpool2 needs at least 2 dimensions");
    const std::size_t h = input.dim(input.rank() - 2);
    const std::size_t w = input.dim(input.rank() - 1);
    if (h % 2 != 0 || w % 2 != 0) {
        throw ShapeError("maxpool2 needs even spatial dims, got " + shape_string(input.shape));
    }
    const std::size_t planes = input.size() / (h * w);
    const std::size_t oh = h / 2;
    const std::size_t ow = w / 2;

    Shape out_shape = input.shape;
    out_shape[out_shape.size() - 2] = oh;
    out_shape[out_shape.size() - 1] = ow;
    Tensor out(std::move(out_shape));
    input_shape_ = input.shape;
    argmax_.assign(out.size(), 0);

    for (std::size_t p = 0; p < planes; ++p) {
        for (std::size_t i = 0; i < oh; ++i) {
            for (std::size_t j = 0; j < ow; ++j) {
                // First maximum in row-major window order wins ties.
                std::size_t best = p * h * w + (2 * i) * w + 2 * j;
                for (std::size_t m = 0; m < 2; ++m) {
                    for (std::size_t n = 0; n < 2; ++n) {
                        const std::size_t idx = p * h * w + (2 * i + m) * w + (2 * j + n);
                        if (input.values[idx] > input.values[best]) best = idx;
                    }
                }
                const std::size_t o = p * oh * ow + i * ow + j;
                out.values[o] = input.values[best];
                argmax_[o] = best;
            }
        }
    }
    return out;
}

Tensor MaxPool2::backward(const Tensor& d_out) const {
    if (d_out.size() != argmax_.size()) throw ShapeError("maxpool2 backward: size mismatch");
    Tensor d_in(input_shape_);
    for (std::size_t o = 0; o < argmax_.size(); ++o) d_in.values[argmax_[o]] += d_out.values[o];
    return d_in;
}

Dropout::Dropout(double p) : p_(p) {
    if (!(p >= 0.0 && p < 1.0)) throw ValidationError("dropout rate must be in [0, 1)");
}

Tensor Dropout::forward(const Tensor& input, bool training, Rng& rng) {
    Tensor out = input;
    out.grad.clear();
    if (!training || p_ == 0.0) {
        scale_.assign(input.size(), 1.0);
        return out;
    }
    const double keep = 1.0 / (1.0 - p_);
    scale_.resize(input.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        scale_[i] = rng.uniform() < p_ ? 0.0 : keep;
        out.values[i] *= scale_[i];
    }
    return out;
}

Tensor Dropout::backward(const Tensor& d_out) const {
    if (d_out.size() != scale_.size()) throw ShapeError("dropout backward: size mismatch");
    Tensor d_in = d_out;
    d_in.grad.clear();
    for (std::size_t i = 0; i < d_in.size(); ++i) d_in.values[i] *= scale_[i];
    return d_in;
}

SgdNesterov::SgdNesterov(SgdOptions options) : options_(options) {
    if (!(options_.lr > 0.0)) throw ValidationError("learning rate must be positive");
    if (options_.momentum < 0.0 || options_.momentum >= 1.0) {
        throw ValidationError("momentum must be in [0, 1)");
    }
    if (options_.weight_decay < 0.0) throw ValidationError("weight decay must be >= 0");
}

void SgdNesterov::step(std::span<Tensor* const> params) {
    if (velocity_.empty()) {
        for (const auto* p : params) velocity_.emplace_back(p->size(), 0.0);
    }
    if (velocity_.size() != params.size()) {
        throw ShapeError("optimizer was initialised with " + std::to_string(velocity_.size()) +
                         " parameters, got " + std::to_string(params.size()));
    }
    const double lr = options_.lr;
    const double mu = options_.momentum;
    const double wd = options_.weight_decay;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        auto& v = velocity_[k];
        if (v.size() != p.size() || p.grad.size() != p.size()) {
            throw ShapeError("optimizer buffer/gradient shape mismatch for parameter " +
                             std::to_string(k));
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = p.grad[i] + wd * p.values[i];
            v[i] = mu * v[i] + g;
            p.values[i] -= lr * (g + mu * v[i]);
        }
    }
}

namespace {

constexpr const char* kCheckpointMagic = "hqcnn-checkpoint v1";

void write_le(std::ostream& out, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffU);
    out.write(bytes, 8);
}

double read_le(std::istream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
    std::size_t total = 0;
    out << kCheckpointMagic << '\n' << "tensors " << tensors.size() << '\n';
    for (const auto& [name, t] : tensors) {
        if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
            throw ValidationError("checkpoint tensor name must be a nonempty word: '" + name + "'");
        }
        out << name << ' ' << t.rank();
        for (auto d : t.shape) out << ' ' << d;
        out << '\n';
        total += t.size();
    }
    out << "data " << total << '\n';
    for (const auto& [name, t] : tensors) {
        for (double v : t.values) write_le(out, v);
    }
    if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

NamedTensors load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());
    auto fail = [&](int line, const std::string& msg) {
        return FormatError(path.string() + ":" + std::to_string(line) + ": " + msg);
    };

    std::string line;
    if (!std::getline(in, line) || line != kCheckpointMagic) throw fail(1, "bad header");
    if (!std::getline(in, line)) throw fail(2, "missing tensor count");
    std::istringstream count_line(line);
    std::string word;
    std::size_t count = 0;
    if (!(count_line >> word >> count) || word != "tensors") throw fail(2, "expected 'tensors <n>'");

    std::vector<std::pair<std::string, Shape>> manifest;
    for (std::size_t i = 0; i < count; ++i) {
        const int lineno = static_cast<int>(i) + 3;
        if (!std::getline(in, line)) throw fail(lineno, "truncated manifest");
        std::istringstream ls(line);
        std::string name;
        std::size_t rank = 0;
        if (!(ls >> name >> rank)) throw fail(lineno, "expected '<name> <rank> <dims...>'");
        Shape shape(rank);
        for (auto& d : shape) {
            if (!(ls >> d)) throw fail(lineno, "missing dimension");
        }
        manifest.emplace_back(std::move(name), std::move(shape));
    }
    const int data_line = static_cast<int>(count) + 3;
    if (!std::getline(in, line)) throw fail(data_line, "missing data line");
    std::istringstream ds(line);
    std::size_t total = 0;
    if (!(ds >> word >> total) || word != "data") throw fail(data_line, "expected 'data <n>'");

    std::size_t expected = 0;
    for (const auto& [name, shape] : manifest) expected += element_count(shape);
    if (expected != total) throw fail(data_line, "value count does not match manifest");

    NamedTensors out;
    for (auto& [name, shape] : manifest) {
        Tensor t(shape);
        for (auto& v : t.values) v = read_le(in);
        if (!in) throw FormatError(path.string() + ": truncated payload in tensor '" + name + "'");
        out.emplace(name, std::move(t));
    }
    in.peek();
    if (!in.eof()) throw FormatError(path.string() + ": trailing bytes after payload");
    return out;
}

} // namespace hqcnn::nn
