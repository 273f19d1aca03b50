#pragma once

// Dense tensors and the handful of layers the hybrid model needs. Each layer
// caches what its backward pass requires during forward(); backward() takes
// dLoss/dOutput, accumulates parameter gradients and returns dLoss/dInput.

#include "hqcnn/random.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace hqcnn::nn {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

struct Tensor {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty when the tensor carries no gradient

    Tensor() = default;
    explicit Tensor(Shape s, double fill = 0.0);
    Tensor(Shape s, std::vector<double> v);

    /// Tensor with a zeroed gradient buffer.
    static Tensor parameter(Shape s);

    std::size_t size() const { return values.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    std::size_t rank() const { return shape.size(); }

    bool has_grad() const { return !grad.empty(); }
    void zero_grad();

    /// Same values, new shape of equal element count.
    Tensor reshaped(Shape s) const;

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    bool operator==(const Tensor&) const = default;
};

/// Zero-padded 3x3 cross-correlation, stride 1:
/// out[b,o,i,j] = bias[o] + sum_{c,m,n} in[b,c,i+m-1,j+n-1] * w[o,c,m,n].
/// Accepts [C,H,W] or [B,C,H,W] input; the output has the same rank.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias);

Tensor relu(const Tensor& t);

/// 2x2 max pool with stride 2 over the last two dimensions (must be even).
Tensor maxpool2(const Tensor& t);

/// x W^T + b for x of shape [B, in] (or [in]), W [out, in], b [out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// [B, ...] -> [B, prod(...)].
Tensor flatten(const Tensor& t);

/// Inverted dropout: kept entries are scaled by 1/(1-p). Identity when not training.
Tensor dropout(const Tensor& t, double p, bool training, Rng& rng);

struct LossResult {
    double loss = 0.0;
    Tensor d_logits;
};

/// Mean over the batch of -log softmax(logits)[label]; d_logits = (softmax - onehot) / B.
LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

class Conv2d {
public:
    Conv2d(std::size_t in_channels, std::size_t out_channels);

    void init(Rng& rng);
    Tensor forward(const Tensor& input);
    Tensor backward(const Tensor& d_out);

    Tensor weight;  // [out, in, 3, 3]
    Tensor bias;    // [out]

private:
    Tensor input_;
};

class Linear {
public:
    Linear(std::size_t in_features, std::size_t out_features);

    void init(Rng& rng);
    Tensor forward(const Tensor& input);
    Tensor backward(const Tensor& d_out);

    Tensor weight;  // [out, in]
    Tensor bias;    // [out]

private:
    Tensor input_;
};

class ReLU {
public:
    Tensor forward(const Tensor& input);
    Tensor backward(const Tensor& d_out) const;

private:
    Tensor input_;
};

class MaxPool2 {
public:
    Tensor forward(const Tensor& input);
    Tensor backward(const Tensor& d_out) const;

private:
    Shape input_shape_;
    std::vector<std::size_t> argmax_;
};

class Dropout {
public:
    explicit Dropout(double p = 0.5);

    Tensor forward(const Tensor& input, bool training, Rng& rng);
    Tensor backward(const Tensor& d_out) const;

    double rate() const { return p_; }

private:
    double p_;
    std::vector<double> scale_;  // per-element multiplier of the last forward
};

struct SgdOptions {
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-4;
};

/// SGD with Nesterov momentum and L2 weight decay:
///   g = grad + wd * p;  v = mu * v + g;  p -= lr * (g + mu * v)
class SgdNesterov {
public:
    explicit SgdNesterov(SgdOptions options = {});

    const SgdOptions& options() const { return options_; }

    /// Updates each parameter from its grad buffer. Buffers are created on the
    /// first step; later calls must pass tensors of the same shapes.
    void step(std::span<Tensor* const> params);

    const std::vector<std::vector<double>>& velocity() const { return velocity_; }

private:
    SgdOptions options_;
    std::vector<std::vector<double>> velocity_;
};

/// Named tensors as written to a checkpoint file.
using NamedTensors = std::map<std::string, Tensor>;

/// Writes a text manifest followed by raw little-endian float64 values:
///
///     hqcnn-checkpoint v1
///     tensors <count>
///     <name> <rank> <d0> ... <d_{rank-1}>     (one line per tensor)
///     data <total_values>
///     <binary payload, tensors in manifest order>
void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors load_checkpoint(const std::filesystem::path& path);

} // namespace hqcnn::nn
