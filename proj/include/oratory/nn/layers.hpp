#pragma once

// Forward and backward kernels for the layers of the fusion network.
//
// Every kernel is a free function over explicit inputs: forward functions are
// pure (batch norm in training mode additionally updates its running
// statistics), backward functions take the forward inputs they need, add
// parameter gradients into a caller-owned accumulator of the layer's own type
// and return the input gradient.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "oratory/nn/tensor.hpp"

namespace oratory::nn {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using ConstRowVectorMap = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>;

enum class LayerKind : std::uint8_t { linear = 0, conv1d = 1, batchnorm = 2 };

/// y = x W + b with W stored [in, out].
template <typename T>
struct LinearLayer {
  Tensor<T> weight;
  Tensor<T> bias;

  LinearLayer() = default;
  LinearLayer(std::size_t in, std::size_t out) : weight({in, out}), bias({out}) {}

  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }
};

/// Valid (unpadded) dilated 1-D convolution, weight stored [out, in, kernel].
template <typename T>
struct Conv1dLayer {
  Tensor<T> weight;
  Tensor<T> bias;
  std::size_t dilation = 1;
  std::size_t stride = 1;

  Conv1dLayer() = default;
  Conv1dLayer(std::size_t in, std::size_t out, std::size_t kernel, std::size_t dilation_,
              std::size_t stride_ = 1)
      : weight({out, in, kernel}), bias({out}), dilation(dilation_), stride(stride_) {}

  std::size_t in_channels() const { return weight.dim(1); }
  std::size_t out_channels() const { return weight.dim(0); }
  std::size_t kernel() const { return weight.dim(2); }
};

/// Per-feature batch normalization over a [batch, features] input.
template <typename T>
struct BatchNormLayer {
  Tensor<T> gamma;
  Tensor<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  T eps = T(1e-5);
  T momentum = T(0.1);

  BatchNormLayer() = default;
  explicit BatchNormLayer(std::size_t features)
      : gamma({features}, T{1}),
        beta({features}),
        running_mean({features}),
        running_var({features}, T{1}) {}

  std::size_t features() const { return gamma.size(); }
};

/// Saved statistics of a training-mode batch norm forward pass.
template <typename T>
struct BatchNormCache {
  Tensor<T> normalized;  // x-hat, [batch, features]
  std::vector<T> inv_std;
};

template <typename T>
LinearLayer<T> zeros_like(const LinearLayer<T>& l) {
  return LinearLayer<T>(l.in_features(), l.out_features());
}
template <typename T>
Conv1dLayer<T> zeros_like(const Conv1dLayer<T>& l) {
  return Conv1dLayer<T>(l.in_channels(), l.out_channels(), l.kernel(), l.dilation, l.stride);
}
template <typename T>
BatchNormLayer<T> zeros_like(const BatchNormLayer<T>& l) {
  BatchNormLayer<T> g(l.features());
  g.gamma.fill(T{0});
  g.running_var.fill(T{0});
  return g;
}

// ---------------------------------------------------------------------------
// linear

template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, const LinearLayer<T>& p) {
  require_shape(x.rank() == 2 && x.dim(1) == p.in_features(),
                "linear: input " + shape_string(x.shape()) + " vs weight " +
                    shape_string(p.weight.shape()));
  const std::size_t batch = x.dim(0), out = p.out_features();
  Tensor<T> y({batch, out});
  MatrixMap<T> ym(y.ptr(), batch, out);
  ym.noalias() = ConstMatrixMap<T>(x.ptr(), batch, p.in_features()) *
                 ConstMatrixMap<T>(p.weight.ptr(), p.in_features(), out);
  ym.rowwise() += ConstRowVectorMap<T>(p.bias.ptr(), out);
  return y;
}

template <typename T>
Tensor<T> linear_backward(const Tensor<T>& x, const LinearLayer<T>& p, const Tensor<T>& dy,
                          LinearLayer<T>& grad) {
  const std::size_t batch = x.dim(0), in = p.in_features(), out = p.out_features();
  require_shape(dy.rank() == 2 && dy.dim(0) == batch && dy.dim(1) == out,
                "linear backward: upstream gradient " + shape_string(dy.shape()));
  ConstMatrixMap<T> xm(x.ptr(), batch, in);
  ConstMatrixMap<T> dym(dy.ptr(), batch, out);
  MatrixMap<T>(grad.weight.ptr(), in, out).noalias() += xm.transpose() * dym;
  MatrixMap<T>(grad.bias.ptr(), 1, out) += dym.colwise().sum();
  Tensor<T> dx({batch, in});
  MatrixMap<T>(dx.ptr(), batch, in).noalias() =
      dym * ConstMatrixMap<T>(p.weight.ptr(), in, out).transpose();
  return dx;
}

// ---------------------------------------------------------------------------
// conv1d

inline std::size_t conv1d_output_length(std::size_t length, std::size_t kernel,
                                        std::size_t dilation, std::size_t stride) {
  if (dilation == 0 || stride == 0) throw ArgumentError("conv1d: dilation and stride must be positive");
  const std::size_t span = dilation * (kernel - 1) + 1;
  if (length < span) {
    throw ShapeError("conv1d: input length " + std::to_string(length) +
                     " shorter than receptive field " + std::to_string(span));
  }
  return (length - span) / stride + 1;
}

namespace detail {

// Column matrix [in*kernel, batch*length_out]; column (b, t) holds the
// receptive field of output position t of sample b.
template <typename T>
RowMatrix<T> im2col(const Tensor<T>& x, const Conv1dLayer<T>& p, std::size_t length_out) {
  const std::size_t batch = x.dim(0), in = x.dim(1), length = x.dim(2), kernel = p.kernel();
  RowMatrix<T> col(in * kernel, batch * length_out);
  for (std::size_t c = 0; c < in; ++c) {
    for (std::size_t k = 0; k < kernel; ++k) {
      T* row = col.row(c * kernel + k).data();
      for (std::size_t b = 0; b < batch; ++b) {
        const T* src = x.ptr() + (b * in + c) * length + k * p.dilation;
        T* dst = row + b * length_out;
        for (std::size_t t = 0; t < length_out; ++t) dst[t] = src[t * p.stride];
      }
    }
  }
  return col;
}

}  // namespace detail

template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const Conv1dLayer<T>& p) {
  require_shape(x.rank() == 3 && x.dim(1) == p.in_channels(),
                "conv1d: input " + shape_string(x.shape()) + " vs weight " +
                    shape_string(p.weight.shape()));
  const std::size_t batch = x.dim(0), out = p.out_channels();
  const std::size_t length_out = conv1d_output_length(x.dim(2), p.kernel(), p.dilation, p.stride);
  const RowMatrix<T> col = detail::im2col(x, p, length_out);
  RowMatrix<T> prod(out, batch * length_out);
  prod.noalias() = ConstMatrixMap<T>(p.weight.ptr(), out, p.in_channels() * p.kernel()) * col;
  Tensor<T> y({batch, out, length_out});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < out; ++o) {
      const T* src = prod.row(o).data() + b * length_out;
      T* dst = y.ptr() + (b * out + o) * length_out;
      const T bias = p.bias[o];
      for (std::size_t t = 0; t < length_out; ++t) dst[t] = src[t] + bias;
    }
  }
  return y;
}

template <typename T>
Tensor<T> conv1d_backward(const Tensor<T>& x, const Conv1dLayer<T>& p, const Tensor<T>& dy,
                          Conv1dLayer<T>& grad) {
  const std::size_t batch = x.dim(0), in = x.dim(1), length = x.dim(2);
  const std::size_t out = p.out_channels(), kernel = p.kernel();
  const std::size_t length_out = conv1d_output_length(length, kernel, p.dilation, p.stride);
  require_shape(dy.rank() == 3 && dy.dim(0) == batch && dy.dim(1) == out && dy.dim(2) == length_out,
                "conv1d backward: upstream gradient " + shape_string(dy.shape()));

  RowMatrix<T> dym(out, batch * length_out);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < out; ++o) {
      const T* src = dy.ptr() + (b * out + o) * length_out;
      std::copy(src, src + length_out, dym.row(o).data() + b * length_out);
    }
  }
  const RowMatrix<T> col = detail::im2col(x, p, length_out);
  MatrixMap<T>(grad.weight.ptr(), out, in * kernel).noalias() += dym * col.transpose();
  MatrixMap<T>(grad.bias.ptr(), out, 1) += dym.rowwise().sum();

  RowMatrix<T> dcol(in * kernel, batch * length_out);
  dcol.noalias() = ConstMatrixMap<T>(p.weight.ptr(), out, in * kernel).transpose() * dym;
  Tensor<T> dx({batch, in, length});
  for (std::size_t c = 0; c < in; ++c) {
    for (std::size_t k = 0; k < kernel; ++k) {
      const T* row = dcol.row(c * kernel + k).data();
      for (std::size_t b = 0; b < batch; ++b) {
        T* dst = dx.ptr() + (b * in + c) * length + k * p.dilation;
        const T* src = row + b * length_out;
        for (std::size_t t = 0; t < length_out; ++t) dst[t * p.stride] += src[t];
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// batch norm

/// Inference-mode normalization with the running statistics.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, const BatchNormLayer<T>& p) {
  require_shape(x.rank() == 2 && x.dim(1) == p.features(),
                "batchnorm: input " + shape_string(x.shape()) + " vs " +
                    std::to_string(p.features()) + " features");
  const std::size_t batch = x.dim(0), features = x.dim(1);
  std::vector<T> scale(features), shift(features);
  for (std::size_t f = 0; f < features; ++f) {
    scale[f] = p.gamma[f] / std::sqrt(p.running_var[f] + p.eps);
    shift[f] = p.beta[f] - p.running_mean[f] * scale[f];
  }
  Tensor<T> y({batch, features});
  for (std::size_t b = 0; b < batch; ++b) {
    const T* src = x.ptr() + b * features;
    T* dst = y.ptr() + b * features;
    for (std::size_t f = 0; f < features; ++f) dst[f] = src[f] * scale[f] + shift[f];
  }
  return y;
}

/// Training-mode normalization with biased batch statistics. Updates the
/// running statistics of `p` and fills `cache` for the backward pass.
template <typename T>
Tensor<T> batchnorm_forward_train(const Tensor<T>& x, BatchNormLayer<T>& p, BatchNormCache<T>& cache) {
  require_shape(x.rank() == 2 && x.dim(1) == p.features(),
                "batchnorm: input " + shape_string(x.shape()) + " vs " +
                    std::to_string(p.features()) + " features");
  const std::size_t batch = x.dim(0), features = x.dim(1);
  if (batch < 2) throw ArgumentError("batchnorm: training mode needs a batch of at least 2");

  std::vector<double> mean(features, 0.0), var(features, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    const T* row = x.ptr() + b * features;
    for (std::size_t f = 0; f < features; ++f) mean[f] += row[f];
  }
  for (auto& m : mean) m /= static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const T* row = x.ptr() + b * features;
    for (std::size_t f = 0; f < features; ++f) {
      const double d = row[f] - mean[f];
      var[f] += d * d;
    }
  }
  for (auto& v : var) v /= static_cast<double>(batch);

  cache.inv_std.resize(features);
  for (std::size_t f = 0; f < features; ++f) {
    cache.inv_std[f] = static_cast<T>(1.0 / std::sqrt(var[f] + static_cast<double>(p.eps)));
  }
  cache.normalized = Tensor<T>({batch, features});
  Tensor<T> y({batch, features});
  for (std::size_t b = 0; b < batch; ++b) {
    const T* src = x.ptr() + b * features;
    T* xhat = cache.normalized.ptr() + b * features;
    T* dst = y.ptr() + b * features;
    for (std::size_t f = 0; f < features; ++f) {
      xhat[f] = static_cast<T>(src[f] - mean[f]) * cache.inv_std[f];
      dst[f] = p.gamma[f] * xhat[f] + p.beta[f];
    }
  }
  for (std::size_t f = 0; f < features; ++f) {
    p.running_mean[f] = (T{1} - p.momentum) * p.running_mean[f] + p.momentum * static_cast<T>(mean[f]);
    p.running_var[f] = (T{1} - p.momentum) * p.running_var[f] + p.momentum * static_cast<T>(var[f]);
  }
  return y;
}

template <typename T>
Tensor<T> batchnorm_backward(const BatchNormCache<T>& cache, const BatchNormLayer<T>& p,
                             const Tensor<T>& dy, BatchNormLayer<T>& grad) {
  const Tensor<T>& xhat = cache.normalized;
  require_shape(dy.shape() == xhat.shape(),
                "batchnorm backward: upstream gradient " + shape_string(dy.shape()));
  const std::size_t batch = xhat.dim(0), features = xhat.dim(1);
  std::vector<double> sum_dxhat(features, 0.0), sum_dxhat_xhat(features, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    const T* g = dy.ptr() + b * features;
    const T* xh = xhat.ptr() + b * features;
    for (std::size_t f = 0; f < features; ++f) {
      grad.gamma[f] += g[f] * xh[f];
      grad.beta[f] += g[f];
      const double dxh = static_cast<double>(g[f]) * p.gamma[f];
      sum_dxhat[f] += dxh;
      sum_dxhat_xhat[f] += dxh * xh[f];
    }
  }
  Tensor<T> dx({batch, features});
  const double n = static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const T* g = dy.ptr() + b * features;
    const T* xh = xhat.ptr() + b * features;
    T* dst = dx.ptr() + b * features;
    for (std::size_t f = 0; f < features; ++f) {
      const double dxh = static_cast<double>(g[f]) * p.gamma[f];
      dst[f] = static_cast<T>(cache.inv_std[f] / n *
                              (n * dxh - sum_dxhat[f] - xh[f] * sum_dxhat_xhat[f]));
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// elementwise and reshaping ops

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (T& v : y.data()) v = v > T{0} ? v : T{0};
  return y;
}

/// Gradient of relu given its input (pre-activation).
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& pre, const Tensor<T>& dy) {
  require_shape(pre.shape() == dy.shape(), "relu backward: shape mismatch");
  Tensor<T> dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(pre[i] > T{0})) dx[i] = T{0};
  }
  return dx;
}

template <typename T>
T sigmoid(T v) {
  if (v >= T{0}) return T{1} / (T{1} + std::exp(-v));
  const T e = std::exp(v);
  return e / (T{1} + e);
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (T& v : y.data()) v = sigmoid(v);
  return y;
}

/// Gradient of sigmoid given its output.
template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& out, const Tensor<T>& dy) {
  require_shape(out.shape() == dy.shape(), "sigmoid backward: shape mismatch");
  Tensor<T> dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= out[i] * (T{1} - out[i]);
  return dx;
}

/// Average pooling over the last axis of a [batch, channels, length] tensor.
template <typename T>
Tensor<T> avgpool1d(const Tensor<T>& x, std::size_t window, std::size_t stride) {
  require_shape(x.rank() == 3, "avgpool1d: expected [batch, channels, length]");
  if (window == 0 || stride == 0) throw ArgumentError("avgpool1d: window and stride must be positive");
  const std::size_t length = x.dim(2);
  require_shape(length >= window, "avgpool1d: input shorter than window");
  const std::size_t length_out = (length - window) / stride + 1;
  const std::size_t rows = x.dim(0) * x.dim(1);
  Tensor<T> y({x.dim(0), x.dim(1), length_out});
  const T inv = T{1} / static_cast<T>(window);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = x.ptr() + r * length;
    T* dst = y.ptr() + r * length_out;
    for (std::size_t t = 0; t < length_out; ++t) {
      T acc{0};
      for (std::size_t w = 0; w < window; ++w) acc += src[t * stride + w];
      dst[t] = acc * inv;
    }
  }
  return y;
}

template <typename T>
Tensor<T> avgpool1d_backward(const Shape& input_shape, std::size_t window, std::size_t stride,
                             const Tensor<T>& dy) {
  const std::size_t length = input_shape.at(2), length_out = dy.dim(2);
  const std::size_t rows = input_shape[0] * input_shape[1];
  Tensor<T> dx(input_shape);
  const T inv = T{1} / static_cast<T>(window);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = dy.ptr() + r * length_out;
    T* dst = dx.ptr() + r * length;
    for (std::size_t t = 0; t < length_out; ++t) {
      for (std::size_t w = 0; w < window; ++w) dst[t * stride + w] += src[t] * inv;
    }
  }
  return dx;
}

/// Collapse every axis after the first: [batch, ...] -> [batch, rest].
template <typename T>
Tensor<T> flatten(Tensor<T> x) {
  require_shape(x.rank() >= 1, "flatten: scalar input");
  const std::size_t batch = x.dim(0);
  const std::size_t rest = batch == 0 ? 0 : x.size() / batch;
  x.reshape({batch, rest});
  return x;
}

/// Concatenate along `axis`; all other dimensions must agree.
template <typename T>
Tensor<T> concat(const std::vector<const Tensor<T>*>& xs, std::size_t axis) {
  if (xs.empty()) throw ArgumentError("concat: no inputs");
  const Shape& first = xs.front()->shape();
  require_shape(axis < first.size(), "concat: axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Tensor<T>* x : xs) {
    require_shape(x->rank() == first.size(), "concat: rank mismatch");
    for (std::size_t a = 0; a < first.size(); ++a) {
      require_shape(a == axis || x->dim(a) == first[a],
                    "concat: shape mismatch off the concatenation axis: " +
                        shape_string(x->shape()) + " vs " + shape_string(first));
    }
    out_shape[axis] += x->dim(axis);
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= first[a];
  for (std::size_t a = axis + 1; a < first.size(); ++a) inner *= first[a];

  Tensor<T> y(out_shape);
  const std::size_t out_stride = out_shape[axis] * inner;
  std::size_t offset = 0;
  for (const Tensor<T>* x : xs) {
    const std::size_t chunk = x->dim(axis) * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy(x->ptr() + o * chunk, x->ptr() + (o + 1) * chunk, y.ptr() + o * out_stride + offset);
    }
    offset += chunk;
  }
  return y;
}

template <typename T>
Tensor<T> concat(std::initializer_list<const Tensor<T>*> xs, std::size_t axis) {
  return concat(std::vector<const Tensor<T>*>(xs), axis);
}

/// Columns [begin, begin + width) of a [rows, cols] tensor.
template <typename T>
Tensor<T> slice_columns(const Tensor<T>& x, std::size_t begin, std::size_t width) {
  require_shape(x.rank() == 2 && begin + width <= x.dim(1), "slice_columns: out of range");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  Tensor<T> y({rows, width});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(x.ptr() + r * cols + begin, x.ptr() + r * cols + begin + width, y.ptr() + r * width);
  }
  return y;
}

/// Column-wise mean of an [n, d] matrix.
template <typename T>
Tensor<T> mean_rows(const Tensor<T>& x) {
  require_shape(x.rank() == 2 && x.dim(0) > 0, "mean_rows: expected nonempty [n, d]");
  const std::size_t n = x.dim(0), d = x.dim(1);
  std::vector<double> acc(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) acc[c] += x.at(r, c);
  }
  Tensor<T> y({d});
  for (std::size_t c = 0; c < d; ++c) y[c] = static_cast<T>(acc[c] / static_cast<double>(n));
  return y;
}

/// Swap the last two axes of a [batch, rows, cols] tensor.
template <typename T>
Tensor<T> transpose_last(const Tensor<T>& x) {
  require_shape(x.rank() == 3, "transpose_last: expected rank 3");
  const std::size_t batch = x.dim(0), rows = x.dim(1), cols = x.dim(2);
  Tensor<T> y({batch, cols, rows});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) y.at(b, c, r) = x.at(b, r, c);
    }
  }
  return y;
}

}  // namespace oratory::nn
