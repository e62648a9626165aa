#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "uknow/error.hpp"
#include "uknow/rng.hpp"

namespace uknow {

// Shape of the neighbor-aggregation network.
struct PluginShape {
  std::size_t dim = 64;        // entity dimension d
  std::size_t neighbors = 8;   // m; the input matrix has 1 + m rows
  std::size_t kernel_rows = 3;
  std::size_t kernel_cols = 3;
  std::size_t channels = 1;
  std::size_t hidden = 0;      // MLP hidden width; 0 means 4d

  std::size_t rows() const { return 1 + neighbors; }
  std::size_t conv_rows() const { return rows() - kernel_rows + 1; }
  std::size_t conv_cols() const { return dim - kernel_cols + 1; }
  std::size_t flat() const { return channels * conv_rows() * conv_cols(); }
  std::size_t hidden_width() const { return hidden == 0 ? 4 * dim : hidden; }

  void validate() const {
    if (dim == 0 || neighbors == 0 || kernel_rows == 0 || kernel_cols == 0 ||
        channels == 0)
      fail(ErrorKind::invalid_argument, "plugin sizes must be positive");
    if (kernel_rows > rows() || kernel_cols > dim)
      fail(ErrorKind::invalid_argument, "plugin kernel larger than its input");
  }

  bool operator==(const PluginShape&) const = default;
};

// Parameters of
//   e' = W2 relu(W1 flatten(relu(conv(X, filters) + bias)) + b1) + b2
// where X stacks the entity vector over its (zero-padded) neighbor vectors
// and conv is a valid-mode 2D cross-correlation, one filter per channel.
template <typename Scalar>
struct PluginParams {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  PluginShape shape;
  std::vector<Matrix> filters;  // channels x (kernel_rows x kernel_cols)
  Vector bias;                  // channels
  Matrix w1;                    // hidden x flat
  Vector b1;                    // hidden
  Matrix w2;                    // dim x hidden
  Vector b2;                    // dim

  static PluginParams zeros(const PluginShape& shape) {
    shape.validate();
    PluginParams p;
    p.shape = shape;
    const auto kr = static_cast<Eigen::Index>(shape.kernel_rows);
    const auto kc = static_cast<Eigen::Index>(shape.kernel_cols);
    p.filters.assign(shape.channels, Matrix::Zero(kr, kc));
    p.bias = Vector::Zero(static_cast<Eigen::Index>(shape.channels));
    const auto h = static_cast<Eigen::Index>(shape.hidden_width());
    const auto f = static_cast<Eigen::Index>(shape.flat());
    const auto d = static_cast<Eigen::Index>(shape.dim);
    p.w1 = Matrix::Zero(h, f);
    p.b1 = Vector::Zero(h);
    p.w2 = Matrix::Zero(d, h);
    p.b2 = Vector::Zero(d);
    return p;
  }

  // Uniform fan-in scaled weights, zero biases.
  static PluginParams random(const PluginShape& shape, Rng& rng) {
    PluginParams p = zeros(shape);
    auto fill = [&rng](Matrix& m, double bound) {
      for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
    };
    const double conv_bound = 1.0 / std::sqrt(double(shape.kernel_rows * shape.kernel_cols));
    for (auto& f : p.filters) fill(f, conv_bound);
    fill(p.w1, std::sqrt(6.0 / double(shape.flat() + shape.hidden_width())));
    fill(p.w2, std::sqrt(6.0 / double(shape.hidden_width() + shape.dim)));
    return p;
  }

  // Visits every parameter block as a flat span, in a fixed order.
  template <typename Fn>
  void for_each_block(Fn&& fn) {
    for (auto& f : filters) fn(std::span<Scalar>(f.data(), std::size_t(f.size())));
    fn(std::span<Scalar>(bias.data(), std::size_t(bias.size())));
    fn(std::span<Scalar>(w1.data(), std::size_t(w1.size())));
    fn(std::span<Scalar>(b1.data(), std::size_t(b1.size())));
    fn(std::span<Scalar>(w2.data(), std::size_t(w2.size())));
    fn(std::span<Scalar>(b2.data(), std::size_t(b2.size())));
  }

  std::size_t num_parameters() const {
    return shape.channels * (shape.kernel_rows * shape.kernel_cols + 1) +
           static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
  }

  bool all_finite() const {
    for (const auto& f : filters)
      if (!f.allFinite()) return false;
    return bias.allFinite() && w1.allFinite() && b1.allFinite() && w2.allFinite() &&
           b2.allFinite();
  }

  // this += alpha * other
  void axpy(Scalar alpha, const PluginParams& other) {
    for (std::size_t c = 0; c < filters.size(); ++c) filters[c] += alpha * other.filters[c];
    bias += alpha * other.bias;
    w1 += alpha * other.w1;
    b1 += alpha * other.b1;
    w2 += alpha * other.w2;
    b2 += alpha * other.b2;
  }

  void set_zero() {
    for (auto& f : filters) f.setZero();
    bias.setZero();
    w1.setZero();
    b1.setZero();
    w2.setZero();
    b2.setZero();
  }

  bool operator==(const PluginParams& o) const {
    return shape == o.shape && filters == o.filters && bias == o.bias && w1 == o.w1 &&
           b1 == o.b1 && w2 == o.w2 && b2 == o.b2;
  }
};

// Activations kept from a forward pass for the backward pass.
template <typename Scalar>
struct PluginTrace {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix input;               // (1 + m) x d
  std::vector<Matrix> conv;   // pre-activation per channel
  Vector flat;                // relu(conv), flattened channel-major, row-major
  Vector hidden_pre;
  Vector hidden;
  Vector output;
};

// Stacks the center vector over up to m neighbor vectors; missing rows stay 0.
template <typename Scalar, typename Rows>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> stack_neighborhood(
    const Rows& rows_of, std::size_t center, std::span<const std::uint32_t> neighbors,
    const PluginShape& shape) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(shape.rows()),
                          static_cast<Eigen::Index>(shape.dim));
  x.row(0) = rows_of.row(static_cast<Eigen::Index>(center));
  const std::size_t take = std::min(neighbors.size(), shape.neighbors);
  for (std::size_t i = 0; i < take; ++i)
    x.row(static_cast<Eigen::Index>(i + 1)) =
        rows_of.row(static_cast<Eigen::Index>(neighbors[i]));
  return x;
}

template <typename Scalar>
void plugin_forward(const PluginParams<Scalar>& p,
                    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& input,
                    PluginTrace<Scalar>& trace) {
  using Matrix = typename PluginParams<Scalar>::Matrix;
  const PluginShape& s = p.shape;
  const auto cr = static_cast<Eigen::Index>(s.conv_rows());
  const auto cc = static_cast<Eigen::Index>(s.conv_cols());
  const auto kr = static_cast<Eigen::Index>(s.kernel_rows);
  const auto kc = static_cast<Eigen::Index>(s.kernel_cols);
  if (input.rows() != static_cast<Eigen::Index>(s.rows()) ||
      input.cols() != static_cast<Eigen::Index>(s.dim))
    fail(ErrorKind::invalid_argument, "plugin input has the wrong shape");

  trace.input = input;
  trace.conv.assign(s.channels, Matrix());
  trace.flat.resize(static_cast<Eigen::Index>(s.flat()));
  Eigen::Index k = 0;
  for (std::size_t c = 0; c < s.channels; ++c) {
    Matrix y = Matrix::Constant(cr, cc, p.bias[static_cast<Eigen::Index>(c)]);
    for (Eigen::Index a = 0; a < kr; ++a)
      for (Eigen::Index b = 0; b < kc; ++b)
        y += p.filters[c](a, b) * input.block(a, b, cr, cc);
    for (Eigen::Index i = 0; i < cr; ++i)
      for (Eigen::Index j = 0; j < cc; ++j) trace.flat[k++] = std::max(y(i, j), Scalar(0));
    trace.conv[c] = std::move(y);
  }
  trace.hidden_pre = p.w1 * trace.flat + p.b1;
  trace.hidden = trace.hidden_pre.cwiseMax(Scalar(0));
  trace.output = p.w2 * trace.hidden + p.b2;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> plugin_apply(
    const PluginParams<Scalar>& p,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& input) {
  PluginTrace<Scalar> trace;
  plugin_forward(p, input, trace);
  return trace.output;
}

// Accumulates dL/dparams into `grad` and returns dL/dinput, given
// upstream = dL/de'.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> plugin_backward(
    const PluginParams<Scalar>& p, const PluginTrace<Scalar>& trace,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& upstream, PluginParams<Scalar>& grad) {
  using Matrix = typename PluginParams<Scalar>::Matrix;
  using Vector = typename PluginParams<Scalar>::Vector;
  const PluginShape& s = p.shape;
  const auto cr = static_cast<Eigen::Index>(s.conv_rows());
  const auto cc = static_cast<Eigen::Index>(s.conv_cols());
  const auto kr = static_cast<Eigen::Index>(s.kernel_rows);
  const auto kc = static_cast<Eigen::Index>(s.kernel_cols);

  grad.w2.noalias() += upstream * trace.hidden.transpose();
  grad.b2 += upstream;
  Vector d_hidden = p.w2.transpose() * upstream;
  for (Eigen::Index i = 0; i < d_hidden.size(); ++i)
    if (trace.hidden_pre[i] <= Scalar(0)) d_hidden[i] = Scalar(0);
  grad.w1.noalias() += d_hidden * trace.flat.transpose();
  grad.b1 += d_hidden;
  const Vector d_flat = p.w1.transpose() * d_hidden;

  Matrix d_input = Matrix::Zero(trace.input.rows(), trace.input.cols());
  Eigen::Index k = 0;
  for (std::size_t c = 0; c < s.channels; ++c) {
    Matrix dy(cr, cc);
    for (Eigen::Index i = 0; i < cr; ++i)
      for (Eigen::Index j = 0; j < cc; ++j, ++k)
        dy(i, j) = trace.conv[c](i, j) > Scalar(0) ? d_flat[k] : Scalar(0);
    grad.bias[static_cast<Eigen::Index>(c)] += dy.sum();
    for (Eigen::Index a = 0; a < kr; ++a)
      for (Eigen::Index b = 0; b < kc; ++b) {
        grad.filters[c](a, b) += trace.input.block(a, b, cr, cc).cwiseProduct(dy).sum();
        d_input.block(a, b, cr, cc) += p.filters[c](a, b) * dy;
      }
  }
  return d_input;
}

}  // namespace uknow
