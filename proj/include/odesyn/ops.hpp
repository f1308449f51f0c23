#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "odesyn/tensor.hpp"

namespace odesyn {

// Differentiable primitives. Every op computes the forward value eagerly and,
// when the tape is recording and any input requires a gradient, records a
// backward closure that accumulates into the inputs' grad buffers.

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

// x [m×k] · w [k×n] + b [n] broadcast over rows.
Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);

// a + alpha·b, same shapes. The workhorse of Runge-Kutta stage combinations.
Tensor add_scaled(Tape& tape, const Tensor& a, const Tensor& b, double alpha);

// alpha·x + beta elementwise (covers scaling and 1−x).
Tensor affine(Tape& tape, const Tensor& x, double alpha, double beta);

Tensor tanh(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor leaky_relu(Tape& tape, const Tensor& x, double slope = 0.2);

Tensor sum(Tape& tape, const Tensor& x);
Tensor mean(Tape& tape, const Tensor& x);

// Concatenate 2-D blocks with equal row counts along columns.
Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts);

// Same element count, new extents; gradient passes through unchanged.
Tensor reshape(Tape& tape, const Tensor& x, Shape shape);

// Cross-correlation (no kernel flip): x [B×C×H×W], kernel [F×C×kh×kw],
// bias [F] broadcast per output channel. Output extent per spatial dim is
// floor((in + 2·pad − k)/stride) + 1.
Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& kernel, const Tensor& bias,
              std::pair<int, int> stride, std::pair<int, int> padding);

// Per-window maximum; gradient routes to the first (lowest linear index)
// maximum of each window.
Tensor maxpool2d(Tape& tape, const Tensor& x, std::pair<int, int> window,
                 std::pair<int, int> stride);

// Salimans-style minibatch discrimination: M = reshape(features·proj,
// B×P×Q), o[i,p] = sum_{j≠i} exp(−‖M[i,p]−M[j,p]‖₁), output [B×(A+P)] is
// features with o appended.
Tensor minibatch_discrimination(Tape& tape, const Tensor& features, const Tensor& proj,
                                int num_kernels, int kernel_dim);

// Mean binary cross-entropy. Probabilities are clamped to
// [1e-7, 1−1e-7] before the logs; targets carry no gradient.
Tensor bce_loss(Tape& tape, const Tensor& p, const Tensor& target);

// Mean squared error, composed from sub/mul/mean.
Tensor mse_loss(Tape& tape, const Tensor& a, const Tensor& b);

// Per-row matrix·vector: a's row b is read as an r×c matrix and multiplied by
// v's row b (length c), giving output row b of length r.
Tensor row_matvec(Tape& tape, const Tensor& a, const Tensor& v, int r, int c);

namespace kernels {
// c = a·b with a [m×k], b [k×n], c [m×n]
void mm(const double* a, const double* b, double* c, int m, int k, int n);
// c += a·bᵀ with a [m×n], b [k×n], c [m×k]
void mm_abt_acc(const double* a, const double* b, double* c, int m, int n, int k);
// c += aᵀ·b with a [m×k], b [m×n], c [k×n]
void mm_atb_acc(const double* a, const double* b, double* c, int m, int k, int n);
}  // namespace kernels

}  // namespace odesyn
