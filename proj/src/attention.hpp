#pragma once

#include "common.hpp"

#include <functional>
#include <utility>

namespace trafficlm::attn {

using MatFn = std::function<Mat(const Mat&)>;

// φ(x) = elu(x) + 1, strictly positive for finite x.
Mat elu1(const Mat& x);
Mat elu1_backward(const Mat& x, const Mat& dy);

double swish_scalar(double x);
Mat swish(const Mat& x);
Mat swish_backward(const Mat& x, const Mat& dy);

// ---------------------------------------------------------------------------
// Reference mechanisms (value-level API, input-validated).
// ---------------------------------------------------------------------------

// Softmax(QK^T/sqrt(d))V, optionally with a causal mask.
Mat vaswani_attention(const Mat& q, const Mat& k, const Mat& v, bool causal);

// Direct O(N^2) evaluation of kernelized attention:
// out_i = sum_j phi(Q_i)·phi(K_j) V_j / sum_j phi(Q_i)·phi(K_j).
Mat kernel_attention_oracle(const Mat& q, const Mat& k, const Mat& v, const MatFn& phi, bool causal);

// Same value computed with the reassociated Q(KV) order: a single pass over
// positions carrying (sum phi(K_j)^T V_j, sum phi(K_j)) state.
Mat linear_attention(const Mat& q, const Mat& k, const Mat& v, const MatFn& phi, double eps, bool causal);

// Causal softmax attention restricted to the trailing `window` keys.
Mat local_attention(const Mat& q, const Mat& k, const Mat& v, int window);

// Row t keeps its first D/2 channels and takes the last D/2 channels of
// row t-1 (zeros for row 0). D must be even.
Mat token_shift(const Mat& x);
Mat token_shift_backward(const Mat& dy);

// y1 = x1 + F(x2), y2 = x2 + G(y1) and the exact inverse.
std::pair<Mat, Mat> reversible_block_forward(const Mat& x1, const Mat& x2, const MatFn& f, const MatFn& g);
std::pair<Mat, Mat> reversible_block_inverse(const Mat& y1, const Mat& y2, const MatFn& f, const MatFn& g);

// (swish(X Wg) ⊙ (X Wv)) Wo
Mat glu_ffn(const Mat& x, const Mat& wg, const Mat& wv, const Mat& wo);

// ---------------------------------------------------------------------------
// Training kernels. Forward fills a cache, backward consumes it. These skip
// input validation; the value-level API above is the checked surface.
// ---------------------------------------------------------------------------

struct LinearAttnCache {
    Mat qf, kf, v;  // feature-mapped queries/keys and raw values
    Vec den;        // per-row normalizer (phi(Q_i)·z_i + eps)
    Mat out;
    double eps = 0.0;
    bool causal = true;
};

Mat linear_attention_scan(const Mat& qf, const Mat& kf, const Mat& v, double eps, bool causal,
                          LinearAttnCache* cache);
// State matrices are rebuilt with one forward and one reverse sweep; memory
// stays O(d^2) beyond the cached inputs.
void linear_attention_scan_backward(const Mat& dout, const LinearAttnCache& cache, Mat& dqf, Mat& dkf,
                                    Mat& dv);

struct LocalAttnCache {
    Mat q, k, v;
    int window = 1;
};

Mat local_attention_forward(const Mat& q, const Mat& k, const Mat& v, int window, LocalAttnCache* cache);
void local_attention_backward(const Mat& dout, const LocalAttnCache& cache, Mat& dq, Mat& dk, Mat& dv);

struct GluCache {
    Mat x;
    Mat pre_gate;   // X Wg
    Mat pre_value;  // X Wv
    Mat gated;      // swish(pre_gate) ⊙ pre_value
};

Mat glu_forward(const Mat& x, const Mat& wg, const Mat& wv, const Mat& wo, GluCache* cache);
void glu_backward(const Mat& dout, const GluCache& cache, const Mat& wg, const Mat& wv, const Mat& wo,
                  Mat& dx, Mat& dwg, Mat& dwv, Mat& dwo);

}  // namespace trafficlm::attn
