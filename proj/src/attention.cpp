#include "attention.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>

namespace trafficlm::attn {

namespace {

void ensure_finite(const Mat& m, const char* op) {
    if (!m.allFinite()) fail(Errc::NumericDomain, op, "non-finite input");
}

void ensure_same_rows(const Mat& q, const Mat& k, const Mat& v, const char* op) {
    if (q.rows() != k.rows() || q.rows() != v.rows() || q.cols() != k.cols()) {
        fail(Errc::ShapeError, op, "Q/K/V shape mismatch");
    }
    if (q.rows() < 1 || q.cols() < 1) fail(Errc::ShapeError, op, "empty input");
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Mat elu1(const Mat& x) {
    return x.unaryExpr([](double v) { return v > 0.0 ? v + 1.0 : std::exp(v); });
}

Mat elu1_backward(const Mat& x, const Mat& dy) {
    return dy.cwiseProduct(x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : std::exp(v); }));
}

double swish_scalar(double x) { return x * sigmoid(x); }

Mat swish(const Mat& x) {
    return x.unaryExpr([](double v) { return swish_scalar(v); });
}

Mat swish_backward(const Mat& x, const Mat& dy) {
    return dy.cwiseProduct(x.unaryExpr([](double v) {
        const double s = sigmoid(v);
        return s * (1.0 + v * (1.0 - s));
    }));
}

Mat vaswani_attention(const Mat& q, const Mat& k, const Mat& v, bool causal) {
    static constexpr const char* kOp = "attention.vaswani_attention";
    ensure_same_rows(q, k, v, kOp);
    ensure_finite(q, kOp);
    ensure_finite(k, kOp);
    ensure_finite(v, kOp);

    const Eigen::Index n = q.rows();
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    Mat out(n, v.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index hi = causal ? i : n - 1;
        Vec logits(hi + 1);
        for (Eigen::Index j = 0; j <= hi; ++j) logits(j) = q.row(i).dot(k.row(j)) * scale;
        const double m = logits.maxCoeff();
        Vec w = (logits.array() - m).exp();
        w /= w.sum();
        out.row(i).setZero();
        for (Eigen::Index j = 0; j <= hi; ++j) out.row(i) += w(j) * v.row(j);
    }
    return out;
}

Mat kernel_attention_oracle(const Mat& q, const Mat& k, const Mat& v, const MatFn& phi, bool causal) {
    static constexpr const char* kOp = "attention.kernel_attention_oracle";
    ensure_same_rows(q, k, v, kOp);
    ensure_finite(q, kOp);
    ensure_finite(k, kOp);
    ensure_finite(v, kOp);

    const Mat qf = phi(q);
    const Mat kf = phi(k);
    if ((qf.array() <= 0.0).any() || (kf.array() <= 0.0).any()) {
        fail(Errc::NumericDomain, kOp, "feature map must be strictly positive");
    }

    const Eigen::Index n = q.rows();
    Mat out(n, v.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index hi = causal ? i : n - 1;
        Eigen::RowVectorXd num = Eigen::RowVectorXd::Zero(v.cols());
        double den = 0.0;
        for (Eigen::Index j = 0; j <= hi; ++j) {
            const double sim = qf.row(i).dot(kf.row(j));
            num += sim * v.row(j);
            den += sim;
        }
        if (den < 1e-30) fail(Errc::DegenerateNormalizer, kOp, "normalizer underflow at row " + std::to_string(i));
        out.row(i) = num / den;
    }
    return out;
}

Mat linear_attention(const Mat& q, const Mat& k, const Mat& v, const MatFn& phi, double eps, bool causal) {
    static constexpr const char* kOp = "attention.linear_attention";
    ensure_same_rows(q, k, v, kOp);
    ensure_finite(q, kOp);
    ensure_finite(k, kOp);
    ensure_finite(v, kOp);
    if (!(eps > 0.0)) fail(Errc::DegenerateNormalizer, kOp, "eps must be positive");

    const Mat qf = phi(q);
    const Mat kf = phi(k);
    if ((qf.array() <= 0.0).any() || (kf.array() <= 0.0).any()) {
        fail(Errc::NumericDomain, kOp, "feature map must be strictly positive");
    }
    return linear_attention_scan(qf, kf, v, eps, causal, nullptr);
}

Mat local_attention(const Mat& q, const Mat& k, const Mat& v, int window) {
    static constexpr const char* kOp = "attention.local_attention";
    ensure_same_rows(q, k, v, kOp);
    ensure_finite(q, kOp);
    ensure_finite(k, kOp);
    ensure_finite(v, kOp);
    if (window < 1) fail(Errc::ShapeError, kOp, "window must be >= 1");
    return local_attention_forward(q, k, v, window, nullptr);
}

Mat token_shift(const Mat& x) {
    static constexpr const char* kOp = "attention.token_shift";
    if (x.cols() % 2 != 0) fail(Errc::ShapeError, kOp, "channel count must be even");
    const Eigen::Index n = x.rows();
    const Eigen::Index half = x.cols() / 2;
    Mat out(n, x.cols());
    out.leftCols(half) = x.leftCols(half);
    out.block(0, half, 1, half).setZero();
    if (n > 1) out.block(1, half, n - 1, half) = x.block(0, half, n - 1, half);
    return out;
}

Mat token_shift_backward(const Mat& dy) {
    const Eigen::Index n = dy.rows();
    const Eigen::Index half = dy.cols() / 2;
    Mat dx = Mat::Zero(n, dy.cols());
    dx.leftCols(half) = dy.leftCols(half);
    if (n > 1) dx.block(0, half, n - 1, half) = dy.block(1, half, n - 1, half);
    return dx;
}

std::pair<Mat, Mat> reversible_block_forward(const Mat& x1, const Mat& x2, const MatFn& f, const MatFn& g) {
    Mat y1 = x1 + f(x2);
    Mat y2 = x2 + g(y1);
    return {std::move(y1), std::move(y2)};
}

std::pair<Mat, Mat> reversible_block_inverse(const Mat& y1, const Mat& y2, const MatFn& f, const MatFn& g) {
    Mat x2 = y2 - g(y1);
    Mat x1 = y1 - f(x2);
    return {std::move(x1), std::move(x2)};
}

Mat glu_ffn(const Mat& x, const Mat& wg, const Mat& wv, const Mat& wo) {
    static constexpr const char* kOp = "attention.glu_ffn";
    if (x.cols() != wg.rows() || wg.rows() != wv.rows() || wg.cols() != wv.cols() || wv.cols() != wo.rows()) {
        fail(Errc::ShapeError, kOp, "weight shapes inconsistent with input");
    }
    return glu_forward(x, wg, wv, wo, nullptr);
}

Mat linear_attention_scan(const Mat& qf, const Mat& kf, const Mat& v, double eps, bool causal,
                          LinearAttnCache* cache) {
    const Eigen::Index n = qf.rows();
    const Eigen::Index d = qf.cols();
    const Eigen::Index dv = v.cols();

    Mat out(n, dv);
    Vec den(n);
    if (causal) {
        Mat state = Mat::Zero(d, dv);
        Vec z = Vec::Zero(d);
        for (Eigen::Index i = 0; i < n; ++i) {
            state.noalias() += kf.row(i).transpose() * v.row(i);
            z += kf.row(i).transpose();
            den(i) = qf.row(i).dot(z) + eps;
            out.row(i).noalias() = (qf.row(i) * state) / den(i);
        }
    } else {
        Mat state = kf.transpose() * v;
        Vec z = kf.colwise().sum().transpose();
        for (Eigen::Index i = 0; i < n; ++i) {
            den(i) = qf.row(i).dot(z) + eps;
            out.row(i).noalias() = (qf.row(i) * state) / den(i);
        }
    }

    if (cache) {
        cache->qf = qf;
        cache->kf = kf;
        cache->v = v;
        cache->den = den;
        cache->out = out;
        cache->eps = eps;
        cache->causal = causal;
    }
    return out;
}

void linear_attention_scan_backward(const Mat& dout, const LinearAttnCache& c, Mat& dqf, Mat& dkf,
                                    Mat& dv) {
    const Eigen::Index n = c.qf.rows();
    const Eigen::Index d = c.qf.cols();
    const Eigen::Index dv_cols = c.v.cols();

    dqf.setZero(n, d);
    dkf.setZero(n, d);
    dv.setZero(n, dv_cols);

    auto dnum_row = [&](Eigen::Index i) -> Eigen::RowVectorXd { return dout.row(i) / c.den(i); };
    auto dden_at = [&](Eigen::Index i) -> double { return -dout.row(i).dot(c.out.row(i)) / c.den(i); };

    if (c.causal) {
        // forward sweep rebuilds the running state for the query gradients
        Mat state = Mat::Zero(d, dv_cols);
        Vec z = Vec::Zero(d);
        for (Eigen::Index i = 0; i < n; ++i) {
            state.noalias() += c.kf.row(i).transpose() * c.v.row(i);
            z += c.kf.row(i).transpose();
            dqf.row(i).noalias() = dnum_row(i) * state.transpose();
            dqf.row(i) += dden_at(i) * z.transpose();
        }
        // reverse sweep accumulates suffix state gradients for keys/values
        Mat acc = Mat::Zero(d, dv_cols);
        Vec acc_z = Vec::Zero(d);
        for (Eigen::Index i = n - 1; i >= 0; --i) {
            acc.noalias() += c.qf.row(i).transpose() * dnum_row(i);
            acc_z += dden_at(i) * c.qf.row(i).transpose();
            dkf.row(i).noalias() = c.v.row(i) * acc.transpose();
            dkf.row(i) += acc_z.transpose();
            dv.row(i).noalias() = c.kf.row(i) * acc;
        }
    } else {
        Mat state = c.kf.transpose() * c.v;
        Vec z = c.kf.colwise().sum().transpose();
        Mat dstate = Mat::Zero(d, dv_cols);
        Vec dz = Vec::Zero(d);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::RowVectorXd dn = dnum_row(i);
            const double dd = dden_at(i);
            dqf.row(i).noalias() = dn * state.transpose();
            dqf.row(i) += dd * z.transpose();
            dstate.noalias() += c.qf.row(i).transpose() * dn;
            dz += dd * c.qf.row(i).transpose();
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            dkf.row(j).noalias() = c.v.row(j) * dstate.transpose();
            dkf.row(j) += dz.transpose();
            dv.row(j).noalias() = c.kf.row(j) * dstate;
        }
    }
}

Mat local_attention_forward(const Mat& q, const Mat& k, const Mat& v, int window, LocalAttnCache* cache) {
    const Eigen::Index n = q.rows();
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));

    Mat out(n, v.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - window + 1);
        const Eigen::Index len = i - lo + 1;
        Vec logits(len);
        for (Eigen::Index j = 0; j < len; ++j) logits(j) = q.row(i).dot(k.row(lo + j)) * scale;
        const double m = logits.maxCoeff();
        Vec w = (logits.array() - m).exp();
        w /= w.sum();
        out.row(i).setZero();
        for (Eigen::Index j = 0; j < len; ++j) out.row(i) += w(j) * v.row(lo + j);
    }

    if (cache) {
        cache->q = q;
        cache->k = k;
        cache->v = v;
        cache->window = window;
    }
    return out;
}

void local_attention_backward(const Mat& dout, const LocalAttnCache& c, Mat& dq, Mat& dk, Mat& dv) {
    const Eigen::Index n = c.q.rows();
    const double scale = 1.0 / std::sqrt(static_cast<double>(c.q.cols()));

    dq.setZero(n, c.q.cols());
    dk.setZero(n, c.k.cols());
    dv.setZero(n, c.v.cols());

    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - c.window + 1);
        const Eigen::Index len = i - lo + 1;
        Vec logits(len);
        for (Eigen::Index j = 0; j < len; ++j) logits(j) = c.q.row(i).dot(c.k.row(lo + j)) * scale;
        const double m = logits.maxCoeff();
        Vec w = (logits.array() - m).exp();
        w /= w.sum();

        Vec dw(len);
        for (Eigen::Index j = 0; j < len; ++j) dw(j) = dout.row(i).dot(c.v.row(lo + j));
        const double wdotdw = w.dot(dw);
        for (Eigen::Index j = 0; j < len; ++j) {
            const double dlogit = w(j) * (dw(j) - wdotdw);
            dq.row(i) += dlogit * c.k.row(lo + j) * scale;
            dk.row(lo + j) += dlogit * c.q.row(i) * scale;
            dv.row(lo + j) += w(j) * dout.row(i);
        }
    }
}

Mat glu_forward(const Mat& x, const Mat& wg, const Mat& wv, const Mat& wo, GluCache* cache) {
    Mat pre_gate = x * wg;
    Mat pre_value = x * wv;
    Mat gated = swish(pre_gate).cwiseProduct(pre_value);
    Mat out = gated * wo;
    if (cache) {
        cache->x = x;
        cache->pre_gate = std::move(pre_gate);
        cache->pre_value = std::move(pre_value);
        cache->gated = std::move(gated);
    }
    return out;
}

void glu_backward(const Mat& dout, const GluCache& c, const Mat& wg, const Mat& wv, const Mat& wo,
                  Mat& dx, Mat& dwg, Mat& dwv, Mat& dwo) {
    const Mat dgated = dout * wo.transpose();
    dwo.noalias() += c.gated.transpose() * dout;

    const Mat sg = swish(c.pre_gate);
    const Mat dpre_value = dgated.cwiseProduct(sg);
    const Mat dpre_gate = swish_backward(c.pre_gate, dgated.cwiseProduct(c.pre_value));

    dx.noalias() = dpre_gate * wg.transpose();
    dx.noalias() += dpre_value * wv.transpose();
    dwg.noalias() += c.x.transpose() * dpre_gate;
    dwv.noalias() += c.x.transpose() * dpre_value;
}

}  // namespace trafficlm::attn
