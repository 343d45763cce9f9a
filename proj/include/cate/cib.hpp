#pragma once

// Concept-guided information bottleneck: a stochastic per-patch encoder with
// reparameterized Gaussian sampling, an InfoNCE loss pulling selected patches
// toward their class anchors, and a closed-form KL compression loss.

#include <cmath>
#include <vector>

#include "cate/concept_bank.hpp"
#include "cate/errors.hpp"
#include "cate/mlp.hpp"
#include "cate/numeric.hpp"
#include "cate/params.hpp"

namespace cate {

// Output clamp for the log-variance head; keeps the KL finite and the
// sampling noise bounded away from zero.
constexpr double kLogVarClamp = 10.0;

template <typename Scalar>
struct StochasticEncoder {
    Mlp<Scalar> mu_net;
    Mlp<Scalar> logvar_net;

    void init(int dim, int hidden, RngStream& rng) {
        mu_net.init(dim, hidden, dim, rng);
        logvar_net.init(dim, hidden, dim, rng);
    }

    void collect_params(const std::string& prefix, std::vector<ParamRef<Scalar>>& out) {
        mu_net.collect_params(prefix + ".mu", out);
        logvar_net.collect_params(prefix + ".logvar", out);
    }
};

template <typename Scalar>
struct CalibratedSample {
    MatX<Scalar> mu;       // N x C
    MatX<Scalar> logvar;   // N x C, already clamped
    MatX<Scalar> alpha;    // N x C; alpha = mu + exp(logvar/2) .* epsilon
    MatX<Scalar> epsilon;  // N x C standard-normal draw (zero in eval mode)
};

template <typename Scalar>
struct EncodeContext {
    typename Mlp<Scalar>::Fwd mu_fwd;
    typename Mlp<Scalar>::Fwd lv_fwd;
    MatX<Scalar> sigma;       // exp(logvar/2)
    MatX<Scalar> clamp_pass;  // 1 where logvar was inside the clamp range
};

// Core encode with a caller-provided standard-normal draw. The
// reparameterization is evaluated with scalar std::exp so that
// alpha == mu + exp(logvar/2)*eps holds bitwise for a recomputation.
template <typename Scalar>
CalibratedSample<Scalar> encode(const StochasticEncoder<Scalar>& enc, const MatX<Scalar>& x,
                                const MatX<Scalar>& epsilon, bool train_mode,
                                EncodeContext<Scalar>* ctx = nullptr) {
    if (!x.allFinite()) throw ValidationError("encode: non-finite input features");
    CalibratedSample<Scalar> out;
    out.mu = enc.mu_net.forward(x, ctx ? &ctx->mu_fwd : nullptr, "mu_net");
    MatX<Scalar> lv_raw = enc.logvar_net.forward(x, ctx ? &ctx->lv_fwd : nullptr, "logvar_net");

    const Scalar hi = Scalar(kLogVarClamp);
    out.logvar = lv_raw.cwiseMax(-hi).cwiseMin(hi);
    if (ctx) {
        ctx->clamp_pass = (lv_raw.array().abs() < hi).template cast<Scalar>();
        ctx->sigma.resize(x.rows(), x.cols());
    }

    if (train_mode) {
        if (epsilon.rows() != x.rows() || epsilon.cols() != x.cols())
            throw ValidationError("encode: epsilon shape mismatch");
        out.epsilon = epsilon;
        out.alpha.resize(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            for (Eigen::Index j = 0; j < x.cols(); ++j) {
                Scalar s = std::exp(out.logvar(i, j) / Scalar(2));
                if (ctx) ctx->sigma(i, j) = s;
                out.alpha(i, j) = out.mu(i, j) + s * epsilon(i, j);
            }
        }
    } else {
        out.epsilon = MatX<Scalar>::Zero(x.rows(), x.cols());
        out.alpha = out.mu;
        if (ctx)
            for (Eigen::Index i = 0; i < x.rows(); ++i)
                for (Eigen::Index j = 0; j < x.cols(); ++j)
                    ctx->sigma(i, j) = std::exp(out.logvar(i, j) / Scalar(2));
    }
    return out;
}

// Spec-facing overload: draws epsilon from the stream (row-major order).
template <typename Scalar>
CalibratedSample<Scalar> encode(const StochasticEncoder<Scalar>& enc, const MatX<Scalar>& x,
                                RngStream& rng, bool train_mode,
                                EncodeContext<Scalar>* ctx = nullptr) {
    MatX<Scalar> eps = MatX<Scalar>::Zero(x.rows(), x.cols());
    if (train_mode)
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            for (Eigen::Index j = 0; j < x.cols(); ++j) eps(i, j) = Scalar(rng.normal());
    return encode(enc, x, eps, train_mode, ctx);
}

// Propagates gradients through the reparameterization and both nets.
// d_alpha, d_mu_extra, d_logvar_extra may be empty (treated as zero).
template <typename Scalar>
void encode_backward(StochasticEncoder<Scalar>& enc, const CalibratedSample<Scalar>& cal,
                     const EncodeContext<Scalar>& ctx, const MatX<Scalar>& d_alpha,
                     const MatX<Scalar>& d_mu_extra, const MatX<Scalar>& d_logvar_extra) {
    const auto rows = cal.mu.rows(), cols = cal.mu.cols();
    MatX<Scalar> d_mu = MatX<Scalar>::Zero(rows, cols);
    MatX<Scalar> d_lv = MatX<Scalar>::Zero(rows, cols);
    if (d_alpha.size()) {
        d_mu += d_alpha;
        // d alpha / d logvar = eps * sigma / 2
        d_lv += (d_alpha.array() * cal.epsilon.array() * ctx.sigma.array() * Scalar(0.5)).matrix();
    }
    if (d_mu_extra.size()) d_mu += d_mu_extra;
    if (d_logvar_extra.size()) d_lv += d_logvar_extra;
    d_lv = (d_lv.array() * ctx.clamp_pass.array()).matrix();
    enc.mu_net.backward(ctx.mu_fwd, d_mu, nullptr);
    enc.logvar_net.backward(ctx.lv_fwd, d_lv, nullptr);
}

enum class PimPositive { kMeanAnchor, kMaxAnchor };

struct PimConfig {
    double tau = 0.07;  // softmax temperature, > 0
    bool normalize = true;
    PimPositive positive = PimPositive::kMeanAnchor;
};

template <typename Scalar>
struct PimContext {
    std::vector<int> selected;
    MatX<Scalar> vhat;        // k x C features used for the dot products
    VecX<Scalar> norms;       // k, original norms (1 if normalize is off)
    MatX<Scalar> probs;       // k x (m+n) softmax over all anchors
    std::vector<int> pos_row; // index into cs for max mode, -1 for mean mode
    int label = 0;
};

// InfoNCE-style loss over the selected patches: for each patch, minus the
// positive-anchor logit plus log-sum-exp over every class-specific and
// class-agnostic anchor logit, averaged over the selection. The positive is
// the renormalized mean of the label's anchors (or the best-matching anchor
// when cfg.positive is kMaxAnchor).
template <typename Scalar>
Scalar pim_loss(const MatX<Scalar>& alpha, const BankView<Scalar>& bank, int label,
                const std::vector<int>& selected, const PimConfig& cfg,
                PimContext<Scalar>* ctx = nullptr) {
    if (selected.empty()) throw ValidationError("pim_loss: empty selection");
    if (!(cfg.tau > 0)) throw ValidationError("pim_loss: tau must be positive");
    if (label < 0 || label >= bank.num_classes)
        throw LookupError("pim_loss: unknown label " + std::to_string(label));
    const int k = static_cast<int>(selected.size());
    const int m = bank.m(), n = bank.n();
    const Scalar tau = Scalar(cfg.tau);

    if (ctx) {
        ctx->selected = selected;
        ctx->label = label;
        ctx->vhat.resize(k, alpha.cols());
        ctx->norms.resize(k);
        ctx->probs.resize(k, m + n);
        ctx->pos_row.assign(k, -1);
    }

    auto [cls_begin, cls_end] = bank.class_ranges[label];
    Scalar total = Scalar(0);
    std::vector<Scalar> logits(m + n);
    for (int t = 0; t < k; ++t) {
        int i = selected[t];
        if (i < 0 || i >= alpha.rows())
            throw ValidationError("pim_loss: selected index out of range");
        VecX<Scalar> v = alpha.row(i).transpose();
        Scalar norm = Scalar(1);
        if (cfg.normalize) {
            norm = v.norm();
            if (norm <= Scalar(0))
                throw DegenerateInputError("pim_loss: zero-norm calibrated feature");
            v /= norm;
        }
        for (int j = 0; j < m; ++j) logits[j] = bank.cs.row(j).dot(v.transpose()) / tau;
        for (int j = 0; j < n; ++j) logits[m + j] = bank.ca.row(j).dot(v.transpose()) / tau;

        Scalar pos_logit;
        int pos_row = -1;
        if (cfg.positive == PimPositive::kMeanAnchor) {
            pos_logit = bank.positives.row(label).dot(v.transpose()) / tau;
        } else {
            pos_row = cls_begin;
            for (int j = cls_begin + 1; j < cls_end; ++j)
                if (logits[j] > logits[pos_row]) pos_row = j;
            pos_logit = logits[pos_row];
        }

        Scalar lse = log_sum_exp(logits.data(), logits.size());
        total += -pos_logit + lse;

        if (ctx) {
            ctx->vhat.row(t) = v.transpose();
            ctx->norms[t] = norm;
            ctx->pos_row[t] = pos_row;
            for (int j = 0; j < m + n; ++j) ctx->probs(t, j) = std::exp(logits[j] - lse);
        }
    }
    return total / Scalar(k);
}

// Accumulates d(loss)/d(alpha) * d_loss into d_alpha (N x C).
template <typename Scalar>
void pim_backward(const BankView<Scalar>& bank, const PimConfig& cfg,
                  const PimContext<Scalar>& ctx, Scalar d_loss, MatX<Scalar>& d_alpha) {
    const int k = static_cast<int>(ctx.selected.size());
    const int m = bank.m(), n = bank.n();
    const Scalar tau = Scalar(cfg.tau);
    const Scalar scale = d_loss / Scalar(k);
    for (int t = 0; t < k; ++t) {
        int i = ctx.selected[t];
        VecX<Scalar> g = VecX<Scalar>::Zero(d_alpha.cols());
        for (int j = 0; j < m; ++j) g += ctx.probs(t, j) * bank.cs.row(j).transpose();
        for (int j = 0; j < n; ++j) g += ctx.probs(t, m + j) * bank.ca.row(j).transpose();
        if (cfg.positive == PimPositive::kMeanAnchor)
            g -= bank.positives.row(ctx.label).transpose();
        else
            g -= bank.cs.row(ctx.pos_row[t]).transpose();
        g *= scale / tau;
        if (cfg.normalize) {
            VecX<Scalar> vhat = ctx.vhat.row(t).transpose();
            g = (g - vhat * vhat.dot(g)) / ctx.norms[t];
        }
        d_alpha.row(i) += g.transpose();
    }
}

// Spec-facing overloads on the raw bank.
template <typename Scalar>
Scalar pim_loss(const CalibratedSample<Scalar>& cal, const ConceptBank& bank, int label,
                const std::vector<int>& selected, const PimConfig& cfg) {
    auto view = make_bank_view<Scalar>(bank);
    return pim_loss(cal.alpha, view, label, selected, cfg);
}

// Mean over all patches of the closed-form KL between the diagonal Gaussian
// posterior (mu, exp(logvar)) and the standard normal prior:
// 0.5 * sum_d (mu^2 + exp(logvar) - 1 - logvar) per patch.
template <typename Scalar>
Scalar sim_loss(const CalibratedSample<Scalar>& cal) {
    if (!cal.mu.allFinite() || !cal.logvar.allFinite())
        throw ValidationError("sim_loss: non-finite mu or logvar");
    const auto n = cal.mu.rows();
    if (n == 0) throw ValidationError("sim_loss: empty sample");
    Scalar total = Scalar(0);
    for (Eigen::Index i = 0; i < n; ++i) {
        Scalar patch = Scalar(0);
        for (Eigen::Index j = 0; j < cal.mu.cols(); ++j) {
            Scalar mu = cal.mu(i, j), lv = cal.logvar(i, j);
            patch += mu * mu + std::exp(lv) - Scalar(1) - lv;
        }
        total += patch * Scalar(0.5);
    }
    return total / Scalar(n);
}

template <typename Scalar>
void sim_backward(const CalibratedSample<Scalar>& cal, Scalar d_loss, MatX<Scalar>& d_mu,
                  MatX<Scalar>& d_logvar) {
    const Scalar inv_n = d_loss / Scalar(cal.mu.rows());
    d_mu += cal.mu * inv_n;
    d_logvar += ((cal.logvar.array().exp() - Scalar(1)) * Scalar(0.5) * inv_n).matrix();
}

// Symmetric batch InfoNCE estimate (nats) with in-batch negatives and the
// fixed critic a.b/tau. A lower-bound estimator of I(a;b); each per-row term
// is at most ln(batch), so the estimate never exceeds ln(batch).
inline double infonce_estimate(const Eigen::MatrixXd& samples_a,
                               const Eigen::MatrixXd& samples_b, double tau) {
    const auto batch = samples_a.rows();
    if (batch < 2) throw ValidationError("infonce_estimate: batch must be at least 2");
    if (samples_b.rows() != batch || samples_b.cols() != samples_a.cols())
        throw ValidationError("infonce_estimate: sample shape mismatch");
    if (!(tau > 0)) throw ValidationError("infonce_estimate: tau must be positive");

    Eigen::MatrixXd scores = samples_a * samples_b.transpose() / tau;
    const double log_b = std::log(double(batch));
    double rows = 0.0, cols = 0.0;
    std::vector<double> buf(batch);
    for (Eigen::Index i = 0; i < batch; ++i) {
        for (Eigen::Index j = 0; j < batch; ++j) buf[j] = scores(i, j);
        rows += scores(i, i) - log_sum_exp(buf.data(), buf.size()) + log_b;
        for (Eigen::Index j = 0; j < batch; ++j) buf[j] = scores(j, i);
        cols += scores(i, i) - log_sum_exp(buf.data(), buf.size()) + log_b;
    }
    return 0.5 * (rows + cols) / double(batch);
}

}  // namespace cate
