#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cate/errors.hpp"
#include "cate/params.hpp"
#include "cate/rng.hpp"

namespace cate {

// Affine layer over batched rows: y = x * w^T + b^T.
template <typename Scalar>
struct Dense {
    MatX<Scalar> w;   // out x in
    MatX<Scalar> b;   // out x 1
    MatX<Scalar> gw;
    MatX<Scalar> gb;

    void init(int in, int out, RngStream& rng) {
        w.resize(out, in);
        const double stddev = 1.0 / std::sqrt(double(in));
        for (int i = 0; i < out; ++i)
            for (int j = 0; j < in; ++j) w(i, j) = Scalar(rng.normal() * stddev);
        b = MatX<Scalar>::Zero(out, 1);
        gw = MatX<Scalar>::Zero(out, in);
        gb = MatX<Scalar>::Zero(out, 1);
    }

    MatX<Scalar> forward(const MatX<Scalar>& x) const {
        MatX<Scalar> y = x * w.transpose();
        y.rowwise() += b.col(0).transpose();
        return y;
    }

    // Accumulates parameter gradients; writes input gradient if requested.
    void backward(const MatX<Scalar>& x, const MatX<Scalar>& dy, MatX<Scalar>* dx) {
        gw += dy.transpose() * x;
        gb.col(0) += dy.colwise().sum().transpose();
        if (dx) *dx = dy * w;
    }

    void collect_params(const std::string& prefix, std::vector<ParamRef<Scalar>>& out) {
        out.push_back({prefix + ".w", &w, &gw});
        out.push_back({prefix + ".b", &b, &gb});
    }
};

// Perceptron with two tanh hidden layers and a linear output layer.
template <typename Scalar>
struct Mlp {
    std::vector<Dense<Scalar>> layers;

    void init(int in, int hidden, int out, RngStream& rng) {
        layers.resize(3);
        layers[0].init(in, hidden, rng);
        layers[1].init(hidden, hidden, rng);
        layers[2].init(hidden, out, rng);
    }

    struct Fwd {
        // acts[0] = input, acts[i] = post-tanh output of hidden layer i.
        std::vector<MatX<Scalar>> acts;
    };

    // x: N x in. Throws NumericError naming the offending layer.
    MatX<Scalar> forward(const MatX<Scalar>& x, Fwd* cache, const std::string& name) const {
        MatX<Scalar> cur = x;
        if (cache) cache->acts = {cur};
        for (std::size_t i = 0; i < layers.size(); ++i) {
            cur = layers[i].forward(cur);
            if (!cur.allFinite())
                throw NumericError(name + " layer " + std::to_string(i + 1) +
                                   " produced non-finite output");
            if (i + 1 < layers.size()) {
                cur = cur.array().tanh().matrix();
                if (cache) cache->acts.push_back(cur);
            }
        }
        return cur;
    }

    void backward(const Fwd& cache, const MatX<Scalar>& d_out, MatX<Scalar>* d_input) {
        MatX<Scalar> d = d_out;
        for (int i = static_cast<int>(layers.size()) - 1; i >= 0; --i) {
            const MatX<Scalar>& input = cache.acts[i];
            bool need_dx = i > 0 || d_input != nullptr;
            MatX<Scalar> dx;
            layers[i].backward(input, d, need_dx ? &dx : nullptr);
            if (i > 0) {
                // tanh'(a) = 1 - tanh(a)^2, with tanh(a) cached as acts[i].
                d = dx.array() * (Scalar(1) - cache.acts[i].array().square());
            } else if (d_input) {
                *d_input = dx;
            }
        }
    }

    void collect_params(const std::string& prefix, std::vector<ParamRef<Scalar>>& out) {
        for (std::size_t i = 0; i < layers.size(); ++i)
            layers[i].collect_params(prefix + ".l" + std::to_string(i + 1), out);
    }
};

}  // namespace cate
