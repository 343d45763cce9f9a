#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace cate {

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Named view of one parameter tensor and its gradient buffer. Modules append
// their tensors in a fixed order; the optimizer and checkpoints rely on it.
template <typename Scalar>
struct ParamRef {
    std::string name;
    MatX<Scalar>* value;
    MatX<Scalar>* grad;
};

template <typename Scalar>
void zero_grads(const std::vector<ParamRef<Scalar>>& params) {
    for (const auto& p : params) p.grad->setZero();
}

}  // namespace cate
