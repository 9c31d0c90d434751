#include "sf/core/adam.h"

#include "sf/core/error.h"

#include <cmath>

namespace sf {

void Adam::update(double &p, double g, std::size_t i, double lr, double c1, double c2) {
    if (g == 0.0)
        return;
    m_[i] = config_.beta1 * m_[i] + (1 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1 - config_.beta2) * g * g;
    p -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + config_.epsilon);
}

void Adam::step(std::vector<double> &params, const std::vector<double> &grads, double lr) {
    require(params.size() == m_.size() && grads.size() == m_.size(), "optimizer size mismatch");
    ++t_;
    const double c1 = 1 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i)
        update(params[i], grads[i], i, lr, c1, c2);
}

void Adam::step_sparse(std::vector<double> &params, const std::vector<double> &grads,
                       const std::vector<std::uint32_t> &indices, double lr) {
    require(params.size() == m_.size() && grads.size() == m_.size(), "optimizer size mismatch");
    ++t_;
    const double c1 = 1 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::uint32_t i : indices)
        update(params[i], grads[i], i, lr, c1, c2);
}

void Adam::restore(std::vector<double> m, std::vector<double> v, std::uint64_t t) {
    if (m.size() != m_.size() || v.size() != v_.size())
        fail(ErrorKind::Corrupt, "checkpoint corrupt: optimizer state size mismatch");
    m_ = std::move(m);
    v_ = std::move(v);
    t_ = t;
}

} // namespace sf
