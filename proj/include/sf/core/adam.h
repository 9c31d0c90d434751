#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace sf {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Adam with bias correction. Entries whose gradient is exactly zero keep their
// moments and value (lazy update), so untouched hash-table rows do not drift.
class Adam {
public:
    Adam() = default;
    Adam(std::size_t size, AdamConfig config = {}) : config_(config), m_(size, 0.0), v_(size, 0.0) {}

    void step(std::vector<double> &params, const std::vector<double> &grads, double lr);
    // Same update restricted to `indices`.
    void step_sparse(std::vector<double> &params, const std::vector<double> &grads,
                     const std::vector<std::uint32_t> &indices, double lr);

    std::size_t size() const { return m_.size(); }
    std::uint64_t steps() const { return t_; }
    const std::vector<double> &first_moment() const { return m_; }
    const std::vector<double> &second_moment() const { return v_; }
    void restore(std::vector<double> m, std::vector<double> v, std::uint64_t t);
    const AdamConfig &config() const { return config_; }

private:
    void update(double &p, double g, std::size_t i, double lr, double c1, double c2);

    AdamConfig config_;
    std::vector<double> m_, v_;
    std::uint64_t t_ = 0;
};

} // namespace sf
