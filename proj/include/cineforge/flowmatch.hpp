// SPDX-License-Identifier: Apache-2.0

#pragma once

// Rectified-flow numerics over flat real arrays: the straight noising path
// z_t = (1 - t) z0 + t eps, its constant-velocity regression target
// z1 - z0 (z1 is the noise endpoint eps), the mean-squared matching loss, and an
// explicit Euler integrator for dz = v(z, t) dt.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cineforge/error.hpp"

namespace cineforge::flow {

class FlatTensor {
public:
    FlatTensor() = default;

    /// A 1-D tensor shaped {values.size()}.
    explicit FlatTensor(std::vector<double> values)
        : values_(std::move(values)), shape_{values_.size()} {
        check_finite();
    }

    FlatTensor(std::vector<double> values, std::vector<std::size_t> shape)
        : values_(std::move(values)), shape_(std::move(shape)) {
        std::size_t n = 1;
        for (std::size_t d : shape_) n *= d;
        if (n != values_.size()) {
            throw Error(ErrorCode::ShapeMismatch, "shape holds " + std::to_string(n) + " elements, got " +
                                                      std::to_string(values_.size()));
        }
        check_finite();
    }

    static FlatTensor zeros_like(const FlatTensor& t) {
        return FlatTensor(std::vector<double>(t.size(), 0.0), t.shape_);
    }

    std::size_t size() const { return values_.size(); }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    bool operator==(const FlatTensor&) const = default;

private:
    void check_finite() const {
        for (double v : values_) {
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "tensor values must be finite");
        }
    }

    std::vector<double> values_;
    std::vector<std::size_t> shape_;
};

/// Evaluates the velocity field at (state, t); output shape must match state.
using VelocityFn = std::function<FlatTensor(const FlatTensor&, double)>;

namespace detail {

inline void require_same_shape(const FlatTensor& a, const FlatTensor& b) {
    if (a.shape() != b.shape()) throw Error(ErrorCode::ShapeMismatch, "tensor shapes differ");
}

} // namespace detail

inline FlatTensor interpolate(const FlatTensor& z0, const FlatTensor& eps, double t) {
    detail::require_same_shape(z0, eps);
    if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::TOutOfRange, "t = " + std::to_string(t));
    if (t == 0.0) return z0;
    if (t == 1.0) return eps;
    std::vector<double> out(z0.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - t) * z0[i] + t * eps[i];
    return FlatTensor(std::move(out), z0.shape());
}

inline FlatTensor cfm_target(const FlatTensor& z0, const FlatTensor& z1) {
    detail::require_same_shape(z0, z1);
    std::vector<double> out(z0.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = z1[i] - z0[i];
    return FlatTensor(std::move(out), z0.shape());
}

/// Mean over elements of the squared error against the target z1 - z0.
inline double cfm_loss(const FlatTensor& pred_v, const FlatTensor& z0, const FlatTensor& z1) {
    detail::require_same_shape(pred_v, z0);
    const FlatTensor target = cfm_target(z0, z1);
    if (target.size() == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double d = target[i] - pred_v[i];
        sum += d * d;
    }
    return sum / static_cast<double>(target.size());
}

/// Explicit Euler with `steps` uniform steps from t_start to t_end. The default
/// direction is noise (t = 1) to data (t = 0).
inline FlatTensor euler_integrate(const VelocityFn& v, const FlatTensor& z_start, double t_start = 1.0,
                                  double t_end = 0.0, int steps = 1) {
    if (steps < 1) throw Error(ErrorCode::InvalidArgument, "steps must be >= 1");
    if (!(t_start >= 0.0 && t_start <= 1.0 && t_end >= 0.0 && t_end <= 1.0)) {
        throw Error(ErrorCode::TOutOfRange, "integration bounds must lie in [0, 1]");
    }
    const double dt = (t_end - t_start) / steps;
    std::vector<double> z(z_start.values().begin(), z_start.values().end());
    for (int s = 0; s < steps; ++s) {
        const double t = t_start + s * dt;
        const FlatTensor vel = v(FlatTensor(z, z_start.shape()), t);
        if (vel.shape() != z_start.shape()) {
            throw Error(ErrorCode::ShapeMismatch, "velocity field changed the tensor shape");
        }
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += dt * vel[i];
    }
    return FlatTensor(std::move(z), z_start.shape());
}

} // namespace cineforge::flow
