#pragma once

#include <array>
#include <cmath>

namespace sf {

// Forward-mode dual number with N tangent directions.
template <int N> struct Dual {
    double v = 0;
    std::array<double, N> d{};

    Dual() = default;
    Dual(double value) : v(value) {}
    static Dual variable(double value, int i) {
        Dual x(value);
        x.d[i] = 1.0;
        return x;
    }
};

template <int N> Dual<N> operator+(const Dual<N> &a, const Dual<N> &b) {
    Dual<N> r(a.v + b.v);
    for (int i = 0; i < N; ++i)
        r.d[i] = a.d[i] + b.d[i];
    return r;
}
template <int N> Dual<N> operator-(const Dual<N> &a, const Dual<N> &b) {
    Dual<N> r(a.v - b.v);
    for (int i = 0; i < N; ++i)
        r.d[i] = a.d[i] - b.d[i];
    return r;
}
template <int N> Dual<N> operator*(const Dual<N> &a, const Dual<N> &b) {
    Dual<N> r(a.v * b.v);
    for (int i = 0; i < N; ++i)
        r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
}
template <int N> Dual<N> operator/(const Dual<N> &a, const Dual<N> &b) {
    const double inv = 1.0 / b.v;
    Dual<N> r(a.v * inv);
    for (int i = 0; i < N; ++i)
        r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
    return r;
}
template <int N> Dual<N> operator+(const Dual<N> &a, double b) { return a + Dual<N>(b); }
template <int N> Dual<N> operator+(double a, const Dual<N> &b) { return Dual<N>(a) + b; }
template <int N> Dual<N> operator-(const Dual<N> &a, double b) { return a - Dual<N>(b); }
template <int N> Dual<N> operator-(double a, const Dual<N> &b) { return Dual<N>(a) - b; }
template <int N> Dual<N> operator*(const Dual<N> &a, double b) {
    Dual<N> r(a.v * b);
    for (int i = 0; i < N; ++i)
        r.d[i] = a.d[i] * b;
    return r;
}
template <int N> Dual<N> operator*(double a, const Dual<N> &b) { return b * a; }
template <int N> Dual<N> operator/(const Dual<N> &a, double b) { return a * (1.0 / b); }
template <int N> Dual<N> operator/(double a, const Dual<N> &b) { return Dual<N>(a) / b; }

template <int N> Dual<N> sqrt(const Dual<N> &a) {
    Dual<N> r(std::sqrt(a.v));
    const double k = r.v > 0 ? 0.5 / r.v : 0.0;
    for (int i = 0; i < N; ++i)
        r.d[i] = a.d[i] * k;
    return r;
}

inline double sqrt(double x) { return std::sqrt(x); }
inline double value_of(double x) { return x; }
template <int N> double value_of(const Dual<N> &x) { return x.v; }

} // namespace sf
