#pragma once

#include <cmath>
#include <type_traits>

namespace smfj {

// Second-order forward-mode scalar carrying two independent directions:
//   x = v + d1*e1 + d2*e2 + d12*e1*e2,  e1^2 = e2^2 = 0.
// One evaluation of f yields f, the two directional derivatives, and the
// mixed second derivative (d12); seeding e1 = e2 gives a pure second
// derivative.  No epsilon bump, no subtractive cancellation.
struct Dual2 {
    double v = 0.0, d1 = 0.0, d2 = 0.0, d12 = 0.0;

    Dual2() = default;
    Dual2(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
    Dual2(double value, double g1, double g2, double g12) : v(value), d1(g1), d2(g2), d12(g12) {}

    Dual2& operator+=(const Dual2& o) {
        v += o.v; d1 += o.d1; d2 += o.d2; d12 += o.d12;
        return *this;
    }
    Dual2& operator-=(const Dual2& o) {
        v -= o.v; d1 -= o.d1; d2 -= o.d2; d12 -= o.d12;
        return *this;
    }
    Dual2& operator*=(const Dual2& o) {
        d12 = d12 * o.v + d1 * o.d2 + d2 * o.d1 + v * o.d12;
        d1 = d1 * o.v + v * o.d1;
        d2 = d2 * o.v + v * o.d2;
        v *= o.v;
        return *this;
    }
    Dual2& operator/=(const Dual2& o);
};

inline Dual2 operator+(Dual2 a, const Dual2& b) { return a += b; }
inline Dual2 operator-(Dual2 a, const Dual2& b) { return a -= b; }
inline Dual2 operator*(Dual2 a, const Dual2& b) { return a *= b; }
inline Dual2 operator-(const Dual2& a) { return {-a.v, -a.d1, -a.d2, -a.d12}; }

// Composition with a scalar function given f(v), f'(v), f''(v).
inline Dual2 compose(const Dual2& x, double f, double fp, double fpp) {
    return {f, fp * x.d1, fp * x.d2, fp * x.d12 + fpp * x.d1 * x.d2};
}

inline Dual2 inv(const Dual2& x) {
    const double iv = 1.0 / x.v;
    return compose(x, iv, -iv * iv, 2.0 * iv * iv * iv);
}
inline Dual2& Dual2::operator/=(const Dual2& o) { return *this *= inv(o); }
inline Dual2 operator/(Dual2 a, const Dual2& b) { return a /= b; }

inline Dual2 exp(const Dual2& x) {
    const double e = std::exp(x.v);
    return compose(x, e, e, e);
}
inline Dual2 log(const Dual2& x) {
    const double iv = 1.0 / x.v;
    return compose(x, std::log(x.v), iv, -iv * iv);
}
inline Dual2 sqrt(const Dual2& x) {
    const double s = std::sqrt(x.v);
    return compose(x, s, 0.5 / s, -0.25 / (s * x.v));
}
inline Dual2 pow(const Dual2& x, double p) {
    const double f = std::pow(x.v, p);
    return compose(x, f, p * f / x.v, p * (p - 1.0) * f / (x.v * x.v));
}
inline Dual2 sin(const Dual2& x) { return compose(x, std::sin(x.v), std::cos(x.v), -std::sin(x.v)); }
inline Dual2 cos(const Dual2& x) { return compose(x, std::cos(x.v), -std::sin(x.v), -std::cos(x.v)); }
inline Dual2 fabs(const Dual2& x) { return x.v < 0.0 ? -x : x; }

inline bool operator<(const Dual2& a, const Dual2& b) { return a.v < b.v; }
inline bool operator>(const Dual2& a, const Dual2& b) { return a.v > b.v; }

// Scalar value extraction usable in templates over double / Dual2.
inline double value_of(double x) { return x; }
inline double value_of(const Dual2& x) { return x.v; }

// ---------------------------------------------------------------------------
// Minimal complex-over-T template.  std::complex<T> for non-floating T is
// undefined behaviour, so the transform pricer uses this for dual scalars.
// ---------------------------------------------------------------------------
template <class T>
struct Cx {
    T re{}, im{};

    Cx() = default;
    Cx(T r) : re(r) {}  // NOLINT(google-explicit-constructor)
    Cx(T r, T i) : re(r), im(i) {}
    template <class U>
    Cx(const Cx<U>& o) : re(o.re), im(o.im) {}  // NOLINT(google-explicit-constructor)

    Cx& operator+=(const Cx& o) { re += o.re; im += o.im; return *this; }
    Cx& operator-=(const Cx& o) { re -= o.re; im -= o.im; return *this; }
    Cx& operator*=(const Cx& o) {
        const T r = re * o.re - im * o.im;
        im = re * o.im + im * o.re;
        re = r;
        return *this;
    }
};

template <class T> Cx<T> operator+(Cx<T> a, const Cx<T>& b) { return a += b; }
template <class T> Cx<T> operator-(Cx<T> a, const Cx<T>& b) { return a -= b; }
template <class T> Cx<T> operator*(Cx<T> a, const Cx<T>& b) { return a *= b; }
template <class T> Cx<T> operator-(const Cx<T>& a) { return {-a.re, -a.im}; }

// Scalar mixes; type_identity blocks deduction from the scalar slot so that
// plain doubles promote to T (e.g. Cx<Dual2> * 0.5).
template <class T> Cx<T> operator*(const Cx<T>& a, const std::type_identity_t<T>& s) {
    return {a.re * s, a.im * s};
}
template <class T> Cx<T> operator*(const std::type_identity_t<T>& s, const Cx<T>& a) {
    return {a.re * s, a.im * s};
}
template <class T> Cx<T> operator+(const Cx<T>& a, const std::type_identity_t<T>& s) {
    return {a.re + s, a.im};
}
template <class T> Cx<T> operator-(const Cx<T>& a, const std::type_identity_t<T>& s) {
    return {a.re - s, a.im};
}
template <class T> Cx<T> conj(const Cx<T>& a) { return {a.re, -a.im}; }
template <class T> T norm2(const Cx<T>& a) { return a.re * a.re + a.im * a.im; }

template <class T>
Cx<T> operator/(const Cx<T>& a, const Cx<T>& b) {
    const T n = norm2(b);
    const Cx<T> p = a * conj(b);
    return {p.re / n, p.im / n};
}

template <class T>
Cx<T> exp(const Cx<T>& a) {
    using std::cos;
    using std::exp;
    using std::sin;
    const T m = exp(a.re);
    return {m * cos(a.im), m * sin(a.im)};
}

template <class T>
double abs_value(const Cx<T>& a) {
    return std::hypot(value_of(a.re), value_of(a.im));
}

}  // namespace smfj
