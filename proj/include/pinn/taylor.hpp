#pragma once

#include <cmath>
#include <limits>

namespace pinn {

/// Truncated Taylor number in (x, t): value, x-derivatives up to third order
/// and the first t-derivative. Mixed derivatives are never formed, which is
/// enough for residuals of the form u_t + F(u, u_x, u_xx, u_xxx).
///
/// Arithmetic covers the elementary-operation set of the network and the
/// residuals: +, -, *, integer powers up to 3, tanh, plus `compose` for any
/// smooth unary function given its first four derivatives.
template <typename Scalar>
struct Taylor {
  Scalar value{0};
  Scalar dx{0};
  Scalar dxx{0};
  Scalar dxxx{0};
  Scalar dt{0};

  static Taylor constant(Scalar c) { return Taylor{c, 0, 0, 0, 0}; }
  static Taylor variable_x(Scalar x) { return Taylor{x, 1, 0, 0, 0}; }
  static Taylor variable_t(Scalar t) { return Taylor{t, 0, 0, 0, 1}; }

  Taylor& operator+=(const Taylor& o) {
    value += o.value;
    dx += o.dx;
    dxx += o.dxx;
    dxxx += o.dxxx;
    dt += o.dt;
    return *this;
  }
  Taylor& operator-=(const Taylor& o) {
    value -= o.value;
    dx -= o.dx;
    dxx -= o.dxx;
    dxxx -= o.dxxx;
    dt -= o.dt;
    return *this;
  }
  Taylor& operator*=(Scalar s) {
    value *= s;
    dx *= s;
    dxx *= s;
    dxxx *= s;
    dt *= s;
    return *this;
  }
};

template <typename S>
Taylor<S> operator+(Taylor<S> a, const Taylor<S>& b) { return a += b; }
template <typename S>
Taylor<S> operator-(Taylor<S> a, const Taylor<S>& b) { return a -= b; }
template <typename S>
Taylor<S> operator-(Taylor<S> a) { return a *= S(-1); }
template <typename S>
Taylor<S> operator*(Taylor<S> a, S s) { return a *= s; }
template <typename S>
Taylor<S> operator*(S s, Taylor<S> a) { return a *= s; }
template <typename S>
Taylor<S> operator+(Taylor<S> a, S s) {
  a.value += s;
  return a;
}

// Leibniz rule in x; product rule in t.
template <typename S>
Taylor<S> operator*(const Taylor<S>& a, const Taylor<S>& b) {
  Taylor<S> r;
  r.value = a.value * b.value;
  r.dx = a.dx * b.value + a.value * b.dx;
  r.dxx = a.dxx * b.value + S(2) * a.dx * b.dx + a.value * b.dxx;
  r.dxxx = a.dxxx * b.value + S(3) * a.dxx * b.dx + S(3) * a.dx * b.dxx +
           a.value * b.dxxx;
  r.dt = a.dt * b.value + a.value * b.dt;
  return r;
}

template <typename S>
Taylor<S> pow(const Taylor<S>& a, int n) {
  switch (n) {
    case 0: return Taylor<S>::constant(S(1));
    case 1: return a;
    case 2: return a * a;
    case 3: return a * a * a;
    default: break;
  }
  // Outside the elementary set; callers compose longer products explicitly.
  return Taylor<S>::constant(std::numeric_limits<S>::quiet_NaN());
}

/// f(a) by Faa di Bruno, given f and its derivatives f1..f3 at a.value.
template <typename S>
Taylor<S> compose(const Taylor<S>& a, S f0, S f1, S f2, S f3) {
  Taylor<S> r;
  r.value = f0;
  r.dx = f1 * a.dx;
  r.dxx = f2 * a.dx * a.dx + f1 * a.dxx;
  r.dxxx = f3 * a.dx * a.dx * a.dx + S(3) * f2 * a.dx * a.dxx + f1 * a.dxxx;
  r.dt = f1 * a.dt;
  return r;
}

template <typename S>
Taylor<S> tanh(const Taylor<S>& a) {
  using std::tanh;
  const S s = tanh(a.value);
  const S s1 = S(1) - s * s;
  const S s2 = S(-2) * s * s1;
  const S s3 = S(-2) * s1 * s1 + S(4) * s * s * s1;
  return compose(a, s, s1, s2, s3);
}

}  // namespace pinn
