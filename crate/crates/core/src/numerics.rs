//! Small shared numerical kernels: finite-difference weights on arbitrary
//! nodes, weighted quadrature cells, and a tridiagonal solve.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Stencil weights for the `order`-th derivative at `x0` on the given
/// nodes (Fornberg's recursion).
///
/// With `k+1` nodes the weights are exact for polynomials of degree `k`.
pub fn fd_weights<T: Scalar>(nodes: &[T], x0: T, order: usize) -> Vec<T> {
    let n = nodes.len();
    assert!(n > order, "need more nodes than the derivative order");
    let m = order;
    let mut c = vec![vec![T::zero(); m + 1]; n];
    c[0][0] = T::one();
    let mut c1 = T::one();
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (T::of_usize(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - T::of_usize(k) * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// First-derivative stencil weights at `x0`.
pub fn derivative_weights<T: Scalar>(nodes: &[T], x0: T) -> Vec<T> {
    fd_weights(nodes, x0, 1)
}

/// One-sided second-order first-derivative weights on six nodes whose
/// truncation error `+ (d^2/6) f''' + (d^4/120) f^(5)` matches the
/// centered interior stencil through fourth order (`d` is the spacing at
/// the boundary). A plain one-sided stencil carries `- (d^2/3) f'''`; an
/// error field that flips sign or order at the boundary nodes dominates
/// integrated quantities with a defect of opposite sign.
pub fn matched_one_sided_weights<T: Scalar>(nodes: &[T], x0: T, spacing: T) -> Vec<T> {
    assert_eq!(nodes.len(), 6);
    let d1 = fd_weights(nodes, x0, 1);
    let d3 = fd_weights(nodes, x0, 3);
    let d5 = fd_weights(nodes, x0, 5);
    let c3 = spacing * spacing / T::of(6.0);
    let c5 = spacing.powi(4) / T::of(120.0);
    (0..6).map(|i| d1[i] + c3 * d3[i] + c5 * d5[i]).collect()
}

/// Exact integral of `s^{dim-1} * L(s)` over `[a, b]` where `L` interpolates
/// `(a, fa)-(b, fb)` linearly. Integrating the radial weight exactly keeps
/// the error `O(h^2 * r^{dim-1})` near the origin, which the plain folded
/// trapezoid rule does not.
pub fn weighted_linear_cell<T: Scalar>(dim: u32, a: T, b: T, fa: T, fb: T) -> T {
    let n = T::from_u32(dim).unwrap();
    let pow = |x: T, k: u32| -> T { x.powi(k as i32) };
    let i0 = (pow(b, dim) - pow(a, dim)) / n;
    if a == b {
        return T::zero();
    }
    // \int_a^b (s - a) s^{dim-1} ds
    let i1 = (pow(b, dim + 1) - pow(a, dim + 1)) / (n + T::one()) - a * i0;
    fa * i0 + (fb - fa) / (b - a) * i1
}

/// Exact integral of `s^{dim-1} * Q(s)` over `[a, b]` where `Q` is the
/// quadratic through `(x0,f0), (x1,f1), (x2,f2)` in Newton form. Used by
/// the moment integrals, where the cumulative error is amplified by
/// `r^{1-N}` near the center and the extra order pays off.
pub fn weighted_quadratic_cell<T: Scalar>(dim: u32, a: T, b: T, xs: [T; 3], fs: [T; 3]) -> T {
    if a == b {
        return T::zero();
    }
    let moment = |k: u32| -> T {
        let p = dim + k;
        (b.powi(p as i32) - a.powi(p as i32)) / T::from_u32(p).unwrap()
    };
    let m0 = moment(0);
    let m1 = moment(1);
    let m2 = moment(2);
    // Newton divided differences
    let d01 = (fs[1] - fs[0]) / (xs[1] - xs[0]);
    let d12 = (fs[2] - fs[1]) / (xs[2] - xs[1]);
    let d012 = (d12 - d01) / (xs[2] - xs[0]);
    // f0 + d01 (s - x0) + d012 (s - x0)(s - x1)
    let c0 = fs[0] - d01 * xs[0] + d012 * xs[0] * xs[1];
    let c1 = d01 - d012 * (xs[0] + xs[1]);
    let c2 = d012;
    c0 * m0 + c1 * m1 + c2 * m2
}

/// Plain composite trapezoid on sampled data (used where the integrand
/// carries no singular weight).
pub fn trapezoid<T: Scalar>(x: &[T], f: &[T]) -> T {
    assert_eq!(x.len(), f.len());
    let mut acc = T::zero();
    for i in 1..x.len() {
        acc += (x[i] - x[i - 1]) * (f[i] + f[i - 1]) * T::half();
    }
    acc
}

/// Thomas algorithm for a tridiagonal system. `lower` and `upper` have one
/// element fewer than `diag`. Overwrites nothing; returns the solution.
pub fn solve_tridiagonal<T: Scalar>(
    lower: &[T],
    diag: &[T],
    upper: &[T],
    rhs: &[T],
) -> Result<Vec<T>> {
    let n = diag.len();
    assert_eq!(lower.len(), n - 1);
    assert_eq!(upper.len(), n - 1);
    assert_eq!(rhs.len(), n);
    let mut w = vec![T::zero(); n - 1];
    let mut g = vec![T::zero(); n];
    if diag[0] == T::zero() {
        return Err(Error::SingularSystem(0));
    }
    w[0] = upper[0] / diag[0];
    g[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - lower[i - 1] * w[i - 1];
        if denom == T::zero() {
            return Err(Error::SingularSystem(i));
        }
        if i < n - 1 {
            w[i] = upper[i] / denom;
        }
        g[i] = (rhs[i] - lower[i - 1] * g[i - 1]) / denom;
    }
    let mut x = g;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= w[i] * next;
    }
    Ok(x)
}
