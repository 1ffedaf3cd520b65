//! Radial grids, sampled radial profiles, the r^{N-1}-weighted quadrature
//! and norms, and the radial differential operators every other module
//! consumes.
//!
//! A radially symmetric vector field `U(x) = u(|x|) x/|x|` is represented by
//! the scalar profile `u(r)` sampled on a [`RadialGrid`]; its divergence is
//! `u_r + (N-1) u/r` with the analytic limit `N u'(0)` at the center.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{
    derivative_weights, matched_one_sided_weights, weighted_linear_cell, weighted_quadratic_cell,
};
use crate::scalar::Scalar;

/// Minimum number of grid intervals.
pub const MIN_INTERVALS: usize = 16;

/// Strictly increasing radii `0 = r_0 < r_1 < ... < r_K = R` of a ball of
/// radius `R` in dimension `N` (2 or 3).
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid<T> {
    nodes: Vec<T>,
    dim: u32,
}

impl<T: Scalar> RadialGrid<T> {
    pub fn new(nodes: Vec<T>, dim: u32) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!(
                "dimension {dim} not in {{2,3}}"
            )));
        }
        if nodes.len() < MIN_INTERVALS + 1 {
            return Err(Error::InvalidGrid(format!(
                "{} nodes; need at least {} intervals",
                nodes.len(),
                MIN_INTERVALS
            )));
        }
        if nodes[0] != T::zero() {
            return Err(Error::InvalidGrid("first node must be exactly 0".into()));
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::InvalidGrid(
                    "nodes must be finite and strictly increasing".into(),
                ));
            }
        }
        Ok(Self { nodes, dim })
    }

    /// Uniform grid with `k` intervals on `[0, radius]`.
    pub fn uniform(k: usize, radius: T, dim: u32) -> Result<Self> {
        let kk = T::of_usize(k);
        let nodes: Vec<T> = (0..=k)
            .map(|i| {
                if i == k {
                    radius
                } else {
                    radius * T::of_usize(i) / kk
                }
            })
            .collect();
        Self::new(nodes, dim)
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn radius(&self) -> T {
        *self.nodes.last().unwrap()
    }

    /// Surface constant of the weighted-norm convention for this dimension.
    pub fn omega(&self) -> T {
        WeightedNormConvention::for_dim(self.dim).omega_n
    }
}

/// The surface constant `omega_N = N |B_1|` relating volume integrals of
/// radial functions to their one-dimensional radial form: `omega_2 = 2 pi`,
/// `omega_3 = 4 pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedNormConvention<T> {
    pub omega_n: T,
}

impl<T: Scalar> WeightedNormConvention<T> {
    pub fn for_dim(dim: u32) -> Self {
        let pi = T::of(std::f64::consts::PI);
        let omega_n = match dim {
            2 => T::two() * pi,
            3 => T::of(4.0) * pi,
            _ => panic!("dimension {dim} not in {{2,3}}"),
        };
        Self { omega_n }
    }
}

/// A scalar function of radius sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile<T> {
    grid: Arc<RadialGrid<T>>,
    values: Vec<T>,
}

impl<T: Scalar> RadialProfile<T> {
    pub fn new(grid: Arc<RadialGrid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ProfileMismatch(format!(
                "{} values on a {}-node grid",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::ProfileMismatch(
                "profile values must be finite".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<RadialGrid<T>>, f: impl Fn(T) -> T) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Pointwise derivative: second-order centered in the interior,
    /// second-order one-sided at both endpoints with the leading error
    /// coefficient matched to the interior stencil.
    pub fn derivative(&self) -> Vec<T> {
        let r = self.grid.nodes();
        let u = &self.values;
        let k = r.len() - 1;
        let mut d = vec![T::zero(); k + 1];
        let apply =
            |w: &[T], lo: usize| -> T { w.iter().zip(&u[lo..]).map(|(&wi, &ui)| wi * ui).sum() };
        let w0 = matched_one_sided_weights(&r[0..6], r[0], r[1] - r[0]);
        d[0] = apply(&w0, 0);
        let wk = matched_one_sided_weights(&r[k - 5..=k], r[k], r[k] - r[k - 1]);
        d[k] = apply(&wk, k - 5);
        for j in 1..k {
            let w = derivative_weights(&r[j - 1..=j + 1], r[j]);
            d[j] = apply(&w, j - 1);
        }
        d
    }
}

/// Tolerance used to decide that a sampled velocity really vanishes at a
/// boundary node, scaled by the profile magnitude.
pub fn boundary_tol<T: Scalar>(max_abs: T) -> T {
    T::epsilon() * T::of(1e4) * (T::one() + max_abs)
}

fn require_center_zero<T: Scalar>(u: &RadialProfile<T>) -> Result<()> {
    let tol = boundary_tol(u.max_abs());
    let v = u.values()[0].abs();
    if v > tol {
        return Err(Error::CenterVelocity {
            value: v.to_f64().unwrap_or(f64::NAN),
            tol: tol.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// `u_r` and `u/r` per node, with both evaluated as `u'(0)` at the center
/// (the analytic limit forced by `u(0) = 0`).
pub fn gradient_components<T: Scalar>(u: &RadialProfile<T>) -> Result<(Vec<T>, Vec<T>)> {
    require_center_zero(u)?;
    let ur = u.derivative();
    let r = u.grid().nodes();
    let mut uor = vec![T::zero(); r.len()];
    uor[0] = ur[0];
    for j in 1..r.len() {
        uor[j] = u.values()[j] / r[j];
    }
    Ok((ur, uor))
}

/// Divergence of the radial field: `F = u_r + (N-1) u/r`, `F(0) = N u'(0)`.
pub fn divergence<T: Scalar>(u: &RadialProfile<T>) -> Result<RadialProfile<T>> {
    let (ur, uor) = gradient_components(u)?;
    let nm1 = T::of_usize(u.grid().dim() as usize - 1);
    let values: Vec<T> = ur.iter().zip(&uor).map(|(&a, &b)| a + nm1 * b).collect();
    RadialProfile::new(u.grid().clone(), values)
}

/// Weighted Lp norm `omega_N^{1/p} (int_0^R |f|^p r^{N-1} dr)^{1/p}`;
/// `p = infinity` returns the sup over nodes. The radial weight is
/// integrated exactly against the piecewise-linear interpolant of `|f|^p`.
pub fn lp_norm<T: Scalar>(f: &RadialProfile<T>, p: T) -> Result<T> {
    if p.is_infinite() && p > T::zero() {
        return Ok(f.max_abs());
    }
    if !(p >= T::one()) {
        return Err(Error::InvalidExponent(p.to_f64().unwrap_or(f64::NAN)));
    }
    let g: Vec<T> = f.values().iter().map(|v| v.abs().powf(p)).collect();
    let r = f.grid().nodes();
    let dim = f.grid().dim();
    let mut acc = T::zero();
    for j in 0..r.len() - 1 {
        acc += weighted_linear_cell(dim, r[j], r[j + 1], g[j], g[j + 1]);
    }
    Ok((f.grid().omega() * acc).powf(p.recip()))
}

/// Interpolation triple for the cell between nodes `j` and `j+1`.
fn cell_parabola<T: Scalar>(nodes: &[T], v: &[T], j: usize) -> ([T; 3], [T; 3]) {
    let lo = if j == 0 { 0 } else { j - 1 };
    (
        [nodes[lo], nodes[lo + 1], nodes[lo + 2]],
        [v[lo], v[lo + 1], v[lo + 2]],
    )
}

/// `int_0^r s^{N-1} F(s) ds`: the radial weight is integrated exactly
/// against a piecewise-parabolic interpolant of `F` (a partial last cell
/// covers `r` between nodes).
pub fn moment_integral<T: Scalar>(f: &RadialProfile<T>, r: T) -> Result<T> {
    let nodes = f.grid().nodes();
    let radius = f.grid().radius();
    if !(r >= T::zero() && r <= radius) {
        return Err(Error::RadiusOutOfRange {
            r: r.to_f64().unwrap_or(f64::NAN),
            radius: radius.to_f64().unwrap_or(f64::NAN),
        });
    }
    let dim = f.grid().dim();
    let v = f.values();
    let mut acc = T::zero();
    for j in 0..nodes.len() - 1 {
        let (xs, fs) = cell_parabola(nodes, v, j);
        if nodes[j + 1] <= r {
            acc += weighted_quadratic_cell(dim, nodes[j], nodes[j + 1], xs, fs);
        } else {
            if r > nodes[j] {
                acc += weighted_quadratic_cell(dim, nodes[j], r, xs, fs);
            }
            break;
        }
    }
    Ok(acc)
}

/// Cumulative moment `M_j = int_0^{r_j} s^{N-1} F ds` at every node.
pub fn cumulative_moment<T: Scalar>(f: &RadialProfile<T>) -> Vec<T> {
    let nodes = f.grid().nodes();
    let dim = f.grid().dim();
    let v = f.values();
    let mut out = vec![T::zero(); nodes.len()];
    for j in 0..nodes.len() - 1 {
        let (xs, fs) = cell_parabola(nodes, v, j);
        out[j + 1] = out[j] + weighted_quadratic_cell(dim, nodes[j], nodes[j + 1], xs, fs);
    }
    out
}
