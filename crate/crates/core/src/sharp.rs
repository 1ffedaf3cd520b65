//! Sharp sup-norm and pointwise Lp bounds relating the gradient of a
//! radially symmetric vector field to its divergence.
//!
//! For `U = u(r) x/r` the gradient matrix is `u_r P + (u/r)(I - P)` with
//! `P` the radial rank-one projector, so its spectral norm at a point is
//! `max(|u_r|, |u/r|)`. The checks here verify
//!
//! * `(1/N) ||div U||_inf <= ||grad U||_inf <= (2 + 1/N) ||div U||_inf`,
//! * the pointwise bounds on `|u/r|` and `|u_r|` in terms of
//!   `||div U||_{L^p}` with the `r^{-N/p}` weight,
//! * the reconstruction `u(r) = r^{1-N} int_0^r s^{N-1} F ds` inverting the
//!   divergence.

use rand::Rng;
use std::sync::Arc;

use crate::error::Result;
use crate::radial::{
    cumulative_moment, divergence, gradient_components, RadialGrid, RadialProfile,
};
use crate::scalar::Scalar;

/// Absolute slack accepted before an estimate counts as violated.
pub const SAT_ABS_TOL: f64 = 1e-9;
/// Relative slack against the larger side.
pub const SAT_REL_TOL: f64 = 1e-7;

/// Outcome of a single one-sided estimate `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport<T> {
    pub lhs: T,
    pub rhs: T,
    /// `rhs - lhs`; nonnegative when the estimate holds exactly.
    pub margin: T,
    pub satisfied: bool,
    /// Radius at which the extreme on the left-hand side is attained.
    pub witness_radius: T,
}

impl<T: Scalar> EstimateReport<T> {
    fn new(lhs: T, rhs: T, witness_radius: T) -> Self {
        let margin = rhs - lhs;
        let tol = T::of(SAT_ABS_TOL) + T::of(SAT_REL_TOL) * lhs.abs().max(rhs.abs());
        Self {
            lhs,
            rhs,
            margin,
            satisfied: margin >= -tol,
            witness_radius,
        }
    }
}

fn argmax_abs<T: Scalar>(values: &[T]) -> (usize, T) {
    let mut idx = 0;
    let mut best = T::zero();
    for (j, v) in values.iter().enumerate() {
        if v.abs() > best {
            best = v.abs();
            idx = j;
        }
    }
    (idx, best)
}

/// Sup over nodes of the spectral norm of the gradient matrix,
/// i.e. `max_r max(|u_r|, |u/r|)`.
pub fn gradient_sup_norm<T: Scalar>(u: &RadialProfile<T>) -> Result<T> {
    let (ur, uor) = gradient_components(u)?;
    let mut sup = T::zero();
    for j in 0..ur.len() {
        sup = sup.max(ur[j].abs()).max(uor[j].abs());
    }
    Ok(sup)
}

/// Both sup-norm estimates: `(lower, upper)` where
/// lower is `(1/N)||div U||_inf <= ||grad U||_inf` and
/// upper is `||grad U||_inf <= (2 + 1/N)||div U||_inf`.
pub fn verify_linfty_bounds<T: Scalar>(
    u: &RadialProfile<T>,
) -> Result<(EstimateReport<T>, EstimateReport<T>)> {
    let n = T::of_usize(u.grid().dim() as usize);
    let f = divergence(u)?;
    let (ur, uor) = gradient_components(u)?;
    let grad: Vec<T> = ur
        .iter()
        .zip(&uor)
        .map(|(&a, &b)| a.abs().max(b.abs()))
        .collect();
    let (j_div, div_sup) = argmax_abs(f.values());
    let (j_grad, grad_sup) = argmax_abs(&grad);
    let r = u.grid().nodes();
    let lower = EstimateReport::new(div_sup / n, grad_sup, r[j_div]);
    let upper = EstimateReport::new(grad_sup, (T::two() + n.recip()) * div_sup, r[j_grad]);
    Ok((lower, upper))
}

/// Pointwise Lp bounds, checked at every node `r > 0`; returns the
/// worst-margin report for the `|u/r|` line and for the `|u_r|` line.
/// `p = infinity` is routed to [`verify_linfty_bounds`].
///
/// The `|u_r|` line keeps the local divergence pointwise:
/// `|u_r(r)| <= |div U(r)| + (N-1)(1/N)^{1-1/p} r^{-N/p} omega^{-1/p}
/// ||div U||_{L^p}`, which is what `u_r = div U - (N-1)u/r` together with
/// the moment bound on `|u/r|` gives. Replacing `|div U(r)|` by the Lp
/// norm is valid only at `p = infinity`: `u(x) = x^5(1-x)` violates that
/// stronger form at the wall already for `N = 2, p = 2`.
pub fn pointwise_lp_bound<T: Scalar>(
    u: &RadialProfile<T>,
    p: T,
) -> Result<(EstimateReport<T>, EstimateReport<T>)> {
    if p.is_infinite() && p > T::zero() {
        return verify_linfty_bounds(u);
    }
    let f = divergence(u)?;
    let norm_p = crate::radial::lp_norm(&f, p)?;
    let (ur, uor) = gradient_components(u)?;
    let grid = u.grid();
    let n = T::of_usize(grid.dim() as usize);
    let omega = grid.omega();
    let exp1 = T::one() - p.recip();
    let coeff = n.recip().powf(exp1) * omega.powf(-p.recip());
    let r = grid.nodes();

    // worst (smallest) margin per line, with the node where it occurs
    let mut worst = [(T::infinity(), T::zero(), T::zero(), T::zero()); 2];
    for j in 1..r.len() {
        let weight = coeff * r[j].powf(-n / p);
        let tail = (n - T::one()) * weight * norm_p;
        let checks = [
            (uor[j].abs(), weight * norm_p),
            (ur[j].abs(), f.values()[j].abs() + tail),
        ];
        for (side, (lhs, rhs)) in checks.into_iter().enumerate() {
            let margin = rhs - lhs;
            if margin < worst[side].0 {
                worst[side] = (margin, lhs, rhs, r[j]);
            }
        }
    }
    let [(_, l0, r0, w0), (_, l1, r1, w1)] = worst;
    Ok((
        EstimateReport::new(l0, r0, w0),
        EstimateReport::new(l1, r1, w1),
    ))
}

/// Inverse of the divergence: `u(r) = r^{1-N} int_0^r s^{N-1} F ds` with
/// `u(0) = 0`.
pub fn reconstruct_u_from_div<T: Scalar>(f: &RadialProfile<T>) -> RadialProfile<T> {
    let grid = f.grid().clone();
    let moments = cumulative_moment(f);
    let r = grid.nodes();
    let nm1 = (grid.dim() - 1) as i32;
    let mut u = vec![T::zero(); r.len()];
    for j in 1..r.len() {
        u[j] = moments[j] / r[j].powi(nm1);
    }
    RadialProfile::new(grid, u).expect("reconstructed profile is finite")
}

/// One random smooth test profile with `u(0) = u(R) = 0`: a sum of at most
/// five sine and polynomial modes. Mode `k` is weighted by `1/k^2`, the
/// spectral decay a smooth random profile carries; without the decay the
/// divergence of a draw can concentrate near the wall, where the pointwise
/// `|u_r|` estimate has no slack left.
pub fn random_smooth_profile<T: Scalar>(
    grid: &Arc<RadialGrid<T>>,
    rng: &mut impl Rng,
) -> RadialProfile<T> {
    let radius = grid.radius();
    loop {
        let n_modes = rng.gen_range(1..=5usize);
        let modes: Vec<(bool, i32, T)> = (0..n_modes)
            .map(|_| {
                let k = rng.gen_range(1..=5i32);
                let c = rng.gen_range(-1.0..1.0) / f64::from(k * k);
                (rng.gen_bool(0.5), k, T::of(c))
            })
            .collect();
        let pi = T::of(std::f64::consts::PI);
        let profile = RadialProfile::from_fn(grid.clone(), |r| {
            let x = r / radius;
            let mut acc = T::zero();
            for &(is_sine, k, c) in &modes {
                let basis = if is_sine {
                    (pi * T::of(k as f64) * x).sin()
                } else {
                    x.powi(k) * (T::one() - x)
                };
                acc += c * basis;
            }
            acc
        })
        .expect("corpus profile is finite");
        if profile.max_abs() > T::of(1e-4) {
            return profile;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::RadialGrid;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid(k: usize, n: u32) -> Arc<RadialGrid<f64>> {
        Arc::new(RadialGrid::uniform(k, 1.0, n).unwrap())
    }

    #[test]
    fn gradient_sup_norm_examples() {
        let g = grid(64, 3);
        let lin = RadialProfile::from_fn(g.clone(), |r| r).unwrap();
        assert_relative_eq!(gradient_sup_norm(&lin).unwrap(), 1.0, epsilon = 1e-12);
        let zero = RadialProfile::from_fn(g.clone(), |_| 0.0).unwrap();
        assert_eq!(gradient_sup_norm(&zero).unwrap(), 0.0);
        // u = r (1 - r): dense-sampling oracle of max(|1 - 2r|, |1 - r|)
        // attains 1 at r = 0.
        let oracle = (0..=1_000_000)
            .map(|i| {
                let r = i as f64 / 1e6;
                (1.0 - 2.0 * r).abs().max(1.0 - r)
            })
            .fold(0.0_f64, f64::max);
        assert_relative_eq!(oracle, 1.0, epsilon = 1e-12);
        let bump = RadialProfile::from_fn(g, |r| r * (1.0 - r)).unwrap();
        assert_relative_eq!(gradient_sup_norm(&bump).unwrap(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn linear_field_saturates_lower_bound() {
        for n in [2u32, 3] {
            let u = RadialProfile::from_fn(grid(64, n), |r| r).unwrap();
            let (lower, upper) = verify_linfty_bounds(&u).unwrap();
            assert!(lower.satisfied && upper.satisfied);
            // ratio grad/div = 1/N exactly
            assert_relative_eq!(lower.lhs, lower.rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_field_trivially_satisfied() {
        let u = RadialProfile::from_fn(grid(32, 2), |_| 0.0).unwrap();
        let (lower, upper) = verify_linfty_bounds(&u).unwrap();
        assert!(lower.satisfied && upper.satisfied);
        assert_eq!(lower.lhs, 0.0);
        assert_eq!(upper.lhs, 0.0);
    }

    #[test]
    fn corpus_satisfies_both_bounds_quick() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2u32, 3] {
            let g = grid(400, n);
            for _ in 0..100 {
                let u = random_smooth_profile(&g, &mut rng);
                let (lower, upper) = verify_linfty_bounds(&u).unwrap();
                assert!(lower.satisfied, "lower failed: {lower:?}");
                assert!(upper.satisfied, "upper failed: {upper:?}");
            }
        }
    }

    #[test]
    fn pointwise_bound_equality_at_wall() {
        // u = r: at r = R the |u/r| line of the bound is an equality.
        for p in [1.0, 2.0, 6.0] {
            let u = RadialProfile::from_fn(grid(128, 3), |r| r).unwrap();
            let (uor_rep, ur_rep) = pointwise_lp_bound(&u, p).unwrap();
            assert!(uor_rep.satisfied && ur_rep.satisfied);
            assert_relative_eq!(uor_rep.lhs / uor_rep.rhs, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn pointwise_routes_infinity() {
        let u = RadialProfile::from_fn(grid(64, 3), |r| r).unwrap();
        let (a, _) = pointwise_lp_bound(&u, f64::INFINITY).unwrap();
        let (lower, _) = verify_linfty_bounds(&u).unwrap();
        assert_eq!(a.lhs, lower.lhs);
    }

    #[test]
    fn reconstruct_inverts_constant_divergence() {
        let g = grid(64, 3);
        let f = RadialProfile::from_fn(g.clone(), |_| 3.0).unwrap();
        let u = reconstruct_u_from_div(&f);
        for (&r, &v) in g.nodes().iter().zip(u.values()) {
            assert_relative_eq!(v, r, epsilon = 1e-13);
        }
        let z = RadialProfile::from_fn(g, |_| 0.0).unwrap();
        assert!(reconstruct_u_from_div(&z)
            .values()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn round_trip_recovers_smooth_profile() {
        let g = grid(256, 3);
        let u0 = RadialProfile::from_fn(g, |r| r * (1.0 - r) * (1.0 + 0.3 * r)).unwrap();
        let f = divergence(&u0).unwrap();
        let u1 = reconstruct_u_from_div(&f);
        let err = u0
            .values()
            .iter()
            .zip(u1.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "round-trip error {err}");
    }

    #[test]
    fn scaling_leaves_ratios_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = grid(200, 3);
        let u = random_smooth_profile(&g, &mut rng);
        let scaled = RadialProfile::new(g, u.values().iter().map(|&v| v * 37.5).collect()).unwrap();
        let (l0, u0) = verify_linfty_bounds(&u).unwrap();
        let (l1, u1) = verify_linfty_bounds(&scaled).unwrap();
        assert_relative_eq!(l0.lhs / l0.rhs, l1.lhs / l1.rhs, epsilon = 1e-12);
        assert_relative_eq!(u0.lhs / u0.rhs, u1.lhs / u1.rhs, epsilon = 1e-12);
    }
}
