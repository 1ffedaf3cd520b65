//! Twin-run harness for the discrete Gronwall contraction behind
//! uniqueness.
//!
//! Two solutions of the same system are advanced with an identical time
//! step sequence; their differences `Lambda = v1 - v2` (cells) and
//! `Theta = u1 - u2` (nodes) are recorded per step together with the
//! dissipation norm `||(r^{N-1} Theta)_y||^2` and the measured Gronwall
//! rate `lambda = 1 + ||(r^{N-1} u2)_y||_inf^2`. The check then fits the
//! smallest constant `C` for which the one-step inequality
//! `y_{k+1} + eps dt d_{k+1} <= y_k (1 + dt C lambda_k)` holds with
//! `y = ||Lambda||^2 + ||Theta||^2`.

use crate::density::Trajectory;
use crate::error::{Error, Result};
use crate::radial::RadialProfile;
use crate::scalar::Scalar;
use crate::solver::{init, GasParams, LagrangianState, Splitting};

/// Per-step difference norms of a twin run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffRecord<T> {
    pub t: T,
    /// `||Lambda||^2_{L^2(dy)}` over cells.
    pub lambda_l2_sq: T,
    /// `||Theta||^2_{L^2(dy)}` over nodes.
    pub theta_l2_sq: T,
    /// `||(r^{N-1} Theta)_y||^2_{L^2(dy)}`, radii from the primary run.
    pub flux_theta_l2_sq: T,
    /// Gronwall rate driver `1 + ||(r^{N-1} u2)_y||_inf^2` measured from
    /// the perturbed run.
    pub gronwall_rhs: T,
}

/// Both trajectories plus the per-step difference records.
pub type TwinRunResult<T> = (Trajectory<T>, Trajectory<T>, Vec<DiffRecord<T>>);

/// Everything the twin run needs besides the perturbation amplitude.
pub struct TwinConfig<'a, T> {
    pub rho0: &'a RadialProfile<T>,
    pub u0: &'a RadialProfile<T>,
    pub gas: GasParams<T>,
    pub cells: usize,
    pub splitting: Splitting,
    pub cfl: T,
    pub t_end: T,
}

/// Advance two runs side by side: the primary uses the given data, the
/// second multiplies the initial density by `1 + delta sin^2(pi r / R)`.
/// Both runs share one dt sequence (the minimum of the two stability
/// limits each step), so `delta = 0` reproduces bit-identical states.
pub fn twin_run<T: Scalar>(config: &TwinConfig<'_, T>, delta: T) -> Result<TwinRunResult<T>> {
    let radius = config.rho0.grid().radius();
    let pi = T::of(std::f64::consts::PI);
    let rho0_perturbed = RadialProfile::new(
        config.rho0.grid().clone(),
        config
            .rho0
            .values()
            .iter()
            .zip(config.rho0.grid().nodes())
            .map(|(&rho, &r)| {
                let s = (pi * r / radius).sin();
                rho * (T::one() + delta * s * s)
            })
            .collect(),
    )?;

    let abort = |run: u8| {
        move |e: Error| Error::TwinAborted {
            run,
            source: Box::new(e),
        }
    };
    let s1 = init(
        config.rho0,
        config.u0,
        config.gas,
        config.cells,
        config.splitting,
    )
    .map_err(abort(1))?;
    let s2 = init(
        &rho0_perturbed,
        config.u0,
        config.gas,
        config.cells,
        config.splitting,
    )
    .map_err(abort(2))?;

    let mut traj1 = Trajectory::new(s1);
    let mut traj2 = Trajectory::new(s2);
    let mut records = vec![diff_record(traj1.last_state(), traj2.last_state())];

    let mut t = T::zero();
    while t < config.t_end {
        let dt1 = traj1.last_state().stable_dt(config.cfl);
        let dt2 = traj2.last_state().stable_dt(config.cfl);
        let dt = dt1.min(dt2).min(config.t_end - t);
        traj1.advance(dt).map_err(abort(1))?;
        traj2.advance(dt).map_err(abort(2))?;
        records.push(diff_record(traj1.last_state(), traj2.last_state()));
        t += dt;
    }
    Ok((traj1, traj2, records))
}

fn diff_record<T: Scalar>(s1: &LagrangianState<T>, s2: &LagrangianState<T>) -> DiffRecord<T> {
    let dm = s1.dm();
    let cells = s1.cells();
    let dim_exp = s1.dim() as i32 - 1;

    let mut lambda_sq = T::zero();
    for c in 0..cells {
        let l = s1.v()[c] - s2.v()[c];
        lambda_sq += l * l;
    }
    lambda_sq *= dm;

    let mut theta_sq = T::zero();
    let theta: Vec<T> = s1.u().iter().zip(s2.u()).map(|(&a, &b)| a - b).collect();
    for th in theta.iter().take(cells).skip(1) {
        theta_sq += *th * *th;
    }
    theta_sq *= dm;

    let w1: Vec<T> = s1.r().iter().map(|&r| r.powi(dim_exp)).collect();
    let mut flux_sq = T::zero();
    for c in 0..cells {
        let d = (w1[c + 1] * theta[c + 1] - w1[c] * theta[c]) / dm;
        flux_sq += d * d;
    }
    flux_sq *= dm;

    let w2: Vec<T> = s2.r().iter().map(|&r| r.powi(dim_exp)).collect();
    let mut rate = T::zero();
    for c in 0..cells {
        let d = (w2[c + 1] * s2.u()[c + 1] - w2[c] * s2.u()[c]) / dm;
        rate = rate.max(d.abs());
    }

    DiffRecord {
        t: s1.t(),
        lambda_l2_sq: lambda_sq,
        theta_l2_sq: theta_sq,
        flux_theta_l2_sq: flux_sq,
        gronwall_rhs: T::one() + rate * rate,
    }
}

/// Result of fitting the discrete Gronwall inequality to a record sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GronwallReport<T> {
    /// Smallest constant making every one-step inequality hold
    /// (infinite when a zero state is followed by a nonzero one).
    pub c_fit: T,
    /// Whether the candidate constant passed at every step.
    pub passes: bool,
    /// `y_0 * exp(sum dt c_fit lambda_k)`: the implied terminal bound.
    pub implied_bound: T,
    /// Final difference norm `y_K`.
    pub y_final: T,
    /// True when the records are identically zero (the contraction is
    /// trivially verified).
    pub all_zero: bool,
}

/// Largest dissipation weight `eps` the estimate can absorb:
/// `kappa / (2 v_max)`.
pub fn max_epsilon<T: Scalar>(kappa: T, v_max: T) -> T {
    kappa / (T::two() * v_max)
}

/// Verify the discrete inequality
/// `y_{k+1} + eps dt d_{k+1} <= y_k (1 + dt C lambda_k)` and report the
/// smallest `C` that makes it hold together with the implied bound.
pub fn gronwall_check<T: Scalar>(
    records: &[DiffRecord<T>],
    eps: T,
    c_candidate: T,
) -> Result<GronwallReport<T>> {
    if records.len() < 2 {
        return Err(Error::TooShort(format!(
            "{} records; need at least 2",
            records.len()
        )));
    }
    if !(eps >= T::zero()) {
        return Err(Error::InvalidConfig("eps must be nonnegative".into()));
    }
    let y: Vec<T> = records
        .iter()
        .map(|r| r.lambda_l2_sq + r.theta_l2_sq)
        .collect();
    let mut c_fit = T::zero();
    let mut all_zero = true;
    let mut exponent = T::zero();
    for k in 0..records.len() - 1 {
        let dt = records[k + 1].t - records[k].t;
        let lhs = y[k + 1] + eps * dt * records[k + 1].flux_theta_l2_sq;
        if lhs > T::zero() {
            all_zero = false;
        }
        if y[k] == T::zero() {
            if lhs > T::zero() {
                c_fit = T::infinity();
            }
            continue;
        }
        let needed = (lhs / y[k] - T::one()) / (dt * records[k].gronwall_rhs);
        c_fit = c_fit.max(needed);
        exponent += dt * records[k].gronwall_rhs;
    }
    let implied_bound = y[0] * (c_fit * exponent).exp();
    Ok(GronwallReport {
        c_fit,
        passes: c_fit <= c_candidate,
        implied_bound,
        y_final: *y.last().unwrap(),
        all_zero,
    })
}

/// Pointwise Lipschitz check on the pressure law: `|p1 - p2| <= C |Lambda|`
/// with the analytic constant `C = a gamma v_min^{-gamma-1}` from the mean
/// value theorem on the measured volume range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzReport<T> {
    pub constant: T,
    pub worst_margin: T,
    pub witness_cell: usize,
    pub satisfied: bool,
}

pub fn pressure_lipschitz_check<T: Scalar>(
    s1: &LagrangianState<T>,
    s2: &LagrangianState<T>,
) -> Result<LipschitzReport<T>> {
    if s1.gas() != s2.gas() || s1.cells() != s2.cells() {
        return Err(Error::InvalidConfig(
            "states must share gas parameters and cell count".into(),
        ));
    }
    let gas = s1.gas();
    let v_min = s1
        .v()
        .iter()
        .chain(s2.v())
        .fold(T::infinity(), |m, &v| m.min(v));
    let constant = gas.a * gas.gamma * v_min.powf(-gas.gamma - T::one());
    let p1 = s1.pressure();
    let p2 = s2.pressure();
    let p_scale = p1.iter().chain(&p2).fold(T::zero(), |m, &p| m.max(p.abs()));
    let tol = T::epsilon() * T::of(64.0) * p_scale;
    let mut worst_margin = T::infinity();
    let mut witness_cell = 0;
    for c in 0..s1.cells() {
        let lhs = (p1[c] - p2[c]).abs();
        let rhs = constant * (s1.v()[c] - s2.v()[c]).abs();
        let margin = rhs - lhs;
        if margin < worst_margin {
            worst_margin = margin;
            witness_cell = c;
        }
    }
    Ok(LipschitzReport {
        constant,
        worst_margin,
        witness_cell,
        satisfied: worst_margin >= -tol,
    })
}
