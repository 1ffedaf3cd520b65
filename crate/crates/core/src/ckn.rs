//! Weighted interpolation inequality of Caffarelli-Kohn-Nirenberg type:
//! exponent feasibility checking and empirical ratio evaluation.
//!
//! The inequality `|| |x|^gamma u ||_{L^r} <= C || |x|^alpha Du ||_{L^p}^a
//! || |x|^beta u ||_{L^q}^{1-a}` holds for compactly supported smooth `u`
//! iff a dimensional balance, two conditions on `alpha - sigma`, and a set
//! of range/positivity constraints hold. Feasibility supports any
//! dimension; empirical testing is one-dimensional, matching the radial
//! use of the inequality in the effective-flux estimate.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{derivative_weights, trapezoid};
use crate::scalar::Scalar;

/// Tolerance on the equality constraints between exponents.
pub const EQ_TOL: f64 = 1e-12;

/// Identifiers for the individual feasibility conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// The dimensional balance between the three weighted norms.
    Balance,
    /// `0 <= alpha - sigma` (active when `a > 0`).
    SigmaLow,
    /// `alpha - sigma <= 1` (active when `a > 0` and the derivative norm
    /// scales exactly like the target norm).
    SigmaHigh,
    /// Exponent ranges, positivity, and the `gamma = a sigma + (1-a) beta`
    /// link.
    Constraints,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Condition::Balance => "dimensional-balance",
            Condition::SigmaLow => "sigma-lower",
            Condition::SigmaHigh => "sigma-upper",
            Condition::Constraints => "range-constraints",
        };
        f.write_str(s)
    }
}

/// The nine exponents of the inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CknParams<T> {
    pub n: u32,
    pub p: T,
    pub q: T,
    pub r: T,
    pub a: T,
    pub alpha: T,
    pub beta: T,
    pub sigma: T,
    pub gamma: T,
}

impl<T: Scalar> CknParams<T> {
    /// The one-dimensional instance used to interpolate the effective
    /// viscous flux: `n=1, gamma=2/3, r=6, alpha=beta=1, sigma=1/2,
    /// p=q=2, a=2/3`.
    pub fn flux_interpolation_instance() -> Self {
        Self {
            n: 1,
            p: T::two(),
            q: T::two(),
            r: T::of(6.0),
            a: T::of(2.0) / T::of(3.0),
            alpha: T::one(),
            beta: T::one(),
            sigma: T::half(),
            gamma: T::of(2.0) / T::of(3.0),
        }
    }
}

/// Which conditions hold; `feasible` iff none is violated.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityVerdict {
    pub feasible: bool,
    pub violated: Vec<Condition>,
}

/// Check all feasibility conditions with tolerance [`EQ_TOL`] on the
/// equalities. The lower condition on `alpha - sigma` is taken non-strict.
pub fn feasibility<T: Scalar>(params: &CknParams<T>) -> FeasibilityVerdict {
    let tol = T::of(EQ_TOL);
    let n = T::of_usize(params.n as usize);
    let CknParams {
        p,
        q,
        r,
        a,
        alpha,
        beta,
        sigma,
        gamma,
        ..
    } = *params;
    let mut violated = Vec::new();

    let finite = [p, q, r, a, alpha, beta, sigma, gamma]
        .iter()
        .all(|v| v.is_finite());
    let dual_p = p.recip() + (alpha - T::one()) / n;
    let dual_q = q.recip() + beta / n;
    let dual_r = r.recip() + gamma / n;

    let mut constraints_ok = finite
        && p >= T::one() - tol
        && q >= T::one() - tol
        && r > T::zero()
        && a >= -tol
        && a <= T::one() + tol;
    if constraints_ok {
        constraints_ok = dual_p > T::zero()
            && dual_q > T::zero()
            && dual_r > T::zero()
            && (gamma - (a * sigma + (T::one() - a) * beta)).abs() <= tol;
    }
    if !constraints_ok {
        violated.push(Condition::Constraints);
    }

    if finite {
        let balance = dual_r - (a * dual_p + (T::one() - a) * dual_q);
        if balance.abs() > tol {
            violated.push(Condition::Balance);
        }
        if a > tol {
            if alpha - sigma < -tol {
                violated.push(Condition::SigmaLow);
            }
            if (dual_p - dual_r).abs() <= tol && alpha - sigma > T::one() + tol {
                violated.push(Condition::SigmaHigh);
            }
        }
    }

    FeasibilityVerdict {
        feasible: violated.is_empty(),
        violated,
    }
}

/// A sampled test function on a strictly increasing grid over `(0, L]`.
#[derive(Debug, Clone)]
pub struct TestFunction<T> {
    x: Vec<T>,
    u: Vec<T>,
}

impl<T: Scalar> TestFunction<T> {
    pub fn new(x: Vec<T>, u: Vec<T>) -> Result<Self> {
        if x.len() < 8 || x.len() != u.len() {
            return Err(Error::InvalidTestFunction(
                "need matching grids of at least 8 nodes".into(),
            ));
        }
        if !(x[0] > T::zero()) {
            return Err(Error::InvalidTestFunction(
                "grid must start strictly above 0".into(),
            ));
        }
        for w in x.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidTestFunction(
                    "grid must be strictly increasing".into(),
                ));
            }
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTestFunction("values must be finite".into()));
        }
        Ok(Self { x, u })
    }

    pub fn sample(x: Vec<T>, f: impl Fn(T) -> T) -> Result<Self> {
        let u = x.iter().map(|&xi| f(xi)).collect();
        Self::new(x, u)
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn values(&self) -> &[T] {
        &self.u
    }

    fn max_abs(&self) -> T {
        self.u.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Compact support within the grid: the tails must vanish relative to
    /// the peak.
    fn check_support(&self) -> Result<()> {
        let tol = T::of(1e-10) * self.max_abs();
        let k = self.u.len();
        let ends = [0, 1, k - 2, k - 1];
        if ends.iter().any(|&i| self.u[i].abs() > tol) {
            return Err(Error::InvalidTestFunction(
                "test function must vanish near both grid ends".into(),
            ));
        }
        Ok(())
    }

    fn derivative(&self) -> Vec<T> {
        let k = self.x.len() - 1;
        let mut d = vec![T::zero(); k + 1];
        let stencil = |lo: usize, hi: usize, x0: T| -> T {
            let w = derivative_weights(&self.x[lo..=hi], x0);
            w.iter()
                .zip(&self.u[lo..=hi])
                .map(|(&wi, &ui)| wi * ui)
                .sum()
        };
        d[0] = stencil(0, 2, self.x[0]);
        d[k] = stencil(k - 2, k, self.x[k]);
        for (j, dj) in d.iter_mut().enumerate().take(k).skip(1) {
            *dj = stencil(j - 1, j + 1, self.x[j]);
        }
        d
    }
}

/// `(int |x^w f|^s dx)^{1/s}` by composite trapezoid.
fn weighted_norm<T: Scalar>(x: &[T], f: &[T], w: T, s: T) -> T {
    let g: Vec<T> = x
        .iter()
        .zip(f)
        .map(|(&xi, &fi)| (xi.powf(w) * fi).abs().powf(s))
        .collect();
    trapezoid(x, &g).powf(s.recip())
}

/// Left-hand side over right-hand side of the inequality for one sampled
/// test function: a lower estimate of the best constant `C`.
pub fn empirical_ratio<T: Scalar>(params: &CknParams<T>, tf: &TestFunction<T>) -> Result<T> {
    let verdict = feasibility(params);
    if !verdict.feasible {
        return Err(Error::InfeasibleCkn(verdict.violated));
    }
    if params.n != 1 {
        return Err(Error::InvalidConfig(
            "empirical ratio evaluation supports n = 1 only".into(),
        ));
    }
    tf.check_support()?;
    if tf.max_abs() == T::zero() {
        return Err(Error::UndefinedRatio(
            "test function is identically zero".into(),
        ));
    }
    let lhs = weighted_norm(&tf.x, &tf.u, params.gamma, params.r);
    let a = params.a;
    let mut rhs = T::one();
    if a > T::zero() {
        let du = tf.derivative();
        let grad_norm = weighted_norm(&tf.x, &du, params.alpha, params.p);
        if grad_norm == T::zero() {
            return Err(Error::UndefinedRatio("derivative norm vanishes".into()));
        }
        rhs *= grad_norm.powf(a);
    }
    if a < T::one() {
        let u_norm = weighted_norm(&tf.x, &tf.u, params.beta, params.q);
        if u_norm == T::zero() {
            return Err(Error::UndefinedRatio(
                "weighted function norm vanishes".into(),
            ));
        }
        rhs *= u_norm.powf(T::one() - a);
    }
    Ok(lhs / rhs)
}

/// Max of [`empirical_ratio`] over a corpus, skipping members with
/// undefined ratios; errors if every member is undefined.
pub fn sup_ratio_over_corpus<T: Scalar>(
    params: &CknParams<T>,
    corpus: &[TestFunction<T>],
) -> Result<T> {
    let mut best: Option<T> = None;
    for tf in corpus {
        match empirical_ratio(params, tf) {
            Ok(v) => best = Some(best.map_or(v, |b| b.max(v))),
            Err(Error::UndefinedRatio(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    best.ok_or(Error::EmptyCorpus)
}

/// Analytic description of a compactly supported bump/polynomial test
/// function; kept symbolic so exact dilates can be sampled.
#[derive(Debug, Clone)]
pub struct BumpSpec<T> {
    terms: Vec<BumpTerm<T>>,
}

#[derive(Debug, Clone, Copy)]
struct BumpTerm<T> {
    amp: T,
    lo: T,
    hi: T,
    gauss_width: T,
    gauss_center: T,
    poly: [T; 3],
}

impl<T: Scalar> BumpSpec<T> {
    /// Random combination of at most two bump terms supported inside
    /// `(support.0, support.1)`.
    pub fn random(rng: &mut impl Rng, support: (T, T)) -> Self {
        let (s0, s1) = support;
        let span = s1 - s0;
        let n_terms = rng.gen_range(1..=2usize);
        let terms = (0..n_terms)
            .map(|_| {
                let lo = s0 + span * T::of(rng.gen_range(0.02..0.4));
                let hi = lo + span * T::of(rng.gen_range(0.2..0.55));
                let hi = hi.min(s1 - span * T::of(0.02));
                BumpTerm {
                    amp: T::of(rng.gen_range(-2.0..2.0)),
                    lo,
                    hi,
                    gauss_width: T::of(rng.gen_range(0.0..30.0)),
                    gauss_center: lo + (hi - lo) * T::of(rng.gen_range(0.2..0.8)),
                    poly: [
                        T::of(rng.gen_range(0.2..1.0)),
                        T::of(rng.gen_range(-1.0..1.0)),
                        T::of(rng.gen_range(-1.0..1.0)),
                    ],
                }
            })
            .collect();
        Self { terms }
    }

    pub fn eval(&self, x: T) -> T {
        let mut acc = T::zero();
        for t in &self.terms {
            if x <= t.lo || x >= t.hi {
                continue;
            }
            let shape = ((x - t.lo) * (t.hi - x)).powi(3);
            let gauss = (-t.gauss_width * (x - t.gauss_center) * (x - t.gauss_center)).exp();
            let poly = t.poly[0] + t.poly[1] * x + t.poly[2] * x * x;
            acc += t.amp * shape * gauss * poly;
        }
        acc
    }

    /// The exact dilate `x -> u(lambda x)`.
    pub fn dilate(&self, lambda: T) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| BumpTerm {
                amp: t.amp * lambda.powi(6),
                lo: t.lo / lambda,
                hi: t.hi / lambda,
                gauss_width: t.gauss_width * lambda * lambda,
                gauss_center: t.gauss_center / lambda,
                poly: [t.poly[0], t.poly[1] * lambda, t.poly[2] * lambda * lambda],
            })
            .collect();
        Self { terms }
    }
}
