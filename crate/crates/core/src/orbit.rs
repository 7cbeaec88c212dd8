//! Orbit-norm dynamics `n -> ln ||T^n f||_p`.
//!
//! The iterate is renormalized after every step, so traces of operators like
//! `I + V` (growth `e^(2 sqrt n)`) or nilpotent shifts are computed without
//! overflow or underflow. Trends and fits work on `Lambda_n - Lambda_0`,
//! which makes them invariant under scaling of `f`.

use crate::conv::Path;
use crate::error::{Error, Result};
use crate::grid::{norm_of, FunctionSpec, GridFunction, NormKind};
use crate::kernel::{Kernel, KernelApplier};
use crate::measure::Measure;
use crate::scalar::{fmt_f64, C64, ZERO};
use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::atomic::{AtomicBool, Ordering};

/// The sequence `Lambda_n = ln ||T^n f||_p` with the last normalized iterate.
#[derive(Debug, Clone)]
pub struct OrbitTrace {
    pub p: NormKind,
    pub log_norms: Vec<f64>,
    pub state: GridFunction,
}

impl OrbitTrace {
    pub fn n_max(&self) -> usize {
        self.log_norms.len() - 1
    }

    /// `(Lambda_n - Lambda_0) / n^(1/(r+1))`; entry 0 is NaN.
    pub fn trend(&self, r: f64) -> Vec<f64> {
        trend_of(&self.log_norms, r)
    }

    /// Writes `n,log_norm,trend` rows.
    pub fn write_csv<W: Write>(&self, mut w: W, r: f64) -> io::Result<()> {
        writeln!(w, "n,log_norm,trend")?;
        for (n, (l, t)) in self.log_norms.iter().zip(self.trend(r)).enumerate() {
            writeln!(w, "{n},{},{}", fmt_f64(*l), fmt_f64(t))?;
        }
        Ok(())
    }
}

pub(crate) fn trend_of(log_norms: &[f64], r: f64) -> Vec<f64> {
    let base = log_norms[0];
    let e = 1.0 / (r + 1.0);
    log_norms
        .iter()
        .enumerate()
        .map(|(n, &l)| {
            if n == 0 {
                f64::NAN
            } else {
                (l - base) / (n as f64).powf(e)
            }
        })
        .collect()
}

pub fn iterate_orbit(
    t: &Kernel,
    f: &GridFunction,
    p: NormKind,
    n_max: usize,
) -> Result<OrbitTrace> {
    iterate_orbit_cancellable(t, f, p, n_max, &AtomicBool::new(false))
}

/// Renormalized power iteration; stops producing finite values once the
/// iterate is exactly zero.
pub fn iterate_orbit_cancellable(
    t: &Kernel,
    f: &GridFunction,
    p: NormKind,
    n_max: usize,
    cancel: &AtomicBool,
) -> Result<OrbitTrace> {
    if t.len() != f.len() {
        return Err(Error::SizeMismatch {
            left: t.len(),
            right: f.len(),
        });
    }
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let f_norm = f.norm(p);
    if f_norm == 0.0 {
        return Err(Error::InvalidArgument("orbit of the zero function".into()));
    }
    let mut applier = KernelApplier::new(t, Path::Accurate);
    let mut state: Vec<C64> = f.values().iter().map(|z| z / f_norm).collect();
    let mut log_norms = Vec::with_capacity(n_max + 1);
    let mut lambda = f_norm.ln();
    log_norms.push(lambda);
    let mut dead = false;
    for step in 0..n_max {
        if step % 64 == 0 && cancel.load(Ordering::Relaxed) {
            return Err(Error::Cancelled);
        }
        if dead {
            log_norms.push(f64::NEG_INFINITY);
            continue;
        }
        let (out, ls) = applier.apply_unscaled(&state);
        let nu = norm_of(&out, p);
        if nu == 0.0 {
            dead = true;
            state.fill(ZERO);
            log_norms.push(f64::NEG_INFINITY);
            continue;
        }
        if !nu.is_finite() {
            return Err(Error::NonFinite(format!("orbit step {}", step + 1)));
        }
        lambda += nu.ln() + ls;
        log_norms.push(lambda);
        state = out.into_iter().map(|z| z / nu).collect();
    }
    Ok(OrbitTrace {
        p,
        log_norms,
        state: GridFunction::from_values_unchecked(state),
    })
}

/// Parameters of the growth law for `T = I + V^r (b e^(i alpha) I + W)` with
/// `s = inf supp f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthSpec {
    pub r: f64,
    pub b: f64,
    pub alpha: f64,
    pub s: f64,
}

impl GrowthSpec {
    pub fn new(r: f64, b: f64, alpha: f64, s: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) || !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "growth spec needs r > 0 and b > 0 (got r={r}, b={b})"
            )));
        }
        if !(-PI..=PI).contains(&alpha) {
            return Err(Error::InvalidArgument(format!(
                "alpha {alpha} outside [-pi, pi]"
            )));
        }
        if !(0.0..1.0).contains(&s) {
            return Err(Error::InvalidArgument(format!("s {s} outside [0, 1)")));
        }
        Ok(GrowthSpec { r, b, alpha, s })
    }
}

fn cos_plus(t: f64) -> f64 {
    t.cos().max(0.0)
}

/// `lim ln||T^n f||_p / n^(1/(r+1))`.
pub fn predicted_growth(g: &GrowthSpec) -> f64 {
    let q = g.r + 1.0;
    q * g.b.powf(1.0 / q) * ((1.0 - g.s) / g.r).powf(g.r / q) * cos_plus(g.alpha / q)
}

/// `lim ln||T^n||_p / n^(1/(r+1))`, independent of `f`.
pub fn predicted_norm_growth(g: &GrowthSpec) -> f64 {
    let q = g.r + 1.0;
    q * g.b.powf(1.0 / q) * cos_plus(g.alpha / q)
}

#[derive(Debug, Clone)]
pub struct GrowthEstimate {
    /// `2 trend(n_max) - trend(n_max / 2)`.
    pub estimate: f64,
    /// `(Lambda_n - Lambda_0) / n^(1/(r+1))`; entry 0 is NaN.
    pub trend: Vec<f64>,
}

pub fn growth_exponent(trace: &OrbitTrace, r: f64) -> Result<GrowthEstimate> {
    growth_exponent_of(&trace.log_norms, r)
}

/// Growth exponent of any log-magnitude sequence indexed from `n = 0`.
pub fn growth_exponent_of(log_norms: &[f64], r: f64) -> Result<GrowthEstimate> {
    if log_norms.len() < 101 {
        return Err(Error::InvalidArgument(format!(
            "growth exponent needs n_max >= 100 (got {})",
            log_norms.len().saturating_sub(1)
        )));
    }
    if log_norms.iter().any(|l| !l.is_finite()) {
        return Err(Error::RefusedFit("trace contains -inf".into()));
    }
    let trend = trend_of(log_norms, r);
    let n = log_norms.len() - 1;
    let estimate = 2.0 * trend[n] - trend[n / 2];
    Ok(GrowthEstimate { estimate, trend })
}

/// Fit of `Lambda_0 - Lambda_n ~ C n^beta` over the second half of a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorFit {
    pub beta: f64,
    pub c: f64,
    /// Decay faster than `e^(-n^(1/2))`, which no orbit of `I - cV` allows.
    pub violates_floor: bool,
}

pub fn decay_floor_fit(trace: &OrbitTrace) -> Result<FloorFit> {
    decay_floor_fit_of(&trace.log_norms)
}

pub fn decay_floor_fit_of(log_norms: &[f64]) -> Result<FloorFit> {
    let n_max = log_norms.len().saturating_sub(1);
    if n_max < 4 {
        return Err(Error::RefusedFit("trace too short".into()));
    }
    let start = (n_max / 2).max(1);
    let tail = &log_norms[start..];
    if tail.iter().any(|l| !l.is_finite()) {
        return Err(Error::RefusedFit("tail contains -inf".into()));
    }
    if tail[tail.len() - 1] >= tail[0] {
        return Err(Error::RefusedFit("tail is not decreasing".into()));
    }
    let base = log_norms[0];
    let mut pts = Vec::with_capacity(tail.len());
    for (i, &l) in tail.iter().enumerate() {
        let d = base - l;
        if d <= 0.0 {
            return Err(Error::RefusedFit(format!(
                "orbit is above its starting norm at n = {}",
                start + i
            )));
        }
        pts.push((((start + i) as f64).ln(), d.ln()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let beta = sxy / sxx;
    let c = (my - beta * mx).exp();
    Ok(FloorFit {
        beta,
        c,
        violates_floor: beta > 0.5,
    })
}

/// Kernel of `R_a = I + C_{nu_a}` for a polynomial density `a` on [0,1).
pub fn resolvent_kernel(a: &FunctionSpec, n: usize) -> Result<Kernel> {
    let coeffs = match a {
        FunctionSpec::Poly { coeffs } => coeffs.clone(),
        _ => {
            return Err(Error::InvalidArgument(
                "R_a needs a polynomial density a".into(),
            ))
        }
    };
    Measure::dirac()
        .add(&Measure::polynomial_complex(coeffs, 0.0, 1.0))
        .to_kernel(n)
}

fn free_term(a: &FunctionSpec) -> Option<C64> {
    match a {
        FunctionSpec::Poly { coeffs } => Some(coeffs.first().copied().unwrap_or(ZERO)),
        _ => None,
    }
}

/// `V^k 1`, the default vector for the shrinking regime.
pub fn shrink_seed(n: usize, k: usize) -> Result<GridFunction> {
    let v = Kernel::volterra(n);
    let mut f = GridFunction::constant(1.0, n)?;
    for _ in 0..k {
        f = v.apply(&f)?;
    }
    Ok(f)
}

#[derive(Debug, Clone)]
pub struct IrregularRegimes {
    /// `||R_{a+}^n f||_1`, growing.
    pub grow: OrbitTrace,
    /// `||R_{a-}^n f||_inf`, shrinking.
    pub shrink: OrbitTrace,
}

/// The two norm regimes behind irregular vectors: free term `+1` makes
/// `||R_a^n f||_1` blow up, free term `-1` (with `f` in the range of `V`)
/// makes `||R_a^n f||_inf` decay.
pub fn irregular_regimes(
    a_plus: &FunctionSpec,
    a_minus: &FunctionSpec,
    f: &GridFunction,
    n_max: usize,
) -> Result<IrregularRegimes> {
    let check = |a: &FunctionSpec, want: f64, name: &str| -> Result<()> {
        match free_term(a) {
            Some(c) if (c - want).norm() < 1e-12 => Ok(()),
            Some(c) => Err(Error::Precondition(format!(
                "{name} must have free term {want} (got {c})"
            ))),
            None => Err(Error::Precondition(format!("{name} must be a polynomial"))),
        }
    };
    check(a_plus, 1.0, "a_plus")?;
    check(a_minus, -1.0, "a_minus")?;
    let n = f.len();
    let grow = iterate_orbit(&resolvent_kernel(a_plus, n)?, f, NormKind::One, n_max)?;
    let shrink = iterate_orbit(&resolvent_kernel(a_minus, n)?, f, NormKind::Inf, n_max)?;
    Ok(IrregularRegimes { grow, shrink })
}
