//! Discrete truncated convolution operators.
//!
//! A [`Kernel`] is the first column `k` of a lower-triangular Toeplitz matrix
//! together with a log-scale factor; it represents `e^log_scale * Toeplitz(k)`.
//! Renormalizing operations keep `max |k|` in `[1, 2)` and move the rest of the
//! magnitude into `log_scale`, so powers like `(I+V)^n` stay representable for
//! `n` far beyond the range of `f64`.

use crate::conv::{self, Convolver, Path};
use crate::error::{Error, Result};
use crate::grid::{same_len, GridFunction};
use crate::scalar::{self, expm1, gamma, C64, ONE, ZERO};
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;
use std::sync::atomic::{AtomicBool, Ordering};

/// Relative size below which an exp/log series term is dropped.
pub const SERIES_TOL: f64 = 1e-16;

/// Order `z` of the Riemann-Liouville operator, `Re z > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlOrder(C64);

impl RlOrder {
    pub fn new(z: C64) -> Result<Self> {
        if z.is_finite() && z.re > 0.0 {
            Ok(RlOrder(z))
        } else {
            Err(Error::InvalidArgument(format!(
                "Riemann-Liouville order needs Re z > 0 (got {z})"
            )))
        }
    }

    pub fn real(z: f64) -> Result<Self> {
        Self::new(C64::new(z, 0.0))
    }

    pub fn z(self) -> C64 {
        self.0
    }
}

/// Product-integration weights `h^z ((m+1)^z - m^z) / Gamma(z+1)`: the exact
/// cell integrals of `x^(z-1)/Gamma(z)`.
pub fn rl_weights(order: RlOrder, n: usize) -> Vec<C64> {
    let z = order.z();
    let h = 1.0 / n as f64;
    let lead = (z * h.ln()).exp() / gamma(z + 1.0);
    (0..n)
        .map(|m| {
            if m == 0 {
                lead
            } else {
                // m^z (exp(z ln(1 + 1/m)) - 1) avoids cancellation at large m
                let mf = m as f64;
                let mz = (z * mf.ln()).exp();
                lead * mz * expm1(z * (1.0 / mf).ln_1p())
            }
        })
        .collect()
}

/// Lower-triangular Toeplitz operator `e^log_scale * Toeplitz(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    k: Vec<C64>,
    log_scale: f64,
}

/// JSON dump layout: `{"N": .., "log_scale": .., "k": [[re, im], ..]}`.
#[derive(Serialize, Deserialize)]
struct KernelDump {
    #[serde(rename = "N")]
    n: usize,
    log_scale: f64,
    #[serde(with = "scalar::pairs")]
    k: Vec<C64>,
}

impl Serialize for Kernel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        KernelDump {
            n: self.len(),
            log_scale: self.log_scale,
            k: self.k.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Kernel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let dump = KernelDump::deserialize(d)?;
        if dump.k.len() != dump.n {
            return Err(serde::de::Error::custom(format!(
                "N = {} but k has {} entries",
                dump.n,
                dump.k.len()
            )));
        }
        Kernel::new(dump.k, dump.log_scale).map_err(serde::de::Error::custom)
    }
}

impl Kernel {
    pub fn new(k: Vec<C64>, log_scale: f64) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::GridSize(0));
        }
        if k.iter().any(|z| !z.is_finite()) || !log_scale.is_finite() {
            return Err(Error::NonFinite("kernel coefficients".into()));
        }
        Ok(Kernel { k, log_scale })
    }

    pub fn identity(n: usize) -> Self {
        let mut k = vec![ZERO; n];
        k[0] = ONE;
        Kernel { k, log_scale: 0.0 }
    }

    pub fn zero(n: usize) -> Self {
        Kernel {
            k: vec![ZERO; n],
            log_scale: 0.0,
        }
    }

    /// The Volterra operator `V f(x) = int_0^x f`, all entries `h`.
    pub fn volterra(n: usize) -> Self {
        Kernel {
            k: vec![C64::new(1.0 / n as f64, 0.0); n],
            log_scale: 0.0,
        }
    }

    /// Riemann-Liouville fractional integral `V^z`.
    pub fn riemann_liouville(order: RlOrder, n: usize) -> Self {
        Kernel {
            k: rl_weights(order, n),
            log_scale: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.k
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn is_zero(&self) -> bool {
        self.k.iter().all(|z| *z == ZERO)
    }

    /// `k * e^log_scale`; overflows to an error when not representable.
    pub fn scaled_coefficients(&self) -> Result<Vec<C64>> {
        let s = self.log_scale.exp();
        let out: Vec<C64> = self.k.iter().map(|z| z * s).collect();
        if out.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("kernel scale".into()));
        }
        Ok(out)
    }

    /// The diagonal entry `mu({0})`, which is the whole spectrum.
    pub fn diagonal(&self) -> C64 {
        self.k[0] * self.log_scale.exp()
    }

    /// Rescales by a power of two so `max |k|` lies in `[1, 2)`.
    pub fn renormalized(mut self) -> Self {
        let max = self.k.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            self.log_scale = 0.0;
            return self;
        }
        let e = max.log2().floor() as i32;
        if e != 0 {
            let f = pow2(-e);
            for z in &mut self.k {
                *z *= f;
            }
            self.log_scale += e as f64 * LN_2;
        }
        self
    }

    /// `(T f)_i = e^log_scale sum_{m<=i} k_m f_{i-m}`.
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        same_len(self.len(), f.len())?;
        let raw = conv::convolve(&self.k, f.values());
        self.finish_apply(raw)
    }

    /// Same as [`Kernel::apply`] through the `O(N^2)` reference path.
    pub fn apply_direct(&self, f: &GridFunction) -> Result<GridFunction> {
        same_len(self.len(), f.len())?;
        let raw = conv::convolve_direct(&self.k, f.values());
        self.finish_apply(raw)
    }

    fn finish_apply(&self, mut raw: Vec<C64>) -> Result<GridFunction> {
        if self.log_scale != 0.0 {
            let s = self.log_scale.exp();
            for z in &mut raw {
                *z *= s;
            }
        }
        if raw.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("kernel application".into()));
        }
        Ok(GridFunction::from_values_unchecked(raw))
    }

    /// `T1 T2`, renormalized, through the accurate path. Commutative bit for
    /// bit.
    pub fn compose(&self, other: &Kernel) -> Result<Kernel> {
        self.compose_with(other, Path::Accurate)
    }

    pub fn compose_with(&self, other: &Kernel, path: Path) -> Result<Kernel> {
        same_len(self.len(), other.len())?;
        let k = conv::convolve_with(&self.k, &other.k, path);
        Ok(Kernel {
            k,
            log_scale: self.log_scale + other.log_scale,
        }
        .renormalized())
    }

    /// `T^n` by repeated squaring.
    pub fn power(&self, n: u64) -> Result<Kernel> {
        self.power_cancellable(n, &AtomicBool::new(false))
    }

    /// [`Kernel::power`] that checks `cancel` between squarings.
    pub fn power_cancellable(&self, n: u64, cancel: &AtomicBool) -> Result<Kernel> {
        if n == 0 {
            return Err(Error::InvalidArgument("power needs n >= 1".into()));
        }
        let mut result: Option<Kernel> = None;
        let mut base = self.clone();
        let mut e = n;
        loop {
            if cancel.load(Ordering::Relaxed) {
                return Err(Error::Cancelled);
            }
            if e & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => r.compose(&base)?,
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = base.compose(&base)?;
        }
        Ok(result.expect("n >= 1"))
    }

    /// `ln` of the column absolute sum, which is the induced norm on `L^1`
    /// and `L^infinity`. Zero kernels give `-inf`.
    pub fn operator_norm_1(&self) -> f64 {
        let s: f64 = self.k.iter().map(|z| z.norm()).sum();
        if s == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.log_scale + s.ln()
        }
    }

    /// `a T + b S` for scalars `a`, `b`.
    pub fn linear_combination(&self, a: C64, other: &Kernel, b: C64) -> Result<Kernel> {
        same_len(self.len(), other.len())?;
        let ls = self.log_scale.max(other.log_scale);
        let fa = a * (self.log_scale - ls).exp();
        let fb = b * (other.log_scale - ls).exp();
        let k = self
            .k
            .iter()
            .zip(&other.k)
            .map(|(x, y)| x * fa + y * fb)
            .collect();
        Ok(Kernel { k, log_scale: ls }.renormalized())
    }

    pub fn add(&self, other: &Kernel) -> Result<Kernel> {
        self.linear_combination(ONE, other, ONE)
    }

    pub fn scale(&self, c: C64) -> Kernel {
        Kernel {
            k: self.k.iter().map(|z| z * c).collect(),
            log_scale: self.log_scale,
        }
        .renormalized()
    }

    /// `T - c I`.
    pub fn sub_identity(&self, c: C64) -> Result<Kernel> {
        self.linear_combination(ONE, &Kernel::identity(self.len()), -c)
    }

    /// `[T, M] f = T(Mf) - M(Tf)`.
    pub fn commutator_with_m(&self, f: &GridFunction) -> Result<GridFunction> {
        let left = self.apply(&f.multiply_by_argument())?;
        let right = self.apply(f)?.multiply_by_argument();
        left.sub(&right)
    }

    /// `e^A`. The diagonal `a` is split off so that `e^A = e^a e^(A - aI)`
    /// and the series runs over the nilpotent part only.
    pub fn op_exp(&self) -> Result<Kernel> {
        let n = self.len();
        let mut q = self.scaled_coefficients()?;
        let a = q[0];
        q[0] = ZERO;
        let mut sum = vec![ZERO; n];
        sum[0] = ONE;
        let mut term = sum.clone();
        for j in 1..=4 * n {
            term = conv::convolve_with(&term, &q, Path::Accurate);
            let inv = 1.0 / j as f64;
            for z in &mut term {
                *z *= inv;
            }
            if add_and_check(&mut sum, &term) {
                break;
            }
        }
        let phase = C64::from_polar(1.0, a.im);
        for z in &mut sum {
            *z *= phase;
        }
        Kernel::new(sum, a.re).map(Kernel::renormalized)
    }

    /// `ln(I + S) = ln(1 + s) I + ln(I + Q)`, `Q = (S - sI)/(1 + s)`, where
    /// `s` is the diagonal of `S`. Requires `|s| < 1`.
    pub fn op_log_of_identity_plus(&self) -> Result<Kernel> {
        let n = self.len();
        let mut q = self.scaled_coefficients()?;
        let s = q[0];
        if s.norm() >= 1.0 {
            return Err(Error::Precondition(format!(
                "spectral radius {} of S must be below 1",
                s.norm()
            )));
        }
        let inv = 1.0 / (ONE + s);
        q[0] = ZERO;
        for z in &mut q {
            *z *= inv;
        }
        let mut sum = vec![ZERO; n];
        let mut power = q.clone();
        for j in 1..=4 * n {
            if j > 1 {
                power = conv::convolve_with(&power, &q, Path::Accurate);
            }
            let c = if j % 2 == 1 { 1.0 } else { -1.0 } / j as f64;
            let term: Vec<C64> = power.iter().map(|z| z * c).collect();
            if add_and_check(&mut sum, &term) {
                break;
            }
        }
        sum[0] += (ONE + s).ln();
        Kernel::new(sum, 0.0).map(Kernel::renormalized)
    }
}

/// Adds `term` into `sum`; true once the term is negligible.
fn add_and_check(sum: &mut [C64], term: &[C64]) -> bool {
    for (s, t) in sum.iter_mut().zip(term) {
        *s += t;
    }
    let tn: f64 = term.iter().map(|z| z.norm()).sum();
    let sn: f64 = sum.iter().map(|z| z.norm()).sum();
    tn == 0.0 || tn < SERIES_TOL * sn
}

fn pow2(e: i32) -> f64 {
    // exact for the exponents renormalization produces
    if e > 1000 {
        2f64.powi(1000) * 2f64.powi(e - 1000)
    } else if e < -1000 {
        2f64.powi(-1000) * 2f64.powi(e + 1000)
    } else {
        2f64.powi(e)
    }
}

/// Applies one kernel repeatedly.
pub struct KernelApplier {
    conv: Convolver,
    log_scale: f64,
}

impl KernelApplier {
    pub fn new(t: &Kernel, path: Path) -> Self {
        KernelApplier {
            conv: Convolver::new(&t.k, path),
            log_scale: t.log_scale,
        }
    }

    /// Returns `Toeplitz(k) v` without the scale factor, and the scale's log.
    pub fn apply_unscaled(&mut self, v: &[C64]) -> (Vec<C64>, f64) {
        (self.conv.apply(v), self.log_scale)
    }

    pub fn len(&self) -> usize {
        self.conv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conv.is_empty()
    }
}

/// `ln ||T^n||` for `n = 0..=n_max` via successive accurate composition.
pub fn operator_norm_trace(t: &Kernel, n_max: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(0.0);
    let mut p = Kernel::identity(t.len());
    for _ in 0..n_max {
        p = p.compose(t)?;
        out.push(p.operator_norm_1());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{FunctionSpec, NormKind};
    use crate::measure::Measure;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn one(n: usize) -> GridFunction {
        GridFunction::constant(1.0, n).unwrap()
    }

    fn x_pow(n: usize, e: usize) -> GridFunction {
        let mut coeffs = vec![0.0; e + 1];
        coeffs[e] = 1.0;
        GridFunction::sample(&FunctionSpec::poly(&coeffs), n).unwrap()
    }

    #[test]
    fn apply_examples() {
        let n = 64;
        let f = GridFunction::sample(&FunctionSpec::poly(&[0.3, -1.0, 2.0]), n).unwrap();
        assert_eq!(Kernel::identity(n).apply(&f).unwrap(), f);
        let v1 = Kernel::volterra(n).apply(&one(n)).unwrap();
        for (i, z) in v1.values().iter().enumerate() {
            assert!((z.re - v1.node(i)).abs() < 1e-15);
        }
        let shift = Measure::dirac_at(0.5, ONE).to_kernel(n).unwrap();
        let s1 = shift.apply(&one(n)).unwrap();
        for (i, z) in s1.values().iter().enumerate() {
            let expect = if s1.node(i) <= 0.5 { 0.0 } else { 1.0 };
            assert_eq!(z.re, expect);
        }
        assert!(matches!(
            Kernel::volterra(8).apply(&one(16)),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn compose_examples() {
        let n = 256;
        let v = Kernel::volterra(n);
        let iv = Kernel::identity(n)
            .compose(&v)
            .unwrap()
            .scaled_coefficients()
            .unwrap();
        for (a, b) in iv.iter().zip(v.coefficients()) {
            assert!((a - b).norm() < 1e-15);
        }
        let v2 = v.compose(&v).unwrap();
        let out = v2.apply(&one(n)).unwrap();
        let expect = x_pow(n, 2).scale(c(0.5));
        assert!(out.max_distance(&expect).unwrap() <= 1.0 / n as f64);
        let rl = Kernel::riemann_liouville(RlOrder::new(C64::new(0.3, 0.4)).unwrap(), n);
        assert_eq!(rl.compose(&v).unwrap(), v.compose(&rl).unwrap());
    }

    #[test]
    fn power_examples() {
        let n = 128;
        let v = Kernel::volterra(n);
        assert_eq!(v.power(1).unwrap(), v);
        // V^n 1 at x = 1 in the discrete model is h^n C(N-1+n, n)
        for e in [2u64, 5, 9] {
            let out = v.power(e).unwrap().apply(&one(n)).unwrap();
            let last = out.values()[n - 1].re;
            let exact: f64 = (1..=e)
                .map(|j| (n as f64 + j as f64 - 1.0) / (n as f64 * j as f64))
                .product();
            assert!((last - exact).abs() < 1e-12 * exact, "e={e}");
        }
        let shift = Measure::dirac_at(0.4, ONE).to_kernel(10).unwrap();
        assert!(shift.power(3).unwrap().is_zero());
        assert!(!shift.power(2).unwrap().is_zero());
        assert!(v.power(0).is_err());
    }

    #[test]
    fn power_survives_huge_exponents() {
        let n = 64;
        let t = Kernel::identity(n).add(&Kernel::volterra(n)).unwrap();
        let p = t.power(1_000_000).unwrap();
        assert!(p.log_scale().is_finite());
        assert!(p.operator_norm_1() > 1000.0);
        let max = p
            .coefficients()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!((0.5..=2.0).contains(&max));
    }

    #[test]
    fn power_can_be_cancelled() {
        let flag = AtomicBool::new(true);
        let r = Kernel::volterra(32).power_cancellable(1000, &flag);
        assert!(matches!(r, Err(Error::Cancelled)));
    }

    #[test]
    fn riemann_liouville_examples() {
        let n = 256;
        let rl1 = Kernel::riemann_liouville(RlOrder::real(1.0).unwrap(), n);
        for (a, b) in rl1
            .coefficients()
            .iter()
            .zip(Kernel::volterra(n).coefficients())
        {
            assert!((a - b).norm() < 1e-16);
        }
        let half = Kernel::riemann_liouville(RlOrder::real(0.5).unwrap(), n)
            .apply(&one(n))
            .unwrap();
        for (i, z) in half.values().iter().enumerate() {
            let x = half.node(i);
            let expect = 2.0 * (x / std::f64::consts::PI).sqrt();
            assert!((z.re - expect).abs() < 1e-13 * expect);
        }
        let two = Kernel::riemann_liouville(RlOrder::real(2.0).unwrap(), n)
            .apply(&one(n))
            .unwrap();
        assert!(two.max_distance(&x_pow(n, 2).scale(c(0.5))).unwrap() < 1e-13);
        assert!(RlOrder::real(0.0).is_err());
        assert!(RlOrder::new(C64::new(-0.5, 1.0)).is_err());
    }

    #[test]
    fn rl_kernel_matches_measure_compilation() {
        let order = RlOrder::new(C64::new(0.3, 0.4)).unwrap();
        let a = Kernel::riemann_liouville(order, 64);
        let b = Measure::riemann_liouville(order).to_kernel(64).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn operator_norms() {
        assert_eq!(Kernel::identity(16).operator_norm_1(), 0.0);
        assert!(Kernel::volterra(1024).operator_norm_1().abs() < 1e-14);
        assert_eq!(Kernel::zero(8).operator_norm_1(), f64::NEG_INFINITY);
        let n = 1024;
        let p = Kernel::volterra(n).power(10).unwrap().operator_norm_1();
        let ln10f: f64 = (1..=10).map(|j| (j as f64).ln()).sum();
        assert!((p + ln10f).abs() < 0.05);
    }

    #[test]
    fn exp_and_log() {
        let n = 128;
        assert_eq!(Kernel::zero(n).op_exp().unwrap(), Kernel::identity(n));
        assert!(Kernel::zero(n).op_log_of_identity_plus().unwrap().is_zero());
        // e^V 1 = sum V^j 1 / j!; discrete reference from the same kernel powers
        let v = Kernel::volterra(n);
        let ev = v.op_exp().unwrap().apply(&one(n)).unwrap();
        let mut reference = one(n);
        let mut term = one(n);
        for j in 1..60 {
            term = v.apply(&term).unwrap().scale(c(1.0 / j as f64));
            reference = reference.add(&term).unwrap();
        }
        assert!(ev.max_distance(&reference).unwrap() < 1e-12);
        // e^V 1 = sum x^j / (j!)^2 = I_0(2 sqrt x), not e^x
        let bessel: f64 = (0..30)
            .map(|j| 1.0 / (1..=j).map(|i| i as f64).product::<f64>().powi(2))
            .sum();
        let last = ev.values()[n - 1].re;
        assert!(
            (last - bessel).abs() < 2.0 / n as f64,
            "e^V 1 at x=1: {last}"
        );

        let s = v
            .scale(c(0.7))
            .add(&Kernel::identity(n).scale(C64::new(0.2, 0.1)))
            .unwrap();
        let round = s.op_log_of_identity_plus().unwrap().op_exp().unwrap();
        let target = Kernel::identity(n).add(&s).unwrap();
        let diff = round.linear_combination(ONE, &target, -ONE).unwrap();
        assert!(diff.operator_norm_1() < target.operator_norm_1() + (1e-8f64).ln());
        let bad = Kernel::identity(n).scale(c(1.5));
        assert!(matches!(
            bad.op_log_of_identity_plus(),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn commutator_examples() {
        let n = 512;
        let h = 1.0 / n as f64;
        let f = GridFunction::sample(&FunctionSpec::poly(&[1.0, 2.0]), n).unwrap();
        assert_eq!(
            Kernel::identity(n)
                .commutator_with_m(&f)
                .unwrap()
                .norm(NormKind::Inf),
            0.0
        );
        let cv = Kernel::volterra(n).commutator_with_m(&one(n)).unwrap();
        let expect = x_pow(n, 2).scale(c(-0.5));
        assert!(cv.max_distance(&expect).unwrap() <= 2.0 * h);
        let z = 0.5;
        let cz = Kernel::riemann_liouville(RlOrder::real(z).unwrap(), n)
            .commutator_with_m(&one(n))
            .unwrap();
        let g25 = gamma(c(2.5)).re;
        let mut err: f64 = 0.0;
        for (i, v) in cz.values().iter().enumerate() {
            let x = cz.node(i);
            err = err.max((v.re + z * x.powf(1.5) / g25).abs());
        }
        assert!(err < 0.01, "err {err}");
    }

    #[test]
    fn fast_and_direct_apply_agree() {
        let n = 1024;
        let t = Kernel::riemann_liouville(RlOrder::new(C64::new(0.7, -0.2)).unwrap(), n);
        let f = GridFunction::sample(&FunctionSpec::poly(&[1.0, -3.0, 0.5]), n).unwrap();
        let a = t.apply(&f).unwrap();
        let b = t.apply_direct(&f).unwrap();
        assert!(a.max_distance(&b).unwrap() <= 1e-10 * b.norm(NormKind::Inf));
    }

    #[test]
    fn kernel_json_dump() {
        let k = Kernel::volterra(4).scale(c(8.0));
        let s = serde_json::to_string(&k).unwrap();
        assert!(s.starts_with(r#"{"N":4,"log_scale":"#));
        let back: Kernel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, k);
        assert!(serde_json::from_str::<Kernel>(r#"{"N":3,"log_scale":0,"k":[[1,0]]}"#).is_err());
    }
}
