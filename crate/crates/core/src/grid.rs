//! Uniform-grid model of functions on [0,1].
//!
//! A [`GridFunction`] of size `N` stores samples at the right endpoints
//! `x_i = (i+1)/N`, `i = 0..N-1`. The node `0` is excluded, so representatives
//! of `C_0[0,1]` need no special handling and the Volterra kernel integrates
//! constants exactly.

use crate::error::{Error, Result};
use crate::scalar::{self, C64, ZERO};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Smallest accepted grid size.
pub const MIN_GRID: usize = 4;

/// Default relative threshold used by [`GridFunction::inf_support`].
pub const SUPPORT_TOL: f64 = 1e-9;

const MAX_POLY_DEGREE: usize = 64;

/// Checks that `n` is a usable grid size: `n >= 4` and 5-smooth.
pub fn check_grid_size(n: usize) -> Result<()> {
    if n < MIN_GRID {
        return Err(Error::GridSize(n));
    }
    let mut m = n;
    for p in [2, 3, 5] {
        while m.is_multiple_of(p) {
            m /= p;
        }
    }
    if m == 1 {
        Ok(())
    } else {
        Err(Error::GridSize(n))
    }
}

/// Returns `round(t * n)` if `t` sits on the grid of size `n`.
pub fn grid_index(t: f64, n: usize, what: &'static str) -> Result<usize> {
    let scaled = t * n as f64;
    let m = scaled.round();
    if !t.is_finite() || t < 0.0 || (scaled - m).abs() > 1e-9 * scaled.abs().max(1.0) {
        return Err(Error::NotGridAligned { what, value: t, n });
    }
    Ok(m as usize)
}

/// Norm index for `L^p[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKind {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::One => "1",
            NormKind::Two => "2",
            NormKind::Inf => "inf",
        })
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(NormKind::One),
            "2" => Ok(NormKind::Two),
            "inf" | "Inf" | "infinity" => Ok(NormKind::Inf),
            other => Err(Error::InvalidArgument(format!(
                "p must be one of 1, 2, inf (got {other:?})"
            ))),
        }
    }
}

/// Input language for functions on [0,1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FunctionSpec {
    /// `sum_j coeffs[j] x^j`
    Poly {
        #[serde(with = "scalar::pairs")]
        coeffs: Vec<C64>,
    },
    /// `x^gamma`, `gamma > -1`
    Power { gamma: f64 },
    /// `inner(x - t0)` for `x > t0`, zero otherwise
    Shift { t0: f64, inner: Box<FunctionSpec> },
    /// Values at the nodes, length must equal the grid size.
    Samples {
        #[serde(with = "scalar::pairs")]
        values: Vec<C64>,
    },
}

impl FunctionSpec {
    pub fn constant(c: f64) -> Self {
        FunctionSpec::Poly {
            coeffs: vec![C64::new(c, 0.0)],
        }
    }

    pub fn poly(coeffs: &[f64]) -> Self {
        FunctionSpec::Poly {
            coeffs: coeffs.iter().map(|&c| C64::new(c, 0.0)).collect(),
        }
    }

    pub fn shifted(self, t0: f64) -> Self {
        FunctionSpec::Shift {
            t0,
            inner: Box::new(self),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self {
            FunctionSpec::Poly { coeffs } => {
                if coeffs.len() > MAX_POLY_DEGREE + 1 {
                    return Err(Error::InvalidArgument(format!(
                        "polynomial degree {} exceeds {MAX_POLY_DEGREE}",
                        coeffs.len() - 1
                    )));
                }
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidArgument("non-finite coefficient".into()));
                }
            }
            FunctionSpec::Power { gamma } => {
                if !(gamma.is_finite() && *gamma > -1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "power exponent must exceed -1 (got {gamma})"
                    )));
                }
            }
            FunctionSpec::Shift { t0, inner } => {
                if !(0.0..1.0).contains(t0) {
                    return Err(Error::InvalidArgument(format!(
                        "offset must lie in [0,1) (got {t0})"
                    )));
                }
                grid_index(*t0, n, "offset")?;
                inner.validate(n)?;
            }
            FunctionSpec::Samples { values } => {
                if values.len() != n {
                    return Err(Error::SizeMismatch {
                        left: values.len(),
                        right: n,
                    });
                }
            }
        }
        Ok(())
    }

    /// Value at node index `i` of the grid of size `n`; `i` may be shifted
    /// below zero by an enclosing offset, in which case the value is zero.
    fn eval_node(&self, i: isize, n: usize) -> C64 {
        if i < 0 {
            return ZERO;
        }
        let x = (i + 1) as f64 / n as f64;
        match self {
            FunctionSpec::Poly { coeffs } => coeffs.iter().rev().fold(ZERO, |acc, &c| acc * x + c),
            FunctionSpec::Power { gamma } => C64::new(x.powf(*gamma), 0.0),
            FunctionSpec::Shift { t0, inner } => {
                let m = (t0 * n as f64).round() as isize;
                inner.eval_node(i - m, n)
            }
            FunctionSpec::Samples { values } => values[i as usize],
        }
    }
}

/// Sampled representative of a function in `L^p[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<C64>,
}

impl GridFunction {
    /// Wraps raw node values. The length must be a valid grid size.
    pub fn from_values(values: Vec<C64>) -> Result<Self> {
        check_grid_size(values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid function values".into()));
        }
        Ok(GridFunction { values })
    }

    pub(crate) fn from_values_unchecked(values: Vec<C64>) -> Self {
        GridFunction { values }
    }

    /// Samples `spec` on the grid of size `n`.
    pub fn sample(spec: &FunctionSpec, n: usize) -> Result<Self> {
        check_grid_size(n)?;
        spec.validate(n)?;
        let values = (0..n as isize).map(|i| spec.eval_node(i, n)).collect();
        GridFunction::from_values(values)
    }

    pub fn constant(c: f64, n: usize) -> Result<Self> {
        Self::sample(&FunctionSpec::constant(c), n)
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::constant(0.0, n)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    /// Node `x_i = (i+1)/N`.
    pub fn node(&self, i: usize) -> f64 {
        (i + 1) as f64 / self.len() as f64
    }

    pub fn norm(&self, p: NormKind) -> f64 {
        norm_of(&self.values, p)
    }

    /// Position of the first node where `|f_i| > tol * max|f|`, or `1` if none.
    pub fn inf_support(&self, tol: f64) -> f64 {
        match first_above(&self.values, tol) {
            Some(i) => self.node(i),
            None => 1.0,
        }
    }

    /// `(M f)(x) = x f(x)`.
    pub fn multiply_by_argument(&self) -> GridFunction {
        let n = self.len() as f64;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| v * ((i + 1) as f64 / n))
            .collect();
        GridFunction { values }
    }

    pub fn scale(&self, c: C64) -> GridFunction {
        GridFunction {
            values: self.values.iter().map(|&v| v * c).collect(),
        }
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        same_len(self.len(), other.len())?;
        Ok(GridFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        same_len(self.len(), other.len())?;
        Ok(GridFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// `max_i |f_i - g_i|`.
    pub fn max_distance(&self, other: &GridFunction) -> Result<f64> {
        Ok(self.sub(other)?.norm(NormKind::Inf))
    }
}

pub(crate) fn same_len(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::SizeMismatch { left: a, right: b })
    }
}

/// Rectangle-rule `L^p` norm of node values on [0,1].
pub(crate) fn norm_of(values: &[C64], p: NormKind) -> f64 {
    let h = 1.0 / values.len() as f64;
    match p {
        NormKind::One => h * values.iter().map(|v| v.norm()).sum::<f64>(),
        NormKind::Two => (h * values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt(),
        NormKind::Inf => values.iter().map(|v| v.norm()).fold(0.0, f64::max),
    }
}

/// First index whose magnitude exceeds `tol` times the maximum magnitude.
pub(crate) fn first_above(values: &[C64], tol: f64) -> Option<usize> {
    let max = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return None;
    }
    values.iter().position(|v| v.norm() > tol * max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(f: &GridFunction) -> Vec<f64> {
        f.values().iter().map(|v| v.re).collect()
    }

    #[test]
    fn constant_and_identity_sampling() {
        let one = GridFunction::sample(&FunctionSpec::poly(&[1.0]), 8).unwrap();
        assert!(re(&one).iter().all(|&v| v == 1.0));
        let x = GridFunction::sample(&FunctionSpec::poly(&[0.0, 1.0]), 4).unwrap();
        assert_eq!(re(&x), vec![0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn shifted_square_root() {
        let spec = FunctionSpec::Power { gamma: 0.5 }.shifted(0.5);
        let f = GridFunction::sample(&spec, 4).unwrap();
        let expect = [0.0, 0.0, 0.25f64.sqrt(), 0.5f64.sqrt()];
        for (a, b) in re(&f).iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_sizes_and_offsets() {
        assert!(matches!(
            GridFunction::constant(1.0, 14),
            Err(Error::GridSize(14))
        ));
        assert!(matches!(
            GridFunction::constant(1.0, 2),
            Err(Error::GridSize(2))
        ));
        assert!(GridFunction::constant(1.0, 640).is_ok());
        let spec = FunctionSpec::constant(1.0).shifted(0.3);
        assert!(matches!(
            GridFunction::sample(&spec, 16),
            Err(Error::NotGridAligned { .. })
        ));
        assert!(GridFunction::sample(&spec, 20).is_ok());
        let wrong_len = FunctionSpec::Samples {
            values: vec![C64::new(1.0, 0.0); 3],
        };
        assert!(GridFunction::sample(&wrong_len, 8).is_err());
        let deg65 = FunctionSpec::poly(&[1.0; 66]);
        assert!(GridFunction::sample(&deg65, 8).is_err());
        assert!(GridFunction::sample(&FunctionSpec::Power { gamma: -1.0 }, 8).is_err());
    }

    #[test]
    fn norms() {
        let one = GridFunction::constant(1.0, 8).unwrap();
        assert_eq!(one.norm(NormKind::One), 1.0);
        let x = GridFunction::sample(&FunctionSpec::poly(&[0.0, 1.0]), 1024).unwrap();
        assert_eq!(x.norm(NormKind::Inf), 1.0);
        // right-endpoint rule: (N+1)/(2N)
        let n1 = x.norm(NormKind::One);
        assert!((n1 - 0.5).abs() <= 1.0 / 1024.0);
        assert!((n1 - 1025.0 / 2048.0).abs() < 1e-15);
    }

    #[test]
    fn support_detection() {
        let one = GridFunction::constant(1.0, 16).unwrap();
        assert_eq!(one.inf_support(SUPPORT_TOL), 1.0 / 16.0);
        let shifted = GridFunction::sample(&FunctionSpec::constant(1.0).shifted(0.25), 16).unwrap();
        assert_eq!(shifted.inf_support(SUPPORT_TOL), 0.25 + 1.0 / 16.0);
        let zero = GridFunction::zeros(16).unwrap();
        assert_eq!(zero.inf_support(SUPPORT_TOL), 1.0);
    }

    #[test]
    fn multiplication_by_argument() {
        let one = GridFunction::constant(1.0, 8).unwrap();
        let x = GridFunction::sample(&FunctionSpec::poly(&[0.0, 1.0]), 8).unwrap();
        let x2 = GridFunction::sample(&FunctionSpec::poly(&[0.0, 0.0, 1.0]), 8).unwrap();
        assert_eq!(one.multiply_by_argument(), x);
        assert_eq!(one.multiply_by_argument().multiply_by_argument(), x2);
        let zero = GridFunction::zeros(8).unwrap();
        assert_eq!(zero.multiply_by_argument(), zero);
    }

    #[test]
    fn function_spec_json() {
        let spec: FunctionSpec = serde_json::from_str(
            r#"{"type":"shift","t0":0.5,"inner":{"type":"poly","coeffs":[1,[0,2]]}}"#,
        )
        .unwrap();
        let f = GridFunction::sample(&spec, 4).unwrap();
        assert_eq!(f.values()[3], C64::new(1.0, 1.0));
        let power: FunctionSpec = serde_json::from_str(r#"{"type":"power","gamma":2}"#).unwrap();
        assert_eq!(power, FunctionSpec::Power { gamma: 2.0 });
        assert!(serde_json::from_str::<FunctionSpec>(r#"{"type":"spline"}"#).is_err());
    }

    #[test]
    fn norm_kind_parsing() {
        assert_eq!("inf".parse::<NormKind>().unwrap(), NormKind::Inf);
        assert_eq!("2".parse::<NormKind>().unwrap(), NormKind::Two);
        assert!("3".parse::<NormKind>().is_err());
    }
}
