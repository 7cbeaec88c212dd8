//! Complex scalar helpers: the gamma function, an accurate `expm1`, Gauss-Legendre
//! nodes, and the `[re, im]` JSON representation shared by every file format.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::PI;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Euler's gamma function on the complex plane (Lanczos, g = 7).
pub fn gamma(z: C64) -> C64 {
    if z.re < 0.5 {
        // reflection
        let s = (z * PI).sin();
        return C64::new(PI, 0.0) / (s * gamma(ONE - z));
    }
    let z = z - 1.0;
    let mut x = C64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x
}

/// `exp(w) - 1` without cancellation for small `|w|`.
pub fn expm1(w: C64) -> C64 {
    let em1 = w.re.exp_m1();
    let half = (0.5 * w.im).sin();
    C64::new(
        em1 * w.im.cos() - 2.0 * half * half,
        w.re.exp() * w.im.sin(),
    )
}

/// Gauss-Legendre nodes and weights on [-1, 1], exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        // midpoint node is exactly zero
        out[n / 2].0 = 0.0;
    }
    out
}

/// `n` choose `k` in floating point.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Fixed-width decimal with 17 significant digits, used for every CSV field.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Serde adapter for a complex number written as `[re, im]`.
pub mod pair {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        Ok(ComplexRepr::deserialize(d)?.into())
    }
}

/// Serde adapter for a sequence of complex numbers written as `[[re, im], ...]`.
pub mod pairs {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        let raw: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let raw = Vec::<ComplexRepr>::deserialize(d)?;
        Ok(raw.into_iter().map(Into::into).collect())
    }
}

/// A complex number in input JSON: either a bare real or an `[re, im]` pair.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum ComplexRepr {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexRepr> for C64 {
    fn from(r: ComplexRepr) -> Self {
        match r {
            ComplexRepr::Real(x) => C64::new(x, 0.0),
            ComplexRepr::Pair([re, im]) => C64::new(re, im),
        }
    }
}

/// Relative closeness with an absolute floor.
pub fn close(a: C64, b: C64, rel: f64) -> bool {
    (a - b).norm() <= rel * a.norm().max(b.norm()).max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_known_values() {
        assert!(close(gamma(C64::new(5.0, 0.0)), C64::new(24.0, 0.0), 1e-13));
        assert!(close(
            gamma(C64::new(0.5, 0.0)),
            C64::new(PI.sqrt(), 0.0),
            1e-13
        ));
        assert!(close(
            gamma(C64::new(1.5, 0.0)),
            C64::new(PI.sqrt() / 2.0, 0.0),
            1e-13
        ));
        // Gamma(1 + i)
        let g = gamma(C64::new(1.0, 1.0));
        assert!(close(
            g,
            C64::new(0.498_015_668_118_356, -0.154_949_828_301_810_7),
            1e-12
        ));
        // reflection branch: Gamma(-0.5) = -2 sqrt(pi)
        assert!(close(
            gamma(C64::new(-0.5, 0.0)),
            C64::new(-2.0 * PI.sqrt(), 0.0),
            1e-12
        ));
    }

    #[test]
    fn expm1_matches_exp_away_from_zero() {
        let w = C64::new(0.7, -1.3);
        assert!(close(expm1(w), w.exp() - 1.0, 1e-14));
        let tiny = C64::new(1e-12, 2e-12);
        assert!(close(expm1(tiny), tiny, 1e-10));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..12 {
            let rule = gauss_legendre(n);
            let deg = 2 * n - 1;
            let s: f64 = rule.iter().map(|&(x, w)| w * x.powi(deg as i32 - 1)).sum();
            // x^(2n-2) over [-1,1] = 2 / (2n-1)
            assert!((s - 2.0 / (deg as f64)).abs() < 1e-13, "n={n} got {s}");
            let total: f64 = rule.iter().map(|p| p.1).sum();
            assert!((total - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(10, 0), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
    }

    #[test]
    fn complex_repr_accepts_both_forms() {
        let v: Vec<ComplexRepr> = serde_json::from_str("[1.5, [0.0, -2.0]]").unwrap();
        let z: Vec<C64> = v.into_iter().map(Into::into).collect();
        assert_eq!(z, vec![C64::new(1.5, 0.0), C64::new(0.0, -2.0)]);
    }
}
