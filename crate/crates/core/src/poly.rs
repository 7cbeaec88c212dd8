//! Dense complex polynomials in the global variable `x`.

use crate::scalar::{binomial, gauss_legendre, C64, ONE, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<C64>);

impl Poly {
    pub fn zero() -> Self {
        Poly(Vec::new())
    }

    pub fn constant(c: C64) -> Self {
        Poly(vec![c]).trimmed()
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect()).trimmed()
    }

    /// `x - c`
    pub fn linear_shift(c: f64) -> Self {
        Poly(vec![C64::new(-c, 0.0), ONE])
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == ZERO)
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn trimmed(mut self) -> Self {
        while self.0.last() == Some(&ZERO) {
            self.0.pop();
        }
        self
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.0.iter().rev().fold(ZERO, |acc, &c| acc * x + c)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let get = |p: &Poly, i: usize| p.0.get(i).copied().unwrap_or(ZERO);
        Poly((0..n).map(|i| get(self, i) + get(other, i)).collect()).trimmed()
    }

    pub fn scale(&self, c: C64) -> Poly {
        Poly(self.0.iter().map(|&a| a * c).collect()).trimmed()
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![ZERO; self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out).trimmed()
    }

    /// `x * p(x)`
    pub fn times_x(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(ZERO);
        v.extend_from_slice(&self.0);
        Poly(v)
    }

    /// `p(x - c)` expanded in powers of `x`.
    pub fn shift_argument(&self, c: f64) -> Poly {
        let n = self.0.len();
        let mut out = vec![ZERO; n];
        for (j, &a) in self.0.iter().enumerate() {
            // (x - c)^j = sum_k C(j,k) x^k (-c)^(j-k)
            for (k, slot) in out.iter_mut().enumerate().take(j + 1) {
                *slot += a * binomial(j, k) * (-c).powi((j - k) as i32);
            }
        }
        Poly(out).trimmed()
    }

    pub fn pow(&self, e: usize) -> Poly {
        let mut acc = Poly::constant(ONE);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// `int_a^b p(x) dx` by Gauss-Legendre, exact for the polynomial degree.
    pub fn integrate(&self, a: f64, b: f64) -> C64 {
        if self.0.is_empty() || b <= a {
            return ZERO;
        }
        integrate_with(&gauss_legendre(self.0.len().div_ceil(2).max(1)), self, a, b)
    }

    /// `int_a^b |p(x)| dx`.
    ///
    /// Real polynomials are split at their sign changes so every segment is
    /// integrated exactly; complex ones fall back to composite quadrature.
    pub fn integrate_abs(&self, a: f64, b: f64) -> f64 {
        if self.is_zero() || b <= a {
            return 0.0;
        }
        if self.0.iter().all(|c| c.im == 0.0) {
            let mut cuts = vec![a];
            cuts.extend(self.real_sign_changes(a, b));
            cuts.push(b);
            cuts.windows(2)
                .map(|w| self.integrate(w[0], w[1]).re.abs())
                .sum()
        } else {
            const PANELS: usize = 64;
            let rule = gauss_legendre(16);
            let w = (b - a) / PANELS as f64;
            (0..PANELS)
                .map(|k| {
                    let lo = a + k as f64 * w;
                    let mid = lo + 0.5 * w;
                    rule.iter()
                        .map(|&(x, wt)| wt * self.eval(mid + 0.5 * w * x).norm())
                        .sum::<f64>()
                        * 0.5
                        * w
                })
                .sum()
        }
    }

    fn real_sign_changes(&self, a: f64, b: f64) -> Vec<f64> {
        const SAMPLES: usize = 1024;
        let f = |x: f64| self.eval(x).re;
        let mut roots = Vec::new();
        let mut x0 = a;
        let mut f0 = f(a);
        for k in 1..=SAMPLES {
            let x1 = a + (b - a) * k as f64 / SAMPLES as f64;
            let f1 = f(x1);
            if f1 == 0.0 && k < SAMPLES {
                roots.push(x1);
            } else if f0 * f1 < 0.0 {
                let (mut lo, mut hi, mut flo) = (x0, x1, f0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = f(mid);
                    if fm == 0.0 || mid == lo || mid == hi {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if (fm < 0.0) == (flo < 0.0) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            x0 = x1;
            f0 = f1;
        }
        roots
    }
}

pub(crate) fn integrate_with(rule: &[(f64, f64)], p: &Poly, a: f64, b: f64) -> C64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let s: C64 = rule.iter().map(|&(x, w)| p.eval(mid + half * x) * w).sum();
    s * half
}

/// A bound of integration that is either fixed or moves with `x` as `x - c`.
#[derive(Debug, Clone, Copy)]
enum Bound {
    Fixed(f64),
    Moving(f64),
}

impl Bound {
    fn as_poly(self) -> Poly {
        match self {
            Bound::Fixed(c) => Poly::constant(C64::new(c, 0.0)),
            Bound::Moving(c) => Poly::linear_shift(c),
        }
    }
}

/// Convolution of `p 1_[l1,r1)` with `q 1_[l2,r2)` as a list of polynomial
/// pieces `(poly, lo, hi)` covering `[l1 + l2, r1 + r2)`.
pub fn convolve_pieces(
    p: &Poly,
    (l1, r1): (f64, f64),
    q: &Poly,
    (l2, r2): (f64, f64),
) -> Vec<(Poly, f64, f64)> {
    if p.is_zero() || q.is_zero() {
        return Vec::new();
    }
    // q(x - t) = sum_k t^k qk(x) with qk(x) = sum_{j>=k} b_j C(j,k) (-1)^k x^(j-k)
    let qk: Vec<Poly> = (0..q.0.len())
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            Poly(
                (k..q.0.len())
                    .map(|j| q.0[j] * binomial(j, k) * sign)
                    .collect(),
            )
            .trimmed()
        })
        .collect();
    // integrand = sum_n t^n c_n(x), c_n = sum_{i+k=n} a_i qk
    let mut c: Vec<Poly> = vec![Poly::zero(); p.0.len() + q.0.len() - 1];
    for (i, &a) in p.0.iter().enumerate() {
        for (k, qpoly) in qk.iter().enumerate() {
            c[i + k] = c[i + k].add(&qpoly.scale(a));
        }
    }

    let mut breaks = vec![l1 + l2, l1 + r2, r1 + l2, r1 + r2];
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let mut out = Vec::new();
    for w in breaks.windows(2) {
        let (u, v) = (w[0], w[1]);
        let xm = 0.5 * (u + v);
        let lower = if l1 >= xm - r2 {
            Bound::Fixed(l1)
        } else {
            Bound::Moving(r2)
        };
        let upper = if r1 <= xm - l2 {
            Bound::Fixed(r1)
        } else {
            Bound::Moving(l2)
        };
        let lo_at = match lower {
            Bound::Fixed(c) => c,
            Bound::Moving(c) => xm - c,
        };
        let hi_at = match upper {
            Bound::Fixed(c) => c,
            Bound::Moving(c) => xm - c,
        };
        if hi_at <= lo_at {
            continue;
        }
        let (lp, up) = (lower.as_poly(), upper.as_poly());
        let (mut lpow, mut upow) = (lp.clone(), up.clone());
        let mut acc = Poly::zero();
        for (n, cn) in c.iter().enumerate() {
            let diff = upow.add(&lpow.scale(-ONE));
            acc = acc.add(&cn.mul(&diff).scale(C64::new(1.0 / (n + 1) as f64, 0.0)));
            lpow = lpow.mul(&lp);
            upow = upow.mul(&up);
        }
        if !acc.is_zero() {
            out.push((acc, u, v));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(p: &Poly) -> Vec<f64> {
        p.0.iter().map(|c| c.re).collect()
    }

    #[test]
    fn arithmetic() {
        let p = Poly::from_real(&[1.0, 2.0]);
        let q = Poly::from_real(&[0.0, 1.0]);
        assert_eq!(re(&p.mul(&q)), vec![0.0, 1.0, 2.0]);
        assert_eq!(re(&p.add(&q)), vec![1.0, 3.0]);
        assert_eq!(re(&q.times_x()), vec![0.0, 0.0, 1.0]);
        // (x - 1)^2 = x^2 - 2x + 1
        assert_eq!(
            re(&Poly::from_real(&[0.0, 0.0, 1.0]).shift_argument(1.0)),
            vec![1.0, -2.0, 1.0]
        );
        assert!(Poly::from_real(&[0.0, 0.0]).is_zero());
    }

    #[test]
    fn integrals() {
        let x = Poly::from_real(&[0.0, 1.0]);
        assert!((x.integrate(0.0, 1.0).re - 0.5).abs() < 1e-15);
        // |x - 1/2| over [0,1] = 1/4
        let p = Poly::from_real(&[-0.5, 1.0]);
        assert!((p.integrate_abs(0.0, 1.0) - 0.25).abs() < 1e-14);
        // |x^2 - 1/4| over [0,1]: 1/4*1/2 - 1/24 + (1/3 - 1/4) - (1/24 - 1/8)... = 1/4
        let p = Poly::from_real(&[-0.25, 0.0, 1.0]);
        let exact = (0.125 - 1.0 / 24.0) + (1.0 / 3.0 - 0.25) - (1.0 / 24.0 - 0.125);
        assert!((p.integrate_abs(0.0, 1.0) - exact).abs() < 1e-13);
        // complex with no real zeros: |1 + i x| integrated numerically
        let p = Poly(vec![ONE, C64::new(0.0, 1.0)]);
        let exact = 0.5 * (2f64.sqrt() + (1.0 + 2f64.sqrt()).ln());
        assert!((p.integrate_abs(0.0, 1.0) - exact).abs() < 1e-12);
    }

    #[test]
    fn lebesgue_self_convolution() {
        let one = Poly::from_real(&[1.0]);
        let pieces = convolve_pieces(&one, (0.0, 1.0), &one, (0.0, 1.0));
        // x on [0,1), 2 - x on [1,2)
        assert_eq!(pieces.len(), 2);
        let (p0, l0, r0) = &pieces[0];
        assert_eq!((*l0, *r0), (0.0, 1.0));
        for x in [0.1, 0.5, 0.9] {
            assert!((p0.eval(x).re - x).abs() < 1e-14);
        }
        let (p1, _, _) = &pieces[1];
        assert!((p1.eval(1.5).re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn convolution_matches_quadrature() {
        // (1 + x) on [0, .5) convolved with x^2 on [.25, .75)
        let p = Poly::from_real(&[1.0, 1.0]);
        let q = Poly::from_real(&[0.0, 0.0, 1.0]);
        let pieces = convolve_pieces(&p, (0.0, 0.5), &q, (0.25, 0.75));
        let brute = |x: f64| {
            let m = 20000;
            let (lo, hi) = (0.0f64.max(x - 0.75), 0.5f64.min(x - 0.25));
            if hi <= lo {
                return 0.0;
            }
            let w = (hi - lo) / m as f64;
            (0..m)
                .map(|k| {
                    let t = lo + (k as f64 + 0.5) * w;
                    (1.0 + t) * (x - t) * (x - t) * w
                })
                .sum()
        };
        for x in [0.3, 0.6, 0.8, 1.1] {
            let val: f64 = pieces
                .iter()
                .filter(|(_, l, r)| *l <= x && x < *r)
                .map(|(p, _, _)| p.eval(x).re)
                .sum();
            assert!(
                (val - brute(x)).abs() < 1e-8,
                "x={x}: {val} vs {}",
                brute(x)
            );
        }
    }
}
