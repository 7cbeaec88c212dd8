//! Finite Borel measures on [0,1): grid-aligned atoms plus polynomial or
//! power-law densities. These are the symbols of truncated convolution
//! operators; [`Measure::to_kernel`] compiles them to discrete kernels.

use crate::error::{Error, Result};
use crate::grid::grid_index;
use crate::kernel::{rl_weights, Kernel, RlOrder};
use crate::poly::{convolve_pieces, integrate_with, Poly};
use crate::scalar::{self, gamma, gauss_legendre, C64, ONE, ZERO};
use serde::{Deserialize, Serialize};

/// Atoms closer than this are merged.
const ATOM_MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub t: f64,
    #[serde(with = "scalar::pair")]
    pub w: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Piece {
    /// Polynomial density in `x` on `[on[0], on[1])`.
    Poly {
        #[serde(with = "scalar::pairs")]
        coeffs: Vec<C64>,
        on: [f64; 2],
    },
    /// `coeff * x^(z-1) / Gamma(z)` on [0,1).
    Power {
        #[serde(with = "scalar::pair")]
        z: C64,
        #[serde(with = "scalar::pair", default = "one")]
        coeff: C64,
    },
}

fn one() -> C64 {
    ONE
}

impl Piece {
    fn poly(&self) -> Option<(Poly, f64, f64)> {
        match self {
            Piece::Poly { coeffs, on } => Some((Poly(coeffs.clone()).trimmed(), on[0], on[1])),
            Piece::Power { .. } => None,
        }
    }

    fn is_null(&self) -> bool {
        match self {
            Piece::Poly { coeffs, on } => coeffs.iter().all(|c| *c == ZERO) || on[1] <= on[0],
            Piece::Power { coeff, .. } => *coeff == ZERO,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Piece::Poly { coeffs, on } => {
                let [l, r] = *on;
                if !(0.0 <= l && l < r && r <= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "density interval [{l}, {r}) must lie in [0,1]"
                    )));
                }
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidArgument(
                        "non-finite density coefficient".into(),
                    ));
                }
            }
            Piece::Power { z, coeff } => {
                RlOrder::new(*z)?;
                if !coeff.is_finite() {
                    return Err(Error::InvalidArgument(
                        "non-finite power coefficient".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A finite measure on [0,1).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Measure {
    #[serde(default)]
    atoms: Vec<Atom>,
    #[serde(default)]
    pieces: Vec<Piece>,
}

impl Measure {
    /// Builds a measure, merging coincident atoms and dropping null parts.
    pub fn new(atoms: Vec<Atom>, pieces: Vec<Piece>) -> Result<Self> {
        let mut m = Measure::zero();
        for a in atoms {
            if !(a.t.is_finite() && (0.0..1.0).contains(&a.t)) {
                return Err(Error::InvalidArgument(format!(
                    "atom location {} outside [0,1)",
                    a.t
                )));
            }
            if !a.w.is_finite() {
                return Err(Error::InvalidArgument("non-finite atom weight".into()));
            }
            m.push_atom(a.t, a.w);
        }
        for p in pieces {
            p.validate()?;
            if !p.is_null() {
                m.pieces.push(p);
            }
        }
        Ok(m)
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        let raw: Measure = serde_json::from_str(s)?;
        Measure::new(raw.atoms, raw.pieces).map_err(serde::de::Error::custom)
    }

    pub fn zero() -> Self {
        Measure::default()
    }

    /// Point mass at 0 (the identity of the convolution algebra).
    pub fn dirac() -> Self {
        Self::dirac_at(0.0, ONE)
    }

    pub fn dirac_at(t: f64, w: C64) -> Self {
        let mut m = Measure::zero();
        m.push_atom(t, w);
        m
    }

    /// Lebesgue measure on [0,1).
    pub fn lebesgue() -> Self {
        Self::polynomial(&[1.0], 0.0, 1.0)
    }

    pub fn polynomial(coeffs: &[f64], l: f64, r: f64) -> Self {
        Self::polynomial_complex(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect(), l, r)
    }

    pub fn polynomial_complex(coeffs: Vec<C64>, l: f64, r: f64) -> Self {
        Measure::new(Vec::new(), vec![Piece::Poly { coeffs, on: [l, r] }])
            .expect("valid polynomial density")
    }

    /// Measure with density `x^(z-1)/Gamma(z)`.
    pub fn riemann_liouville(order: RlOrder) -> Self {
        Measure {
            atoms: Vec::new(),
            pieces: vec![Piece::Power {
                z: order.z(),
                coeff: ONE,
            }],
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.pieces.is_empty()
    }

    fn push_atom(&mut self, t: f64, w: C64) {
        if let Some(a) = self
            .atoms
            .iter_mut()
            .find(|a| (a.t - t).abs() < ATOM_MERGE_TOL)
        {
            a.w += w;
        } else {
            self.atoms.push(Atom { t, w });
        }
        self.atoms.retain(|a| a.w != ZERO);
        self.atoms.sort_by(|a, b| a.t.total_cmp(&b.t));
    }

    pub fn add(&self, other: &Measure) -> Measure {
        let mut m = self.clone();
        for a in &other.atoms {
            m.push_atom(a.t, a.w);
        }
        m.pieces.extend(other.pieces.iter().cloned());
        m
    }

    pub fn scale(&self, c: C64) -> Measure {
        if c == ZERO {
            return Measure::zero();
        }
        Measure {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom { t: a.t, w: a.w * c })
                .collect(),
            pieces: self
                .pieces
                .iter()
                .map(|p| match p {
                    Piece::Poly { coeffs, on } => Piece::Poly {
                        coeffs: coeffs.iter().map(|&x| x * c).collect(),
                        on: *on,
                    },
                    Piece::Power { z, coeff } => Piece::Power {
                        z: *z,
                        coeff: coeff * c,
                    },
                })
                .collect(),
        }
    }

    /// The part without atoms.
    pub fn density_part(&self) -> Measure {
        Measure {
            atoms: Vec::new(),
            pieces: self.pieces.clone(),
        }
    }

    /// `mu({0})`.
    pub fn atom_at_zero(&self) -> C64 {
        self.atoms
            .iter()
            .find(|a| a.t.abs() < ATOM_MERGE_TOL)
            .map_or(ZERO, |a| a.w)
    }

    /// Full variation `||mu||`.
    pub fn total_variation(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.w.norm()).sum();
        let pieces: f64 = self
            .pieces
            .iter()
            .map(|p| match p {
                Piece::Poly { coeffs, on } => Poly(coeffs.clone()).integrate_abs(on[0], on[1]),
                // int_0^1 |x^(z-1)| dx = 1 / Re z
                Piece::Power { z, coeff } => coeff.norm() / (z.re * gamma(*z).norm()),
            })
            .sum();
        atoms + pieces
    }

    /// The measure `mu'` with density `-x` with respect to `mu`.
    pub fn derivative_measure(&self) -> Measure {
        let mut m = Measure::zero();
        for a in &self.atoms {
            let w = a.w * -a.t;
            if w != ZERO {
                m.push_atom(a.t, w);
            }
        }
        for p in &self.pieces {
            let q = match p {
                Piece::Poly { coeffs, on } => Piece::Poly {
                    coeffs: Poly(coeffs.clone()).times_x().scale(-ONE).0,
                    on: *on,
                },
                // -x * x^(z-1)/Gamma(z) = -z * x^z/Gamma(z+1)
                Piece::Power { z, coeff } => Piece::Power {
                    z: z + 1.0,
                    coeff: -coeff * z,
                },
            };
            if !q.is_null() {
                m.pieces.push(q);
            }
        }
        m
    }

    /// `inf supp(mu)`, or `1` for the zero measure.
    pub fn inf_support(&self) -> f64 {
        let atoms = self.atoms.iter().map(|a| a.t);
        let pieces = self.pieces.iter().map(|p| match p {
            Piece::Poly { on, .. } => on[0],
            Piece::Power { .. } => 0.0,
        });
        atoms.chain(pieces).fold(1.0, f64::min)
    }

    /// `sup supp(mu)`, or `0` for the zero measure.
    pub fn sup_support(&self) -> f64 {
        let atoms = self.atoms.iter().map(|a| a.t);
        let pieces = self.pieces.iter().map(|p| match p {
            Piece::Poly { on, .. } => on[1],
            Piece::Power { .. } => 1.0,
        });
        atoms.chain(pieces).fold(0.0, f64::max)
    }

    /// Restriction to [0,1) of `mu * nu`, for atoms and polynomial densities.
    pub fn convolve(&self, other: &Measure) -> Result<Measure> {
        if self.has_power_piece() || other.has_power_piece() {
            return Err(Error::Unsupported(
                "symbolic convolution of power-law densities; compose kernels instead".into(),
            ));
        }
        let mut out = Measure::zero();
        for a in &self.atoms {
            for b in &other.atoms {
                let t = a.t + b.t;
                if t < 1.0 - ATOM_MERGE_TOL {
                    out.push_atom(t, a.w * b.w);
                }
            }
        }
        let mut pieces: Vec<(Poly, f64, f64)> = Vec::new();
        for (atoms, polys) in [(&self.atoms, other), (&other.atoms, self)] {
            for a in atoms {
                for p in &polys.pieces {
                    let (poly, l, r) = p.poly().expect("polynomial piece");
                    let (lo, hi) = (l + a.t, (r + a.t).min(1.0));
                    if lo < hi {
                        pieces.push((poly.shift_argument(a.t).scale(a.w), lo, hi));
                    }
                }
            }
        }
        for p in &self.pieces {
            let (pp, l1, r1) = p.poly().expect("polynomial piece");
            for q in &other.pieces {
                let (qp, l2, r2) = q.poly().expect("polynomial piece");
                for (poly, lo, hi) in convolve_pieces(&pp, (l1, r1), &qp, (l2, r2)) {
                    let hi = hi.min(1.0);
                    if lo < hi {
                        pieces.push((poly, lo, hi));
                    }
                }
            }
        }
        // merge pieces over identical intervals
        let mut merged: Vec<(Poly, f64, f64)> = Vec::new();
        for (poly, lo, hi) in pieces {
            match merged.iter_mut().find(|(_, l, h)| {
                (l - lo).abs() < ATOM_MERGE_TOL && (h - hi).abs() < ATOM_MERGE_TOL
            }) {
                Some(slot) => slot.0 = slot.0.add(&poly),
                None => merged.push((poly, lo, hi)),
            }
        }
        for (poly, lo, hi) in merged {
            if !poly.is_zero() {
                out.pieces.push(Piece::Poly {
                    coeffs: poly.0,
                    on: [lo, hi],
                });
            }
        }
        Ok(out)
    }

    fn has_power_piece(&self) -> bool {
        self.pieces.iter().any(|p| matches!(p, Piece::Power { .. }))
    }

    /// Compiles the measure to a kernel of size `n`: entry `m` is the mass of
    /// the cell `[m/n, (m+1)/n)`.
    pub fn to_kernel(&self, n: usize) -> Result<Kernel> {
        if n == 0 {
            return Err(Error::GridSize(0));
        }
        let h = 1.0 / n as f64;
        let mut k = vec![ZERO; n];
        for a in &self.atoms {
            let m = grid_index(a.t, n, "atom location")?;
            if m < n {
                k[m] += a.w;
            }
        }
        for p in &self.pieces {
            match p {
                Piece::Poly { coeffs, on } => {
                    let poly = Poly(coeffs.clone()).trimmed();
                    let rule = gauss_legendre(poly.0.len().div_ceil(2).max(1));
                    let first = (on[0] * n as f64).floor() as usize;
                    let last = ((on[1] * n as f64).ceil() as usize).min(n);
                    for (m, slot) in k.iter_mut().enumerate().take(last).skip(first) {
                        let a = (m as f64 * h).max(on[0]);
                        let b = ((m + 1) as f64 * h).min(on[1]);
                        if b > a {
                            *slot += integrate_with(&rule, &poly, a, b);
                        }
                    }
                }
                Piece::Power { z, coeff } => {
                    let w = rl_weights(RlOrder::new(*z)?, n);
                    for (slot, wm) in k.iter_mut().zip(w) {
                        *slot += coeff * wm;
                    }
                }
            }
        }
        Kernel::new(k, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn total_variation_examples() {
        assert_eq!(Measure::dirac().total_variation(), 1.0);
        assert!((Measure::lebesgue().total_variation() - 1.0).abs() < 1e-15);
        let half = Measure::riemann_liouville(RlOrder::new(c(0.5)).unwrap());
        let expect = 2.0 / std::f64::consts::PI.sqrt();
        assert!((half.total_variation() - expect).abs() < 1e-12);
    }

    #[test]
    fn derivative_examples() {
        assert!(Measure::dirac().derivative_measure().is_zero());
        let lp = Measure::lebesgue().derivative_measure();
        assert_eq!(lp, Measure::polynomial(&[0.0, -1.0], 0.0, 1.0));
        let shifted = Measure::dirac_at(0.4, ONE).derivative_measure();
        assert_eq!(shifted, Measure::dirac_at(0.4, c(-0.4)));
        // power law: -z a_{z+1}
        let half = Measure::riemann_liouville(RlOrder::new(c(0.5)).unwrap()).derivative_measure();
        assert_eq!(
            half.pieces(),
            &[Piece::Power {
                z: c(1.5),
                coeff: c(-0.5)
            }]
        );
    }

    #[test]
    fn convolution_examples() {
        let lam = Measure::lebesgue();
        assert_eq!(Measure::dirac().convolve(&lam).unwrap(), lam);
        let a = Measure::dirac_at(0.3, ONE);
        let b = Measure::dirac_at(0.4, ONE);
        let ab = a.convolve(&b).unwrap();
        assert_eq!(ab.atoms().len(), 1);
        assert!((ab.atoms()[0].t - 0.7).abs() < 1e-15);
        assert_eq!(ab.atoms()[0].w, ONE);
        // beyond 1: dropped
        assert!(Measure::dirac_at(0.6, ONE)
            .convolve(&Measure::dirac_at(0.5, ONE))
            .unwrap()
            .is_zero());
        let ll = lam.convolve(&lam).unwrap();
        assert_eq!(ll.pieces().len(), 1);
        match &ll.pieces()[0] {
            Piece::Poly { coeffs, on } => {
                assert_eq!(*on, [0.0, 1.0]);
                let p = Poly(coeffs.clone()).trimmed();
                assert!((p.eval(0.3) - c(0.3)).norm() < 1e-15);
                assert!(p.degree() <= 1);
            }
            other => panic!("unexpected {other:?}"),
        }
        let rl = Measure::riemann_liouville(RlOrder::new(c(0.5)).unwrap());
        assert!(matches!(rl.convolve(&lam), Err(Error::Unsupported(_))));
    }

    #[test]
    fn atom_shifts_polynomial() {
        // delta_{0.25} * (x on [0,1)) = (x - 0.25) on [0.25, 1)
        let m = Measure::dirac_at(0.25, ONE)
            .convolve(&Measure::polynomial(&[0.0, 1.0], 0.0, 1.0))
            .unwrap();
        match &m.pieces()[0] {
            Piece::Poly { coeffs, on } => {
                assert_eq!(*on, [0.25, 1.0]);
                assert!((Poly(coeffs.clone()).eval(0.5) - c(0.25)).norm() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn support_queries() {
        assert_eq!(Measure::lebesgue().inf_support(), 0.0);
        assert_eq!(Measure::dirac_at(0.4, ONE).inf_support(), 0.4);
        assert_eq!(Measure::zero().inf_support(), 1.0);
        assert_eq!(Measure::dirac_at(0.4, ONE).sup_support(), 0.4);
    }

    #[test]
    fn atom_at_zero_examples() {
        assert_eq!(Measure::dirac().atom_at_zero(), ONE);
        assert_eq!(Measure::lebesgue().atom_at_zero(), ZERO);
        let m = Measure::dirac().scale(c(2.0)).add(&Measure::lebesgue());
        assert_eq!(m.atom_at_zero(), c(2.0));
    }

    #[test]
    fn kernel_compilation() {
        let k = Measure::dirac().to_kernel(8).unwrap();
        assert_eq!(k.coefficients()[0], ONE);
        assert!(k.coefficients()[1..].iter().all(|z| *z == ZERO));
        let k = Measure::lebesgue().to_kernel(4).unwrap();
        assert_eq!(k.coefficients(), &[c(0.25); 4]);
        let rl1 = Measure::riemann_liouville(RlOrder::new(ONE).unwrap())
            .to_kernel(4)
            .unwrap();
        for (a, b) in rl1.coefficients().iter().zip(k.coefficients()) {
            assert!((a - b).norm() < 1e-15);
        }
        assert!(matches!(
            Measure::dirac_at(0.4, ONE).to_kernel(16),
            Err(Error::NotGridAligned { .. })
        ));
        let k = Measure::dirac_at(0.4, ONE).to_kernel(10).unwrap();
        assert_eq!(k.coefficients()[4], ONE);
    }

    #[test]
    fn partial_cells_integrate_exactly() {
        // density 1 on [0.1, 0.35) at N = 4: cells [0,.25) and [.25,.5)
        let k = Measure::polynomial(&[1.0], 0.1, 0.35).to_kernel(4).unwrap();
        let v = k.coefficients();
        assert!((v[0].re - 0.15).abs() < 1e-15);
        assert!((v[1].re - 0.10).abs() < 1e-15);
        assert_eq!(v[2], ZERO);
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let m = Measure::from_json(
            r#"{"atoms":[{"t":0.0,"w":[1,0]}],"pieces":[{"type":"poly","coeffs":[1],"on":[0,1]},{"type":"power","z":[0.5,0]}]}"#,
        )
        .unwrap();
        assert_eq!(m.atom_at_zero(), ONE);
        assert_eq!(m.pieces().len(), 2);
        let back = Measure::from_json(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(Measure::from_json(r#"{"atoms":[{"t":1.5,"w":[1,0]}]}"#).is_err());
        assert!(Measure::from_json(r#"{"pieces":[{"type":"power","z":[-1,0]}]}"#).is_err());
        assert!(
            Measure::from_json(r#"{"pieces":[{"type":"poly","coeffs":[1],"on":[0.5,0.2]}]}"#)
                .is_err()
        );
    }

    #[test]
    fn coincident_atoms_merge() {
        let m = Measure::new(
            vec![Atom { t: 0.5, w: ONE }, Atom { t: 0.5, w: c(2.0) }],
            Vec::new(),
        )
        .unwrap();
        assert_eq!(m.atoms(), &[Atom { t: 0.5, w: c(3.0) }]);
        let cancel = Measure::dirac().add(&Measure::dirac().scale(-ONE));
        assert!(cancel.is_zero());
    }
}
