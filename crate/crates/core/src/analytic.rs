//! Entire-function diagnostics for `mu^(z) = int e^(-itz) dmu(t)`, the
//! support test for sums of derivative-weighted convolutions, and the
//! constructive identities `C f = B g` and `(CM - B) V^(z+1) f = (z+1) CV V^(z+1) f`.

use crate::error::{Error, Result};
use crate::grid::{first_above, GridFunction, NormKind};
use crate::kernel::{Kernel, RlOrder};
use crate::measure::{Atom, Measure, Piece};
use crate::scalar::{fmt_f64, C64, ONE, ZERO};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{self, Write};

/// Grid on which density pieces are compiled for Fourier evaluation.
pub const FOURIER_GRID: usize = 4096;
/// Radii per indicator window.
pub const RAY_POINTS: usize = 64;
/// Smallest admissible indicator radius.
pub const MIN_RADIUS: f64 = 50.0;
/// Relative threshold for the first nonzero kernel entry.
pub const SUPPORT_TOL: f64 = 1e-9;

/// `mu^` as a finite exponential sum: exact atoms plus compiled cells.
#[derive(Debug, Clone)]
pub struct FourierSum {
    terms: Vec<(f64, C64)>,
}

impl FourierSum {
    pub fn new(mu: &Measure) -> Result<Self> {
        let mut terms: Vec<(f64, C64)> = mu.atoms().iter().map(|a| (a.t, a.w)).collect();
        let dens = mu.density_part();
        if !dens.is_zero() {
            let k = dens.to_kernel(FOURIER_GRID)?.scaled_coefficients()?;
            let h = 1.0 / FOURIER_GRID as f64;
            terms.extend(
                k.into_iter()
                    .enumerate()
                    .filter(|(_, c)| *c != ZERO)
                    .map(|(m, c)| (m as f64 * h, c)),
            );
        }
        Ok(FourierSum { terms })
    }

    /// `ln |mu^(z)|` by log-sum-exp; `-inf` when the sum vanishes.
    pub fn log_abs(&self, z: C64) -> f64 {
        let logs: Vec<C64> = self
            .terms
            .iter()
            .map(|&(t, c)| c.ln() - C64::i() * t * z)
            .collect();
        let Some(top) = logs.iter().map(|l| l.re).reduce(f64::max) else {
            return f64::NEG_INFINITY;
        };
        let s: C64 = logs.iter().map(|l| C64::new(l.re - top, l.im).exp()).sum();
        top + s.norm().ln()
    }
}

pub fn fourier_log_abs(mu: &Measure, z: C64) -> Result<f64> {
    Ok(FourierSum::new(mu)?.log_abs(z))
}

/// `ln |mu^(r e^(i theta))|` along a ray.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySample {
    pub theta: f64,
    pub radii: Vec<f64>,
    pub log_abs: Vec<f64>,
}

impl RaySample {
    /// Writes `theta,r,log_abs,ratio` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "theta,r,log_abs,ratio")?;
        for (r, l) in self.radii.iter().zip(&self.log_abs) {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_f64(self.theta),
                fmt_f64(*r),
                fmt_f64(*l),
                fmt_f64(l / r)
            )?;
        }
        Ok(())
    }

    pub fn estimate(&self) -> f64 {
        self.radii
            .iter()
            .zip(&self.log_abs)
            .map(|(r, l)| l / r)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_ray(theta: f64, radius: f64) -> Result<()> {
    if !(theta > -PI && theta <= PI) || theta == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "theta {theta} outside (-pi, pi] \\ {{0}}"
        )));
    }
    if !(radius >= MIN_RADIUS && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "radius {radius} below {MIN_RADIUS}"
        )));
    }
    Ok(())
}

/// 64 log-spaced radii in `[R/2, R]`.
pub fn ray_sample(mu: &Measure, theta: f64, radius: f64) -> Result<RaySample> {
    check_ray(theta, radius)?;
    let sum = FourierSum::new(mu)?;
    let dir = C64::from_polar(1.0, theta);
    let radii: Vec<f64> = (0..RAY_POINTS)
        .map(|j| 0.5 * radius * 2f64.powf(j as f64 / (RAY_POINTS - 1) as f64))
        .collect();
    let log_abs = radii.iter().map(|&r| sum.log_abs(dir * r)).collect();
    Ok(RaySample {
        theta,
        radii,
        log_abs,
    })
}

/// Windowed `limsup ln|mu^(r e^(i theta))| / r`.
pub fn indicator_estimate(mu: &Measure, theta: f64, radius: f64) -> Result<f64> {
    Ok(ray_sample(mu, theta, radius)?.estimate())
}

/// `b sin(theta)` above the real axis, `a sin(theta)` below, with
/// `a = inf supp`, `b = sup supp`.
pub fn expected_indicator(mu: &Measure, theta: f64) -> f64 {
    let v = if (0.0..=PI).contains(&theta) {
        mu.sup_support() * theta.sin()
    } else {
        mu.inf_support() * theta.sin()
    };
    // normalizes -0.0
    v + 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorReport {
    pub theta: f64,
    pub estimate: f64,
    pub expected: f64,
    pub abs_error: f64,
}

pub fn indicator_report(
    mu: &Measure,
    theta: f64,
    radius: f64,
) -> Result<(RaySample, IndicatorReport)> {
    let ray = ray_sample(mu, theta, radius)?;
    let estimate = ray.estimate();
    let expected = expected_indicator(mu, theta);
    let report = IndicatorReport {
        theta,
        estimate,
        expected,
        abs_error: (estimate - expected).abs(),
    };
    Ok((ray, report))
}

/// `m h` for the first kernel entry above `SUPPORT_TOL * max`, or 1.
pub fn kernel_inf_support(k: &Kernel) -> f64 {
    let n = k.len();
    first_above(k.coefficients(), SUPPORT_TOL).map_or(1.0, |m| m as f64 / n as f64)
}

/// `inf supp` of the kernel of `sum_j c_j mu_1 * ... * mu_j' * ... * mu_n`.
pub fn ml_support_check(mus: &[Measure], cs: &[f64], n: usize) -> Result<f64> {
    if mus.is_empty() || mus.len() != cs.len() {
        return Err(Error::Precondition(
            "need one positive weight per measure".into(),
        ));
    }
    if let Some(c) = cs.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
        return Err(Error::Precondition(format!("weight {c} is not positive")));
    }
    if let Some(j) = mus.iter().position(|m| m.inf_support() != 0.0) {
        return Err(Error::Precondition(format!(
            "measure {j} has inf supp {} != 0",
            mus[j].inf_support()
        )));
    }
    if mus.iter().all(|m| m.atom_at_zero() != ZERO) {
        return Err(Error::Precondition("every measure has an atom at 0".into()));
    }
    let kernels = mus
        .iter()
        .map(|m| m.to_kernel(n))
        .collect::<Result<Vec<_>>>()?;
    let mut nu = Kernel::zero(n);
    for (j, (mu, &c)) in mus.iter().zip(cs).enumerate() {
        let mut term = mu.derivative_measure().to_kernel(n)?.renormalized();
        for (i, k) in kernels.iter().enumerate() {
            if i != j {
                term = term.compose(k)?;
            }
        }
        nu = nu.linear_combination(ONE, &term, C64::new(c, 0.0))?;
    }
    Ok(kernel_inf_support(&nu))
}

/// A random admissible tuple: 1 to 3 measures with `inf supp = 0`, positive
/// weights, and at least one measure without an atom at 0.
pub fn random_ml_tuple<R: Rng>(rng: &mut R) -> (Vec<Measure>, Vec<f64>) {
    let size = rng.random_range(1..=3);
    let free = rng.random_range(0..size);
    let mut mus = Vec::with_capacity(size);
    for j in 0..size {
        let mut atoms = Vec::new();
        if j != free && rng.random_bool(0.5) {
            atoms.push(Atom {
                t: 0.0,
                w: C64::new(rng.random_range(0.5..2.0), 0.0),
            });
        }
        if rng.random_bool(0.5) {
            let t = rng.random_range(1..8) as f64 / 8.0;
            atoms.push(Atom {
                t,
                w: C64::new(rng.random_range(0.5..2.0), 0.0),
            });
        }
        let deg = rng.random_range(0..=3);
        let coeffs: Vec<C64> = (0..=deg)
            .map(|d| {
                let c = if d == 0 {
                    rng.random_range(0.5..2.0)
                } else {
                    rng.random_range(-1.0..1.0)
                };
                C64::new(c, 0.0)
            })
            .collect();
        let r = rng.random_range(2..=8) as f64 / 8.0;
        let pieces = vec![Piece::Poly {
            coeffs,
            on: [0.0, r],
        }];
        mus.push(Measure::new(atoms, pieces).expect("generated measure is valid"));
    }
    let cs = (0..size).map(|_| rng.random_range(0.5..2.0)).collect();
    (mus, cs)
}

fn density_kernel(f: &GridFunction) -> Result<Kernel> {
    let h = f.step();
    Kernel::new(f.values().iter().map(|v| v * h).collect(), 0.0)
}

fn check_starts_at_zero(f: &GridFunction, name: &str) -> Result<()> {
    let s = f.inf_support(SUPPORT_TOL);
    if s > 2.0 * f.step() + 1e-15 {
        return Err(Error::Precondition(format!(
            "inf supp {name} = {s} exceeds 2h"
        )));
    }
    Ok(())
}

/// Kernels `C` (density `g`) and `B` (density `f`) with `C f = B g`.
pub fn trco_pair(f: &GridFunction, g: &GridFunction) -> Result<(Kernel, Kernel)> {
    if f.len() != g.len() {
        return Err(Error::SizeMismatch {
            left: f.len(),
            right: g.len(),
        });
    }
    check_starts_at_zero(f, "f")?;
    check_starts_at_zero(g, "g")?;
    Ok((density_kernel(g)?, density_kernel(f)?))
}

/// `||C f - B g||_inf`.
pub fn trco_residual(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    let (c, b) = trco_pair(f, g)?;
    c.apply(f)?.max_distance(&b.apply(g)?)
}

/// Relative sup-norm residual of `(CM - B) u = (z+1) C V u`, `u = V^(z+1) f`,
/// where `C` has density `f` and `B` has density `x f`.
pub fn brbrb_residual(f: &GridFunction, z: C64) -> Result<f64> {
    if z.re.is_nan() || z.re <= -1.0 {
        return Err(Error::Precondition(format!(
            "Re z = {} must exceed -1",
            z.re
        )));
    }
    check_starts_at_zero(f, "f")?;
    let n = f.len();
    let c = density_kernel(f)?;
    let b = density_kernel(&f.multiply_by_argument())?;
    let u = Kernel::riemann_liouville(RlOrder::new(z + 1.0)?, n).apply(f)?;
    let lhs = c.apply(&u.multiply_by_argument())?.sub(&b.apply(&u)?)?;
    let rhs = c.apply(&Kernel::volterra(n).apply(&u)?)?.scale(z + 1.0);
    let scale = rhs.norm(NormKind::Inf).max(lhs.norm(NormKind::Inf));
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(lhs.max_distance(&rhs)? / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FunctionSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dirac_transform_is_one() {
        let d = Measure::dirac();
        for z in [
            C64::new(3.0, 0.0),
            C64::new(-2.0, 400.0),
            C64::new(1.0, -500.0),
        ] {
            assert_eq!(fourier_log_abs(&d, z).unwrap(), 0.0);
        }
        assert_eq!(
            fourier_log_abs(&Measure::zero(), ONE).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn lebesgue_on_imaginary_axis() {
        let l = Measure::lebesgue();
        for r in [50.0, 300.0, 500.0] {
            let up = fourier_log_abs(&l, C64::new(0.0, r)).unwrap();
            let exact = r + (-(-r).exp()).ln_1p() - r.ln();
            assert!((up - exact).abs() / r < 1e-3, "r={r} {up} {exact}");
            let down = fourier_log_abs(&l, C64::new(0.0, -r)).unwrap();
            let exact = (-(-r).exp()).ln_1p() - r.ln();
            // left-edge cells shift the phase sum by about h r / 2
            assert!(
                (down - exact).abs() < r / FOURIER_GRID as f64,
                "r={r} {down} {exact}"
            );
        }
    }

    #[test]
    fn atomic_convolution_multiplies_transforms() {
        let a = Measure::dirac_at(0.25, C64::new(1.0, 0.5))
            .add(&Measure::dirac_at(0.5, C64::new(-2.0, 0.0)));
        let b = Measure::dirac_at(0.125, ONE).add(&Measure::dirac_at(0.375, C64::new(0.0, 3.0)));
        let ab = a.convolve(&b).unwrap();
        for z in [
            C64::new(1.0, 2.0),
            C64::new(-7.0, 30.0),
            C64::new(5.0, -40.0),
        ] {
            let lhs = fourier_log_abs(&ab, z).unwrap();
            let rhs = fourier_log_abs(&a, z).unwrap() + fourier_log_abs(&b, z).unwrap();
            assert!((lhs - rhs).abs() < 1e-12, "{lhs} {rhs}");
        }
    }

    #[test]
    fn indicator_of_lebesgue_and_two_atoms() {
        let l = Measure::lebesgue();
        assert!((indicator_estimate(&l, PI / 2.0, 300.0).unwrap() - 1.0).abs() <= 0.05);
        assert!(indicator_estimate(&l, -PI / 2.0, 300.0).unwrap().abs() <= 0.05);
        let two = Measure::dirac_at(0.5, ONE).add(&Measure::dirac_at(0.75, ONE));
        assert!((indicator_estimate(&two, PI / 2.0, 300.0).unwrap() - 0.75).abs() <= 0.05);
        assert!((indicator_estimate(&two, -PI / 2.0, 300.0).unwrap() + 0.5).abs() <= 0.05);
        assert!(indicator_estimate(&l, 0.0, 300.0).is_err());
        assert!(indicator_estimate(&l, 1.0, 10.0).is_err());
    }

    #[test]
    fn ray_radii_are_increasing() {
        let ray = ray_sample(&Measure::lebesgue(), 1.0, 100.0).unwrap();
        assert_eq!(ray.radii.len(), RAY_POINTS);
        assert!(ray.radii.windows(2).all(|w| w[1] > w[0]));
        assert!((ray.radii[0] - 50.0).abs() < 1e-12);
        assert!((ray.radii[RAY_POINTS - 1] - 100.0).abs() < 1e-9);
    }

    #[test]
    fn ml_examples() {
        let n = 2048;
        let h = 1.0 / n as f64;
        let l = Measure::lebesgue();
        assert!(ml_support_check(std::slice::from_ref(&l), &[1.0], n).unwrap() <= 2.0 * h);
        let dl = Measure::dirac().add(&l);
        assert!(ml_support_check(&[l.clone(), dl.clone()], &[1.0, 1.0], n).unwrap() <= 4.0 * h);
        assert!(matches!(
            ml_support_check(&[dl.clone(), Measure::dirac()], &[1.0, 1.0], n),
            Err(Error::Precondition(_))
        ));
        assert!(ml_support_check(&[Measure::dirac_at(0.5, ONE)], &[1.0], n).is_err());
        assert!(ml_support_check(&[l], &[-1.0], n).is_err());
    }

    #[test]
    fn ml_random_suite() {
        let n = 1024;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let (mus, cs) = random_ml_tuple(&mut rng);
            let s = ml_support_check(&mus, &cs, n).unwrap();
            assert!(s <= 4.0 / n as f64, "{s}");
        }
    }

    #[test]
    fn trco_examples() {
        let n = 512;
        let one = GridFunction::constant(1.0, n).unwrap();
        let x = GridFunction::sample(&FunctionSpec::poly(&[0.0, 1.0]), n).unwrap();
        let (c, b) = trco_pair(&one, &one).unwrap();
        assert_eq!(c, b);
        assert_eq!(trco_residual(&one, &x).unwrap(), 0.0);
        let (c, _) = trco_pair(&one, &x).unwrap();
        let cf = c.apply(&one).unwrap();
        let want = GridFunction::sample(&FunctionSpec::poly(&[0.0, 0.0, 0.5]), n).unwrap();
        assert!(cf.max_distance(&want).unwrap() <= 2.0 / n as f64);
        let shifted = GridFunction::sample(&FunctionSpec::constant(1.0).shifted(0.5), n).unwrap();
        assert!(trco_pair(&one, &shifted).is_err());
    }

    #[test]
    fn brbrb_halves() {
        let f = |n| GridFunction::constant(1.0, n).unwrap();
        for z in [ONE, C64::new(0.5, 0.5)] {
            let r1 = brbrb_residual(&f(512), z).unwrap();
            let r2 = brbrb_residual(&f(1024), z).unwrap();
            assert!(r1 <= 5e-2 && r2 <= 0.6 * r1, "{r1} {r2}");
        }
        assert!(brbrb_residual(&f(64), C64::new(-1.5, 0.0)).is_err());
        assert!(brbrb_residual(&f(64), ZERO).unwrap() < 0.2);
    }
}
