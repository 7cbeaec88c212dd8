//! Invariant checks for every module, keyed by a stable ID and run in
//! parallel. Reports are sorted by ID so output does not depend on
//! scheduling.

use crate::analytic::{
    fourier_log_abs, indicator_estimate, ml_support_check, random_ml_tuple, trco_pair,
};
use crate::error::{Error, Result};
use crate::grid::{FunctionSpec, GridFunction, NormKind};
use crate::kernel::{operator_norm_trace, Kernel, RlOrder};
use crate::measure::Measure;
use crate::orbit::{growth_exponent_of, iterate_orbit, resolvent_kernel};
use crate::scalar::{C64, ONE, ZERO};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "TRUNCON_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: String,
    pub description: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

type Outcome = (bool, String);

struct Check {
    id: &'static str,
    description: &'static str,
    run: fn(u64) -> Result<Outcome>,
}

const CHECKS: &[Check] = &[
    Check {
        id: "grid.holder_chain",
        description: "||f||_1 <= ||f||_2 <= ||f||_inf",
        run: grid_holder_chain,
    },
    Check {
        id: "grid.mx_support",
        description: "inf supp(Mf) = inf supp(f)",
        run: grid_mx_support,
    },
    Check {
        id: "grid.refinement",
        description: "samples at N and 2N agree at shared nodes",
        run: grid_refinement,
    },
    Check {
        id: "measure.kernel_linear",
        description: "to_kernel is additive and homogeneous",
        run: measure_kernel_linear,
    },
    Check {
        id: "measure.titchmarsh",
        description: "inf supp(mu * nu) = min(1, inf mu + inf nu)",
        run: measure_titchmarsh,
    },
    Check {
        id: "measure.kernel_consistency",
        description: "kernel of mu * nu matches composed kernels",
        run: measure_kernel_consistency,
    },
    Check {
        id: "measure.tv_submultiplicative",
        description: "||mu * nu|| <= ||mu|| ||nu||",
        run: measure_tv_submultiplicative,
    },
    Check {
        id: "conv.semigroup",
        description: "V^z V^w f -> V^(z+w) f with order >= 0.5",
        run: conv_semigroup,
    },
    Check {
        id: "conv.gelfand",
        description: "ln||(T - mu({0}) I)^n|| / n decreases",
        run: conv_gelfand,
    },
    Check {
        id: "conv.nilpotency",
        description: "inf supp mu = a > 0 gives T^ceil(1/a) = 0",
        run: conv_nilpotency,
    },
    Check {
        id: "conv.commutator",
        description: "[C_mu, M] f = C_mu' f within C h, halving",
        run: conv_commutator,
    },
    Check {
        id: "conv.commutator_nonzero",
        description: "mu' != 0 gives [C_mu, M] 1 != 0",
        run: conv_commutator_nonzero,
    },
    Check {
        id: "conv.exp_semigroup",
        description: "e^(sA) e^(tA) = e^((s+t)A)",
        run: conv_exp_semigroup,
    },
    Check {
        id: "orbit.scale_invariance",
        description: "orbit of c f shifts by ln|c|",
        run: orbit_scale_invariance,
    },
    Check {
        id: "orbit.norm_growth",
        description: "operator-norm trace of I + V grows like 2 sqrt n",
        run: orbit_norm_growth,
    },
    Check {
        id: "orbit.submultiplicative",
        description: "Lambda_(m+n) <= Lambda_m + ln||T^n||",
        run: orbit_submultiplicative,
    },
    Check {
        id: "orbit.decay_direction",
        description: "I - V trend tends to 0 while the trace decreases",
        run: orbit_decay_direction,
    },
    Check {
        id: "analytic.fourier_products",
        description: "delta^ = 1 and atomic convolutions multiply",
        run: analytic_fourier_products,
    },
    Check {
        id: "analytic.indicator_stable",
        description: "doubling R moves the indicator by <= 0.05",
        run: analytic_indicator_stable,
    },
    Check {
        id: "analytic.ml_random",
        description: "support check <= 4h on 20 random tuples",
        run: analytic_ml_random,
    },
    Check {
        id: "analytic.trco_injective",
        description: "trco kernels have nonzero leading entries",
        run: analytic_trco_injective,
    },
    Check {
        id: "cli.determinism",
        description: "same seed gives byte-identical output",
        run: cli_determinism,
    },
];

/// IDs of every registered check, sorted.
pub fn check_ids() -> Vec<&'static str> {
    let mut ids: Vec<_> = CHECKS.iter().map(|c| c.id).collect();
    ids.sort_unstable();
    ids
}

/// Worker count from `TRUNCON_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs all checks whose ID starts with `filter` (all when `None`).
pub fn run_checks(seed: u64, filter: Option<&str>) -> Result<Report> {
    let selected: Vec<&Check> = CHECKS
        .iter()
        .filter(|c| filter.is_none_or(|f| c.id.starts_with(f)))
        .collect();
    if selected.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no check matches {:?}",
            filter.unwrap_or("")
        )));
    }
    let run = || -> Vec<CheckResult> {
        selected
            .par_iter()
            .map(|c| {
                let (passed, detail) = match (c.run)(seed) {
                    Ok(o) => o,
                    Err(e) => (false, format!("error: {e}")),
                };
                CheckResult {
                    id: c.id.to_string(),
                    description: c.description.to_string(),
                    passed,
                    detail,
                }
            })
            .collect()
    };
    let mut checks = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    checks.sort_by(|a, b| a.id.cmp(&b.id));
    let passed = checks.iter().all(|c| c.passed);
    Ok(Report {
        seed,
        passed,
        checks,
    })
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn random_poly<R: Rng>(rng: &mut R, max_deg: usize) -> FunctionSpec {
    let deg = rng.random_range(0..=max_deg);
    let coeffs: Vec<f64> = (0..=deg).map(|_| rng.random_range(-2.0..2.0)).collect();
    FunctionSpec::Poly {
        coeffs: coeffs.into_iter().map(c).collect(),
    }
}

fn grid_holder_chain(seed: u64) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..50 {
        let n = [16, 64, 256, 1000][rng.random_range(0..4)];
        let v: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let f = GridFunction::from_values(v)?;
        let (n1, n2, ni) = (
            f.norm(NormKind::One),
            f.norm(NormKind::Two),
            f.norm(NormKind::Inf),
        );
        worst = worst.max((n1 - n2) / n2).max((n2 - ni) / ni);
    }
    Ok((
        worst <= 1e-12,
        format!("max relative violation {worst:.3e}"),
    ))
}

fn grid_mx_support(_: u64) -> Result<Outcome> {
    let n = 512;
    for t0 in [0.0, 0.125, 0.5, 0.75] {
        let f = GridFunction::sample(&FunctionSpec::poly(&[1.0, -0.5]).shifted(t0), n)?;
        let a = f.inf_support(1e-12);
        let b = f.multiply_by_argument().inf_support(1e-12);
        if a != b {
            return Ok((false, format!("t0={t0}: {a} vs {b}")));
        }
    }
    Ok((true, "4 shifts agree".into()))
}

fn grid_refinement(_: u64) -> Result<Outcome> {
    let specs = [
        FunctionSpec::poly(&[0.5, -1.0, 3.0, 0.25]),
        FunctionSpec::Power { gamma: -0.5 },
        FunctionSpec::Power { gamma: 1.7 },
        FunctionSpec::poly(&[1.0, 1.0]).shifted(0.25),
    ];
    for spec in &specs {
        let a = GridFunction::sample(spec, 256)?;
        let b = GridFunction::sample(spec, 512)?;
        for i in 0..256 {
            if a.values()[i] != b.values()[2 * i + 1] {
                return Ok((false, format!("{spec:?} differs at node {i}")));
            }
        }
    }
    Ok((true, format!("{} specs exact", specs.len())))
}

fn coeff_distance(a: &Kernel, b: &Kernel) -> Result<f64> {
    let (x, y) = (a.scaled_coefficients()?, b.scaled_coefficients()?);
    Ok(x.iter()
        .zip(&y)
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max))
}

fn sample_measures() -> Vec<Measure> {
    vec![
        Measure::lebesgue(),
        Measure::dirac_at(0.25, c(2.0)).add(&Measure::polynomial(&[1.0, -1.0], 0.0, 0.5)),
        Measure::polynomial(&[0.0, 0.0, 3.0], 0.375, 1.0),
        Measure::dirac().add(&Measure::dirac_at(0.625, C64::new(0.0, -1.0))),
    ]
}

fn measure_kernel_linear(_: u64) -> Result<Outcome> {
    let n = 256;
    let ms = sample_measures();
    let (a, b) = (C64::new(1.5, -0.5), c(-2.0));
    let mut worst: f64 = 0.0;
    for x in &ms {
        for y in &ms {
            let lhs = x.scale(a).add(&y.scale(b)).to_kernel(n)?;
            let rhs = x.to_kernel(n)?.linear_combination(a, &y.to_kernel(n)?, b)?;
            worst = worst.max(coeff_distance(&lhs, &rhs)?);
        }
    }
    Ok((worst <= 1e-12, format!("max coefficient gap {worst:.3e}")))
}

fn measure_titchmarsh(_: u64) -> Result<Outcome> {
    let ms = sample_measures();
    for x in &ms {
        for y in &ms {
            let got = x.convolve(y)?.inf_support();
            let want = (x.inf_support() + y.inf_support()).min(1.0);
            if (got - want).abs() > 1e-12 {
                return Ok((false, format!("got {got}, want {want}")));
            }
        }
    }
    Ok((true, format!("{} pairs", ms.len() * ms.len())))
}

fn measure_kernel_consistency(_: u64) -> Result<Outcome> {
    let n = 256;
    let h = 1.0 / n as f64;
    let atomic = [
        Measure::dirac_at(0.25, c(2.0)).add(&Measure::dirac_at(0.5, c(-1.0))),
        Measure::dirac().add(&Measure::dirac_at(0.125, C64::new(0.0, 1.0))),
    ];
    let prod = atomic[0].convolve(&atomic[1])?.to_kernel(n)?;
    let comp = atomic[0].to_kernel(n)?.compose(&atomic[1].to_kernel(n)?)?;
    let exact = prod.scaled_coefficients()? == comp.scaled_coefficients()?;
    let ms = sample_measures();
    let mut worst: f64 = 0.0;
    for x in &ms {
        for y in &ms {
            let a = x.convolve(y)?.to_kernel(n)?.scaled_coefficients()?;
            let b = x
                .to_kernel(n)?
                .compose(&y.to_kernel(n)?)?
                .scaled_coefficients()?;
            let tv: f64 = a.iter().zip(&b).map(|(p, q)| (p - q).norm()).sum();
            worst = worst.max(tv / h);
        }
    }
    Ok((
        exact && worst <= 10.0,
        format!("atomic exact: {exact}; max variation gap / h = {worst:.3}"),
    ))
}

fn measure_tv_submultiplicative(_: u64) -> Result<Outcome> {
    let ms = sample_measures();
    for x in &ms {
        for y in &ms {
            let lhs = x.convolve(y)?.total_variation();
            let rhs = x.total_variation() * y.total_variation();
            if lhs > rhs * (1.0 + 1e-9) {
                return Ok((false, format!("{lhs} > {rhs}")));
            }
        }
    }
    Ok((true, format!("{} pairs", ms.len() * ms.len())))
}

fn semigroup_error(z: C64, w: C64, f: &FunctionSpec, n: usize) -> Result<f64> {
    let g = GridFunction::sample(f, n)?;
    let vz = Kernel::riemann_liouville(RlOrder::new(z)?, n);
    let vw = Kernel::riemann_liouville(RlOrder::new(w)?, n);
    let vzw = Kernel::riemann_liouville(RlOrder::new(z + w)?, n);
    vz.compose(&vw)?.apply(&g)?.max_distance(&vzw.apply(&g)?)
}

/// Smallest observed order `log2(e_N / e_2N)` over successive doublings.
fn min_order(errors: &[f64]) -> f64 {
    errors
        .windows(2)
        .map(|w| {
            if w[1] == 0.0 {
                f64::INFINITY
            } else {
                (w[0] / w[1]).log2()
            }
        })
        .fold(f64::INFINITY, f64::min)
}

fn conv_semigroup(_: u64) -> Result<Outcome> {
    let orders = [c(0.5), ONE, C64::new(0.3, 0.4)];
    let fs = [FunctionSpec::constant(1.0), FunctionSpec::poly(&[0.0, 1.0])];
    let mut worst = f64::INFINITY;
    for (i, &z) in orders.iter().enumerate() {
        for &w in &orders[i..] {
            for f in &fs {
                let errs = [256, 512, 1024]
                    .iter()
                    .map(|&n| semigroup_error(z, w, f, n))
                    .collect::<Result<Vec<_>>>()?;
                worst = worst.min(min_order(&errs));
            }
        }
    }
    Ok((worst >= 0.5, format!("min order {worst:.3}")))
}

fn conv_gelfand(_: u64) -> Result<Outcome> {
    let n = 1024;
    let mu = Measure::dirac()
        .scale(c(2.0))
        .add(&Measure::lebesgue())
        .add(&Measure::dirac_at(0.25, c(-1.0)));
    let t = mu.to_kernel(n)?.sub_identity(mu.atom_at_zero())?;
    let rates: Vec<f64> = [8u64, 16, 32, 64]
        .iter()
        .map(|&k| Ok(t.power(k)?.operator_norm_1() / k as f64))
        .collect::<Result<_>>()?;
    let ok = rates.windows(2).all(|w| w[1] < w[0]);
    Ok((ok, format!("rates {rates:.3?}")))
}

fn conv_nilpotency(_: u64) -> Result<Outcome> {
    let n = 640;
    let cases = [
        (Measure::dirac_at(0.4, ONE), 3u64),
        (Measure::polynomial(&[1.0, 2.0], 0.25, 1.0), 4),
        (
            Measure::dirac_at(0.5, c(3.0)).add(&Measure::polynomial(&[1.0], 0.6, 0.9)),
            2,
        ),
    ];
    for (mu, order) in &cases {
        let k = mu.to_kernel(n)?;
        if !k.power(*order)?.is_zero() || k.power(order - 1)?.is_zero() {
            return Ok((false, format!("order {order} wrong for {mu:?}")));
        }
    }
    Ok((true, format!("{} measures", cases.len())))
}

fn commutator_residual(mu: &Measure, f: &FunctionSpec, n: usize) -> Result<f64> {
    let g = GridFunction::sample(f, n)?;
    let lhs = mu.to_kernel(n)?.commutator_with_m(&g)?;
    let rhs = mu.derivative_measure().to_kernel(n)?.apply(&g)?;
    lhs.max_distance(&rhs)
}

fn conv_commutator(_: u64) -> Result<Outcome> {
    let mus = [
        Measure::lebesgue(),
        Measure::dirac_at(0.3, ONE),
        Measure::polynomial(&[0.0, 1.0], 0.0, 1.0),
    ];
    let f = FunctionSpec::poly(&[1.0, -1.0, 2.0]);
    let mut details = Vec::new();
    let mut ok = true;
    for mu in &mus {
        let errs = [640, 1280, 2560]
            .iter()
            .map(|&n| commutator_residual(mu, &f, n))
            .collect::<Result<Vec<_>>>()?;
        let scaled = errs[0] * 640.0;
        let exact = errs.iter().all(|e| *e <= 1e-12);
        let halves = errs.windows(2).all(|w| w[1] <= 0.6 * w[0]);
        ok &= exact || (halves && scaled <= 10.0);
        details.push(
            errs.iter()
                .map(|e| format!("{e:.3e}"))
                .collect::<Vec<_>>()
                .join("/"),
        );
    }
    Ok((ok, details.join("; ")))
}

fn conv_commutator_nonzero(_: u64) -> Result<Outcome> {
    let n = 64;
    let one = GridFunction::constant(1.0, n)?;
    let mus = [
        Measure::lebesgue(),
        Measure::dirac_at(0.5, ONE),
        Measure::polynomial(&[0.0, 1.0], 0.25, 0.75),
        Measure::dirac().add(&Measure::dirac_at(0.125, c(-1.0))),
    ];
    for mu in &mus {
        if mu.derivative_measure().is_zero() {
            continue;
        }
        let comm = mu.to_kernel(n)?.commutator_with_m(&one)?;
        if comm.norm(NormKind::Inf) == 0.0 {
            return Ok((false, format!("vanishing commutator for {mu:?}")));
        }
    }
    Ok((true, format!("{} measures", mus.len())))
}

fn conv_exp_semigroup(_: u64) -> Result<Outcome> {
    let n = 256;
    let a = Measure::dirac()
        .scale(C64::new(0.5, 0.25))
        .add(&Measure::lebesgue())
        .add(&Measure::dirac_at(0.25, c(-0.75)))
        .to_kernel(n)?;
    let ts = [0.25, 0.5, 1.0];
    let mut worst: f64 = 0.0;
    for &s in &ts {
        for &t in &ts {
            let lhs = a.scale(c(s)).op_exp()?.compose(&a.scale(c(t)).op_exp()?)?;
            let rhs = a.scale(c(s + t)).op_exp()?;
            let (x, y) = (lhs.scaled_coefficients()?, rhs.scaled_coefficients()?);
            let scale = y.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let gap = x
                .iter()
                .zip(&y)
                .map(|(p, q)| (p - q).norm())
                .fold(0.0, f64::max);
            worst = worst.max(gap / scale);
        }
    }
    Ok((worst <= 1e-8, format!("max relative gap {worst:.3e}")))
}

fn i_plus_v(n: usize) -> Result<Kernel> {
    resolvent_kernel(&FunctionSpec::constant(1.0), n)
}

fn i_minus_v(n: usize) -> Result<Kernel> {
    resolvent_kernel(&FunctionSpec::constant(-1.0), n)
}

fn orbit_scale_invariance(_: u64) -> Result<Outcome> {
    let n = 256;
    let f = GridFunction::sample(&FunctionSpec::poly(&[1.0, 0.5, -0.25]), n)?;
    let mut worst: f64 = 0.0;
    for t in [i_plus_v(n)?, i_minus_v(n)?] {
        let base = iterate_orbit(&t, &f, NormKind::One, 200)?;
        for cst in [c(3.5), c(-1e-3), C64::new(0.0, 7.0)] {
            let tr = iterate_orbit(&t, &f.scale(cst), NormKind::One, 200)?;
            let shift = cst.norm().ln();
            for (a, b) in base.log_norms.iter().zip(&tr.log_norms) {
                worst = worst.max((b - a - shift).abs());
            }
            let (ea, eb) = (
                growth_exponent_of(&base.log_norms, 1.0)?,
                growth_exponent_of(&tr.log_norms, 1.0)?,
            );
            worst = worst.max((ea.estimate - eb.estimate).abs());
        }
    }
    Ok((worst <= 1e-12, format!("max deviation {worst:.3e}")))
}

fn orbit_norm_growth(_: u64) -> Result<Outcome> {
    let n = 512;
    let t = i_plus_v(n)?;
    let early = (2.0 - growth_exponent_of(&operator_norm_trace(&t, 500)?, 1.0)?.estimate).abs();
    let late = (2.0 - growth_exponent_of(&operator_norm_trace(&t, 2000)?, 1.0)?.estimate).abs();
    Ok((
        late < early && late <= 0.3,
        format!("|estimate - 2| at n=500: {early:.4}, n=2000: {late:.4}"),
    ))
}

fn orbit_submultiplicative(seed: u64) -> Result<Outcome> {
    let n = 128;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random = Measure::dirac()
        .scale(c(rng.random_range(-1.5..1.5)))
        .add(&Measure::polynomial(
            &[rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)],
            0.0,
            1.0,
        ))
        .to_kernel(n)?;
    let f = GridFunction::sample(&random_poly(&mut rng, 3), n)?;
    let mut worst = f64::NEG_INFINITY;
    for t in [i_plus_v(n)?, i_minus_v(n)?, random] {
        let orbit = iterate_orbit(&t, &f, NormKind::One, 120)?;
        let norms = operator_norm_trace(&t, 60)?;
        for _ in 0..40 {
            let (m, k) = (rng.random_range(0..=60), rng.random_range(0..=60));
            let lhs = orbit.log_norms[m + k];
            let rhs = orbit.log_norms[m] + norms[k];
            if lhs.is_finite() {
                worst = worst.max(lhs - rhs);
            }
        }
    }
    Ok((worst <= 1e-9, format!("max excess {worst:.3e}")))
}

fn orbit_decay_direction(_: u64) -> Result<Outcome> {
    let n = 512;
    let f = Kernel::volterra(n).apply(&GridFunction::constant(1.0, n)?)?;
    let tr = iterate_orbit(&i_minus_v(n)?, &f, NormKind::One, 2000)?;
    let trend = tr.trend(1.0);
    let l = &tr.log_norms;
    let shrinking = trend[2000].abs() < trend[1000].abs() && trend[1000].abs() < trend[500].abs();
    let decreasing = l[2000] < l[1000] && l[1000] < l[500];
    Ok((
        shrinking && decreasing,
        format!(
            "|trend| at 500/1000/2000: {:.4}/{:.4}/{:.4}",
            trend[500].abs(),
            trend[1000].abs(),
            trend[2000].abs()
        ),
    ))
}

fn analytic_fourier_products(_: u64) -> Result<Outcome> {
    let zs = [
        C64::new(1.0, 2.0),
        C64::new(-30.0, 100.0),
        C64::new(4.0, -250.0),
    ];
    for z in zs {
        if fourier_log_abs(&Measure::dirac(), z)? != 0.0 {
            return Ok((false, format!("delta^ != 1 at {z}")));
        }
    }
    let a = Measure::dirac_at(0.25, C64::new(1.0, 0.5)).add(&Measure::dirac_at(0.5, c(-2.0)));
    let b = Measure::dirac_at(0.125, ONE).add(&Measure::dirac_at(0.375, C64::new(0.0, 3.0)));
    let ab = a.convolve(&b)?;
    let mut worst: f64 = 0.0;
    for z in zs {
        let lhs = fourier_log_abs(&ab, z)?;
        let rhs = fourier_log_abs(&a, z)? + fourier_log_abs(&b, z)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok((worst <= 1e-12, format!("max log gap {worst:.3e}")))
}

fn analytic_indicator_stable(_: u64) -> Result<Outcome> {
    let mus = [
        Measure::lebesgue(),
        Measure::dirac_at(0.5, ONE).add(&Measure::dirac_at(0.75, ONE)),
        Measure::dirac_at(0.25, c(2.0)).add(&Measure::polynomial(&[1.0, -1.0], 0.25, 0.875)),
    ];
    let mut worst: f64 = 0.0;
    for mu in &mus {
        for theta in [PI / 2.0, -PI / 2.0, PI / 4.0, -3.0 * PI / 4.0] {
            let a = indicator_estimate(mu, theta, 150.0)?;
            let b = indicator_estimate(mu, theta, 300.0)?;
            worst = worst.max((a - b).abs());
        }
    }
    Ok((worst <= 0.05, format!("max change {worst:.4}")))
}

fn analytic_ml_random(seed: u64) -> Result<Outcome> {
    let n = 1024;
    let h = 1.0 / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (mus, cs) = random_ml_tuple(&mut rng);
        worst = worst.max(ml_support_check(&mus, &cs, n)?);
    }
    Ok((worst <= 4.0 * h, format!("max inf supp {:.2} h", worst / h)))
}

fn analytic_trco_injective(_: u64) -> Result<Outcome> {
    let n = 256;
    let specs = [
        FunctionSpec::constant(1.0),
        FunctionSpec::poly(&[0.5, 2.0, -1.0]),
        FunctionSpec::Power { gamma: 0.5 },
    ];
    for f in &specs {
        for g in &specs {
            let (fs, gs) = (GridFunction::sample(f, n)?, GridFunction::sample(g, n)?);
            let (ck, bk) = trco_pair(&fs, &gs)?;
            if ck.coefficients()[0] == ZERO || bk.coefficients()[0] == ZERO {
                return Ok((false, format!("zero leading entry for {f:?}, {g:?}")));
            }
        }
    }
    Ok((true, format!("{} pairs", specs.len() * specs.len())))
}

fn determinism_artifact(seed: u64) -> Result<Vec<u8>> {
    let n = 128;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = GridFunction::sample(&random_poly(&mut rng, 4), n)?;
    let tr = iterate_orbit(&i_plus_v(n)?, &f, NormKind::Two, 150)?;
    let mut out = Vec::new();
    tr.write_csv(&mut out, 1.0)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let (mus, cs) = random_ml_tuple(&mut rng);
    let s = ml_support_check(&mus, &cs, n)?;
    out.extend_from_slice(crate::scalar::fmt_f64(s).as_bytes());
    Ok(out)
}

fn cli_determinism(seed: u64) -> Result<Outcome> {
    let a = determinism_artifact(seed)?;
    let b = determinism_artifact(seed)?;
    Ok((a == b, format!("{} bytes compared", a.len())))
}
