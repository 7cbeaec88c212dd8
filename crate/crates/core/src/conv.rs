//! Truncated discrete convolution `c_i = sum_{m=0}^{i} a_m b_{i-m}`, `i < N`.
//!
//! Three paths: direct `O(N^2)` (kept as the oracle), sparse (iterates the
//! nonzeros of the sparser operand) and FFT (cyclic convolution of length
//! `2N`, zero padded). Every path zeroes the outputs below
//! `lead(a) + lead(b)` so nilpotent products come out exactly zero.
//!
//! FFT rounding error is of order `1e-16 * max|c|` at every output index.
//! That is harmless for a single product but not for iterated ones: noise in
//! the small entries of a growing orbit, or of `V^n` whose norm falls far
//! below `||V^(n/2)||^2`, swamps the true values. Kernel products and orbits
//! therefore use [`Path::Accurate`].

use crate::scalar::{C64, ZERO};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::cmp::Ordering;
use std::sync::Arc;

/// Operands with at most this many nonzeros use the sparse path.
pub const SPARSE_LIMIT: usize = 32;
/// Below this length the direct path is used.
pub const DIRECT_LIMIT: usize = 64;

/// How a product is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Path {
    /// Sparse or direct: every output entry carries its own relative error.
    #[default]
    Accurate,
    /// Sparse, direct or FFT, whichever is fastest.
    Fast,
}

/// Outputs per parallel task in the accurate path.
const ROWS_PER_TASK: usize = 256;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(len), p.plan_fft_inverse(len))
    })
}

/// Index of the first exactly-nonzero entry.
pub fn lead(v: &[C64]) -> Option<usize> {
    v.iter().position(|z| *z != ZERO)
}

fn nnz(v: &[C64]) -> usize {
    v.iter().filter(|z| **z != ZERO).count()
}

/// Total order on operands so that `convolve(a, b)` and `convolve(b, a)`
/// run the identical computation.
fn canonical_cmp(a: &[C64], b: &[C64]) -> Ordering {
    nnz(a).cmp(&nnz(b)).then_with(|| {
        for (x, y) in a.iter().zip(b) {
            let o =
                x.re.to_bits()
                    .cmp(&y.re.to_bits())
                    .then(x.im.to_bits().cmp(&y.im.to_bits()));
            if o != Ordering::Equal {
                return o;
            }
        }
        Ordering::Equal
    })
}

/// `O(N^2)` reference implementation.
pub fn convolve_direct(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len();
    let mut out = vec![ZERO; n];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut s = ZERO;
        for m in 0..=i {
            s += a[m] * b[i - m];
        }
        *slot = s;
    }
    out
}

fn dot_real(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    acc.iter().sum::<f64>() + tail
}

/// Direct product as contiguous dot products against the reversed second
/// operand, split into real and imaginary parts and run in parallel.
pub fn convolve_direct_fast(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len();
    let ar: Vec<f64> = a.iter().map(|z| z.re).collect();
    let br: Vec<f64> = b.iter().rev().map(|z| z.re).collect();
    let real = a.iter().chain(b).all(|z| z.im == 0.0);
    let (ai, bi): (Vec<f64>, Vec<f64>) = if real {
        (Vec::new(), Vec::new())
    } else {
        (
            a.iter().map(|z| z.im).collect(),
            b.iter().rev().map(|z| z.im).collect(),
        )
    };
    let mut out = vec![ZERO; n];
    out.par_chunks_mut(ROWS_PER_TASK)
        .enumerate()
        .for_each(|(c, chunk)| {
            for (j, slot) in chunk.iter_mut().enumerate() {
                let i = c * ROWS_PER_TASK + j;
                // c_i = sum_{m<=i} a_m b_{i-m} = a[0..=i] . rev(b)[n-1-i..]
                let s = n - 1 - i;
                let rr = dot_real(&ar[..=i], &br[s..]);
                *slot = if real {
                    C64::new(rr, 0.0)
                } else {
                    let ii = dot_real(&ai[..=i], &bi[s..]);
                    let ri = dot_real(&ar[..=i], &bi[s..]);
                    let ir = dot_real(&ai[..=i], &br[s..]);
                    C64::new(rr - ii, ri + ir)
                };
            }
        });
    out
}

fn convolve_sparse(sparse: &[C64], dense: &[C64]) -> Vec<C64> {
    let n = sparse.len();
    let mut out = vec![ZERO; n];
    for (m, &w) in sparse.iter().enumerate().filter(|(_, w)| **w != ZERO) {
        for (o, &d) in out[m..].iter_mut().zip(dense) {
            *o += w * d;
        }
    }
    out
}

/// FFT route without support clean-up.
pub fn convolve_fft(a: &[C64], b: &[C64]) -> Vec<C64> {
    let n = a.len();
    let len = 2 * n;
    let (fwd, inv) = plans(len);
    let mut fa = padded(a, len);
    let mut fb = padded(b, len);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / len as f64;
    fa.truncate(n);
    for z in &mut fa {
        *z *= scale;
    }
    fa
}

fn padded(v: &[C64], len: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(len);
    out.extend_from_slice(v);
    out.resize(len, ZERO);
    out
}

fn clear_below(out: &mut [C64], la: Option<usize>, lb: Option<usize>) {
    match (la, lb) {
        (Some(x), Some(y)) => {
            let cut = (x + y).min(out.len());
            out[..cut].fill(ZERO);
        }
        _ => out.fill(ZERO),
    }
}

/// Truncated convolution choosing the fastest path. Symmetric in its
/// arguments bit for bit.
pub fn convolve(a: &[C64], b: &[C64]) -> Vec<C64> {
    convolve_with(a, b, Path::Fast)
}

pub fn convolve_with(a: &[C64], b: &[C64], path: Path) -> Vec<C64> {
    assert_eq!(a.len(), b.len(), "operands must share a length");
    let (a, b) = match canonical_cmp(a, b) {
        Ordering::Greater => (b, a),
        _ => (a, b),
    };
    let (la, lb) = (lead(a), lead(b));
    if la.is_none() || lb.is_none() {
        return vec![ZERO; a.len()];
    }
    let mut out = if nnz(a) <= SPARSE_LIMIT {
        convolve_sparse(a, b)
    } else if a.len() <= DIRECT_LIMIT {
        convolve_direct(a, b)
    } else if path == Path::Accurate {
        convolve_direct_fast(a, b)
    } else {
        convolve_fft(a, b)
    };
    clear_below(&mut out, la, lb);
    out
}

/// Convolution with one operand fixed, caching its spectrum for repeated use.
pub struct Convolver {
    n: usize,
    kernel: Vec<C64>,
    kernel_lead: Option<usize>,
    sparse: bool,
    spectrum: Vec<C64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
}

impl Convolver {
    pub fn new(kernel: &[C64], path: Path) -> Self {
        let n = kernel.len();
        let len = 2 * n;
        let (fwd, inv) = plans(len);
        let sparse = nnz(kernel) <= SPARSE_LIMIT || n <= DIRECT_LIMIT || path == Path::Accurate;
        let mut spectrum = Vec::new();
        if !sparse {
            spectrum = padded(kernel, len);
            fwd.process(&mut spectrum);
        }
        Convolver {
            n,
            kernel: kernel.to_vec(),
            kernel_lead: lead(kernel),
            sparse,
            spectrum,
            fwd,
            inv,
            scratch: Vec::with_capacity(len),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `out = kernel * v` (truncated).
    pub fn apply(&mut self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.n);
        let lv = lead(v);
        if lv.is_none() || self.kernel_lead.is_none() {
            return vec![ZERO; self.n];
        }
        let mut out = if self.sparse {
            if nnz(&self.kernel) <= SPARSE_LIMIT {
                convolve_sparse(&self.kernel, v)
            } else if self.n <= DIRECT_LIMIT {
                convolve_direct(&self.kernel, v)
            } else {
                convolve_direct_fast(&self.kernel, v)
            }
        } else {
            let len = 2 * self.n;
            self.scratch.clear();
            self.scratch.extend_from_slice(v);
            self.scratch.resize(len, ZERO);
            self.fwd.process(&mut self.scratch);
            for (x, y) in self.scratch.iter_mut().zip(&self.spectrum) {
                *x *= y;
            }
            self.inv.process(&mut self.scratch);
            let scale = 1.0 / len as f64;
            self.scratch[..self.n].iter().map(|z| z * scale).collect()
        };
        clear_below(&mut out, self.kernel_lead, lv);
        out
    }
}
