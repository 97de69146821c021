//! Symmetric tridiagonal matrices: finite-difference discretization of
//! `-d²/dt² + q`, Sturm-sequence inertia counts and bisection eigenvalues.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Default cap on the number of eigenvalues [`TridiagSym::eigenvalues_below`] resolves.
pub const DEFAULT_EIGENVALUE_CAP: usize = 10_000;

/// Largest matrix accepted by [`TridiagSym::dense_eigs_oracle`].
pub const DENSE_ORACLE_LIMIT: usize = 500;

/// Relative size of the pivot floor, `2^-50`.
const PIVOT_FLOOR_RATIO: f64 = 8.881_784_197_001_252e-16;

/// Pivot floor for a matrix whose largest off-diagonal magnitude is `off_scale`.
///
/// The floor scales with the off-diagonal part only. Diagonals can be huge
/// (steep potential walls) without saying anything about the pivots near the
/// shifts of interest.
pub fn pivot_floor(off_scale: f64) -> f64 {
    PIVOT_FLOOR_RATIO * off_scale.abs().max(f64::from_bits(0x03f0_0000_0000_0000))
}

/// Streaming `LDLᵀ` sign count for `T - shift·I`.
///
/// Diagonal entries are pushed one at a time together with the off-diagonal
/// that couples them to the previous row. Used both by [`TridiagSym`] and by
/// the matrix-free counting loops, so both paths produce identical counts.
#[derive(Debug, Clone, Copy)]
pub struct SturmCounter {
    shift: f64,
    floor: f64,
    pivot: f64,
    started: bool,
    negatives: usize,
}

impl SturmCounter {
    pub fn new(shift: f64, floor: f64) -> Self {
        Self {
            shift,
            floor,
            pivot: 0.0,
            started: false,
            negatives: 0,
        }
    }

    /// First row.
    #[inline]
    pub fn push_first(&mut self, diag: f64) {
        self.started = true;
        self.accept(diag - self.shift);
    }

    /// Subsequent rows: `off` couples this row to the previous one.
    #[inline]
    pub fn push(&mut self, diag: f64, off: f64) {
        if !self.started {
            self.push_first(diag);
            return;
        }
        let d = (diag - self.shift) - off * off / self.pivot;
        self.accept(d);
    }

    #[inline]
    fn accept(&mut self, d: f64) {
        let d = if d.abs() < self.floor {
            if d < 0.0 {
                -self.floor
            } else {
                self.floor
            }
        } else {
            d
        };
        if d < 0.0 {
            self.negatives += 1;
        }
        self.pivot = d;
    }

    pub fn count(&self) -> usize {
        self.negatives
    }
}

/// Symmetric tridiagonal matrix, optionally tied to a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagSym {
    diag: Vec<f64>,
    off: Vec<f64>,
    step: f64,
    start: f64,
}

/// Second-order central scheme for `-d²/dt² + q` on `[t_a, t_b]` with
/// Dirichlet ends: `n` interior points `t_i = t_a + i·h`, `h = (t_b - t_a)/(n + 1)`.
pub fn discretize<F>(q: F, t_a: f64, t_b: f64, n: usize) -> Result<TridiagSym>
where
    F: Fn(f64) -> f64,
{
    if !(t_b > t_a) || !t_a.is_finite() || !t_b.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need a finite interval with t_b > t_a, got [{t_a}, {t_b}]"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "discretization needs at least 2 points, got {n}"
        )));
    }
    discretize_with_step(q, t_a, (t_b - t_a) / (n as f64 + 1.0), n)
}

/// Same scheme with the step given directly: nodes `t_a + i·h`, `i = 1..=n`,
/// Dirichlet ends at `t_a` and `t_a + (n + 1)·h`.
pub fn discretize_with_step<F>(q: F, t_a: f64, h: f64, n: usize) -> Result<TridiagSym>
where
    F: Fn(f64) -> f64,
{
    if !(h > 0.0 && h.is_finite()) || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need step h > 0 and at least 2 points, got h = {h}, n = {n}"
        )));
    }
    let kinetic = 2.0 / (h * h);
    let mut diag = Vec::with_capacity(n);
    for i in 1..=n {
        let t = t_a + i as f64 * h;
        let v = q(t);
        if !v.is_finite() {
            return Err(Error::NonFinitePotential { t });
        }
        diag.push(kinetic + v);
    }
    let off = vec![-1.0 / (h * h); n - 1];
    Ok(TridiagSym {
        diag,
        off,
        step: h,
        start: t_a,
    })
}

impl TridiagSym {
    /// A general matrix (no grid attached; step and start are zero).
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        Self::from_parts(diag, off, 0.0, 0.0)
    }

    pub fn from_parts(diag: Vec<f64>, off: Vec<f64>, step: f64, start: f64) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidArgument("tridiagonal matrix needs N >= 1".into()));
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::InvalidArgument(format!(
                "off-diagonal length {} does not match N - 1 = {}",
                off.len(),
                diag.len() - 1
            )));
        }
        if diag.iter().chain(off.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("entries must be finite".into()));
        }
        Ok(Self {
            diag,
            off,
            step,
            start,
        })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    /// Leading principal `k × k` block.
    pub fn leading(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.len() {
            return Err(Error::InvalidArgument(format!(
                "leading block size {k} outside 1..={}",
                self.len()
            )));
        }
        Self::from_parts(
            self.diag[..k].to_vec(),
            self.off[..k - 1].to_vec(),
            self.step,
            self.start,
        )
    }

    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    pub fn pivot_floor(&self) -> f64 {
        pivot_floor(self.off.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    /// Number of eigenvalues strictly below `shift`.
    pub fn inertia_below(&self, shift: f64) -> usize {
        let mut counter = SturmCounter::new(shift, self.pivot_floor());
        counter.push_first(self.diag[0]);
        for (d, e) in self.diag[1..].iter().zip(&self.off) {
            counter.push(*d, *e);
        }
        counter.count()
    }

    /// Eigenvalues below `shift`, ascending, with the default cap.
    pub fn eigenvalues_below(&self, shift: f64) -> Result<Vec<f64>> {
        self.eigenvalues_below_capped(shift, DEFAULT_EIGENVALUE_CAP)
    }

    /// Bisection on the inertia count, resolved to `1e-10·max(1, |shift|)`.
    pub fn eigenvalues_below_capped(&self, shift: f64, cap: usize) -> Result<Vec<f64>> {
        let total = self.inertia_below(shift);
        if total > cap {
            return Err(Error::TooManyEigenvalues { found: total, cap });
        }
        let mut out = Vec::with_capacity(total);
        if total == 0 {
            return Ok(out);
        }
        let tol = 1e-10 * shift.abs().max(1.0);
        let lo = self.gershgorin_bounds().0 - 1.0;
        // Intervals (lo, hi, count_lo, count_hi); processed depth first from the left.
        let mut stack = vec![(lo, shift, 0usize, total)];
        while let Some((a, b, na, nb)) = stack.pop() {
            if na == nb {
                continue;
            }
            let mid = 0.5 * (a + b);
            if b - a <= tol || mid <= a || mid >= b {
                out.extend(std::iter::repeat_n(mid, nb - na));
                continue;
            }
            let nm = self.inertia_below(mid);
            stack.push((mid, b, nm, nb));
            stack.push((a, mid, na, nm));
        }
        Ok(out)
    }

    /// Full spectrum by dense symmetric QR iteration; a test oracle only.
    pub fn dense_eigs_oracle(&self) -> Result<Vec<f64>> {
        let n = self.len();
        if n > DENSE_ORACLE_LIMIT {
            return Err(Error::SizeExceeded {
                n,
                max: DENSE_ORACLE_LIMIT,
            });
        }
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.off[i];
                m[(i + 1, i)] = self.off[i];
            }
        }
        let mut eigs: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        eigs.sort_by(f64::total_cmp);
        Ok(eigs)
    }
}
