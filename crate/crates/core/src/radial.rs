//! Radial reduction of the Dirac operator on the model cusp `(0, x0] × M`.
//!
//! In the arclength coordinate `t` measured from `x = x0` toward the cusp the
//! metric `x^{2p}(dx²/x⁴ + h)` becomes the warped product `dt² + w(t)² h` with
//! `w = x^p`. After rescaling spinors by `w^{(n-1)/2}`, each eigenvalue `μ` of
//! the boundary Dirac operator contributes a one-dimensional Dirac system
//! with potential `V = μ / w`. Its square is `diag(H_-, H_+)` with
//! `H_± = -d²/dt² + V² ± V'`.

use nalgebra::DMatrix;

use crate::tridiag::TridiagSym;
use crate::{Error, Result};

/// Boundary condition imposed at every truncated radial endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryCondition {
    /// Dirichlet on both Schrödinger components.
    #[default]
    Dirichlet,
}

/// The model `((0, x0] × M, x^{2p}(dx²/x⁴ + h))` of dimension `n = dim M + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuspModelSpec {
    pub dimension: usize,
    pub power: f64,
    pub cutoff: f64,
    pub bc: BoundaryCondition,
}

impl CuspModelSpec {
    pub fn new(dimension: usize, power: f64, cutoff: f64) -> Result<Self> {
        let spec = Self {
            dimension,
            power,
            cutoff,
            bc: BoundaryCondition::Dirichlet,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension < 2 {
            return Err(Error::InvalidModel(format!(
                "dimension must be at least 2, got {}",
                self.dimension
            )));
        }
        if !self.power.is_finite() {
            return Err(Error::InvalidModel(format!(
                "conformal power must be finite, got {}",
                self.power
            )));
        }
        if !(self.cutoff.is_finite() && self.cutoff > 0.0) {
            return Err(Error::InvalidModel(format!(
                "cutoff x0 must be positive and finite, got {}",
                self.cutoff
            )));
        }
        Ok(())
    }

    pub fn warp(&self) -> WarpProfile {
        WarpProfile {
            power: self.power,
            cutoff: self.cutoff,
        }
    }
}

/// Closed-form change of variables between `x` and arclength `t`.
///
/// `t(x) = ∫_x^{x0} s^{p-2} ds`, so `t(x0) = 0` and `t` grows toward the cusp.
/// Along the way `dw/dt = -p·x(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpProfile {
    power: f64,
    cutoff: f64,
}

impl WarpProfile {
    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// End of the radial domain: `None` for `[0, ∞)`, `Some(t_max)` for `p > 1`.
    pub fn domain_end(&self) -> Option<f64> {
        let p = self.power;
        if p > 1.0 {
            Some(self.cutoff.powf(p - 1.0) / (p - 1.0))
        } else {
            None
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= 0.0 && self.domain_end().map_or(t.is_finite(), |end| t < end)
    }

    /// `t(x)` for `0 < x <= x0`.
    pub fn arclength(&self, x: f64) -> f64 {
        let p = self.power;
        let ratio = (x / self.cutoff).ln();
        if p == 1.0 {
            -ratio
        } else {
            self.cutoff.powf(p - 1.0) * ((p - 1.0) * ratio).exp_m1() / (1.0 - p)
        }
    }

    /// `ln x(t)`; the primitive from which every profile is evaluated.
    pub fn log_position(&self, t: f64) -> f64 {
        let p = self.power;
        if p == 1.0 {
            self.cutoff.ln() - t
        } else {
            let scaled = (1.0 - p) * t * self.cutoff.powf(1.0 - p);
            self.cutoff.ln() - scaled.ln_1p() / (1.0 - p)
        }
    }

    /// `x(t)`, the inverse of [`WarpProfile::arclength`].
    pub fn position(&self, t: f64) -> f64 {
        self.log_position(t).exp()
    }

    /// `w(t) = x(t)^p`.
    pub fn warp(&self, t: f64) -> f64 {
        (self.power * self.log_position(t)).exp()
    }

    pub fn warp_derivative(&self, t: f64) -> f64 {
        -self.power * self.position(t)
    }

    /// `sup_t w(t)`: `x0^p` for a non-increasing warp, infinite when `p < 0`.
    pub fn sup_warp(&self) -> f64 {
        if self.power >= 0.0 {
            self.cutoff.powf(self.power)
        } else {
            f64::INFINITY
        }
    }
}

/// Component of the supersymmetric pair `H_± = -d²/dt² + V² ± V'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Plus,
    Minus,
}

impl Component {
    pub const BOTH: [Component; 2] = [Component::Plus, Component::Minus];
}

/// Per-mode radial problem for one boundary eigenvalue `μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeProblem {
    warp: WarpProfile,
    mu: f64,
}

pub fn warp_profile(spec: &CuspModelSpec) -> WarpProfile {
    spec.warp()
}

pub fn mode_problem(spec: &CuspModelSpec, mu: f64) -> ModeProblem {
    ModeProblem {
        warp: spec.warp(),
        mu,
    }
}

impl ModeProblem {
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn warp(&self) -> &WarpProfile {
        &self.warp
    }

    pub fn domain_end(&self) -> Option<f64> {
        self.warp.domain_end()
    }

    /// `V(t) = μ / w(t)`.
    pub fn potential(&self, t: f64) -> f64 {
        self.mu * (-self.warp.power * self.warp.log_position(t)).exp()
    }

    /// `V'(t) = μ p x^{1-2p}`.
    pub fn potential_derivative(&self, t: f64) -> f64 {
        let p = self.warp.power;
        self.mu * p * ((1.0 - 2.0 * p) * self.warp.log_position(t)).exp()
    }

    /// `(q_plus(t), q_minus(t))` from one evaluation of `x(t)`.
    #[inline]
    pub fn q_pair(&self, t: f64) -> (f64, f64) {
        let p = self.warp.power;
        let log_x = self.warp.log_position(t);
        let inv_w = (-p * log_x).exp();
        let inv_w2 = inv_w * inv_w;
        let square = self.mu * self.mu * inv_w2;
        let slope = self.mu * p * log_x.exp() * inv_w2;
        (square + slope, square - slope)
    }

    pub fn q(&self, component: Component, t: f64) -> f64 {
        let (plus, minus) = self.q_pair(t);
        match component {
            Component::Plus => plus,
            Component::Minus => minus,
        }
    }

    pub fn q_plus(&self, t: f64) -> f64 {
        self.q_pair(t).0
    }

    pub fn q_minus(&self, t: f64) -> f64 {
        self.q_pair(t).1
    }
}

/// Staggered first-order discretization of the radial Dirac system.
///
/// Unknowns `f_1..f_N` live on nodes `t_i = i·h` (with `f_0 = 0`), the second
/// component on half nodes. `B` is the lower bidiagonal matrix of
/// `(∂_t + V)` evaluated at half nodes, so `BᵀB` approximates `H_-` with a
/// Dirichlet end at `t = 0` and a natural end at `t = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderModeMatrix {
    /// `B[i][i]`, length N.
    diag: Vec<f64>,
    /// `B[i][i-1]` for `i = 1..N`, length N-1.
    lower: Vec<f64>,
    step: f64,
}

pub fn first_order_mode_matrix(
    problem: &ModeProblem,
    truncation: f64,
    points: usize,
) -> Result<FirstOrderModeMatrix> {
    if points < 8 {
        return Err(Error::InvalidArgument(format!(
            "first-order grid needs at least 8 points, got {points}"
        )));
    }
    let end = problem.domain_end().unwrap_or(f64::INFINITY);
    if !(truncation > 0.0 && truncation < end) {
        return Err(Error::DomainExceeded { truncation, end });
    }
    let h = truncation / points as f64;
    let mut diag = Vec::with_capacity(points);
    let mut lower = Vec::with_capacity(points - 1);
    for i in 0..points {
        let t = (i as f64 + 0.5) * h;
        let v = problem.potential(t);
        if !v.is_finite() {
            return Err(Error::NonFinitePotential { t });
        }
        diag.push(1.0 / h + 0.5 * v);
        if i > 0 {
            lower.push(-1.0 / h + 0.5 * v);
        }
    }
    Ok(FirstOrderModeMatrix {
        diag,
        lower,
        step: h,
    })
}

impl FirstOrderModeMatrix {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// The bidiagonal block `B` as a dense matrix.
    pub fn block(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut b = DMatrix::zeros(n, n);
        for i in 0..n {
            b[(i, i)] = self.diag[i];
            if i > 0 {
                b[(i, i - 1)] = self.lower[i - 1];
            }
        }
        b
    }

    /// The full `2N × 2N` symmetric matrix `[[0, Bᵀ], [B, 0]]`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let b = self.block();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((n, 0), (n, n)).copy_from(&b);
        m.view_mut((0, n), (n, n)).copy_from(&b.transpose());
        m
    }

    /// `BᵀB`, whose eigenvalues are the squared nonzero eigenvalues of the
    /// block matrix.
    pub fn gram(&self) -> TridiagSym {
        let n = self.len();
        let mut diag = Vec::with_capacity(n);
        let mut off = Vec::with_capacity(n.saturating_sub(1));
        for j in 0..n {
            let below = if j + 1 < n { self.lower[j] } else { 0.0 };
            diag.push(self.diag[j] * self.diag[j] + below * below);
            if j + 1 < n {
                off.push(self.lower[j] * self.diag[j + 1]);
            }
        }
        TridiagSym::from_parts(diag, off, self.step, self.step)
            .expect("gram of a finite bidiagonal matrix is finite")
    }
}
