//! Minimal solutions of `-Δu + c·∇u = λ/(1-u)²`, branch continuation in `λ`, and a radial
//! shooting oracle.
//!
//! The minimal branch is traced from `λ = 0, u = 0` with damped Newton started from a tangent
//! predictor. A failed step is halved and retried from the last solution, so the upper end of
//! the final bracket on the pull-in value `λ*` is a failure from the adjacent branch point.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fieldexpr::{Expr, Point};
use crate::grid::{Field, Grid, GridKind, VectorField};
use crate::math::{abs, norm_inf, powf, sqrt, EPS};
use crate::operators::{assemble_advection_diffusion, OperatorMatrix};

const NEWTON_MAX_ITERATIONS: usize = 40;
const MIN_DAMPING: f64 = 1.0 / (1u64 << 30) as f64;
const MAX_SOLVES: usize = 2000;
const MONOTONE_SLACK: f64 = 1e-12;

/// `7/2 + √6`, the supremum of the `L^p` exponents controlled along the branch.
pub fn critical_exponent() -> f64 {
    3.5 + sqrt(6.0)
}

/// Exponents `p` at which `‖(1-u)^{-2}‖_p` is recorded: `2, 3N/4, 0.99 p₀, 1.01 p₀`.
pub fn norm_exponents(dim: usize) -> [f64; 4] {
    let p0 = critical_exponent();
    [2.0, 0.75 * dim as f64, 0.99 * p0, 1.01 * p0]
}

/// `(∫ (1-u)^{-2p})^{1/p}` with the grid quadrature.
pub fn singular_norm(grid: &Grid, u: &[f64], p: f64) -> f64 {
    let f: Vec<f64> = u.iter().map(|&x| powf(1.0 - x, -2.0 * p)).collect();
    powf(grid.integrate_slice(&f), 1.0 / p)
}

/// The pieces of the discrete problem that do not change with `λ`.
#[derive(Debug, Clone)]
pub struct MemsProblem<'g> {
    grid: &'g Grid,
    c: VectorField,
    a: OperatorMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonFailure {
    IterationCap,
    DampingUnderflow,
    SingularJacobian,
}

/// Newton failures are expected beyond the fold and are returned as data.
#[derive(Debug, Clone, PartialEq)]
pub enum NewtonOutcome {
    Converged {
        u: Field,
        iterations: usize,
        residual: f64,
    },
    Failed {
        reason: NewtonFailure,
        iterations: usize,
        residual: f64,
    },
}

impl NewtonOutcome {
    pub fn converged(&self) -> Option<&Field> {
        match self {
            NewtonOutcome::Converged { u, .. } => Some(u),
            NewtonOutcome::Failed { .. } => None,
        }
    }
}

impl<'g> MemsProblem<'g> {
    pub fn new(grid: &'g Grid, c: &VectorField) -> Result<Self> {
        let a = assemble_advection_diffusion(grid, c, None)?;
        Ok(MemsProblem {
            grid,
            c: c.clone(),
            a,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.grid
    }

    pub fn advection(&self) -> &VectorField {
        &self.c
    }

    pub fn operator(&self) -> &OperatorMatrix {
        &self.a
    }

    /// `F(u) = A u - λ/(1-u)²` on interior rows, `u` on boundary rows.
    pub fn residual(&self, lambda: f64, u: &[f64]) -> Vec<f64> {
        let mut r = self.a.apply_slice(u);
        for (i, ri) in r.iter_mut().enumerate() {
            if !self.grid.is_boundary(i) {
                let s = 1.0 - u[i];
                *ri -= lambda / (s * s);
            }
        }
        r
    }

    /// `F'(u) = A - 2λ/(1-u)³` on interior rows.
    fn jacobian(&self, lambda: f64, u: &[f64]) -> OperatorMatrix {
        let d: Vec<f64> = u
            .iter()
            .map(|&x| {
                let s = 1.0 - x;
                -2.0 * lambda / (s * s * s)
            })
            .collect();
        self.a.add_interior_diagonal(self.grid, &d)
    }

    /// `∂u/∂λ` along the branch: `F'(u) v = (1-u)^{-2}` on interior rows, zero on the boundary.
    pub fn tangent(&self, lambda: f64, u: &Field) -> Result<Field> {
        self.grid.check(u)?;
        let uv = u.values();
        let mut v: Vec<f64> = (0..uv.len())
            .map(|i| {
                if self.grid.is_boundary(i) {
                    0.0
                } else {
                    let s = 1.0 - uv[i];
                    1.0 / (s * s)
                }
            })
            .collect();
        self.jacobian(lambda, uv)
            .factorize(0.0)?
            .solve_in_place(&mut v);
        Field::new(self.grid, v)
    }

    /// Rounding level of `‖F(u)‖∞`.
    fn residual_floor(&self, lambda: f64, u: &[f64]) -> f64 {
        let umax = norm_inf(u);
        let s = 1.0 - umax;
        16.0 * EPS * (self.a.norm_inf() * umax + lambda / (s * s))
    }

    /// Damped Newton from `u0`; converges when `‖F(u)‖∞ ≤ tol` (or its rounding level, if
    /// larger). Trial iterates with `max u ≥ 1` are rejected and the step is halved.
    pub fn newton(&self, lambda: f64, u0: &Field, tol: f64) -> Result<NewtonOutcome> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "λ = {lambda} must be finite and ≥ 0"
            )));
        }
        if !(tol > 0.0 && tol <= 1e-8) {
            return Err(Error::InvalidParameter(format!(
                "Newton tolerance {tol} outside (0, 1e-8]"
            )));
        }
        self.grid.check(u0)?;
        if u0.max() >= 1.0 || u0.min() < -1e-12 {
            return Err(Error::InvalidParameter(format!(
                "initial guess must lie in [0, 1), got range [{}, {}]",
                u0.min(),
                u0.max()
            )));
        }
        let grid = self.grid;
        let mut u = u0.values().to_vec();
        let mut r = self.residual(lambda, &u);
        let mut rn = norm_inf(&r);
        for it in 1..=NEWTON_MAX_ITERATIONS {
            if rn <= tol.max(self.residual_floor(lambda, &u)) {
                return Ok(NewtonOutcome::Converged {
                    u: Field::new(grid, u)?,
                    iterations: it,
                    residual: rn,
                });
            }
            let lu = match self.jacobian(lambda, &u).factorize(0.0) {
                Ok(lu) => lu,
                Err(_) => {
                    return Ok(NewtonOutcome::Failed {
                        reason: NewtonFailure::SingularJacobian,
                        iterations: it,
                        residual: rn,
                    })
                }
            };
            let mut step: Vec<f64> = r.iter().map(|x| -x).collect();
            lu.solve_in_place(&mut step);
            // boundary rows are the identity; keep their step free of elimination round-off
            for &b in grid.boundary_nodes() {
                step[b] = -u[b];
            }
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = u.iter().zip(&step).map(|(x, s)| x + t * s).collect();
                if trial.iter().all(|&x| x < 1.0) {
                    let rt = self.residual(lambda, &trial);
                    let rtn = norm_inf(&rt);
                    if rtn < rn {
                        u = trial;
                        r = rt;
                        rn = rtn;
                        break;
                    }
                }
                t *= 0.5;
                if t < MIN_DAMPING {
                    return Ok(NewtonOutcome::Failed {
                        reason: NewtonFailure::DampingUnderflow,
                        iterations: it,
                        residual: rn,
                    });
                }
            }
        }
        if rn <= tol.max(self.residual_floor(lambda, &u)) {
            return Ok(NewtonOutcome::Converged {
                u: Field::new(grid, u)?,
                iterations: NEWTON_MAX_ITERATIONS,
                residual: rn,
            });
        }
        Ok(NewtonOutcome::Failed {
            reason: NewtonFailure::IterationCap,
            iterations: NEWTON_MAX_ITERATIONS,
            residual: rn,
        })
    }
}

/// Solves the discrete problem at one `λ`; see [`MemsProblem::newton`].
pub fn newton_solve(
    grid: &Grid,
    c: &VectorField,
    lambda: f64,
    u0: &Field,
    tol: f64,
) -> Result<NewtonOutcome> {
    MemsProblem::new(grid, c)?.newton(lambda, u0, tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub lambda: f64,
    pub u: Field,
    pub sup_u: f64,
    /// Principal eigenvalue of the linearization; filled in by the spectral module.
    pub k: Option<f64>,
    pub newton_iters: usize,
    pub residual: f64,
    /// `(p, ‖(1-u)^{-2}‖_p)` for the exponents of [`norm_exponents`].
    pub lp_norms: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    /// `(λ_lo, λ_hi)`: last Newton success and the failed step just above it.
    pub bracket: (f64, f64),
    pub kind: GridKind,
    pub dim: usize,
    pub nodes_per_axis: usize,
    pub solves: usize,
}

impl Branch {
    /// Midpoint of the bracket.
    pub fn lambda_star(&self) -> f64 {
        0.5 * (self.bracket.0 + self.bracket.1)
    }

    pub fn bracket_width(&self) -> f64 {
        self.bracket.1 - self.bracket.0
    }

    pub fn last(&self) -> &BranchPoint {
        self.points.last().expect("a branch holds the λ = 0 point")
    }
}

/// Settings for [`continue_branch`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationSettings {
    pub step0: f64,
    pub bracket_tol: f64,
    pub newton_tol: f64,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        ContinuationSettings {
            step0: 0.1,
            bracket_tol: 1e-6,
            newton_tol: 1e-10,
        }
    }
}

fn make_point(grid: &Grid, lambda: f64, u: Field, iters: usize, residual: f64) -> BranchPoint {
    let lp_norms = norm_exponents(grid.dim())
        .iter()
        .map(|&p| (p, singular_norm(grid, u.values(), p)))
        .collect();
    BranchPoint {
        lambda,
        sup_u: u.max(),
        u,
        k: None,
        newton_iters: iters,
        residual,
        lp_norms,
    }
}

/// Traces the minimal branch from `λ = 0` and brackets `λ*`.
///
/// Each step starts Newton from `u + Δλ ∂u/∂λ`, falling back to `u` itself. Steps grow by 1.3
/// after a solve of at most 4 iterations until the first failure; a failed step is halved and
/// retried from the last solution. The branch ends at the first failure with
/// `Δλ ≤ bracket_tol·λ_lo`.
pub fn continue_branch(
    grid: &Grid,
    c: &VectorField,
    settings: ContinuationSettings,
) -> Result<Branch> {
    let ContinuationSettings {
        step0,
        bracket_tol,
        newton_tol,
    } = settings;
    if !(step0 > 0.0 && step0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "initial step {step0} must be > 0"
        )));
    }
    if !(bracket_tol > 0.0 && bracket_tol < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "bracket tolerance {bracket_tol} outside (0, 1)"
        )));
    }
    let problem = MemsProblem::new(grid, c)?;
    let zero = Field::zeros(grid);
    let mut points = match problem.newton(0.0, &zero, newton_tol)? {
        NewtonOutcome::Converged {
            u,
            iterations,
            residual,
        } => vec![make_point(grid, 0.0, u, iterations, residual)],
        NewtonOutcome::Failed { .. } => unreachable!("u = 0 solves the problem at λ = 0"),
    };
    let mut step = step0;
    let mut failed = false;
    let mut solves = 1;
    let hi = loop {
        let last = points.last().expect("nonempty");
        let lo = last.lambda;
        if solves >= MAX_SOLVES {
            return Err(Error::BracketCap(solves));
        }
        let trial = lo + step;
        let predicted = problem.tangent(lo, &last.u).ok().and_then(|v| {
            let guess: Vec<f64> = last
                .u
                .values()
                .iter()
                .zip(v.values())
                .map(|(x, d)| x + step * d)
                .collect();
            guess
                .iter()
                .all(|&x| (0.0..1.0).contains(&x))
                .then(|| Field::new(grid, guess).ok())
                .flatten()
        });
        solves += 1;
        let mut outcome = match &predicted {
            Some(guess) => problem.newton(trial, guess, newton_tol)?,
            None => problem.newton(trial, &last.u, newton_tol)?,
        };
        if outcome.converged().is_none() && predicted.is_some() {
            solves += 1;
            outcome = problem.newton(trial, &last.u, newton_tol)?;
        }
        match outcome {
            NewtonOutcome::Converged {
                u,
                iterations,
                residual,
            } => {
                if let Some(node) =
                    (0..grid.len()).find(|&i| u.values()[i] < last.u.values()[i] - MONOTONE_SLACK)
                {
                    return Err(Error::Monotonicity {
                        lambda_prev: lo,
                        lambda_next: trial,
                        node,
                    });
                }
                if !failed && iterations <= 4 {
                    step *= 1.3;
                }
                points.push(make_point(grid, trial, u, iterations, residual));
            }
            NewtonOutcome::Failed { .. } => {
                if step <= bracket_tol * lo {
                    break trial;
                }
                failed = true;
                step *= 0.5;
            }
        }
    };
    let lo = points.last().expect("nonempty").lambda;
    Ok(Branch {
        bracket: (lo, hi),
        points,
        kind: grid.kind(),
        dim: grid.dim(),
        nodes_per_axis: grid.axes()[0].nodes,
        solves,
    })
}

/// Result of the radial shooting oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct ShootingResult {
    pub lambda_star: f64,
    /// Centre value at which the maximum was found.
    pub eta_star: f64,
    /// `(η, λ(η))` on the uniform grid `η_k = k / (n + 1)`.
    pub curve: Vec<(f64, f64)>,
}

const SHOOT_LAMBDA_CAP: f64 = 100.0;
const SHOOT_MAX_STEP: f64 = 1e-4;

struct Shooter {
    dim: f64,
    radius: f64,
    steps: usize,
    // c_r at r = j h / 2
    drift: Vec<f64>,
}

impl Shooter {
    fn new(dim: usize, c_r: Option<&Expr>, radius: f64) -> Result<Shooter> {
        let steps = libm::ceil(radius / SHOOT_MAX_STEP) as usize;
        let h = radius / steps as f64;
        let drift = match c_r {
            None => vec![0.0; 2 * steps + 1],
            Some(e) => {
                e.check_legal(GridKind::RadialBall)?;
                (0..=2 * steps)
                    .map(|j| {
                        e.evaluate(&Point {
                            x: None,
                            y: None,
                            r: Some(0.5 * h * j as f64),
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?
            }
        };
        Ok(Shooter {
            dim: dim as f64,
            radius,
            steps,
            drift,
        })
    }

    // u'' = -((N-1)/r) u' + c_r u' - λ/(1-u)², with the limit u''(0) = -λ/(N(1-u)²)
    fn rhs(&self, j: usize, r: f64, lambda: f64, u: f64, v: f64) -> f64 {
        let s = 1.0 - u;
        let force = lambda / (s * s);
        if j == 0 {
            -force / self.dim
        } else {
            -(self.dim - 1.0) / r * v + self.drift[j] * v - force
        }
    }

    /// `u(R)` for the initial value problem, or `None` if `u` leaves `(-∞, 1)`.
    fn shoot(&self, eta: f64, lambda: f64) -> Option<f64> {
        let h = self.radius / self.steps as f64;
        let (mut u, mut v) = (eta, 0.0);
        for k in 0..self.steps {
            let j = 2 * k;
            let r = h * k as f64;
            let k1u = v;
            let k1v = self.rhs(j, r, lambda, u, v);
            let k2u = v + 0.5 * h * k1v;
            let k2v = self.rhs(j + 1, r + 0.5 * h, lambda, u + 0.5 * h * k1u, k2u);
            let k3u = v + 0.5 * h * k2v;
            let k3v = self.rhs(j + 1, r + 0.5 * h, lambda, u + 0.5 * h * k2u, k3u);
            let k4u = v + h * k3v;
            let k4v = self.rhs(j + 2, r + h, lambda, u + h * k3u, k4u);
            u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            if !(u.is_finite() && v.is_finite()) || u >= 1.0 {
                return None;
            }
        }
        Some(u)
    }

    /// The `λ ∈ [0, 100]` with `u(R) = 0`; blow-up counts as overshoot.
    fn lambda_for(&self, eta: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, SHOOT_LAMBDA_CAP);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            match self.shoot(eta, mid) {
                Some(end) if end > 0.0 => lo = mid,
                _ => hi = mid,
            }
            if hi - lo <= 4.0 * EPS * hi.max(1e-300) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Radial shooting: for each centre value `η` finds `λ(η)` with `u(R) = 0` for the problem
/// on the ball of radius `R` (the interval `(-R, R)` when `N = 1`), then `λ* = max λ(η)`.
///
/// The maximum over the uniform `η` grid is refined by golden-section search between the
/// neighbours of the best grid value.
pub fn shooting_oracle(
    dim: usize,
    c_r: Option<&Expr>,
    eta_grid: usize,
    radius: f64,
) -> Result<ShootingResult> {
    if !(1..=crate::grid::MAX_DIM).contains(&dim) {
        return Err(Error::InvalidParameter(format!(
            "dimension {dim} outside [1, 10]"
        )));
    }
    if eta_grid < 100 {
        return Err(Error::InvalidParameter(format!(
            "η grid of {eta_grid} points is below the minimum of 100"
        )));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius {radius} must be > 0"
        )));
    }
    let shooter = Shooter::new(dim, c_r, radius)?;
    let curve: Vec<(f64, f64)> = (1..=eta_grid)
        .map(|k| {
            let eta = k as f64 / (eta_grid + 1) as f64;
            (eta, shooter.lambda_for(eta))
        })
        .collect();
    let (best, &(mut eta_star, mut lambda_star)) = curve
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("η grid is nonempty");
    if best > 0 && best + 1 < curve.len() {
        let (mut a, mut b) = (curve[best - 1].0, curve[best + 1].0);
        let g = 0.5 * (sqrt(5.0) - 1.0);
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let (mut f1, mut f2) = (shooter.lambda_for(x1), shooter.lambda_for(x2));
        while b - a > 1e-7 {
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = shooter.lambda_for(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = shooter.lambda_for(x1);
            }
        }
        let (x, f) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
        if f > lambda_star {
            eta_star = x;
            lambda_star = f;
        }
    }
    if abs(lambda_star - SHOOT_LAMBDA_CAP) < 1e-9 {
        return Err(Error::InvalidParameter(
            "λ(η) reached the bisection cap of 100".into(),
        ));
    }
    Ok(ShootingResult {
        lambda_star,
        eta_star,
        curve,
    })
}
