//! Discrete checks of the Hardy-type inequality, the energy inequality for the principal
//! eigenpair, the `L^p` estimate along the minimal branch, and the regularity trend test.
//!
//! Dirichlet energies `∫ w |∇ψ|²` are summed over faces, `Σ_f area·h·w_f ((ψ_hi - ψ_lo)/h)²`,
//! with `w_f` the face mean of `w`. Potential terms are nodal quadratures. Where `E` (or `φ`)
//! falls below `1e-8 · max` the quotient `ψ/E` is replaced on boundary nodes by its limit
//! `∇ψ·∇E / |∇E|²` and set to zero elsewhere.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, GridKind};
use crate::hodge::{weak_pairing, Decomposition};
use crate::math::{abs, cos, powf, sin, sqrt};
use crate::solver::{critical_exponent, Branch};

const FLOOR: f64 = 1e-8;

/// `β + √(β² + β)`.
pub fn t_max(beta: f64) -> f64 {
    beta + sqrt(beta * beta + beta)
}

/// `β - t²/(2t + 1)`.
pub fn coefficient(beta: f64, t: f64) -> f64 {
    beta - t * t / (2.0 * t + 1.0)
}

/// The open range `(0, t_max(β))` on which [`coefficient`] is positive.
///
/// The endpoints `β = 1` and `β = 2` are accepted so the limiting exponents can be evaluated.
pub fn admissible_t_range(beta: f64) -> Result<(f64, f64)> {
    if !(1.0..=2.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!(
            "β = {beta} outside [1, 2]"
        )));
    }
    Ok((0.0, t_max(beta)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slack {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlackReport {
    pub entries: Vec<Slack>,
}

impl SlackReport {
    pub fn min_slack(&self) -> f64 {
        self.entries
            .iter()
            .map(|s| s.slack)
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest `slack / max(1, lhs)`.
    pub fn min_relative_slack(&self) -> f64 {
        self.entries
            .iter()
            .map(|s| s.slack / s.lhs.max(1.0))
            .fold(f64::INFINITY, f64::min)
    }

    /// Every entry has `slack ≥ -tol · max(1, lhs)`.
    pub fn passes(&self, tol: f64) -> bool {
        self.entries
            .iter()
            .all(|s| s.slack >= -tol * s.lhs.max(1.0))
    }
}

/// Data for the Hardy-type inequality with `A = w I`.
#[derive(Debug, Clone, PartialEq)]
pub struct HardyProbe {
    pub weight: Field,
    pub e: Field,
    pub beta: f64,
    pub psis: Vec<Field>,
}

impl HardyProbe {
    pub fn new(grid: &Grid, weight: Field, e: Field, beta: f64, psis: Vec<Field>) -> Result<Self> {
        grid.check(&weight)?;
        grid.check(&e)?;
        if !(1.0..=2.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!(
                "β = {beta} outside [1, 2]"
            )));
        }
        if weight.min() <= 0.0 {
            return Err(Error::InvalidParameter(
                "Hardy weight must be positive".into(),
            ));
        }
        check_positive_interior(grid, &e, "E")?;
        for (j, psi) in psis.iter().enumerate() {
            grid.check(psi)?;
            if let Some(&b) = grid.boundary_nodes().iter().find(|&&b| psi[b] != 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "test function {j} is nonzero at boundary node {b}"
                )));
            }
        }
        Ok(HardyProbe {
            weight,
            e,
            beta,
            psis,
        })
    }
}

fn check_positive_interior(grid: &Grid, f: &Field, name: &str) -> Result<()> {
    for i in 0..grid.len() {
        let bad = if grid.is_boundary(i) {
            f[i] < 0.0
        } else {
            f[i] <= 0.0
        };
        if bad {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive in the interior and nonnegative on the boundary; \
                 {name} = {} at node {i}",
                f[i]
            )));
        }
    }
    Ok(())
}

/// `∫ w |∇ψ|²` over faces.
pub fn face_energy(grid: &Grid, weight: &[f64], psi: &[f64]) -> f64 {
    grid.faces()
        .iter()
        .map(|f| {
            let d = (psi[f.hi] - psi[f.lo]) / f.h;
            f.dual_volume() * 0.5 * (weight[f.lo] + weight[f.hi]) * d * d
        })
        .sum()
}

/// `div(w ∇E)` by the conservative face stencil.
fn weighted_laplacian(grid: &Grid, weight: &[f64], e: &[f64]) -> Vec<f64> {
    let vol = grid.weights();
    let mut out = vec![0.0; grid.len()];
    for f in grid.faces() {
        let q = f.area * 0.5 * (weight[f.lo] + weight[f.hi]) * (e[f.hi] - e[f.lo]) / f.h;
        out[f.lo] += q / vol[f.lo];
        out[f.hi] -= q / vol[f.hi];
    }
    out
}

fn squared_gradient(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let g = grid.gradient_slice(f);
    (0..grid.len())
        .map(|i| g.iter().map(|gk| gk[i] * gk[i]).sum())
        .collect()
}

/// Nodes whose value clears `1e-8 · max`.
fn above_floor(f: &Field) -> Vec<bool> {
    let floor = FLOOR * f.max();
    f.values().iter().map(|&x| x >= floor && x > 0.0).collect()
}

/// `ψ/E` at every node, with the boundary limit where `E` vanishes.
fn quotient(grid: &Grid, psi: &[f64], e: &[f64], grad_e: &[Vec<f64>], keep: &[bool]) -> Vec<f64> {
    let grad_psi = grid.gradient_slice(psi);
    (0..grid.len())
        .map(|i| {
            if keep[i] {
                psi[i] / e[i]
            } else if grid.is_boundary(i) {
                let ge2: f64 = grad_e.iter().map(|g| g[i] * g[i]).sum();
                let dot: f64 = grad_e.iter().zip(&grad_psi).map(|(a, b)| a[i] * b[i]).sum();
                if ge2 > 0.0 {
                    dot / ge2
                } else {
                    0.0
                }
            } else {
                0.0
            }
        })
        .collect()
}

/// `∫ w |∇ψ|²` against `(β(2-β)/4) ∫ w |∇E|²/E² ψ² + (β/2) ∫ (-div(w∇E)/E) ψ²` for every `ψ`.
pub fn hardy_check(grid: &Grid, probe: &HardyProbe) -> Result<SlackReport> {
    let w = probe.weight.values();
    let e = probe.e.values();
    let beta = probe.beta;
    let keep = above_floor(&probe.e);
    let grad_e = grid.gradient_slice(e);
    let grad2 = squared_gradient(grid, e);
    let div = weighted_laplacian(grid, w, e);
    let vol = grid.weights();
    let c1 = beta * (2.0 - beta) / 4.0;
    let c2 = beta / 2.0;
    let entries = probe
        .psis
        .iter()
        .map(|psi| {
            let p = psi.values();
            let q = quotient(grid, p, e, &grad_e, &keep);
            let lhs = face_energy(grid, w, p);
            let rhs: f64 = (0..grid.len())
                .map(|i| vol[i] * (c1 * w[i] * grad2[i] * q[i] * q[i] - c2 * div[i] * p[i] * q[i]))
                .sum();
            Slack {
                lhs,
                rhs,
                slack: lhs - rhs,
            }
        })
        .collect();
    Ok(SlackReport { entries })
}

/// `∫ e^γ |∇ψ|²` against
/// `(β(2-β)/4) ∫ e^γ |∇φ|²/φ² ψ² + (β/2) ∫ e^γ ρ ψ² - (β/2) ∫ e^γ (a·∇φ/φ) ψ²`.
pub fn energy_inequality_check(
    grid: &Grid,
    d: &Decomposition,
    phi: &Field,
    rho: &Field,
    beta: f64,
    psis: &[Field],
) -> Result<SlackReport> {
    grid.check(phi)?;
    grid.check(rho)?;
    if !(1.0..=2.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!(
            "β = {beta} outside [1, 2]"
        )));
    }
    check_positive_interior(grid, phi, "φ")?;
    let alpha = d.alpha.values();
    let p = phi.values();
    let keep = above_floor(phi);
    let grad = grid.gradient_slice(p);
    let vol = grid.weights();
    let c1 = beta * (2.0 - beta) / 4.0;
    let c2 = beta / 2.0;
    let (g2, adv): (Vec<f64>, Vec<f64>) = (0..grid.len())
        .map(|i| {
            let g2: f64 = grad.iter().map(|g| g[i] * g[i]).sum();
            let adv: f64 = grad
                .iter()
                .enumerate()
                .map(|(k, g)| d.a.component(k)[i] * g[i])
                .sum();
            (g2, adv)
        })
        .unzip();
    let entries = psis
        .iter()
        .map(|psi| {
            let x = psi.values();
            let q = quotient(grid, x, p, &grad, &keep);
            let lhs = face_energy(grid, alpha, x);
            let rhs: f64 = (0..grid.len())
                .map(|i| {
                    vol[i]
                        * alpha[i]
                        * (c2 * rho[i] * x[i] * x[i] + c1 * g2[i] * q[i] * q[i]
                            - c2 * adv[i] * x[i] * q[i])
                })
                .sum();
            Slack {
                lhs,
                rhs,
                slack: lhs - rhs,
            }
        })
        .collect();
    Ok(SlackReport { entries })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport {
    pub beta: f64,
    pub t: f64,
    pub lambda: f64,
    pub lhs: f64,
    pub rhs_terms: (f64, f64),
    pub slack: f64,
    pub coefficient: f64,
    pub lambda_sup: f64,
    pub lambda_cap: f64,
    pub h_value: f64,
}

impl EstimateReport {
    pub fn rhs(&self) -> f64 {
        self.rhs_terms.0 + self.rhs_terms.1
    }

    /// `slack ≥ -tol · max(lhs, rhs)`.
    pub fn inequality_holds(&self, tol: f64) -> bool {
        self.slack >= -tol * self.lhs.max(self.rhs())
    }

    pub fn cap_holds(&self, tol: f64) -> bool {
        self.lambda_sup <= self.lambda_cap + tol
    }
}

/// `G(s) = ∫₀^s ((1-τ)^{-(2t+1)} - 1) dτ = ((1-s)^{-2t} - 1)/(2t) - s`.
pub fn flux_primitive(s: f64, t: f64) -> f64 {
    (powf(1.0 - s, -2.0 * t) - 1.0) / (2.0 * t) - s
}

fn check_u(grid: &Grid, u: &Field) -> Result<()> {
    grid.check(u)?;
    if u.max() >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "u reaches {} ≥ 1",
            u.max()
        )));
    }
    Ok(())
}

/// The `L^p` estimate at one branch point.
///
/// `φ` is the principal eigenfunction of the linearization at `u`; it enters only through
/// `Λ = a·∇φ/φ - ((2-β)/2)|∇φ|²/φ²`, whose supremum is compared with `‖a‖∞²/(2(2-β))`.
#[allow(clippy::too_many_arguments)]
pub fn main_estimate_check(
    grid: &Grid,
    d: &Decomposition,
    u: &Field,
    phi: &Field,
    lambda: f64,
    beta: f64,
    t: f64,
) -> Result<EstimateReport> {
    if !(beta > 1.0 && beta < 2.0) {
        return Err(Error::InvalidParameter(format!(
            "β = {beta} outside (1, 2)"
        )));
    }
    let tm = t_max(beta);
    if !(t > 0.0 && t < tm) {
        return Err(Error::InvalidParameter(format!(
            "t = {t} outside (0, {tm}) for β = {beta}"
        )));
    }
    check_u(grid, u)?;
    grid.check(phi)?;
    check_positive_interior(grid, phi, "φ")?;
    let alpha = d.alpha.values();
    let uv = u.values();
    let vol = grid.weights();
    let moment = |q: f64| -> f64 {
        (0..grid.len())
            .map(|i| vol[i] * alpha[i] * powf(1.0 - uv[i], -q))
            .sum()
    };
    let coef = coefficient(beta, t);
    let a_inf = d.a.max_norm();
    let lhs = lambda * coef * moment(2.0 * t + 3.0);
    let rhs1 = 2.0 * beta * lambda * moment(t + 3.0);
    let rhs2 = beta * a_inf * a_inf / (4.0 * (2.0 - beta)) * moment(2.0 * t);

    let p = phi.values();
    let keep = above_floor(phi);
    let grad = grid.gradient_slice(p);
    let mut lambda_sup = f64::NEG_INFINITY;
    for i in (0..grid.len()).filter(|&i| keep[i] && !grid.is_boundary(i)) {
        let g2: f64 = grad.iter().map(|g| g[i] * g[i]).sum();
        let adv: f64 = grad
            .iter()
            .enumerate()
            .map(|(k, g)| d.a.component(k)[i] * g[i])
            .sum();
        lambda_sup = lambda_sup.max(adv / p[i] - 0.5 * (2.0 - beta) * g2 / (p[i] * p[i]));
    }
    let g: Vec<f64> = uv.iter().map(|&s| flux_primitive(s, t)).collect();
    Ok(EstimateReport {
        beta,
        t,
        lambda,
        lhs,
        rhs_terms: (rhs1, rhs2),
        slack: rhs1 + rhs2 - lhs,
        coefficient: coef,
        lambda_sup,
        lambda_cap: a_inf * a_inf / (2.0 * (2.0 - beta)),
        h_value: weak_pairing(grid, d, &g),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxReport {
    pub h_value: f64,
    pub bound: f64,
    pub passed: bool,
}

/// `H = ∫ e^γ a·∇G(u)` with `G` from [`flux_primitive`], held to
/// `|H| ≤ 1e-8 ∫ e^γ |a| |∇u| (1-u)^{-(2t+2)} + 1e-12`.
pub fn flux_orthogonality_check(
    grid: &Grid,
    d: &Decomposition,
    u: &Field,
    t: f64,
) -> Result<FluxReport> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t = {t} must be > 0")));
    }
    check_u(grid, u)?;
    let uv = u.values();
    let g: Vec<f64> = uv.iter().map(|&s| flux_primitive(s, t)).collect();
    let h_value = weak_pairing(grid, d, &g);
    let grad = grid.gradient_slice(uv);
    let alpha = d.alpha.values();
    let vol = grid.weights();
    let scale: f64 = (0..grid.len())
        .map(|i| {
            let gu = sqrt(grad.iter().map(|g| g[i] * g[i]).sum::<f64>());
            vol[i] * alpha[i] * d.a.norm_at(i) * gu * powf(1.0 - uv[i], -(2.0 * t + 2.0))
        })
        .sum();
    let bound = 1e-8 * scale + 1e-12;
    Ok(FluxReport {
        h_value,
        bound,
        passed: abs(h_value) <= bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Bounded,
    Diverging,
    Inconclusive,
}

impl Trend {
    pub fn name(self) -> &'static str {
        match self {
            Trend::Bounded => "bounded",
            Trend::Diverging => "diverging",
            Trend::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Regular,
    SingularTrend,
    Inconclusive,
    /// `N < 3`: norms are reported without a verdict.
    NotApplicable,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Regular => "regular regime",
            Verdict::SingularTrend => "singular trend",
            Verdict::Inconclusive => "inconclusive",
            Verdict::NotApplicable => "no verdict",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormTrend {
    pub p: f64,
    /// Norm at every branch point.
    pub values: Vec<f64>,
    pub growth: f64,
    pub increment_ratio: Option<f64>,
    pub trend: Trend,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub dim: usize,
    pub p0: f64,
    pub critical_p: f64,
    pub trends: Vec<NormTrend>,
    /// Indices of the branch points used for the increment ratio.
    pub samples: Vec<usize>,
    pub verdict: Verdict,
}

/// Thinning factor of the distances `λ_hi - λ_k` between the sampled branch points.
pub const SAMPLE_SPACING: f64 = 16.0;

/// Picks branch points whose distance to `λ_hi` grows by at least [`SAMPLE_SPACING`], walking
/// back from the last point; returned in branch order.
pub fn trend_samples(branch: &Branch) -> Vec<usize> {
    let hi = branch.bracket.1;
    let mut picked: Vec<usize> = Vec::new();
    let mut last_dist = 0.0;
    for (k, p) in branch.points.iter().enumerate().rev() {
        let dist = hi - p.lambda;
        if picked.is_empty() || dist >= SAMPLE_SPACING * last_dist {
            picked.push(k);
            last_dist = dist;
        }
    }
    picked.reverse();
    picked
}

/// `L^p` trend of `(1-u_λ)^{-2}` along the branch.
///
/// For each recorded exponent the norms at the last three samples of [`trend_samples`] give
/// two increments; their ratio `Δ_last/Δ_prev` is below 0.5 for a norm approaching a finite
/// limit (a square-root fold gives about `1/4`) and above 1 for a norm that grows like a
/// negative power of `λ* - λ`.
pub fn regularity_diagnostic(branch: &Branch, dim: usize) -> Result<RegularityReport> {
    if branch.points.len() < 5 {
        return Err(Error::BranchTooShort(branch.points.len()));
    }
    let exps: Vec<f64> = branch.points[0].lp_norms.iter().map(|&(p, _)| p).collect();
    let samples = trend_samples(branch);
    let critical_p = 0.75 * dim as f64;
    let p0 = critical_exponent();
    let trends: Vec<NormTrend> = exps
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let values: Vec<f64> = branch.points.iter().map(|pt| pt.lp_norms[j].1).collect();
            let growth = values[values.len() - 1] / values[0];
            let increment_ratio = (samples.len() >= 3).then(|| {
                let s = &samples[samples.len() - 3..];
                let prev = values[s[1]] - values[s[0]];
                let last = values[s[2]] - values[s[1]];
                last / prev
            });
            let trend = match increment_ratio {
                Some(r) if r.is_finite() && r < 0.5 => Trend::Bounded,
                Some(r) if r.is_finite() && r > 1.0 => Trend::Diverging,
                _ => Trend::Inconclusive,
            };
            NormTrend {
                p,
                values,
                growth,
                increment_ratio,
                trend,
            }
        })
        .collect();
    let critical = trends
        .iter()
        .find(|t| abs(t.p - critical_p) < 1e-12)
        .map(|t| t.trend);
    let verdict = if dim < 3 {
        Verdict::NotApplicable
    } else {
        match critical {
            Some(Trend::Bounded) if critical_p < p0 => Verdict::Regular,
            Some(Trend::Diverging) => Verdict::SingularTrend,
            _ => Verdict::Inconclusive,
        }
    };
    Ok(RegularityReport {
        dim,
        p0,
        critical_p,
        trends,
        samples,
        verdict,
    })
}

const PSI_TERMS: usize = 8;

/// Seeded smooth test functions vanishing on the boundary.
///
/// Each is `Σ_{k ≤ 8} c_k s_k` with `c_k` uniform in `[-1, 1]`: `s_k = sin(kπx̂)` on the
/// interval (`x̂` the coordinate rescaled to `[0, 1]`), `sin(k₁πx̂) sin(k₂πŷ)` with random
/// `k₁, k₂ ∈ {1..4}` on the rectangle, and `cos((k - 1/2)πr)` on the ball, which is even in
/// `r` and vanishes at `r = 1`. Function `j` draws from stream `j` of the generator, so it does
/// not depend on how many others are requested.
pub fn random_test_functions(grid: &Grid, count: usize, seed: u64) -> Result<Vec<Field>> {
    let axes = grid.axes();
    (0..count)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64);
            let terms: Vec<(f64, f64, f64)> = (1..=PSI_TERMS)
                .map(|k| {
                    let c = rng.gen_range(-1.0..=1.0);
                    match grid.kind() {
                        GridKind::Rectangle => {
                            (c, rng.gen_range(1..=4) as f64, rng.gen_range(1..=4) as f64)
                        }
                        _ => (c, k as f64, 0.0),
                    }
                })
                .collect();
            let mut values = vec![0.0; grid.len()];
            for (i, v) in values.iter_mut().enumerate() {
                if grid.is_boundary(i) {
                    continue;
                }
                let [x, y] = grid.coords(i);
                let xh = (x - axes[0].lo) / (axes[0].hi - axes[0].lo);
                *v = terms
                    .iter()
                    .map(|&(c, k1, k2)| {
                        c * match grid.kind() {
                            GridKind::Interval => sin(k1 * core::f64::consts::PI * xh),
                            GridKind::RadialBall => cos((k1 - 0.5) * core::f64::consts::PI * x),
                            GridKind::Rectangle => {
                                let yh = (y - axes[1].lo) / (axes[1].hi - axes[1].lo);
                                sin(k1 * core::f64::consts::PI * xh)
                                    * sin(k2 * core::f64::consts::PI * yh)
                            }
                        }
                    })
                    .sum();
            }
            Field::new(grid, values)
        })
        .collect()
}
