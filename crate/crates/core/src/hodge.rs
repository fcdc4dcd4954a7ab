//! The decomposition `c = -∇γ + a` with `div(e^γ a) = 0`.
//!
//! `α = e^γ` is the positive null vector of the conservative generator `Δα + div(αc)` with
//! zero normal flux. On the dual-cell mesh the generator flux across a face is
//!
//! ```text
//!   F = (α_hi - α_lo)/h + c̄ (α_lo + α_hi)/2 = ᾱ (c̄ + (2/h) tanh(Δγ/2))
//! ```
//!
//! with `ᾱ` the face mean of `α` and `Δγ = γ_hi - γ_lo`. The bracket is the face value of
//! `a`; with it `ᾱ a_f` is exactly the generator flux, so `div(e^γ a)` and the weak pairing
//! `∫ e^γ a·∇ψ` vanish to rounding rather than to truncation order. The nodal field `a` is
//! `c + ∇γ` with the grid's discrete gradient.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, VectorField};
use crate::math::{abs, ln, norm_inf, tanh, EPS};
use crate::operators::{assemble_kr_generator, face_velocity, OperatorMatrix};

const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// `‖div(e^γ a)‖∞` from the conservative face fluxes.
    pub div_residual: f64,
    /// Largest `|(∇α + αc)·n|` over boundary nodes, with one-sided nodal gradients.
    pub bc_residual: f64,
    /// `‖Mα - μα‖∞`.
    pub eig_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub gamma: Field,
    pub a: VectorField,
    pub alpha: Field,
    pub mu: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    face_a: Vec<f64>,
}

impl Decomposition {
    /// Normal component of `a` on every face of the grid, in [`Grid::faces`] order.
    pub fn face_a(&self) -> &[f64] {
        &self.face_a
    }
}

/// Face values `c̄ + (2/h) tanh(Δγ/2)` of the divergence-free part.
pub fn face_a(grid: &Grid, gamma: &[f64], c: &VectorField) -> Vec<f64> {
    grid.faces()
        .iter()
        .map(|f| {
            face_velocity(c, f.lo, f.hi, f.axis)
                + 2.0 / f.h * tanh(0.5 * (gamma[f.hi] - gamma[f.lo]))
        })
        .collect()
}

/// Net outflow of `ᾱ a_f` per unit cell volume at every node.
fn flux_divergence(grid: &Grid, alpha: &[f64], face_a: &[f64]) -> Vec<f64> {
    let w = grid.weights();
    let mut div = vec![0.0; grid.len()];
    for (f, &af) in grid.faces().iter().zip(face_a) {
        let flux = f.area * 0.5 * (alpha[f.lo] + alpha[f.hi]) * af;
        div[f.lo] += flux / w[f.lo];
        div[f.hi] -= flux / w[f.hi];
    }
    div
}

fn boundary_flux(grid: &Grid, alpha: &[f64], c: &VectorField) -> f64 {
    let grad = grid.gradient_slice(alpha);
    grid.boundary_nodes()
        .iter()
        .zip(grid.boundary_normals())
        .map(|(&k, n)| {
            let mut s = 0.0;
            for (axis, g) in grad.iter().enumerate() {
                s += (g[k] + alpha[k] * c.component(axis)[k]) * n[axis];
            }
            abs(s)
        })
        .fold(0.0, f64::max)
}

fn rayleigh(grid: &Grid, v: &[f64], mv: &[f64]) -> f64 {
    grid.integrate_product(v, mv) / grid.integrate_product(v, v)
}

fn eig_residual(v: &[f64], mv: &[f64], mu: f64) -> f64 {
    v.iter()
        .zip(mv)
        .fold(0.0, |m, (x, y)| m.max(abs(y - mu * x)))
}

/// Rounding level of `‖Mv‖∞` for `‖v‖∞ = 1`.
fn rounding_floor(m: &OperatorMatrix) -> f64 {
    64.0 * EPS * m.norm_inf()
}

/// Scales `v` so that its entry of largest magnitude is `+1`.
pub(crate) fn max_normalize(v: &mut [f64]) {
    let (mut big, mut k) = (0.0, 0);
    for (i, x) in v.iter().enumerate() {
        if abs(*x) > big {
            big = abs(*x);
            k = i;
        }
    }
    let s = 1.0 / v[k];
    for x in v.iter_mut() {
        *x *= s;
    }
}

fn assemble(
    grid: &Grid,
    alpha: Vec<f64>,
    c: &VectorField,
    mu: f64,
    eig: f64,
    iters: usize,
) -> Result<Decomposition> {
    let gamma: Vec<f64> = alpha.iter().map(|&x| ln(x)).collect();
    let grad = grid.gradient_slice(&gamma);
    let a: Vec<Vec<f64>> = grad
        .iter()
        .zip(c.components())
        .map(|(g, ck)| g.iter().zip(ck).map(|(x, y)| x + y).collect())
        .collect();
    let fa = face_a(grid, &gamma, c);
    let div = flux_divergence(grid, &alpha, &fa);
    let residuals = Residuals {
        div_residual: norm_inf(&div),
        bc_residual: boundary_flux(grid, &alpha, c),
        eig_residual: eig,
    };
    Ok(Decomposition {
        gamma: Field::new(grid, gamma)?,
        a: VectorField::new(grid, a)?,
        alpha: Field::new(grid, alpha)?,
        mu,
        residuals,
        iterations: iters,
        face_a: fa,
    })
}

/// Computes `α`, `γ = ln α` and `a = c + ∇γ` by shifted inverse iteration on the
/// conservative generator, normalized so that `max α = 1`.
pub fn decompose(grid: &Grid, c: &VectorField, tol: f64) -> Result<Decomposition> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(Error::InvalidParameter(alloc::format!(
            "decomposition tolerance {tol} outside (0, 1e-6]"
        )));
    }
    let m = assemble_kr_generator(grid, c)?;
    let n = grid.len();
    if c.components().iter().all(|ck| ck.iter().all(|&x| x == 0.0)) {
        return assemble(grid, vec![1.0; n], c, 0.0, 0.0, 0);
    }
    let sigma = 1e-8 * m.norm_inf();
    let lu = m.factorize(sigma)?;
    let target = tol.max(rounding_floor(&m));
    let mut v = vec![1.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        lu.solve_in_place(&mut v);
        max_normalize(&mut v);
        let mv = m.apply_slice(&v);
        let mu = rayleigh(grid, &v, &mv);
        let previous = residual;
        residual = eig_residual(&v, &mv, mu);
        // below the target, keep iterating while the residual still drops
        if residual <= target && (residual > 0.5 * previous || residual == 0.0) {
            if let Some((node, &min)) = v
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .filter(|(_, &x)| x <= 0.0)
            {
                return Err(Error::NotPositive { min, node });
            }
            return assemble(grid, v, c, mu, residual, it);
        }
    }
    Err(Error::EigenNoConvergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

/// `∫ e^γ a·∇ψ` as a sum over faces: `Σ_f area · ᾱ a_f · (ψ_hi - ψ_lo)`.
///
/// For `ψ` vanishing on the boundary this equals `-Σ_i w_i ψ_i div(e^γ a)_i`.
pub fn weak_pairing(grid: &Grid, d: &Decomposition, psi: &[f64]) -> f64 {
    let alpha = d.alpha.values();
    grid.faces()
        .iter()
        .zip(&d.face_a)
        .map(|(f, &af)| f.area * 0.5 * (alpha[f.lo] + alpha[f.hi]) * af * (psi[f.hi] - psi[f.lo]))
        .sum()
}

/// Same sum with `|·|` on every term; the natural scale for [`weak_pairing`].
pub fn weak_pairing_scale(grid: &Grid, d: &Decomposition, psi: &[f64]) -> f64 {
    let alpha = d.alpha.values();
    grid.faces()
        .iter()
        .zip(&d.face_a)
        .map(|(f, &af)| {
            abs(f.area * 0.5 * (alpha[f.lo] + alpha[f.hi]) * af * (psi[f.hi] - psi[f.lo]))
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, bound: f64) -> Check {
        Check {
            name,
            value,
            bound,
            passed: value <= bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub checks: Vec<Check>,
}

impl DecompositionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Recomputes every residual of `d` from `γ` and `c` alone and checks the invariants.
///
/// `tol` bounds `|μ|` and the eigen and divergence residuals (floored at the rounding level
/// of the generator). The boundary flux is a nodal one-sided quantity and is held to
/// `50 h² (1 + ‖c‖∞)³`.
pub fn verify_decomposition(
    grid: &Grid,
    d: &Decomposition,
    c: &VectorField,
    tol: f64,
) -> Result<DecompositionReport> {
    grid.check(&d.gamma)?;
    grid.check(&d.alpha)?;
    grid.check_vector(&d.a)?;
    grid.check_vector(c)?;
    let m = assemble_kr_generator(grid, c)?;
    let gamma = d.gamma.values();
    let alpha: Vec<f64> = gamma.iter().map(|&g| crate::math::exp(g)).collect();
    let floor = tol.max(rounding_floor(&m));
    let mut checks = Vec::new();

    checks.push(Check {
        name: "alpha_positive",
        value: d.alpha.min(),
        bound: 0.0,
        passed: d.alpha.min() > 0.0,
    });
    let log_err = gamma
        .iter()
        .zip(d.alpha.values())
        .fold(0.0f64, |acc, (&g, &a)| acc.max(abs(g - ln(a))));
    checks.push(Check::at_most(
        "gamma_is_log_alpha",
        log_err,
        1e-12 * (1.0 + norm_inf(gamma)),
    ));
    checks.push(Check::at_most(
        "max_alpha_is_one",
        abs(d.alpha.max() - 1.0),
        1e-12,
    ));

    let grad = grid.gradient_slice(gamma);
    let mut a_err: f64 = 0.0;
    let mut a_scale: f64 = 1.0;
    for (k, g) in grad.iter().enumerate() {
        for i in 0..grid.len() {
            let expect = c.component(k)[i] + g[i];
            a_err = a_err.max(abs(d.a.component(k)[i] - expect));
            a_scale = a_scale.max(abs(expect));
        }
    }
    checks.push(Check::at_most(
        "a_equals_c_plus_grad_gamma",
        a_err,
        1e-12 * a_scale,
    ));

    let ma = m.apply_slice(&alpha);
    let mu = rayleigh(grid, &alpha, &ma);
    checks.push(Check::at_most("eigenvalue_zero", abs(mu), floor));
    checks.push(Check::at_most(
        "eig_residual",
        eig_residual(&alpha, &ma, mu),
        floor,
    ));
    let fa = face_a(grid, gamma, c);
    let div = norm_inf(&flux_divergence(grid, &alpha, &fa));
    checks.push(Check::at_most("div_residual", div, floor));
    let h = grid.h_max();
    let cmax = (0..c.dim())
        .map(|k| c.max_abs_component(k))
        .fold(0.0, f64::max);
    let bc_bound = 50.0 * h * h * (1.0 + cmax) * (1.0 + cmax) * (1.0 + cmax) + floor;
    checks.push(Check::at_most(
        "bc_residual",
        boundary_flux(grid, &alpha, c),
        bc_bound,
    ));
    Ok(DecompositionReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::vector_from_fn;
    use core::f64::consts::PI;

    #[test]
    fn zero_field_is_trivial() {
        let g = Grid::interval(33, 0.0, 1.0).unwrap();
        let c = VectorField::zeros(&g);
        let d = decompose(&g, &c, 1e-10).unwrap();
        assert_eq!(d.mu, 0.0);
        assert!(d.gamma.values().iter().all(|&x| x == 0.0));
        assert_eq!(d.a.max_norm(), 0.0);
        let r = verify_decomposition(&g, &d, &c, 1e-10).unwrap();
        assert!(r.passed(), "{r:?}");
        for name in [
            "div_residual",
            "eig_residual",
            "bc_residual",
            "eigenvalue_zero",
        ] {
            assert!(r.get(name).unwrap().value <= 1e-12);
        }
    }

    #[test]
    fn constant_drift_is_a_gradient() {
        let g = Grid::interval(129, 0.0, 1.0).unwrap();
        let c = vector_from_fn(&g, |_| [1.0, 0.0]).unwrap();
        let d = decompose(&g, &c, 1e-10).unwrap();
        // the discrete null vector is exactly geometric, so γ is affine with slope
        // -(2/h) artanh(h/2)
        let h = g.axes()[0].h;
        let slope = -2.0 / h * libm::atanh(0.5 * h);
        for i in 1..g.len() {
            let dg = d.gamma[i] - d.gamma[i - 1];
            assert!((dg - slope * h).abs() < 1e-12);
        }
        assert!(d.a.max_norm() < h * h);
        assert!(d.face_a().iter().all(|x| x.abs() < 1e-12));
        assert!(verify_decomposition(&g, &d, &c, 1e-10).unwrap().passed());
    }

    #[test]
    fn normalization_does_not_matter() {
        let g = Grid::interval(65, 0.0, 1.0).unwrap();
        let c = vector_from_fn(&g, |[x, _]| [(3.0 * x).sin() + 0.5, 0.0]).unwrap();
        let d = decompose(&g, &c, 1e-10).unwrap();
        assert!(d.gamma.max().abs() < 1e-15);
        let shifted: Vec<f64> = d.alpha.values().iter().map(|a| 7.5 * a).collect();
        let again = assemble(&g, shifted, &c, d.mu, 0.0, 0).unwrap();
        for i in 0..g.len() {
            assert!((again.a.component(0)[i] - d.a.component(0)[i]).abs() < 1e-12);
        }
        assert!((again.residuals.div_residual / 7.5 - d.residuals.div_residual).abs() < 1e-9);
    }

    #[test]
    fn rotational_drift_on_square() {
        let g = Grid::rectangle(17, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let c = vector_from_fn(&g, |[_, y]| [(PI * y).sin(), 0.0]).unwrap();
        let d = decompose(&g, &c, 1e-10).unwrap();
        assert!(d.alpha.min() > 0.0);
        assert!(d.residuals.div_residual < 1e-10);
        assert!(d.mu.abs() < 1e-10);
        let r = verify_decomposition(&g, &d, &c, 1e-10).unwrap();
        assert!(r.passed(), "{r:?}");

        // doubling γ breaks the divergence identity
        let mut bad = d.clone();
        bad.gamma = d.gamma.map(|x| 2.0 * x).unwrap();
        bad.alpha = bad.gamma.map(crate::math::exp).unwrap();
        let r = verify_decomposition(&g, &bad, &c, 1e-10).unwrap();
        assert!(!r.get("div_residual").unwrap().passed);
    }

    #[test]
    fn weak_form_vanishes_for_interior_test_functions() {
        let g = Grid::rectangle(17, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let c = vector_from_fn(&g, |[x, y]| [(PI * y).sin() + x, 0.3 * y]).unwrap();
        let d = decompose(&g, &c, 1e-10).unwrap();
        let psi = Field::from_fn(&g, |[x, y]| {
            (PI * x).sin() * (2.0 * PI * y).sin() * (1.0 + x)
        })
        .unwrap();
        let pairing = weak_pairing(&g, &d, psi.values());
        assert!(pairing.abs() < 1e-12 * weak_pairing_scale(&g, &d, psi.values()).max(1.0));
    }

    #[test]
    fn rejects_bad_tolerance() {
        let g = Grid::interval(9, 0.0, 1.0).unwrap();
        assert!(decompose(&g, &VectorField::zeros(&g), 1e-3).is_err());
    }
}
