//! Principal eigenpairs of Dirichlet operators `-Δ + c·∇ - ρ`.
//!
//! The operators are not symmetric, but their principal eigenvalue is real and simple with a
//! positive eigenfunction. Inverse iteration is run on the interior block, first with a shift
//! below every Gershgorin disc; each time the estimate settles the shift is moved to within a
//! twentieth of its distance from the estimate.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, VectorField};
use crate::hodge::max_normalize;
use crate::math::{abs, norm_inf, EPS};
use crate::operators::{assemble_advection_diffusion, BoundaryCondition, OperatorMatrix};

const MAX_ITERATIONS: usize = 500;
const MAX_REFINEMENTS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    /// Positive in the interior, zero on the boundary, `max φ = 1`.
    pub phi: Field,
    pub k: f64,
    /// `‖Mφ - Kφ‖∞` over interior rows.
    pub residual: f64,
    pub iterations: usize,
}

/// `K ≥ -1e-8 |K₀|` counts as nonnegative.
pub fn is_semi_stable(k: f64, k0: f64) -> bool {
    k >= -1e-8 * abs(k0)
}

/// Principal eigenpair of a Dirichlet-tagged operator by shifted inverse iteration with a
/// quadrature-weighted Rayleigh quotient.
pub fn principal_eigenpair(grid: &Grid, m: &OperatorMatrix, tol: f64) -> Result<EigenPair> {
    if m.boundary_condition() != BoundaryCondition::Dirichlet {
        return Err(Error::InvalidParameter(
            "principal eigenpairs need a Dirichlet operator".into(),
        ));
    }
    if m.grid_id() != grid.id() {
        return Err(Error::GridMismatch(
            "operator assembled on another grid".into(),
        ));
    }
    if !(tol > 0.0 && tol <= 1e-8) {
        return Err(Error::InvalidParameter(format!(
            "eigen tolerance {tol} outside (0, 1e-8]"
        )));
    }
    let interior: Vec<usize> = (0..grid.len()).filter(|&i| !grid.is_boundary(i)).collect();
    let a = m.matrix().submatrix(&interior);
    let w: Vec<f64> = interior.iter().map(|&i| grid.weights()[i]).collect();
    let n = interior.len();
    let target = tol.max(64.0 * EPS * a.norm_inf());

    let gershgorin = (0..n)
        .map(|r| {
            let (cols, vals) = a.row(r);
            cols.iter()
                .zip(vals)
                .fold(0.0, |s, (&c, &v)| if c == r { s + v } else { s - abs(v) })
        })
        .fold(f64::INFINITY, f64::min);
    let sigma0 = gershgorin - 1e-3 * (1.0 + abs(gershgorin));

    let rayleigh = |v: &[f64], av: &[f64]| -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            num += w[i] * v[i] * av[i];
            den += w[i] * v[i] * v[i];
        }
        num / den
    };

    let mut sigma = sigma0;
    let mut lu = a.lu_shifted(sigma)?;
    let mut refinements = 0;
    let mut v = vec![1.0; n];
    let mut k_prev = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        lu.solve_in_place(&mut v);
        max_normalize(&mut v);
        let av = a.mul_vec(&v);
        let k = rayleigh(&v, &av);
        let previous = residual;
        residual = v
            .iter()
            .zip(&av)
            .fold(0.0, |r, (x, y)| r.max(abs(y - k * x)));
        if residual <= target && (residual > 0.5 * previous || residual == 0.0) {
            if let Some(node) = (0..n).find(|&i| v[i] <= 0.0) {
                return Err(Error::NotPositive {
                    min: v[node],
                    node: interior[node],
                });
            }
            let mut phi = vec![0.0; grid.len()];
            for (j, &i) in interior.iter().enumerate() {
                phi[i] = v[j];
            }
            return Ok(EigenPair {
                phi: Field::new(grid, phi)?,
                k,
                residual,
                iterations: it,
            });
        }
        if refinements < MAX_REFINEMENTS && abs(k - k_prev) <= 1e-3 * abs(k - sigma) {
            // near the fold the Gershgorin bound sits far below K and the contraction rate is
            // close to 1 until the shift approaches the estimate
            sigma = k - 0.05 * abs(k - sigma);
            lu = a.lu_shifted(sigma)?;
            refinements += 1;
        }
        k_prev = k;
    }
    Err(Error::EigenNoConvergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

/// `ρ = 2λ/(1-u)³`.
pub fn linearization_potential(grid: &Grid, u: &Field, lambda: f64) -> Result<Field> {
    grid.check(u)?;
    if u.max() >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "u reaches {} ≥ 1; the linearization is undefined",
            u.max()
        )));
    }
    u.map(|x| {
        let s = 1.0 - x;
        2.0 * lambda / (s * s * s)
    })
}

/// Principal eigenpair of `-Δ + c·∇ - 2λ/(1-u)³` at a branch point.
pub fn linearized_stability(
    grid: &Grid,
    c: &VectorField,
    u: &Field,
    lambda: f64,
    tol: f64,
) -> Result<EigenPair> {
    let rho = linearization_potential(grid, u, lambda)?;
    let m = assemble_advection_diffusion(grid, c, Some(&rho))?;
    principal_eigenpair(grid, &m, tol)
}

/// Relative distance `‖φ/‖φ‖∞ - ψ/‖ψ‖∞‖∞` between two nonnegative profiles.
pub fn profile_distance(phi: &Field, psi: &Field) -> f64 {
    let (a, b) = (norm_inf(phi.values()), norm_inf(psi.values()));
    phi.values()
        .iter()
        .zip(psi.values())
        .fold(0.0, |m, (x, y)| m.max(abs(x / a - y / b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{assemble_weighted_form, vector_from_fn};
    use core::f64::consts::PI;

    fn laplacian(g: &Grid) -> OperatorMatrix {
        assemble_advection_diffusion(g, &VectorField::zeros(g), None).unwrap()
    }

    #[test]
    fn dirichlet_laplacian() {
        let g = Grid::interval(513, 0.0, 1.0).unwrap();
        let e = principal_eigenpair(&g, &laplacian(&g), 1e-8).unwrap();
        assert!((e.k - PI * PI).abs() < 1e-3 * PI * PI);
        // the discrete eigenvalue is known exactly
        let h = g.axes()[0].h;
        let exact = 4.0 / (h * h) * libm::sin(0.5 * PI * h).powi(2);
        assert!((e.k - exact).abs() < 1e-9 * exact);
        let sine = Field::from_fn(&g, |[x, _]| (PI * x).sin()).unwrap();
        assert!(profile_distance(&e.phi, &sine) < 1e-3);
        assert_eq!(e.phi[0], 0.0);
    }

    #[test]
    fn constant_drift_shift() {
        let g = Grid::interval(513, 0.0, 1.0).unwrap();
        let c = vector_from_fn(&g, |_| [1.0, 0.0]).unwrap();
        let m = assemble_advection_diffusion(&g, &c, None).unwrap();
        let e = principal_eigenpair(&g, &m, 1e-8).unwrap();
        let expect = PI * PI + 0.25;
        assert!((e.k - expect).abs() < 1e-3 * expect);
    }

    #[test]
    fn constant_potential_shifts_spectrum() {
        let g = Grid::interval(129, 0.0, 1.0).unwrap();
        let c = vector_from_fn(&g, |[x, _]| [(2.0 * x).cos(), 0.0]).unwrap();
        let plain = assemble_advection_diffusion(&g, &c, None).unwrap();
        let one = Field::constant(&g, 1.0);
        let shifted = assemble_advection_diffusion(&g, &c, Some(&one)).unwrap();
        let (a, b) = (
            principal_eigenpair(&g, &plain, 1e-9).unwrap(),
            principal_eigenpair(&g, &shifted, 1e-9).unwrap(),
        );
        assert!((a.k - b.k - 1.0).abs() < 1e-8);
    }

    #[test]
    fn scaling_scales_eigenvalue() {
        let g = Grid::rectangle(17, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let c = vector_from_fn(&g, |[_, y]| [(PI * y).sin(), 0.0]).unwrap();
        let m = assemble_advection_diffusion(&g, &c, None).unwrap();
        let a = principal_eigenpair(&g, &m, 1e-9).unwrap();
        let b = principal_eigenpair(&g, &m.scaled(3.0), 1e-9).unwrap();
        assert!((b.k - 3.0 * a.k).abs() < 1e-9 * b.k);
        assert!(profile_distance(&a.phi, &b.phi) < 1e-8);
    }

    fn gradient_drift_gap(m: usize) -> f64 {
        // c = ∇g turns -Δ + c·∇ into e^{g} (-div(e^{-g} ∇·))
        let g = Grid::interval(m, 0.0, 1.0).unwrap();
        let pot = |x: f64| 0.8 * (PI * x).sin() + x;
        let c = vector_from_fn(&g, |[x, _]| [0.8 * PI * (PI * x).cos() + 1.0, 0.0]).unwrap();
        let nsa = principal_eigenpair(
            &g,
            &assemble_advection_diffusion(&g, &c, None).unwrap(),
            1e-9,
        )
        .unwrap();
        let gamma = Field::from_fn(&g, |[x, _]| -pot(x)).unwrap();
        let weighted = assemble_weighted_form(&g, &gamma, &VectorField::zeros(&g), None).unwrap();
        let inv_w: Vec<f64> = gamma.values().iter().map(|&x| (-x).exp()).collect();
        let sa = principal_eigenpair(
            &g,
            &OperatorMatrix::new(
                weighted.matrix().map_entries(
                    |r, _, v| {
                        if g.is_boundary(r) {
                            v
                        } else {
                            v * inv_w[r]
                        }
                    },
                ),
                BoundaryCondition::Dirichlet,
                g.id(),
            ),
            1e-9,
        )
        .unwrap();
        (nsa.k - sa.k).abs() / nsa.k
    }

    #[test]
    fn gradient_drift_matches_weighted_selfadjoint_form() {
        // the two stencils differ at second order
        let (a, b) = (gradient_drift_gap(513), gradient_drift_gap(1025));
        assert!((3.2..=4.8).contains(&(a / b)), "{a} {b}");
        assert!(gradient_drift_gap(2049) < 1e-6);
    }

    #[test]
    fn ball_eigenvalue_is_a_bessel_zero() {
        // the radial Dirichlet eigenvalue of the unit 8-ball is the square of the first zero
        // of J_3
        let (mut lo, mut hi) = (5.0, 7.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if libm::jn(3, lo) * libm::jn(3, mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let exact = lo * lo;
        let g = Grid::radial_ball(8, 513).unwrap();
        let e = principal_eigenpair(&g, &laplacian(&g), 1e-9).unwrap();
        assert!((e.k - exact).abs() < 1e-3 * exact, "{} vs {exact}", e.k);
        assert!(e.phi.values()[..512].iter().all(|&v| v > 0.0));
    }

    #[test]
    fn small_load_lowers_eigenvalue() {
        let g = Grid::interval(129, 0.0, 1.0).unwrap();
        let c = VectorField::zeros(&g);
        let zero = Field::zeros(&g);
        let k0 = linearized_stability(&g, &c, &zero, 0.0, 1e-9).unwrap().k;
        let u = crate::solver::newton_solve(&g, &c, 0.1, &zero, 1e-10)
            .unwrap()
            .converged()
            .unwrap()
            .clone();
        let k = linearized_stability(&g, &c, &u, 0.1, 1e-9).unwrap().k;
        assert!(k > 0.0 && k < k0);
    }

    #[test]
    fn flux_operators_are_rejected() {
        let g = Grid::interval(17, 0.0, 1.0).unwrap();
        let m = crate::operators::assemble_kr_generator(&g, &VectorField::zeros(&g)).unwrap();
        assert!(principal_eigenpair(&g, &m, 1e-9).is_err());
    }
}
