use std::f64::consts::PI;

use pullin_core::fieldexpr::{sample_vector, Expr};
use pullin_core::grid::{Field, Grid, VectorField};
use pullin_core::hodge::{decompose, verify_decomposition, weak_pairing, weak_pairing_scale};
use pullin_core::ineq::{
    energy_inequality_check, flux_orthogonality_check, hardy_check, main_estimate_check,
    random_test_functions, regularity_diagnostic, t_max, HardyProbe, Verdict,
};
use pullin_core::solver::{continue_branch, Branch, ContinuationSettings};
use pullin_core::spectral::{linearization_potential, linearized_stability};

fn rotational(g: &Grid) -> VectorField {
    sample_vector(
        g,
        &[Expr::parse("sin(pi*y)").unwrap(), Expr::parse("0").unwrap()],
    )
    .unwrap()
}

fn branch(g: &Grid, c: &VectorField) -> Branch {
    continue_branch(g, c, ContinuationSettings::default()).unwrap()
}

#[test]
fn gradient_drift_is_recovered() {
    let gamma_error = |m: usize| {
        let g = Grid::interval(m, 0.0, 1.0).unwrap();
        let c = sample_vector(&g, &[Expr::parse("1").unwrap()]).unwrap();
        let d = decompose(&g, &c, 1e-10).unwrap();
        assert!(d.a.max_norm() <= 1e-6 || m < 513);
        assert!(d.mu.abs() <= 1e-10, "{}", d.mu);
        assert!(verify_decomposition(&g, &d, &c, 1e-10).unwrap().passed());
        (0..g.len())
            .map(|i| {
                let x = g.coords(i)[0];
                (d.gamma[i] - d.gamma[0] + x).abs()
            })
            .fold(0.0, f64::max)
    };
    let (a, b) = (gamma_error(513), gamma_error(1025));
    assert!((3.2..=4.8).contains(&(a / b)), "{a} {b}");
}

#[test]
fn rotational_drift_certificate() {
    let g = Grid::rectangle(65, (0.0, 1.0), (0.0, 1.0)).unwrap();
    let c = rotational(&g);
    let d = decompose(&g, &c, 1e-10).unwrap();
    assert!(d.residuals.div_residual <= 1e-8);
    assert!(d.mu.abs() <= 1e-8);
    assert!(d.alpha.min() > 0.0);
    // the weak form vanishes for interior test functions
    for psi in random_test_functions(&g, 10, 7).unwrap() {
        let p = weak_pairing(&g, &d, psi.values());
        let grad = g.discrete_gradient(&psi).unwrap().max_norm();
        assert!(p.abs() <= 1e-8 * grad, "{p}");
        assert!(p.abs() <= 1e-12 * weak_pairing_scale(&g, &d, psi.values()).max(1.0));
    }
}

#[test]
fn hardy_suite() {
    let psi_1d = |g: &Grid| random_test_functions(g, 200, 42).unwrap();
    // constant E
    let g = Grid::interval(257, 0.0, 1.0).unwrap();
    let w = Field::from_fn(&g, |[x, _]| 1.0 + 0.5 * x).unwrap();
    let probe = HardyProbe::new(&g, w, Field::constant(&g, 3.0), 1.5, psi_1d(&g)).unwrap();
    assert!(hardy_check(&g, &probe).unwrap().passes(1e-8));
    // E = sin(πx)
    let e = Field::from_fn(&g, |[x, _]| (PI * x).sin().max(0.0)).unwrap();
    for beta in [1.0, 1.5, 2.0] {
        let probe =
            HardyProbe::new(&g, Field::constant(&g, 1.0), e.clone(), beta, psi_1d(&g)).unwrap();
        let r = hardy_check(&g, &probe).unwrap();
        assert!(r.passes(1e-8), "β = {beta}: {}", r.min_relative_slack());
    }
    // E = φ, w = e^γ on the advected square
    let g = Grid::rectangle(33, (0.0, 1.0), (0.0, 1.0)).unwrap();
    let c = rotational(&g);
    let d = decompose(&g, &c, 1e-10).unwrap();
    let phi = linearized_stability(&g, &c, &Field::zeros(&g), 0.0, 1e-9)
        .unwrap()
        .phi;
    let probe = HardyProbe::new(
        &g,
        d.alpha.clone(),
        phi,
        1.5,
        random_test_functions(&g, 200, 42).unwrap(),
    )
    .unwrap();
    let r = hardy_check(&g, &probe).unwrap();
    assert!(r.passes(1e-8), "{}", r.min_relative_slack());
}

fn estimate_sweep(g: &Grid, c: &VectorField) {
    let d = decompose(g, c, 1e-10).unwrap();
    let b = branch(g, c);
    for p in b.points.iter().skip(1) {
        let phi = linearized_stability(g, c, &p.u, p.lambda, 1e-9)
            .unwrap()
            .phi;
        for beta in [1.25, 1.5, 1.75] {
            for frac in [0.5, 0.9, 0.99] {
                let r = main_estimate_check(g, &d, &p.u, &phi, p.lambda, beta, frac * t_max(beta))
                    .unwrap();
                assert!(r.coefficient > 0.0);
                assert!(r.inequality_holds(1e-10), "{r:?}");
                assert!(r.cap_holds(1e-10), "{r:?}");
            }
        }
    }
}

#[test]
fn main_estimate_without_drift() {
    let g = Grid::interval(257, 0.0, 1.0).unwrap();
    estimate_sweep(&g, &VectorField::zeros(&g));
}

#[test]
fn main_estimate_with_rotational_drift() {
    let g = Grid::rectangle(33, (0.0, 1.0), (0.0, 1.0)).unwrap();
    estimate_sweep(&g, &rotational(&g));
}

#[test]
fn flux_identity_at_mid_branch() {
    let g = Grid::rectangle(33, (0.0, 1.0), (0.0, 1.0)).unwrap();
    let c = rotational(&g);
    let d = decompose(&g, &c, 1e-10).unwrap();
    let b = branch(&g, &c);
    let mid = &b.points[b.points.len() / 2];
    for t in [0.5, 1.0, 3.0] {
        let r = flux_orthogonality_check(&g, &d, &mid.u, t).unwrap();
        assert!(r.passed, "{r:?}");
    }
}

#[test]
fn energy_inequality_reduces_to_semi_stability() {
    let g = Grid::interval(257, 0.0, 1.0).unwrap();
    let c = VectorField::zeros(&g);
    let d = decompose(&g, &c, 1e-10).unwrap();
    let b = branch(&g, &c);
    let psis = random_test_functions(&g, 50, 42).unwrap();
    let n = b.points.len();
    for p in [&b.points[n / 3], &b.points[2 * n / 3], &b.points[n - 1]] {
        let phi = linearized_stability(&g, &c, &p.u, p.lambda, 1e-9)
            .unwrap()
            .phi;
        let rho = linearization_potential(&g, &p.u, p.lambda).unwrap();
        let r = energy_inequality_check(&g, &d, &phi, &rho, 2.0, &psis).unwrap();
        assert!(
            r.passes(1e-8),
            "λ = {}: {}",
            p.lambda,
            r.min_relative_slack()
        );
    }
}

#[test]
fn energy_inequality_with_rotational_drift() {
    let g = Grid::rectangle(33, (0.0, 1.0), (0.0, 1.0)).unwrap();
    let c = rotational(&g);
    let d = decompose(&g, &c, 1e-10).unwrap();
    let b = branch(&g, &c);
    let mid = &b.points[b.points.len() / 2];
    let phi = linearized_stability(&g, &c, &mid.u, mid.lambda, 1e-9)
        .unwrap()
        .phi;
    let rho = linearization_potential(&g, &mid.u, mid.lambda).unwrap();
    let psis = random_test_functions(&g, 50, 42).unwrap();
    for beta in [1.0, 1.5, 2.0] {
        let r = energy_inequality_check(&g, &d, &phi, &rho, beta, &psis).unwrap();
        assert!(r.passes(1e-8), "β = {beta}: {}", r.min_relative_slack());
    }
}

#[test]
fn three_dimensional_ball_is_regular() {
    for m in [257, 513] {
        let g = Grid::radial_ball(3, m).unwrap();
        let b = branch(&g, &VectorField::zeros(&g));
        let r = regularity_diagnostic(&b, 3).unwrap();
        let crit = r.trends.iter().find(|t| t.p == 2.25).unwrap();
        assert!(
            crit.increment_ratio.unwrap() < 0.5,
            "{:?}",
            crit.increment_ratio
        );
        assert_eq!(r.verdict, Verdict::Regular);
    }
}
