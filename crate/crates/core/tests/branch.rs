use pullin_core::fieldexpr::Expr;
use pullin_core::grid::{Field, Grid, VectorField};
use pullin_core::solver::{continue_branch, newton_solve, shooting_oracle, ContinuationSettings};
use pullin_core::spectral::{is_semi_stable, linearized_stability};

fn unit(m: usize) -> Grid {
    Grid::interval(m, 0.0, 1.0).unwrap()
}

#[test]
fn interval_threshold_matches_shooting() {
    let g = unit(513);
    let c = VectorField::zeros(&g);
    let branch = continue_branch(&g, &c, ContinuationSettings::default()).unwrap();
    assert!(branch.bracket_width() <= 1e-6 * branch.lambda_star());
    // the interval (0, 1) is the one-dimensional ball of radius 1/2
    let oracle = shooting_oracle(1, None, 100, 0.5).unwrap();
    let rel = (branch.lambda_star() - oracle.lambda_star).abs() / oracle.lambda_star;
    assert!(
        rel <= 1e-3,
        "{} vs {}",
        branch.lambda_star(),
        oracle.lambda_star
    );
}

#[test]
fn newton_profile_matches_shooting_profile() {
    // at λ = 1 the shooting curve has two preimages; the minimal solution is the smaller η
    let g = unit(513);
    let c = VectorField::zeros(&g);
    let u = newton_solve(&g, &c, 1.0, &Field::zeros(&g), 1e-10).unwrap();
    let sup = u.converged().unwrap().max();
    let oracle = shooting_oracle(1, None, 400, 0.5).unwrap();
    let (mut a, mut b) = (0, 0);
    for (k, w) in oracle.curve.windows(2).enumerate() {
        if w[0].1 <= 1.0 && w[1].1 > 1.0 {
            a = k;
            b = k + 1;
            break;
        }
    }
    let (e0, l0) = oracle.curve[a];
    let (e1, l1) = oracle.curve[b];
    let eta = e0 + (1.0 - l0) * (e1 - e0) / (l1 - l0);
    assert!((sup - eta).abs() < 1e-4, "{sup} vs {eta}");
}

#[test]
fn radial_thresholds_agree() {
    for (dim, m) in [(2, 513), (3, 513), (7, 1025)] {
        let g = Grid::radial_ball(dim, m).unwrap();
        let branch =
            continue_branch(&g, &VectorField::zeros(&g), ContinuationSettings::default()).unwrap();
        let oracle = shooting_oracle(dim, None, 100, 1.0).unwrap();
        let rel = (branch.lambda_star() - oracle.lambda_star).abs() / oracle.lambda_star;
        assert!(
            rel <= 1e-3,
            "N = {dim}: {} vs {}",
            branch.lambda_star(),
            oracle.lambda_star
        );
    }
}

#[test]
fn minimal_solutions_are_reproduced_from_zero() {
    let g = unit(257);
    let c = VectorField::zeros(&g);
    let branch = continue_branch(&g, &c, ContinuationSettings::default()).unwrap();
    let mid = &branch.points[branch.points.len() / 2];
    let again = newton_solve(&g, &c, mid.lambda, &Field::zeros(&g), 1e-10).unwrap();
    let u = again.converged().unwrap();
    for (x, y) in u.values().iter().zip(mid.u.values()) {
        assert!((x - y).abs() < 1e-8);
    }
}

#[test]
fn eigenvalue_collapses_along_the_branch() {
    let g = unit(257);
    let c = VectorField::zeros(&g);
    let branch = continue_branch(&g, &c, ContinuationSettings::default()).unwrap();
    let ks: Vec<f64> = branch
        .points
        .iter()
        .map(|p| {
            linearized_stability(&g, &c, &p.u, p.lambda, 1e-9)
                .unwrap()
                .k
        })
        .collect();
    let k0 = ks[0];
    assert!((k0 - std::f64::consts::PI.powi(2)).abs() < 1e-3 * k0);
    for w in ks.windows(2) {
        assert!(w[1] <= w[0] + 1e-8);
    }
    assert!(ks.iter().all(|&k| is_semi_stable(k, k0)));
    assert!(*ks.last().unwrap() <= 0.05 * k0);
}

#[test]
fn advected_radial_thresholds_agree() {
    let e = Expr::parse("0.5 * r + sin(r)").unwrap();
    let g = Grid::radial_ball(3, 513).unwrap();
    let c = pullin_core::fieldexpr::sample_vector(&g, std::slice::from_ref(&e)).unwrap();
    let branch = continue_branch(&g, &c, ContinuationSettings::default()).unwrap();
    let with = shooting_oracle(3, Some(&e), 100, 1.0).unwrap();
    let without = shooting_oracle(3, None, 100, 1.0).unwrap();
    let rel = (branch.lambda_star() - with.lambda_star).abs() / with.lambda_star;
    assert!(
        rel <= 1e-3,
        "{} vs {}",
        branch.lambda_star(),
        with.lambda_star
    );
    // outward drift lowers the threshold
    assert!(with.lambda_star < without.lambda_star);
}
