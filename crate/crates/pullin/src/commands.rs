//! The seven commands and the artifacts they write.

use std::path::Path;
use std::thread;

use pullin_core::grid::{Field, Grid, GridKind};
use pullin_core::hodge::{decompose, verify_decomposition, Decomposition};
use pullin_core::ineq::{
    energy_inequality_check, flux_orthogonality_check, hardy_check, main_estimate_check,
    random_test_functions, regularity_diagnostic, t_max, HardyProbe, SlackReport,
};
use pullin_core::solver::{
    continue_branch, newton_solve, shooting_oracle, Branch, ContinuationSettings, NewtonOutcome,
};
use pullin_core::spectral::{
    is_semi_stable, linearization_potential, linearized_stability, EigenPair,
};
use serde_json::{json, Value};

use crate::config::Setup;
use crate::output::{jnum, num, Artifacts};
use crate::{Command, RunError};

pub const THREADS_VAR: &str = "PULLIN_THREADS";

/// Tolerance of the main estimate and the `Λ` cap, relative to `max(LHS, RHS)`.
const ESTIMATE_TOL: f64 = 1e-10;
/// Tolerance of the Hardy and energy checks, relative to `max(1, LHS)`.
const HARDY_TOL: f64 = 1e-8;
/// Slack on `K` being nonincreasing along the branch.
const MONOTONE_TOL: f64 = 1e-8;
/// `K` at the last branch point must have dropped to this fraction of `K(0)`.
const COLLAPSE_FRACTION: f64 = 0.05;

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    /// Names of the checks that failed; nonempty means exit code 2.
    pub failures: Vec<String>,
    pub written: Vec<std::path::PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.failures.is_empty() {
            0
        } else {
            2
        }
    }
}

/// Worker count from `PULLIN_THREADS`, defaulting to the available parallelism.
pub fn thread_count() -> Result<usize, RunError> {
    match std::env::var(THREADS_VAR) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| {
                RunError::Usage(format!("{THREADS_VAR}: `{s}` is not a positive integer"))
            }),
        Err(std::env::VarError::NotPresent) => {
            Ok(thread::available_parallelism().map_or(1, |n| n.get()))
        }
        Err(e) => Err(RunError::Usage(format!("{THREADS_VAR}: {e}"))),
    }
}

/// Maps `f` over `items` on up to `threads` workers; results keep the input order.
pub fn par_map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(&f).collect();
    }
    let f = &f;
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                s.spawn(move || {
                    (w..items.len())
                        .step_by(threads)
                        .map(|i| (i, f(&items[i])))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

fn failed(context: &str) -> impl Fn(pullin_core::Error) -> RunError + '_ {
    move |e| RunError::Failed(format!("{context}: {e}"))
}

fn io(dir: &Path) -> impl Fn(std::io::Error) -> RunError + '_ {
    move |e| {
        RunError::Usage(format!(
            "output.directory: cannot write to {}: {e}",
            dir.display()
        ))
    }
}

pub fn execute(command: Command, setup: &Setup, threads: usize) -> Result<Outcome, RunError> {
    let dir = Path::new(&setup.config.output.directory);
    let mut out = Artifacts::create(dir, setup).map_err(io(dir))?;
    let failures = match command {
        Command::Decompose => run_decompose(setup, &mut out),
        Command::Solve => run_solve(setup, &mut out),
        Command::Branch => run_branch(setup, &mut out),
        Command::Eigen => run_eigen(setup, &mut out),
        Command::Verify => run_verify(setup, &mut out, threads),
        Command::Diagnose => run_diagnose(setup, &mut out),
        Command::Oracle => run_oracle(setup, &mut out),
    }?;
    Ok(Outcome {
        failures,
        written: out.written().to_vec(),
    })
}

type Failures = Result<Vec<String>, RunError>;

fn coord_names(grid: &Grid) -> &'static [&'static str] {
    match grid.kind() {
        GridKind::Interval => &["x"],
        GridKind::RadialBall => &["r"],
        GridKind::Rectangle => &["x", "y"],
    }
}

/// Rows `node, coordinates..., value` for a nodal field.
fn nodal_table(
    grid: &Grid,
    name: &'static str,
    f: &Field,
) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let names = coord_names(grid);
    let mut header = vec!["node"];
    header.extend_from_slice(names);
    header.push(name);
    let rows = (0..grid.len())
        .map(|i| {
            let c = grid.coords(i);
            let mut row = vec![i.to_string()];
            row.extend(c[..names.len()].iter().map(|&x| num(x)));
            row.push(num(f[i]));
            row
        })
        .collect();
    (header, rows)
}

fn settings(setup: &Setup) -> ContinuationSettings {
    let s = &setup.config.solver;
    ContinuationSettings {
        step0: s.lambda_step0,
        bracket_tol: s.bracket_tol,
        newton_tol: s.newton_tol,
    }
}

fn trace(setup: &Setup) -> Result<Branch, RunError> {
    continue_branch(&setup.grid, &setup.c, settings(setup)).map_err(failed("branch"))
}

fn decomposition(setup: &Setup) -> Result<Decomposition, RunError> {
    decompose(
        &setup.grid,
        &setup.c,
        setup.config.advection.decomposition_tol,
    )
    .map_err(failed("decomposition"))
}

fn run_decompose(setup: &Setup, out: &mut Artifacts) -> Failures {
    let (g, c) = (&setup.grid, &setup.c);
    let tol = setup.config.advection.decomposition_tol;
    let d = decomposition(setup)?;
    let report = verify_decomposition(g, &d, c, tol).map_err(failed("decomposition"))?;
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|k| json!({"name": k.name, "value": jnum(k.value), "bound": jnum(k.bound), "passed": k.passed}))
        .collect();
    let names = coord_names(g);
    let coords: Vec<Vec<Value>> = (0..g.len())
        .map(|i| {
            g.coords(i)[..names.len()]
                .iter()
                .map(|&x| jnum(x))
                .collect()
        })
        .collect();
    let a: Vec<Vec<Value>> =
        d.a.components()
            .iter()
            .map(|comp| comp.iter().map(|&x| jnum(x)).collect())
            .collect();
    let doc = json!({
        "mu": jnum(d.mu),
        "iterations": d.iterations,
        "residuals": {
            "div": jnum(d.residuals.div_residual),
            "bc": jnum(d.residuals.bc_residual),
            "eig": jnum(d.residuals.eig_residual),
        },
        "checks": checks,
        "passed": report.passed(),
        "coordinates": names,
        "nodes": {
            "coords": coords,
            "gamma": d.gamma.values().iter().map(|&x| jnum(x)).collect::<Vec<_>>(),
            "alpha": d.alpha.values().iter().map(|&x| jnum(x)).collect::<Vec<_>>(),
            "a": a,
        },
    });
    let dir = Path::new(&setup.config.output.directory);
    out.json("decomposition.json", doc).map_err(io(dir))?;
    Ok(report
        .checks
        .iter()
        .filter(|k| !k.passed)
        .map(|k| format!("decomposition.{}", k.name))
        .collect())
}

fn minimal_solution(setup: &Setup, lambda: f64) -> Result<Field, RunError> {
    let tol = setup.config.solver.newton_tol;
    match newton_solve(&setup.grid, &setup.c, lambda, &Field::zeros(&setup.grid), tol)
        .map_err(failed("solve"))?
    {
        NewtonOutcome::Converged { u, .. } => Ok(u),
        NewtonOutcome::Failed {
            reason,
            iterations,
            residual,
        } => Err(RunError::Failed(format!(
            "solve: Newton from u = 0 failed at solver.lambda = {lambda} after {iterations} \
             iterations ({reason:?}, residual {residual:.3e}); λ is probably beyond the pull-in threshold"
        ))),
    }
}

fn run_solve(setup: &Setup, out: &mut Artifacts) -> Failures {
    let u = minimal_solution(setup, setup.config.solver.lambda)?;
    let (header, rows) = nodal_table(&setup.grid, "u", &u);
    let dir = Path::new(&setup.config.output.directory);
    out.csv("solution.csv", &header, &rows).map_err(io(dir))?;
    Ok(Vec::new())
}

fn eigenpair(setup: &Setup, u: &Field, lambda: f64) -> Result<EigenPair, RunError> {
    linearized_stability(
        &setup.grid,
        &setup.c,
        u,
        lambda,
        setup.config.spectral.eig_tol,
    )
    .map_err(failed("eigen"))
}

fn run_eigen(setup: &Setup, out: &mut Artifacts) -> Failures {
    let lambda = setup.config.solver.lambda;
    let u = minimal_solution(setup, lambda)?;
    let e = eigenpair(setup, &u, lambda)?;
    let k0 = if lambda == 0.0 {
        e.k
    } else {
        eigenpair(setup, &Field::zeros(&setup.grid), 0.0)?.k
    };
    let stable = is_semi_stable(e.k, k0);
    let dir = Path::new(&setup.config.output.directory);
    out.json(
        "eigen.json",
        json!({
            "lambda": jnum(lambda),
            "K": jnum(e.k),
            "K0": jnum(k0),
            "residual": jnum(e.residual),
            "iterations": e.iterations,
            "semi_stable": stable,
        }),
    )
    .map_err(io(dir))?;
    let (header, rows) = nodal_table(&setup.grid, "phi", &e.phi);
    out.csv("phi.csv", &header, &rows).map_err(io(dir))?;
    Ok(if stable {
        Vec::new()
    } else {
        vec!["semi_stability".into()]
    })
}

/// Semi-stability along a branch: `K ≥ -1e-8 K(0)`, nonincreasing, and collapsed at the end.
struct SemiStability {
    ks: Vec<f64>,
    stable: bool,
    monotone: bool,
    collapsed: bool,
}

impl SemiStability {
    fn new(ks: Vec<f64>) -> Self {
        let k0 = ks[0];
        let stable = ks.iter().all(|&k| is_semi_stable(k, k0));
        let monotone = ks.windows(2).all(|w| w[1] <= w[0] + MONOTONE_TOL);
        let collapsed = *ks.last().expect("nonempty") <= COLLAPSE_FRACTION * k0;
        SemiStability {
            ks,
            stable,
            monotone,
            collapsed,
        }
    }

    fn failures(&self) -> Vec<String> {
        [
            (self.stable, "semi_stability"),
            (self.monotone, "k_monotone"),
            (self.collapsed, "k_collapse"),
        ]
        .iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, n)| n.to_string())
        .collect()
    }
}

fn branch_eigenvalues(
    setup: &Setup,
    branch: &Branch,
    threads: usize,
) -> Result<Vec<EigenPair>, RunError> {
    par_map(&branch.points, threads, |p| {
        eigenpair(setup, &p.u, p.lambda)
    })
    .into_iter()
    .collect()
}

fn run_branch(setup: &Setup, out: &mut Artifacts) -> Failures {
    let branch = trace(setup)?;
    let threads = thread_count()?;
    let ks: Vec<f64> = branch_eigenvalues(setup, &branch, threads)?
        .iter()
        .map(|e| e.k)
        .collect();
    let semi = SemiStability::new(ks);
    let exps: Vec<String> = branch.points[0]
        .lp_norms
        .iter()
        .map(|&(p, _)| format!("norm_p={p}"))
        .collect();
    let mut header = vec!["lambda", "sup_u", "K", "newton_iters", "residual"];
    header.extend(exps.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = branch
        .points
        .iter()
        .zip(&semi.ks)
        .map(|(p, &k)| {
            let mut row = vec![
                num(p.lambda),
                num(p.sup_u),
                num(k),
                p.newton_iters.to_string(),
                num(p.residual),
            ];
            row.extend(p.lp_norms.iter().map(|&(_, v)| num(v)));
            row
        })
        .collect();
    let dir = Path::new(&setup.config.output.directory);
    out.csv("branch.csv", &header, &rows).map_err(io(dir))?;
    let (lo, hi) = branch.bracket;
    out.json(
        "lambda_star.json",
        json!({
            "bracket": [jnum(lo), jnum(hi)],
            "value": jnum(branch.lambda_star()),
            "width": jnum(branch.bracket_width()),
            "points": branch.points.len(),
            "solves": branch.solves,
            "sup_u_last": jnum(branch.last().sup_u),
            "K0": jnum(semi.ks[0]),
            "K_last": jnum(*semi.ks.last().expect("nonempty")),
            "semi_stable": semi.stable,
            "K_monotone": semi.monotone,
            "K_collapsed": semi.collapsed,
        }),
    )
    .map_err(io(dir))?;
    Ok(semi.failures())
}

fn run_diagnose(setup: &Setup, out: &mut Artifacts) -> Failures {
    let branch = trace(setup)?;
    let r = regularity_diagnostic(&branch, setup.grid.dim()).map_err(failed("diagnose"))?;
    let trends: Vec<Value> = r
        .trends
        .iter()
        .map(|t| {
            json!({
                "p": jnum(t.p),
                "first": jnum(t.values[0]),
                "last": jnum(*t.values.last().expect("nonempty")),
                "growth": jnum(t.growth),
                "increment_ratio": t.increment_ratio.map_or(Value::Null, jnum),
                "trend": t.trend.name(),
            })
        })
        .collect();
    let samples: Vec<Value> = r
        .samples
        .iter()
        .map(|&k| json!({"index": k, "lambda": jnum(branch.points[k].lambda)}))
        .collect();
    let dir = Path::new(&setup.config.output.directory);
    out.json(
        "regularity.json",
        json!({
            "dim": r.dim,
            "p0": jnum(r.p0),
            "critical_p": jnum(r.critical_p),
            "verdict": r.verdict.name(),
            "trends": trends,
            "samples": samples,
            "lambda_star": jnum(branch.lambda_star()),
            "bracket_width": jnum(branch.bracket_width()),
            "sup_u_last": jnum(branch.last().sup_u),
            "points": branch.points.len(),
        }),
    )
    .map_err(io(dir))?;
    Ok(Vec::new())
}

fn run_oracle(setup: &Setup, out: &mut Artifacts) -> Failures {
    let g = &setup.grid;
    let zero_drift = setup.c.max_norm() == 0.0;
    let (dim, radius, drift) = match g.kind() {
        GridKind::RadialBall => (g.dim(), 1.0, (!zero_drift).then(|| &setup.components[0])),
        GridKind::Interval => {
            if !zero_drift {
                return Err(RunError::Usage(
                    "advection.components: the shooting oracle on an interval needs zero drift"
                        .into(),
                ));
            }
            let a = g.axes()[0];
            (1, 0.5 * (a.hi - a.lo), None)
        }
        GridKind::Rectangle => {
            return Err(RunError::Usage(
                "grid.kind: the shooting oracle needs an interval or radial-ball grid".into(),
            ))
        }
    };
    let eta_grid = setup.config.solver.eta_grid;
    let r = shooting_oracle(dim, drift, eta_grid, radius).map_err(failed("oracle"))?;
    let rows: Vec<Vec<String>> = r.curve.iter().map(|&(e, l)| vec![num(e), num(l)]).collect();
    let dir = Path::new(&setup.config.output.directory);
    out.csv("oracle.csv", &["eta", "lambda"], &rows)
        .map_err(io(dir))?;
    out.json(
        "lambda_star_oracle.json",
        json!({
            "value": jnum(r.lambda_star),
            "eta_star": jnum(r.eta_star),
            "dim": dim,
            "radius": jnum(radius),
            "eta_grid": eta_grid,
        }),
    )
    .map_err(io(dir))?;
    Ok(Vec::new())
}

/// One line of `verify.csv`.
#[derive(Debug, Clone)]
struct Row {
    check: String,
    beta: Option<f64>,
    t: Option<f64>,
    lambda: Option<f64>,
    lhs: f64,
    rhs: f64,
    slack: f64,
    /// Slack divided by the scale the tolerance is relative to.
    relative: f64,
    passed: bool,
}

impl Row {
    fn cells(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map_or(String::new(), num);
        vec![
            self.check.clone(),
            opt(self.beta),
            opt(self.t),
            opt(self.lambda),
            num(self.lhs),
            num(self.rhs),
            num(self.slack),
            num(self.relative),
            self.passed.to_string(),
        ]
    }
}

/// The worst test function of a Hardy-type report as a row; slack is `LHS - RHS`.
fn slack_row(check: &str, beta: f64, lambda: f64, r: &SlackReport) -> Row {
    let worst = r
        .entries
        .iter()
        .min_by(|a, b| {
            let rel = |e: &pullin_core::ineq::Slack| e.slack / e.lhs.max(1.0);
            rel(a).total_cmp(&rel(b))
        })
        .expect("at least one test function");
    Row {
        check: check.into(),
        beta: Some(beta),
        t: None,
        lambda: Some(lambda),
        lhs: worst.lhs,
        rhs: worst.rhs,
        slack: worst.slack,
        relative: worst.slack / worst.lhs.max(1.0),
        passed: r.passes(HARDY_TOL),
    }
}

fn point_rows(
    setup: &Setup,
    d: &Decomposition,
    psis: &[Field],
    lambda: f64,
    u: &Field,
    e: &EigenPair,
) -> Result<Vec<Row>, RunError> {
    let (g, v) = (&setup.grid, &setup.config.verify);
    let mut rows = Vec::new();
    let context = format!("verify at λ = {lambda}");
    for &beta in &v.beta {
        for &frac in &v.t_fractions {
            let t = frac * t_max(beta);
            let r =
                main_estimate_check(g, d, u, &e.phi, lambda, beta, t).map_err(failed(&context))?;
            let scale = r.lhs.max(r.rhs()).max(f64::MIN_POSITIVE);
            rows.push(Row {
                check: "main_estimate".into(),
                beta: Some(beta),
                t: Some(t),
                lambda: Some(lambda),
                lhs: r.lhs,
                rhs: r.rhs(),
                slack: r.slack,
                relative: r.slack / scale,
                passed: r.coefficient > 0.0 && r.inequality_holds(ESTIMATE_TOL),
            });
            rows.push(Row {
                check: "lambda_cap".into(),
                beta: Some(beta),
                t: Some(t),
                lambda: Some(lambda),
                lhs: r.lambda_sup,
                rhs: r.lambda_cap,
                slack: r.lambda_cap - r.lambda_sup,
                relative: r.lambda_cap - r.lambda_sup,
                passed: r.cap_holds(ESTIMATE_TOL),
            });
            let f = flux_orthogonality_check(g, d, u, t).map_err(failed(&context))?;
            rows.push(Row {
                check: "flux_identity".into(),
                beta: Some(beta),
                t: Some(t),
                lambda: Some(lambda),
                lhs: f.h_value.abs(),
                rhs: f.bound,
                slack: f.bound - f.h_value.abs(),
                relative: (f.bound - f.h_value.abs()) / f.bound,
                passed: f.passed,
            });
        }
    }
    if !v.energy_beta.is_empty() {
        let rho = linearization_potential(g, u, lambda).map_err(failed(&context))?;
        for &beta in &v.energy_beta {
            let r = energy_inequality_check(g, d, &e.phi, &rho, beta, psis)
                .map_err(failed(&context))?;
            rows.push(slack_row("energy", beta, lambda, &r));
            let probe = HardyProbe::new(g, d.alpha.clone(), e.phi.clone(), beta, psis.to_vec())
                .map_err(failed(&context))?;
            let r = hardy_check(g, &probe).map_err(failed(&context))?;
            rows.push(slack_row("hardy", beta, lambda, &r));
        }
    }
    Ok(rows)
}

fn run_verify(setup: &Setup, out: &mut Artifacts, threads: usize) -> Failures {
    let g = &setup.grid;
    let v = &setup.config.verify;
    let tol = setup.config.advection.decomposition_tol;
    let d = decomposition(setup)?;
    let mut rows: Vec<Row> = verify_decomposition(g, &d, &setup.c, tol)
        .map_err(failed("decomposition"))?
        .checks
        .iter()
        .map(|k| {
            // every decomposition check is an upper bound except positivity
            let slack = if k.name == "alpha_positive" {
                k.value - k.bound
            } else {
                k.bound - k.value
            };
            Row {
                check: format!("decomposition.{}", k.name),
                beta: None,
                t: None,
                lambda: None,
                lhs: k.value,
                rhs: k.bound,
                slack,
                relative: slack,
                passed: k.passed,
            }
        })
        .collect();
    let branch = trace(setup)?;
    let psis = random_test_functions(g, v.psi_count, v.seed).map_err(failed("verify"))?;
    let per_point = par_map(&branch.points, threads, |p| {
        let e = eigenpair(setup, &p.u, p.lambda)?;
        let rows = point_rows(setup, &d, &psis, p.lambda, &p.u, &e)?;
        Ok::<_, RunError>((e.k, rows))
    });
    let mut ks = Vec::with_capacity(per_point.len());
    let mut point_checks = Vec::new();
    for r in per_point {
        let (k, rs) = r?;
        ks.push(k);
        point_checks.extend(rs);
    }
    let semi = SemiStability::new(ks);
    let k0 = semi.ks[0];
    let floor = -1e-8 * k0.abs();
    for (i, (p, &k)) in branch.points.iter().zip(&semi.ks).enumerate() {
        rows.push(Row {
            check: "semi_stability".into(),
            beta: None,
            t: None,
            lambda: Some(p.lambda),
            lhs: k,
            rhs: floor,
            slack: k - floor,
            relative: (k - floor) / k0.abs(),
            passed: is_semi_stable(k, k0),
        });
        if i > 0 {
            let prev = semi.ks[i - 1];
            rows.push(Row {
                check: "k_monotone".into(),
                beta: None,
                t: None,
                lambda: Some(p.lambda),
                lhs: k,
                rhs: prev,
                slack: prev - k,
                relative: (prev - k) / k0.abs(),
                passed: k <= prev + MONOTONE_TOL,
            });
        }
    }
    let k_last = *semi.ks.last().expect("nonempty");
    rows.push(Row {
        check: "k_collapse".into(),
        beta: None,
        t: None,
        lambda: Some(branch.last().lambda),
        lhs: k_last,
        rhs: COLLAPSE_FRACTION * k0,
        slack: COLLAPSE_FRACTION * k0 - k_last,
        relative: (COLLAPSE_FRACTION * k0 - k_last) / k0.abs(),
        passed: semi.collapsed,
    });
    rows.extend(point_checks);

    let header = [
        "check",
        "beta",
        "t",
        "lambda",
        "lhs",
        "rhs",
        "slack",
        "relative_slack",
        "passed",
    ];
    let cells: Vec<Vec<String>> = rows.iter().map(Row::cells).collect();
    let dir = Path::new(&setup.config.output.directory);
    out.csv("verify.csv", &header, &cells).map_err(io(dir))?;

    let mut names: Vec<&str> = Vec::new();
    for r in &rows {
        if !names.contains(&r.check.as_str()) {
            names.push(&r.check);
        }
    }
    let mut summary = serde_json::Map::new();
    let mut failures = Vec::new();
    for name in names {
        let of: Vec<&Row> = rows.iter().filter(|r| r.check == name).collect();
        let bad = of.iter().filter(|r| !r.passed).count();
        let min = |f: fn(&Row) -> f64| of.iter().map(|r| f(r)).fold(f64::INFINITY, f64::min);
        summary.insert(
            name.into(),
            json!({
                "rows": of.len(),
                "failed": bad,
                "min_slack": jnum(min(|r| r.slack)),
                "min_relative_slack": jnum(min(|r| r.relative)),
                "passed": bad == 0,
            }),
        );
        if bad > 0 {
            failures.push(name.to_string());
        }
    }
    out.json(
        "summary.json",
        json!({
            "checks": summary,
            "passed": failures.is_empty(),
            "branch_points": branch.points.len(),
            "lambda_star": jnum(branch.lambda_star()),
            "psi_count": v.psi_count,
            "seed": v.seed,
        }),
    )
    .map_err(io(dir))?;
    Ok(failures)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_map_keeps_order() {
        let xs: Vec<u64> = (0..37).collect();
        for threads in [1, 2, 5, 64] {
            let ys = par_map(&xs, threads, |&x| x * x);
            assert_eq!(ys, xs.iter().map(|x| x * x).collect::<Vec<_>>());
        }
        assert!(par_map(&[] as &[u64], 4, |&x| x).is_empty());
    }

    #[test]
    fn semi_stability_flags() {
        let s = SemiStability::new(vec![10.0, 5.0, 0.1]);
        assert!(s.failures().is_empty());
        let s = SemiStability::new(vec![10.0, 11.0, 1.0]);
        assert_eq!(s.failures(), ["k_monotone", "k_collapse"]);
        let s = SemiStability::new(vec![10.0, 5.0, -1.0]);
        assert_eq!(s.failures(), ["semi_stability"]);
    }
}
