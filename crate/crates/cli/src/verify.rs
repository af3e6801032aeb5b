use serde::Serialize;
use thickscape::dynamics::{iterate_orbits, random_seeds, LyapunovSense};
use thickscape::linearization::RADII;
use thickscape::morse::TopologyAudit;
use thickscape::verification::{identity_check, jet_cross_check, radial_differential_check};
use thickscape::{
    admissibility_audit, analyze, cycle_audit, descent_audit, local_estimates, monotonicity_audit, operator_a, topology_audit,
    ReturnMapSystem, Scenario,
};

use crate::{run_err, topology_status, CliError};

const CROSS_CHECK_POINTS: usize = 200;
const CROSS_CHECK_RNG: u64 = 0x7e57;
const CATALOG_MATCH: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub measured: Option<f64>,
    /// Comparison and bound, e.g. "<= 1e-8".
    pub requirement: String,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyMatrix {
    pub checks: Vec<Check>,
    pub failed: usize,
    pub pass: bool,
}

fn at_most(name: &'static str, measured: f64, bound: f64) -> Check {
    Check {
        name,
        measured: Some(measured),
        requirement: format!("<= {bound:e}"),
        status: if measured <= bound { CheckStatus::Pass } else { CheckStatus::Fail },
        note: None,
    }
}

fn at_least(name: &'static str, measured: f64, bound: f64) -> Check {
    Check {
        name,
        measured: Some(measured),
        requirement: format!(">= {bound}"),
        status: if measured >= bound { CheckStatus::Pass } else { CheckStatus::Fail },
        note: None,
    }
}

fn skipped(name: &'static str, note: impl Into<String>) -> Check {
    Check { name, measured: None, requirement: String::new(), status: CheckStatus::Skipped, note: Some(note.into()) }
}

fn with_note(mut c: Check, note: impl Into<String>) -> Check {
    c.note = Some(note.into());
    c
}

/// Runs the property suites on a scenario and collects a pass/fail matrix.
pub fn verify(scenario: &Scenario, sys: &ReturnMapSystem) -> Result<VerifyMatrix, CliError> {
    let tol = &scenario.tolerances;
    let mut checks = Vec::new();

    let adm = admissibility_audit(sys, None);
    checks.push(Check {
        name: "admissibility",
        measured: Some((adm.fold_count + adm.oc_failure_count) as f64),
        requirement: "audit pass".into(),
        status: if adm.pass { CheckStatus::Pass } else { CheckStatus::Fail },
        note: None,
    });

    let points = random_seeds(&sys.core, CROSS_CHECK_POINTS, CROSS_CHECK_RNG).map_err(run_err("sampling"))?;
    let jets = jet_cross_check(sys, &points).map_err(run_err("derivative cross-check"))?;
    checks.push(at_most("gradient_cross_check", jets.max_gradient_error, 1e-6));
    checks.push(at_most("hessian_cross_check", jets.max_hessian_error, 1e-6));
    let radial = radial_differential_check(sys, &points, 1e-4).map_err(run_err("radial differential check"))?;
    checks.push(at_most("radial_differential", radial, 1e-6));

    let (_, catalog) = analyze(sys).map_err(run_err("equilibrium search"))?;
    if catalog.continuum {
        let bound = if scenario.dimension == 2 { 1e-9 } else { 1e-7 };
        let samples = sys.core.sample(if scenario.dimension == 2 { 360 } else { 500 });
        let id = identity_check(sys, &samples, 10).map_err(run_err("identity check"))?;
        checks.push(at_most("identity_map", id.max_displacement, bound));
        checks.push(at_most("identity_jacobian", id.max_jacobian_deviation, 1e-7));
    } else {
        checks.push(skipped("identity_map", "thickness is not constant"));
    }
    let fixed = catalog.records.iter().map(|r| r.fixed_point_residual).fold(0.0, f64::max);
    if catalog.records.is_empty() {
        checks.push(skipped("equilibria_fixed", "no equilibria located"));
    } else {
        checks.push(at_most("equilibria_fixed", fixed, 1e-8));
    }

    let topo = topology_audit(&catalog.records, &scenario.topology());
    match &topo {
        TopologyAudit::Checked(r) => {
            checks.push(at_least("morse_inequality", r.critical_points as f64, r.betti_sum as f64));
            let mut euler = at_most("euler_balance", (r.index_sum - r.euler_characteristic).abs() as f64, 0.0);
            euler.requirement = format!("index sum == {}", r.euler_characteristic);
            checks.push(euler);
        }
        TopologyAudit::NotApplicable { reason } => checks.push(skipped("topology", format!("{}: {reason}", topology_status(&topo)))),
    }

    let seeds = scenario.seed_points().map_err(CliError::Scenario)?;
    let traces = iterate_orbits(sys, &seeds, &scenario.orbit_params()).map_err(run_err("orbit"))?;
    let violations: usize = traces.iter().map(|t| descent_audit(t, tol.slack, tol.tol_grad).violations.len()).sum();
    checks.push(at_most("descent_violations", violations as f64, 0.0));
    let against: usize = traces
        .iter()
        .map(|t| monotonicity_audit(t, tol.slack, tol.tol_grad, LyapunovSense::Increasing).violations.len())
        .sum();
    checks.push(with_note(
        at_most("ascent_violations", against as f64, 0.0),
        "steps where d decreases by more than the slack",
    ));
    let converged: Vec<_> = traces.iter().filter(|t| t.converged()).collect();
    checks.push(at_least("convergence_rate", converged.len() as f64 / traces.len() as f64, 0.99));
    if catalog.continuum {
        checks.push(skipped("limits_cataloged", "continuum of fixed points"));
    } else {
        let matched = converged
            .iter()
            .filter(|t| {
                let p = t.limit_point.as_ref().expect("converged orbits have limits");
                catalog.records.iter().any(|r| {
                    r.point.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() <= CATALOG_MATCH
                })
            })
            .count();
        checks.push(at_least("limits_cataloged", matched as f64 / converged.len().max(1) as f64, 1.0));
    }
    let cycles = cycle_audit(&traces, scenario.orbit.cycle_dist_tol);
    checks.push(at_most("cycles", cycles.cycles.len() as f64, 0.0));

    let mut residual: f64 = 0.0;
    let mut halving = f64::INFINITY;
    let mut linearized = 0;
    for rec in catalog.records.iter().filter(|r| !r.degenerate) {
        let lin = operator_a(sys, rec).map_err(run_err("linearization"))?;
        residual = residual.max(lin.consistency_residual);
        let est = local_estimates(sys, &lin, &RADII).map_err(run_err("local estimates"))?;
        halving = est.halving_factors.iter().copied().fold(halving, f64::min);
        linearized += 1;
    }
    if linearized == 0 {
        checks.push(skipped("linearization_consistency", "no nondegenerate equilibria"));
        checks.push(skipped("remainder_halving", "no nondegenerate equilibria"));
    } else {
        checks.push(at_most("linearization_consistency", residual, 1e-8));
        checks.push(at_least("remainder_halving", halving, 2.0));
    }

    let failed = checks.iter().filter(|c| c.status == CheckStatus::Fail).count();
    Ok(VerifyMatrix { checks, failed, pass: failed == 0 })
}
