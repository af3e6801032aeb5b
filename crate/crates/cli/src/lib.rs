//! Command dispatch and artifact emission for the `thickscape` binary.

mod verify;

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;
use thickscape::dynamics::{iterate_orbits, LyapunovSense};
use thickscape::linearization::RADII;
use thickscape::morse::TopologyAudit;
use thickscape::{
    admissibility_audit, analyze, basin_scan, cycle_audit, curvature_gap_spectrum, local_estimates,
    monotonicity_audit, normal_form_frame, operator_a, topology_audit, Convention, Scenario, SeedSpec,
};

pub use verify::{verify, Check, CheckStatus, VerifyMatrix};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Audit,
    Analyze,
    Orbit,
    Basins,
    Linearize,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Audit => "audit",
            Command::Analyze => "analyze",
            Command::Orbit => "orbit",
            Command::Basins => "basins",
            Command::Linearize => "linearize",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Scenario(thickscape::Error),
    #[error("{context}: {source}")]
    Run { context: String, source: thickscape::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Scenario(_) => 2,
            CliError::Run { .. } | CliError::Io { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seeds: Option<usize>,
    pub rng_seed: Option<u64>,
    pub convention: Convention,
}

/// A named file to be written into the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub file_name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub artifacts: Vec<Artifact>,
    /// Set by `verify`.
    pub passed: Option<bool>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    scenario: &'a str,
    scenario_hash: String,
    command: &'static str,
    kind: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    convention: Option<Convention>,
    report: T,
}

struct Ctx<'a> {
    scenario: &'a Scenario,
    hash: String,
    command: Command,
    convention: Option<Convention>,
    artifacts: Vec<Artifact>,
}

impl Ctx<'_> {
    fn file(&self, kind: &str, ext: &str) -> String {
        format!("{}.{}.{}.{}", self.scenario.name, self.command.name(), kind, ext)
    }

    fn json<T: Serialize>(&mut self, kind: &str, report: T) {
        let env = Envelope {
            tool: "thickscape",
            version: VERSION,
            scenario: &self.scenario.name,
            scenario_hash: self.hash.clone(),
            command: self.command.name(),
            kind,
            convention: self.convention,
            report,
        };
        let mut contents = serde_json::to_string_pretty(&env).expect("reports serialize");
        contents.push('\n');
        let file_name = self.file(kind, "json");
        self.artifacts.push(Artifact { file_name, contents });
    }

    fn csv(&mut self, kind: &str, header: &[String], rows: Vec<Vec<String>>) {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        for r in rows {
            w.write_record(&r).expect("in-memory write");
        }
        let contents = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
        let file_name = self.file(kind, "csv");
        self.artifacts.push(Artifact { file_name, contents });
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn param_names(dimension: usize) -> Vec<String> {
    if dimension == 2 {
        vec!["theta".into()]
    } else {
        vec!["colatitude".into(), "longitude".into()]
    }
}

fn coord_names(dimension: usize) -> Vec<String> {
    ["x", "y", "z"][..dimension].iter().map(|s| s.to_string()).collect()
}

/// Applies `--seeds` and `--rng-seed` to the scenario's seed specification.
pub fn apply_overrides(scenario: &mut Scenario, opts: &RunOptions) {
    let current = match &scenario.seeds {
        SeedSpec::Uniform(n) | SeedSpec::Random { count: n, .. } => *n,
        SeedSpec::Explicit(list) => list.len(),
    };
    let count = opts.seeds.unwrap_or(current);
    scenario.seeds = match (&scenario.seeds, opts.rng_seed) {
        (_, Some(rng_seed)) => SeedSpec::Random { count, rng_seed },
        (SeedSpec::Random { rng_seed, .. }, None) => SeedSpec::Random { count, rng_seed: *rng_seed },
        (SeedSpec::Explicit(list), None) if opts.seeds.is_none() => SeedSpec::Explicit(list.clone()),
        _ => SeedSpec::Uniform(count),
    };
}

fn run_err(context: &str) -> impl FnOnce(thickscape::Error) -> CliError + '_ {
    move |source| CliError::Run { context: context.to_string(), source }
}

/// Runs one command on a scenario and returns its artifacts.
pub fn run_command(scenario: &Scenario, command: Command, opts: &RunOptions) -> Result<Bundle, CliError> {
    let mut scenario = scenario.clone();
    apply_overrides(&mut scenario, opts);
    if let (Command::Orbit | Command::Basins | Command::Verify, 0) = (command, scenario.orbit.max_steps) {
        return Err(CliError::Usage("orbit.max_steps must be at least 1".into()));
    }
    let sys = scenario.system().map_err(CliError::Scenario)?;
    let mut ctx = Ctx {
        hash: scenario.hash(),
        scenario: &scenario,
        command,
        convention: (command == Command::Linearize).then_some(opts.convention),
        artifacts: Vec::new(),
    };
    let dim = scenario.dimension;
    let mut passed = None;
    match command {
        Command::Audit => {
            let report = admissibility_audit(&sys, None);
            ctx.json("admissibility", report);
        }
        Command::Analyze => {
            let (scan, catalog) = analyze(&sys).map_err(run_err("equilibrium search"))?;
            let topo = topology_audit(&catalog.records, &scenario.topology());
            let mut header = vec!["id".to_string()];
            header.extend(param_names(dim));
            header.extend(coord_names(dim));
            header.extend(["d", "grad_norm", "index", "degenerate", "fixed_point_residual"].map(String::from));
            let rows = catalog
                .records
                .iter()
                .map(|r| {
                    let mut row = vec![r.id.to_string()];
                    row.extend(r.params.iter().chain(&r.point).map(|&x| num(x)));
                    row.extend([num(r.d), num(r.grad_norm), r.index.to_string(), r.degenerate.to_string(), num(r.fixed_point_residual)]);
                    row
                })
                .collect();
            ctx.json("catalog", serde_json::json!({ "scan": { "grid_size": scan.grid_size, "candidates": scan.candidates, "warnings": scan.warnings }, "catalog": catalog }));
            ctx.json("topology", topo);
            ctx.csv("equilibria", &header, rows);
        }
        Command::Orbit => {
            let seeds = scenario.seed_points().map_err(CliError::Scenario)?;
            let traces = iterate_orbits(&sys, &seeds, &scenario.orbit_params()).map_err(run_err("orbit"))?;
            let mut header = vec!["step".to_string()];
            header.extend(param_names(dim));
            header.extend(coord_names(dim));
            header.extend(["d", "v", "grad_norm", "disp"].map(String::from));
            for (k, t) in traces.iter().enumerate() {
                let rows = t
                    .records
                    .iter()
                    .map(|r| {
                        let mut row = vec![r.step.to_string()];
                        row.extend(r.params.iter().chain(&r.point).map(|&x| num(x)));
                        row.extend([num(r.d), num(r.lyapunov), num(r.grad_norm), r.disp.map(num).unwrap_or_default()]);
                        row
                    })
                    .collect();
                ctx.csv(&format!("trace-{k:04}"), &header, rows);
            }
            let tol = &scenario.tolerances;
            let orbits: Vec<serde_json::Value> = traces
                .iter()
                .enumerate()
                .map(|(k, t)| {
                    serde_json::json!({
                        "trace": k,
                        "seed": t.seed,
                        "status": t.status,
                        "steps": t.steps(),
                        "limit": t.limit_params,
                        "descent": monotonicity_audit(t, tol.slack, tol.tol_grad, LyapunovSense::Decreasing),
                        "ascent": monotonicity_audit(t, tol.slack, tol.tol_grad, LyapunovSense::Increasing),
                    })
                })
                .collect();
            let cycles = cycle_audit(&traces, scenario.orbit.cycle_dist_tol);
            ctx.json("audit", serde_json::json!({ "orbits": orbits, "cycles": cycles }));
        }
        Command::Basins => {
            let seeds = scenario.seed_points().map_err(CliError::Scenario)?;
            let (_, catalog) = analyze(&sys).map_err(run_err("equilibrium search"))?;
            let scan = basin_scan(&sys, &seeds, &scenario.orbit_params(), &catalog, scenario.orbit.generic_basin)
                .map_err(run_err("basin scan"))?;
            let mut header = vec!["seed".to_string()];
            header.extend(param_names(dim));
            header.extend(["limit", "steps", "status"].map(String::from));
            let rows = scan
                .samples
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let mut row = vec![k.to_string()];
                    row.extend(s.seed.iter().map(|&x| num(x)));
                    row.push(s.limit.map(|l| l.to_string()).unwrap_or_default());
                    row.push(s.steps.to_string());
                    row.push(match &s.status {
                        thickscape::dynamics::OrbitStatus::Converged => "converged".into(),
                        thickscape::dynamics::OrbitStatus::MaxSteps => "max_steps".into(),
                        thickscape::dynamics::OrbitStatus::Error(_) => "error".into(),
                    });
                    row
                })
                .collect();
            ctx.json("summary", &scan.summary);
            ctx.csv("samples", &header, rows);
        }
        Command::Linearize => {
            let (_, catalog) = analyze(&sys).map_err(run_err("equilibrium search"))?;
            let mut reports = Vec::new();
            let mut spectra = Vec::new();
            for rec in &catalog.records {
                let lin = match operator_a(&sys, rec) {
                    Ok(r) => r,
                    Err(e) => {
                        reports.push(serde_json::json!({ "equilibrium": rec.id, "params": rec.params, "skipped": e.to_string() }));
                        continue;
                    }
                };
                let estimates = local_estimates(&sys, &lin, &RADII).map_err(run_err("local estimates"))?;
                let normal_form = normal_form_frame(&lin).map_err(run_err("normal form"))?;
                let gaps = match curvature_gap_spectrum(&sys, &lin, opts.convention) {
                    Ok(g) => serde_json::to_value(g).expect("serializes"),
                    Err(e) => serde_json::json!({ "not_applicable": e.to_string() }),
                };
                for (which, eigs) in [("df", &lin.df_eigenvalues), ("a", &lin.a_eigenvalues), ("a_hess", &lin.step_eigenvalues)] {
                    for e in eigs {
                        spectra.push(vec![rec.id.to_string(), rec.index.to_string(), which.to_string(), num(e.re), num(e.im)]);
                    }
                }
                for h in &lin.hessian_eigenvalues {
                    spectra.push(vec![rec.id.to_string(), rec.index.to_string(), "hessian".into(), num(*h), "0".into()]);
                }
                reports.push(serde_json::json!({
                    "equilibrium": rec.id,
                    "linearization": lin,
                    "local_estimates": estimates,
                    "normal_form": normal_form,
                    "curvature_gap": gaps,
                }));
            }
            ctx.json("reports", reports);
            let header = ["equilibrium", "index", "spectrum", "re", "im"].map(String::from);
            ctx.csv("spectra", &header, spectra);
        }
        Command::Verify => {
            let matrix = verify(&scenario, &sys)?;
            passed = Some(matrix.pass);
            ctx.json("matrix", &matrix);
        }
    }
    Ok(Bundle { artifacts: ctx.artifacts, passed })
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    thickscape::parse_scenario(&text).map_err(CliError::Scenario)
}

/// Writes every artifact of a bundle into `out_dir`, creating it if needed.
pub fn emit_outputs(bundle: &Bundle, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out_dir).map_err(|source| CliError::Io { path: out_dir.to_path_buf(), source })?;
    bundle
        .artifacts
        .iter()
        .map(|a| {
            let path = out_dir.join(&a.file_name);
            fs::write(&path, &a.contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
            Ok(path)
        })
        .collect()
}

/// Caps the global worker pool at THICKSCAPE_THREADS when set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("THICKSCAPE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Usage(format!("THICKSCAPE_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))
}

/// One-word status of a topology audit.
pub fn topology_status(audit: &TopologyAudit) -> &'static str {
    match audit {
        TopologyAudit::Checked(r) if r.pass => "pass",
        TopologyAudit::Checked(_) => "fail",
        TopologyAudit::NotApplicable { .. } => "not_applicable",
    }
}
