use crate::config::{DiagnosticSpec, Extent, ProblemClass, RunConfig};
use equimeasure::diagnostics::{
    approximation_convergence, ball_potential_decay, boundary_mass, convexity_and_radiality,
    default_gap_tolerance, el_residual, linfty_bound, outward_probes, potential_continuity,
    sphere_annulus_ratio, support_convexity, ConvexitySettings, Status,
};
use equimeasure::energy::{potential, DiagonalRule, Nodes};
use equimeasure::kernels::{check_hypotheses, default_scan_grid, Singularity};
use equimeasure::measures::{
    read_particle_csv, read_radial_csv, write_measure_csv, Measure, ParticleMeasure, RadialMeasure,
};
use equimeasure::solver::{minimize_on_nodes, support_radius_bound, SolverSettings};
use equimeasure::{Error, Report};
use serde_json::{json, Value};
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

/// Margin applied to the support radius bound for `"auto"` extents.
const AUTO_EXTENT_FACTOR: f64 = 1.05;

/// Command outcome other than success, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Inapplicable(String),
    Diagnostic(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Inapplicable(_) => 2,
            Failure::Diagnostic(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Inapplicable(m) | Failure::Diagnostic(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Csv(_) => Failure::Config(e.to_string()),
            _ => Failure::Inapplicable(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

pub type Outcome = Result<(), Failure>;

/// Everything a command needs after the flags have been applied.
pub struct Run {
    pub config: RunConfig,
    /// Directory the config file lives in; relative measure paths resolve
    /// against it.
    pub base: PathBuf,
    pub out: PathBuf,
}

impl Run {
    fn dim(&self) -> usize {
        self.config.dimension
    }

    fn settings(&self) -> SolverSettings<f64> {
        let s = &self.config.solver;
        SolverSettings {
            tol: s.tol,
            max_iter: s.max_iter,
            restarts: s.restarts,
            seed: s.seed,
        }
    }

    fn out_file(&self, name: &str) -> Result<BufWriter<File>, Failure> {
        fs::create_dir_all(&self.out).map_err(|e| io_failure(&self.out, e))?;
        let path = self.out.join(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| io_failure(&path, e))
    }

    fn write_json(&self, name: &str, v: &Value) -> Outcome {
        let mut text =
            serde_json::to_string_pretty(v).map_err(|e| Failure::Config(e.to_string()))?;
        text.push('\n');
        fs::create_dir_all(&self.out).map_err(|e| io_failure(&self.out, e))?;
        let path = self.out.join(name);
        fs::write(&path, text).map_err(|e| io_failure(&path, e))
    }

    fn extent(&self) -> Result<f64, Failure> {
        match self.config.grid.extent {
            Extent::Fixed(e) => Ok(e),
            Extent::Named(_) => support_radius_bound(&self.config.kernel, self.dim())
                .map(|r| AUTO_EXTENT_FACTOR * r)
                .map_err(|e| Failure::Inapplicable(format!("\"auto\" extent unavailable: {e}"))),
        }
    }

    fn nodes(&self, extent: f64) -> Nodes<f64> {
        let n = self.config.grid.count;
        let dim = self.dim();
        let step = |lo: f64, i: usize| lo + (extent - lo) * i as f64 / (n - 1) as f64;
        match self.config.problem {
            ProblemClass::Radial => Nodes::Radii {
                dim,
                radii: (0..n).map(|i| step(0.0, i)).collect(),
            },
            ProblemClass::Particle => {
                let axis: Vec<f64> = (0..n).map(|i| step(-extent, i)).collect();
                let mut points = vec![Vec::new()];
                for _ in 0..dim {
                    points = points
                        .into_iter()
                        .flat_map(|p| {
                            axis.iter().map(move |&x| {
                                let mut q = p.clone();
                                q.push(x);
                                q
                            })
                        })
                        .collect();
                }
                Nodes::Points { dim, points }
            }
        }
    }
}

fn measure_on(nodes: &Nodes<f64>, weights: Vec<f64>) -> Result<Measure<f64>, Failure> {
    Ok(match nodes {
        Nodes::Points { dim, points } => {
            ParticleMeasure::new(*dim, points.clone(), weights)?.into()
        }
        Nodes::Radii { dim, radii } => RadialMeasure::new(*dim, radii.clone(), weights)?.into(),
    })
}

/// Mass below this is treated as solver residue rather than support.
const SUPPORT_MASS_FLOOR: f64 = 1e-10;

/// Largest distance from the origin carrying mass above the floor.
fn support_radius(mu: &Measure<f64>) -> f64 {
    let far = |pairs: &mut dyn Iterator<Item = (f64, f64)>| {
        pairs
            .filter(|&(_, w)| w > SUPPORT_MASS_FLOOR)
            .fold(0.0f64, |m, (r, _)| m.max(r))
    };
    match mu {
        Measure::Particle(p) => far(&mut p
            .positions()
            .iter()
            .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
            .zip(p.weights().iter().copied())),
        Measure::Radial(r) => far(&mut r.radii().iter().copied().zip(r.masses().iter().copied())),
    }
}

fn nodes_of(mu: &Measure<f64>) -> Nodes<f64> {
    match mu {
        Measure::Particle(p) => Nodes::Points {
            dim: p.dim(),
            points: p.positions().to_vec(),
        },
        Measure::Radial(r) => Nodes::Radii {
            dim: r.dim(),
            radii: r.radii().to_vec(),
        },
    }
}

fn query_points(nodes: &Nodes<f64>) -> Vec<Vec<f64>> {
    match nodes {
        Nodes::Points { points, .. } => points.clone(),
        Nodes::Radii { radii, .. } => radii.iter().map(|&r| vec![r]).collect(),
    }
}

fn to_value<S: serde::Serialize>(s: &S) -> Value {
    serde_json::to_value(s).expect("report types serialize")
}

pub fn kernel_report(run: &Run) -> Outcome {
    let kernel = &run.config.kernel;
    let dim = run.dim();
    let hyp = check_hypotheses(kernel, dim, &default_scan_grid())?;
    let mut warnings = Vec::new();
    if !hyp.l1loc_finite {
        warnings.push(format!(
            "kernel is not locally integrable in dimension {dim}: every measure with a diffuse part has infinite energy"
        ));
    }
    if !hyp.h_satisfied {
        warnings.push("structural hypothesis fails on the scanned range".to_string());
    }
    let bound = match support_radius_bound(kernel, dim) {
        Ok(r) => Some(r),
        Err(e) => {
            warnings.push(format!("no support radius bound: {e}"));
            None
        }
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let doc = json!({
        "kernel": to_value(kernel),
        "hypotheses": to_value(&hyp),
        "pd_certificate": to_value(&hyp.pd_certificate),
        "support_radius_bound": bound,
        "warnings": warnings,
    });
    run.write_json("hypothesis_report.json", &doc)
}

struct Solved {
    nodes: Nodes<f64>,
    rule: DiagonalRule<f64>,
    measure: Measure<f64>,
    extent: f64,
    report: Value,
}

fn solve(run: &Run) -> Result<Solved, Failure> {
    let extent = run.extent()?;
    let nodes = run.nodes(extent);
    let rule = nodes.default_rule();
    let (problem, rep) = minimize_on_nodes(&run.config.kernel, nodes.clone(), &run.settings())?;
    let measure = measure_on(&nodes, rep.weights.clone())?;
    let mut report = to_value(&rep);
    let obj = report
        .as_object_mut()
        .expect("struct serializes to an object");
    obj.insert("convexity_hint".into(), to_value(&problem.convexity_hint()));
    obj.insert(
        "min_projected_eigenvalue".into(),
        to_value(&problem.min_projected_eigenvalue()),
    );
    obj.insert("diagonal_rule".into(), to_value(&rule));
    obj.insert("extent".into(), json!(extent));
    obj.insert("node_count".into(), json!(nodes.len()));
    obj.insert("dimension".into(), json!(run.dim()));
    obj.insert("problem".into(), json!(problem_name(run.config.problem)));
    obj.insert("seed".into(), json!(run.config.solver.seed));
    Ok(Solved {
        nodes,
        rule,
        measure,
        extent,
        report,
    })
}

fn problem_name(p: ProblemClass) -> &'static str {
    match p {
        ProblemClass::Radial => "radial",
        ProblemClass::Particle => "particle",
    }
}

pub fn minimize(run: &Run) -> Outcome {
    let s = solve(run)?;
    write_measure_csv(&s.measure, run.out_file("solution.csv")?)?;
    let psi = potential(
        &run.config.kernel,
        &s.measure,
        &query_points(&s.nodes),
        s.rule,
    )?;
    psi.write_csv(
        run.out_file("potential.csv")?,
        run.config.problem == ProblemClass::Radial,
    )?;
    run.write_json("report.json", &s.report)
}

/// Measure under test: the configured CSV, or a fresh solve.
fn verify_measure(run: &Run) -> Result<(Measure<f64>, Value), Failure> {
    match &run.config.measure {
        Some(p) => {
            let path = if p.is_absolute() {
                p.clone()
            } else {
                run.base.join(p)
            };
            let f = File::open(&path).map_err(|e| io_failure(&path, e))?;
            let mu: Measure<f64> = match run.config.problem {
                ProblemClass::Particle => read_particle_csv(f)?.into(),
                ProblemClass::Radial => read_radial_csv(f, run.dim())?.into(),
            };
            if mu.dim() != run.dim() {
                return Err(Failure::Config(format!(
                    "measure has dimension {}, config says {}",
                    mu.dim(),
                    run.dim()
                )));
            }
            Ok((mu, json!({ "kind": "csv", "path": p })))
        }
        None => {
            let s = solve(run)?;
            let src = json!({ "kind": "inline_solve", "extent": s.extent, "solve": s.report });
            Ok((s.measure, src))
        }
    }
}

fn default_suite(dim: usize) -> Vec<DiagnosticSpec> {
    let mut v: Vec<DiagnosticSpec> = [
        "el_residual",
        "support_convexity",
        "linfty_bound",
        "boundary_mass",
        "ball_potential_decay",
        "potential_continuity",
        "convexity_and_radiality",
        "approximation_convergence",
    ]
    .iter()
    .map(|n| serde_json::from_value(json!({ "name": n })).expect("known diagnostic"))
    .collect();
    if dim >= 2 {
        v.push(serde_json::from_value(json!({ "name": "sphere_annulus_ratio" })).expect("known"));
    }
    v
}

/// A check whose preconditions do not hold is recorded, not failed.
fn recorded(name: &str, r: equimeasure::Result<Report>) -> Result<Report, Failure> {
    match r {
        Ok(rep) => Ok(rep),
        Err(
            e @ (Error::Precondition(_)
            | Error::NotConfining { .. }
            | Error::ScheduleNoRoot { .. }
            | Error::GridTooCoarse { .. }),
        ) => Ok(Report::new(name).inapplicable(e.to_string())),
        Err(e) => Err(e.into()),
    }
}

fn run_check(run: &Run, mu: &Measure<f64>, spec: &DiagnosticSpec) -> Result<Vec<Report>, Failure> {
    let k = &run.config.kernel;
    let dim = run.dim();
    let one = |name: &str, r| recorded(name, r).map(|x| vec![x]);
    match spec {
        DiagnosticSpec::ElResidual { tol } => {
            let rule = nodes_of(mu).default_rule();
            one("el_residual", el_residual(k, mu, rule, *tol))
        }
        DiagnosticSpec::SupportConvexity { gap_tolerance } => {
            let tol = gap_tolerance.unwrap_or_else(|| default_gap_tolerance(mu));
            Ok(vec![support_convexity(mu, tol)])
        }
        DiagnosticSpec::LinftyBound { rho } => one("linfty_bound", linfty_bound(k, dim, mu, rho)),
        DiagnosticSpec::BoundaryMass { rho, tol } => rho
            .iter()
            .map(|&r| recorded("boundary_mass", boundary_mass(k, dim, mu, r, *tol)))
            .collect(),
        DiagnosticSpec::BallPotentialDecay { r_tilde, z } => {
            // half of r_star keeps the probes r + |z| inside the monotone range
            let r = match r_tilde {
                Some(r) => *r,
                None => {
                    let half = 0.5 * check_hypotheses(k, dim, &default_scan_grid())?.r_star;
                    match support_radius(mu) {
                        sr if sr > 0.0 => half.min(0.25 * sr),
                        _ => half,
                    }
                }
            };
            let zs = z
                .clone()
                .unwrap_or_else(|| (1..=5).map(|i| r * 0.02 * i as f64).collect());
            one("ball_potential_decay", ball_potential_decay(k, dim, r, &zs))
        }
        DiagnosticSpec::PotentialContinuity { probes } => {
            let rule = nodes_of(mu).default_rule();
            let pairs = outward_probes(mu, *probes);
            let mut rep = recorded(
                "potential_continuity",
                potential_continuity(k, mu, rule, &pairs),
            )?;
            if pairs.is_empty() && rep.status != Status::Inapplicable {
                rep = Report::new("potential_continuity")
                    .inapplicable("outward probes need a 1D or radial measure");
            }
            Ok(vec![rep])
        }
        DiagnosticSpec::ConvexityAndRadiality {
            trials,
            max_atoms,
            extent,
            radial_extent,
        } => {
            let settings = ConvexitySettings {
                trials: *trials,
                max_atoms: *max_atoms,
                extent: *extent,
                seed: run.config.solver.seed,
                radial_extent: *radial_extent,
            };
            one(
                "convexity_and_radiality",
                convexity_and_radiality(k, dim, &settings),
            )
        }
        DiagnosticSpec::ApproximationConvergence { alpha, eps, j, r } => {
            let a = alpha.unwrap_or_else(|| {
                let s = match k.singularity() {
                    Singularity::Power(a) => a.max(0.0),
                    Singularity::Log | Singularity::Bounded => 0.0,
                };
                (s + dim as f64) / 2.0
            });
            one(
                "approximation_convergence",
                approximation_convergence(k, mu, a, *eps, j, *r),
            )
        }
        DiagnosticSpec::SphereAnnulusRatio {
            r,
            d,
            eta,
            delta,
            hierarchy,
        } => one(
            "sphere_annulus_ratio",
            sphere_annulus_ratio(dim, *r, *d, *eta, *delta, *hierarchy),
        ),
    }
}

pub fn verify(run: &Run) -> Outcome {
    let (mu, source) = verify_measure(run)?;
    let specs = if run.config.diagnostics.is_empty() {
        default_suite(run.dim())
    } else {
        run.config.diagnostics.clone()
    };
    let mut checks = Vec::new();
    for spec in &specs {
        checks.extend(run_check(run, &mu, spec)?);
    }
    let count = |s: Status| checks.iter().filter(|c| c.status == s).count();
    let (passed, failed, inapplicable) = (
        count(Status::Pass),
        count(Status::Fail),
        count(Status::Inapplicable),
    );
    let doc = json!({
        "kernel": to_value(&run.config.kernel),
        "dimension": run.dim(),
        "problem": problem_name(run.config.problem),
        "source": source,
        "checks": to_value(&checks),
        "summary": {
            "passed": passed,
            "failed": failed,
            "inapplicable": inapplicable,
            "all_applicable_passed": failed == 0,
        },
    });
    run.write_json("manifest.json", &doc)?;
    for c in &checks {
        let tag = match c.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Inapplicable => "n/a ",
        };
        println!("{tag}  {}", c.name);
    }
    if failed > 0 {
        let names: Vec<&str> = checks
            .iter()
            .filter(|c| c.status == Status::Fail)
            .map(|c| c.name.as_str())
            .collect();
        return Err(Failure::Diagnostic(format!(
            "failed checks: {}",
            names.join(", ")
        )));
    }
    Ok(())
}
