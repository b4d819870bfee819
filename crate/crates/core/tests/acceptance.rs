//! End-to-end acceptance suite. Runs without the libtest harness so the
//! criteria print in order, one line each.

use equimeasure::diagnostics::{
    approximation_convergence, ball_potential_decay, boundary_mass, convexity_and_radiality,
    el_residual, linfty_bound, sphere_annulus_ratio, ConvexitySettings, DiagnosticReport, Status,
};
use equimeasure::energy::{particle_energy, DiagonalRule, GramMatrix, Nodes};
use equimeasure::geometry::unit_ball_volume;
use equimeasure::kernels::RadialKernel;
use equimeasure::measures::{mollify, Measure, ParticleMeasure, RadialMeasure};
use equimeasure::solver::{
    away_step_descent, energy_gradient, minimize_on_nodes, radial_minimize, support_radius_bound,
    ConvexityHint, SimplexProblem, SolveReport, SolverSettings,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

// tolerances, pinned
const GROUND_RADIUS_REL: f64 = 0.05;
const GROUND_DENSITY_REL: f64 = 0.05;
const GROUND_ENERGY_REL: f64 = 0.01;
const GROUND_RUNTIME: Duration = Duration::from_secs(60);
const CUBE_ENERGY_SLACK: f64 = 1e-3;
const EL_GAP: f64 = 1e-8;
const EL_TOL: f64 = 1e-7;
const MASS_FLOOR: f64 = 1e-10;
const CUBE_RADIUS_TOL: f64 = 1e-3;
const HOMOGENEITY_REL: f64 = 1e-15;
const ANNULUS_QUAD_TOL: f64 = 1e-3;
const MOLLIFIER_REL: f64 = 1e-3;
const APPROX_REL: f64 = 0.01;
const DECAY_REL: f64 = 0.01;
const GRADIENT_REL: f64 = 1e-6;

type Outcome = Result<String, String>;

/// Label, problem, solver report and solved measure.
type Solved = (String, SimplexProblem<f64>, SolveReport<f64>, Measure<f64>);
fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

struct Ground {
    radii: Vec<f64>,
    report: SolveReport<f64>,
    rule: DiagonalRule<f64>,
    elapsed: Duration,
}

impl Ground {
    fn solve() -> Ground {
        let k = RadialKernel::power_sum(1.0, 2.0);
        let radii: Vec<f64> = (0..200).map(|i| 1.2 * i as f64 / 199.0).collect();
        let rule = Nodes::Radii {
            dim: 3,
            radii: radii.clone(),
        }
        .default_rule();
        let t = Instant::now();
        let report =
            radial_minimize(&k, 3, &radii, &SolverSettings::default()).expect("ground state solve");
        Ground {
            radii,
            report,
            rule,
            elapsed: t.elapsed(),
        }
    }

    fn measure(&self) -> Measure<f64> {
        RadialMeasure::new(3, self.radii.clone(), self.report.weights.clone())
            .expect("solver weights form a measure")
            .into()
    }
}

/// Uniform ball of radius `a` with `t^-1 + t^2`: the potential inside is
/// `(3 - r^2/a^2)/(2a) + r^2 + 3a^2/5`, constant iff `a^3 = 1/2`, and the
/// energy is `6/(5a) + 6a^2/5`.
fn ground_oracle() -> (f64, f64, f64) {
    let a = 0.5f64.cbrt();
    let density = 1.0 / (4.0 / 3.0 * PI * a.powi(3));
    let energy = 6.0 / (5.0 * a) + 1.2 * a * a;
    (a, density, energy)
}

fn criterion_1(g: &Ground) -> Outcome {
    let (a, dens, e) = ground_oracle();
    let w = &g.report.weights;
    let r = &g.radii;
    let dr = r[1] - r[0];
    let last = (0..w.len()).rfind(|&i| w[i] > MASS_FLOOR).unwrap_or(0);
    // shell i stands for rho(r_i) 4 pi r_i^2 dr of mass (node rule for the
    // radial integral); r = 0 carries no volume and the last two shells
    // straddle the edge of the support
    let interior: Vec<f64> = (1..last.saturating_sub(1))
        .map(|i| w[i] / (4.0 * PI * r[i] * r[i] * dr))
        .collect();
    let worst = interior.iter().fold(0.0f64, |m, &d| m.max(rel(d, dens)));
    // the same with midpoint cells, for reference
    let edge = |i: usize| if i == 0 { 0.0 } else { 0.5 * (r[i] + r[i - 1]) };
    let cell = |i: usize| 4.0 / 3.0 * PI * (edge(i + 1).powi(3) - edge(i).powi(3));
    let worst_cell =
        (1..last.saturating_sub(1)).fold(0.0f64, |m, i| m.max(rel(w[i] / cell(i), dens)));
    let inner_mass: f64 = w[..last.saturating_sub(1)].iter().sum();
    let bulk = inner_mass / (4.0 / 3.0 * PI * edge(last - 1).powi(3));
    let support = edge(last + 1);
    let ok = rel(support, a) <= GROUND_RADIUS_REL
        && worst <= GROUND_DENSITY_REL
        && rel(g.report.energy, e) <= GROUND_ENERGY_REL
        && g.elapsed <= GROUND_RUNTIME;
    check(
        ok,
        format!(
            "support {support:.4} (oracle {a:.4}), shell density worst rel {worst:.2e} (midpoint cells {worst_cell:.2e}), \
             bulk density {bulk:.4} (oracle {dens:.4}), energy {:.6} (oracle {e:.6}), {:?} {:.2?}",
            g.report.energy, g.report.stationarity, g.elapsed
        ),
    )
}

fn cube_problem() -> (SimplexProblem<f64>, Vec<Vec<f64>>) {
    let pts: Vec<Vec<f64>> = (0..41).map(|i| vec![-2.0 + 0.1 * i as f64]).collect();
    let gram = GramMatrix::build(
        &RadialKernel::piecewise_cube(),
        Nodes::Points {
            dim: 1,
            points: pts.clone(),
        },
        DiagonalRule::FiniteValue,
    )
    .expect("gram");
    (SimplexProblem::new(gram).expect("problem"), pts)
}

fn criterion_2() -> Outcome {
    let (problem, pts) = cube_problem();
    let start = problem.uniform_start();
    let rep = away_step_descent(&problem, &start, None, None, 5, 0).map_err(|e| e.to_string())?;
    let mut w = vec![0.0; 41];
    w[20] = 1.0;
    let dirac: Measure<f64> = ParticleMeasure::new(1, pts, w).expect("dirac").into();
    let el = el_residual(
        &RadialKernel::piecewise_cube(),
        &dirac,
        DiagonalRule::FiniteValue,
        0.0,
    )
    .map_err(|e| e.to_string())?;
    check(
        rep.energy <= 1.0 + CUBE_ENERGY_SLACK && el.passed,
        format!(
            "solver energy {:.6}, Dirac potential on support off by {:.1e}, off-support margin {:.1e}",
            rep.energy, el.residuals["on_support_max"], el.residuals["off_support_min"]
        ),
    )
}

/// Convex problems in the suite, as (label, kernel, nodes).
fn convex_suite() -> Vec<(&'static str, RadialKernel<f64>, Nodes<f64>)> {
    let line = |n: usize, a: f64| Nodes::Points {
        dim: 1,
        points: (0..n)
            .map(|i| vec![-a + 2.0 * a * i as f64 / (n - 1) as f64])
            .collect(),
    };
    let shells = |dim: usize, n: usize, a: f64| Nodes::Radii {
        dim,
        radii: (0..n).map(|i| a * i as f64 / (n - 1) as f64).collect(),
    };
    let plane = {
        let mut pts = Vec::new();
        for i in 0..11 {
            for j in 0..11 {
                pts.push(vec![-1.0 + 0.2 * i as f64, -1.0 + 0.2 * j as f64]);
            }
        }
        Nodes::Points {
            dim: 2,
            points: pts,
        }
    };
    vec![
        (
            "t^-0.5+t^2 N=1 line",
            RadialKernel::power_sum(0.5, 2.0),
            line(61, 1.5),
        ),
        (
            "t^-1+t^2 N=3 shells",
            RadialKernel::power_sum(1.0, 2.0),
            shells(3, 80, 1.2),
        ),
        (
            "t^-0.5+t^2 N=2 grid",
            RadialKernel::power_sum(0.5, 2.0),
            plane,
        ),
        (
            "t^-1+t^3 N=3 shells",
            RadialKernel::power_sum(1.0, 3.0),
            shells(3, 60, 1.5),
        ),
    ]
}

fn criterion_3(g: &Ground, suite: &[Solved]) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut checked = 0;
    let ground = (
        "ground state".to_string(),
        g.rule,
        g.report.fw_gap,
        g.measure(),
        RadialKernel::power_sum(1.0, 2.0),
    );
    let mut cases = vec![ground];
    for (label, p, rep, mu) in suite {
        if p.convexity_hint() == ConvexityHint::ConvexCertified {
            cases.push((
                label.clone(),
                p.gram().diagonal_rule(),
                rep.fw_gap,
                mu.clone(),
                kernel_of(label),
            ));
        }
    }
    for (label, rule, gap, mu, k) in cases {
        if gap > EL_GAP {
            ok = false;
            lines.push(format!("{label}: gap {gap:.1e} too large"));
            continue;
        }
        let el = el_residual(&k, &mu, rule, EL_TOL).map_err(|e| e.to_string())?;
        checked += 1;
        ok &= el.passed;
        lines.push(format!(
            "{label}: on {:.1e} off {:.1e}",
            el.residuals
                .get("on_support_max")
                .copied()
                .unwrap_or(f64::NAN),
            el.residuals
                .get("off_support_min")
                .copied()
                .unwrap_or(f64::NAN)
        ));
    }
    check(
        ok && checked >= 2,
        format!("{checked} solves; {}", lines.join("; ")),
    )
}

fn kernel_of(label: &str) -> RadialKernel<f64> {
    convex_suite()
        .into_iter()
        .find(|(l, _, _)| *l == label)
        .map(|(_, k, _)| k)
        .expect("known label")
}

/// `R = 4 T` with `1 + (T - 1)^3 = 24`, by bisection.
fn cube_radius_oracle() -> f64 {
    let (mut lo, mut hi) = (1.0f64, 10.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 1.0 + (mid - 1.0).powi(3) > 24.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    4.0 * hi
}

fn criterion_4(g: &Ground, suite: &[Solved]) -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    let mut cases: Vec<(String, RadialKernel<f64>, usize, Measure<f64>)> = vec![(
        "ground state".into(),
        RadialKernel::power_sum(1.0, 2.0),
        3,
        g.measure(),
    )];
    for (label, _, _, mu) in suite {
        cases.push((label.clone(), kernel_of(label), mu.dim(), mu.clone()));
    }
    for (label, k, dim, mu) in cases {
        let bound = support_radius_bound(&k, dim).map_err(|e| e.to_string())?;
        let reach = match &mu {
            Measure::Particle(p) => p
                .positions()
                .iter()
                .zip(p.weights())
                .filter(|(_, &w)| w > MASS_FLOOR)
                .map(|(x, _)| x.iter().map(|v| v * v).sum::<f64>().sqrt())
                .fold(0.0, f64::max),
            Measure::Radial(r) => r
                .radii()
                .iter()
                .zip(r.masses())
                .filter(|(_, &m)| m > MASS_FLOOR)
                .map(|(&x, _)| x)
                .fold(0.0, f64::max),
        };
        ok &= reach <= bound;
        lines.push(format!("{label}: reach {reach:.3} <= R {bound:.3}"));
    }
    let r_cube = support_radius_bound(&RadialKernel::<f64>::piecewise_cube(), 1)
        .map_err(|e| e.to_string())?;
    let oracle = cube_radius_oracle();
    ok &= (r_cube - oracle).abs() <= CUBE_RADIUS_TOL;
    lines.push(format!("piecewise cube R {r_cube:.4} (oracle {oracle:.4})"));
    check(ok, lines.join("; "))
}

fn criterion_5() -> Outcome {
    let k = RadialKernel::power_sum(0.5, 2.0);
    let nodes = || Nodes::Points {
        dim: 1,
        points: (0..31).map(|i| vec![-1.5 + 0.1 * i as f64]).collect(),
    };
    let gram = GramMatrix::build(&k, nodes(), nodes().default_rule()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let w: Vec<f64> = (0..31).map(|_| rng.random::<f64>()).collect();
    let e = gram.energy(&w);
    let mut worst = 0.0f64;
    for lambda in [0.5, 2.0] {
        let lw: Vec<f64> = w.iter().map(|x| lambda * x).collect();
        worst = worst.max(rel(gram.energy(&lw), lambda * lambda * e));
    }
    let settings = SolverSettings::default();
    let (_, base) = minimize_on_nodes(&k, nodes(), &settings).map_err(|e| e.to_string())?;
    let mut identical = true;
    for lambda in [0.5, 2.0] {
        let (_, s) = minimize_on_nodes(&k.clone().scaled(lambda), nodes(), &settings)
            .map_err(|e| e.to_string())?;
        identical &= s.weights == base.weights && s.iterations == base.iterations;
    }
    check(
        worst <= HOMOGENEITY_REL && identical,
        format!(
            "homogeneity defect {worst:.1e}, scaled kernels give identical weights: {identical}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let s = ConvexitySettings::default();
    let newton = convexity_and_radiality(&RadialKernel::power_sum(1.0, 2.0), 3, &s)
        .map_err(|e| e.to_string())?;
    let gauss =
        convexity_and_radiality(&RadialKernel::gaussian(1.0), 3, &s).map_err(|e| e.to_string())?;
    let cube = convexity_and_radiality(&RadialKernel::piecewise_cube(), 1, &s)
        .map_err(|e| e.to_string())?;
    let witness = cube.residuals.get("witness_defect").copied();
    let ok = newton.passed
        && gauss.passed
        && cube.status == Status::Inapplicable
        && witness.is_some_and(|d| d < 0.0);
    let fmt = |r: &DiagnosticReport<f64>| {
        format!(
            "midpoint min {:.2e}, rotation margin {:.2e}",
            r.residuals
                .get("midpoint_relative_min")
                .copied()
                .unwrap_or(f64::NAN),
            r.residuals
                .get("rotation_margin_min")
                .copied()
                .unwrap_or(f64::NAN)
        )
    };
    check(
        ok,
        format!(
            "t^-1+t^2: {}; Gaussian: {}; piecewise cube witness defect {:?}",
            fmt(&newton),
            fmt(&gauss),
            witness
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for n in [2usize, 3] {
        let rep =
            sphere_annulus_ratio(n, 1.0, 1e-2, 1e-4, 1e-6, 100.0).map_err(|e| e.to_string())?;
        ok &= rep.passed;
        let mut devs = Vec::new();
        for k in [10.0f64, 100.0, 1000.0] {
            let r = sphere_annulus_ratio(n, 1.0, 1.0 / k, 1.0 / (k * k), 1.0 / (k * k * k), k)
                .map_err(|e| e.to_string())?;
            devs.push((r.residuals["ratio"] - 1.0).abs());
        }
        ok &= devs.windows(2).all(|w| w[1] <= w[0] + ANNULUS_QUAD_TOL);
        lines.push(format!(
            "N={n}: ratio {:.5} at K=100, |ratio-1| {:.1e} {:.1e} {:.1e} for K=10,100,1000",
            rep.residuals["ratio"], devs[0], devs[1], devs[2]
        ));
    }
    check(ok, lines.join("; "))
}

fn criterion_8() -> Outcome {
    let mut ok = true;
    let mut worst = f64::NEG_INFINITY;
    for n in 1..=3usize {
        let origin = ParticleMeasure::dirac(vec![0.0; n]).expect("dirac");
        for rho in [0.5f64, 0.25, 0.125] {
            let d = mollify(&origin, rho, rho / 4.0).map_err(|e| e.to_string())?;
            let bound = 2.0 / (unit_ball_volume::<f64>(n) * rho.powi(n as i32));
            let excess = d.sup() / bound - 1.0;
            worst = worst.max(excess);
            ok &= excess <= MOLLIFIER_REL;
        }
    }
    check(ok, format!("largest sup / bound - 1 = {worst:.3e}"))
}

fn criterion_9() -> Outcome {
    let k = RadialKernel::power_sum(1.0, 2.0);
    let mu: Measure<f64> = RadialMeasure::sphere(3, 1.0).expect("sphere").into();
    let js = [4usize, 16, 64, 256];
    let rep = approximation_convergence(&k, &mu, 2.0, 0.1, &js, 1.0).map_err(|e| e.to_string())?;
    // oracle: Newtonian self-energy of the unit sphere is 1, the quadratic one 2
    let exact = 3.0;
    let e = rep.parameters["energy"];
    let errs: Vec<f64> = js
        .iter()
        .map(|j| (rep.residuals[&format!("energy_j{j}")] - exact).abs())
        .collect();
    let ok = rep.passed
        && (e - exact).abs() < 1e-12
        && errs[errs.len() - 1] / exact <= APPROX_REL
        && errs[1..].windows(2).all(|w| w[1] <= w[0]);
    check(
        ok,
        format!(
            "E(mu) = {e:.12}, |E(mu_j) - 3| = {}",
            errs.iter()
                .map(|x| format!("{x:.2e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn criterion_10(g: &Ground) -> Outcome {
    let k = RadialKernel::power_sum(1.0, 2.0);
    let mu = g.measure();
    let lin = linfty_bound(&k, 3, &mu, &[0.1, 0.05, 0.025]).map_err(|e| e.to_string())?;
    let mut w = vec![0.0; 41];
    w[20] = 1.0;
    let dirac: Measure<f64> =
        ParticleMeasure::new(1, (0..41).map(|i| vec![-2.0 + 0.1 * i as f64]).collect(), w)
            .expect("dirac")
            .into();
    let sing = linfty_bound(
        &RadialKernel::piecewise_cube(),
        1,
        &dirac,
        &[0.1, 0.05, 0.025],
    )
    .map_err(|e| e.to_string())?;
    let unbounded = sing.notes.iter().any(|n| n == "verdict: unbounded");
    let mut bm_ok = true;
    let mut margins = Vec::new();
    for rho in [0.02, 0.01] {
        let bm = boundary_mass(&k, 3, &mu, rho, 0.0).map_err(|e| e.to_string())?;
        bm_ok &= bm.passed;
        margins.push(bm.residuals.get("margin").copied().unwrap_or(f64::NAN));
    }
    check(
        lin.passed && unbounded && !sing.failed() && bm_ok,
        format!(
            "ground state sups {:.4} {:.4} {:.4} vs 2M {:.4e}; Dirac slope {:.2} ({:?}, unbounded: {unbounded}); \
             boundary margins {:.3e} {:.3e}",
            lin.residuals.get("sup_0").copied().unwrap_or(f64::NAN),
            lin.residuals.get("sup_1").copied().unwrap_or(f64::NAN),
            lin.residuals.get("sup_2").copied().unwrap_or(f64::NAN),
            2.0 * lin.parameters.get("M").copied().unwrap_or(f64::NAN),
            sing.residuals.get("blowup_slope").copied().unwrap_or(f64::NAN),
            sing.status,
            margins[0],
            margins[1]
        ),
    )
}

fn criterion_11() -> Outcome {
    let k = RadialKernel::power(-1.0);
    let zs = [0.01, 0.02, 0.03, 0.04, 0.05];
    let rep = ball_potential_decay(&k, 3, 1.0, &zs).map_err(|e| e.to_string())?;
    // uniform unit ball of density 1: psi(z) = 2 pi - (2 pi / 3) |z|^2
    let coef = 2.0 * PI / 3.0;
    let lo = rep.residuals["decay_coefficient_min"];
    let hi = rep.residuals["decay_coefficient_max"];
    let c = rep.parameters["c"];
    let ok = rep.passed
        && rel(lo, coef) <= DECAY_REL
        && rel(hi, coef) <= DECAY_REL
        && rel(c, 4.0 * PI / 9.0) < 1e-12;
    check(
        ok,
        format!("drop / |z|^2 in [{lo:.6}, {hi:.6}] (oracle {coef:.6}), c = {c:.6}"),
    )
}

fn criterion_12() -> Outcome {
    let k = RadialKernel::power_sum(1.0, 2.0);
    let rule = DiagonalRule::CellAverage(0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 20 {
        let pos: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mu = ParticleMeasure::new(3, pos.clone(), vec![0.2, 0.3, 0.5]).expect("measure");
        if mu.min_separation() < 0.2 {
            continue;
        }
        done += 1;
        let grad = energy_gradient(&k, &mu);
        let h = 1e-5;
        for i in 0..3 {
            for d in 0..3 {
                let shifted = |s: f64| {
                    let mut p = pos.clone();
                    p[i][d] += s;
                    particle_energy(
                        &k,
                        &ParticleMeasure::new(3, p, vec![0.2, 0.3, 0.5]).expect("measure"),
                        rule,
                    )
                };
                let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
                let scale = grad[i].iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
                worst = worst.max((fd - grad[i][d]).abs() / scale);
            }
        }
    }
    check(
        worst <= GRADIENT_REL,
        format!("worst relative deviation {worst:.2e} over 20 configurations"),
    )
}

fn main() {
    let ground = Ground::solve();
    let settings = SolverSettings::default();
    let suite: Vec<_> = convex_suite()
        .into_iter()
        .map(|(label, k, nodes)| {
            let (p, rep) = minimize_on_nodes(&k, nodes.clone(), &settings).expect("suite solve");
            let mu: Measure<f64> = match nodes {
                Nodes::Points { dim, points } => {
                    ParticleMeasure::new(dim, points, rep.weights.clone())
                        .expect("measure")
                        .into()
                }
                Nodes::Radii { dim, radii } => RadialMeasure::new(dim, radii, rep.weights.clone())
                    .expect("measure")
                    .into(),
            };
            (label.to_string(), p, rep, mu)
        })
        .collect();

    let results: Vec<(usize, &str, Outcome)> = vec![
        (1, "Newtonian+quadratic ground state", criterion_1(&ground)),
        (2, "piecewise-cube counterexample", criterion_2()),
        (3, "Euler-Lagrange suite", criterion_3(&ground, &suite)),
        (4, "support containment", criterion_4(&ground, &suite)),
        (5, "homogeneity and scale invariance", criterion_5()),
        (6, "positive definiteness", criterion_6()),
        (7, "sphere annulus ratio", criterion_7()),
        (8, "mollifier bound", criterion_8()),
        (9, "approximation convergence", criterion_9()),
        (10, "L-infinity machinery", criterion_10(&ground)),
        (11, "ball potential decay", criterion_11()),
        (12, "gradient check", criterion_12()),
    ];
    let mut failed = 0;
    for (n, name, out) in &results {
        match out {
            Ok(d) => println!("criterion {n:>2} PASS  {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {d}");
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
