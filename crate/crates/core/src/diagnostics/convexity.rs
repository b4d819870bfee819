use super::rotation::smoothed_rotation_energies;
use super::DiagnosticReport;
use crate::energy::{
    cross_energy, particle_energy, radial_energy, DiagonalRule, GramMatrix, Nodes,
};
use crate::error::Result;
use crate::kernels::{pd_certificate, repulsive_part, PdCertificate, RadialKernel};
use crate::linalg::sum_zero_min_eigen;
use crate::measures::{rotation_average, Measure, ParticleMeasure};
use crate::real::{c, Real};
use crate::solver::{away_step_descent, minimize_on_nodes, SimplexProblem, SolverSettings};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PD_NODE_BUDGET: usize = 8;
const MIDPOINT_REL_TOL: f64 = 1e-12;
const WITNESS_NODES: usize = 41;
const RADIAL_NODES: usize = 12;
/// Slack for the smoothed rotation energies. Each pair term comes from
/// nested quadrature good to about 1e-8 relative; the energies sum many.
const ROTATION_QUADRATURE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexitySettings<T> {
    pub trials: usize,
    /// Atoms per random measure are drawn from `1..=max_atoms`.
    pub max_atoms: usize,
    /// Atoms are drawn uniformly from `[-extent, extent]^N`.
    pub extent: T,
    pub seed: u64,
    /// Half-width of the grid for the radial-versus-particle optimum check
    /// (one-dimensional only); `None` skips it.
    pub radial_extent: Option<T>,
}

impl<T: Real> Default for ConvexitySettings<T> {
    fn default() -> Self {
        ConvexitySettings {
            trials: 50,
            max_atoms: 6,
            extent: T::one(),
            seed: 0,
            radial_extent: None,
        }
    }
}

/// Diagonal rule shared by all energies of a comparison: the kernel value
/// at zero when finite, else the cell average over half the minimal
/// separation of all atoms involved.
fn shared_rule<T: Real>(
    kernel: &RadialKernel<T>,
    measures: &[&ParticleMeasure<T>],
) -> DiagonalRule<T> {
    if kernel.value_at_zero().finite() {
        return DiagonalRule::FiniteValue;
    }
    let dim = measures[0].dim();
    let points = measures
        .iter()
        .flat_map(|m| m.positions().iter().cloned())
        .collect();
    Nodes::Points { dim, points }.default_rule()
}

/// `E(mu) + E(nu) - 2 E(mu, nu)`, four times the midpoint convexity gap,
/// and the magnitude it should be compared against.
pub fn midpoint_defect<T: Real>(
    kernel: &RadialKernel<T>,
    mu: &ParticleMeasure<T>,
    nu: &ParticleMeasure<T>,
    rule: DiagonalRule<T>,
) -> Result<(T, T)> {
    let emu = particle_energy(kernel, mu, rule);
    let enu = particle_energy(kernel, nu, rule);
    let cross = cross_energy(
        kernel,
        &Measure::Particle(mu.clone()),
        &Measure::Particle(nu.clone()),
        rule,
    )?;
    let two = c::<T>(2.0);
    Ok((
        emu + enu - two * cross,
        emu.abs() + enu.abs() + two * cross.abs(),
    ))
}

fn random_measure<T: Real>(
    rng: &mut ChaCha8Rng,
    dim: usize,
    min_atoms: usize,
    max_atoms: usize,
    extent: f64,
) -> Result<ParticleMeasure<T>> {
    let n = rng.random_range(min_atoms..=max_atoms.max(min_atoms));
    let pos = (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| c(extent * rng.random_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    // exponential weights give a uniform point of the simplex
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = raw.iter().sum();
    let w = raw.iter().map(|&x| c(x / s)).collect();
    Ok(ParticleMeasure::new(dim, pos, w)?.recenter())
}

/// Midpoint violation built from the most negative sum-zero eigenvector of
/// the Gram matrix on a line of nodes: `mu` and `nu` are its positive and
/// negative parts.
fn violation_witness<T: Real>(kernel: &RadialKernel<T>, dim: usize) -> Result<Option<(T, T)>> {
    let pts: Vec<Vec<T>> = (0..WITNESS_NODES)
        .map(|i| {
            let mut p = vec![T::zero(); dim];
            p[0] = c(-2.0 + 4.0 * i as f64 / (WITNESS_NODES - 1) as f64);
            p
        })
        .collect();
    let rule = shared_rule(kernel, &[&ParticleMeasure::uniform(dim, pts.clone())?]);
    let n = pts.len();
    let g = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            crate::energy::point_diagonal(kernel, dim, rule)
        } else {
            kernel.value(crate::real::dist(&pts[i], &pts[j]))
        }
    });
    let Some((lam, v)) = sum_zero_min_eigen(&g) else {
        return Ok(None);
    };
    if lam >= T::zero() {
        return Ok(None);
    }
    let part = |sign: T| -> Result<ParticleMeasure<T>> {
        let (p, w): (Vec<_>, Vec<_>) = pts
            .iter()
            .zip(&v)
            .filter(|(_, &x)| x * sign > T::zero())
            .map(|(p, &x)| (p.clone(), x * sign))
            .unzip();
        let s = w.iter().fold(T::zero(), |a, &b| a + b);
        ParticleMeasure::new(dim, p, w.into_iter().map(|x| x / s).collect())
    };
    let (mu, nu) = (part(T::one())?, part(-T::one())?);
    midpoint_defect(kernel, &mu, &nu, rule).map(Some)
}

/// Optimum over even measures on the grid `k h, k = -m..=m`: a shell of
/// radius `k h` is `(delta_{kh} + delta_{-kh}) / 2`, so the shell Gram is
/// the sign-averaged particle Gram.
fn symmetric_optimum<T: Real>(
    g: &GramMatrix<T>,
    m: usize,
    h: T,
    s: &SolverSettings<T>,
) -> Result<T> {
    let e = g.entries();
    let pair = |k: usize| if k == 0 { vec![m] } else { vec![m + k, m - k] };
    let shells = DMatrix::from_fn(m + 1, m + 1, |a, b| {
        let (pa, pb) = (pair(a), pair(b));
        let mut v = T::zero();
        for &i in &pa {
            for &j in &pb {
                v += e[(i, j)];
            }
        }
        v / T::from_count(pa.len() * pb.len())
    });
    let radii = (0..=m).map(|k| h * T::from_count(k)).collect();
    let gram = GramMatrix::from_matrix(Nodes::Radii { dim: 1, radii }, shells, g.diagonal_rule())?;
    let problem = SimplexProblem::new(gram)?;
    let start = problem.uniform_start();
    Ok(away_step_descent(&problem, &start, s.tol, s.max_iter, s.restarts, s.seed)?.energy)
}

/// Convexity of the energy and its consequence for radial symmetry:
/// (a) midpoint convexity on random recentered pairs, (b) rotation
/// averaging never raises the energy, and (c) in one dimension with a
/// `t^beta` attraction, the radial optimum matches the unconstrained one.
///
/// For kernels singular at the origin, (b) compares the measures with
/// each atom spread over a ball of half the minimal separation, where both
/// energies are finite.
///
/// Kernels without a positive-definiteness certificate are reported as
/// inapplicable, with the defect of a violating pair when one is found.
pub fn convexity_and_radiality<T: Real>(
    kernel: &RadialKernel<T>,
    dim: usize,
    settings: &ConvexitySettings<T>,
) -> Result<DiagnosticReport<T>> {
    let mut rep = DiagnosticReport::new("convexity_and_radiality");
    rep.parameter("dimension", T::from_count(dim))
        .parameter("trials", T::from_count(settings.trials))
        .parameter("extent", settings.extent);
    let cert = pd_certificate(kernel, dim, PD_NODE_BUDGET)?;
    rep.note(format!("certificate: {cert:?}"));
    if cert == PdCertificate::None {
        if let Some((d, scale)) = violation_witness(kernel, dim)? {
            rep.residual("witness_defect", d)
                .residual("witness_scale", scale);
        }
        return Ok(rep.inapplicable("kernel is not certified positive definite"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let extent = settings.extent.to_f64_lossy();
    let singular = !kernel.value_at_zero().finite();
    // a lone atom has no finite energy under a singular kernel
    let min_atoms = if singular { 2 } else { 1 };
    let tol = c::<T>(MIDPOINT_REL_TOL);
    let mut worst_mid = T::infinity();
    let mut worst_rot = T::infinity();
    let mut ok = true;
    for _ in 0..settings.trials {
        let mu = random_measure(&mut rng, dim, min_atoms, settings.max_atoms, extent)?;
        let nu = random_measure(&mut rng, dim, min_atoms, settings.max_atoms, extent)?;
        let rule = shared_rule(kernel, &[&mu, &nu]);
        let (d, scale) = midpoint_defect(kernel, &mu, &nu, rule)?;
        let margin = d + tol * scale;
        worst_mid = worst_mid.min(d / scale.max(c(1e-30)));
        ok &= margin >= T::zero();

        let (e, e_rot, slack) = if singular {
            let h = Nodes::Points {
                dim,
                points: mu.positions().to_vec(),
            }
            .half_min_spacing();
            let cr = h.min(c::<T>(0.5) * settings.extent);
            let (e, e_rot) = smoothed_rotation_energies(kernel, &mu, cr);
            (
                e,
                e_rot,
                c::<T>(ROTATION_QUADRATURE_TOL) * e.abs().max(e_rot.abs()).max(T::one()),
            )
        } else {
            let e = particle_energy(kernel, &mu, DiagonalRule::FiniteValue);
            let e_rot = radial_energy(kernel, &rotation_average(&mu)?, DiagonalRule::FiniteValue)?;
            (e, e_rot, tol * (T::one() + e.abs()))
        };
        worst_rot = worst_rot.min(e + slack - e_rot);
        ok &= e_rot <= e + slack;
    }
    if settings.trials > 0 {
        rep.residual("midpoint_relative_min", worst_mid)
            .residual("rotation_margin_min", worst_rot);
    }

    if let (1, Some(r)) = (dim, settings.radial_extent) {
        if repulsive_part(kernel).is_some() {
            let h = r / T::from_count(RADIAL_NODES);
            let m = RADIAL_NODES;
            // node m + k sits at k h, k = -m..=m
            let points: Vec<Vec<T>> = (0..=2 * m)
                .map(|i| vec![h * (T::from_count(i) - T::from_count(m))])
                .collect();
            let s = SolverSettings::default();
            let (problem, prep) = minimize_on_nodes(kernel, Nodes::Points { dim: 1, points }, &s)?;
            let e_rad = symmetric_optimum(problem.gram(), m, h, &s)?;
            let e_part = prep.energy;
            let margin = e_part + c::<T>(1e-6) * (T::one() + e_part.abs()) - e_rad;
            rep.parameter("radial_optimum", e_rad)
                .parameter("particle_optimum", e_part)
                .residual("radial_margin", margin);
            ok &= margin >= T::zero();
        } else {
            rep.note("no t^beta attraction with 2 <= beta <= 4: radial optimum check skipped");
        }
    }
    Ok(rep.finish(ok))
}
