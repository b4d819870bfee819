//! Minimization of `w^T G w` over the probability simplex, and over atom
//! positions.
//!
//! The linear oracle of the conditional-gradient methods picks the node of
//! smallest potential, so a zero Frank-Wolfe gap is exactly the discrete
//! Euler-Lagrange condition. All solvers work on `G` divided by a power of
//! two close to its largest entry; this is exact in floating point, so
//! kernels that differ by a power-of-two factor produce identical iterates.

mod bounds;
mod particles;

pub use bounds::{ball_energy, confinement_time, support_radius_bound, unit_ball_energy};
pub use particles::{energy_gradient, particle_descent};

use crate::energy::{GramMatrix, Nodes};
use crate::error::{Error, Result};
use crate::kernels::RadialKernel;
use crate::linalg::{finite_norm, power_of_two_below, sum_zero_min_eigen};
use crate::measures::WEIGHT_FLOOR;
use crate::real::{c, Real};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Relative threshold on the smallest sum-zero eigenvalue for certifying
/// that the quadratic form is convex on the simplex.
pub const CONVEXITY_REL_TOL: f64 = 1e-8;

/// Problems up to this size also try every vertex and every optimal
/// two-node mixture.
pub const ENUMERATION_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConvexityHint {
    ConvexCertified,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stationarity {
    GlobalCertified,
    StationaryOnly,
}

/// Quadratic program over the simplex on a fixed node set.
#[derive(Debug, Clone)]
pub struct SimplexProblem<T: Real> {
    gram: GramMatrix<T>,
    convexity_hint: ConvexityHint,
    min_projected_eigenvalue: Option<T>,
}

impl<T: Real> SimplexProblem<T> {
    /// Requires a finite diagonal; convexity is certified from the spectrum
    /// of `G` on the sum-zero subspace.
    pub fn new(gram: GramMatrix<T>) -> Result<Self> {
        if !gram.diagonal_finite() {
            return Err(Error::Precondition(
                "Gram matrix has an infinite diagonal; use a cell-average rule".into(),
            ));
        }
        if let Some((i, j)) = first_nan(gram.entries()) {
            return Err(Error::NanInGram { row: i, col: j });
        }
        let (convexity_hint, min_projected_eigenvalue) = certify_convexity(gram.entries());
        Ok(SimplexProblem {
            gram,
            convexity_hint,
            min_projected_eigenvalue,
        })
    }

    /// Skip the eigenvalue computation and use the given hint.
    pub fn with_hint(gram: GramMatrix<T>, hint: ConvexityHint) -> Result<Self> {
        if !gram.diagonal_finite() {
            return Err(Error::Precondition(
                "Gram matrix has an infinite diagonal".into(),
            ));
        }
        Ok(SimplexProblem {
            gram,
            convexity_hint: hint,
            min_projected_eigenvalue: None,
        })
    }

    pub fn gram(&self) -> &GramMatrix<T> {
        &self.gram
    }

    pub fn convexity_hint(&self) -> ConvexityHint {
        self.convexity_hint
    }

    pub fn min_projected_eigenvalue(&self) -> Option<T> {
        self.min_projected_eigenvalue
    }

    pub fn len(&self) -> usize {
        self.gram.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gram.is_empty()
    }

    pub fn uniform_start(&self) -> Vec<T> {
        vec![T::one() / T::from_count(self.len()); self.len()]
    }

    fn convex(&self) -> bool {
        self.convexity_hint == ConvexityHint::ConvexCertified
    }
}

fn first_nan<T: Real>(g: &DMatrix<T>) -> Option<(usize, usize)> {
    (0..g.nrows())
        .flat_map(|i| (0..g.ncols()).map(move |j| (i, j)))
        .find(|&(i, j)| crate::real::is_nan(g[(i, j)]))
}

/// `ConvexCertified` iff the smallest eigenvalue of `G` on the sum-zero
/// subspace is at least `-1e-8 ||G||`.
pub fn certify_convexity<T: Real>(g: &DMatrix<T>) -> (ConvexityHint, Option<T>) {
    match sum_zero_min_eigen(g) {
        None => (ConvexityHint::ConvexCertified, None),
        Some((lam, _)) => {
            let hint = if lam >= -c::<T>(CONVEXITY_REL_TOL) * finite_norm(g) {
                ConvexityHint::ConvexCertified
            } else {
                ConvexityHint::Unknown
            };
            (hint, Some(lam))
        }
    }
}

/// Budgets for the simplex solvers. `None` selects the defaults:
/// `tol = 1e-8 (s + |E_0|)` with `s` the power-of-two scale of `G` and
/// `max_iter = 50 n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings<T> {
    pub tol: Option<T>,
    pub max_iter: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
}

impl<T> Default for SolverSettings<T> {
    fn default() -> Self {
        SolverSettings {
            tol: None,
            max_iter: None,
            restarts: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct SolveReport<T> {
    pub weights: Vec<T>,
    pub energy: T,
    pub fw_gap: T,
    pub iterations: usize,
    pub restarts_used: usize,
    pub stationarity: Stationarity,
}

/// Gram matrix divided by a power of two, with the solver state on it.
struct Scaled<T: Real> {
    g: DMatrix<T>,
    scale: T,
}

impl<T: Real> Scaled<T> {
    fn new(gram: &GramMatrix<T>) -> Self {
        let m = gram
            .entries()
            .iter()
            .filter(|x| x.finite())
            .fold(T::zero(), |m, x| m.max(x.abs()));
        let scale = power_of_two_below(m);
        Scaled {
            g: gram.entries() / scale,
            scale,
        }
    }

    fn n(&self) -> usize {
        self.g.nrows()
    }

    fn potentials(&self, w: &[T]) -> Vec<T> {
        let n = self.n();
        let support: Vec<usize> = (0..n).filter(|&j| w[j] != T::zero()).collect();
        (0..n)
            .into_par_iter()
            .map(|i| {
                support
                    .iter()
                    .fold(T::zero(), |s, &j| s + self.g[(i, j)] * w[j])
            })
            .collect()
    }

    fn energy(&self, w: &[T], p: &[T]) -> T {
        crate::energy::energy_from_potentials(w, p)
    }

    fn tol(&self, settings_tol: Option<T>, start: &[T]) -> T {
        match settings_tol {
            Some(t) => t / self.scale,
            None => {
                let e0 = self.energy(start, &self.potentials(start));
                c::<T>(1e-8) * (T::one() + e0.abs())
            }
        }
    }
}

/// Index of the smallest entry, lowest index on ties.
fn argmin<T: Real>(p: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v < p[best] {
            best = i;
        }
    }
    best
}

fn gap_of<T: Real>(e: T, p: &[T]) -> T {
    c::<T>(2.0) * (e - p[argmin(p)])
}

struct Run<T> {
    w: Vec<T>,
    iterations: usize,
}

const REFRESH: usize = 64;

/// Plain Frank-Wolfe with exact line search.
fn fw_run<T: Real>(s: &Scaled<T>, w0: &[T], tol: T, max_iter: usize) -> Run<T> {
    let mut w = w0.to_vec();
    let mut p = s.potentials(&w);
    let mut it = 0;
    while it < max_iter {
        let e = s.energy(&w, &p);
        let j = argmin(&p);
        if c::<T>(2.0) * (e - p[j]) <= tol {
            break;
        }
        let denom = e - c::<T>(2.0) * p[j] + s.g[(j, j)];
        let gamma = if denom > T::zero() {
            ((e - p[j]) / denom).max(T::zero()).min(T::one())
        } else {
            T::one()
        };
        let keep = T::one() - gamma;
        for (k, wk) in w.iter_mut().enumerate() {
            *wk *= keep;
            p[k] = keep * p[k] + gamma * s.g[(k, j)];
        }
        w[j] += gamma;
        it += 1;
        if it % REFRESH == 0 {
            p = s.potentials(&w);
        }
    }
    Run { w, iterations: it }
}

/// Pairwise Frank-Wolfe: moves mass from the highest-potential support
/// node to the lowest-potential node with exact line search.
fn pairwise_run<T: Real>(s: &Scaled<T>, w0: &[T], tol: T, max_iter: usize) -> Run<T> {
    let n = s.n();
    let mut w = w0.to_vec();
    let mut p = s.potentials(&w);
    let mut it = 0;
    while it < max_iter {
        let e = s.energy(&w, &p);
        let to = argmin(&p);
        if c::<T>(2.0) * (e - p[to]) <= tol {
            break;
        }
        let mut from = usize::MAX;
        for k in 0..n {
            if w[k] > T::zero() && (from == usize::MAX || p[k] > p[from]) {
                from = k;
            }
        }
        if from == to || from == usize::MAX {
            break;
        }
        let slope = p[to] - p[from];
        if slope >= T::zero() {
            break;
        }
        let curv = s.g[(to, to)] - c::<T>(2.0) * s.g[(to, from)] + s.g[(from, from)];
        let cap = w[from];
        let gamma = if curv > T::zero() {
            (-slope / curv).min(cap)
        } else {
            cap
        };
        if gamma <= T::zero() {
            break;
        }
        w[to] += gamma;
        if gamma == cap {
            w[from] = T::zero();
        } else {
            w[from] -= gamma;
        }
        for (k, pk) in p.iter_mut().enumerate() {
            *pk += gamma * (s.g[(k, to)] - s.g[(k, from)]);
        }
        it += 1;
        if it % REFRESH == 0 {
            p = s.potentials(&w);
        }
    }
    Run { w, iterations: it }
}

/// Primal active-set method for the convex case: solves the KKT system on
/// the current support, drops nodes that would go negative and adds the
/// most violated node until the discrete Euler-Lagrange conditions hold.
fn active_set_polish<T: Real>(s: &Scaled<T>, w0: &[T], tol: T) -> Option<Vec<T>> {
    let n = s.n();
    let floor = c::<T>(WEIGHT_FLOOR);
    let mut w: Vec<T> = w0
        .iter()
        .map(|&x| if x > floor { x } else { T::zero() })
        .collect();
    let total = w.iter().fold(T::zero(), |a, &b| a + b);
    if !(total > T::zero()) {
        return None;
    }
    w.iter_mut().for_each(|x| *x /= total);
    let mut active: Vec<usize> = (0..n).filter(|&j| w[j] > T::zero()).collect();
    for _ in 0..(4 * n + 10) {
        let m = active.len();
        let mut a = DMatrix::<T>::zeros(m + 1, m + 1);
        let mut b = DVector::<T>::zeros(m + 1);
        for (r, &i) in active.iter().enumerate() {
            for (q, &j) in active.iter().enumerate() {
                a[(r, q)] = s.g[(i, j)];
            }
            a[(r, m)] = T::one();
            a[(m, r)] = T::one();
        }
        b[m] = T::one();
        let x = a.lu().solve(&b)?;
        if x.iter().any(|v| !v.finite()) {
            return None;
        }
        if x.iter().take(m).all(|&v| v > T::zero()) {
            for x_j in w.iter_mut() {
                *x_j = T::zero();
            }
            for (r, &i) in active.iter().enumerate() {
                w[i] = x[r];
            }
            let p = s.potentials(&w);
            let e = s.energy(&w, &p);
            let j = argmin(&p);
            if c::<T>(2.0) * (e - p[j]) <= tol * c(0.5) || active.contains(&j) {
                return Some(w);
            }
            active.push(j);
            active.sort_unstable();
            continue;
        }
        // move toward the KKT point until the first weight hits zero
        let mut t = T::one();
        let mut hit = usize::MAX;
        for (r, &i) in active.iter().enumerate() {
            if x[r] <= T::zero() {
                let ti = w[i] / (w[i] - x[r]);
                if ti < t || hit == usize::MAX {
                    t = ti.min(t);
                    hit = i;
                }
            }
        }
        for (r, &i) in active.iter().enumerate() {
            let wi = w[i];
            w[i] = wi + t * (x[r] - wi);
        }
        w[hit] = T::zero();
        active.retain(|&i| i != hit && w[i] > T::zero());
        for (i, wi) in w.iter_mut().enumerate() {
            if !active.contains(&i) {
                *wi = T::zero();
            }
        }
        if active.is_empty() {
            return None;
        }
    }
    None
}

fn normalized<T: Real>(mut w: Vec<T>) -> Vec<T> {
    for x in w.iter_mut() {
        if *x < T::zero() {
            *x = T::zero();
        }
    }
    let total = w.iter().fold(T::zero(), |a, &b| a + b);
    w.iter_mut().for_each(|x| *x /= total);
    w
}

fn check_start<T: Real>(problem: &SimplexProblem<T>, start: &[T]) -> Result<()> {
    if start.len() != problem.len() {
        return Err(Error::InvalidArgument(format!(
            "start has {} weights for {} nodes",
            start.len(),
            problem.len()
        )));
    }
    let total = start.iter().fold(T::zero(), |a, &b| a + b);
    if start.iter().any(|&x| !(x >= T::zero())) || (total - T::one()).abs() > c(1e-9) {
        return Err(Error::InvalidArgument(
            "start must lie on the simplex".into(),
        ));
    }
    Ok(())
}

fn report<T: Real>(
    problem: &SimplexProblem<T>,
    s: &Scaled<T>,
    w: Vec<T>,
    tol: T,
    iterations: usize,
    restarts_used: usize,
) -> SolveReport<T> {
    let w = normalized(w);
    let p = s.potentials(&w);
    let e = s.energy(&w, &p);
    let gap = gap_of(e, &p);
    let stationarity = if problem.convex() && gap <= tol {
        Stationarity::GlobalCertified
    } else {
        Stationarity::StationaryOnly
    };
    SolveReport {
        weights: w,
        energy: e * s.scale,
        fw_gap: gap * s.scale,
        iterations,
        restarts_used,
        stationarity,
    }
}

/// Frank-Wolfe with exact line search from `start`. Stops when the gap
/// `2 (w^T G w - min_j (G w)_j)` is at most `tol` or after `max_iter`
/// iterations.
pub fn frank_wolfe<T: Real>(
    problem: &SimplexProblem<T>,
    start: &[T],
    tol: Option<T>,
    max_iter: Option<usize>,
) -> Result<SolveReport<T>> {
    check_start(problem, start)?;
    let s = Scaled::new(&problem.gram);
    let tol = s.tol(tol, start);
    let run = fw_run(&s, start, tol, max_iter.unwrap_or(50 * problem.len()));
    Ok(report(problem, &s, run.w, tol, run.iterations, 0))
}

/// Random point of the simplex, uniform (flat Dirichlet).
fn random_simplex<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    let e: Vec<f64> = (0..n)
        .map(|_| -rng.random_range(f64::MIN_POSITIVE..1.0).ln())
        .collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|x| c(x / total)).collect()
}

/// Best vertex or two-node mixture, for tiny problems.
fn enumerate_small<T: Real>(s: &Scaled<T>) -> Vec<T> {
    let n = s.n();
    let mut best = (s.g[(0, 0)], 0, 0, T::one());
    for i in 0..n {
        if s.g[(i, i)] < best.0 {
            best = (s.g[(i, i)], i, i, T::one());
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b, d) = (s.g[(i, i)], s.g[(i, j)], s.g[(j, j)]);
            let curv = a - c::<T>(2.0) * b + d;
            if curv > T::zero() {
                let theta = (d - b) / curv;
                if theta > T::zero() && theta < T::one() {
                    let e = theta * theta * a
                        + c::<T>(2.0) * theta * (T::one() - theta) * b
                        + (T::one() - theta) * (T::one() - theta) * d;
                    if e < best.0 {
                        best = (e, i, j, theta);
                    }
                }
            }
        }
    }
    let mut w = vec![T::zero(); n];
    w[best.1] += best.3;
    w[best.2] += T::one() - best.3;
    w
}

/// Pairwise Frank-Wolfe from `start`, the uniform start and `restarts`
/// random starts (and, for at most [`ENUMERATION_LIMIT`] nodes, the best
/// vertex or vertex pair). Convex problems are finished with an active-set
/// step. Returns the lowest energy found; ties keep the earliest start.
pub fn away_step_descent<T: Real>(
    problem: &SimplexProblem<T>,
    start: &[T],
    tol: Option<T>,
    max_iter: Option<usize>,
    restarts: usize,
    seed: u64,
) -> Result<SolveReport<T>> {
    check_start(problem, start)?;
    let n = problem.len();
    let s = Scaled::new(&problem.gram);
    let tol = s.tol(tol, start);
    let max_iter = max_iter.unwrap_or(50 * n);
    let mut starts = vec![start.to_vec()];
    let uniform = problem.uniform_start();
    if uniform != start {
        starts.push(uniform);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        starts.push(random_simplex(&mut rng, n));
    }
    if n <= ENUMERATION_LIMIT {
        starts.push(enumerate_small(&s));
    }
    let mut best: Option<(T, Vec<T>)> = None;
    let mut total_iters = 0;
    for w0 in &starts {
        let run = pairwise_run(&s, w0, tol, max_iter);
        total_iters += run.iterations;
        let mut w = normalized(run.w);
        if problem.convex() {
            if let Some(polished) = active_set_polish(&s, &w, tol) {
                let polished = normalized(polished);
                let (e_old, e_new) = (
                    s.energy(&w, &s.potentials(&w)),
                    s.energy(&polished, &s.potentials(&polished)),
                );
                if e_new <= e_old + tol {
                    w = polished;
                }
            }
        }
        let e = s.energy(&w, &s.potentials(&w));
        if best.as_ref().is_none_or(|(be, _)| e < *be) {
            best = Some((e, w));
        }
        if problem.convex() && gap_of(e, &s.potentials(&best.as_ref().expect("set above").1)) <= tol
        {
            // convex: any stationary point is optimal, later starts cannot improve
            break;
        }
    }
    let (_, w) = best.expect("at least one start");
    Ok(report(problem, &s, w, tol, total_iters, restarts))
}

/// Build the problem on `nodes` with the default diagonal rule and solve it:
/// pairwise Frank-Wolfe plus active-set polish when convex, multi-start
/// otherwise.
pub fn minimize_on_nodes<T: Real>(
    kernel: &RadialKernel<T>,
    nodes: Nodes<T>,
    settings: &SolverSettings<T>,
) -> Result<(SimplexProblem<T>, SolveReport<T>)> {
    let rule = nodes.default_rule();
    let gram = GramMatrix::build(kernel, nodes, rule)?;
    let problem = SimplexProblem::new(gram)?;
    let start = problem.uniform_start();
    let restarts = if problem.convex() {
        0
    } else {
        settings.restarts
    };
    let rep = away_step_descent(
        &problem,
        &start,
        settings.tol,
        settings.max_iter,
        restarts,
        settings.seed,
    )?;
    Ok((problem, rep))
}

/// Minimize over shell masses on `radii_grid` through the shell-kernel Gram.
pub fn radial_minimize<T: Real>(
    kernel: &RadialKernel<T>,
    dim: usize,
    radii_grid: &[T],
    settings: &SolverSettings<T>,
) -> Result<SolveReport<T>> {
    if radii_grid.windows(2).any(|w| !(w[1] > w[0]))
        || radii_grid.first().is_some_and(|r| *r < T::zero())
    {
        return Err(Error::InvalidArgument(
            "radii must be nonnegative and increasing".into(),
        ));
    }
    let nodes = Nodes::Radii {
        dim,
        radii: radii_grid.to_vec(),
    };
    minimize_on_nodes(kernel, nodes, settings).map(|(_, r)| r)
}
