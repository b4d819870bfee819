//! Interaction energy, potentials and Gram matrices.
//!
//! For atoms `x_i` with weights `w_i` the energy is `w^T G w` with
//! `G_ij = g(|x_i - x_j|)`. Self-interaction of an atom is not defined for
//! singular kernels, so the diagonal follows a [`DiagonalRule`]; the
//! default treats each node as a small ball (or shell) of uniform density.
//! Radial measures use the [`shell_kernel`] in place of `g`.

mod shell;

pub use shell::{shell_average, shell_average_compact, shell_kernel};

use crate::error::{Error, Result};
use crate::kernels::RadialKernel;
use crate::measures::{Measure, ParticleMeasure, RadialMeasure};
use crate::quadrature::{grading_for_exponent, integrate_graded, Tolerance};
use crate::real::{c, dist, Real};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

/// Value used for the self-interaction `G_ii`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(
    tag = "rule",
    content = "cell_radius",
    rename_all = "snake_case",
    bound = "T: Real"
)]
pub enum DiagonalRule<T> {
    /// Mean of `g` over a ball (or shell) of this radius around the node.
    CellAverage(T),
    /// `g(0+)`, or the shell self-average for radial nodes.
    FiniteValue,
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum Nodes<T> {
    Points { dim: usize, points: Vec<Vec<T>> },
    Radii { dim: usize, radii: Vec<T> },
}

impl<T: Real> Nodes<T> {
    pub fn dim(&self) -> usize {
        match self {
            Nodes::Points { dim, .. } | Nodes::Radii { dim, .. } => *dim,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Nodes::Points { points, .. } => points.len(),
            Nodes::Radii { radii, .. } => radii.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Half the smallest distance between distinct nodes.
    pub fn half_min_spacing(&self) -> T {
        let mut m = T::infinity();
        match self {
            Nodes::Points { points, .. } => {
                for i in 0..points.len() {
                    for j in 0..i {
                        m = m.min(dist(&points[i], &points[j]));
                    }
                }
            }
            Nodes::Radii { radii, .. } => {
                let mut r = radii.clone();
                r.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
                for w in r.windows(2) {
                    m = m.min(w[1] - w[0]);
                }
            }
        }
        m * c(0.5)
    }

    /// Default rule: cell average over half the minimal node spacing.
    pub fn default_rule(&self) -> DiagonalRule<T> {
        let h = self.half_min_spacing();
        if h.finite() && h > T::zero() {
            DiagonalRule::CellAverage(h)
        } else {
            DiagonalRule::FiniteValue
        }
    }
}

/// `(N / h^N) int_0^h g(t) t^(N-1) dt`: mean of `g(|x|)` over the ball of
/// radius `h`.
pub fn ball_cell_average<T: Real>(kernel: &RadialKernel<T>, dim: usize, h: T) -> T {
    let n = T::from_count(dim);
    n / h.powi(dim as i32) * kernel.moment(n - T::one(), T::zero(), h)
}

/// Mean of `shell_kernel(r, s)` over `s` in `[r - h, r + h]` weighted by
/// `s^(N-1)`: the self-interaction of a thick shell.
pub fn shell_cell_average<T: Real>(kernel: &RadialKernel<T>, dim: usize, r: T, h: T) -> T {
    let n = T::from_count(dim);
    // finite exactly when g is locally integrable in dimension N
    if !kernel.moment(n - T::one(), T::zero(), h).finite() {
        return T::infinity();
    }
    let lo = (r - h).max(T::zero());
    let hi = r + h;
    let k = dim as i32 - 1;
    let grading = match kernel.singularity() {
        crate::kernels::Singularity::Power(a) => {
            grading_for_exponent((T::from_count(dim) - T::one() - a).to_f64_lossy())
        }
        _ => 2,
    };
    let tol = Tolerance::loose();
    let f = |s: T| shell_kernel(kernel, dim, r, s).unwrap_or(T::infinity()) * s.powi(k);
    // grade both halves toward s = r
    let f = |s: T| if s == r { T::zero() } else { f(s) };
    let left = integrate_graded(|u: T| f(r - u), T::zero(), r - lo, grading, tol).value;
    let right = integrate_graded(|u: T| f(r + u), T::zero(), hi - r, grading, tol).value;
    let weight = (hi.powi(dim as i32) - lo.powi(dim as i32)) / n;
    (left + right) / weight
}

/// Self-interaction of a point node.
pub fn point_diagonal<T: Real>(kernel: &RadialKernel<T>, dim: usize, rule: DiagonalRule<T>) -> T {
    match rule {
        DiagonalRule::CellAverage(h) => ball_cell_average(kernel, dim, h),
        DiagonalRule::FiniteValue => {
            let v = kernel.value_at_zero();
            if v.finite() {
                v
            } else {
                T::infinity()
            }
        }
        DiagonalRule::Infinite => T::infinity(),
    }
}

/// Self-interaction of a shell node of radius `r`. Under a cell-average
/// rule this is the shell-kernel potential at `r` of the uniform cell
/// `r +- h` (a ball cell when `r < h`), matching the point rule.
pub fn radial_diagonal<T: Real>(
    kernel: &RadialKernel<T>,
    dim: usize,
    r: T,
    rule: DiagonalRule<T>,
) -> T {
    if r == T::zero() {
        return point_diagonal(kernel, dim, rule);
    }
    match rule {
        DiagonalRule::Infinite => T::infinity(),
        DiagonalRule::FiniteValue => shell_kernel(kernel, dim, r, r).unwrap_or(T::infinity()),
        // a shell inside its own cell is represented by the cell
        DiagonalRule::CellAverage(h) if r < h => ball_cell_average(kernel, dim, h),
        DiagonalRule::CellAverage(h) => shell_cell_average(kernel, dim, r, h),
    }
}

/// Dense symmetric Gram matrix over a fixed node set.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix<T: Real> {
    nodes: Nodes<T>,
    entries: DMatrix<T>,
    diagonal_rule: DiagonalRule<T>,
}

impl<T: Real> GramMatrix<T> {
    /// Assemble `G`. Off-diagonal entries are `g(|x_i - x_j|)` (or the shell
    /// kernel for radii), computed in parallel. Nodes must be distinct.
    pub fn build(kernel: &RadialKernel<T>, nodes: Nodes<T>, rule: DiagonalRule<T>) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty node set".into()));
        }
        let dim = nodes.dim();
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let rows: Vec<Result<Vec<T>>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![T::zero(); n - i];
                for j in i..n {
                    row[j - i] = match &nodes {
                        Nodes::Points { points, .. } => {
                            if i == j {
                                point_diagonal(kernel, dim, rule)
                            } else {
                                let d = dist(&points[i], &points[j]);
                                if d == T::zero() {
                                    return Err(Error::InvalidArgument(format!(
                                        "nodes {j} and {i} coincide"
                                    )));
                                }
                                kernel.value(d)
                            }
                        }
                        Nodes::Radii { radii, .. } => {
                            if i == j {
                                radial_diagonal(kernel, dim, radii[i], rule)
                            } else {
                                if radii[i] == radii[j] {
                                    return Err(Error::InvalidArgument(format!(
                                        "radii {j} and {i} coincide"
                                    )));
                                }
                                shell_kernel(kernel, dim, radii[i], radii[j])?
                            }
                        }
                    };
                }
                Ok(row)
            })
            .collect();
        let mut entries = DMatrix::zeros(n, n);
        for (i, row) in rows.into_iter().enumerate() {
            for (k, v) in row?.into_iter().enumerate() {
                let j = i + k;
                if crate::real::is_nan(v) {
                    return Err(Error::NanInGram { row: i, col: j });
                }
                entries[(i, j)] = v;
                entries[(j, i)] = v;
            }
        }
        Ok(GramMatrix {
            nodes,
            entries,
            diagonal_rule: rule,
        })
    }

    /// Wrap a precomputed symmetric matrix (for tests and external problems).
    pub fn from_matrix(
        nodes: Nodes<T>,
        entries: DMatrix<T>,
        rule: DiagonalRule<T>,
    ) -> Result<Self> {
        let n = nodes.len();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::InvalidArgument(
                "matrix size does not match nodes".into(),
            ));
        }
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (entries[(i, j)], entries[(j, i)]);
                if crate::real::is_nan(a) {
                    return Err(Error::NanInGram { row: i, col: j });
                }
                if a.finite() && (a - b).abs() > c::<T>(1e-12) * (T::one() + a.abs()) {
                    return Err(Error::InvalidArgument(format!(
                        "matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(GramMatrix {
            nodes,
            entries,
            diagonal_rule: rule,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entries(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn nodes(&self) -> &Nodes<T> {
        &self.nodes
    }

    pub fn diagonal_rule(&self) -> DiagonalRule<T> {
        self.diagonal_rule
    }

    pub fn diagonal_finite(&self) -> bool {
        (0..self.len()).all(|i| self.entries[(i, i)].finite())
    }

    /// `p = G w`, skipping nodes with zero weight so that infinite diagonal
    /// entries of unused nodes do not contaminate the result.
    pub fn potentials(&self, w: &[T]) -> Vec<T> {
        let n = self.len();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut s = T::zero();
                for (j, &wj) in w.iter().enumerate().take(n) {
                    if wj != T::zero() {
                        s += self.entries[(i, j)] * wj;
                    }
                }
                s
            })
            .collect()
    }

    /// `w^T G w`.
    pub fn energy(&self, w: &[T]) -> T {
        energy_from_potentials(w, &self.potentials(w))
    }

    /// Copy with every entry multiplied by `lambda`.
    pub fn scaled(&self, lambda: T) -> Self {
        GramMatrix {
            nodes: self.nodes.clone(),
            entries: &self.entries * lambda,
            diagonal_rule: self.diagonal_rule,
        }
    }
}

/// `sum_i w_i p_i` over nodes with nonzero weight.
pub fn energy_from_potentials<T: Real>(w: &[T], p: &[T]) -> T {
    w.iter()
        .zip(p)
        .filter(|(wi, _)| **wi != T::zero())
        .fold(T::zero(), |s, (&wi, &pi)| s + wi * pi)
}

/// `w^T G w`; `+inf` if weight sits on an infinite diagonal entry.
pub fn energy<T: Real>(g: &GramMatrix<T>, w: &[T]) -> T {
    g.energy(w)
}

/// Sampled potential `psi_mu` at query points (radii for radial measures).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct PotentialField<T> {
    pub query_points: Vec<Vec<T>>,
    pub values: Vec<T>,
}

impl<T: Real> PotentialField<T> {
    /// CSV with point columns (`x1..xN`, or `radius`) and a `psi` column.
    pub fn write_csv<W: Write>(&self, out: W, radial: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let dim = self.query_points.first().map_or(1, Vec::len);
        let mut header: Vec<String> = if radial {
            vec!["radius".into()]
        } else {
            (1..=dim).map(|k| format!("x{k}")).collect()
        };
        header.push("psi".into());
        w.write_record(&header)?;
        for (x, &v) in self.query_points.iter().zip(&self.values) {
            let mut row: Vec<String> = x.iter().map(|&v| crate::measures::fmt_number(v)).collect();
            row.push(crate::measures::fmt_number(v));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }
}

fn particle_pair<T: Real>(
    kernel: &RadialKernel<T>,
    dim: usize,
    x: &[T],
    y: &[T],
    rule: DiagonalRule<T>,
) -> T {
    let d = dist(x, y);
    if d == T::zero() {
        point_diagonal(kernel, dim, rule)
    } else {
        kernel.value(d)
    }
}

fn radial_pair<T: Real>(
    kernel: &RadialKernel<T>,
    dim: usize,
    r: T,
    s: T,
    rule: DiagonalRule<T>,
) -> Result<T> {
    if r == s {
        Ok(radial_diagonal(kernel, dim, r, rule))
    } else {
        shell_kernel(kernel, dim, r, s)
    }
}

/// `psi_mu(x) = int g(|y - x|) dmu(y)` at each query point; coincidences
/// with atoms use `rule`. For radial measures each query is a one-element
/// vector holding a radius.
pub fn potential<T: Real>(
    kernel: &RadialKernel<T>,
    mu: &Measure<T>,
    query_points: &[Vec<T>],
    rule: DiagonalRule<T>,
) -> Result<PotentialField<T>> {
    let dim = mu.dim();
    let values: Vec<Result<T>> = query_points
        .par_iter()
        .map(|q| match mu {
            Measure::Particle(p) => {
                if q.len() != dim {
                    return Err(Error::InvalidArgument(
                        "query point has wrong dimension".into(),
                    ));
                }
                Ok(p.positions()
                    .iter()
                    .zip(p.weights())
                    .filter(|(_, &w)| w != T::zero())
                    .fold(T::zero(), |s, (x, &w)| {
                        s + w * particle_pair(kernel, dim, q, x, rule)
                    }))
            }
            Measure::Radial(r) => {
                if q.len() != 1 {
                    return Err(Error::InvalidArgument(
                        "radial query must be a single radius".into(),
                    ));
                }
                let mut s = T::zero();
                for (&rr, &m) in r.radii().iter().zip(r.masses()) {
                    if m != T::zero() {
                        s += m * radial_pair(kernel, dim, q[0], rr, rule)?;
                    }
                }
                Ok(s)
            }
        })
        .collect();
    Ok(PotentialField {
        query_points: query_points.to_vec(),
        values: values.into_iter().collect::<Result<_>>()?,
    })
}

/// `E(mu, nu) = int int g(|y - x|) dmu(x) dnu(y)`.
pub fn cross_energy<T: Real>(
    kernel: &RadialKernel<T>,
    mu: &Measure<T>,
    nu: &Measure<T>,
    rule: DiagonalRule<T>,
) -> Result<T> {
    if mu.dim() != nu.dim() {
        return Err(Error::InvalidArgument(
            "measures live in different dimensions".into(),
        ));
    }
    let dim = mu.dim();
    match (mu, nu) {
        (Measure::Particle(a), Measure::Particle(b)) => Ok(particle_cross(kernel, dim, a, b, rule)),
        (Measure::Radial(a), Measure::Radial(b)) => {
            let mut s = T::zero();
            for (&r, &m) in a.radii().iter().zip(a.masses()) {
                for (&q, &n) in b.radii().iter().zip(b.masses()) {
                    if m != T::zero() && n != T::zero() {
                        s += m * n * radial_pair(kernel, dim, r, q, rule)?;
                    }
                }
            }
            Ok(s)
        }
        _ => Err(Error::InvalidArgument(
            "cross energy between particle and radial measures is not supported".into(),
        )),
    }
}

fn particle_cross<T: Real>(
    kernel: &RadialKernel<T>,
    dim: usize,
    a: &ParticleMeasure<T>,
    b: &ParticleMeasure<T>,
    rule: DiagonalRule<T>,
) -> T {
    let rows: Vec<T> = a
        .positions()
        .par_iter()
        .zip(a.weights().par_iter())
        .map(|(x, &wx)| {
            if wx == T::zero() {
                return T::zero();
            }
            let s = b
                .positions()
                .iter()
                .zip(b.weights())
                .filter(|(_, &w)| w != T::zero())
                .fold(T::zero(), |s, (y, &wy)| {
                    s + wy * particle_pair(kernel, dim, x, y, rule)
                });
            wx * s
        })
        .collect();
    rows.into_iter().fold(T::zero(), |s, v| s + v)
}

/// `E(mu)` for a particle measure, evaluated pairwise without storing `G`.
pub fn particle_energy<T: Real>(
    kernel: &RadialKernel<T>,
    mu: &ParticleMeasure<T>,
    rule: DiagonalRule<T>,
) -> T {
    particle_cross(kernel, mu.dim(), mu, mu, rule)
}

/// `E(mu)` for a radial measure through the shell kernel.
pub fn radial_energy<T: Real>(
    kernel: &RadialKernel<T>,
    mu: &RadialMeasure<T>,
    rule: DiagonalRule<T>,
) -> Result<T> {
    let m = Measure::Radial(mu.clone());
    cross_energy(kernel, &m, &m, rule)
}
