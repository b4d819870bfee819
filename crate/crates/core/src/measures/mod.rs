//! Discrete probability measures and the transformations applied to them.

mod csv_io;
mod mollify;
mod support;

pub(crate) use csv_io::fmt as fmt_number;
pub use csv_io::{read_particle_csv, read_radial_csv, write_density_csv, write_measure_csv};
pub use mollify::{
    approximate_smooth, approximate_smooth_radial, mollify, mollify_radial, smoothing_radius,
    Density, GridDensity, Mollifier, RadialDensity,
};
pub use support::{support_structure, Gap, SupportReport};

use crate::error::{Error, Result};
use crate::real::{c, norm, Real};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Weights at or below this value are numerical zeros.
pub const WEIGHT_FLOOR: f64 = 1e-10;

/// Radii within `RADIAL_MERGE_TOL * (1 + r)` are binned into one shell.
pub const RADIAL_MERGE_TOL: f64 = 1e-9;

const MASS_TOL: f64 = 1e-9;

fn check_weights<T: Real>(weights: &[T]) -> Result<T> {
    if weights.is_empty() {
        return Err(Error::InvalidArgument(
            "a measure needs at least one atom".into(),
        ));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= T::zero()) || !w.finite()) {
        return Err(Error::InvalidArgument(format!(
            "weights must be finite and nonnegative (got {w})"
        )));
    }
    let total = weights.iter().fold(T::zero(), |s, &w| s + w);
    if (total - T::one()).abs() > c(MASS_TOL) {
        return Err(Error::InvalidArgument(format!(
            "weights sum to {total}, expected 1"
        )));
    }
    Ok(total)
}

/// Atomic probability measure in `R^N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct ParticleMeasure<T> {
    dim: usize,
    positions: Vec<Vec<T>>,
    weights: Vec<T>,
}

impl<T: Real> ParticleMeasure<T> {
    /// Validates and normalises; coincident atoms are merged by summing
    /// their weights.
    pub fn new(dim: usize, positions: Vec<Vec<T>>, weights: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if positions.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} positions but {} weights",
                positions.len(),
                weights.len()
            )));
        }
        if let Some(p) = positions
            .iter()
            .find(|p| p.len() != dim || p.iter().any(|x| !x.finite()))
        {
            return Err(Error::InvalidArgument(format!(
                "bad position {p:?} for dimension {dim}"
            )));
        }
        let total = check_weights(&weights)?;
        let mut merged_pos: Vec<Vec<T>> = Vec::with_capacity(positions.len());
        let mut merged_w: Vec<T> = Vec::with_capacity(weights.len());
        for (p, w) in positions.into_iter().zip(weights) {
            match merged_pos.iter().position(|q| *q == p) {
                Some(i) => merged_w[i] += w,
                None => {
                    merged_pos.push(p);
                    merged_w.push(w);
                }
            }
        }
        merged_w.iter_mut().for_each(|w| *w /= total);
        Ok(ParticleMeasure {
            dim,
            positions: merged_pos,
            weights: merged_w,
        })
    }

    pub fn dirac(point: Vec<T>) -> Result<Self> {
        let dim = point.len();
        Self::new(dim, vec![point], vec![T::one()])
    }

    pub fn uniform(dim: usize, positions: Vec<Vec<T>>) -> Result<Self> {
        let n = positions.len();
        let w = T::one() / T::from_count(n.max(1));
        Self::new(dim, positions, vec![w; n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn positions(&self) -> &[Vec<T>] {
        &self.positions
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// `sum_i w_i x_i`.
    pub fn barycenter(&self) -> Vec<T> {
        let mut b = vec![T::zero(); self.dim];
        for (p, &w) in self.positions.iter().zip(&self.weights) {
            for (bk, &x) in b.iter_mut().zip(p) {
                *bk += w * x;
            }
        }
        b
    }

    /// Translate so that the barycenter is at the origin.
    pub fn recenter(&self) -> Self {
        let b = self.barycenter();
        let positions = self
            .positions
            .iter()
            .map(|p| p.iter().zip(&b).map(|(&x, &y)| x - y).collect())
            .collect();
        ParticleMeasure {
            dim: self.dim,
            positions,
            weights: self.weights.clone(),
        }
    }

    /// Pushforward under `x -> (1 + eps) x`.
    pub fn dilate(&self, eps: T) -> Result<Self> {
        if !(eps > -T::one()) {
            return Err(Error::InvalidArgument(format!(
                "dilation needs eps > -1 (got {eps})"
            )));
        }
        let f = T::one() + eps;
        Ok(ParticleMeasure {
            dim: self.dim,
            positions: self
                .positions
                .iter()
                .map(|p| p.iter().map(|&x| x * f).collect())
                .collect(),
            weights: self.weights.clone(),
        })
    }

    /// `(1 - theta) self + theta other`, with atoms of both kept.
    pub fn mix(&self, other: &Self, theta: T) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::InvalidArgument(
                "mixing measures of different dimension".into(),
            ));
        }
        let mut pos = self.positions.clone();
        let mut w: Vec<T> = self
            .weights
            .iter()
            .map(|&x| x * (T::one() - theta))
            .collect();
        pos.extend(other.positions.iter().cloned());
        w.extend(other.weights.iter().map(|&x| x * theta));
        Self::new(self.dim, pos, w)
    }

    /// Drop atoms whose weight is at most [`WEIGHT_FLOOR`] and renormalise.
    pub fn pruned(&self) -> Self {
        let floor = c::<T>(WEIGHT_FLOOR);
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.weights[i] > floor)
            .collect();
        let total = keep.iter().fold(T::zero(), |s, &i| s + self.weights[i]);
        ParticleMeasure {
            dim: self.dim,
            positions: keep.iter().map(|&i| self.positions[i].clone()).collect(),
            weights: keep.iter().map(|&i| self.weights[i] / total).collect(),
        }
    }

    /// Smallest pairwise distance between atoms (`inf` for a single atom).
    pub fn min_separation(&self) -> T {
        let mut m = T::infinity();
        for i in 0..self.len() {
            for j in 0..i {
                m = m.min(crate::real::dist(&self.positions[i], &self.positions[j]));
            }
        }
        m
    }
}

/// Radial probability measure: masses on concentric spheres.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct RadialMeasure<T> {
    dim: usize,
    radii: Vec<T>,
    masses: Vec<T>,
}

impl<T: Real> RadialMeasure<T> {
    /// Radii must be nonnegative and strictly increasing.
    pub fn new(dim: usize, radii: Vec<T>, masses: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if radii.len() != masses.len() {
            return Err(Error::InvalidArgument(
                "radii and masses differ in length".into(),
            ));
        }
        if radii.first().is_some_and(|r| !(*r >= T::zero()))
            || radii.windows(2).any(|w| !(w[1] > w[0]))
        {
            return Err(Error::InvalidArgument(
                "radii must be nonnegative and strictly increasing".into(),
            ));
        }
        let total = check_weights(&masses)?;
        Ok(RadialMeasure {
            dim,
            radii,
            masses: masses.into_iter().map(|m| m / total).collect(),
        })
    }

    /// Uniform measure on the sphere of radius `r`.
    pub fn sphere(dim: usize, r: T) -> Result<Self> {
        Self::new(dim, vec![r], vec![T::one()])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn radii(&self) -> &[T] {
        &self.radii
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn dilate(&self, eps: T) -> Result<Self> {
        if !(eps > -T::one()) {
            return Err(Error::InvalidArgument(format!(
                "dilation needs eps > -1 (got {eps})"
            )));
        }
        let f = T::one() + eps;
        Ok(RadialMeasure {
            dim: self.dim,
            radii: self.radii.iter().map(|&r| r * f).collect(),
            masses: self.masses.clone(),
        })
    }

    /// Particle cloud with `count` points per shell drawn uniformly on each
    /// sphere, for rendering a radial measure as atoms.
    pub fn sample_particles(&self, count: usize, seed: u64) -> Result<ParticleMeasure<T>> {
        let count = count.max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pos = Vec::new();
        let mut w = Vec::new();
        let each = T::from_count(count);
        for (&r, &m) in self.radii.iter().zip(&self.masses) {
            for _ in 0..count {
                let mut v: Vec<f64> = (0..self.dim)
                    .map(|_| {
                        let u1: f64 = rng.random_range(1e-300..1.0);
                        let u2: f64 = rng.random();
                        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                    })
                    .collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
                v.iter_mut().for_each(|x| *x /= n);
                pos.push(v.into_iter().map(|x| c::<T>(x) * r).collect());
                w.push(m / each);
            }
        }
        ParticleMeasure::new(self.dim, pos, w)
    }
}

/// Either representation, for operations defined on both.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum Measure<T> {
    Particle(ParticleMeasure<T>),
    Radial(RadialMeasure<T>),
}

impl<T: Real> Measure<T> {
    pub fn dim(&self) -> usize {
        match self {
            Measure::Particle(m) => m.dim(),
            Measure::Radial(m) => m.dim(),
        }
    }
}

impl<T: Real> From<ParticleMeasure<T>> for Measure<T> {
    fn from(m: ParticleMeasure<T>) -> Self {
        Measure::Particle(m)
    }
}

impl<T: Real> From<RadialMeasure<T>> for Measure<T> {
    fn from(m: RadialMeasure<T>) -> Self {
        Measure::Radial(m)
    }
}

/// Average of the rotations of `mu` about the origin, computed exactly: each
/// atom of weight `w` at radius `|x|` becomes mass `w` on the sphere of that
/// radius, with radii equal within [`RADIAL_MERGE_TOL`] merged.
///
/// `mu` must be recentered (barycenter at the origin).
pub fn rotation_average<T: Real>(mu: &ParticleMeasure<T>) -> Result<RadialMeasure<T>> {
    let b = mu.barycenter();
    let scale = mu.positions().iter().fold(T::one(), |m, p| m.max(norm(p)));
    if norm(&b) > c::<T>(1e-9) * scale {
        return Err(Error::Precondition(format!(
            "rotation average needs a recentered measure (barycenter norm {})",
            norm(&b)
        )));
    }
    let mut pairs: Vec<(T, T)> = mu
        .positions()
        .iter()
        .map(|p| norm(p))
        .zip(mu.weights().iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut radii: Vec<T> = Vec::new();
    let mut masses: Vec<T> = Vec::new();
    for (r, w) in pairs {
        match radii.last() {
            Some(&last) if r - last <= c::<T>(RADIAL_MERGE_TOL) * (T::one() + last) => {
                *masses.last_mut().expect("parallel vectors") += w;
            }
            _ => {
                radii.push(r);
                masses.push(w);
            }
        }
    }
    RadialMeasure::new(mu.dim(), radii, masses)
}
