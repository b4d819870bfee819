use super::{ParticleMeasure, RadialMeasure};
use crate::energy::shell_average_compact;
use crate::error::{Error, Result};
use crate::geometry::GeometryConstants;
use crate::kernels::RadialKernel;
use crate::quadrature::{integrate, Tolerance};
use crate::real::{c, Real};
use serde::Serialize;

/// Radial bump of radius `rho`: flat on `|x| <= s0 rho`, then a `C^inf`
/// step down to zero at `|x| = rho`, with `s0 = 1 - 1/(2N)`.
///
/// The flat core keeps `sup phi_rho <= 2 / (omega_N rho^N)` in every
/// dimension; the classical `exp(-1/(1-s^2))` bump exceeds that bound for
/// `N >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct Mollifier<T> {
    pub dim: usize,
    pub radius: T,
    plateau: T,
    normalizer: T,
}

fn smooth_step<T: Real>(u: T) -> T {
    // 0 for u <= 0, 1 for u >= 1
    let f = |x: T| {
        if x > T::zero() {
            (-T::one() / x).exp()
        } else {
            T::zero()
        }
    };
    let (a, b) = (f(u), f(T::one() - u));
    if a + b == T::zero() {
        return T::zero();
    }
    a / (a + b)
}

impl<T: Real> Mollifier<T> {
    pub fn new(dim: usize, radius: T) -> Result<Self> {
        if dim == 0 || !(radius > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "mollifier needs dim >= 1 and radius > 0 (got {dim}, {radius})"
            )));
        }
        let plateau = T::one() - T::one() / (c::<T>(2.0) * T::from_count(dim));
        let mut m = Mollifier {
            dim,
            radius,
            plateau,
            normalizer: T::one(),
        };
        let geo = GeometryConstants::<T>::new(dim);
        let k = dim as i32 - 1;
        let core = plateau.powi(dim as i32) / T::from_count(dim);
        let tail = integrate(
            |s: T| m.profile(s) * s.powi(k),
            plateau,
            T::one(),
            Tolerance::default(),
        )
        .value;
        m.normalizer = geo.sphere_area * radius.powi(dim as i32) * (core + tail);
        Ok(m)
    }

    /// Unnormalised profile at `s = |x| / rho`.
    pub fn profile(&self, s: T) -> T {
        if s <= self.plateau {
            T::one()
        } else if s >= T::one() {
            T::zero()
        } else {
            smooth_step((T::one() - s) / (T::one() - self.plateau))
        }
    }

    /// Density of the continuous mollifier at distance `t` from its center.
    pub fn density(&self, t: T) -> T {
        self.profile(t / self.radius) / self.normalizer
    }

    /// Maximum of [`Mollifier::density`].
    pub fn sup(&self) -> T {
        T::one() / self.normalizer
    }

    /// `2 / (omega_N rho^N)`.
    pub fn sup_bound(&self) -> T {
        c::<T>(2.0)
            / (GeometryConstants::<T>::new(self.dim).omega * self.radius.powi(self.dim as i32))
    }
}

/// Cell densities on a uniform Cartesian grid (row-major, last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct GridDensity<T> {
    pub dim: usize,
    /// Corner of the first cell.
    pub origin: Vec<T>,
    pub spacing: T,
    pub shape: Vec<usize>,
    pub cells: Vec<T>,
}

impl<T: Real> GridDensity<T> {
    pub fn cell_volume(&self) -> T {
        self.spacing.powi(self.dim as i32)
    }

    pub fn total_mass(&self) -> T {
        self.cells.iter().fold(T::zero(), |s, &d| s + d) * self.cell_volume()
    }

    pub fn sup(&self) -> T {
        self.cells.iter().fold(T::zero(), |m, &d| m.max(d))
    }

    fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for k in (0..self.dim).rev() {
            idx[k] = flat % self.shape[k];
            flat /= self.shape[k];
        }
        idx
    }

    pub fn cell_center(&self, flat: usize) -> Vec<T> {
        self.unravel(flat)
            .into_iter()
            .zip(&self.origin)
            .map(|(i, &o)| o + (T::from_count(i) + c(0.5)) * self.spacing)
            .collect()
    }

    /// Cells with positive density as a particle measure at the cell centers.
    pub fn to_particles(&self) -> Result<ParticleMeasure<T>> {
        let vol = self.cell_volume();
        let (pos, w): (Vec<_>, Vec<_>) = (0..self.cells.len())
            .filter(|&i| self.cells[i] > T::zero())
            .map(|i| (self.cell_center(i), self.cells[i] * vol))
            .unzip();
        let total = w.iter().fold(T::zero(), |s, &x| s + x);
        ParticleMeasure::new(self.dim, pos, w.into_iter().map(|x| x / total).collect())
    }
}

/// Radial density sampled on uniform radial cells `[start + i h, start + (i+1) h]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct RadialDensity<T> {
    pub dim: usize,
    pub start: T,
    pub spacing: T,
    pub density: Vec<T>,
}

impl<T: Real> RadialDensity<T> {
    pub fn cell_center(&self, i: usize) -> T {
        self.start + (T::from_count(i) + c(0.5)) * self.spacing
    }

    pub fn cell_volume(&self, i: usize) -> T {
        let a = self.start + T::from_count(i) * self.spacing;
        GeometryConstants::<T>::new(self.dim).shell_volume(a, a + self.spacing)
    }

    pub fn total_mass(&self) -> T {
        (0..self.density.len()).fold(T::zero(), |s, i| s + self.density[i] * self.cell_volume(i))
    }

    pub fn sup(&self) -> T {
        self.density.iter().fold(T::zero(), |m, &d| m.max(d))
    }

    /// Cell masses placed on shells at the cell centers.
    pub fn to_radial_measure(&self) -> Result<RadialMeasure<T>> {
        let (r, m): (Vec<_>, Vec<_>) = (0..self.density.len())
            .filter(|&i| self.density[i] > T::zero())
            .map(|i| (self.cell_center(i), self.density[i] * self.cell_volume(i)))
            .unzip();
        let total = m.iter().fold(T::zero(), |s, &x| s + x);
        RadialMeasure::new(self.dim, r, m.into_iter().map(|x| x / total).collect())
    }
}

/// A mollified measure in either representation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum Density<T> {
    Grid(GridDensity<T>),
    Radial(RadialDensity<T>),
}

impl<T: Real> Density<T> {
    pub fn sup(&self) -> T {
        match self {
            Density::Grid(d) => d.sup(),
            Density::Radial(d) => d.sup(),
        }
    }

    pub fn total_mass(&self) -> T {
        match self {
            Density::Grid(d) => d.total_mass(),
            Density::Radial(d) => d.total_mass(),
        }
    }
}

/// Largest grid a mollification may allocate.
pub const MAX_GRID_CELLS: usize = 1 << 24;

fn check_spacing<T: Real>(rho: T, spacing: T) -> Result<()> {
    if !(rho > T::zero()) || !(spacing > T::zero()) {
        return Err(Error::InvalidArgument(
            "radius and spacing must be positive".into(),
        ));
    }
    if spacing > rho * c(0.25) * (T::one() + c(1e-12)) {
        return Err(Error::GridTooCoarse {
            spacing: spacing.to_f64_lossy(),
            radius: rho.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Convolution of `mu` with the mollifier of radius `rho`, sampled at the
/// centers of a grid of the given spacing (`spacing <= rho / 4`).
///
/// Each atom's bump is normalised on the grid so that it carries exactly the
/// atom's weight.
pub fn mollify<T: Real>(mu: &ParticleMeasure<T>, rho: T, spacing: T) -> Result<GridDensity<T>> {
    check_spacing(rho, spacing)?;
    let dim = mu.dim();
    let moll = Mollifier::new(dim, rho)?;
    let mut lo = vec![T::infinity(); dim];
    let mut hi = vec![-T::infinity(); dim];
    for (p, _) in mu
        .positions()
        .iter()
        .zip(mu.weights())
        .filter(|(_, &w)| w > T::zero())
    {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let origin: Vec<T> = lo.iter().map(|&l| l - rho - spacing).collect();
    let extents: Vec<f64> = (0..dim)
        .map(|k| {
            ((hi[k] - lo[k] + c::<T>(2.0) * (rho + spacing)) / spacing)
                .to_f64_lossy()
                .ceil()
                + 1.0
        })
        .collect();
    let total_f: f64 = extents.iter().product();
    if !(total_f <= MAX_GRID_CELLS as f64) {
        return Err(Error::Precondition(format!(
            "mollifier grid needs {total_f:.3e} cells (limit {MAX_GRID_CELLS})"
        )));
    }
    let shape: Vec<usize> = extents.iter().map(|&e| e as usize).collect();
    let total: usize = shape.iter().product();
    let mut cells = vec![T::zero(); total];
    let vol = spacing.powi(dim as i32);

    let mut idx_buf: Vec<(usize, T)> = Vec::new();
    for (p, &w) in mu.positions().iter().zip(mu.weights()) {
        if w <= T::zero() {
            continue;
        }
        // index window of cells whose centers can lie within rho of p
        let ranges: Vec<(usize, usize)> = (0..dim)
            .map(|k| {
                let a = ((p[k] - rho - origin[k]) / spacing - c(0.5))
                    .to_f64_lossy()
                    .floor()
                    .max(0.0) as usize;
                let b = ((p[k] + rho - origin[k]) / spacing - c(0.5))
                    .to_f64_lossy()
                    .ceil() as usize;
                (a, b.min(shape[k] - 1))
            })
            .collect();
        idx_buf.clear();
        let mut cur: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        'cells: loop {
            let mut d2 = T::zero();
            let mut flat = 0usize;
            for k in 0..dim {
                let x = origin[k] + (T::from_count(cur[k]) + c(0.5)) * spacing - p[k];
                d2 += x * x;
                flat = flat * shape[k] + cur[k];
            }
            let v = moll.density(d2.sqrt());
            if v > T::zero() {
                idx_buf.push((flat, v));
            }
            for k in (0..dim).rev() {
                if cur[k] < ranges[k].1 {
                    cur[k] += 1;
                    continue 'cells;
                }
                cur[k] = ranges[k].0;
            }
            break;
        }
        let mass = idx_buf.iter().fold(T::zero(), |s, e| s + e.1) * vol;
        for &(flat, v) in &idx_buf {
            cells[flat] += w * v / mass;
        }
    }
    Ok(GridDensity {
        dim,
        origin,
        spacing,
        shape,
        cells,
    })
}

/// Radial analogue of [`mollify`]: the density of `mu * phi_rho` is radial
/// and is obtained from sphere averages of the mollifier profile.
pub fn mollify_radial<T: Real>(
    mu: &RadialMeasure<T>,
    rho: T,
    spacing: T,
) -> Result<RadialDensity<T>> {
    check_spacing(rho, spacing)?;
    let dim = mu.dim();
    let moll = Mollifier::new(dim, rho)?;
    let charged = || {
        mu.radii()
            .iter()
            .zip(mu.masses())
            .filter(|(_, &m)| m > T::zero())
            .map(|(&r, _)| r)
    };
    let rmin = charged().fold(T::infinity(), |a, r| a.min(r));
    let rmax = charged().fold(-T::infinity(), |a, r| a.max(r));
    let first = ((rmin - rho) / spacing).to_f64_lossy().floor().max(0.0) as usize;
    let start = T::from_count(first) * spacing;
    let count_f = ((rmax + rho - start) / spacing).to_f64_lossy().ceil() + 1.0;
    if !(count_f <= MAX_GRID_CELLS as f64) {
        return Err(Error::Precondition(format!(
            "mollifier grid needs {count_f:.3e} cells (limit {MAX_GRID_CELLS})"
        )));
    }
    let count = count_f as usize;
    let mut out = RadialDensity {
        dim,
        start,
        spacing,
        density: vec![T::zero(); count],
    };
    let vols: Vec<T> = (0..count).map(|i| out.cell_volume(i)).collect();
    let mut contrib: Vec<(usize, T)> = Vec::new();
    for (&r, &m) in mu.radii().iter().zip(mu.masses()) {
        if m <= T::zero() {
            continue;
        }
        contrib.clear();
        let a = ((r - rho - start) / spacing)
            .to_f64_lossy()
            .floor()
            .max(0.0) as usize;
        let b = (((r + rho - start) / spacing).to_f64_lossy().ceil() as usize).min(count - 1);
        for i in a..=b {
            let s = out.cell_center(i);
            let v = shell_average_compact(|t| moll.density(t), dim, r, s, rho);
            if v > T::zero() {
                contrib.push((i, v));
            }
        }
        let mass = contrib
            .iter()
            .fold(T::zero(), |acc, &(i, v)| acc + v * vols[i]);
        if !(mass > T::zero()) {
            return Err(Error::GridTooCoarse {
                spacing: spacing.to_f64_lossy(),
                radius: rho.to_f64_lossy(),
            });
        }
        for &(i, v) in &contrib {
            out.density[i] += m * v / mass;
        }
    }
    Ok(out)
}

fn check_vanishing_weight<T: Real>(kernel: &RadialKernel<T>, alpha: T) -> Result<()> {
    // g(t) t^alpha on t = 2^-20 .. 2^-40
    let h = |t: T| kernel.value(t) * t.powf(alpha);
    let coarse = h(c(2f64.powi(-20)));
    let fine = h(c(2f64.powi(-40)));
    if !(fine.abs() < c(1e-6)) || fine.abs() > coarse.abs() {
        return Err(Error::Precondition(format!(
            "g(t) t^alpha does not vanish at 0 (alpha = {alpha}, value {fine} at 2^-40)"
        )));
    }
    Ok(())
}

/// Smoothing radius of the approximation schedule: `rho = eps u / 3` where
/// `u` is the smallest root in `(0, r]` of `g(u) u^alpha = 1/j`.
pub fn smoothing_radius<T: Real>(
    kernel: &RadialKernel<T>,
    alpha: T,
    eps: T,
    j: usize,
    r: T,
) -> Result<T> {
    if j == 0 || !(eps > T::zero()) || !(r > T::zero()) {
        return Err(Error::InvalidArgument(
            "schedule needs j >= 1, eps > 0 and r > 0".into(),
        ));
    }
    check_vanishing_weight(kernel, alpha)?;
    let h = |u: T| kernel.value(u) * u.powf(alpha);
    let target = T::one() / T::from_count(j);
    let bracket = (eps * r / c(3.0)).to_f64_lossy();
    let grid = crate::kernels::log_grid_points(r * c(2f64.powi(-60)), r, 600);
    let mut prev = grid[0];
    if h(prev) >= target {
        return Err(Error::ScheduleNoRoot { bracket });
    }
    let mut found = None;
    for &u in &grid[1..] {
        if h(u) >= target {
            found = Some((prev, u));
            break;
        }
        prev = u;
    }
    let (mut lo, mut hi) = found.ok_or(Error::ScheduleNoRoot { bracket })?;
    for _ in 0..200 {
        let mid = (lo + hi) * c(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(eps * hi / c(3.0))
}

/// Dilate by `1 + eps` and mollify at the schedule radius for index `j`.
/// Returns the grid density and the radius used.
pub fn approximate_smooth<T: Real>(
    mu: &ParticleMeasure<T>,
    kernel: &RadialKernel<T>,
    alpha: T,
    eps: T,
    j: usize,
    r: T,
) -> Result<(GridDensity<T>, T)> {
    check_alpha(alpha, mu.dim())?;
    let rho = smoothing_radius(kernel, alpha, eps, j, r)?;
    let d = mollify(&mu.dilate(eps)?, rho, rho * c(0.25))?;
    Ok((d, rho))
}

/// Radial version of [`approximate_smooth`].
pub fn approximate_smooth_radial<T: Real>(
    mu: &RadialMeasure<T>,
    kernel: &RadialKernel<T>,
    alpha: T,
    eps: T,
    j: usize,
    r: T,
) -> Result<(RadialDensity<T>, T)> {
    check_alpha(alpha, mu.dim())?;
    let rho = smoothing_radius(kernel, alpha, eps, j, r)?;
    let d = mollify_radial(&mu.dilate(eps)?, rho, rho * c(0.25))?;
    Ok((d, rho))
}

fn check_alpha<T: Real>(alpha: T, dim: usize) -> Result<()> {
    if !(alpha > T::zero()) || !(alpha < T::from_count(dim)) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, {dim}), got {alpha}"
        )));
    }
    Ok(())
}
