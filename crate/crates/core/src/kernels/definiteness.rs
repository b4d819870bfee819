use super::hypotheses::{default_scan_grid, nonneg_tol, sample};
use super::RadialKernel;
use crate::error::{Error, Result};
use crate::geometry::GeometryConstants;
use crate::linalg::{finite_norm, sum_zero_min_eigen};
use crate::quadrature::{integrate, Tolerance};
use crate::real::{c, dist, Real};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// How (if at all) positive definiteness of a kernel was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PdCertificate {
    /// Globally subharmonic and nonincreasing toward its infimum.
    SubharmonicDecaying,
    /// Sampled radial Fourier transform is nonnegative.
    FourierPositive,
    /// Every sampled Gram matrix is PSD on sum-zero vectors.
    DiscretePSD,
    None,
}

/// A node set whose Gram matrix has the most negative sum-zero eigenvalue
/// found by the random search.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct PsdWitness<T> {
    pub nodes: Vec<Vec<T>>,
    pub min_eigenvalue: T,
    /// Relative to the Frobenius norm of the Gram matrix.
    pub relative: T,
    /// Sum-zero direction attaining `min_eigenvalue`.
    pub direction: Vec<T>,
}

const PSD_SEED: u64 = 0x005e_ed9d;
const SETS_PER_SCALE: usize = 4;
const SCALES: [f64; 3] = [0.1, 1.0, 10.0];
pub(crate) const PSD_REL_TOL: f64 = 1e-8;

/// Split off a convex attraction `t^beta`, `2 <= beta <= 4`.
///
/// Energies of such a term are convex on measures with barycenter at the
/// origin, so convexity there reduces to the remaining (repulsive) part.
/// Returns that remainder, or `None` if the kernel has no such term.
pub fn repulsive_part<T: Real>(kernel: &RadialKernel<T>) -> Option<RadialKernel<T>> {
    let convex_power = |p: T| p >= c(2.0) && p <= c(4.0);
    match kernel {
        RadialKernel::PowerSum { alpha, beta } if convex_power(*beta) => {
            Some(RadialKernel::power(-*alpha))
        }
        RadialKernel::Scaled { kernel, lambda } => {
            repulsive_part(kernel).map(|k| k.scaled(*lambda))
        }
        RadialKernel::Sum { terms } => {
            let is_attr = |t: &super::Term<T>| {
                t.coefficient > T::zero()
                    && matches!(t.kernel, RadialKernel::Power { exponent } if convex_power(exponent))
            };
            if !terms.iter().any(is_attr) {
                return None;
            }
            let rest: Vec<_> = terms.iter().filter(|t| !is_attr(t)).cloned().collect();
            if rest.is_empty() {
                None
            } else {
                Some(RadialKernel::Sum { terms: rest })
            }
        }
        _ => None,
    }
}

/// Positive-definiteness certificate.
///
/// Kernels of the form `h + t^beta` with `2 <= beta <= 4` are certified
/// through `h` (see [`repulsive_part`]). Checks run in order: subharmonic and
/// decaying on the default scan grid; nonnegative sampled Fourier transform
/// (only `N` in {1, 3} and bounded kernels); PSD Gram matrices on random node
/// sets of size `node_budget`.
pub fn pd_certificate<T: Real>(
    kernel: &RadialKernel<T>,
    dim: usize,
    node_budget: usize,
) -> Result<PdCertificate> {
    if node_budget < 3 {
        return Err(Error::InvalidArgument(
            "node_budget must be at least 3".into(),
        ));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let target = repulsive_part(kernel).unwrap_or_else(|| kernel.clone());
    if subharmonic_decaying(&target, dim)? {
        return Ok(PdCertificate::SubharmonicDecaying);
    }
    if let Some(samples) = fourier_transform_samples(&target, dim) {
        let scale = samples.first().map(|s| s.1.abs()).unwrap_or(T::zero());
        let tol = c::<T>(1e-8) * (T::one() + scale);
        if samples.iter().all(|s| s.1 >= -tol) {
            return Ok(PdCertificate::FourierPositive);
        }
    }
    match discrete_psd_witness(&target, dim, node_budget, PSD_SEED) {
        Some(_) => Ok(PdCertificate::None),
        None => Ok(PdCertificate::DiscretePSD),
    }
}

fn subharmonic_decaying<T: Real>(kernel: &RadialKernel<T>, dim: usize) -> Result<bool> {
    let grid = default_scan_grid::<T>();
    let mut prev: Option<T> = None;
    for &t in &grid {
        let s = sample(kernel, dim, t)?;
        if s.lap < -nonneg_tol(s.lap_scale) {
            return Ok(false);
        }
        if let Some(p) = prev {
            if s.g > p + nonneg_tol(p) {
                return Ok(false);
            }
        }
        prev = Some(s.g);
    }
    Ok(true)
}

/// Radial Fourier transform of `x -> g(|x|)` at log-spaced frequencies,
/// for `N = 1` (cosine transform) and `N = 3` (sine transform of `t g(t)`).
///
/// Returns `None` when the transform is not computed: other dimensions,
/// kernels unbounded at the origin, or kernels without fast decay.
pub fn fourier_transform_samples<T: Real>(
    kernel: &RadialKernel<T>,
    dim: usize,
) -> Option<Vec<(T, T)>> {
    if dim != 1 && dim != 3 {
        return None;
    }
    let g0 = kernel.value_at_zero();
    if !g0.finite() {
        return None;
    }
    let big: T = c(1e4);
    let mut cutoff = T::one();
    let decayed = |t: T| {
        kernel.value(t).abs() * t.powi(dim as i32 + 1) <= c::<T>(1e-12) * (T::one() + g0.abs())
    };
    while !decayed(cutoff) {
        cutoff *= c(2.0);
        if cutoff > big {
            return None;
        }
    }
    let tol = Tolerance::default();
    let geo = GeometryConstants::<T>::new(dim);
    let transform = |k: T| -> T {
        let pieces = ((k * cutoff / T::pi()).to_f64_lossy().ceil() as usize).max(1) + 1;
        let h = cutoff / T::from_count(pieces);
        let mut total = T::zero();
        for i in 0..pieces {
            let a = h * T::from_count(i);
            let b = a + h;
            total += if dim == 1 {
                integrate(|t: T| kernel.value(t) * (k * t).cos(), a, b, tol).value
            } else {
                integrate(|t: T| t * kernel.value(t) * (k * t).sin(), a, b, tol).value
            };
        }
        if dim == 1 {
            total * c(2.0)
        } else {
            total * geo.sphere_area / k
        }
    };
    Some(
        (0..30)
            .map(|i| {
                let k = c::<T>(0.05) * c::<T>(1.25).powi(i);
                (k, transform(k))
            })
            .collect(),
    )
}

fn psd_gram<T: Real>(kernel: &RadialKernel<T>, dim: usize, nodes: &[Vec<T>]) -> DMatrix<T> {
    let n = nodes.len();
    let g0 = kernel.value_at_zero();
    let diag = if g0.finite() {
        g0
    } else {
        let mut spacing = T::infinity();
        for i in 0..n {
            for j in 0..i {
                spacing = spacing.min(dist(&nodes[i], &nodes[j]));
            }
        }
        let h = spacing * c(0.5);
        let nn = T::from_count(dim);
        nn / h.powi(dim as i32) * kernel.moment(nn - T::one(), T::zero(), h)
    };
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag
        } else {
            kernel.value(dist(&nodes[i], &nodes[j]))
        }
    })
}

/// Random search for a node set on which the Gram matrix fails to be PSD on
/// sum-zero vectors. Returns the most negative case, or `None` if every set
/// passes the relative tolerance `1e-8`.
pub fn discrete_psd_witness<T: Real>(
    kernel: &RadialKernel<T>,
    dim: usize,
    node_budget: usize,
    seed: u64,
) -> Option<PsdWitness<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: Option<PsdWitness<T>> = None;
    for &scale in &SCALES {
        for _ in 0..SETS_PER_SCALE {
            let nodes: Vec<Vec<T>> = (0..node_budget)
                .map(|_| {
                    (0..dim)
                        .map(|_| c(scale * rng.random_range(-1.0..1.0)))
                        .collect()
                })
                .collect();
            let g = psd_gram(kernel, dim, &nodes);
            if g.iter().any(|x| !x.finite()) {
                continue;
            }
            let norm = finite_norm(&g);
            let Some((lam, dir)) = sum_zero_min_eigen(&g) else {
                continue;
            };
            let rel = lam / norm.max(c(1e-30));
            if rel < -c::<T>(PSD_REL_TOL) && worst.as_ref().is_none_or(|w| rel < w.relative) {
                worst = Some(PsdWitness {
                    nodes,
                    min_eigenvalue: lam,
                    relative: rel,
                    direction: dir,
                });
            }
        }
    }
    worst
}
