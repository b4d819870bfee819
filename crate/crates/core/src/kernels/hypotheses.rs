use super::{pd_certificate, PdCertificate, RadialKernel};
use crate::error::{Error, Result};
use crate::real::{c, Real};
use serde::Serialize;

/// Node budget used for the certificate embedded in [`HypothesisReport`].
pub const REPORT_NODE_BUDGET: usize = 8;

/// Number of finest dyadic octaves over which the limsup is estimated.
const LIMSUP_OCTAVES: usize = 3;

/// Asymptotic behaviour of `|g'(t)| t^N` along the finest octaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimsupTrend {
    Vanishing,
    Positive,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct HypothesisReport<T> {
    pub dimension: usize,
    /// `int_0^1 g(t) t^(N-1) dt`; `+inf` when `g` is not locally integrable.
    pub l1loc_integral: T,
    pub l1loc_finite: bool,
    pub r_star: T,
    #[serde(rename = "H_satisfied")]
    pub h_satisfied: bool,
    pub limsup_estimate: T,
    pub limsup_trend: LimsupTrend,
    pub globally_subharmonic: bool,
    pub strictly_subharmonic_near_0: bool,
    pub pd_certificate: PdCertificate,
    pub scan_t_min: T,
    pub scan_t_max: T,
}

/// 480 log-spaced points on `[1e-6, 1e2]`.
pub fn default_scan_grid<T: Real>() -> Vec<T> {
    log_grid(c(1e-6), c(1e2), 480)
}

pub fn log_grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * T::from_count(i) / T::from_count(n - 1)).exp())
        .collect()
}

/// Tolerance for "x >= 0" where `scale` is the magnitude of the terms that
/// produced `x`.
pub(crate) fn nonneg_tol<T: Real>(scale: T) -> T {
    c::<T>(1e-9) * (T::one() + scale.abs())
}

pub(crate) struct Sample<T> {
    pub t: T,
    pub g: T,
    pub d1: T,
    pub d2: T,
    pub lap: T,
    pub lap_scale: T,
}

pub(crate) fn sample<T: Real>(kernel: &RadialKernel<T>, dim: usize, t: T) -> Result<Sample<T>> {
    let g = kernel.value(t);
    let d1 = kernel.d1(t);
    let d2 = kernel.d2(t);
    if !g.finite() || !d1.finite() || !d2.finite() {
        return Err(Error::NonFinite {
            t: t.to_f64_lossy(),
        });
    }
    let (lap, lap_scale) = kernel.laplacian_parts(dim, t);
    Ok(Sample {
        t,
        g,
        d1,
        d2,
        lap,
        lap_scale,
    })
}

fn validate_grid<T: Real>(grid: &[T]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidArgument(
            "scan grid needs at least two points".into(),
        ));
    }
    if !(grid[0] > T::zero()) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "scan grid must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Sample the structural hypotheses on `scan_grid`.
///
/// `r_star` is the last grid point up to which `g' <= 0`, `g'' >= 0` and the
/// radial Laplacian is nonnegative at every sample (zero if the first sample
/// already fails). The limsup of `|g'(t)| t^N` is estimated by the maximum
/// over the finest octaves of a dyadic sequence, and classified by the
/// log-log slope of that sequence.
pub fn check_hypotheses<T: Real>(
    kernel: &RadialKernel<T>,
    dim: usize,
    scan_grid: &[T],
) -> Result<HypothesisReport<T>> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    validate_grid(scan_grid)?;
    let samples = scan_grid
        .iter()
        .map(|&t| sample(kernel, dim, t))
        .collect::<Result<Vec<_>>>()?;

    let mut r_star = T::zero();
    for s in &samples {
        let ok = s.d1 <= nonneg_tol(s.d1)
            && s.d2 >= -nonneg_tol(s.d2)
            && s.lap >= -nonneg_tol(s.lap_scale);
        if !ok {
            break;
        }
        r_star = s.t;
    }
    let globally_subharmonic = samples.iter().all(|s| s.lap >= -nonneg_tol(s.lap_scale));

    let t_min = scan_grid[0];
    let t_max = scan_grid[scan_grid.len() - 1];
    let near_zero = t_min * c(16.0);
    let strictly_subharmonic_near_0 = samples
        .iter()
        .filter(|s| s.t <= near_zero)
        .all(|s| s.lap > c::<T>(1e-12) * s.lap_scale);

    let (limsup_estimate, limsup_trend) = limsup(kernel, dim, t_min, t_max)?;

    let l1loc_integral = kernel.moment(T::from_count(dim - 1), T::zero(), T::one());
    let l1loc_finite = l1loc_integral.finite();

    Ok(HypothesisReport {
        dimension: dim,
        l1loc_integral,
        l1loc_finite,
        r_star,
        h_satisfied: r_star > T::zero() && l1loc_finite,
        limsup_estimate,
        limsup_trend,
        globally_subharmonic,
        strictly_subharmonic_near_0,
        pd_certificate: pd_certificate(kernel, dim, REPORT_NODE_BUDGET)?,
        scan_t_min: t_min,
        scan_t_max: t_max,
    })
}

fn limsup<T: Real>(
    kernel: &RadialKernel<T>,
    dim: usize,
    t_min: T,
    t_max: T,
) -> Result<(T, LimsupTrend)> {
    let mut ts = Vec::new();
    let mut t = t_max;
    while t >= t_min {
        ts.push(t);
        t *= c(0.5);
    }
    let vals: Vec<T> = ts
        .iter()
        .map(|&t| {
            let d = kernel.d1(t);
            if d.finite() {
                Ok(d.abs() * t.powi(dim as i32))
            } else {
                Err(Error::NonFinite {
                    t: t.to_f64_lossy(),
                })
            }
        })
        .collect::<Result<_>>()?;
    let n = vals.len();
    let k = LIMSUP_OCTAVES.min(n);
    let estimate = vals[n - k..].iter().fold(T::zero(), |m, &v| m.max(v));

    // slope of log v against log t over the finest octaves
    let fit = 6.min(n);
    let pts: Vec<(f64, f64)> = ts[n - fit..]
        .iter()
        .zip(&vals[n - fit..])
        .filter(|(_, v)| **v > T::zero())
        .map(|(t, v)| (t.to_f64_lossy().ln(), v.to_f64_lossy().ln()))
        .collect();
    if pts.len() < 2 {
        return Ok((estimate, LimsupTrend::Vanishing));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    let trend = if slope > 0.1 {
        LimsupTrend::Vanishing
    } else if slope < -0.1 {
        LimsupTrend::Unbounded
    } else {
        LimsupTrend::Positive
    };
    Ok((estimate, trend))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        default_scan_grid()
    }

    #[test]
    fn newtonian_quadratic() {
        let k = RadialKernel::<f64>::power_sum(1.0, 2.0);
        let rep = check_hypotheses(&k, 3, &grid()).unwrap();
        assert!(rep.h_satisfied);
        assert!(rep.r_star > 0.5);
        assert!(rep.globally_subharmonic);
        assert!(rep.strictly_subharmonic_near_0);
        assert_eq!(rep.limsup_trend, LimsupTrend::Vanishing);
        assert!(rep.limsup_estimate < 1e-4);
        assert!((rep.l1loc_integral - (0.5 + 0.2)).abs() < 1e-14);
        assert_eq!(rep.pd_certificate, PdCertificate::SubharmonicDecaying);
    }

    #[test]
    fn limsup_unbounded_for_strong_singularity() {
        let k = RadialKernel::<f64>::power_sum(2.5, 2.0);
        let rep = check_hypotheses(&k, 3, &grid()).unwrap();
        assert_eq!(rep.limsup_trend, LimsupTrend::Unbounded);
        // 2.5 t^-0.5 at the finest dyadic point
        assert!(rep.limsup_estimate > 1e3);
    }

    #[test]
    fn limsup_positive_at_threshold() {
        let k = RadialKernel::<f64>::power_sum(2.0, 2.0);
        let rep = check_hypotheses(&k, 3, &grid()).unwrap();
        assert_eq!(rep.limsup_trend, LimsupTrend::Positive);
        assert!((rep.limsup_estimate - 2.0).abs() < 1e-6);
    }

    #[test]
    fn quadratic_fails_h() {
        let k = RadialKernel::<f64>::power(2.0);
        let rep = check_hypotheses(&k, 2, &grid()).unwrap();
        assert!(!rep.h_satisfied);
        assert_eq!(rep.r_star, 0.0);
    }

    #[test]
    fn integrability_threshold() {
        let ok = check_hypotheses(&RadialKernel::<f64>::power_sum(2.9, 2.0), 3, &grid()).unwrap();
        assert!(ok.l1loc_finite);
        let bad = check_hypotheses(&RadialKernel::<f64>::power_sum(3.1, 2.0), 3, &grid()).unwrap();
        assert!(!bad.l1loc_finite);
        assert!(!bad.h_satisfied);
    }

    #[test]
    fn subharmonicity_flips_with_alpha() {
        for n in [3usize, 4, 5] {
            let thr = n as f64 - 2.0;
            let above =
                check_hypotheses(&RadialKernel::<f64>::power_sum(thr + 0.2, 2.0), n, &grid())
                    .unwrap();
            assert!(above.globally_subharmonic, "n={n}");
            let below =
                check_hypotheses(&RadialKernel::<f64>::power_sum(thr - 0.2, 2.0), n, &grid())
                    .unwrap();
            assert!(!below.globally_subharmonic, "n={n}");
        }
    }

    #[test]
    fn piecewise_cube_plateau() {
        let k = RadialKernel::<f64>::piecewise_cube();
        let rep = check_hypotheses(&k, 1, &grid()).unwrap();
        assert!(rep.h_satisfied);
        assert!(rep.r_star <= 1.0 && rep.r_star > 0.95);
        assert_eq!(rep.pd_certificate, PdCertificate::None);
    }

    #[test]
    fn rejects_bad_grid() {
        let k = RadialKernel::<f64>::power_sum(1.0, 2.0);
        assert!(check_hypotheses(&k, 3, &[1.0]).is_err());
        assert!(check_hypotheses(&k, 3, &[0.0, 1.0]).is_err());
        assert!(check_hypotheses(&k, 3, &[2.0, 1.0]).is_err());
    }
}
