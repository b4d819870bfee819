use super::DiagnosticReport;
use crate::error::{Error, Result};
use crate::geometry::unit_ball_volume;
use crate::quadrature::{integrate, Tolerance};
use crate::real::{c, Real};

/// Relative slack on the hierarchy `eta > K delta`, `d > K eta`, `r > K d`,
/// so that configurations built as exact powers of `1/K` are accepted.
pub const HIERARCHY_SLACK: f64 = 1e-12;

/// Polar angle (from `e1`) at which `|x - (r - eta) e1| = rho` on the sphere
/// of radius `r`, from `rho^2 = eta^2 + 4 r (r - eta) sin^2(theta/2)`.
fn band_angle<T: Real>(r: T, eta: T, rho: T) -> T {
    let s = ((rho - eta) * (rho + eta) / (c::<T>(4.0) * r * (r - eta))).sqrt();
    c::<T>(2.0) * s.min(T::one()).asin()
}

/// Surface measure of the spherical band `{x in dB(0, r) : |x - (r - eta) e1|
/// in (d, d + delta)}` divided by `(N - 1) omega_{N-1} d^(N-2) delta`.
///
/// Passes when the ratio lies in `[1/2, 2]`. The hierarchy
/// `eta > K delta, d > K eta, r > K d` is a precondition.
pub fn sphere_annulus_ratio<T: Real>(
    dim: usize,
    r: T,
    d: T,
    eta: T,
    delta: T,
    hierarchy: T,
) -> Result<DiagnosticReport<T>> {
    if dim < 2 {
        return Err(Error::InvalidArgument("the sphere band ratio needs N >= 2".into()));
    }
    if [r, d, eta, delta].iter().any(|x| !(*x > T::zero())) {
        return Err(Error::InvalidArgument(
            "r, d, eta and delta must be positive".into(),
        ));
    }
    let k = hierarchy * (T::one() - c(HIERARCHY_SLACK));
    if !(eta >= k * delta && d >= k * eta && r >= k * d) {
        return Err(Error::Precondition(format!(
            "hierarchy violated: need eta > K delta, d > K eta, r > K d with K = {hierarchy}"
        )));
    }
    let t1 = band_angle(r, eta, d);
    let t2 = band_angle(r, eta, d + delta);
    let p = dim as i32 - 2;
    let band = integrate(|th: T| th.sin().powi(p), t1, t2, Tolerance::default()).value;
    // (N-1) omega_{N-1} is the area of S^{N-2}
    let area_s = T::from_count(dim - 1) * unit_ball_volume::<T>(dim - 1);
    let measure = area_s * r.powi(dim as i32 - 1) * band;
    let denom = area_s * d.powi(p) * delta;
    let ratio = measure / denom;
    let mut rep = DiagnosticReport::new("sphere_annulus_ratio");
    rep.parameter("dimension", T::from_count(dim))
        .parameter("r", r)
        .parameter("d", d)
        .parameter("eta", eta)
        .parameter("delta", delta)
        .parameter("hierarchy", hierarchy)
        .parameter("band_measure", measure);
    rep.residual("ratio", ratio);
    let ok = ratio >= c(0.5) && ratio <= c(2.0);
    Ok(rep.finish(ok))
}
