use super::{atom_points, atom_weights, support_convexity, DiagnosticReport};
use crate::energy::{potential, shell_kernel, DiagonalRule};
use crate::error::{Error, Result};
use crate::geometry::{cap_fraction, GeometryConstants};
use crate::kernels::{
    check_hypotheses, default_scan_grid, log_grid_points, LimsupTrend, RadialKernel, Singularity,
};
use crate::measures::{mollify, mollify_radial, Measure, WEIGHT_FLOOR};
use crate::quadrature::{grading_for_exponent, integrate_graded, Tolerance};
use crate::real::{c, dist, Real};
use crate::solver::support_radius_bound;
use serde::Serialize;

/// Constants of the density bound, all computed from the kernel.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct LinftyConstants<T> {
    /// Confinement radius.
    pub big_r: T,
    /// `2 R + 1`.
    pub big_r_bar: T,
    /// Radius below which the local hypotheses hold.
    pub r: T,
    /// Quadratic decay constant of the potential of a small ball.
    pub c: T,
    /// Bound on the Hessian of the far-field potential on `[r, R_bar]`.
    pub c_op: T,
    pub m0: T,
    /// `2 max g'` on `(0, R_bar + 1)`.
    pub c_bd: T,
    pub alpha_est: T,
    pub limsup_trend: LimsupTrend,
    pub globally_subharmonic: bool,
    pub m: T,
}

fn linspace<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    (0..n)
        .map(|i| a + (b - a) * T::from_count(i) / T::from_count(n - 1))
        .collect()
}

/// `(c, M_0, M)` from the slope `|g'(r)|`, the far-field Hessian bound
/// `C_op` and the boundary constant `C_bd`:
/// `c = |g'(r)| omega_N r^(N-1) / 3`, `M_0 = 2 C_op / (N c)`, and `M = M_0`
/// when `m0_suffices`, else `max(M_0, 2 4^N C_bd / (omega_N alpha))`.
pub fn density_bound<T: Real>(
    dim: usize,
    r: T,
    abs_slope: T,
    c_op: T,
    c_bd: T,
    alpha_est: T,
    m0_suffices: bool,
) -> (T, T, T) {
    let omega = GeometryConstants::<T>::new(dim).omega;
    let n = T::from_count(dim);
    let cc = abs_slope * omega * r.powi(dim as i32 - 1) / c(3.0);
    let m0 = if cc > T::zero() {
        c::<T>(2.0) * c_op / (n * cc)
    } else {
        T::infinity()
    };
    let m = if m0_suffices {
        m0
    } else if alpha_est > T::zero() {
        let four_n = c::<T>(4.0).powi(dim as i32);
        m0.max(c::<T>(2.0) * four_n * c_bd / (omega * alpha_est))
    } else {
        T::infinity()
    };
    (cc, m0, m)
}

/// Compute `R, R_bar, r, c, C_op, M_0, C_bd` and `M`.
///
/// `M = max(M_0, 2 4^N C_bd / (omega_N alpha))` with `alpha` the limsup
/// estimate; when that limsup vanishes and the kernel is globally
/// subharmonic the second term is not needed and `M = M_0`.
pub fn linfty_constants<T: Real>(
    kernel: &RadialKernel<T>,
    dim: usize,
) -> Result<LinftyConstants<T>> {
    let hyp = check_hypotheses(kernel, dim, &default_scan_grid::<T>())?;
    let big_r = support_radius_bound(kernel, dim)?;
    let big_r_bar = c::<T>(2.0) * big_r + T::one();
    let r = hyp.r_star;
    if !(r > T::zero()) {
        return Err(Error::Precondition(
            "the local hypotheses fail at every scanned radius".into(),
        ));
    }
    let n = T::from_count(dim);
    let c_op = linspace(r, big_r_bar, 4001)
        .into_iter()
        .fold(T::zero(), |m, t| {
            m.max(kernel.d2(t).abs() + (n - T::one()) * kernel.d1(t).abs() / t)
        });
    let c_bd = c::<T>(2.0)
        * log_grid_points(c(1e-6), big_r_bar + T::one(), 4001)
            .into_iter()
            .fold(-T::infinity(), |m, t| m.max(kernel.d1(t)));
    let alpha_est = hyp.limsup_estimate;
    let m0_suffices = hyp.limsup_trend == LimsupTrend::Vanishing && hyp.globally_subharmonic;
    let (cc, m0, m) = density_bound(
        dim,
        r,
        kernel.d1(r).abs(),
        c_op,
        c_bd,
        alpha_est,
        m0_suffices,
    );
    Ok(LinftyConstants {
        big_r,
        big_r_bar,
        r,
        c: cc,
        c_op,
        m0,
        c_bd,
        alpha_est,
        limsup_trend: hyp.limsup_trend,
        globally_subharmonic: hyp.globally_subharmonic,
        m,
    })
}

fn put_constants<T: Real>(rep: &mut DiagnosticReport<T>, k: &LinftyConstants<T>) {
    rep.parameter("R", k.big_r)
        .parameter("R_bar", k.big_r_bar)
        .parameter("r", k.r)
        .parameter("c", k.c)
        .parameter("C_op", k.c_op)
        .parameter("M0", k.m0)
        .parameter("C", k.c_bd)
        .parameter("alpha_est", k.alpha_est)
        .parameter("M", k.m);
}

/// Largest spacing between consecutive nodes (1D coordinates or radii),
/// times 2.5: gaps narrower than this are grid artefacts.
pub fn default_gap_tolerance<T: Real>(mu: &Measure<T>) -> T {
    let mut xs: Vec<T> = match mu {
        Measure::Particle(p) if p.dim() == 1 => p.positions().iter().map(|x| x[0]).collect(),
        Measure::Radial(r) => r.radii().to_vec(),
        _ => return T::zero(),
    };
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let h = xs.windows(2).fold(T::zero(), |m, w| m.max(w[1] - w[0]));
    h * c(2.5)
}

fn mollified_sup<T: Real>(mu: &Measure<T>, rho: T) -> Result<T> {
    let spacing = rho * c(0.25);
    Ok(match mu {
        Measure::Particle(p) => mollify(p, rho, spacing)?.sup(),
        Measure::Radial(r) => mollify_radial(r, rho, spacing)?.sup(),
    })
}

/// Sup of the mollified measure along `rho_sequence`, compared with the
/// bound `M` (with slack 2).
///
/// Blow-up is detected from the log-log slope of the sup against `1/rho`
/// exceeding `N/2`. When the limsup of `|g'(t)| t^N` vanishes, unbounded
/// (for instance atomic) minimizers are admissible; the check then reports
/// "unbounded" as inapplicable instead of failing.
pub fn linfty_bound<T: Real>(
    kernel: &RadialKernel<T>,
    dim: usize,
    mu: &Measure<T>,
    rho_sequence: &[T],
) -> Result<DiagnosticReport<T>> {
    let mut rep = DiagnosticReport::new("linfty_bound");
    let k = match linfty_constants(kernel, dim) {
        Ok(k) => k,
        Err(e @ (Error::NotConfining { .. } | Error::Precondition(_))) => {
            return Ok(rep.inapplicable(format!("constants unavailable: {e}")));
        }
        Err(e) => return Err(e),
    };
    put_constants(&mut rep, &k);
    let vanishing = k.limsup_trend == LimsupTrend::Vanishing;
    if vanishing {
        let conv = support_convexity(mu, default_gap_tolerance(mu));
        if conv.failed() {
            return Ok(rep.inapplicable(
                "limsup vanishes and the support is not convex: only some minimizer is bounded",
            ));
        }
    }
    let mut rhos = rho_sequence.to_vec();
    rhos.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    if rhos.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two mollification radii".into(),
        ));
    }
    let omega = GeometryConstants::<T>::new(dim).omega;
    let mut sups = Vec::with_capacity(rhos.len());
    let mut indicators = Vec::with_capacity(rhos.len());
    for (i, &rho) in rhos.iter().enumerate() {
        let s = mollified_sup(mu, rho)?;
        let ind = omega * rho.powi(dim as i32) * s * c(0.5);
        rep.residual(&format!("sup_{i}"), s)
            .residual(&format!("indicator_{i}"), ind);
        rep.parameter(&format!("rho_{i}"), rho);
        sups.push(s);
        indicators.push(ind);
    }
    // least-squares slope of log sup against log(1/rho)
    let xs: Vec<f64> = rhos.iter().map(|r| -r.to_f64_lossy().ln()).collect();
    let ys: Vec<f64> = sups
        .iter()
        .map(|s| s.to_f64_lossy().max(1e-300).ln())
        .collect();
    let slope = fit_slope(&xs, &ys);
    rep.residual("blowup_slope", c(slope));
    let blowup = slope > 0.5 * dim as f64;
    if blowup {
        rep.note("verdict: unbounded");
        if vanishing {
            return Ok(rep.inapplicable(
                "mollified density is unbounded; with vanishing limsup singular minimizers are admissible",
            ));
        }
        return Ok(rep.finish(false));
    }
    rep.note("verdict: bounded");
    let bound = c::<T>(2.0) * k.m;
    let under = sups.iter().all(|&s| s <= bound);
    let monotone = indicators
        .windows(2)
        .all(|w| w[1] <= w[0] * (T::one() + c(1e-9)));
    if !under {
        rep.note("sup exceeds 2 M");
    }
    if !monotone {
        rep.note("blow-up indicator increases");
    }
    Ok(rep.finish(under && monotone))
}

pub(crate) fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Mass within distance `rho` of the support boundary against
/// `C / |g'(2 rho)|`.
pub fn boundary_mass<T: Real>(
    kernel: &RadialKernel<T>,
    dim: usize,
    mu: &Measure<T>,
    rho: T,
    tol: T,
) -> Result<DiagnosticReport<T>> {
    let mut rep = DiagnosticReport::new("boundary_mass");
    rep.parameter("rho", rho);
    let conv = support_convexity(mu, default_gap_tolerance(mu));
    if !conv.passed {
        return Ok(rep.inapplicable("support is not convex (or has no boundary representation)"));
    }
    let k = match linfty_constants(kernel, dim) {
        Ok(k) => k,
        Err(e @ (Error::NotConfining { .. } | Error::Precondition(_))) => {
            return Ok(rep.inapplicable(format!("constants unavailable: {e}")));
        }
        Err(e) => return Err(e),
    };
    put_constants(&mut rep, &k);
    let slope = kernel.d1(c::<T>(2.0) * rho);
    if slope >= T::zero() {
        return Ok(rep.inapplicable("g'(2 rho) >= 0: the bound is vacuous"));
    }
    let bound = k.c_bd / slope.abs();
    rep.parameter("bound", bound);
    let floor = c::<T>(WEIGHT_FLOOR);
    let masses: Vec<T> = match mu {
        Measure::Particle(p) => {
            let pts: Vec<(T, T)> = p
                .positions()
                .iter()
                .zip(p.weights())
                .map(|(x, &w)| (x[0], w))
                .collect();
            let sup: Vec<T> = pts
                .iter()
                .filter(|(_, w)| *w > floor)
                .map(|(x, _)| *x)
                .collect();
            let lo = sup.iter().fold(T::infinity(), |m, &x| m.min(x));
            let hi = sup.iter().fold(-T::infinity(), |m, &x| m.max(x));
            [lo, hi]
                .iter()
                .map(|&b| {
                    pts.iter()
                        .filter(|(x, _)| (*x - b).abs() <= rho)
                        .fold(T::zero(), |s, (_, w)| s + *w)
                })
                .collect()
        }
        Measure::Radial(r) => {
            let outer = r
                .radii()
                .iter()
                .zip(r.masses())
                .filter(|(_, &m)| m > floor)
                .map(|(&x, _)| x)
                .fold(T::zero(), |m, x| m.max(x));
            let mass = r
                .radii()
                .iter()
                .zip(r.masses())
                .fold(T::zero(), |acc, (&s, &m)| {
                    let frac = if s == T::zero() || outer == T::zero() {
                        if (outer - s).abs() <= rho {
                            T::one()
                        } else {
                            T::zero()
                        }
                    } else {
                        cap_fraction(
                            dim,
                            (s * s + outer * outer - rho * rho) / (c::<T>(2.0) * s * outer),
                        )
                    };
                    acc + m * frac
                });
            vec![mass]
        }
    };
    let worst = masses.iter().fold(T::zero(), |m, &x| m.max(x));
    rep.residual("boundary_mass_max", worst);
    rep.residual("margin", bound + tol - worst);
    Ok(rep.finish(worst <= bound + tol))
}

/// `psi(0) - psi(z)` for the (unnormalised) indicator of `B(0, r_tilde)`.
fn ball_potential_drop<T: Real>(
    kernel: &RadialKernel<T>,
    dim: usize,
    r_tilde: T,
    z: T,
) -> Result<T> {
    if z == T::zero() {
        return Ok(T::zero());
    }
    let area = GeometryConstants::<T>::new(dim).sphere_area;
    let k = dim as i32 - 1;
    let mut err = None;
    let mut f = |s: T| {
        let ks = match shell_kernel(kernel, dim, z, s) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                T::zero()
            }
        };
        (kernel.value(s) - ks) * s.powi(k)
    };
    let grading = match kernel.singularity() {
        Singularity::Power(a) => {
            grading_for_exponent((T::from_count(dim) - T::one() - a).to_f64_lossy())
        }
        Singularity::Log => 2,
        Singularity::Bounded => 1,
    };
    let tol = Tolerance::default();
    let inner = integrate_graded(&mut f, T::zero(), z, grading, tol).value;
    let outer = integrate_graded(|u: T| f(z + u), T::zero(), r_tilde - z, 2, tol).value;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(area * (inner + outer))
}

/// Quadratic decay of the potential of a small ball:
/// `psi(z) <= psi(0) - (c/2) |z|^2` with `c = |g'(r)| omega_N r^(N-1) / 3`.
pub fn ball_potential_decay<T: Real>(
    kernel: &RadialKernel<T>,
    dim: usize,
    r_tilde: T,
    z_samples: &[T],
) -> Result<DiagnosticReport<T>> {
    let hyp = check_hypotheses(kernel, dim, &default_scan_grid::<T>())?;
    if !(r_tilde > T::zero()) || r_tilde > hyp.r_star * (T::one() + c(1e-12)) {
        return Err(Error::Precondition(format!(
            "ball radius {r_tilde} must lie in (0, r_star = {}]",
            hyp.r_star
        )));
    }
    if z_samples
        .iter()
        .any(|&z| z < T::zero() || z > r_tilde * c(0.1))
    {
        return Err(Error::InvalidArgument(
            "sample offsets must lie in [0, r_tilde / 10]".into(),
        ));
    }
    let geo = GeometryConstants::<T>::new(dim);
    let cc = kernel.d1(r_tilde).abs() * geo.omega * r_tilde.powi(dim as i32 - 1) / c(3.0);
    let psi0 = geo.sphere_area * kernel.moment(T::from_count(dim) - T::one(), T::zero(), r_tilde);
    let mut rep = DiagnosticReport::new("ball_potential_decay");
    rep.parameter("r_tilde", r_tilde)
        .parameter("c", cc)
        .parameter("psi_0", psi0);
    let mut margin = T::infinity();
    let (mut cmin, mut cmax) = (T::infinity(), -T::infinity());
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &z in z_samples {
        let drop = ball_potential_drop(kernel, dim, r_tilde, z)?;
        margin = margin.min(drop - cc * c(0.5) * z * z);
        if z > T::zero() {
            let q = drop / (z * z);
            cmin = cmin.min(q);
            cmax = cmax.max(q);
            if drop > T::zero() {
                xs.push(z.to_f64_lossy().ln());
                ys.push(drop.to_f64_lossy().ln());
            }
        }
    }
    let slack = c::<T>(1e-12) * (T::one() + psi0.abs());
    rep.residual("min_margin", margin);
    if cmin.finite() {
        rep.residual("decay_coefficient_min", cmin)
            .residual("decay_coefficient_max", cmax);
    }
    if xs.len() >= 2 {
        rep.residual("decay_exponent", c(fit_slope(&xs, &ys)));
    }
    Ok(rep.finish(margin >= -slack))
}

/// `sup { |g(s) - g(t)| : s, t in [a, b], |s - t| <= delta }` on a grid of
/// 4001 points, each also paired with the point `delta` ahead of it so
/// that steps finer than the grid are not lost.
pub fn modulus_of_continuity<T: Real>(kernel: &RadialKernel<T>, a: T, b: T, delta: T) -> T {
    let ts = linspace(a, b, 4001);
    let gs: Vec<T> = ts.iter().map(|&t| kernel.value(t)).collect();
    let mut w = T::zero();
    for i in 0..ts.len() {
        let ahead = (ts[i] + delta).min(b);
        w = w.max((kernel.value(ahead) - gs[i]).abs());
        for j in (i + 1)..ts.len() {
            if ts[j] - ts[i] > delta {
                break;
            }
            w = w.max((gs[j] - gs[i]).abs());
        }
    }
    w
}

/// `psi(y) - psi(x) <= omega(|y - x|)` for each probe pair `(y, x)`, with
/// `omega` the modulus of continuity of `g` on `[r_star, R_bar]`.
pub fn potential_continuity<T: Real>(
    kernel: &RadialKernel<T>,
    mu: &Measure<T>,
    rule: DiagonalRule<T>,
    probe_pairs: &[(Vec<T>, Vec<T>)],
) -> Result<DiagnosticReport<T>> {
    let mut rep = DiagnosticReport::new("potential_continuity");
    let k = match linfty_constants(kernel, mu.dim()) {
        Ok(k) => k,
        Err(e @ (Error::NotConfining { .. } | Error::Precondition(_))) => {
            return Ok(rep.inapplicable(format!("constants unavailable: {e}")));
        }
        Err(e) => return Err(e),
    };
    rep.parameter("r_star", k.r).parameter("R_bar", k.big_r_bar);
    let mut worst = T::infinity();
    for (i, (y, x)) in probe_pairs.iter().enumerate() {
        let d = dist(y, x);
        if d >= k.r {
            return Err(Error::Precondition(format!(
                "probe {i} is farther than r_star from its base point"
            )));
        }
        let psi = potential(kernel, mu, &[y.clone(), x.clone()], rule)?;
        let lhs = psi.values[0] - psi.values[1];
        let omega = modulus_of_continuity(kernel, k.r, k.big_r_bar, d);
        let tol = c::<T>(1e-9) * (T::one() + psi.values[1].abs());
        worst = worst.min(omega + tol - lhs);
    }
    rep.residual(
        "min_margin",
        if probe_pairs.is_empty() {
            T::zero()
        } else {
            worst
        },
    );
    Ok(rep.finish(probe_pairs.is_empty() || worst >= T::zero()))
}

/// Probe pairs just outside the support of a converged 1D or radial
/// measure: `y` at 1..=count node spacings beyond the outermost support
/// node `x`.
pub fn outward_probes<T: Real>(mu: &Measure<T>, count: usize) -> Vec<(Vec<T>, Vec<T>)> {
    let pts = atom_points(mu);
    let w = atom_weights(mu);
    let floor = c::<T>(WEIGHT_FLOOR);
    if pts.first().is_none_or(|p| p.len() != 1) {
        return Vec::new();
    }
    let edge = pts
        .iter()
        .zip(&w)
        .filter(|(_, &wi)| wi > floor)
        .map(|(p, _)| p[0])
        .fold(-T::infinity(), |m, x| m.max(x));
    let h = default_gap_tolerance(mu) / c(2.5);
    (1..=count)
        .map(|i| (vec![edge + h * T::from_count(i)], vec![edge]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::ParticleMeasure;
    use std::f64::consts::PI;

    #[test]
    fn newtonian_ball_decay() {
        let k = RadialKernel::<f64>::power(-1.0);
        let zs = [0.0, 0.01, 0.02, 0.05, 0.1];
        let rep = ball_potential_decay(&k, 3, 1.0, &zs).unwrap();
        assert!(rep.passed);
        assert!((rep.parameters["psi_0"] - 2.0 * PI).abs() < 1e-10);
        assert!((rep.parameters["c"] - 4.0 * PI / 9.0).abs() < 1e-12);
        for key in ["decay_coefficient_min", "decay_coefficient_max"] {
            assert!(
                (rep.residuals[key] - 2.0 * PI / 3.0).abs() < 1e-6,
                "{key} {:?}",
                rep.residuals
            );
        }
        let e = rep.residuals["decay_exponent"];
        assert!((1.9..=2.1).contains(&e));
    }

    #[test]
    fn decay_preconditions() {
        let k = RadialKernel::<f64>::power(-1.0);
        assert!(ball_potential_decay(&k, 3, 1.0, &[0.2]).is_err());
    }

    #[test]
    fn mollified_dirac_is_unbounded_for_piecewise_cube() {
        let mut w = vec![0.0; 41];
        w[20] = 1.0;
        let pos = (0..41).map(|i| vec![-2.0 + 0.1 * i as f64]).collect();
        let mu: Measure<f64> = ParticleMeasure::new(1, pos, w).unwrap().into();
        let rep =
            linfty_bound(&RadialKernel::piecewise_cube(), 1, &mu, &[0.1, 0.05, 0.025]).unwrap();
        assert!(
            rep.notes.iter().any(|n| n == "verdict: unbounded"),
            "{rep:?}"
        );
        assert!(!rep.failed());
    }

    #[test]
    fn heavy_boundary_atom_fails() {
        let k = RadialKernel::<f64>::power_sum(0.5, 2.0);
        let mu: Measure<f64> = ParticleMeasure::new(
            1,
            vec![vec![0.0], vec![0.01], vec![0.02]],
            vec![0.25, 0.25, 0.5],
        )
        .unwrap()
        .into();
        let rep = boundary_mass(&k, 1, &mu, 1e-3, 1e-12).unwrap();
        assert!(rep.failed(), "{rep:?}");
    }

    #[test]
    fn bounded_slope_is_inapplicable() {
        let k = RadialKernel::<f64>::power(2.0);
        let mu: Measure<f64> = ParticleMeasure::dirac(vec![0.0]).unwrap().into();
        let rep = boundary_mass(&k, 1, &mu, 0.01, 1e-12).unwrap();
        assert_eq!(rep.status, super::super::Status::Inapplicable);
    }

    #[test]
    fn modulus_of_lipschitz_kernel() {
        let k = RadialKernel::<f64>::power(1.0);
        let w = modulus_of_continuity(&k, 0.5, 3.0, 0.1);
        assert!((w - 0.1).abs() < 1e-3);
    }

    #[test]
    fn modulus_below_grid_spacing() {
        // spacing 0.025, delta 1e-3: |g'| <= 200 on [0, 100]
        let k = RadialKernel::<f64>::power(2.0);
        let w = modulus_of_continuity(&k, 0.0, 100.0, 1e-3);
        assert!(w <= 0.2 && w > 0.2 - 2.0 * 0.025 * 1e-3, "{w}");
    }
}
