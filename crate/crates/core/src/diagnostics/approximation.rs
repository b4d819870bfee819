use super::DiagnosticReport;
use crate::energy::{particle_energy, radial_energy, DiagonalRule, Nodes};
use crate::error::{Error, Result};
use crate::kernels::RadialKernel;
use crate::measures::{
    approximate_smooth, approximate_smooth_radial, Measure, ParticleMeasure, RadialMeasure,
};
use crate::real::{c, Real};

fn particle_rule<T: Real>(kernel: &RadialKernel<T>, mu: &ParticleMeasure<T>) -> DiagonalRule<T> {
    if kernel.value_at_zero().finite() {
        return DiagonalRule::FiniteValue;
    }
    Nodes::Points {
        dim: mu.dim(),
        points: mu.positions().to_vec(),
    }
    .default_rule()
}

fn radial_rule<T: Real>(mu: &RadialMeasure<T>) -> DiagonalRule<T> {
    Nodes::Radii {
        dim: mu.dim(),
        radii: mu.radii().to_vec(),
    }
    .default_rule()
}

/// Energy of `mu` with the default diagonal rule of its own atoms.
pub fn measure_energy<T: Real>(kernel: &RadialKernel<T>, mu: &Measure<T>) -> Result<T> {
    match mu {
        Measure::Particle(p) => Ok(particle_energy(kernel, p, particle_rule(kernel, p))),
        Measure::Radial(r) => radial_energy(kernel, r, radial_rule(r)),
    }
}

/// `E(mu_j) -> E(mu)` along the smoothing schedule: `mu_j` is `mu` dilated
/// by `1 + eps/j` and mollified at the schedule radius for `j`.
///
/// Passes when the error is nonincreasing over the second half of
/// `j_list` (from index `(n-1)/2` on) and the last relative error is at
/// most 1%.
pub fn approximation_convergence<T: Real>(
    kernel: &RadialKernel<T>,
    mu: &Measure<T>,
    alpha: T,
    eps: T,
    j_list: &[usize],
    r: T,
) -> Result<DiagnosticReport<T>> {
    if j_list.len() < 2 || j_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "j_list must be increasing with at least two entries".into(),
        ));
    }
    let e = measure_energy(kernel, mu)?;
    let mut rep = DiagnosticReport::new("approximation_convergence");
    rep.parameter("energy", e)
        .parameter("alpha", alpha)
        .parameter("eps", eps);
    let mut errors = Vec::new();
    let mut rhos = Vec::new();
    for &j in j_list {
        let eps_j = eps / T::from_count(j);
        let (ej, rho) = match mu {
            Measure::Particle(p) => {
                let (d, rho) = approximate_smooth(p, kernel, alpha, eps_j, j, r)?;
                (measure_energy(kernel, &d.to_particles()?.into())?, rho)
            }
            Measure::Radial(m) => {
                let (d, rho) = approximate_smooth_radial(m, kernel, alpha, eps_j, j, r)?;
                (measure_energy(kernel, &d.to_radial_measure()?.into())?, rho)
            }
        };
        rep.residual(&format!("energy_j{j}"), ej)
            .parameter(&format!("rho_j{j}"), rho);
        errors.push((ej - e).abs());
        rhos.push(rho);
    }
    let tail = &errors[(errors.len() - 1) / 2..];
    let decreasing = tail.windows(2).all(|w| w[1] <= w[0]);
    let last = errors[errors.len() - 1];
    let rel = last / e.abs().max(c(1e-30));
    let rho_monotone = rhos.windows(2).all(|w| w[1] < w[0]);
    rep.residual("final_relative_error", rel);
    if !decreasing {
        rep.note("error is not decreasing over the tail of j_list");
    }
    if !rho_monotone {
        rep.note("smoothing radii are not strictly decreasing");
    }
    Ok(rep.finish(decreasing && rel <= c(0.01) && rho_monotone))
}
