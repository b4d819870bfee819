use crate::energy::shell_kernel;
use crate::error::{Error, Result};
use crate::geometry::GeometryConstants;
use crate::kernels::{log_grid_points, RadialKernel, Singularity};
use crate::quadrature::{grading_for_exponent, integrate, integrate_graded, Tolerance};
use crate::real::{c, Real};

/// Energy of the uniform probability measure on the ball of unit volume,
/// by double radial quadrature of the shell kernel. `+inf` when the
/// kernel is not locally integrable.
pub fn unit_ball_energy<T: Real>(kernel: &RadialKernel<T>, dim: usize) -> Result<T> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let n = T::from_count(dim);
    let sing = kernel.singularity();
    if !sing.integrable_against(n - T::one()) {
        return Ok(T::infinity());
    }
    let big_r = GeometryConstants::<T>::new(dim).unit_volume_radius();
    ball_energy(kernel, dim, big_r)
}

/// Energy of the uniform probability measure on the ball of radius `big_r`.
pub fn ball_energy<T: Real>(kernel: &RadialKernel<T>, dim: usize, big_r: T) -> Result<T> {
    let n = T::from_count(dim);
    let k = dim as i32 - 1;
    // radial law of |x| under the uniform ball: N r^(N-1) / R^N
    let law = |r: T| n * r.powi(k) / big_r.powi(dim as i32);
    let grading = match kernel.singularity() {
        Singularity::Power(a) if a > n - c(2.0) => {
            grading_for_exponent((n - T::one() - a).to_f64_lossy()).max(2)
        }
        Singularity::Log | Singularity::Power(_) => 2,
        Singularity::Bounded => 1,
    };
    let tol = Tolerance {
        abs: 1e-13,
        rel: 1e-10,
        max_intervals: 400,
    };
    let mut failure = None;
    let inner = |r: T, failure: &mut Option<Error>| -> T {
        let mut f = |s: T| match shell_kernel(kernel, dim, r, s) {
            Ok(v) => v * law(s),
            Err(e) => {
                *failure = Some(e);
                T::zero()
            }
        };
        // graded toward the diagonal s = r from both sides; offsets below
        // the resolution of r would land on the singular diagonal itself
        let left = integrate_graded(
            |u: T| if r - u == r { T::zero() } else { f(r - u) },
            T::zero(),
            r,
            grading,
            tol,
        )
        .value;
        let right = integrate_graded(
            |u: T| if r + u == r { T::zero() } else { f(r + u) },
            T::zero(),
            big_r - r,
            grading,
            tol,
        )
        .value;
        left + right
    };
    let outer = integrate(
        |r: T| inner(r, &mut failure) * law(r),
        T::zero(),
        big_r,
        tol,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(outer.value)
}

/// Confinement radius `R = 4 T` with `T = inf { T : g(t) > 24 E* for all t > T }`
/// and `E*` the unit-ball energy. Every minimizer is supported in `B(0, R)`.
pub fn support_radius_bound<T: Real>(kernel: &RadialKernel<T>, dim: usize) -> Result<T> {
    let e_star = unit_ball_energy(kernel, dim)?;
    if !e_star.finite() {
        return Err(Error::Precondition("unit-ball energy diverges".into()));
    }
    let threshold = c::<T>(24.0) * e_star;
    confinement_time(kernel, threshold).map(|t| c::<T>(4.0) * t)
}

/// `inf { T : g(t) > threshold for all t > T }` over the scan range
/// `[1e-6, 1e6]`, refined by bisection.
pub fn confinement_time<T: Real>(kernel: &RadialKernel<T>, threshold: T) -> Result<T> {
    let grid: Vec<T> = log_grid_points(c(1e-6), c(1e6), 2401);
    let t_max = grid[grid.len() - 1];
    if !kernel.grows_at_infinity(t_max) || !(kernel.value(t_max) > threshold) {
        return Err(Error::NotConfining {
            threshold: threshold.to_f64_lossy(),
        });
    }
    let Some(last) = grid.iter().rposition(|&t| !(kernel.value(t) > threshold)) else {
        return Ok(T::zero());
    };
    let (mut lo, mut hi) = (grid[last], grid[last + 1]);
    for _ in 0..200 {
        let mid = (lo + hi) * c(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if kernel.value(mid) > threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_ball_energy_closed_forms() {
        let rb = (3.0 / (4.0 * PI)).powf(1.0 / 3.0);
        let e = unit_ball_energy(&RadialKernel::<f64>::power(2.0), 3).unwrap();
        assert!((e - 1.2 * rb * rb).abs() < 1e-9, "{e}");
        let e = unit_ball_energy(&RadialKernel::<f64>::power(-1.0), 3).unwrap();
        assert!((e - 1.2 / rb).abs() < 1e-8, "{e}");
        let e = unit_ball_energy(&RadialKernel::<f64>::power(0.0), 2).unwrap();
        assert!((e - 1.0).abs() < 1e-10);
        assert!(unit_ball_energy(&RadialKernel::<f64>::power(-3.0), 3)
            .unwrap()
            .is_infinite());
    }

    #[test]
    fn quadratic_in_other_dimensions() {
        // E = 2 Var = 2 N/(N+2) R^2
        for n in [1usize, 2, 4] {
            let rb = GeometryConstants::<f64>::new(n).unit_volume_radius();
            let e = unit_ball_energy(&RadialKernel::<f64>::power(2.0), n).unwrap();
            let exact = 2.0 * n as f64 / (n as f64 + 2.0) * rb * rb;
            assert!((e - exact).abs() < 1e-8 * exact, "n={n} {e} {exact}");
        }
    }

    #[test]
    fn radius_bound_examples() {
        let r = support_radius_bound(&RadialKernel::<f64>::piecewise_cube(), 1).unwrap();
        let exact = 4.0 * (1.0 + 23f64.powf(1.0 / 3.0));
        assert!((r - exact).abs() < 1e-6, "{r} {exact}");
        let r = support_radius_bound(&RadialKernel::<f64>::power(2.0), 3).unwrap();
        let e = 1.2 * (3.0 / (4.0 * PI)).powf(2.0 / 3.0);
        assert!((r - 4.0 * (24.0 * e).sqrt()).abs() < 1e-6, "{r}");
    }

    #[test]
    fn bounded_kernel_is_not_confining() {
        let k = RadialKernel::<f64>::gaussian(1.0);
        assert!(matches!(
            support_radius_bound(&k, 2),
            Err(Error::NotConfining { .. })
        ));
    }
}
