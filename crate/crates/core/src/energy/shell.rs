use crate::error::{Error, Result};
use crate::geometry::sine_power_integral;
use crate::kernels::{RadialKernel, Singularity};
use crate::quadrature::{grading_for_exponent, integrate_graded, Tolerance};
use crate::real::{c, Real};

/// Below this ratio of radii the angular average is replaced by its
/// second-order Taylor expansion.
const TAYLOR_RATIO: f64 = 1e-4;

/// Average of `f(|r e1 - s w|)` over `w` uniform on the sphere `S^{N-1}`,
/// for a generic radial profile `f` whose behaviour at 0 is `sing`.
///
/// For `N >= 2` the average is computed in the polar angle `phi` between
/// the two points, with `|r e1 - s w|^2 = (r - s)^2 + 4 r s sin^2(phi/2)`,
/// graded toward `phi = 0` where the profile may be singular. Returns `+inf`
/// when the average diverges (equal radii and a non-integrable profile).
pub fn shell_average<T: Real, F: Fn(T) -> T>(
    f: F,
    dim: usize,
    r: T,
    s: T,
    sing: Singularity<T>,
) -> T {
    let (big, small) = if r >= s { (r, s) } else { (s, r) };
    if small <= T::zero() {
        return f(big);
    }
    let n = T::from_count(dim);
    if dim == 1 {
        let near = (r - s).abs();
        let a = if near > T::zero() {
            f(near)
        } else {
            limit_at_zero(&sing, &f)
        };
        return (a + f(r + s)) * c(0.5);
    }
    let diverges = r == s && !sing.integrable_against(n - c(2.0));
    if diverges {
        return T::infinity();
    }
    let k = dim - 2;
    let d2 = (r - s) * (r - s);
    let four_rs = c::<T>(4.0) * r * s;
    let integrand = |phi: T| {
        let h = (phi * c(0.5)).sin();
        let t = (d2 + four_rs * h * h).sqrt();
        f(t) * phi.sin().powi(k as i32)
    };
    let grading = match sing {
        Singularity::Bounded => 1,
        Singularity::Log => 3,
        Singularity::Power(alpha) => grading_for_exponent((n - c(2.0) - alpha).to_f64_lossy()),
    };
    let est = integrate_graded(integrand, T::zero(), T::pi(), grading, Tolerance::default());
    est.value / sine_power_integral::<T>(k)
}

/// [`shell_average`] for a bounded profile vanishing on `[support, inf)`:
/// only polar angles with `|r e1 - s w| < support` are integrated, so narrow
/// profiles on large spheres are resolved.
pub fn shell_average_compact<T: Real, F: Fn(T) -> T>(
    f: F,
    dim: usize,
    r: T,
    s: T,
    support: T,
) -> T {
    let (big, small) = if r >= s { (r, s) } else { (s, r) };
    if small <= T::zero() {
        return if big < support { f(big) } else { T::zero() };
    }
    let gap = big - small;
    if gap >= support {
        return T::zero();
    }
    if dim == 1 {
        let far = if r + s < support { f(r + s) } else { T::zero() };
        return (f(gap) + far) * c(0.5);
    }
    let k = dim - 2;
    let d2 = gap * gap;
    let four_rs = c::<T>(4.0) * r * s;
    let arg = ((support * support - d2) / four_rs).sqrt().min(T::one());
    let phi_max = c::<T>(2.0) * arg.asin();
    let integrand = |phi: T| {
        let h = (phi * c(0.5)).sin();
        let t = (d2 + four_rs * h * h).sqrt();
        if t >= support {
            T::zero()
        } else {
            f(t) * phi.sin().powi(k as i32)
        }
    };
    let est = crate::quadrature::integrate(integrand, T::zero(), phi_max, Tolerance::default());
    est.value / sine_power_integral::<T>(k)
}

fn limit_at_zero<T: Real, F: Fn(T) -> T>(sing: &Singularity<T>, f: &F) -> T {
    match sing {
        Singularity::Bounded => f(T::default_epsilon() * T::default_epsilon()),
        _ => T::infinity(),
    }
}

/// Average of `g(|r e1 - s w|)` over the unit sphere in `R^N`.
///
/// `N = 1` averages the two points `+-s`; `N = 3` uses the exact change of
/// variables to `(1 / 2rs) int_{|r-s|}^{r+s} g(t) t dt`; other dimensions
/// integrate in the polar angle. When one radius is zero this is
/// `g(max(r, s))`, and for `r = s = 0` it is `g(0+)` (the caller decides how
/// to treat a singular self-interaction). Divergent averages are `+inf`.
pub fn shell_kernel<T: Real>(kernel: &RadialKernel<T>, dim: usize, r: T, s: T) -> Result<T> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if !(r >= T::zero()) || !(s >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "shell radii must be nonnegative (r={r}, s={s})"
        )));
    }
    let (big, small) = if r >= s { (r, s) } else { (s, r) };
    if big == T::zero() {
        return Ok(kernel.value_at_zero());
    }
    if small == T::zero() {
        return Ok(kernel.value(big));
    }
    if small / big < c(TAYLOR_RATIO) {
        // mean of g(|R e1 - m w|) = g(R) + m^2/(2N) lap g(R) + O(m^4)
        let lap = kernel.laplacian_unchecked(dim, big);
        return Ok(kernel.value(big) + small * small / (c::<T>(2.0) * T::from_count(dim)) * lap);
    }
    if dim == 3 {
        let sing = kernel.singularity();
        if r == s && !sing.integrable_against(T::one()) {
            return Ok(T::infinity());
        }
        return Ok(kernel.moment(T::one(), (r - s).abs(), r + s) / (c::<T>(2.0) * r * s));
    }
    Ok(shell_average(
        |t| kernel.value(t),
        dim,
        r,
        s,
        kernel.singularity(),
    ))
}
