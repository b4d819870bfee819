//! Ball and sphere constants in dimension `N`.

use crate::quadrature::{integrate, Tolerance};
use crate::real::{c, Real};
use serde::Serialize;

/// Volume of the unit ball in `R^n` via `omega_n = 2 pi / n * omega_{n-2}`.
pub fn unit_ball_volume<T: Real>(n: usize) -> T {
    match n {
        0 => T::one(),
        1 => c(2.0),
        _ => T::two_pi() / T::from_count(n) * unit_ball_volume::<T>(n - 2),
    }
}

/// `int_0^pi sin^k(phi) dphi`, the normaliser of the polar-angle density
/// on `S^{k+1}`.
pub fn sine_power_integral<T: Real>(k: usize) -> T {
    match k {
        0 => T::pi(),
        1 => c(2.0),
        _ => T::from_count(k - 1) / T::from_count(k) * sine_power_integral::<T>(k - 2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometryConstants<T> {
    pub dim: usize,
    /// Volume of the unit ball.
    pub omega: T,
    /// Surface measure of the unit sphere, `N * omega`.
    pub sphere_area: T,
    /// `int_{S^{N-1}} cos^2(theta) dH^{N-1}`, equal to `omega`.
    pub cos2_integral: T,
}

impl<T: Real> GeometryConstants<T> {
    pub fn new(dim: usize) -> Self {
        let omega = unit_ball_volume::<T>(dim);
        let sphere_area = T::from_count(dim) * omega;
        GeometryConstants {
            dim,
            omega,
            sphere_area,
            cos2_integral: sphere_area / T::from_count(dim),
        }
    }

    /// Radius of the ball of unit volume.
    pub fn unit_volume_radius(&self) -> T {
        (T::one() / self.omega).powf(T::one() / T::from_count(self.dim))
    }

    /// Volume of the radial shell `{a <= |x| <= b}`.
    pub fn shell_volume(&self, a: T, b: T) -> T {
        let n = self.dim as i32;
        self.omega * (b.powi(n) - a.max(T::zero()).powi(n))
    }
}

/// Fraction of the sphere `S^{N-1}` on which `cos(theta) >= c0`, where
/// `theta` is the angle to a fixed axis.
pub fn cap_fraction<T: Real>(dim: usize, c0: T) -> T {
    if c0 <= -T::one() {
        return T::one();
    }
    if c0 > T::one() {
        return T::zero();
    }
    match dim {
        1 => {
            if c0 <= T::one() && c0 > -T::one() {
                c(0.5)
            } else {
                T::one()
            }
        }
        2 => c0.acos() / T::pi(),
        3 => (T::one() - c0) * c(0.5),
        _ => {
            let k = dim - 2;
            let phi0 = c0.acos();
            let part = integrate(
                |phi: T| phi.sin().powi(k as i32),
                T::zero(),
                phi0,
                Tolerance::default(),
            );
            part.value / sine_power_integral::<T>(k)
        }
    }
}
