//! Rotation averaging for kernels that are singular at the origin.
//!
//! An atom has infinite self-energy under such a kernel, so the comparison
//! `E(rot mu) <= E(mu)` is made for `mu * U_c`, each atom spread uniformly
//! over a ball of radius `c`. Smoothing by a radial probability commutes
//! with rotation averaging, both energies are finite for locally integrable
//! kernels, and the inequality is exact for positive definite ones.
//!
//! Everything reduces to `W(r, s)`: the interaction of the rotation
//! averages of two balls of radius `c` centred at distances `r` and `s`
//! from the origin. A ball centred at the origin is its own rotation
//! average, so `W(d, 0)` is also the interaction of two balls at distance
//! `d`.

use crate::geometry::{cap_fraction, sine_power_integral};
use crate::kernels::RadialKernel;
use crate::measures::ParticleMeasure;
use crate::quadrature::{integrate, integrate_graded, Tolerance};
use crate::real::{c, dist, norm, Real};

// Each level is resolved well below the request of the level above it, or
// its noise keeps the outer error estimate from converging.
fn tolerance(rel: f64) -> Tolerance {
    Tolerance {
        abs: rel * 1e-3,
        rel,
        max_intervals: 200,
    }
}

/// Density of `|u|` for `u` uniform in the ball of radius `cr` centred at
/// distance `r` from the origin.
fn profile<T: Real>(dim: usize, r: T, cr: T, a: T) -> T {
    if a < T::zero() || a > r + cr {
        return T::zero();
    }
    let base = T::from_count(dim) * a.powi(dim as i32 - 1) / cr.powi(dim as i32);
    if r == T::zero() {
        return base;
    }
    if a == T::zero() {
        return if r < cr { base } else { T::zero() };
    }
    let c0 = (a * a + r * r - cr * cr) / (c::<T>(2.0) * a * r);
    base * cap_fraction(dim, c0)
}

/// Support `[lo, hi]` of [`profile`] and its interior breakpoints.
fn pieces<T: Real>(r: T, cr: T, extra: &[T]) -> Vec<T> {
    let lo = (r - cr).max(T::zero());
    let hi = r + cr;
    let mut pts = vec![lo, hi, (cr - r).abs()];
    pts.extend_from_slice(extra);
    pts.retain(|&p| p >= lo && p <= hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    pts.dedup();
    pts
}

/// Integral over `[l, h]` graded toward both ends, where the integrands
/// below have their fractional-power kinks.
fn graded_piece<T: Real, F: Fn(T) -> T>(f: F, l: T, h: T, tol: Tolerance) -> T {
    let mid = (l + h) * c(0.5);
    integrate_graded(&f, l, mid, 3, tol).value
        + integrate_graded(|u: T| f(h - u), T::zero(), h - mid, 3, tol).value
}

const TABLE_DEGREE: usize = 16;
const TABLE_MAX_DEPTH: u32 = 40;
const TABLE_MAX_PANELS: usize = 4096;
// well above the accuracy of the direct evaluation, or refinement never stops
const TABLE_TOL: f64 = 1e-10;

/// Piecewise Chebyshev interpolant, panels refined by bisection until
/// it matches the function between nodes.
struct Table<T> {
    breaks: Vec<T>,
    values: Vec<[T; TABLE_DEGREE + 1]>,
}

fn cheb_node<T: Real>(j: usize) -> T {
    (T::pi() * T::from_count(j) / T::from_count(TABLE_DEGREE)).cos()
}

fn barycentric<T: Real>(vals: &[T; TABLE_DEGREE + 1], x: T) -> T {
    let mut num = T::zero();
    let mut den = T::zero();
    for (j, &v) in vals.iter().enumerate() {
        let diff = x - cheb_node::<T>(j);
        if diff == T::zero() {
            return v;
        }
        let mut w = if j % 2 == 0 { T::one() } else { -T::one() };
        if j == 0 || j == TABLE_DEGREE {
            w *= c(0.5);
        }
        num += w * v / diff;
        den += w / diff;
    }
    num / den
}

impl<T: Real> Table<T> {
    fn build(f: &dyn Fn(T) -> T, coarse: &[T]) -> Self {
        let mut table = Table {
            breaks: vec![coarse[0]],
            values: Vec::new(),
        };
        for w in coarse.windows(2) {
            table.refine(f, w[0], w[1], 0);
        }
        table
    }

    fn refine(&mut self, f: &dyn Fn(T) -> T, l: T, h: T, depth: u32) {
        let half = (h - l) * c(0.5);
        let mid = (l + h) * c(0.5);
        let vals: [T; TABLE_DEGREE + 1] =
            std::array::from_fn(|j| f(mid + half * cheb_node::<T>(j)));
        let scale = vals.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        // the worst spots sit between the outermost nodes
        let probes = [
            (cheb_node::<T>(0) + cheb_node::<T>(1)) * c(0.5),
            (cheb_node::<T>(TABLE_DEGREE - 1) + cheb_node::<T>(TABLE_DEGREE)) * c(0.5),
            (cheb_node::<T>(TABLE_DEGREE / 2) + cheb_node::<T>(TABLE_DEGREE / 2 + 1)) * c(0.5),
        ];
        let ok = probes.iter().all(|&x| {
            (barycentric(&vals, x) - f(mid + half * x)).abs()
                <= c::<T>(TABLE_TOL) * scale.max(T::one())
        });
        if ok || depth >= TABLE_MAX_DEPTH || self.values.len() >= TABLE_MAX_PANELS {
            self.breaks.push(h);
            self.values.push(vals);
        } else {
            self.refine(f, l, mid, depth + 1);
            self.refine(f, mid, h, depth + 1);
        }
    }

    fn eval(&self, x: T) -> Option<T> {
        let last = *self.breaks.last()?;
        if x < self.breaks[0] || x > last {
            return None;
        }
        let i = self
            .breaks
            .partition_point(|&b| b <= x)
            .clamp(1, self.values.len())
            - 1;
        let (l, h) = (self.breaks[i], self.breaks[i + 1]);
        let u = (x - (l + h) * c(0.5)) / ((h - l) * c(0.5));
        Some(barycentric(&self.values[i], u))
    }
}

struct Smoothing<'a, T: Real> {
    kernel: &'a RadialKernel<T>,
    dim: usize,
    cr: T,
    table: Option<Table<T>>,
}

impl<'a, T: Real> Smoothing<'a, T> {
    /// `reach` bounds the centre distances the table has to cover.
    fn new(kernel: &'a RadialKernel<T>, dim: usize, cr: T, reach: T) -> Self {
        let mut sm = Smoothing {
            kernel,
            dim,
            cr,
            table: None,
        };
        if dim >= 2 {
            let mut coarse = vec![T::zero(), cr];
            let mut x = cr;
            while x < reach {
                x *= c(2.0);
                coarse.push(x);
            }
            sm.table = Some(Table::build(&|d| sm.ball_potential_direct(d), &coarse));
        }
        sm
    }

    fn ball_potential(&self, d: T) -> T {
        self.table
            .as_ref()
            .and_then(|t| t.eval(d))
            .unwrap_or_else(|| self.ball_potential_direct(d))
    }

    /// `int_0^x (x - t) g(t) dt`, extended evenly.
    fn second_antiderivative(&self, x: T) -> T {
        let x = x.abs();
        x * self.kernel.moment(T::zero(), T::zero(), x) - self.kernel.moment(T::one(), T::zero(), x)
    }

    /// One dimension: two intervals of half-width `c` at distance `d`.
    fn intervals(&self, d: T) -> T {
        let two_c = c::<T>(2.0) * self.cr;
        let a2 = |x: T| self.second_antiderivative(x);
        (a2(d + two_c) - c::<T>(2.0) * a2(d) + a2(d - two_c)) / (two_c * two_c)
    }

    /// Potential of `U_c` at distance `d` from its centre, integrated in
    /// polar coordinates about the evaluation point: along each ray only
    /// `M(rho) = int_0^rho g(t) t^(N-1) dt` is needed. Continuous and
    /// bounded, which is what keeps the outer integrals cheap.
    fn ball_potential_direct(&self, d: T) -> T {
        let cr = self.cr;
        let k = self.dim as i32 - 2;
        let m = |rho: T| {
            self.kernel
                .moment(T::from_count(self.dim - 1), T::zero(), rho.max(T::zero()))
        };
        let tol = tolerance(1e-12);
        let avg = if d < cr {
            // every ray leaves the ball once; theta measured toward the centre
            let f = |th: T| {
                let rho = d * th.cos() + (cr * cr - (d * th.sin()).powi(2)).max(T::zero()).sqrt();
                m(rho) * th.sin().powi(k)
            };
            integrate(f, T::zero(), T::pi(), tol).value
        } else {
            // rays with sin(theta) = (c/d) sin(psi) cross the ball
            let q = cr / d;
            let f = |psi: T| {
                let sin_th = q * psi.sin();
                let cos_th = (T::one() - sin_th * sin_th).max(T::zero()).sqrt();
                let half = cr * psi.cos();
                let jac = q * psi.cos() / cos_th;
                (m(d * cos_th + half) - m(d * cos_th - half)) * sin_th.powi(k) * jac
            };
            integrate(f, T::zero(), T::FRAC_PI_2(), tol).value
        };
        avg * T::from_count(self.dim)
            / (cr.powi(self.dim as i32) * sine_power_integral::<T>(self.dim - 2))
    }

    /// Average of the ball potential centred at `s e_1` over the sphere of
    /// radius `a`.
    fn sphere_average(&self, a: T, s: T) -> T {
        if a == T::zero() || s == T::zero() {
            return self.ball_potential(a + s);
        }
        let k = self.dim as i32 - 2;
        let two_as = c::<T>(2.0) * a * s;
        let f = |th: T| {
            let d2 = (a * a + s * s - two_as * th.cos()).max(T::zero());
            self.ball_potential(d2.sqrt()) * th.sin().powi(k)
        };
        let mut pts = vec![T::zero(), T::pi()];
        let x = (a * a + s * s - self.cr * self.cr) / two_as;
        if x > -T::one() && x < T::one() {
            pts.insert(1, x.acos());
        }
        let tol = tolerance(1e-10);
        pts.windows(2)
            .map(|w| graded_piece(f, w[0], w[1], tol))
            .fold(T::zero(), |acc, v| acc + v)
            / sine_power_integral::<T>(self.dim - 2)
    }

    fn interaction(&self, r: T, s: T) -> T {
        if self.dim == 1 {
            // rotations of the line are the reflections
            return (self.intervals(r - s) + self.intervals(r + s)) * c(0.5);
        }
        let extra = [(s - self.cr).max(T::zero()), s + self.cr];
        let pts = pieces(r, self.cr, &extra);
        let tol = tolerance(1e-8);
        pts.windows(2)
            .map(|w| {
                graded_piece(
                    |a: T| profile(self.dim, r, self.cr, a) * self.sphere_average(a, s),
                    w[0],
                    w[1],
                    tol,
                )
            })
            .fold(T::zero(), |acc, v| acc + v)
    }
}

/// `(E(mu * U_c), E(rot(mu) * U_c))`.
pub(crate) fn smoothed_rotation_energies<T: Real>(
    kernel: &RadialKernel<T>,
    mu: &ParticleMeasure<T>,
    cr: T,
) -> (T, T) {
    let dim = mu.dim();
    let pos = mu.positions();
    let w = mu.weights();
    let radii: Vec<T> = pos.iter().map(|p| norm(p)).collect();
    let far = radii.iter().fold(T::zero(), |m, &r| m.max(r));
    let sm = Smoothing::new(kernel, dim, cr, c::<T>(2.0) * (far + cr));
    let mut e = T::zero();
    let mut e_rot = T::zero();
    let self_term = sm.interaction(T::zero(), T::zero());
    for i in 0..pos.len() {
        e += w[i] * w[i] * self_term;
        e_rot += w[i] * w[i] * sm.interaction(radii[i], radii[i]);
        for j in 0..i {
            let two = c::<T>(2.0) * w[i] * w[j];
            e += two * sm.interaction(dist(&pos[i], &pos[j]), T::zero());
            e_rot += two * sm.interaction(radii[i], radii[j]);
        }
    }
    (e, e_rot)
}
