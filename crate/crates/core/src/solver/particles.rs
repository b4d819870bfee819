use crate::error::{Error, Result};
use crate::kernels::RadialKernel;
use crate::measures::ParticleMeasure;
use crate::real::{c, dist, Real};

/// `dE/dx_i = 2 w_i sum_j w_j g'(|x_i - x_j|) (x_i - x_j) / |x_i - x_j|`.
///
/// Coincident atoms contribute nothing (they were merged on construction).
pub fn energy_gradient<T: Real>(kernel: &RadialKernel<T>, mu: &ParticleMeasure<T>) -> Vec<Vec<T>> {
    let pos = mu.positions();
    let w = mu.weights();
    (0..mu.len())
        .map(|i| {
            let g = potential_gradient(kernel, pos, w, i, &pos[i]);
            g.into_iter().map(|v| c::<T>(2.0) * w[i] * v).collect()
        })
        .collect()
}

/// `grad psi` at `x` from all atoms except `skip`.
fn potential_gradient<T: Real>(
    kernel: &RadialKernel<T>,
    pos: &[Vec<T>],
    w: &[T],
    skip: usize,
    x: &[T],
) -> Vec<T> {
    let mut grad = vec![T::zero(); x.len()];
    for (j, (y, &wj)) in pos.iter().zip(w).enumerate() {
        if j == skip {
            continue;
        }
        let d = dist(x, y);
        if d == T::zero() {
            continue;
        }
        let f = wj * kernel.d1(d) / d;
        for (gk, (&xk, &yk)) in grad.iter_mut().zip(x.iter().zip(y)) {
            *gk += f * (xk - yk);
        }
    }
    grad
}

/// `sum_{j != skip} w_j g(|x - y_j|)`.
fn partial_potential<T: Real>(
    kernel: &RadialKernel<T>,
    pos: &[Vec<T>],
    w: &[T],
    skip: usize,
    x: &[T],
) -> T {
    let mut s = T::zero();
    for (j, (y, &wj)) in pos.iter().zip(w).enumerate() {
        if j == skip {
            continue;
        }
        let d = dist(x, y);
        s += wj
            * if d == T::zero() {
                kernel.value_at_zero()
            } else {
                kernel.value(d)
            };
    }
    s
}

/// Gauss-Seidel descent on atom positions with fixed weights.
///
/// Each atom moves against the gradient of the potential of the others. A
/// move is kept only if it does not increase the energy; otherwise the step
/// is halved up to 30 times, after which the atom stays put for this sweep.
pub fn particle_descent<T: Real>(
    kernel: &RadialKernel<T>,
    mu: &ParticleMeasure<T>,
    step: T,
    iters: usize,
) -> Result<ParticleMeasure<T>> {
    if !(step > T::zero()) || !step.finite() {
        return Err(Error::InvalidArgument(format!(
            "step must be positive (got {step})"
        )));
    }
    let w = mu.weights().to_vec();
    let mut pos = mu.positions().to_vec();
    for _ in 0..iters {
        let mut moved = false;
        for i in 0..pos.len() {
            let grad = potential_gradient(kernel, &pos, &w, i, &pos[i]);
            if grad.iter().all(|g| *g == T::zero()) {
                continue;
            }
            let before = partial_potential(kernel, &pos, &w, i, &pos[i]);
            let mut s = step;
            for _ in 0..=30 {
                let trial: Vec<T> = pos[i].iter().zip(&grad).map(|(&x, &g)| x - s * g).collect();
                let after = partial_potential(kernel, &pos, &w, i, &trial);
                if after <= before && trial != pos[i] {
                    pos[i] = trial;
                    moved = true;
                    break;
                }
                s *= c(0.5);
            }
        }
        if !moved {
            break;
        }
    }
    ParticleMeasure::new(mu.dim(), pos, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{particle_energy, DiagonalRule};

    #[test]
    fn two_atoms_reach_equilibrium_distance() {
        let k = RadialKernel::<f64>::power_sum(1.0, 2.0);
        let mu = ParticleMeasure::new(
            3,
            vec![vec![0.0, 0.0, 0.0], vec![0.5, 0.0, 0.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let out = particle_descent(&k, &mu, 0.05, 2000).unwrap();
        let d = dist(&out.positions()[0], &out.positions()[1]);
        assert!((d - 0.5f64.powf(1.0 / 3.0)).abs() < 1e-6, "{d}");
    }

    #[test]
    fn single_atom_is_fixed() {
        let k = RadialKernel::<f64>::power_sum(1.0, 2.0);
        let mu = ParticleMeasure::dirac(vec![0.3, 0.1]).unwrap();
        assert_eq!(particle_descent(&k, &mu, 0.1, 10).unwrap(), mu);
    }

    #[test]
    fn energy_never_increases() {
        let k = RadialKernel::<f64>::power_sum(1.0, 2.0);
        let mu = ParticleMeasure::uniform(
            2,
            vec![
                vec![0.0, 0.0],
                vec![1.0, 0.2],
                vec![0.1, 0.9],
                vec![2.0, 2.0],
            ],
        )
        .unwrap();
        let rule = DiagonalRule::CellAverage(0.05);
        let mut e = particle_energy(&k, &mu, rule);
        let mut cur = mu;
        for _ in 0..20 {
            cur = particle_descent(&k, &cur, 0.5, 1).unwrap();
            let e2 = particle_energy(&k, &cur, rule);
            assert!(e2 <= e + 1e-14);
            e = e2;
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let k = RadialKernel::<f64>::power_sum(1.0, 2.0);
        let pts = vec![
            vec![0.0, 0.1, 0.2],
            vec![0.9, -0.3, 0.4],
            vec![-0.5, 0.6, 0.1],
        ];
        let w = vec![0.2, 0.3, 0.5];
        let mu = ParticleMeasure::new(3, pts.clone(), w.clone()).unwrap();
        let grad = energy_gradient(&k, &mu);
        let h = 1e-5;
        for i in 0..3 {
            for a in 0..3 {
                let mut p = pts.clone();
                p[i][a] += h;
                let ep = particle_energy(
                    &k,
                    &ParticleMeasure::new(3, p.clone(), w.clone()).unwrap(),
                    DiagonalRule::CellAverage(0.1),
                );
                p[i][a] -= 2.0 * h;
                let em = particle_energy(
                    &k,
                    &ParticleMeasure::new(3, p, w.clone()).unwrap(),
                    DiagonalRule::CellAverage(0.1),
                );
                let fd = (ep - em) / (2.0 * h);
                assert!(
                    (fd - grad[i][a]).abs() < 1e-6 * grad[i][a].abs().max(1e-3),
                    "{fd} {}",
                    grad[i][a]
                );
            }
        }
    }
}
