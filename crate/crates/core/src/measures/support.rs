use super::{Measure, WEIGHT_FLOOR};
use crate::real::{c, dist, norm, Real};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct Gap<T> {
    pub from: T,
    pub to: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct SupportReport<T> {
    pub diameter: T,
    pub radius: T,
    /// Gaps wider than the tolerance. For radial measures the interval from
    /// the origin to the innermost shell counts, so "no gaps" means a ball.
    pub gaps: Vec<Gap<T>>,
    pub atoms: usize,
    /// `None` when gap detection does not apply (particles in `N >= 2`).
    pub convex: Option<bool>,
}

/// Support geometry of `mu`, ignoring weights at or below the weight floor.
pub fn support_structure<T: Real>(mu: &Measure<T>, gap_tolerance: T) -> SupportReport<T> {
    let floor = c::<T>(WEIGHT_FLOOR);
    match mu {
        Measure::Particle(p) => {
            let kept: Vec<&Vec<T>> = p
                .positions()
                .iter()
                .zip(p.weights())
                .filter(|(_, &w)| w > floor)
                .map(|(x, _)| x)
                .collect();
            let mut diameter = T::zero();
            for i in 0..kept.len() {
                for j in 0..i {
                    diameter = diameter.max(dist(kept[i], kept[j]));
                }
            }
            let radius = kept.iter().fold(T::zero(), |m, x| m.max(norm(x)));
            if p.dim() != 1 {
                return SupportReport {
                    diameter,
                    radius,
                    gaps: Vec::new(),
                    atoms: kept.len(),
                    convex: None,
                };
            }
            let mut xs: Vec<T> = kept.iter().map(|x| x[0]).collect();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            let gaps = gaps_of(&xs, gap_tolerance);
            SupportReport {
                diameter,
                radius,
                convex: Some(gaps.is_empty()),
                gaps,
                atoms: kept.len(),
            }
        }
        Measure::Radial(r) => {
            let mut rs: Vec<T> = r
                .radii()
                .iter()
                .zip(r.masses())
                .filter(|(_, &m)| m > floor)
                .map(|(&x, _)| x)
                .collect();
            let radius = rs.last().copied().unwrap_or(T::zero());
            let atoms = rs.len();
            if rs.first().is_some_and(|&r0| r0 > T::zero()) {
                rs.insert(0, T::zero());
            }
            let gaps = gaps_of(&rs, gap_tolerance);
            SupportReport {
                diameter: radius * c(2.0),
                radius,
                convex: Some(gaps.is_empty()),
                gaps,
                atoms,
            }
        }
    }
}

fn gaps_of<T: Real>(sorted: &[T], tol: T) -> Vec<Gap<T>> {
    sorted
        .windows(2)
        .filter(|w| w[1] - w[0] > tol)
        .map(|w| Gap {
            from: w[0],
            to: w[1],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{ParticleMeasure, RadialMeasure};

    #[test]
    fn uniform_segment_has_no_gaps() {
        let pts: Vec<Vec<f64>> = (0..=10).map(|i| vec![i as f64 / 10.0]).collect();
        let m = ParticleMeasure::uniform(1, pts).unwrap();
        let rep = support_structure(&m.into(), 0.2);
        assert!(rep.gaps.is_empty());
        assert!((rep.diameter - 1.0).abs() < 1e-15);
        assert_eq!(rep.convex, Some(true));
    }

    #[test]
    fn radial_gap_detected() {
        let mut radii: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        radii.extend((0..=10).map(|i| 2.0 + i as f64 / 10.0));
        let n = radii.len();
        let m = RadialMeasure::new(3, radii, vec![1.0 / n as f64; n]).unwrap();
        let rep = support_structure(&m.into(), 0.2);
        assert_eq!(rep.gaps.len(), 1);
        assert!((rep.gaps[0].from - 1.0).abs() < 1e-12 && (rep.gaps[0].to - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_atom() {
        let m = ParticleMeasure::dirac(vec![0.3]).unwrap();
        let rep = support_structure(&m.into(), 0.1);
        assert_eq!(rep.diameter, 0.0);
        assert!(rep.gaps.is_empty());
    }

    #[test]
    fn light_atoms_ignored() {
        let m =
            ParticleMeasure::new(1, vec![vec![0.0], vec![5.0]], vec![1.0 - 1e-12, 1e-12]).unwrap();
        let rep = support_structure(&m.into(), 0.1);
        assert_eq!(rep.atoms, 1);
        assert!(rep.gaps.is_empty());
    }
}
