//! Machine-checkable consequences of the existence and regularity theory:
//! Euler-Lagrange conditions, support structure, density bounds, and the
//! convexity properties behind radial symmetry.
//!
//! Every check returns a [`DiagnosticReport`]. A check whose hypotheses do
//! not hold is reported as [`Status::Inapplicable`] rather than failed.

mod approximation;
mod convexity;
mod geometric;
mod regularity;
mod rotation;

pub use approximation::{approximation_convergence, measure_energy};
pub use convexity::{convexity_and_radiality, midpoint_defect, ConvexitySettings};
pub use geometric::{sphere_annulus_ratio, HIERARCHY_SLACK};
pub use regularity::{
    ball_potential_decay, boundary_mass, default_gap_tolerance, density_bound, linfty_bound,
    linfty_constants, modulus_of_continuity, outward_probes, potential_continuity, LinftyConstants,
};

use crate::energy::{energy_from_potentials, potential, DiagonalRule};
use crate::measures::{support_structure, Measure, WEIGHT_FLOOR};
use crate::real::{c, Real};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inapplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct DiagnosticReport<T> {
    pub name: String,
    pub passed: bool,
    pub status: Status,
    pub residuals: BTreeMap<String, T>,
    pub parameters: BTreeMap<String, T>,
    pub notes: Vec<String>,
}

impl<T: Real> DiagnosticReport<T> {
    pub fn new(name: &str) -> Self {
        DiagnosticReport {
            name: name.to_string(),
            passed: false,
            status: Status::Fail,
            residuals: BTreeMap::new(),
            parameters: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// Record a residual; non-finite values are kept out of the map and
    /// noted instead.
    pub fn residual(&mut self, key: &str, v: T) -> &mut Self {
        if v.finite() {
            self.residuals.insert(key.to_string(), v);
        } else {
            self.notes.push(format!("{key} is not finite ({v})"));
        }
        self
    }

    pub fn parameter(&mut self, key: &str, v: T) -> &mut Self {
        if v.finite() {
            self.parameters.insert(key.to_string(), v);
        } else {
            self.notes.push(format!("{key} = {v}"));
        }
        self
    }

    pub fn note(&mut self, s: impl Into<String>) -> &mut Self {
        self.notes.push(s.into());
        self
    }

    pub fn finish(mut self, passed: bool) -> Self {
        self.passed = passed;
        self.status = if passed { Status::Pass } else { Status::Fail };
        self
    }

    pub fn inapplicable(mut self, reason: impl Into<String>) -> Self {
        self.notes.push(reason.into());
        self.passed = false;
        self.status = Status::Inapplicable;
        self
    }

    /// Applicable and failed.
    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }
}

/// Points at which a measure's potential is sampled: its atoms, or its
/// radii as one-element vectors.
pub fn atom_points<T: Real>(mu: &Measure<T>) -> Vec<Vec<T>> {
    match mu {
        Measure::Particle(p) => p.positions().to_vec(),
        Measure::Radial(r) => r.radii().iter().map(|&x| vec![x]).collect(),
    }
}

pub fn atom_weights<T: Real>(mu: &Measure<T>) -> Vec<T> {
    match mu {
        Measure::Particle(p) => p.weights().to_vec(),
        Measure::Radial(r) => r.masses().to_vec(),
    }
}

/// Discrete Euler-Lagrange test on the atoms of `mu` (zero-weight atoms
/// are the off-support probes): the potential equals `E(mu)` on the
/// support and is at least `E(mu)` elsewhere, within `tol`.
pub fn el_residual<T: Real>(
    kernel: &crate::kernels::RadialKernel<T>,
    mu: &Measure<T>,
    rule: DiagonalRule<T>,
    tol: T,
) -> crate::Result<DiagnosticReport<T>> {
    let mut rep = DiagnosticReport::new("el_residual");
    let pts = atom_points(mu);
    let w = atom_weights(mu);
    let psi = potential(kernel, mu, &pts, rule)?;
    let e = energy_from_potentials(&w, &psi.values);
    let floor = c::<T>(WEIGHT_FLOOR);
    let mut on = T::zero();
    let mut off: Option<T> = None;
    for (&wi, &pi) in w.iter().zip(&psi.values) {
        if wi > floor {
            on = on.max((pi - e).abs());
        } else {
            let d = pi - e;
            off = Some(off.map_or(d, |m: T| m.min(d)));
        }
    }
    rep.parameter("energy", e).parameter("tol", tol);
    rep.residual("on_support_max", on);
    if let Some(off) = off {
        rep.residual("off_support_min", off);
    } else {
        rep.note("no off-support nodes");
    }
    let ok = on <= tol && off.is_none_or(|o| o >= -tol);
    Ok(rep.finish(ok))
}

/// The support is a segment (1D) or a ball (radial): no gap wider than
/// `gap_tolerance`.
pub fn support_convexity<T: Real>(mu: &Measure<T>, gap_tolerance: T) -> DiagnosticReport<T> {
    let rep_s = support_structure(mu, gap_tolerance);
    let mut rep = DiagnosticReport::new("support_convexity");
    rep.parameter("gap_tolerance", gap_tolerance)
        .parameter("support_radius", rep_s.radius)
        .parameter("support_diameter", rep_s.diameter);
    let widest = rep_s
        .gaps
        .iter()
        .fold(T::zero(), |m, g| m.max(g.to - g.from));
    rep.residual("widest_gap", widest);
    for g in &rep_s.gaps {
        rep.note(format!("gap from {} to {}", g.from, g.to));
    }
    match rep_s.convex {
        None => rep.inapplicable("gap detection needs a 1D particle or a radial measure"),
        Some(ok) => rep.finish(ok),
    }
}
