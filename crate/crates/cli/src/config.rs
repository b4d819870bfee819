use equimeasure::kernels::RadialKernel;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemClass {
    Radial,
    Particle,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Extent {
    Fixed(f64),
    Named(AutoExtent),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoExtent {
    Auto,
}

/// Radial problems put `count` shells on `[0, extent]`; particle problems
/// use `count` nodes per axis on `[-extent, extent]^N`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub count: usize,
    pub extent: Extent,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_restarts() -> usize {
    5
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            tol: None,
            max_iter: None,
            restarts: default_restarts(),
            seed: 0,
        }
    }
}

fn default_el_tol() -> f64 {
    1e-7
}

fn default_linfty_rho() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}

fn default_boundary_rho() -> Vec<f64> {
    vec![0.02, 0.01]
}

fn default_trials() -> usize {
    50
}

fn default_max_atoms() -> usize {
    6
}

fn one() -> f64 {
    1.0
}

fn default_eps() -> f64 {
    0.1
}

fn default_j() -> Vec<usize> {
    vec![4, 16, 64, 256]
}

fn default_probes() -> usize {
    8
}

fn annulus_d() -> f64 {
    1e-2
}

fn annulus_eta() -> f64 {
    1e-4
}

fn annulus_delta() -> f64 {
    1e-6
}

fn annulus_k() -> f64 {
    100.0
}

/// One entry of the diagnostics list. A bare string selects the check with
/// default settings.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiagnosticSpec {
    ElResidual {
        #[serde(default = "default_el_tol")]
        tol: f64,
    },
    SupportConvexity {
        #[serde(default)]
        gap_tolerance: Option<f64>,
    },
    LinftyBound {
        #[serde(default = "default_linfty_rho")]
        rho: Vec<f64>,
    },
    BoundaryMass {
        #[serde(default = "default_boundary_rho")]
        rho: Vec<f64>,
        #[serde(default)]
        tol: f64,
    },
    BallPotentialDecay {
        #[serde(default)]
        r_tilde: Option<f64>,
        #[serde(default)]
        z: Option<Vec<f64>>,
    },
    PotentialContinuity {
        #[serde(default = "default_probes")]
        probes: usize,
    },
    ConvexityAndRadiality {
        #[serde(default = "default_trials")]
        trials: usize,
        #[serde(default = "default_max_atoms")]
        max_atoms: usize,
        #[serde(default = "one")]
        extent: f64,
        #[serde(default)]
        radial_extent: Option<f64>,
    },
    ApproximationConvergence {
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default = "default_j")]
        j: Vec<usize>,
        #[serde(default = "one")]
        r: f64,
    },
    SphereAnnulusRatio {
        #[serde(default = "one")]
        r: f64,
        #[serde(default = "annulus_d")]
        d: f64,
        #[serde(default = "annulus_eta")]
        eta: f64,
        #[serde(default = "annulus_delta")]
        delta: f64,
        #[serde(default = "annulus_k")]
        hierarchy: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum DiagnosticEntry {
    Name(String),
    Full(DiagnosticSpec),
}

fn diagnostics<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<DiagnosticSpec>, D::Error> {
    let entries = Vec::<DiagnosticEntry>::deserialize(d)?;
    entries
        .into_iter()
        .map(|e| match e {
            DiagnosticEntry::Full(s) => Ok(s),
            DiagnosticEntry::Name(n) => serde_json::from_value(serde_json::json!({ "name": n }))
                .map_err(|e| serde::de::Error::custom(format!("diagnostic {n:?}: {e}"))),
        })
        .collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: RadialKernel<f64>,
    pub dimension: usize,
    pub problem: ProblemClass,
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default, deserialize_with = "diagnostics")]
    pub diagnostics: Vec<DiagnosticSpec>,
    /// Measure CSV to verify instead of solving (as written by `minimize`).
    #[serde(default)]
    pub measure: Option<PathBuf>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> anyhow::Result<()> {
        if self.dimension == 0 {
            anyhow::bail!("dimension must be positive");
        }
        if self.grid.count < 2 {
            anyhow::bail!("grid.count must be at least 2");
        }
        if let Extent::Fixed(e) = self.grid.extent {
            if !(e > 0.0 && e.is_finite()) {
                anyhow::bail!("grid.extent must be positive or \"auto\"");
            }
        }
        if self.problem == ProblemClass::Particle
            && self
                .grid
                .count
                .checked_pow(self.dimension as u32)
                .is_none_or(|n| n > 20_000)
        {
            anyhow::bail!(
                "particle grid of {}^{} nodes is too large",
                self.grid.count,
                self.dimension
            );
        }
        Ok(())
    }
}
