//! Per-command run configurations. Every field has a default, so a config
//! file only lists what differs; unknown fields are rejected.

use anyhow::{bail, ensure, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;
use tubelab_continuation::{BranchKind, ContinuationSettings};
use tubelab_solver::FlowControls;
use tubelab_surface::{build_cylinder_mesh, cylinder_grid, SurfaceMesh};

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            parse(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

pub fn emit<T: Serialize>(config: &T) -> String {
    serde_json::to_string_pretty(config).expect("configs are plain data") + "\n"
}

/// Tube of period `l` and radius `r`, either with about `nodes` dofs or on an
/// explicit `grid` of [axial columns, nodes per ring].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSpec {
    pub l: f64,
    pub r: f64,
    pub nodes: Option<usize>,
    pub grid: Option<[usize; 2]>,
}

// Used when a mesh gives neither a node count nor a grid.
pub const DEFAULT_NODES: usize = 3000;

impl Default for MeshSpec {
    fn default() -> Self {
        Self { l: 10.0, r: 1.0, nodes: None, grid: None }
    }
}

impl MeshSpec {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.l > 0.0 && self.r > 0.0, "mesh needs positive L and r");
        match (self.nodes, self.grid) {
            (Some(_), Some(_)) => bail!("mesh takes either nodes or grid, not both"),
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<SurfaceMesh> {
        self.validate()?;
        Ok(match (self.nodes, self.grid) {
            (Some(n), _) => build_cylinder_mesh(self.l, self.r, n)?,
            (None, None) => build_cylinder_mesh(self.l, self.r, DEFAULT_NODES)?,
            (_, Some([nx, nphi])) => cylinder_grid(self.l, self.r, nx, nphi)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub l: f64,
    pub c0: Vec<f64>,
    pub k_max: f64,
    pub k_samples: usize,
    /// Azimuthal number of the wrinkling line.
    pub wrinkle_n: i32,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self { l: 10.0, c0: vec![0.0], k_max: 3.0, k_samples: 300, wrinkle_n: 2 }
    }
}

impl StabilityConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.l > 0.0, "L must be positive");
        ensure!(!self.c0.is_empty() && self.c0.iter().all(|c| c.is_finite()), "c0 grid must be nonempty and finite");
        ensure!(self.k_max > 0.0 && self.k_samples > 0, "k range must be nonempty");
        ensure!(self.wrinkle_n.abs() >= 2, "wrinkling needs |n| ≥ 2");
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AeConfig {
    pub l: f64,
    pub m: i32,
    pub c0: Vec<f64>,
}

impl Default for AeConfig {
    fn default() -> Self {
        Self { l: 10.0, m: 1, c0: vec![0.0] }
    }
}

impl AeConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.l > 0.0, "L must be positive");
        ensure!(self.m >= 1, "axial mode index must be at least 1");
        ensure!(!self.c0.is_empty() && self.c0.iter().all(|c| c.is_finite()), "c0 list must be nonempty and finite");
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub mesh: MeshSpec,
    pub c0: f64,
    /// Uniform random radial displacement amplitude, drawn from the run seed.
    pub jitter: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { mesh: MeshSpec::default(), c0: 0.0, jitter: 0.0 }
    }
}

impl MeshConfig {
    pub fn validate(&self) -> Result<()> {
        self.mesh.validate()?;
        ensure!(self.jitter >= 0.0 && self.jitter < 0.1 * self.mesh.r, "jitter must be in [0, r/10)");
        Ok(())
    }
}

/// Steady state a flow starts from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StartSpec {
    /// The straight tube, with λ₁ from its discrete mean curvature.
    Cylinder { lambda2: f64 },
    /// A primary branch switched at the analytic BP of `mode` with amplitude
    /// `epsilon` and continued to `lambda2`.
    Branch { kind: BranchKind, mode: [i32; 2], lambda2: f64, epsilon: f64, ds: f64, max_steps: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationSpec {
    None,
    /// δ·cos φ/(1 + ξx²) along the inner normal, centred on the seam.
    Bump { delta: f64, xi: f64 },
    /// δ times the most unstable constrained eigenvector of the start state.
    Eigen { delta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub c0: f64,
    pub mesh: MeshSpec,
    pub start: StartSpec,
    pub perturbation: PerturbationSpec,
    pub controls: FlowControls,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            c0: 0.0,
            mesh: MeshSpec::default(),
            start: StartSpec::Cylinder { lambda2: 0.0 },
            perturbation: PerturbationSpec::None,
            controls: FlowControls::default(),
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        self.mesh.validate()?;
        ensure!(self.c0.is_finite(), "c0 must be finite");
        self.controls.validate()?;
        if let StartSpec::Branch { kind, epsilon, ds, max_steps, .. } = &self.start {
            ensure!(*kind != BranchKind::Trivial, "start branch must be nontrivial");
            ensure!(*epsilon != 0.0 && *ds > 0.0 && *max_steps > 0, "branch start needs nonzero epsilon, positive ds and steps");
        }
        match self.perturbation {
            PerturbationSpec::Bump { xi, .. } => ensure!(xi > 0.0, "bump width parameter must be positive"),
            PerturbationSpec::Eigen { .. } => {
                ensure!(!matches!(self.start, StartSpec::Cylinder { .. }), "eigen perturbation needs a branch start")
            }
            PerturbationSpec::None => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchSpec {
    pub kind: BranchKind,
    pub epsilon: f64,
    pub steps: usize,
    pub ds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinueConfig {
    pub mesh: MeshSpec,
    pub settings: ContinuationSettings,
    pub lambda2_start: f64,
    pub direction: f64,
    pub steps: usize,
    pub ds: f64,
    /// Branches to follow from the detected bifurcation points whose mode fits.
    pub switches: Vec<SwitchSpec>,
}

impl Default for ContinueConfig {
    fn default() -> Self {
        Self {
            mesh: MeshSpec::default(),
            settings: ContinuationSettings::default(),
            lambda2_start: 0.0,
            direction: -1.0,
            steps: 12,
            ds: 0.1,
            switches: Vec::new(),
        }
    }
}

impl ContinueConfig {
    pub fn validate(&self) -> Result<()> {
        self.mesh.validate()?;
        self.settings.validate()?;
        ensure!(self.direction == 1.0 || self.direction == -1.0, "direction must be 1 or -1");
        ensure!(self.ds > 0.0 && self.steps > 0, "need positive ds and steps");
        for s in &self.switches {
            ensure!(s.epsilon != 0.0 && s.ds > 0.0 && s.steps > 0, "switch needs nonzero epsilon, positive ds and steps");
            ensure!(s.kind != BranchKind::Trivial, "cannot switch onto the trivial branch");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub kind: BranchKind,
    pub c0: f64,
    pub mesh: MeshSpec,
    /// Seed amplitude of the ansatz displacement.
    pub epsilon: f64,
    pub steps: usize,
    pub ds: f64,
    pub ds_max: f64,
    /// Largest |amplitude| entering the onset fit.
    pub max_amp: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            kind: BranchKind::Pearling,
            c0: 0.0,
            mesh: MeshSpec::default(),
            epsilon: 0.04,
            steps: 8,
            ds: 0.01,
            ds_max: 0.02,
            max_amp: 0.1,
        }
    }
}

impl CompareConfig {
    pub fn validate(&self) -> Result<()> {
        self.mesh.validate()?;
        ensure!(matches!(self.kind, BranchKind::Pearling | BranchKind::Wrinkling), "compare covers pearling and wrinkling");
        ensure!(self.c0.is_finite(), "c0 must be finite");
        ensure!(self.epsilon != 0.0 && self.steps > 0, "need a nonzero seed and at least one step");
        ensure!(self.ds > 0.0 && self.ds <= self.ds_max, "need 0 < ds ≤ ds_max");
        ensure!(self.max_amp > 0.0, "max_amp must be positive");
        Ok(())
    }
}
