//! Run configuration: one JSON document plus `--set` overrides.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;

use dfrt_core::discretization::{BasisSet, KineticKind};
use dfrt_core::grid::Grid;
use dfrt_core::ks::{ScfConfig, ScfInit, XcModel};
use dfrt_core::potential::{InteractionSpec, PotentialKind, PotentialSpec, Term};
use dfrt_core::C64;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub potential: PotentialConfig,
    pub interaction: InteractionConfig,
    pub grid: Option<GridConfig>,
    pub kinetic: KineticConfig,
    pub theta: Option<f64>,
    pub theta_list: Option<Vec<f64>>,
    /// Energy window `[lo, hi]` for resonance selection.
    pub window: Option<[f64; 2]>,
    pub basis: Option<BasisConfig>,
    pub scf: ScfBlock,
    pub two_electron: TwoElectronConfig,
    pub density: Option<DensityConfig>,
    pub scaling: ScalingConfig,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKindConfig {
    DoubleSigmoidGaussian,
    Harmonic,
    CustomClosedForm,
    Tabulated,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TermConfig {
    Sigmoid { height: f64, steepness: f64, center: f64 },
    Gaussian { depth: f64, center: f64, width2: f64 },
    Harmonic { k: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub kind: PotentialKindConfig,
    pub a: f64,
    pub alpha: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub gamma: f64,
    pub step_steepness: f64,
    pub omega: f64,
    pub terms: Vec<TermConfig>,
    pub table: Vec<[f64; 2]>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        let p = PotentialSpec::default();
        PotentialConfig {
            kind: PotentialKindConfig::DoubleSigmoidGaussian,
            a: p.a,
            alpha: p.alpha,
            b: p.b,
            c: p.c,
            d: p.d,
            gamma: p.gamma,
            step_steepness: p.step_steepness,
            omega: p.omega,
            terms: Vec::new(),
            table: Vec::new(),
        }
    }
}

impl PotentialConfig {
    pub fn spec(&self) -> Result<PotentialSpec, CliError> {
        let kind = match self.kind {
            PotentialKindConfig::DoubleSigmoidGaussian => PotentialKind::DoubleSigmoidGaussian,
            PotentialKindConfig::Harmonic => PotentialKind::Harmonic,
            PotentialKindConfig::CustomClosedForm => PotentialKind::CustomClosedForm,
            PotentialKindConfig::Tabulated => PotentialKind::Tabulated,
        };
        let terms = self
            .terms
            .iter()
            .map(|t| match *t {
                TermConfig::Sigmoid { height, steepness, center } => Term::Sigmoid { height, steepness, center },
                TermConfig::Gaussian { depth, center, width2 } => Term::Gaussian { depth, center, width2 },
                TermConfig::Harmonic { k } => Term::Harmonic { k },
            })
            .collect();
        let spec = PotentialSpec {
            kind,
            a: self.a,
            alpha: self.alpha,
            b: self.b,
            c: self.c,
            d: self.d,
            gamma: self.gamma,
            step_steepness: self.step_steepness,
            omega: self.omega,
            terms,
            table: self.table.iter().map(|p| (p[0], p[1])).collect(),
        };
        spec.validate().map_err(|e| CliError::config(format!("potential: {e}")))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InteractionConfig {
    pub strength: f64,
    pub softening: f64,
}

impl Default for InteractionConfig {
    fn default() -> Self {
        let w = InteractionSpec::default();
        InteractionConfig { strength: w.strength, softening: w.softening }
    }
}

impl InteractionConfig {
    pub fn spec(&self) -> Result<InteractionSpec, CliError> {
        let w = InteractionSpec::soft_coulomb(self.strength, self.softening);
        w.validate().map_err(|e| CliError::config(format!("interaction: {e}")))?;
        Ok(w)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, Deserialize, Default, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum KineticConfig {
    #[default]
    Fgh,
    Fd2,
    Fd4,
    Fd6,
}

impl From<KineticConfig> for KineticKind {
    fn from(k: KineticConfig) -> Self {
        match k {
            KineticConfig::Fgh => KineticKind::Fgh,
            KineticConfig::Fd2 => KineticKind::Fd2,
            KineticConfig::Fd4 => KineticKind::Fd4,
            KineticConfig::Fd6 => KineticKind::Fd6,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKindConfig {
    ParticleInBox,
    HarmonicOscillator,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub kind: BasisKindConfig,
    pub sizes: Vec<usize>,
    /// Box of the particle-in-a-box basis; defaults to the grid.
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    #[serde(default = "one")]
    pub frequency: f64,
    #[serde(default)]
    pub center: f64,
    pub quadrature_points: Option<usize>,
}

fn one() -> f64 {
    1.0
}

impl BasisConfig {
    pub fn basis(&self, size: usize, grid: &Grid) -> BasisSet {
        let mut b = match self.kind {
            BasisKindConfig::ParticleInBox => {
                BasisSet::particle_in_box(self.x_min.unwrap_or(grid.x_min), self.x_max.unwrap_or(grid.x_max), size)
            }
            BasisKindConfig::HarmonicOscillator => {
                let mut b = BasisSet::harmonic_oscillator(self.frequency, size);
                if let dfrt_core::discretization::BasisKind::HarmonicOscillator { center, .. } = &mut b.kind {
                    *center = self.center;
                }
                b
            }
        };
        b.quadrature_points = self.quadrature_points;
        b
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Default, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum XcConfig {
    None,
    #[default]
    ExactExchange,
}

#[derive(Debug, Clone, Copy, Deserialize, Default, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum InitConfig {
    #[default]
    ThetaZeroBound,
    NonInteracting,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScfBlock {
    pub mixing: f64,
    pub tol_density: f64,
    pub tol_energy: f64,
    pub max_iter: usize,
    pub xc: XcConfig,
    pub n_electrons: usize,
    pub init: InitConfig,
    /// Well-deepening factor of the θ = 0 starting guess.
    pub deepen: f64,
    /// Physical threshold `[re, im]`; derived from the potential by default.
    pub threshold: Option<[f64; 2]>,
}

impl Default for ScfBlock {
    fn default() -> Self {
        let c = ScfConfig::default();
        let deepen = match c.init {
            ScfInit::ThetaZeroBound { deepen } => deepen,
            _ => 1.5,
        };
        ScfBlock {
            mixing: c.mixing,
            tol_density: c.tol_density,
            tol_energy: c.tol_energy,
            max_iter: c.max_iter,
            xc: XcConfig::ExactExchange,
            n_electrons: c.n_electrons,
            init: InitConfig::ThetaZeroBound,
            deepen,
            threshold: None,
        }
    }
}

impl ScfBlock {
    pub fn config(&self, theta: f64, kinetic: KineticKind) -> Result<ScfConfig, CliError> {
        let c = ScfConfig {
            theta,
            mixing: self.mixing,
            tol_density: self.tol_density,
            tol_energy: self.tol_energy,
            max_iter: self.max_iter,
            xc: match self.xc {
                XcConfig::None => XcModel::None,
                XcConfig::ExactExchange => XcModel::ExactExchange2e,
            },
            n_electrons: self.n_electrons,
            init: match self.init {
                InitConfig::ThetaZeroBound => ScfInit::ThetaZeroBound { deepen: self.deepen },
                InitConfig::NonInteracting => ScfInit::NonInteractingAtTheta,
            },
            kinetic,
            threshold: self.threshold.map(|t| C64::new(t[0], t[1])),
        };
        c.validate().map_err(|e| CliError::config(format!("scf: {e}")))?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Default, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum BackendConfig {
    #[default]
    Dense,
    ShiftInvert,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoElectronConfig {
    pub backend: BackendConfig,
    /// Complex shift `[re, im]` of the sparse solver.
    pub shift: Option<[f64; 2]>,
    pub n_eigs: usize,
    pub krylov_dim: Option<usize>,
    /// Also write `pair_amplitudes.bin`.
    pub dump_amplitudes: bool,
}

impl Default for TwoElectronConfig {
    fn default() -> Self {
        TwoElectronConfig { backend: BackendConfig::Dense, shift: None, n_eigs: 12, krylov_dim: None, dump_amplitudes: false }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub path: PathBuf,
    /// Defaults to the rounded real part of `∫n`.
    pub n_electrons: Option<usize>,
    /// Resonance energy and threshold `[re, im]` for the tail fit.
    pub energy: Option<[f64; 2]>,
    pub threshold: Option<[f64; 2]>,
    pub theta: Option<f64>,
    pub left_window: Option<[f64; 2]>,
    pub right_window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    pub thetas: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub n_electrons: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig { thetas: vec![0.1, 0.2, 0.3], sigmas: vec![1.0, 2.5], n_electrons: 2 }
    }
}

impl RunConfig {
    /// Reads `path` (or starts from defaults) and applies `overrides`.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::config(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str::<Value>(&text)
                    .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Default::default()),
        };
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        serde_json::from_value(doc).map_err(|e| CliError::config(format!("config: {e}")))
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        let g = self.grid.ok_or_else(|| CliError::config("missing `grid`"))?;
        Grid::new(g.x_min, g.x_max, g.n_points).map_err(|e| CliError::config(format!("grid: {e}")))
    }

    pub fn theta(&self) -> Result<f64, CliError> {
        let t = self.theta.ok_or_else(|| CliError::config("missing `theta`"))?;
        if !(t.is_finite() && (0.0..dfrt_core::THETA_MAX).contains(&t)) {
            return Err(CliError::config(format!("theta = {t} outside [0, pi/4)")));
        }
        Ok(t)
    }

    pub fn window(&self) -> Result<Option<(f64, f64)>, CliError> {
        match self.window {
            Some([lo, hi]) if !(lo < hi) => Err(CliError::config("window needs lo < hi")),
            w => Ok(w.map(|[a, b]| (a, b))),
        }
    }
}

/// `key.path=value`; the value is JSON when it parses, a string otherwise.
fn apply_override(doc: &mut Value, item: &str) -> Result<(), CliError> {
    let (key, raw) = item.split_once('=').ok_or_else(|| CliError::config(format!("--set needs KEY=VALUE, got `{item}`")))?;
    let value = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::config(format!("bad --set key `{key}`")));
    }
    let mut node = doc;
    for p in &parts[..parts.len() - 1] {
        if !node.is_object() {
            return Err(CliError::config(format!("--set {key}: `{p}` is not a table")));
        }
        node = node.as_object_mut().unwrap().entry(p.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    match node {
        Value::Object(m) => {
            m.insert(parts[parts.len() - 1].to_string(), value);
            Ok(())
        }
        _ => Err(CliError::config(format!("--set {key}: parent is not a table"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_create_nested_keys() {
        let c = RunConfig::load(None, &["grid.x_min=-5".into(), "grid.x_max=5".into(), "grid.n_points=64".into(), "theta=0.2".into()])
            .unwrap();
        let g = c.grid().unwrap();
        assert_eq!((g.x_min, g.x_max, g.n_points), (-5.0, 5.0, 64));
        assert_eq!(c.theta().unwrap(), 0.2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::load(None, &["potentail.a=1".into()]).is_err());
        assert!(RunConfig::load(None, &["potential.nope=1".into()]).is_err());
        assert!(RunConfig::load(None, &["scf.mixing=abc".into()]).is_err());
    }

    #[test]
    fn string_values_fall_back() {
        let c = RunConfig::load(None, &["kinetic=fd6".into(), "potential.kind=harmonic".into()]).unwrap();
        assert_eq!(c.kinetic, KineticConfig::Fd6);
        assert_eq!(c.potential.spec().unwrap().kind, PotentialKind::Harmonic);
    }

    #[test]
    fn theta_is_range_checked() {
        let c = RunConfig::load(None, &["theta=0.9".into()]).unwrap();
        assert!(c.theta().is_err());
    }

    #[test]
    fn custom_terms_parse() {
        let c = RunConfig::load(
            None,
            &[r#"potential={"kind":"custom-closed-form","terms":[{"type":"gaussian","depth":1,"center":0,"width2":1}]}"#.into()],
        )
        .unwrap();
        assert_eq!(c.potential.spec().unwrap().terms().len(), 1);
    }
}
