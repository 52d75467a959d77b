//! JSON scenario configuration.
//!
//! A config is one flat JSON object. `scenario` selects the experiment and
//! decides which other keys are required or allowed; anything else is an
//! error. [`ScenarioConfig::resolve`] turns a config into a typed [`Scenario`]
//! and checks grid nesting before any computation starts.
//!
//! ```json
//! { "scenario": "epsilon_study", "epsilons": [1, 0.1, 0.01], "j": 20,
//!   "delta": 0.01, "threshold": 1e-6, "z": 0.1 }
//! ```
//!
//! `delta` is either a number or a rule `"<c>h^2"` (`"0.2h^2"`, `"0.4h²"`),
//! meaning `c / J^2`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenarios::{
    steps_for, ConvergenceSetup, EpsilonSetup, InitialShape, JunctionFix, ResolutionAxis,
    CONVERGENCE_ROTATION_DEG, SELF_INTERSECT_SNAPSHOT_TIMES, SPIRAL_SNAPSHOT_TIMES,
};
use crate::spectral::SystemConvention;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Convergence,
    ConvergenceTime,
    EpsilonStudy,
    ConditioningMass,
    ConditioningSystem,
    Spiral,
    SelfIntersect,
    Custom,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).map_err(|_| fmt::Error)?;
        write!(f, "{}", s.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    Value(f64),
    Rule(String),
}

impl DeltaSpec {
    /// Coefficient `c` of a rule `c h^2`.
    pub fn rule_factor(&self) -> Result<Option<f64>> {
        match self {
            DeltaSpec::Value(_) => Ok(None),
            DeltaSpec::Rule(s) => {
                let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
                let head = ["h^2", "h²", "*h^2", "*h²"]
                    .iter()
                    .rev()
                    .find_map(|suffix| compact.strip_suffix(suffix))
                    .ok_or_else(|| Error::Config(format!("delta rule {s:?} must look like \"0.2h^2\"")))?;
                let head = head.strip_suffix('*').unwrap_or(head);
                let c: f64 = if head.is_empty() {
                    1.0
                } else {
                    head.parse()
                        .map_err(|_| Error::Config(format!("bad coefficient in delta rule {s:?}")))?
                };
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::Config(format!("delta rule {s:?} needs a positive coefficient")));
                }
                Ok(Some(c))
            }
        }
    }

    pub fn resolve(&self, elements: usize) -> Result<f64> {
        match self {
            DeltaSpec::Value(v) => {
                if !(*v > 0.0 && v.is_finite()) {
                    return Err(Error::Config(format!("delta must be positive, got {v}")));
                }
                Ok(*v)
            }
            DeltaSpec::Rule(_) => {
                let h = 1.0 / elements as f64;
                Ok(self.rule_factor()?.expect("rule") * h * h)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Option<ScenarioKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<OneOrMany<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<DeltaSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<OneOrMany<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_ref: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_ref: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotation_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convention: Option<SystemConvention>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub junction_fix: Option<JunctionFix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialShape>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_times: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_stride: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Validated, typed form of a config.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Convergence(ConvergenceSetup),
    EpsilonStudy(EpsilonSetup),
    ConditioningMass {
        elements: usize,
        delta: f64,
        epsilons: Vec<f64>,
        rotation_deg: f64,
    },
    ConditioningSystem {
        elements: Vec<usize>,
        delta_factor: f64,
        epsilons: (f64, f64),
        convention: SystemConvention,
    },
    Spiral {
        elements: usize,
        epsilon: f64,
        deltas: Vec<f64>,
        final_time: f64,
        snapshot_times: Vec<f64>,
    },
    SelfIntersect {
        elements: usize,
        epsilon: f64,
        delta: f64,
        final_time: f64,
        junction_fix: JunctionFix,
        snapshot_times: Vec<f64>,
    },
    Custom {
        initial: InitialShape,
        elements: usize,
        epsilon: f64,
        delta: f64,
        steps: usize,
        threshold: Option<f64>,
        z: f64,
        junction_fix: JunctionFix,
        snapshot_stride: Option<usize>,
    },
}

pub const DEFAULT_MAX_STEPS: usize = 200_000;
pub const DEFAULT_Z: f64 = 0.1;

fn need<T: Clone>(v: &Option<T>, name: &str, kind: ScenarioKind) -> Result<T> {
    v.clone()
        .ok_or_else(|| Error::Config(format!("scenario {kind} requires \"{name}\"")))
}

fn positive(v: f64, name: &str) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Config(format!("\"{name}\" must be positive, got {v}")));
    }
    Ok(v)
}

fn single(v: OneOrMany<usize>, name: &str, kind: ScenarioKind) -> Result<usize> {
    match v {
        OneOrMany::One(x) => Ok(x),
        OneOrMany::Many(_) => Err(Error::Config(format!(
            "scenario {kind} takes a single value for \"{name}\""
        ))),
    }
}

fn nonempty<T>(v: Vec<T>, name: &str) -> Result<Vec<T>> {
    if v.is_empty() {
        return Err(Error::Config(format!("\"{name}\" must not be empty")));
    }
    Ok(v)
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn kind(&self) -> Result<ScenarioKind> {
        self.scenario
            .ok_or_else(|| Error::Config("missing \"scenario\"".into()))
    }

    fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut add = |cond: bool, name: &'static str| {
            if cond {
                out.push(name);
            }
        };
        add(self.epsilon.is_some(), "epsilon");
        add(self.epsilons.is_some(), "epsilons");
        add(self.j.is_some(), "j");
        add(self.delta.is_some(), "delta");
        add(self.deltas.is_some(), "deltas");
        add(self.t_final.is_some(), "t_final");
        add(self.steps.is_some(), "steps");
        add(self.j_ref.is_some(), "j_ref");
        add(self.n_ref.is_some(), "n_ref");
        add(self.threshold.is_some(), "threshold");
        add(self.max_steps.is_some(), "max_steps");
        add(self.z.is_some(), "z");
        add(self.rotation_deg.is_some(), "rotation_deg");
        add(self.convention.is_some(), "convention");
        add(self.junction_fix.is_some(), "junction_fix");
        add(self.initial.is_some(), "initial");
        add(self.snapshot_times.is_some(), "snapshot_times");
        add(self.snapshot_stride.is_some(), "snapshot_stride");
        out
    }

    /// Keys a scenario may carry besides `scenario` and `output_dir`.
    fn allowed(kind: ScenarioKind) -> &'static [&'static str] {
        match kind {
            ScenarioKind::Convergence => &["epsilon", "j", "delta", "t_final", "j_ref", "n_ref"],
            ScenarioKind::ConvergenceTime => &["epsilon", "j", "steps", "t_final", "n_ref"],
            ScenarioKind::EpsilonStudy => &["epsilons", "j", "delta", "threshold", "z", "max_steps"],
            ScenarioKind::ConditioningMass => &["epsilons", "j", "delta", "rotation_deg"],
            ScenarioKind::ConditioningSystem => &["epsilons", "j", "delta", "convention"],
            ScenarioKind::Spiral => &["epsilon", "j", "deltas", "t_final", "snapshot_times"],
            ScenarioKind::SelfIntersect => &[
                "epsilon",
                "j",
                "delta",
                "t_final",
                "junction_fix",
                "snapshot_times",
            ],
            ScenarioKind::Custom => &[
                "initial",
                "epsilon",
                "j",
                "delta",
                "steps",
                "t_final",
                "threshold",
                "z",
                "junction_fix",
                "snapshot_stride",
            ],
        }
    }

    pub fn resolve(&self) -> Result<Scenario> {
        let kind = self.kind()?;
        let allowed = Self::allowed(kind);
        let extra: Vec<&str> = self.present().into_iter().filter(|k| !allowed.contains(k)).collect();
        if !extra.is_empty() {
            return Err(Error::Config(format!(
                "scenario {kind} does not take {}",
                extra.iter().map(|k| format!("\"{k}\"")).collect::<Vec<_>>().join(", ")
            )));
        }
        match kind {
            ScenarioKind::Convergence => {
                let epsilon = positive(need(&self.epsilon, "epsilon", kind)?, "epsilon")?;
                let js = nonempty(need(&self.j, "j", kind)?.to_vec(), "j")?;
                let delta = need(&self.delta, "delta", kind)?;
                let t = positive(need(&self.t_final, "t_final", kind)?, "t_final")?;
                let j_ref = need(&self.j_ref, "j_ref", kind)?;
                let n_ref = need(&self.n_ref, "n_ref", kind)?;
                let runs = js
                    .iter()
                    .map(|&j| Ok((j, steps_for(t, delta.resolve(j)?)?)))
                    .collect::<Result<Vec<_>>>()?;
                let setup = ConvergenceSetup {
                    epsilon,
                    final_time: t,
                    runs,
                    reference: (j_ref, n_ref),
                    axis: ResolutionAxis::Space,
                };
                setup.validate()?;
                Ok(Scenario::Convergence(setup))
            }
            ScenarioKind::ConvergenceTime => {
                let epsilon = positive(need(&self.epsilon, "epsilon", kind)?, "epsilon")?;
                let j = single(need(&self.j, "j", kind)?, "j", kind)?;
                let ns = nonempty(need(&self.steps, "steps", kind)?.to_vec(), "steps")?;
                let t = positive(need(&self.t_final, "t_final", kind)?, "t_final")?;
                let n_ref = need(&self.n_ref, "n_ref", kind)?;
                let setup = ConvergenceSetup {
                    epsilon,
                    final_time: t,
                    runs: ns.iter().map(|&n| (j, n)).collect(),
                    reference: (j, n_ref),
                    axis: ResolutionAxis::Time,
                };
                setup.validate()?;
                Ok(Scenario::Convergence(setup))
            }
            ScenarioKind::EpsilonStudy => {
                let elements = single(need(&self.j, "j", kind)?, "j", kind)?;
                let epsilons = nonempty(need(&self.epsilons, "epsilons", kind)?, "epsilons")?;
                for &e in &epsilons {
                    positive(e, "epsilons")?;
                }
                Ok(Scenario::EpsilonStudy(EpsilonSetup {
                    elements,
                    delta: need(&self.delta, "delta", kind)?.resolve(elements)?,
                    z: need(&self.z, "z", kind)?,
                    threshold: positive(need(&self.threshold, "threshold", kind)?, "threshold")?,
                    epsilons,
                    max_steps: self.max_steps.unwrap_or(DEFAULT_MAX_STEPS),
                }))
            }
            ScenarioKind::ConditioningMass => {
                let elements = single(need(&self.j, "j", kind)?, "j", kind)?;
                let epsilons = nonempty(need(&self.epsilons, "epsilons", kind)?, "epsilons")?;
                for &e in &epsilons {
                    positive(e, "epsilons")?;
                }
                Ok(Scenario::ConditioningMass {
                    elements,
                    delta: need(&self.delta, "delta", kind)?.resolve(elements)?,
                    epsilons,
                    rotation_deg: self.rotation_deg.unwrap_or(CONVERGENCE_ROTATION_DEG),
                })
            }
            ScenarioKind::ConditioningSystem => {
                let elements = nonempty(need(&self.j, "j", kind)?.to_vec(), "j")?;
                let eps = need(&self.epsilons, "epsilons", kind)?;
                if eps.len() != 2 {
                    return Err(Error::Config(format!(
                        "scenario {kind} needs exactly two \"epsilons\", got {}",
                        eps.len()
                    )));
                }
                let delta_factor = need(&self.delta, "delta", kind)?.rule_factor()?.ok_or_else(|| {
                    Error::Config(format!("scenario {kind} needs \"delta\" as a rule like \"0.4h^2\""))
                })?;
                Ok(Scenario::ConditioningSystem {
                    elements,
                    delta_factor,
                    epsilons: (positive(eps[0], "epsilons")?, positive(eps[1], "epsilons")?),
                    convention: self.convention.unwrap_or_default(),
                })
            }
            ScenarioKind::Spiral => {
                let deltas = nonempty(need(&self.deltas, "deltas", kind)?, "deltas")?;
                let final_time = positive(need(&self.t_final, "t_final", kind)?, "t_final")?;
                for &d in &deltas {
                    steps_for(final_time, positive(d, "deltas")?)?;
                }
                Ok(Scenario::Spiral {
                    elements: single(need(&self.j, "j", kind)?, "j", kind)?,
                    epsilon: positive(need(&self.epsilon, "epsilon", kind)?, "epsilon")?,
                    deltas,
                    final_time,
                    snapshot_times: self
                        .snapshot_times
                        .clone()
                        .unwrap_or_else(|| SPIRAL_SNAPSHOT_TIMES.to_vec()),
                })
            }
            ScenarioKind::SelfIntersect => {
                let elements = single(need(&self.j, "j", kind)?, "j", kind)?;
                let delta = need(&self.delta, "delta", kind)?.resolve(elements)?;
                let final_time = positive(need(&self.t_final, "t_final", kind)?, "t_final")?;
                steps_for(final_time, delta)?;
                Ok(Scenario::SelfIntersect {
                    elements,
                    epsilon: positive(need(&self.epsilon, "epsilon", kind)?, "epsilon")?,
                    delta,
                    final_time,
                    junction_fix: self.junction_fix.unwrap_or_default(),
                    snapshot_times: self
                        .snapshot_times
                        .clone()
                        .unwrap_or_else(|| SELF_INTERSECT_SNAPSHOT_TIMES.to_vec()),
                })
            }
            ScenarioKind::Custom => {
                let elements = single(need(&self.j, "j", kind)?, "j", kind)?;
                let delta = need(&self.delta, "delta", kind)?.resolve(elements)?;
                let steps = match (&self.steps, self.t_final) {
                    (Some(s), None) => single(s.clone(), "steps", kind)?,
                    (None, Some(t)) => steps_for(positive(t, "t_final")?, delta)?,
                    _ => {
                        return Err(Error::Config(format!(
                            "scenario {kind} needs exactly one of \"steps\" and \"t_final\""
                        )))
                    }
                };
                Ok(Scenario::Custom {
                    initial: need(&self.initial, "initial", kind)?,
                    elements,
                    epsilon: positive(need(&self.epsilon, "epsilon", kind)?, "epsilon")?,
                    delta,
                    steps,
                    threshold: self.threshold.map(|t| positive(t, "threshold")).transpose()?,
                    z: self.z.unwrap_or(DEFAULT_Z),
                    junction_fix: self.junction_fix.unwrap_or_default(),
                    snapshot_stride: self.snapshot_stride,
                })
            }
        }
    }
}

/// Ready-made configs for the standard experiments.
pub mod presets {
    use super::*;

    /// Spatial convergence at desk scale (`J_ref = 180`), or at the full
    /// `J_ref = 360` when `paper_scale` is set.
    pub fn convergence(paper_scale: bool) -> ScenarioConfig {
        let (js, j_ref, n_ref) = if paper_scale {
            (vec![20, 30, 36, 45, 60, 90, 120, 180], 360, 129_600)
        } else {
            (vec![20, 30, 36, 45, 60, 90], 180, 32_400)
        };
        ScenarioConfig {
            scenario: Some(ScenarioKind::Convergence),
            epsilon: Some(1e-3),
            j: Some(OneOrMany::Many(js)),
            delta: Some(DeltaSpec::Rule("0.2h^2".into())),
            t_final: Some(0.2),
            j_ref: Some(j_ref),
            n_ref: Some(n_ref),
            ..Default::default()
        }
    }

    pub fn convergence_time() -> ScenarioConfig {
        ScenarioConfig {
            scenario: Some(ScenarioKind::ConvergenceTime),
            epsilon: Some(1e-3),
            j: Some(OneOrMany::One(60)),
            steps: Some(OneOrMany::Many(vec![3456, 4320, 5760, 6912, 8640])),
            t_final: Some(0.2),
            n_ref: Some(34_560),
            ..Default::default()
        }
    }

    pub fn epsilon_study() -> ScenarioConfig {
        ScenarioConfig {
            scenario: Some(ScenarioKind::EpsilonStudy),
            epsilons: Some(vec![1.0, 0.1, 0.01, 0.001, 1e-4, 1e-5]),
            j: Some(OneOrMany::One(20)),
            delta: Some(DeltaSpec::Value(0.01)),
            threshold: Some(1e-6),
            z: Some(DEFAULT_Z),
            ..Default::default()
        }
    }

    pub fn conditioning_mass() -> ScenarioConfig {
        ScenarioConfig {
            scenario: Some(ScenarioKind::ConditioningMass),
            epsilons: Some((0..11).map(|l| 0.3f64.powi(l)).collect()),
            j: Some(OneOrMany::One(20)),
            delta: Some(DeltaSpec::Value(0.0025)),
            ..Default::default()
        }
    }

    pub fn conditioning_system() -> ScenarioConfig {
        ScenarioConfig {
            scenario: Some(ScenarioKind::ConditioningSystem),
            epsilons: Some(vec![0.1, 1e-5]),
            j: Some(OneOrMany::Many(vec![10, 16, 24, 36, 48, 64])),
            delta: Some(DeltaSpec::Rule("0.4h^2".into())),
            ..Default::default()
        }
    }

    /// The step sizes `4e-4, 2e-4, 1e-4` are a chosen sweep.
    pub fn spiral() -> ScenarioConfig {
        ScenarioConfig {
            scenario: Some(ScenarioKind::Spiral),
            epsilon: Some(1e-3),
            j: Some(OneOrMany::One(60)),
            deltas: Some(vec![4e-4, 2e-4, 1e-4]),
            t_final: Some(0.48),
            ..Default::default()
        }
    }

    /// `J = 60` by default; `coarse` selects `J = 20`.
    pub fn self_intersect(coarse: bool) -> ScenarioConfig {
        ScenarioConfig {
            scenario: Some(ScenarioKind::SelfIntersect),
            epsilon: Some(1e-3),
            j: Some(OneOrMany::One(if coarse { 20 } else { 60 })),
            delta: Some(DeltaSpec::Value(1e-4)),
            t_final: Some(0.5),
            ..Default::default()
        }
    }
}
