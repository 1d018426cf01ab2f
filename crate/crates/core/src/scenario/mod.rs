//! Scenario files: a chart, exactly one metric section, numeric knobs and
//! task parameters, read from TOML.
//!
//! Validation errors carry the 1-based line of the offending key or section.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distance::Stencil;
use crate::fields::{ChartManifold, Interval, OneFormField, ScalarField, SymTensorField};
use crate::harris::DriftData;
use crate::horizon::TargetSpec;
use crate::magnetic::{fc_metric, EnergyLevel, MagneticError, MagneticStructure};
use crate::metrics::{fermat_from_som, fermat_of_submersion, lorentzianize, KillingSubmersionMetric, PreRandersMetric, SOMSpacetime};

const BUILTINS: [(&str, &str); 8] = [
    ("euclidean_plane", include_str!("../../scenarios/euclidean_plane.toml")),
    ("plane_drift_05", include_str!("../../scenarios/plane_drift_05.toml")),
    ("randers_torus", include_str!("../../scenarios/randers_torus.toml")),
    ("paper_g2_torus", include_str!("../../scenarios/paper_g2_torus.toml")),
    ("vicious_cylinder", include_str!("../../scenarios/vicious_cylinder.toml")),
    ("magnetic_constant_B", include_str!("../../scenarios/magnetic_constant_B.toml")),
    ("magnetic_zeroflux_torus", include_str!("../../scenarios/magnetic_zeroflux_torus.toml")),
    ("cut_torus_point", include_str!("../../scenarios/cut_torus_point.toml")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}

pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ScenarioError {}

/// A number or an expression in `x`, `y` and the scenario constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSrc {
    Number(f64),
    Text(String),
}

impl FieldSrc {
    fn field(&self, constants: &BTreeMap<String, f64>) -> Result<ScalarField, String> {
        match self {
            FieldSrc::Number(c) => Ok(ScalarField::constant(*c)),
            FieldSrc::Text(s) => ScalarField::parse(s, constants).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    /// `[[x_lo, x_hi], [y_lo, y_hi]]`.
    pub bounds: [[f64; 2]; 2],
    pub periodic: [bool; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreRandersConfig {
    /// `[h_xx, h_xy, h_yy]`.
    pub h: [FieldSrc; 3],
    pub omega: [FieldSrc; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SomConfig {
    pub beta: FieldSrc,
    pub omega: [FieldSrc; 2],
    pub g0: [FieldSrc; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KillingConfig {
    pub beta_bar: FieldSrc,
    pub omega_bar: [FieldSrc; 2],
    pub g0_bar: [FieldSrc; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagneticConfig {
    pub g: [FieldSrc; 3],
    pub b: FieldSrc,
    /// Constructed from `b` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<[FieldSrc; 2]>,
    #[serde(default = "half")]
    pub energy: f64,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub n: usize,
    pub stencil: Stencil,
    /// Largest winding per periodic axis tried by shooting.
    pub w_max: i64,
    pub eps_shoot_rel: f64,
    pub seed: u64,
    pub convexity_budget: usize,
    pub periodic_vertices: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self { n: 64, stencil: Stencil::S16, w_max: 2, eps_shoot_rel: 1e-6, seed: 0x5eed, convexity_budget: 8, periodic_vertices: 64 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub winding: Option<[i64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    /// Grid sizes for refinement tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub manifold: ManifoldConfig,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre_randers: Option<PreRandersConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub som: Option<SomConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub killing_submersion: Option<KillingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnetic: Option<MagneticConfig>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub task: Task,
}

/// The metric section a scenario was built from.
#[derive(Debug, Clone)]
pub enum MetricSource {
    PreRanders,
    Som(SOMSpacetime),
    KillingSubmersion(KillingSubmersionMetric, SOMSpacetime),
    Magnetic(MagneticStructure, EnergyLevel),
}

/// A validated scenario with its working pre-Randers metric: the metric
/// itself, the Fermat metric of a spacetime, or `F_c` of a magnetic
/// structure.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub metric: PreRandersMetric,
    pub source: MetricSource,
    pub drift: DriftData,
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Line of the first `[section]` header or `key =` assignment, else 1.
fn anchor(src: &str, key: &str) -> usize {
    src.lines()
        .position(|l| {
            let t = l.trim_start();
            t.starts_with(&format!("[{key}]")) || t.strip_prefix(key).is_some_and(|r| r.trim_start().starts_with('='))
        })
        .map_or(1, |i| i + 1)
}

impl Scenario {
    pub fn parse(src: &str) -> Result<Self, ScenarioError> {
        let sc: Scenario = toml::from_str(src).map_err(|e| ScenarioError {
            line: e.span().map_or(1, |s| line_of(src, s.start)),
            message: e.message().to_string(),
        })?;
        sc.validate(src)?;
        Ok(sc)
    }

    pub fn builtin(name: &str) -> Option<Self> {
        builtin_source(name).map(|s| Self::parse(s).expect("built-in scenarios are valid"))
    }

    fn validate(&self, src: &str) -> Result<(), ScenarioError> {
        let sections = [
            ("pre_randers", self.pre_randers.is_some()),
            ("som", self.som.is_some()),
            ("killing_submersion", self.killing_submersion.is_some()),
            ("magnetic", self.magnetic.is_some()),
        ];
        let present: Vec<&str> = sections.iter().filter(|s| s.1).map(|s| s.0).collect();
        match present.len() {
            0 => {
                return Err(ScenarioError {
                    line: 1,
                    message: "no metric section: expected one of [pre_randers], [som], [killing_submersion], [magnetic]".into(),
                })
            }
            1 => {}
            _ => {
                return Err(ScenarioError {
                    line: anchor(src, present[1]),
                    message: format!("more than one metric section: [{}]", present.join("], [")),
                })
            }
        }
        let numerics = |msg: String, key: &str| ScenarioError { line: anchor(src, key), message: msg };
        if self.numerics.n < 8 {
            return Err(numerics(format!("numerics.n must be at least 8, got {}", self.numerics.n), "n"));
        }
        if !(self.numerics.eps_shoot_rel > 0.0) {
            return Err(numerics("numerics.eps_shoot_rel must be positive".into(), "eps_shoot_rel"));
        }
        if self.numerics.periodic_vertices < 8 {
            return Err(numerics("numerics.periodic_vertices must be at least 8".into(), "periodic_vertices"));
        }
        if let Some(m) = &self.magnetic {
            if !(m.energy > 0.0) {
                return Err(numerics(format!("magnetic.energy must be positive, got {}", m.energy), "energy"));
            }
        }
        Ok(())
    }

    pub fn chart(&self) -> Result<ChartManifold, String> {
        let [x, y] = self.manifold.bounds;
        ChartManifold::new([Interval::new(x[0], x[1]), Interval::new(y[0], y[1])], self.manifold.periodic).map_err(|e| e.to_string())
    }

    /// The resolved configuration as TOML, every default included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenarios serialize")
    }

    /// `to_toml` with every line commented, for output headers.
    pub fn header(&self) -> String {
        self.to_toml().lines().map(|l| if l.is_empty() { "#".to_string() } else { format!("# {l}") }).collect::<Vec<_>>().join("\n")
    }

    /// Builds the fields and the working metric. `src` anchors errors.
    pub fn resolve(&self, src: &str) -> Result<Resolved, ScenarioError> {
        let at = |key: &'static str| move |message: String| ScenarioError { line: anchor(src, key), message };
        let chart = self.chart().map_err(at("manifold"))?;
        let k = &self.constants;
        let scalar = |f: &FieldSrc, key: &'static str| f.field(k).map_err(at(key));
        let one_form = |f: &[FieldSrc; 2], key: &'static str| Ok::<_, ScenarioError>(OneFormField::new(scalar(&f[0], key)?, scalar(&f[1], key)?));
        let tensor = |f: &[FieldSrc; 3], key: &'static str| {
            Ok::<_, ScenarioError>(SymTensorField::new(scalar(&f[0], key)?, scalar(&f[1], key)?, scalar(&f[2], key)?))
        };
        let (metric, source, drift) = if let Some(c) = &self.pre_randers {
            let m = PreRandersMetric::new(chart, tensor(&c.h, "h")?, one_form(&c.omega, "omega")?)
                .map_err(|e| at("pre_randers")(e.to_string()))?;
            let drift = DriftData::from_pre_randers(&m);
            (m, MetricSource::PreRanders, drift)
        } else if let Some(c) = &self.som {
            let s = SOMSpacetime::new(chart, scalar(&c.beta, "beta")?, one_form(&c.omega, "omega")?, tensor(&c.g0, "g0")?)
                .map_err(|e| at("som")(e.to_string()))?;
            let m = fermat_from_som(&s).map_err(|e| at("som")(e.to_string()))?;
            let drift = DriftData::from_som(&s);
            (m, MetricSource::Som(s), drift)
        } else if let Some(c) = &self.killing_submersion {
            let r = KillingSubmersionMetric::new(chart, scalar(&c.beta_bar, "beta_bar")?, one_form(&c.omega_bar, "omega_bar")?, tensor(&c.g0_bar, "g0_bar")?)
                .map_err(|e| at("killing_submersion")(e.to_string()))?;
            let s = lorentzianize(&r).map_err(|e| at("killing_submersion")(e.to_string()))?;
            let m = fermat_of_submersion(&r).map_err(|e| at("killing_submersion")(e.to_string()))?;
            let drift = DriftData::from_som(&s);
            (m, MetricSource::KillingSubmersion(r, s), drift)
        } else {
            let c = self.magnetic.as_ref().expect("validated: one metric section");
            let potential = c.potential.as_ref().map(|p| one_form(p, "potential")).transpose()?;
            let s = MagneticStructure::new(chart, tensor(&c.g, "g")?, scalar(&c.b, "b")?, potential).map_err(|e| {
                let key = if matches!(e, MagneticError::PotentialMismatch { .. }) { "potential" } else { "magnetic" };
                at(key)(e.to_string())
            })?;
            let energy = EnergyLevel::new(c.energy).map_err(|e| at("energy")(e.to_string()))?;
            let m = fc_metric(&s, energy).map_err(|e| at("magnetic")(e.to_string()))?;
            let drift = DriftData::from_pre_randers(&m);
            (m, MetricSource::Magnetic(s, energy), drift)
        };
        Ok(Resolved { scenario: self.clone(), metric, source, drift })
    }
}

impl Resolved {
    pub fn from_source(src: &str) -> Result<Self, ScenarioError> {
        Scenario::parse(src)?.resolve(src)
    }

    pub fn builtin(name: &str) -> Option<Self> {
        builtin_source(name).map(|s| Self::from_source(s).expect("built-in scenarios resolve"))
    }
}
