//! Scenario configs: per-scenario defaults, the JSON file on top, then
//! `--override key=value` flags on top of that.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use sce_core::kinematics::{massive_thermal_moments, thermal_moments, vacuum_moments, CouplingParams, MomentConvention};
use sce_core::mode_oracle::{bump_moments, BumpSpec};
use sce_core::propagator::Potential;
use sce_core::sce::{calibrate_c1, BackgroundField, Formulation, PhysicsParams, SmoothRamp, SolveOptions, TowInTimes};
use sce_core::seqspace::{MomentVector, NormSpec, Triple, WeightSpec};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    MinkowskiCheck,
    VacuumEvolve,
    ThermalEvolve,
    Conformal,
    Towin,
    Shoot,
    OracleCompare,
    BoundsAudit,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Self::MinkowskiCheck,
        Self::VacuumEvolve,
        Self::ThermalEvolve,
        Self::Conformal,
        Self::Towin,
        Self::Shoot,
        Self::OracleCompare,
        Self::BoundsAudit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::MinkowskiCheck => "minkowski-check",
            Self::VacuumEvolve => "vacuum-evolve",
            Self::ThermalEvolve => "thermal-evolve",
            Self::Conformal => "conformal",
            Self::Towin => "towin",
            Self::Shoot => "shoot",
            Self::OracleCompare => "oracle-compare",
            Self::BoundsAudit => "bounds-audit",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Self::MinkowskiCheck => "static Minkowski with calibrated c1: residuals and drift of a",
            Self::VacuumEvolve => "expanding start from vacuum moments, energy constraint solved for a'''",
            Self::ThermalEvolve => "as vacuum-evolve with thermal moments (short span: factorial growth)",
            Self::Conformal => "both formulations at the conformal point; a'' and a''' are made consistent from a, a'",
            Self::Towin => "tow-in along a smooth ramp, switching the SCE on between tau_init and tau_free (span unused)",
            Self::Shoot => "tow-in plus bisection on the cubic bump until the energy constraint holds",
            Self::OracleCompare => "mode-by-mode evolution against the moment hierarchy for a bump state",
            Self::BoundsAudit => "geometric and factorial evolution bounds against measured norm growth",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum C1Spec {
    Value(f64),
    Keyword(Calibrate),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Calibrate {
    Calibrate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum A3Spec {
    Value(f64),
    /// Solve the energy constraint for a‴.
    Keyword(EnergyKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyKeyword {
    Energy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub m: f64,
    pub xi: f64,
    pub kappa: f64,
    pub c1: C1Spec,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub lambda0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JetConfig {
    pub a: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: A3Spec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum MomentSource {
    Vacuum { mu: f64 },
    /// Massless closed form for m = 0, Bose–Einstein integrals otherwise.
    Thermal { beta: f64, mu: f64 },
    Bump { bump: BumpSpec },
    Explicit { entries: Vec<Triple> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub jet: JetConfig,
    pub moments: MomentSource,
    pub background: BackgroundField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormConfig {
    /// ℓᵖ exponent; null means p = ∞.
    pub p: Option<f64>,
    pub weights: WeightSpec,
}

impl NormConfig {
    pub fn spec(&self) -> NormSpec {
        NormSpec { p: self.p.unwrap_or(f64::INFINITY), weights: self.weights.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TowInConfig {
    pub ramp: SmoothRamp,
    pub times: TowInTimes,
    /// Allowed jet and moment jump between τ_init and τ_free.
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShootConfig {
    pub delta: f64,
    pub c_range: [f64; 2],
    pub rel_tol: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub bump: BumpSpec,
    pub potential: Potential,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub potential: Potential,
    pub omega: f64,
    pub upsilon: f64,
    pub checkpoints: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub physics: PhysicsConfig,
    pub initial: InitialConfig,
    pub span: [f64; 2],
    pub formulation: Formulation,
    pub solver: SolveOptions,
    /// Highest moment index N.
    pub order: usize,
    /// Extra moments for the tail-sensitivity rerun (0 disables it).
    pub tail_extra: usize,
    pub norm: NormConfig,
    pub towin: TowInConfig,
    pub shoot: ShootConfig,
    pub oracle: OracleConfig,
    pub bounds: BoundsConfig,
    pub output: OutputConfig,
}

/// 3c3 + c4 at the conformal point, put entirely into c3.
pub fn conformal_c3() -> f64 {
    -1.0 / (3.0 * 5760.0 * PI * PI)
}

/// Default config for a scenario, as JSON.
pub fn defaults(s: Scenario) -> Value {
    let (jet, moments, span, tail) = match s {
        Scenario::MinkowskiCheck => (static_jet(), vacuum(), [0.0, 1.0], 0),
        Scenario::VacuumEvolve => (expanding(0.2), vacuum(), [0.0, 1.0], 4),
        Scenario::ThermalEvolve => {
            (expanding(0.2), json!({"source": "thermal", "beta": 1.0, "mu": 1.0}), [0.0, 0.2], 0)
        }
        Scenario::Conformal => (json!({"a": 1.0, "a1": 0.1, "a2": 0.0, "a3": 0.0}), vacuum(), [0.0, 0.5], 0),
        Scenario::OracleCompare => (static_jet(), vacuum(), [0.0, 0.5], 0),
        // the small-time factorial estimate only applies for τ below about 0.09 here
        Scenario::BoundsAudit => (static_jet(), vacuum(), [0.0, 0.1], 0),
        Scenario::Towin | Scenario::Shoot => (static_jet(), vacuum(), [0.0, 1.0], 0),
    };
    let (xi, c3) = if s == Scenario::Conformal { (1.0 / 6.0, conformal_c3()) } else { (0.0, -1.0 / 3.0) };
    json!({
        "scenario": s.name(),
        "physics": {"m": 1.0, "xi": xi, "kappa": 1.0, "c1": "calibrate", "c2": 0.0, "c3": c3, "c4": 0.0, "lambda0": 1.0},
        "initial": {"jet": jet, "moments": moments, "background": {"phi": 0.0, "pi": 0.0}},
        "span": span,
        "formulation": "fourth_order",
        "solver": {"tol": 1e-12, "sample_dt": 0.01, "blowup": 1e8, "max_steps": 2_000_000},
        "order": 12,
        "tail_extra": tail,
        "norm": {"p": null, "weights": {"kind": "geometric", "c": 1.0, "omega": 1.0}},
        "towin": {
            "ramp": {"tau_start": 0.2, "width": 0.5, "slope": 0.2},
            "times": {"tow": 0.0, "init": 0.8, "free": 0.82, "stop": 1.5},
            "epsilon": 0.05
        },
        "shoot": {"delta": 0.2, "c_range": [-10.0, 10.0], "rel_tol": 1e-10, "max_steps": 60},
        "oracle": {
            "bump": {"center": 1.0, "width": 0.5, "amplitude": [1.0, 0.2, -0.5], "smoothness": 8, "nodes": 257},
            "potential": {"kind": "sinusoid", "base": 1.0, "amplitude": 0.3, "frequency": 1.0, "phase": 0.0},
            "tol": 1e-12
        },
        "bounds": {
            "potential": {"kind": "sinusoid", "base": 1.0, "amplitude": 0.3, "frequency": 1.0, "phase": 0.0},
            "omega": 1.0,
            "upsilon": 2.0,
            "checkpoints": 10
        },
        "output": {"dir": "out"}
    })
}

fn vacuum() -> Value {
    json!({"source": "vacuum", "mu": 1.0})
}

fn static_jet() -> Value {
    json!({"a": 1.0, "a1": 0.0, "a2": 0.0, "a3": 0.0})
}

fn expanding(a1: f64) -> Value {
    json!({"a": 1.0, "a1": a1, "a2": 0.0, "a3": "energy"})
}

/// Recursive merge; objects merge key by key, anything else replaces.
/// Switching a tagged union (a different "source" or "kind") replaces the object.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            let switches_tag = ["source", "kind"].iter().any(|k| matches!((b.get(*k), t.get(*k)), (Some(x), Some(y)) if x != y));
            if switches_tag {
                *b = t;
                return;
            }
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) => *b = t,
    }
}

/// Apply `a.b.c=value`; the value is parsed as JSON, falling back to a string.
pub fn apply_override(root: &mut Value, assignment: &str) -> CliResult<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{assignment}' is not of the form key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut slot = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let map = slot.as_object_mut().ok_or_else(|| CliError::at(&parts[..i].join("."), "is not an object"))?;
        if i + 1 == parts.len() {
            let mut top = Map::new();
            top.insert(part.to_string(), value);
            let mut wrapper = Value::Object(std::mem::take(map));
            merge(&mut wrapper, Value::Object(top));
            *map = match wrapper {
                Value::Object(m) => m,
                _ => unreachable!(),
            };
            return Ok(());
        }
        slot = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

impl ScenarioConfig {
    /// Defaults for the file's scenario, overlaid with the file, then the overrides.
    pub fn resolve(file: Value, overrides: &[String]) -> CliResult<Self> {
        let name = file
            .get("scenario")
            .and_then(Value::as_str)
            .ok_or_else(|| CliError::at("scenario", "missing or not a string"))?;
        let scenario = Scenario::from_name(name).ok_or_else(|| {
            let known: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
            CliError::at("scenario", format!("unknown scenario '{name}' (expected one of {})", known.join(", ")))
        })?;
        let mut v = defaults(scenario);
        merge(&mut v, file);
        for o in overrides {
            apply_override(&mut v, o)?;
        }
        let cfg: Self = serde_path_to_error::deserialize(v).map_err(|e| CliError::at(&e.path().to_string(), e.inner()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_str(text: &str, overrides: &[String]) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let v: Value = serde_path_to_error::deserialize(de).map_err(|e| CliError::Config(e.to_string()))?;
        Self::resolve(v, overrides)
    }

    pub fn validate(&self) -> CliResult<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        let ph = &self.physics;
        if !(ph.m >= 0.0 && ph.m.is_finite()) {
            return Err(CliError::at("physics.m", "must be >= 0"));
        }
        if !positive(ph.kappa) {
            return Err(CliError::at("physics.kappa", "must be > 0"));
        }
        if !positive(ph.lambda0) {
            return Err(CliError::at("physics.lambda0", "must be > 0"));
        }
        if matches!(ph.c1, C1Spec::Keyword(_)) && ph.m == 0.0 {
            return Err(CliError::at("physics.c1", "calibration needs m > 0"));
        }
        if !positive(self.initial.jet.a) {
            return Err(CliError::at("initial.jet.a", format!("scale factor must be > 0, got {}", self.initial.jet.a)));
        }
        if !(self.span[1] > self.span[0]) || !self.span.iter().all(|x| x.is_finite()) {
            return Err(CliError::at("span", "must be an increasing pair of finite times"));
        }
        if self.order == 0 {
            return Err(CliError::at("order", "must be >= 1"));
        }
        if !positive(self.solver.tol) || !positive(self.solver.sample_dt) || !(self.solver.blowup > 1.0) {
            return Err(CliError::at("solver", "tol and sample_dt must be > 0 and blowup > 1"));
        }
        match &self.initial.moments {
            MomentSource::Vacuum { mu } | MomentSource::Thermal { mu, .. } if !positive(*mu) => {
                return Err(CliError::at("initial.moments.mu", "must be > 0"));
            }
            MomentSource::Thermal { beta, .. } if !positive(*beta) => {
                return Err(CliError::at("initial.moments.beta", "must be > 0"));
            }
            MomentSource::Explicit { entries } if entries.len() < 2 => {
                return Err(CliError::at("initial.moments.entries", "need at least M_0 and M_1"));
            }
            _ => {}
        }
        if let Some(p) = self.norm.p {
            if !(p >= 1.0) {
                return Err(CliError::at("norm.p", "must be >= 1 (null for the sup norm)"));
            }
        }
        self.norm.weights.validate().map_err(|e| CliError::at("norm.weights", e))?;
        self.towin.times.validate().map_err(|e| CliError::at("towin.times", e))?;
        if !positive(self.towin.ramp.width) {
            return Err(CliError::at("towin.ramp.width", "must be > 0"));
        }
        if !positive(self.shoot.delta) {
            return Err(CliError::at("shoot.delta", "must be > 0"));
        }
        if !(self.shoot.c_range[1] > self.shoot.c_range[0]) {
            return Err(CliError::at("shoot.c_range", "must be increasing"));
        }
        self.oracle.bump.validate().map_err(|e| CliError::at("oracle.bump", e))?;
        if !(self.bounds.upsilon > self.bounds.omega && positive(self.bounds.omega)) {
            return Err(CliError::at("bounds", "need 0 < omega < upsilon"));
        }
        let needs_conformal =
            self.scenario == Scenario::Conformal || self.formulation == Formulation::ConformalSecondOrder;
        if needs_conformal && !self.physics_params()?.is_conformal() {
            return Err(CliError::at("physics", "the second-order formulation needs xi = 1/6 and 3c3 + c4 = -1/(5760 pi^2)"));
        }
        Ok(())
    }

    pub fn moments(&self) -> CliResult<MomentVector> {
        self.moments_at(self.order)
    }

    pub fn moments_at(&self, order: usize) -> CliResult<MomentVector> {
        let m = self.physics.m;
        let out = match &self.initial.moments {
            MomentSource::Vacuum { mu } => vacuum_moments(m, *mu, order),
            MomentSource::Thermal { beta, mu } => {
                if m == 0.0 {
                    thermal_moments(*beta, order, MomentConvention::PositionSpace)
                } else {
                    massive_thermal_moments(m, *mu, *beta, order)
                }
            }
            MomentSource::Bump { bump } => bump_moments(bump, order),
            MomentSource::Explicit { entries } => MomentVector::new(entries.clone()).map(|v| v.resized(order)),
        };
        out.map_err(|e| CliError::at("initial.moments", e))
    }

    /// Physics parameters with c1 resolved (calibration uses the initial state).
    pub fn physics_params(&self) -> CliResult<PhysicsParams> {
        let ph = &self.physics;
        let coupling = CouplingParams::new(ph.m, ph.xi).map_err(|e| CliError::at("physics", e))?;
        let c1 = match ph.c1 {
            C1Spec::Value(v) => v,
            C1Spec::Keyword(_) => {
                let m0 = self.initial.background.shift(&self.moments_at(self.order.max(1))?.get(0));
                calibrate_c1(m0[2], ph.m, ph.lambda0).map_err(|e| CliError::at("physics.c1", e))?
            }
        };
        PhysicsParams::new(coupling, ph.kappa, [c1, ph.c2, ph.c3, ph.c4], ph.lambda0).map_err(|e| CliError::at("physics", e))
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
