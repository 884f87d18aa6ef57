use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pcf::PiecewiseConstant;
use crate::scalar::{Float, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error("connection radius {radius} does not exceed gamma·(ln N / N)^(1/d) = {bound}")]
    RadiusTooSmall { radius: f64, bound: f64 },
}

/// Temporal modulation `w(t)` of the flow amplitude.
pub type Modulation = PiecewiseConstant<Float, Float>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Domain {
    pub fn contains(&self, x: [f64; 2]) -> bool {
        (0..2).all(|i| x[i] >= self.min[i] && x[i] <= self.max[i])
    }

    pub fn clip(&self, x: [f64; 2]) -> ([f64; 2], bool) {
        let c = [x[0].clamp(self.min[0], self.max[0]), x[1].clamp(self.min[1], self.max[1])];
        (c, c != x)
    }

    pub fn diagonal(&self) -> f64 {
        (self.max[0] - self.min[0]).hypot(self.max[1] - self.min[1])
    }

    pub fn area(&self) -> f64 {
        (self.max[0] - self.min[0]) * (self.max[1] - self.min[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gyre {
    /// Peak flow speed `A`.
    pub amplitude: f64,
    /// Cell length `L`.
    pub cell_length: f64,
    #[serde(default = "unit_modulation")]
    pub modulation: Modulation,
}

fn unit_modulation() -> Modulation {
    PiecewiseConstant::constant(Float::new(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vehicle {
    pub v_max: f64,
    pub dt: f64,
    /// Number of evenly spaced bearing samples.
    #[serde(default = "default_bearings")]
    pub bearings: usize,
    /// Rollout horizon `h` in time units.
    pub horizon: f64,
    /// Reach radius; defaults to 5% of the connection radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reach: Option<f64>,
}

fn default_bearings() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    /// Roadmap size, start and goal included.
    pub n: usize,
    pub gamma: f64,
    /// Pinned connection radius; derived from `gamma` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    pub seed: u64,
    pub start: [f64; 2],
    pub goal: [f64; 2],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeBuild {
    /// Departure-time grid step; defaults to `4·dt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub departure_step: Option<f64>,
    /// Departure horizon; defaults to `1.5·diagonal / v_max` plus the last
    /// modulation breakpoint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Merge tolerance for neighbouring samples; defaults to `0.01·dt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

/// Time-varying gyre flow, vehicle model and roadmap sampling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowScene {
    pub domain: Domain,
    pub gyre: Gyre,
    pub vehicle: Vehicle,
    pub sampling: Sampling,
    #[serde(default)]
    pub edges: EdgeBuild,
}

/// Spatial dimension of shipped scenes.
pub const DIMENSION: i32 = 2;

impl FlowScene {
    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        let scene: FlowScene = serde_json::from_str(text).map_err(|e| SceneError::Invalid(e.to_string()))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |msg: String| Err(SceneError::Invalid(msg));
        let d = &self.domain;
        if !(d.min[0] < d.max[0] && d.min[1] < d.max[1]) {
            return bad("domain must have positive extent".into());
        }
        let v = &self.vehicle;
        if !(v.v_max > 0.0 && v.dt > 0.0 && v.horizon > 0.0) {
            return bad("v_max, dt and horizon must be positive".into());
        }
        if v.bearings == 0 {
            return bad("at least one bearing sample is required".into());
        }
        if v.reach.is_some_and(|r| r <= 0.0) {
            return bad("reach radius must be positive".into());
        }
        if !(self.gyre.amplitude >= 0.0 && self.gyre.cell_length > 0.0) {
            return bad("gyre amplitude must be non-negative and cell length positive".into());
        }
        let w = &self.gyre.modulation;
        let values = w.pieces().iter().map(|(_, v)| *v).chain([*w.default_value()]);
        for value in values {
            if !value.is_finite() || value.get() < 0.0 {
                return bad(format!("modulation values must be finite and non-negative, found {value}"));
            }
        }
        let s = &self.sampling;
        if s.n < 2 {
            return bad("roadmap needs at least start and goal".into());
        }
        if s.gamma <= 0.0 {
            return bad("gamma must be positive".into());
        }
        if !d.contains(s.start) || !d.contains(s.goal) {
            return bad("start and goal must lie in the domain".into());
        }
        let e = &self.edges;
        if e.departure_step.is_some_and(|x| x <= 0.0) || e.horizon.is_some_and(|x| x <= 0.0) {
            return bad("departure step and horizon must be positive".into());
        }
        if e.tolerance.is_some_and(|x| x < 0.0) {
            return bad("edge tolerance must be non-negative".into());
        }
        let bound = self.radius_bound();
        let r = self.radius();
        if r <= bound {
            return Err(SceneError::RadiusTooSmall { radius: r, bound });
        }
        Ok(())
    }

    /// `gamma · (ln N / N)^(1/d)`, which the connection radius must exceed.
    pub fn radius_bound(&self) -> f64 {
        let n = self.sampling.n as f64;
        self.sampling.gamma * (n.ln() / n).powf(1.0 / DIMENSION as f64)
    }

    /// Connection radius: the pinned value, or just above the bound.
    pub fn radius(&self) -> f64 {
        self.sampling.radius.unwrap_or_else(|| self.radius_bound() * (1.0 + 1e-9))
    }

    /// Discrete rollout horizon `H = ceil(h / dt)`.
    pub fn steps(&self) -> usize {
        (self.vehicle.horizon / self.vehicle.dt - 1e-9).ceil().max(1.0) as usize
    }

    pub fn reach(&self) -> f64 {
        self.vehicle.reach.unwrap_or(0.05 * self.radius())
    }

    pub fn departure_step(&self) -> f64 {
        self.edges.departure_step.unwrap_or(4.0 * self.vehicle.dt)
    }

    pub fn last_modulation_breakpoint(&self) -> f64 {
        self.gyre.modulation.pieces().first().map_or(0.0, |(p, _)| p.get().max(0.0))
    }

    pub fn departure_horizon(&self) -> f64 {
        self.edges
            .horizon
            .unwrap_or(1.5 * self.domain.diagonal() / self.vehicle.v_max + self.last_modulation_breakpoint())
    }

    pub fn edge_tolerance(&self) -> f64 {
        self.edges.tolerance.unwrap_or(0.01 * self.vehicle.dt)
    }

    /// Largest modulation value; bounds the flow speed by `A · w_max`.
    pub fn max_modulation(&self) -> f64 {
        let w = &self.gyre.modulation;
        w.pieces()
            .iter()
            .map(|(_, v)| v.get())
            .chain([w.default_value().get()])
            .fold(0.0, f64::max)
    }

    pub fn modulation_at(&self, t: f64) -> f64 {
        self.gyre.modulation.eval(Float::new(t)).get()
    }
}
