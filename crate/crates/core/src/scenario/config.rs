use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::comms::{Buoy, ChannelParams};
use crate::cyclical::{CyclicalConfig, PatternKind, SearchConfig};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::kinematics::{UavParams, Wind};
use crate::sca::ScaConfig;

mod seed_codec {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(u64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(v),
            Raw::Text(t) => t.parse().map_err(de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    OneFlight,
    Cyclical,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelConfig {
    /// Hz.
    pub bandwidth: f64,
    pub ref_snr_db: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            bandwidth: 1e6,
            ref_snr_db: 70.0,
        }
    }
}

impl ChannelConfig {
    pub fn params(&self) -> ChannelParams {
        ChannelParams::from_db(self.bandwidth, self.ref_snr_db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuoyConfig {
    pub position: Vec2,
    /// Bits to collect over the whole mission.
    pub demand: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct WindConfig {
    /// m/s.
    pub speed: f64,
    /// Direction the wind blows towards, degrees counter-clockwise from +x.
    pub direction_deg: f64,
}

impl WindConfig {
    pub fn wind(&self) -> Result<Wind> {
        Wind::new(self.speed, self.direction_deg.to_radians())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundaryConfig {
    pub start: Vec2,
    pub end: Vec2,
    /// Pinned airspeeds at the endpoints; free when absent.
    pub start_velocity: Option<Vec2>,
    pub end_velocity: Option<Vec2>,
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        Self {
            start: Vec2::new(-600.0, 0.0),
            end: Vec2::new(600.0, 0.0),
            start_velocity: None,
            end_velocity: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscretizationConfig {
    /// Tt (s).
    pub slot_duration: f64,
    /// Mission time T (s) for one-flight runs; searched when absent.
    pub duration: Option<f64>,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        Self {
            slot_duration: 0.5,
            duration: None,
        }
    }
}

/// Starting-trajectory family for one-flight runs: the straight line with
/// optional loiter circles tangent to it next to the buoys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OneFlightConfig {
    pub max_loops: usize,
    /// Loiter radii tried (m).
    pub loop_radii: Vec<f64>,
    /// Mission-time multipliers applied to the baseline's mission time when
    /// no duration is configured.
    pub duration_factors: Vec<f64>,
    /// Distinct mission times refined with SCA.
    pub init_candidates: usize,
    /// Reorder buoys by a nearest-neighbour chain from the start point.
    pub nearest_neighbor_order: bool,
}

impl Default for OneFlightConfig {
    fn default() -> Self {
        Self {
            max_loops: 3,
            loop_radii: vec![150.0, 200.0, 250.0, 300.0, 400.0],
            duration_factors: vec![0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0, 2.5, 3.0],
            init_candidates: 3,
            nearest_neighbor_order: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CyclicalOptions {
    pub patterns: Vec<PatternKind>,
    /// Lap counts to sweep; when empty, M = ⌈Q/per_lap_ref⌉.
    pub laps: Vec<usize>,
    pub per_lap_ref: Option<f64>,
    pub search: SearchConfig,
    pub fine_tune_steps: usize,
    pub fine_tune_span: f64,
    pub orientation_candidates: usize,
}

impl Default for CyclicalOptions {
    fn default() -> Self {
        let d = CyclicalConfig::default();
        Self {
            patterns: vec![PatternKind::Circular],
            laps: Vec::new(),
            per_lap_ref: None,
            search: d.search,
            fine_tune_steps: d.fine_tune_steps,
            fine_tune_span: d.fine_tune_span,
            orientation_candidates: d.orientation_candidates,
        }
    }
}

/// One scenario, as read from a TOML document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub mode: Mode,
    pub uav: UavParams,
    pub channel: ChannelConfig,
    pub buoys: Vec<BuoyConfig>,
    pub wind: WindConfig,
    pub boundary: BoundaryConfig,
    pub discretization: DiscretizationConfig,
    pub one_flight: OneFlightConfig,
    pub cyclical: CyclicalOptions,
    pub solver: ScaConfig,
    /// TOML integers are signed, so seeds above `i64::MAX` are written as strings.
    #[serde(with = "seed_codec")]
    pub seed: u64,
    /// Parallel workers for sweeps; 0 uses every core.
    pub workers: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            mode: Mode::OneFlight,
            uav: UavParams::default(),
            channel: ChannelConfig::default(),
            buoys: vec![BuoyConfig {
                position: Vec2::ZERO,
                demand: 200e6,
            }],
            wind: WindConfig::default(),
            boundary: BoundaryConfig::default(),
            discretization: DiscretizationConfig::default(),
            one_flight: OneFlightConfig::default(),
            cyclical: CyclicalOptions::default(),
            solver: ScaConfig::default(),
            seed: 0,
            workers: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.uav.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.channel
            .params()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if !self.channel.ref_snr_db.is_finite() {
            return bad("reference SNR must be finite".into());
        }
        if self.buoys.is_empty() {
            return bad("at least one buoy is required".into());
        }
        for (k, b) in self.buoys.iter().enumerate() {
            if !b.position.is_finite() || !(b.demand >= 0.0) || !b.demand.is_finite() {
                return bad(format!("buoy {k} has a non-finite position or negative demand"));
            }
        }
        self.wind.wind().map_err(|e| Error::Config(e.to_string()))?;
        if !self.wind.direction_deg.is_finite() {
            return bad("wind direction must be finite".into());
        }
        if !self.boundary.start.is_finite() || !self.boundary.end.is_finite() {
            return bad("boundary points must be finite".into());
        }
        for v in [self.boundary.start_velocity, self.boundary.end_velocity]
            .into_iter()
            .flatten()
        {
            if !v.is_finite() {
                return bad("boundary velocities must be finite".into());
            }
        }
        let d = &self.discretization;
        if !(d.slot_duration > 0.0 && d.slot_duration.is_finite()) {
            return bad("slot_duration must be positive".into());
        }
        if let Some(t) = d.duration {
            if !(t >= 2.0 * d.slot_duration && t.is_finite()) {
                return bad(format!("duration {t} shorter than two slots"));
            }
            if t / d.slot_duration > 1e6 {
                return bad("duration spans too many slots".into());
            }
        }
        let of = &self.one_flight;
        if of.loop_radii.iter().any(|r| !(*r > 0.0 && r.is_finite()))
            || of.duration_factors.iter().any(|f| !(*f > 0.0 && f.is_finite()))
            || of.init_candidates == 0
        {
            return bad("one_flight search settings must be positive".into());
        }
        let c = &self.cyclical;
        if c.laps.iter().any(|m| *m == 0) {
            return bad("lap counts must be at least 1".into());
        }
        if let Some(q0) = c.per_lap_ref {
            if !(q0 > 0.0 && q0.is_finite()) {
                return bad("per_lap_ref must be positive".into());
            }
        }
        if self.mode == Mode::Cyclical && c.patterns.is_empty() {
            return bad("cyclical mode needs at least one pattern".into());
        }
        if c.search.period_max / c.search.period_min.max(f64::MIN_POSITIVE) > 1e6
            || c.search.period_steps * c.search.radius_steps * c.search.theta_steps > 1_000_000
        {
            return bad("pattern search grid too large".into());
        }
        c.search.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.solver.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn channel_params(&self) -> ChannelParams {
        self.channel.params()
    }

    pub fn buoy_list(&self) -> Vec<Buoy> {
        self.buoys
            .iter()
            .map(|b| Buoy::new(b.position, b.demand))
            .collect()
    }

    pub fn cyclical_config(&self) -> CyclicalConfig {
        CyclicalConfig {
            search: self.cyclical.search.clone(),
            sca: self.solver.clone(),
            fine_tune_steps: self.cyclical.fine_tune_steps,
            fine_tune_span: self.cyclical.fine_tune_span,
            orientation_candidates: self.cyclical.orientation_candidates,
            slot_duration: self.discretization.slot_duration,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_parameters() {
        let cfg = ScenarioConfig::from_toml_str("").unwrap();
        assert_eq!(cfg.uav.altitude, 100.0);
        assert_eq!(cfg.uav.v_max, 100.0);
        assert_eq!(cfg.uav.v_stall, 3.0);
        assert_eq!(cfg.uav.a_max, 5.0);
        assert_eq!(cfg.uav.drag_coeff, 9.26e-4);
        assert_eq!(cfg.uav.lift_coeff, 2250.0);
        assert_eq!(cfg.channel.bandwidth, 1e6);
        assert!((cfg.channel_params().ref_snr - 1e7).abs() < 1e-6);
        assert_eq!(cfg.discretization.slot_duration, 0.5);
    }

    #[test]
    fn parses_a_full_document() {
        let text = r#"
            name = "chain"
            mode = "baseline"
            seed = 7
            [wind]
            speed = 5.0
            direction_deg = 180.0
            [[buoys]]
            position = { x = 0.0, y = 0.0 }
            demand = 6e8
            [boundary]
            start = { x = -600.0, y = 0.0 }
            end = { x = 600.0, y = 0.0 }
            [cyclical]
            patterns = ["circular", "eight_shape"]
            laps = [6, 10]
        "#;
        let cfg = ScenarioConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.mode, Mode::Baseline);
        assert_eq!(cfg.buoys[0].demand, 6e8);
        assert!((cfg.wind.wind().unwrap().angle() - std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(cfg.cyclical.patterns.len(), 2);
        let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ScenarioConfig::from_toml_str("[uav]\nv_max = -1.0").is_err());
        assert!(ScenarioConfig::from_toml_str("buoys = []").is_err());
        assert!(ScenarioConfig::from_toml_str("mystery = 1").is_err());
        assert!(ScenarioConfig::from_toml_str("[discretization]\nslot_duration = 0.0").is_err());
    }
}
