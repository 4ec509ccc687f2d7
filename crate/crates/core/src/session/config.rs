use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{DEFAULT_COMPONENTS, EYE_GRID, FACE_GRID};
use crate::fusion::{Cooldowns, FusionConfig, PolicyConfig};
use crate::ocular::{
    DEFAULT_OVERLAP, DEFAULT_PERCLOS_THRESHOLD, DEFAULT_SR_THRESHOLD, DEFAULT_V_OFF, DEFAULT_V_ON, DEFAULT_WINDOW_S,
};
use crate::tracking::NoiseConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Pixels,
    Measurements,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "pixels" => Ok(Mode::Pixels),
            "measurements" => Ok(Mode::Measurements),
            _ => Err(format!("unknown mode `{s}` (expected pixels or measurements)")),
        }
    }
}

/// Every tunable of a replay or synthesis run. Missing keys take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    /// Frame payload mode. Falls back to the stream header, then measurements.
    pub mode: Option<Mode>,
    pub window_s: f64,
    pub overlap: f64,
    pub perclos_threshold: f64,
    /// Saccade onset / offset speeds, deg/s.
    pub v_on: f64,
    pub v_off: f64,
    /// Attention threshold on the mean saccadic ratio, deg/s².
    pub sr_threshold: f64,
    pub tilt_thresh_deg: f64,
    pub sustain_s: f64,
    pub cooldowns: Cooldowns,
    pub alarm_on_low_attention: bool,
    /// Kalman smoothing of the iris track, in degrees.
    pub iris_noise: NoiseConfig,
    /// Iris coordinate units per degree of gaze angle.
    pub iris_units_per_degree: f64,
    pub face_grid: (usize, usize),
    pub eye_grid: (usize, usize),
    pub pca_components: usize,
    pub eye_lambda: f64,
    pub eye_epochs: usize,
    /// Synthesis: base frame rate and the denser rate of saccade segments.
    pub frame_rate: f64,
    pub saccade_rate: f64,
    /// Synthesis: spacing of face crops, seconds.
    pub emotion_interval_s: f64,
    pub rng_seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            mode: None,
            window_s: DEFAULT_WINDOW_S,
            overlap: DEFAULT_OVERLAP,
            perclos_threshold: DEFAULT_PERCLOS_THRESHOLD,
            v_on: DEFAULT_V_ON,
            v_off: DEFAULT_V_OFF,
            sr_threshold: DEFAULT_SR_THRESHOLD,
            tilt_thresh_deg: 15.0,
            sustain_s: 10.0,
            cooldowns: Cooldowns::default(),
            alarm_on_low_attention: false,
            iris_noise: NoiseConfig {
                q: 1e6,
                r: 1e-4,
                initial_velocity_var: 1e6,
            },
            iris_units_per_degree: 1.0,
            face_grid: FACE_GRID,
            eye_grid: EYE_GRID,
            pca_components: DEFAULT_COMPONENTS,
            eye_lambda: 1e-3,
            eye_epochs: 300,
            frame_rate: 30.0,
            saccade_rate: 300.0,
            emotion_interval_s: 1.0,
            rng_seed: 0,
        }
    }
}

impl SessionConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: SessionConfig = serde_json::from_str(text.trim())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("window_s", self.window_s),
            ("perclos_threshold", self.perclos_threshold),
            ("v_on", self.v_on),
            ("v_off", self.v_off),
            ("sr_threshold", self.sr_threshold),
            ("tilt_thresh_deg", self.tilt_thresh_deg),
            ("sustain_s", self.sustain_s),
            ("iris_units_per_degree", self.iris_units_per_degree),
            ("eye_lambda", self.eye_lambda),
            ("frame_rate", self.frame_rate),
            ("saccade_rate", self.saccade_rate),
            ("emotion_interval_s", self.emotion_interval_s),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::InvalidParameter(format!("overlap must be in [0, 1), got {}", self.overlap)));
        }
        if self.v_on < self.v_off {
            return Err(Error::InvalidParameter("v_on must be >= v_off".into()));
        }
        let c = &self.cooldowns;
        if [c.voice_alarm, c.break_suggestion, c.empathetic_message, c.enrichment_offer]
            .iter()
            .any(|v| !(*v >= 0.0))
        {
            return Err(Error::InvalidParameter("cooldowns must be >= 0".into()));
        }
        self.iris_noise.validate()?;
        let ratio = self.saccade_rate / self.frame_rate;
        if ratio < 1.0 || (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::InvalidParameter(
                "saccade_rate must be an integer multiple of frame_rate".into(),
            ));
        }
        if self.face_grid.0 == 0 || self.face_grid.1 == 0 || self.eye_grid.0 == 0 || self.eye_grid.1 == 0 {
            return Err(Error::InvalidParameter("grids must be at least 1x1".into()));
        }
        Ok(())
    }

    pub fn fusion(&self) -> FusionConfig {
        FusionConfig {
            tilt_thresh_deg: self.tilt_thresh_deg,
            sustain_s: self.sustain_s,
        }
    }

    pub fn policy(&self) -> PolicyConfig {
        PolicyConfig {
            cooldowns: self.cooldowns,
            alarm_on_low_attention: self.alarm_on_low_attention,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = SessionConfig::default();
        c.validate().unwrap();
        assert_eq!((c.window_s, c.perclos_threshold), (180.0, 0.15));
    }

    #[test]
    fn partial_file_and_unknown_keys() {
        let c: SessionConfig = serde_json::from_str(r#"{"window_s": 60, "cooldowns": {"voice_alarm": 10}}"#).unwrap();
        assert_eq!(c.window_s, 60.0);
        assert_eq!(c.cooldowns.voice_alarm, 10.0);
        assert_eq!(c.cooldowns.break_suggestion, 600.0);
        assert!(serde_json::from_str::<SessionConfig>(r#"{"windw_s": 60}"#).is_err());
    }

    #[test]
    fn invalid_values() {
        for patch in [
            r#"{"overlap": 1.0}"#,
            r#"{"perclos_threshold": 0}"#,
            r#"{"v_on": 10, "v_off": 40}"#,
            r#"{"saccade_rate": 100}"#,
            r#"{"cooldowns": {"voice_alarm": -1}}"#,
        ] {
            let c: SessionConfig = serde_json::from_str(patch).unwrap();
            assert!(c.validate().is_err(), "{patch}");
        }
    }
}
