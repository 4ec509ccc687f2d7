use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One gaze sample: time in seconds, position in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl GazeSample {
    pub fn new(t: f64, x: f64, y: f64) -> Self {
        Self { t, x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaccadeEvent {
    pub onset: f64,
    pub offset: f64,
    pub duration: f64,
    /// deg/s
    pub peak_velocity: f64,
    /// Saccadic ratio, peak velocity over duration (deg/s²).
    pub sr: f64,
}

impl SaccadeEvent {
    pub fn new(onset: f64, offset: f64, peak_velocity: f64) -> Self {
        let duration = offset - onset;
        Self {
            onset,
            offset,
            duration,
            peak_velocity,
            sr: peak_velocity / duration,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attention {
    High,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttentionLevel {
    pub level: Attention,
    pub mean_sr: f64,
    pub saccade_count: usize,
}

/// Speed magnitude per sample: central differences inside, one-sided at the
/// ends.
pub fn gaze_speed(track: &[GazeSample]) -> Result<Vec<f64>> {
    if track.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "saccade detection needs at least 3 samples, got {}",
            track.len()
        )));
    }
    if let Some(i) = track.windows(2).position(|w| !(w[1].t > w[0].t)) {
        return Err(Error::NonMonotonic { index: i + 1 });
    }
    let n = track.len();
    let speed = |a: &GazeSample, b: &GazeSample| {
        let dt = b.t - a.t;
        ((b.x - a.x) / dt).hypot((b.y - a.y) / dt)
    };
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            speed(&track[lo], &track[hi])
        })
        .collect())
}

/// Boundary speeds at or below this fraction of `v_off` count as rest.
const REST_FRACTION: f64 = 0.1;

/// Velocity-threshold saccade detection with hysteresis.
///
/// A candidate opens at the first sample with speed `>= v_on` and stays open
/// while speed is `>= v_off`. Its boundaries are then moved outward while
/// speed keeps falling, stopping at a local minimum or at the first sample
/// at rest (`<= 0.1 * v_off`), so the duration spans the whole velocity burst
/// rather than the supra-threshold core.
pub fn detect_saccades(track: &[GazeSample], v_on: f64, v_off: f64) -> Result<Vec<SaccadeEvent>> {
    if !(v_off > 0.0) || v_on < v_off {
        return Err(Error::InvalidParameter(format!(
            "need v_on >= v_off > 0 (v_on={v_on}, v_off={v_off})"
        )));
    }
    let speed = gaze_speed(track)?;
    let n = speed.len();
    let mut events = Vec::new();
    let mut i = 0;
    while i < n {
        if speed[i] < v_on {
            i += 1;
            continue;
        }
        let mut end = i;
        while end + 1 < n && speed[end + 1] >= v_off {
            end += 1;
        }
        let peak = speed[i..=end].iter().copied().fold(0.0, f64::max);

        let floor = v_off * REST_FRACTION;
        let mut onset = i;
        while onset > 0 && speed[onset] > floor && speed[onset - 1] < speed[onset] {
            onset -= 1;
        }
        let mut offset = end;
        while offset + 1 < n && speed[offset] > floor && speed[offset + 1] < speed[offset] {
            offset += 1;
        }
        let (t0, t1) = (track[onset].t, track[offset].t);
        if t1 > t0 {
            events.push(SaccadeEvent::new(t0, t1, peak));
        }
        i = end + 1;
    }
    Ok(events)
}

/// Mean saccadic ratio over `events`; high iff at least one saccade and the
/// mean is `>= sr_threshold`.
pub fn attention_level(events: &[SaccadeEvent], sr_threshold: f64) -> AttentionLevel {
    let count = events.len();
    let mean_sr = if count == 0 {
        0.0
    } else {
        events.iter().map(|e| e.sr).sum::<f64>() / count as f64
    };
    let level = if count >= 1 && mean_sr >= sr_threshold {
        Attention::High
    } else {
        Attention::Low
    };
    AttentionLevel {
        level,
        mean_sr,
        saccade_count: count,
    }
}
