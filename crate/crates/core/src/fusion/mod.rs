//! Per-window cognitive state and the feedback policy built on it.

mod policy;

pub use policy::{feedback_policy, select_kind, Cooldowns, FeedbackEvent, FeedbackKind, FeedbackPolicy, PolicyConfig};

use serde::{Deserialize, Serialize};

use crate::emotion::{EmotionLabel, Valence};
use crate::ocular::{Alertness, Attention, AttentionLevel, WindowStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    /// Absolute head tilt above which a frame counts as tilted, degrees.
    pub tilt_thresh_deg: f64,
    /// Contiguous tilted time that raises the frustration flag, seconds.
    pub sustain_s: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            tilt_thresh_deg: 15.0,
            sustain_s: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CognitiveState {
    pub window_start: f64,
    pub window_end: f64,
    pub perclos: f64,
    pub alertness: Alertness,
    pub attention: Attention,
    pub mean_sr: f64,
    /// Modal emotion over the window; `None` when no face was classified.
    pub emotion: Option<EmotionLabel>,
    pub valence: Option<Valence>,
    pub frustration: bool,
    pub fatigue: bool,
}

impl CognitiveState {
    pub fn is_negative(&self) -> bool {
        self.valence == Some(Valence::Negative)
    }

    pub fn is_positive(&self) -> bool {
        self.valence == Some(Valence::Positive)
    }
}

/// Most frequent label; among equally frequent labels the one seen last wins.
pub fn modal_emotion(emotions: &[(i64, EmotionLabel)]) -> Option<EmotionLabel> {
    let mut tally: Vec<(EmotionLabel, usize, i64)> = Vec::new();
    for &(t, label) in emotions {
        match tally.iter_mut().find(|(l, _, _)| *l == label) {
            Some(entry) => {
                entry.1 += 1;
                entry.2 = entry.2.max(t);
            }
            None => tally.push((label, 1, t)),
        }
    }
    tally
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(a.2.cmp(&b.2)))
        .map(|(l, _, _)| l)
}

/// True iff some run of consecutive samples with `|tilt| > thresh` spans at
/// least `sustain_s` from its first to its last sample.
pub fn sustained_tilt(poses: &[(i64, f64)], tilt_thresh_deg: f64, sustain_s: f64) -> bool {
    let need_ms = (sustain_s * 1000.0).round() as i64;
    let mut run_start: Option<i64> = None;
    for &(t, tilt) in poses {
        if tilt.abs() > tilt_thresh_deg {
            let start = *run_start.get_or_insert(t);
            if t - start >= need_ms {
                return true;
            }
        } else {
            run_start = None;
        }
    }
    false
}

/// Combines one window's measurements. Emotion and pose samples outside the
/// window are ignored.
pub fn fuse(
    stats: &WindowStats,
    attention: &AttentionLevel,
    emotions: &[(i64, EmotionLabel)],
    head_poses: &[(i64, f64)],
    cfg: &FusionConfig,
) -> CognitiveState {
    let start_ms = (stats.window_start * 1000.0).round() as i64;
    let end_ms = (stats.window_end * 1000.0).round() as i64;
    let inside = |t: i64| start_ms <= t && t < end_ms;
    let emotions: Vec<_> = emotions.iter().copied().filter(|(t, _)| inside(*t)).collect();
    let poses: Vec<_> = head_poses.iter().copied().filter(|(t, _)| inside(*t)).collect();

    let emotion = modal_emotion(&emotions);
    let valence = emotion.map(EmotionLabel::valence);
    let frustration = sustained_tilt(&poses, cfg.tilt_thresh_deg, cfg.sustain_s);
    let drowsy = stats.alertness == Alertness::Drowsy;
    let fatigue = drowsy || (attention.level == Attention::Low && valence == Some(Valence::Negative));

    CognitiveState {
        window_start: stats.window_start,
        window_end: stats.window_end,
        perclos: stats.perclos,
        alertness: stats.alertness,
        attention: attention.level,
        mean_sr: attention.mean_sr,
        emotion,
        valence,
        frustration,
        fatigue,
    }
}
