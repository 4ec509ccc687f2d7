//! Eye-state classification, PERCLOS alertness windows and saccade-based
//! attention.

mod eye_model;
mod perclos;
mod saccade;

pub use eye_model::{
    classify_eye_state, train_eye_model, EyeClassification, EyeState, LinearEyeModel, TrainingMeta,
};
pub use perclos::{perclos, window_plan, Alertness, Window, WindowAccumulator, WindowStats};
pub(crate) use perclos::{plan_ms, stride_ms};
pub use saccade::{
    attention_level, detect_saccades, gaze_speed, Attention, AttentionLevel, GazeSample, SaccadeEvent,
};

/// Default PERCLOS window length in seconds.
pub const DEFAULT_WINDOW_S: f64 = 180.0;
/// Default fraction of each window shared with the next.
pub const DEFAULT_OVERLAP: f64 = 2.0 / 3.0;
/// Closed-eye fraction above which a window is drowsy.
pub const DEFAULT_PERCLOS_THRESHOLD: f64 = 0.15;
/// Saccade onset speed, deg/s.
pub const DEFAULT_V_ON: f64 = 100.0;
/// Saccade offset speed, deg/s.
pub const DEFAULT_V_OFF: f64 = 40.0;
/// Mean saccadic ratio at or above which attention is high, deg/s².
pub const DEFAULT_SR_THRESHOLD: f64 = 5000.0;
