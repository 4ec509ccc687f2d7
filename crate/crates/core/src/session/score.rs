use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::events::EventRecord;
use super::synth::GroundTruth;
use crate::error::{Error, Result};
use crate::fusion::{CognitiveState, FeedbackKind};
use crate::ocular::Alertness;

/// Agreement on one signal over the windows present in both inputs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SignalScore {
    pub compared: usize,
    pub agreed: usize,
    /// `agreed / compared`; absent when nothing was compared.
    pub agreement: Option<f64>,
    /// truth label → predicted label → count.
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
}

impl SignalScore {
    fn add(&mut self, truth: &str, predicted: &str) {
        self.compared += 1;
        self.agreed += usize::from(truth == predicted);
        *self
            .confusion
            .entry(truth.to_string())
            .or_default()
            .entry(predicted.to_string())
            .or_default() += 1;
    }

    fn finish(&mut self) {
        self.agreement = (self.compared > 0).then(|| self.agreed as f64 / self.compared as f64);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub session_id: String,
    pub truth_windows: usize,
    pub matched_windows: usize,
    pub alertness: SignalScore,
    pub attention: SignalScore,
    /// Only windows where both sides carry an emotion label.
    pub emotion: SignalScore,
    pub frustration: SignalScore,
    pub drowsy_onset_s: Option<f64>,
    pub first_alarm_s: Option<f64>,
    /// First voice alarm minus drowsy onset; absent when either is missing.
    pub alarm_latency_s: Option<f64>,
    pub voice_alarms: usize,
    /// Voice alarms raised in windows whose true alertness is alert.
    pub false_alarms: usize,
}

fn label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::from("?"),
    }
}

fn key(start_s: f64) -> i64 {
    (start_s * 1000.0).round() as i64
}

/// Compares a replay event log with the ground truth of the same session.
pub fn score(events: &[EventRecord], truth: &GroundTruth) -> Result<ScoreReport> {
    if let Some(other) = events
        .iter()
        .filter_map(|e| e.session.as_deref())
        .find(|s| *s != truth.session_id)
    {
        return Err(Error::SessionMismatch {
            events: other.to_string(),
            truth: truth.session_id.clone(),
        });
    }

    let truth_by_start: BTreeMap<i64, _> = truth.windows.iter().map(|w| (key(w.window_start), w)).collect();
    let mut states: Vec<CognitiveState> = Vec::new();
    let mut alarms: Vec<(f64, f64)> = Vec::new();
    for e in events {
        if let Some(s) = e.state()? {
            states.push(s);
        } else if let Some(f) = e.feedback()? {
            if f.kind == FeedbackKind::VoiceAlarm {
                alarms.push((f.t, f.cause.window_start));
            }
        }
    }

    let mut report = ScoreReport {
        session_id: truth.session_id.clone(),
        truth_windows: truth.windows.len(),
        matched_windows: 0,
        alertness: SignalScore::default(),
        attention: SignalScore::default(),
        emotion: SignalScore::default(),
        frustration: SignalScore::default(),
        drowsy_onset_s: truth.drowsy_onset_s,
        first_alarm_s: alarms.first().map(|a| a.0),
        alarm_latency_s: None,
        voice_alarms: alarms.len(),
        false_alarms: 0,
    };
    for s in &states {
        let Some(t) = truth_by_start.get(&key(s.window_start)) else {
            continue;
        };
        report.matched_windows += 1;
        report.alertness.add(&label(&t.alertness), &label(&s.alertness));
        report.attention.add(&label(&t.attention), &label(&s.attention));
        report.frustration.add(&t.frustration.to_string(), &s.frustration.to_string());
        if let (Some(te), Some(se)) = (t.emotion, s.emotion) {
            report.emotion.add(te.as_str(), se.as_str());
        }
    }
    for sig in [
        &mut report.alertness,
        &mut report.attention,
        &mut report.emotion,
        &mut report.frustration,
    ] {
        sig.finish();
    }
    report.false_alarms = alarms
        .iter()
        .filter(|(_, start)| {
            truth_by_start
                .get(&key(*start))
                .is_some_and(|t| t.alertness == Alertness::Alert)
        })
        .count();
    report.alarm_latency_s = match (report.first_alarm_s, truth.drowsy_onset_s) {
        (Some(a), Some(d)) => Some(a - d),
        _ => None,
    };
    Ok(report)
}
