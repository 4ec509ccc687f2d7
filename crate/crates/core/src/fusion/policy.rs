use serde::{Deserialize, Serialize};

use super::CognitiveState;
use crate::ocular::{Alertness, Attention};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    VoiceAlarm,
    BreakSuggestion,
    EmpatheticMessage,
    EnrichmentOffer,
}

impl FeedbackKind {
    pub const ALL: [FeedbackKind; 4] = [
        FeedbackKind::VoiceAlarm,
        FeedbackKind::BreakSuggestion,
        FeedbackKind::EmpatheticMessage,
        FeedbackKind::EnrichmentOffer,
    ];
}

/// Minimum spacing between two events of the same kind, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Cooldowns {
    pub voice_alarm: f64,
    pub break_suggestion: f64,
    pub empathetic_message: f64,
    pub enrichment_offer: f64,
}

impl Default for Cooldowns {
    fn default() -> Self {
        Self {
            voice_alarm: 300.0,
            break_suggestion: 600.0,
            empathetic_message: 120.0,
            enrichment_offer: 600.0,
        }
    }
}

impl Cooldowns {
    pub fn get(&self, kind: FeedbackKind) -> f64 {
        match kind {
            FeedbackKind::VoiceAlarm => self.voice_alarm,
            FeedbackKind::BreakSuggestion => self.break_suggestion,
            FeedbackKind::EmpatheticMessage => self.empathetic_message,
            FeedbackKind::EnrichmentOffer => self.enrichment_offer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub cooldowns: Cooldowns,
    /// Also sound the alarm on low attention alone. Off by default.
    pub alarm_on_low_attention: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub t: f64,
    pub kind: FeedbackKind,
    pub cause: CognitiveState,
    pub cooldown_until: f64,
}

/// Highest-priority kind the state calls for, ignoring cooldowns.
///
/// 1. drowsy: voice alarm
/// 2. fatigue or frustration: break suggestion
/// 3. negative valence: empathetic message
/// 4. positive valence, alert and attentive: enrichment offer
pub fn select_kind(state: &CognitiveState, cfg: &PolicyConfig) -> Option<FeedbackKind> {
    let low_attention = state.attention == Attention::Low;
    if state.alertness == Alertness::Drowsy || (cfg.alarm_on_low_attention && low_attention) {
        Some(FeedbackKind::VoiceAlarm)
    } else if state.fatigue || state.frustration {
        Some(FeedbackKind::BreakSuggestion)
    } else if state.is_negative() {
        Some(FeedbackKind::EmpatheticMessage)
    } else if state.is_positive() && state.alertness == Alertness::Alert && state.attention == Attention::High {
        Some(FeedbackKind::EnrichmentOffer)
    } else {
        None
    }
}

/// Event for this window, if any. The selected kind is not replaced by a
/// lower-priority one when it is cooling down; the window stays silent.
pub fn feedback_policy(state: &CognitiveState, history: &[FeedbackEvent], cfg: &PolicyConfig) -> Option<FeedbackEvent> {
    let t = state.window_end;
    if history.last().is_some_and(|e| e.t >= t) {
        return None;
    }
    let kind = select_kind(state, cfg)?;
    let cooling = history
        .iter()
        .rev()
        .find(|e| e.kind == kind)
        .is_some_and(|e| t < e.cooldown_until);
    if cooling {
        return None;
    }
    Some(FeedbackEvent {
        t,
        kind,
        cause: state.clone(),
        cooldown_until: t + cfg.cooldowns.get(kind),
    })
}

/// Per-session policy runner that owns the event history.
#[derive(Debug, Clone, Default)]
pub struct FeedbackPolicy {
    cfg: PolicyConfig,
    history: Vec<FeedbackEvent>,
}

impl FeedbackPolicy {
    pub fn new(cfg: PolicyConfig) -> Self {
        Self {
            cfg,
            history: Vec::new(),
        }
    }

    pub fn evaluate(&mut self, state: &CognitiveState) -> Option<FeedbackEvent> {
        let event = feedback_policy(state, &self.history, &self.cfg)?;
        self.history.push(event.clone());
        Some(event)
    }

    pub fn history(&self) -> &[FeedbackEvent] {
        &self.history
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emotion::{EmotionLabel, Valence};

    fn state(end: f64, drowsy: bool, emotion: Option<EmotionLabel>, high: bool) -> CognitiveState {
        let valence = emotion.map(EmotionLabel::valence);
        let attention = if high { Attention::High } else { Attention::Low };
        CognitiveState {
            window_start: end - 180.0,
            window_end: end,
            perclos: if drowsy { 0.4 } else { 0.05 },
            alertness: if drowsy { Alertness::Drowsy } else { Alertness::Alert },
            attention,
            mean_sr: 0.0,
            emotion,
            valence,
            frustration: false,
            fatigue: drowsy || (!high && valence == Some(Valence::Negative)),
        }
    }

    #[test]
    fn drowsy_beats_negative_mood() {
        let s = state(180.0, true, Some(EmotionLabel::Fear), true);
        let e = feedback_policy(&s, &[], &PolicyConfig::default()).unwrap();
        assert_eq!(e.kind, FeedbackKind::VoiceAlarm);
        assert_eq!(e.cooldown_until, 480.0);
    }

    #[test]
    fn positive_attentive_gets_enrichment() {
        let s = state(180.0, false, Some(EmotionLabel::Happiness), true);
        assert_eq!(
            feedback_policy(&s, &[], &PolicyConfig::default()).map(|e| e.kind),
            Some(FeedbackKind::EnrichmentOffer)
        );
        let mut drowsy = s.clone();
        drowsy.alertness = Alertness::Drowsy;
        drowsy.fatigue = true;
        assert_eq!(select_kind(&drowsy, &PolicyConfig::default()), Some(FeedbackKind::VoiceAlarm));
    }

    #[test]
    fn unknown_emotion_is_quiet() {
        let s = state(180.0, false, None, true);
        assert_eq!(feedback_policy(&s, &[], &PolicyConfig::default()), None);
    }

    #[test]
    fn cooldown_does_not_fall_through() {
        let mut policy = FeedbackPolicy::new(PolicyConfig::default());
        assert!(policy.evaluate(&state(180.0, true, None, true)).is_some());
        assert!(policy.evaluate(&state(240.0, true, None, true)).is_none());
        assert!(policy.evaluate(&state(420.0, true, None, true)).is_none());
        let e = policy.evaluate(&state(480.0, true, None, true)).unwrap();
        assert_eq!(e.kind, FeedbackKind::VoiceAlarm);
        assert_eq!(policy.history().len(), 2);
    }

    #[test]
    fn one_event_per_window() {
        let s = state(180.0, true, None, true);
        let first = feedback_policy(&s, &[], &PolicyConfig::default()).unwrap();
        let mut other = state(180.0, false, Some(EmotionLabel::Anger), true);
        other.window_end = 180.0;
        assert_eq!(feedback_policy(&other, &[first], &PolicyConfig::default()), None);
    }

    #[test]
    fn optional_low_attention_alarm() {
        let s = state(180.0, false, Some(EmotionLabel::Happiness), false);
        assert_eq!(select_kind(&s, &PolicyConfig::default()), None);
        let cfg = PolicyConfig {
            alarm_on_low_attention: true,
            ..Default::default()
        };
        assert_eq!(select_kind(&s, &cfg), Some(FeedbackKind::VoiceAlarm));
    }
}
