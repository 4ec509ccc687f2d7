//! Per-user expression templates and six-class emotion recognition.

mod profile;
mod store;

pub use profile::{classify_emotion, register_user, EmotionEstimate, UserProfile};
pub use store::{ProfileStore, PROFILE_FORMAT};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The six basic emotions. Declaration order is the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionLabel {
    Happiness,
    Surprise,
    Anger,
    Sadness,
    Fear,
    Disgust,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; 6] = [
        EmotionLabel::Happiness,
        EmotionLabel::Surprise,
        EmotionLabel::Anger,
        EmotionLabel::Sadness,
        EmotionLabel::Fear,
        EmotionLabel::Disgust,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EmotionLabel::Happiness => "happiness",
            EmotionLabel::Surprise => "surprise",
            EmotionLabel::Anger => "anger",
            EmotionLabel::Sadness => "sadness",
            EmotionLabel::Fear => "fear",
            EmotionLabel::Disgust => "disgust",
        }
    }

    pub fn valence(self) -> Valence {
        valence(self)
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EmotionLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EmotionLabel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown emotion `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Valence {
    Positive,
    Negative,
}

pub fn valence(label: EmotionLabel) -> Valence {
    match label {
        EmotionLabel::Happiness | EmotionLabel::Surprise => Valence::Positive,
        EmotionLabel::Anger | EmotionLabel::Sadness | EmotionLabel::Fear | EmotionLabel::Disgust => {
            Valence::Negative
        }
    }
}
