use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fusion::{CognitiveState, FeedbackEvent};
use crate::ocular::{SaccadeEvent, WindowStats};

/// Kind of an event-log record. Also the tie order for equal timestamps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventType {
    Saccade,
    Window,
    State,
    Feedback,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventBody {
    Saccade(SaccadeEvent),
    Window(WindowStats),
    State(CognitiveState),
    Feedback(FeedbackEvent),
}

impl EventBody {
    pub fn event_type(&self) -> EventType {
        match self {
            EventBody::Saccade(_) => EventType::Saccade,
            EventBody::Window(_) => EventType::Window,
            EventBody::State(_) => EventType::State,
            EventBody::Feedback(_) => EventType::Feedback,
        }
    }

    fn payload(&self) -> Value {
        let v = match self {
            EventBody::Saccade(e) => serde_json::to_value(e),
            EventBody::Window(e) => serde_json::to_value(e),
            EventBody::State(e) => serde_json::to_value(e),
            EventBody::Feedback(e) => serde_json::to_value(e),
        };
        v.expect("event payloads serialise")
    }
}

/// Timestamped event; `t_ms` is the time the event became known.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t_ms: i64,
    pub body: EventBody,
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t_s: f64,
    #[serde(rename = "type")]
    pub kind: EventType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
    pub payload: Value,
}

impl Event {
    pub fn record(&self, session: Option<&str>) -> EventRecord {
        EventRecord {
            t_s: self.t_ms as f64 / 1000.0,
            kind: self.body.event_type(),
            session: session.map(str::to_string),
            payload: self.body.payload(),
        }
    }
}

/// Orders events by time, then by [`EventType`]; stable within a type.
pub fn sort_events(events: &mut [Event]) {
    events.sort_by_key(|e| (e.t_ms, e.body.event_type()));
}

pub fn write_event_log(events: &[Event], session: Option<&str>) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(&e.record(session)).expect("records serialise"));
        out.push('\n');
    }
    out
}

pub fn read_event_log(text: &str) -> Result<Vec<EventRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(i + 1, "<record>", e.to_string())))
        .collect()
}

impl EventRecord {
    pub fn state(&self) -> Result<Option<CognitiveState>> {
        self.typed(EventType::State)
    }

    pub fn feedback(&self) -> Result<Option<FeedbackEvent>> {
        self.typed(EventType::Feedback)
    }

    fn typed<T: serde::de::DeserializeOwned>(&self, want: EventType) -> Result<Option<T>> {
        if self.kind != want {
            return Ok(None);
        }
        Ok(Some(serde_json::from_value(self.payload.clone())?))
    }
}
