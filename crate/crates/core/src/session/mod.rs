//! Frame-stream ingestion, replay through the full pipeline, synthetic
//! sessions with ground truth, scoring and user registration.

mod config;
mod events;
mod frame;
mod register;
mod replay;
mod score;
mod synth;

pub use config::{Mode, SessionConfig};
pub use events::{read_event_log, sort_events, write_event_log, Event, EventBody, EventRecord, EventType};
pub use frame::{parse_frame_record, parse_frame_stream, CropSource, FrameHeader, FrameObservation, FrameStream};
pub use register::{register_from_manifest, ManifestEntry, Registration};
pub use replay::{replay, replay_text, ReplayOutput, ReplayReport, WindowReport};
pub use score::{score, ScoreReport, SignalScore};
pub use synth::{
    synthesize_session, GroundTruth, NoiseLevels, ScenarioSpec, Segment, SegmentTruth, SynthOutput, WindowTruth,
    FRAMES_FILE, REGISTER_FILE, TRUTH_FILE,
};
