use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::events::{sort_events, write_event_log, Event, EventBody};
use super::frame::{parse_frame_stream, FrameObservation};
use super::{Mode, SessionConfig};
use crate::emotion::{classify_emotion, EmotionLabel, ProfileStore, UserProfile};
use crate::error::{Error, Result};
use crate::features::{extract_features, GrayImage};
use crate::fusion::{fuse, FeedbackKind, FeedbackPolicy};
use crate::ocular::{
    attention_level, classify_eye_state, detect_saccades, perclos, stride_ms, plan_ms, EyeState, GazeSample,
    LinearEyeModel, SaccadeEvent,
};
use crate::tracking::{estimate_iris_center, head_tilt, track, Point};

/// Per-window summary written alongside the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub window_start: f64,
    pub window_end: f64,
    pub frames_total: usize,
    pub frames_closed: usize,
    pub perclos: f64,
    pub alertness: crate::ocular::Alertness,
    pub attention: crate::ocular::Attention,
    pub saccade_count: usize,
    pub mean_sr: f64,
    pub emotion: Option<EmotionLabel>,
    pub frustration: bool,
    pub fatigue: bool,
    pub feedback: Option<FeedbackKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub session_id: Option<String>,
    pub duration_s: f64,
    pub frames: usize,
    pub saccades: usize,
    pub windows: Vec<WindowReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutput {
    pub events: Vec<Event>,
    pub report: ReplayReport,
}

impl ReplayOutput {
    pub fn event_log(&self) -> String {
        write_event_log(&self.events, self.report.session_id.as_deref())
    }

    pub fn report_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("report serialises");
        s.push('\n');
        s
    }
}

/// Replays a frame stream file. Crop references resolve against its directory.
pub fn replay(frames_path: &Path, cfg: &SessionConfig, store: Option<&ProfileStore>) -> Result<ReplayOutput> {
    let text = fs::read_to_string(frames_path).map_err(|e| Error::io(frames_path, e))?;
    let base = frames_path.parent().unwrap_or(Path::new("."));
    replay_text(&text, base, cfg, store)
}

fn to_ms(s: f64) -> i64 {
    (s * 1000.0).round() as i64
}

fn median_interval(frames: &[FrameObservation]) -> i64 {
    let mut gaps: Vec<i64> = frames.windows(2).map(|w| w[1].t_ms - w[0].t_ms).collect();
    if gaps.is_empty() {
        return 0;
    }
    gaps.sort_unstable();
    gaps[gaps.len() / 2]
}

/// Lazily loaded per-user models.
struct Models<'a> {
    store: Option<&'a ProfileStore>,
    profiles: BTreeMap<String, UserProfile>,
    eye_models: BTreeMap<String, (LinearEyeModel, (usize, usize))>,
}

impl<'a> Models<'a> {
    fn store(&self, what: &str) -> Result<&'a ProfileStore> {
        self.store
            .ok_or_else(|| Error::InvalidParameter(format!("{what} requires a profile directory")))
    }

    fn user<'u>(frame: &'u FrameObservation, default: Option<&'u str>) -> Result<&'u str> {
        frame
            .user_id
            .as_deref()
            .or(default)
            .ok_or_else(|| Error::InvalidParameter(format!("frame at {} ms has crops but no user_id", frame.t_ms)))
    }

    fn profile(&mut self, user: &str) -> Result<&UserProfile> {
        if !self.profiles.contains_key(user) {
            let p = self.store("emotion classification")?.load_profile(user)?;
            self.profiles.insert(user.to_string(), p);
        }
        Ok(&self.profiles[user])
    }

    fn eye_model(&mut self, user: &str) -> Result<&(LinearEyeModel, (usize, usize))> {
        if !self.eye_models.contains_key(user) {
            let m = self.store("eye-state classification")?.load_eye_model(user)?;
            self.eye_models.insert(user.to_string(), m);
        }
        Ok(&self.eye_models[user])
    }
}

/// Per-frame signals extracted before windowing.
#[derive(Default)]
struct Signals {
    eye: Vec<(i64, EyeState)>,
    iris: Vec<(f64, [f64; 2])>,
    tilt: Vec<(i64, f64)>,
    emotion: Vec<(i64, EmotionLabel)>,
}

fn extract_signals(
    frames: &[FrameObservation],
    mode: Mode,
    default_user: Option<&str>,
    base: &Path,
    cfg: &SessionConfig,
    models: &mut Models<'_>,
) -> Result<Signals> {
    let mut sig = Signals::default();
    let scale = cfg.iris_units_per_degree;
    for f in frames {
        let t = f.t_ms;
        let eye_crops: Vec<GrayImage> = if mode == Mode::Pixels {
            [&f.eye_crop_left, &f.eye_crop_right]
                .into_iter()
                .flatten()
                .map(|c| c.load(base))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };

        if !eye_crops.is_empty() {
            let user = Models::user(f, default_user)?;
            let (model, grid) = models.eye_model(user)?;
            let mut score = 0.0;
            for crop in &eye_crops {
                score += classify_eye_state(model, &extract_features(crop, *grid)?)?.score;
            }
            let state = if score > 0.0 { EyeState::Open } else { EyeState::Closed };
            sig.eye.push((t, state));
        } else if let Some(s) = f.eye_state {
            sig.eye.push((t, s));
        }

        let iris = match (f.iris_xy, eye_crops.first()) {
            (Some(xy), _) => Some(xy),
            (None, Some(crop)) => {
                let (x, y) = estimate_iris_center(crop)?;
                Some([x, y])
            }
            (None, None) => None,
        };
        if let Some([x, y]) = iris {
            sig.iris.push((t as f64 / 1000.0, [x / scale, y / scale]));
        }

        if let Some([l, r]) = f.eye_corners {
            sig.tilt.push((t, head_tilt(Point::new(l[0], l[1]), Point::new(r[0], r[1]))?));
        }

        if let Some(face) = &f.face_crop {
            let img = face.load(base)?;
            let user = Models::user(f, default_user)?;
            let profile = models.profile(user)?;
            let (rows, cols, _) = profile.layout;
            let est = classify_emotion(profile, &extract_features(&img, (rows, cols))?)?;
            sig.emotion.push((t, est.label));
        }
    }
    Ok(sig)
}

fn saccades(iris: &[(f64, [f64; 2])], cfg: &SessionConfig) -> Result<Vec<SaccadeEvent>> {
    if iris.len() < 3 {
        return Ok(Vec::new());
    }
    let gaze: Vec<GazeSample> = track(iris, &cfg.iris_noise)?
        .into_iter()
        .map(|s| GazeSample::new(s.t, s.position[0], s.position[1]))
        .collect();
    detect_saccades(&gaze, cfg.v_on, cfg.v_off)
}

/// Replays frame records held in memory. `base` resolves crop references.
///
/// The session spans `[0, duration)`, where the duration comes from the
/// stream header or, failing that, the last frame plus the median frame
/// interval. Only windows inside the session that hold at least one
/// eye-state sample are evaluated.
pub fn replay_text(text: &str, base: &Path, cfg: &SessionConfig, store: Option<&ProfileStore>) -> Result<ReplayOutput> {
    cfg.validate()?;
    let (stream, mode) = parse_frame_stream(text, cfg.mode)?;
    let header = &stream.header;
    let frames = &stream.frames;
    let session_ms = match (header.duration_s, frames.last()) {
        (Some(d), _) => to_ms(d),
        (None, Some(last)) => last.t_ms + median_interval(frames),
        (None, None) => 0,
    };

    let mut models = Models {
        store,
        profiles: BTreeMap::new(),
        eye_models: BTreeMap::new(),
    };
    let sig = extract_signals(frames, mode, header.user_id.as_deref(), base, cfg, &mut models)?;
    let sacc = saccades(&sig.iris, cfg)?;

    let mut events: Vec<Event> = sacc
        .iter()
        .map(|s| Event {
            t_ms: to_ms(s.offset),
            body: EventBody::Saccade(*s),
        })
        .collect();

    let window_ms = to_ms(cfg.window_s);
    let plan = plan_ms(session_ms, window_ms, stride_ms(window_ms, cfg.overlap)?);
    let mut policy = FeedbackPolicy::new(cfg.policy());
    let fusion_cfg = cfg.fusion();
    let mut windows = Vec::new();
    for w in plan {
        let stats = match perclos(&sig.eye, w, cfg.perclos_threshold) {
            Ok(s) => s,
            Err(Error::EmptyWindow { .. }) => continue,
            Err(e) => return Err(e),
        };
        let in_window: Vec<SaccadeEvent> = sacc.iter().copied().filter(|s| w.contains(to_ms(s.onset))).collect();
        let attention = attention_level(&in_window, cfg.sr_threshold);
        let state = fuse(&stats, &attention, &sig.emotion, &sig.tilt, &fusion_cfg);
        let feedback = policy.evaluate(&state);

        windows.push(WindowReport {
            window_start: stats.window_start,
            window_end: stats.window_end,
            frames_total: stats.frames_total,
            frames_closed: stats.frames_closed,
            perclos: stats.perclos,
            alertness: stats.alertness,
            attention: attention.level,
            saccade_count: attention.saccade_count,
            mean_sr: attention.mean_sr,
            emotion: state.emotion,
            frustration: state.frustration,
            fatigue: state.fatigue,
            feedback: feedback.as_ref().map(|f| f.kind),
        });
        events.push(Event {
            t_ms: w.end_ms,
            body: EventBody::Window(stats),
        });
        events.push(Event {
            t_ms: w.end_ms,
            body: EventBody::State(state),
        });
        if let Some(f) = feedback {
            events.push(Event {
                t_ms: w.end_ms,
                body: EventBody::Feedback(f),
            });
        }
    }
    sort_events(&mut events);

    Ok(ReplayOutput {
        events,
        report: ReplayReport {
            session_id: header.session_id.clone(),
            duration_s: session_ms as f64 / 1000.0,
            frames: frames.len(),
            saccades: sacc.len(),
            windows,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::events::EventType;

    fn drowsy_stream(seconds: i64, closed_every: i64) -> String {
        let mut s = String::from("{\"header\":{\"session_id\":\"d\"}}\n");
        for i in 0..seconds * 10 {
            let state = if i % closed_every == 0 { "closed" } else { "open" };
            s.push_str(&format!("{{\"t_ms\":{},\"eye_state\":\"{state}\"}}\n", i * 100));
        }
        s
    }

    #[test]
    fn empty_after_header() {
        let out = replay_text("{\"header\":{\"session_id\":\"e\"}}\n", Path::new("."), &SessionConfig::default(), None)
            .unwrap();
        assert!(out.events.is_empty());
        assert!(out.report.windows.is_empty());
        assert_eq!(out.event_log(), "");
    }

    #[test]
    fn drowsy_session_alarms_at_first_window() {
        let out = replay_text(&drowsy_stream(300, 2), Path::new("."), &SessionConfig::default(), None).unwrap();
        let ends: Vec<f64> = out.report.windows.iter().map(|w| w.window_end).collect();
        assert_eq!(ends, vec![180.0, 240.0, 300.0]);
        assert!(out.report.windows.iter().all(|w| w.perclos == 0.5));
        let alarms: Vec<i64> = out
            .events
            .iter()
            .filter_map(|e| match &e.body {
                EventBody::Feedback(f) if f.kind == FeedbackKind::VoiceAlarm => Some(e.t_ms),
                _ => None,
            })
            .collect();
        assert_eq!(alarms, vec![180_000]);
    }

    #[test]
    fn replay_is_deterministic_and_ordered() {
        let text = drowsy_stream(300, 7);
        let a = replay_text(&text, Path::new("."), &SessionConfig::default(), None).unwrap();
        let b = replay_text(&text, Path::new("."), &SessionConfig::default(), None).unwrap();
        assert_eq!(a.event_log(), b.event_log());
        assert_eq!(a.report_json(), b.report_json());
        let keys: Vec<(i64, EventType)> = a.events.iter().map(|e| (e.t_ms, e.body.event_type())).collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
        assert!(a.events.iter().all(|e| (0..=300_000).contains(&e.t_ms)));
    }

    #[test]
    fn face_crops_need_profiles() {
        let text = "{\"t_ms\":0,\"eye_state\":\"open\",\"user_id\":\"u\",\"face_crop\":{\"hex\":\"000000000000000000\",\"w\":3,\"h\":3}}\n";
        assert!(matches!(
            replay_text(text, Path::new("."), &SessionConfig::default(), None),
            Err(Error::InvalidParameter(_))
        ));
        let dir = tempfile::tempdir().unwrap();
        let store = ProfileStore::open(dir.path()).unwrap();
        assert!(matches!(
            replay_text(text, Path::new("."), &SessionConfig::default(), Some(&store)),
            Err(Error::UnknownUser(u)) if u == "u"
        ));
    }
}
