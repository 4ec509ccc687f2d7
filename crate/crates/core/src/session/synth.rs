use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::frame::{CropSource, FrameHeader, FrameObservation};
use super::{Mode, SessionConfig};
use crate::emotion::EmotionLabel;
use crate::error::{Error, Result};
use crate::features::GrayImage;
use crate::fusion::{modal_emotion, sustained_tilt};
use crate::ocular::{
    attention_level, perclos, plan_ms, stride_ms, Alertness, Attention, EyeState, SaccadeEvent,
};

/// Noise levels of one segment. All default to zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseLevels {
    /// Gaze position noise, degrees (standard deviation).
    pub iris_deg: f64,
    /// Head-tilt noise, degrees (standard deviation).
    pub tilt_deg: f64,
    /// Probability that a reported eye state is flipped.
    pub eye_flip: f64,
    /// Face-crop pixel noise, grey levels (standard deviation).
    pub pixel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub duration_s: f64,
    /// Ground-truth alertness label of the segment.
    pub alertness: Alertness,
    /// Closed-eye frame fraction; 0.05 for alert and 0.40 for drowsy segments by default.
    #[serde(default)]
    pub closed_fraction: Option<f64>,
    #[serde(default)]
    pub emotion: Option<EmotionLabel>,
    /// Scripted saccades of the given attention class; none when absent.
    #[serde(default)]
    pub attention: Option<Attention>,
    /// Peak saccade speed, deg/s; 300 for high and 150 for low attention by default.
    #[serde(default)]
    pub saccade_peak: Option<f64>,
    #[serde(default = "default_saccade_duration")]
    pub saccade_duration_s: f64,
    #[serde(default = "default_saccade_interval")]
    pub saccade_interval_s: f64,
    /// Head tilt at the segment start, ramping linearly to `tilt_end_deg`.
    #[serde(default)]
    pub tilt_deg: f64,
    #[serde(default)]
    pub tilt_end_deg: Option<f64>,
    #[serde(default)]
    pub noise: NoiseLevels,
}

fn default_saccade_duration() -> f64 {
    0.04
}

fn default_saccade_interval() -> f64 {
    1.0
}

fn default_register_samples() -> usize {
    4
}

fn default_crop_size() -> usize {
    32
}

fn default_register_noise() -> f64 {
    4.0
}

impl Segment {
    pub fn closed_fraction(&self) -> f64 {
        self.closed_fraction.unwrap_or(match self.alertness {
            Alertness::Alert => 0.05,
            Alertness::Drowsy => 0.40,
        })
    }

    pub fn saccade_peak(&self) -> Option<f64> {
        self.attention.map(|a| {
            self.saccade_peak.unwrap_or(match a {
                Attention::High => 300.0,
                Attention::Low => 150.0,
            })
        })
    }
}

/// Scripted session: consecutive segments with known labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub session_id: String,
    /// Needed when any segment has an emotion.
    #[serde(default)]
    pub user_id: Option<String>,
    pub segments: Vec<Segment>,
    /// Registration crops per emotion label.
    #[serde(default = "default_register_samples")]
    pub register_samples: usize,
    #[serde(default = "default_register_noise")]
    pub register_pixel_noise: f64,
    #[serde(default = "default_crop_size")]
    pub crop_size: usize,
    /// Embed crops as base-16 instead of writing image files.
    #[serde(default)]
    pub inline_crops: bool,
}

impl ScenarioSpec {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: ScenarioSpec = serde_json::from_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn duration_s(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_s).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.segments.is_empty() {
            return bad("scenario has no segments".into());
        }
        if self.crop_size < 9 {
            return bad(format!("crop_size must be at least 9, got {}", self.crop_size));
        }
        if !(self.register_pixel_noise >= 0.0) {
            return bad("register_pixel_noise must be >= 0".into());
        }
        for (i, s) in self.segments.iter().enumerate() {
            let ms = s.duration_s * 1000.0;
            if !(s.duration_s > 0.0) || (ms - ms.round()).abs() > 1e-6 {
                return bad(format!("segment {i}: duration_s must be a positive whole number of milliseconds"));
            }
            if !(0.0..=1.0).contains(&s.closed_fraction()) {
                return bad(format!("segment {i}: closed_fraction must be in [0, 1]"));
            }
            let n = &s.noise;
            if ![n.iris_deg, n.tilt_deg, n.pixel].iter().all(|v| *v >= 0.0 && v.is_finite())
                || !(0.0..=1.0).contains(&n.eye_flip)
            {
                return bad(format!("segment {i}: noise levels must be finite and >= 0, eye_flip <= 1"));
            }
            if ![s.tilt_deg, s.tilt_end_deg.unwrap_or(0.0)].iter().all(|t| t.abs() < 90.0) {
                return bad(format!("segment {i}: tilt must lie in (-90, 90)"));
            }
            if s.emotion.is_some() && self.user_id.is_none() {
                return bad(format!("segment {i}: emotions need a user_id"));
            }
            if let Some(p) = s.saccade_peak() {
                if !(p > 0.0 && p.is_finite()) {
                    return bad(format!("segment {i}: saccade_peak must be positive"));
                }
                if !(s.saccade_duration_s > 0.0) || s.saccade_interval_s < s.saccade_duration_s + 0.1 {
                    return bad(format!(
                        "segment {i}: need saccade_duration_s > 0 and an interval at least 100 ms longer"
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentTruth {
    pub start_s: f64,
    pub end_s: f64,
    pub alertness: Alertness,
    pub closed_fraction: f64,
    pub emotion: Option<EmotionLabel>,
    pub attention: Option<Attention>,
}

/// Labels of one analysis window, computed from the noise-free signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowTruth {
    pub window_start: f64,
    pub window_end: f64,
    pub perclos: f64,
    pub alertness: Alertness,
    pub attention: Attention,
    pub saccade_count: usize,
    pub emotion: Option<EmotionLabel>,
    pub frustration: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub format: u32,
    pub session_id: String,
    pub duration_s: f64,
    pub perclos_threshold: f64,
    /// Start of the first drowsy segment.
    pub drowsy_onset_s: Option<f64>,
    pub segments: Vec<SegmentTruth>,
    pub windows: Vec<WindowTruth>,
    pub saccades: Vec<SaccadeEvent>,
}

impl GroundTruth {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Generated files, relative to an output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub frames: String,
    pub truth: GroundTruth,
    /// Registration manifest, present when the scenario names a user.
    pub register: Option<String>,
    pub images: Vec<(PathBuf, GrayImage)>,
}

pub const FRAMES_FILE: &str = "frames.jsonl";
pub const TRUTH_FILE: &str = "truth.json";
pub const REGISTER_FILE: &str = "register.jsonl";

impl SynthOutput {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &Path, bytes: &[u8]| {
            let p = dir.join(name);
            if let Some(parent) = p.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            fs::write(&p, bytes).map_err(|e| Error::io(&p, e))
        };
        write(Path::new(FRAMES_FILE), self.frames.as_bytes())?;
        let mut truth = serde_json::to_string_pretty(&self.truth)?;
        truth.push('\n');
        write(Path::new(TRUTH_FILE), truth.as_bytes())?;
        if let Some(r) = &self.register {
            write(Path::new(REGISTER_FILE), r.as_bytes())?;
        }
        for (rel, img) in &self.images {
            let p = dir.join(rel);
            if let Some(parent) = p.parent() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.data().to_vec())
                .expect("dimensions match data");
            buf.save(&p)?;
        }
        Ok(())
    }
}

/// Eye-corner half baseline in pixels and the face centre.
const HALF_BASELINE: f64 = 30.0;
const FACE_CENTRE: [f64; 2] = [320.0, 240.0];
/// First scripted saccade starts this long into its segment.
const SACCADE_LEAD_MS: i64 = 500;
/// Saccade onsets fall on this grid so that 300 Hz samples land on the
/// triangle's onset, apex and end.
const SACCADE_GRID_MS: i64 = 20;

/// Stream ids of the generator's independent random sequences.
const STREAM_NOISE: u64 = 1;
const STREAM_PROTOTYPES: u64 = 2;
const STREAM_REGISTER: u64 = 3;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn gaussian(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    if sd == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sd).expect("sd is finite and positive").sample(rng)
}

/// Per-emotion face textures; depend only on the seed.
fn prototypes(seed: u64, size: usize) -> Vec<GrayImage> {
    let mut r = rng(seed, STREAM_PROTOTYPES);
    EmotionLabel::ALL
        .iter()
        .map(|_| GrayImage::from_fn(size, size, |_, _| r.random::<u8>()))
        .collect()
}

fn noisy(proto: &GrayImage, sd: f64, rng: &mut ChaCha8Rng) -> GrayImage {
    if sd == 0.0 {
        return proto.clone();
    }
    let data = proto
        .data()
        .iter()
        .map(|&p| (p as f64 + gaussian(rng, sd)).round().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage::new(proto.width(), proto.height(), data).expect("same dimensions")
}

fn label_index(label: EmotionLabel) -> usize {
    EmotionLabel::ALL.iter().position(|l| *l == label).expect("label in ALL")
}

#[derive(Debug, Clone, Copy)]
struct Scripted {
    onset_ms: i64,
    duration_ms: i64,
    peak: f64,
    sign: f64,
}

impl Scripted {
    /// Signed triangular velocity profile, deg/s.
    fn velocity(&self, t_ms: i64) -> f64 {
        let u = (t_ms - self.onset_ms) as f64 / self.duration_ms as f64;
        if (0.0..=1.0).contains(&u) {
            self.sign * self.peak * (1.0 - (2.0 * u - 1.0).abs())
        } else {
            0.0
        }
    }
}

fn frame_times(start_ms: i64, end_ms: i64, rate: f64) -> Vec<i64> {
    (0..)
        .map(|i| start_ms + (i as f64 * 1000.0 / rate).round() as i64)
        .take_while(|t| *t < end_ms)
        .collect()
}

/// Generates a measurement-mode frame stream and its ground truth.
pub fn synthesize_session(spec: &ScenarioSpec, cfg: &SessionConfig, seed: u64) -> Result<SynthOutput> {
    spec.validate()?;
    cfg.validate()?;
    let ratio = (cfg.saccade_rate / cfg.frame_rate).round() as usize;
    let block = (cfg.frame_rate.round() as usize).max(1);
    let face_every_ms = (cfg.emotion_interval_s * 1000.0).round() as i64;
    let protos = prototypes(seed, spec.crop_size);
    let mut noise_rng = rng(seed, STREAM_NOISE);

    let session_ms: i64 = spec.segments.iter().map(|s| (s.duration_s * 1000.0).round() as i64).sum();
    let header = FrameHeader {
        session_id: Some(spec.session_id.clone()),
        user_id: spec.user_id.clone(),
        mode: Some(Mode::Measurements),
        duration_s: Some(session_ms as f64 / 1000.0),
    };
    let mut lines = vec![header.to_line()];
    let mut images = Vec::new();

    let mut true_eye: Vec<(i64, EyeState)> = Vec::new();
    let mut true_tilt: Vec<(i64, f64)> = Vec::new();
    let mut true_emotion: Vec<(i64, EmotionLabel)> = Vec::new();
    let mut scripted_events: Vec<SaccadeEvent> = Vec::new();
    let mut segments = Vec::new();

    let mut seg_start = 0i64;
    let mut gaze = 0.0f64;
    let mut sign = 1.0;
    let mut next_face = 0i64;
    for seg in &spec.segments {
        let seg_end = seg_start + (seg.duration_s * 1000.0).round() as i64;
        let dense = seg.attention.is_some();
        let rate = if dense { cfg.saccade_rate } else { cfg.frame_rate };
        let times = frame_times(seg_start, seg_end, rate);

        let mut script = Vec::new();
        if let Some(peak) = seg.saccade_peak() {
            let dur = (seg.saccade_duration_s * 1000.0).round() as i64;
            let every = (seg.saccade_interval_s * 1000.0).round() as i64;
            let mut k = 0;
            loop {
                let raw = SACCADE_LEAD_MS + k * every;
                let onset = seg_start + (raw + SACCADE_GRID_MS - 1) / SACCADE_GRID_MS * SACCADE_GRID_MS;
                if onset + dur + 100 > seg_end {
                    break;
                }
                script.push(Scripted {
                    onset_ms: onset,
                    duration_ms: dur,
                    peak,
                    sign,
                });
                let duration = dur as f64 / 1000.0;
                scripted_events.push(SaccadeEvent {
                    onset: onset as f64 / 1000.0,
                    offset: (onset + dur) as f64 / 1000.0,
                    duration,
                    peak_velocity: peak,
                    sr: peak / duration,
                });
                sign = -sign;
                k += 1;
            }
        }
        let velocity = |t: i64| script.iter().map(|s| s.velocity(t)).sum::<f64>();

        // Central differences of these positions reproduce `velocity` at every sample.
        let mut xs = vec![gaze; times.len()];
        if times.len() > 1 {
            xs[1] = gaze + (times[1] - times[0]) as f64 / 1000.0 * velocity(times[0]);
        }
        for i in 1..times.len().saturating_sub(1) {
            xs[i + 1] = xs[i - 1] + (times[i + 1] - times[i - 1]) as f64 / 1000.0 * velocity(times[i]);
        }
        if let Some(&last) = xs.last() {
            gaze = last;
        }

        let f = seg.closed_fraction();
        let tilt_end = seg.tilt_end_deg.unwrap_or(seg.tilt_deg);
        let mut base_index = 0usize;
        for (i, &t) in times.iter().enumerate() {
            let mut frame = FrameObservation {
                t_ms: t,
                ..Default::default()
            };
            let x = xs[i] + gaussian(&mut noise_rng, seg.noise.iris_deg);
            let y = gaussian(&mut noise_rng, seg.noise.iris_deg);
            frame.iris_xy = Some([x * cfg.iris_units_per_degree, y * cfg.iris_units_per_degree]);

            if !dense || i % ratio == 0 {
                let j = base_index;
                base_index += 1;
                let b = (j / block) as f64;
                let per = f * block as f64;
                let closed_in_block = ((b + 1.0) * per).floor() - (b * per).floor();
                let state = if ((j % block) as f64) < closed_in_block {
                    EyeState::Closed
                } else {
                    EyeState::Open
                };
                true_eye.push((t, state));
                let flip = seg.noise.eye_flip > 0.0 && noise_rng.random_bool(seg.noise.eye_flip);
                frame.eye_state = Some(match (state, flip) {
                    (s, false) => s,
                    (EyeState::Open, true) => EyeState::Closed,
                    (EyeState::Closed, true) => EyeState::Open,
                });

                let u = (t - seg_start) as f64 / (seg_end - seg_start) as f64;
                let tilt = seg.tilt_deg + (tilt_end - seg.tilt_deg) * u;
                true_tilt.push((t, tilt));
                let seen = (tilt + gaussian(&mut noise_rng, seg.noise.tilt_deg)).to_radians();
                let (dx, dy) = (HALF_BASELINE * seen.cos(), HALF_BASELINE * seen.sin());
                let [cx, cy] = FACE_CENTRE;
                frame.eye_corners = Some([[cx - dx, cy - dy], [cx + dx, cy + dy]]);

                if let Some(label) = seg.emotion {
                    if t >= next_face {
                        next_face = t + face_every_ms;
                        true_emotion.push((t, label));
                        let img = noisy(&protos[label_index(label)], seg.noise.pixel, &mut noise_rng);
                        frame.face_crop = Some(if spec.inline_crops {
                            CropSource::inline(&img)
                        } else {
                            let rel = format!("crops/face_{t:09}.png");
                            images.push((PathBuf::from(&rel), img));
                            CropSource::Ref { path: rel }
                        });
                    }
                }
            }
            lines.push(frame.to_line());
        }

        segments.push(SegmentTruth {
            start_s: seg_start as f64 / 1000.0,
            end_s: seg_end as f64 / 1000.0,
            alertness: seg.alertness,
            closed_fraction: f,
            emotion: seg.emotion,
            attention: seg.attention,
        });
        seg_start = seg_end;
    }

    let window_ms = (cfg.window_s * 1000.0).round() as i64;
    let mut windows = Vec::new();
    for w in plan_ms(session_ms, window_ms, stride_ms(window_ms, cfg.overlap)?) {
        let Ok(stats) = perclos(&true_eye, w, cfg.perclos_threshold) else {
            continue;
        };
        let inside: Vec<SaccadeEvent> = scripted_events
            .iter()
            .copied()
            .filter(|e| w.contains((e.onset * 1000.0).round() as i64))
            .collect();
        let att = attention_level(&inside, cfg.sr_threshold);
        let emo: Vec<_> = true_emotion.iter().copied().filter(|(t, _)| w.contains(*t)).collect();
        let tilt: Vec<_> = true_tilt.iter().copied().filter(|(t, _)| w.contains(*t)).collect();
        windows.push(WindowTruth {
            window_start: w.start(),
            window_end: w.end(),
            perclos: stats.perclos,
            alertness: stats.alertness,
            attention: att.level,
            saccade_count: att.saccade_count,
            emotion: modal_emotion(&emo),
            frustration: sustained_tilt(&tilt, cfg.tilt_thresh_deg, cfg.sustain_s),
        });
    }

    let register = match &spec.user_id {
        Some(_) => {
            let mut r = rng(seed, STREAM_REGISTER);
            let mut manifest = String::new();
            for (li, label) in EmotionLabel::ALL.iter().enumerate() {
                for k in 0..spec.register_samples {
                    let img = noisy(&protos[li], spec.register_pixel_noise, &mut r);
                    let crop = if spec.inline_crops {
                        CropSource::inline(&img)
                    } else {
                        let rel = format!("register/{}_{k:03}.png", label.as_str());
                        images.push((PathBuf::from(&rel), img));
                        CropSource::Ref { path: rel }
                    };
                    let entry = super::register::ManifestEntry {
                        label: label.as_str().to_string(),
                        crop,
                    };
                    manifest.push_str(&serde_json::to_string(&entry)?);
                    manifest.push('\n');
                }
            }
            Some(manifest)
        }
        None => None,
    };

    let mut frames = lines.join("\n");
    frames.push('\n');
    Ok(SynthOutput {
        frames,
        truth: GroundTruth {
            format: 1,
            session_id: spec.session_id.clone(),
            duration_s: session_ms as f64 / 1000.0,
            perclos_threshold: cfg.perclos_threshold,
            drowsy_onset_s: segments
                .iter()
                .find(|s| s.alertness == Alertness::Drowsy)
                .map(|s| s.start_s),
            segments,
            windows,
            saccades: scripted_events,
        },
        register,
        images,
    })
}
