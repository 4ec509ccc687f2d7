use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::Mode;
use crate::error::{Error, Result};
use crate::features::GrayImage;
use crate::ocular::EyeState;

/// Pixel payload: a file next to the frame stream or inline base-16 bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CropSource {
    Ref {
        #[serde(rename = "ref")]
        path: String,
    },
    Hex { hex: String, w: usize, h: usize },
}

impl CropSource {
    pub fn inline(img: &GrayImage) -> Self {
        CropSource::Hex {
            hex: hex::encode(img.data()),
            w: img.width(),
            h: img.height(),
        }
    }

    /// Decodes the crop; `Ref` paths resolve against `base_dir`.
    pub fn load(&self, base_dir: &Path) -> Result<GrayImage> {
        match self {
            CropSource::Ref { path } => {
                let full = base_dir.join(path);
                let img = image::open(&full)?;
                Ok(img.to_luma8().into())
            }
            CropSource::Hex { hex, w, h } => {
                let data = hex::decode(hex)
                    .map_err(|e| Error::InvalidParameter(format!("bad hex crop: {e}")))?;
                GrayImage::new(*w, *h, data)
            }
        }
    }
}

/// One timestamped frame of measurements and/or pixel crops.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameObservation {
    pub t_ms: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub user_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eye_state: Option<EyeState>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iris_xy: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eye_corners: Option<[[f64; 2]; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub face_crop: Option<CropSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eye_crop_left: Option<CropSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eye_crop_right: Option<CropSource>,
}

impl FrameObservation {
    pub fn has_eye_crop(&self) -> bool {
        self.eye_crop_left.is_some() || self.eye_crop_right.is_some()
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("frame serialises")
    }
}

/// Optional first record of a frame stream: `{"header": {...}}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameHeader {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    /// Session length; when absent it is inferred from the last frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
}

impl FrameHeader {
    pub fn to_line(&self) -> String {
        serde_json::json!({ "header": self }).to_string()
    }
}

const FRAME_FIELDS: [&str; 8] = [
    "t_ms",
    "user_id",
    "eye_state",
    "iris_xy",
    "eye_corners",
    "face_crop",
    "eye_crop_left",
    "eye_crop_right",
];

fn number(v: &Value, line: usize, field: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::parse(line, field, "expected a finite number"))
}

fn pair(v: &Value, line: usize, field: &str) -> Result<[f64; 2]> {
    match v.as_array().map(Vec::as_slice) {
        Some([a, b]) => Ok([number(a, line, field)?, number(b, line, field)?]),
        _ => Err(Error::parse(line, field, "expected [x, y]")),
    }
}

fn crop(v: &Value, line: usize, field: &str) -> Result<CropSource> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::parse(line, field, "expected {\"ref\": path} or {\"hex\", \"w\", \"h\"}"))?;
    if let Some(path) = obj.get("ref") {
        let path = path
            .as_str()
            .ok_or_else(|| Error::parse(line, field, "`ref` must be a string"))?;
        return Ok(CropSource::Ref { path: path.to_string() });
    }
    let hex = obj
        .get("hex")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::parse(line, field, "missing `ref` or `hex`"))?;
    let dim = |k: &str| {
        obj.get(k)
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::parse(line, field, format!("missing integer `{k}`")))
    };
    let (w, h) = (dim("w")? as usize, dim("h")? as usize);
    if hex.len() != 2 * w * h {
        return Err(Error::parse(line, field, format!("hex length {} does not match {w}x{h}", hex.len())));
    }
    if !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(Error::parse(line, field, "non-hex characters"));
    }
    Ok(CropSource::Hex {
        hex: hex.to_string(),
        w,
        h,
    })
}

fn frame_from_object(obj: &Map<String, Value>, line: usize, mode: Mode) -> Result<FrameObservation> {
    if let Some(k) = obj.keys().find(|k| !FRAME_FIELDS.contains(&k.as_str())) {
        return Err(Error::parse(line, k, "unknown field"));
    }
    let t_ms = obj
        .get("t_ms")
        .ok_or_else(|| Error::parse(line, "t_ms", "missing required field"))?
        .as_i64()
        .filter(|t| *t >= 0)
        .ok_or_else(|| Error::parse(line, "t_ms", "expected a non-negative integer"))?;
    let mut frame = FrameObservation {
        t_ms,
        ..Default::default()
    };
    if let Some(v) = obj.get("user_id") {
        let id = v
            .as_str()
            .ok_or_else(|| Error::parse(line, "user_id", "expected a string"))?;
        frame.user_id = Some(id.to_string());
    }
    if let Some(v) = obj.get("eye_state") {
        let s = v
            .as_str()
            .ok_or_else(|| Error::parse(line, "eye_state", "expected \"open\" or \"closed\""))?;
        frame.eye_state = Some(
            s.parse()
                .map_err(|e: String| Error::parse(line, "eye_state", e))?,
        );
    }
    if let Some(v) = obj.get("iris_xy") {
        frame.iris_xy = Some(pair(v, line, "iris_xy")?);
    }
    if let Some(v) = obj.get("eye_corners") {
        frame.eye_corners = match v.as_array().map(Vec::as_slice) {
            Some([a, b]) => Some([pair(a, line, "eye_corners")?, pair(b, line, "eye_corners")?]),
            _ => return Err(Error::parse(line, "eye_corners", "expected [[x, y], [x, y]]")),
        };
    }
    for (key, slot) in [
        ("face_crop", &mut frame.face_crop),
        ("eye_crop_left", &mut frame.eye_crop_left),
        ("eye_crop_right", &mut frame.eye_crop_right),
    ] {
        if let Some(v) = obj.get(key) {
            *slot = Some(crop(v, line, key)?);
        }
    }

    match mode {
        Mode::Pixels if !frame.has_eye_crop() && frame.eye_state.is_none() => {
            Err(Error::parse(line, "eye_crop_left", "missing required field for pixel mode"))
        }
        Mode::Measurements
            if frame.eye_state.is_none() && frame.iris_xy.is_none() && frame.eye_corners.is_none() =>
        {
            Err(Error::parse(
                line,
                "eye_state",
                "measurement mode needs at least one of eye_state, iris_xy, eye_corners",
            ))
        }
        _ => Ok(frame),
    }
}

/// Parses and validates one frame line (1-based `line` for messages).
pub fn parse_frame_record(text: &str, line: usize, mode: Mode) -> Result<FrameObservation> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::parse(line, "<record>", e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::parse(line, "<record>", "expected a JSON object"))?;
    frame_from_object(obj, line, mode)
}

/// Parsed frame stream.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameStream {
    pub header: FrameHeader,
    pub frames: Vec<FrameObservation>,
}

/// Parses a whole stream: optional header, then frames with strictly
/// increasing `t_ms`. Blank lines are skipped.
///
/// `mode` overrides the header's mode; with neither, measurements are assumed.
pub fn parse_frame_stream(text: &str, mode: Option<Mode>) -> Result<(FrameStream, Mode)> {
    let mut stream = FrameStream::default();
    let mut effective = mode;
    let mut last_t: Option<i64> = None;
    let mut seen_record = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(raw).map_err(|e| Error::parse(line, "<record>", e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::parse(line, "<record>", "expected a JSON object"))?;
        if let Some(h) = obj.get("header") {
            if seen_record {
                return Err(Error::parse(line, "header", "header must be the first record"));
            }
            stream.header = serde_json::from_value(h.clone()).map_err(|e| Error::parse(line, "header", e.to_string()))?;
            effective = effective.or(stream.header.mode);
            seen_record = true;
            continue;
        }
        seen_record = true;
        let frame = frame_from_object(obj, line, effective.unwrap_or(Mode::Measurements))?;
        if last_t.is_some_and(|t| frame.t_ms <= t) {
            return Err(Error::parse(line, "t_ms", format!("timestamp {} is not after the previous frame", frame.t_ms)));
        }
        last_t = Some(frame.t_ms);
        stream.frames.push(frame);
    }
    Ok((stream, effective.unwrap_or(Mode::Measurements)))
}
