use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::EyeState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alertness {
    Alert,
    Drowsy,
}

impl Alertness {
    /// Drowsy iff `perclos` is strictly above `threshold`.
    pub fn from_perclos(perclos: f64, threshold: f64) -> Self {
        if perclos > threshold {
            Alertness::Drowsy
        } else {
            Alertness::Alert
        }
    }
}

/// Half-open analysis window `[start, end)` on the millisecond timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Window {
    pub start_ms: i64,
    pub end_ms: i64,
}

impl Window {
    pub fn new(start_ms: i64, end_ms: i64) -> Self {
        Self { start_ms, end_ms }
    }

    pub fn start(&self) -> f64 {
        self.start_ms as f64 / 1000.0
    }

    pub fn end(&self) -> f64 {
        self.end_ms as f64 / 1000.0
    }

    pub fn contains(&self, t_ms: i64) -> bool {
        self.start_ms <= t_ms && t_ms < self.end_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub window_start: f64,
    pub window_end: f64,
    pub frames_total: usize,
    pub frames_closed: usize,
    pub perclos: f64,
    pub alertness: Alertness,
}

fn to_ms(seconds: f64) -> i64 {
    (seconds * 1000.0).round() as i64
}

/// Stride in milliseconds for a window and overlap fraction.
pub(crate) fn stride_ms(window_ms: i64, overlap: f64) -> Result<i64> {
    if window_ms <= 0 {
        return Err(Error::InvalidParameter(format!("window must be positive, got {window_ms} ms")));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidParameter(format!("overlap must be in [0, 1), got {overlap}")));
    }
    let stride = (window_ms as f64 * (1.0 - overlap)).round() as i64;
    if stride < 1 {
        return Err(Error::InvalidParameter("overlap leaves a stride below 1 ms".into()));
    }
    Ok(stride)
}

/// Windows of `window_s` seconds that fit entirely inside `[0, session_length_s]`.
///
/// Times are resolved to whole milliseconds, so the 180 s / 2/3 default gives
/// a stride of exactly 60 s.
pub fn window_plan(session_length_s: f64, window_s: f64, overlap_fraction: f64) -> Result<Vec<Window>> {
    if !(window_s > 0.0) {
        return Err(Error::InvalidParameter(format!("window must be positive, got {window_s}")));
    }
    let window = to_ms(window_s);
    let stride = stride_ms(window, overlap_fraction)?;
    let session = to_ms(session_length_s.max(0.0));
    Ok(plan_ms(session, window, stride))
}

pub(crate) fn plan_ms(session_ms: i64, window_ms: i64, stride_ms: i64) -> Vec<Window> {
    (0..)
        .map(|i| i * stride_ms)
        .take_while(|s| s + window_ms <= session_ms)
        .map(|s| Window::new(s, s + window_ms))
        .collect()
}

fn stats(window: Window, total: usize, closed: usize, threshold: f64) -> WindowStats {
    let perclos = closed as f64 / total as f64;
    WindowStats {
        window_start: window.start(),
        window_end: window.end(),
        frames_total: total,
        frames_closed: closed,
        perclos,
        alertness: Alertness::from_perclos(perclos, threshold),
    }
}

/// Closed-frame fraction over frames with `start <= t < end`.
///
/// Every frame weighs the same, so this matches the closed-time fraction
/// only at a steady frame rate. Drowsy iff the fraction is strictly above
/// `threshold`.
pub fn perclos(states: &[(i64, EyeState)], window: Window, threshold: f64) -> Result<WindowStats> {
    if let Some(i) = states.windows(2).position(|w| w[1].0 <= w[0].0) {
        return Err(Error::NonMonotonic { index: i + 1 });
    }
    let lo = states.partition_point(|(t, _)| *t < window.start_ms);
    let hi = states.partition_point(|(t, _)| *t < window.end_ms);
    let inside = &states[lo..hi];
    if inside.is_empty() {
        return Err(Error::EmptyWindow {
            start: window.start(),
            end: window.end(),
        });
    }
    let closed = inside.iter().filter(|(_, s)| *s == EyeState::Closed).count();
    Ok(stats(window, inside.len(), closed, threshold))
}

/// Incremental PERCLOS over a frame stream.
///
/// Frames are pushed in time order; a window is reported as soon as a frame
/// at or past its end arrives, or on [`finish`](Self::finish). Windows that
/// received no frames are skipped.
#[derive(Debug, Clone)]
pub struct WindowAccumulator {
    window_ms: i64,
    stride_ms: i64,
    threshold: f64,
    next_start: i64,
    frames: VecDeque<(i64, bool)>,
    last_t: Option<i64>,
}

impl WindowAccumulator {
    pub fn new(window_s: f64, overlap: f64, threshold: f64) -> Result<Self> {
        let window_ms = to_ms(window_s);
        let stride_ms = stride_ms(window_ms, overlap)?;
        Ok(Self {
            window_ms,
            stride_ms,
            threshold,
            next_start: 0,
            frames: VecDeque::new(),
            last_t: None,
        })
    }

    pub fn window_ms(&self) -> i64 {
        self.window_ms
    }

    pub fn stride_ms(&self) -> i64 {
        self.stride_ms
    }

    fn emit_until(&mut self, limit_ms: i64, out: &mut Vec<WindowStats>) {
        while self.next_start + self.window_ms <= limit_ms {
            let w = Window::new(self.next_start, self.next_start + self.window_ms);
            let (mut total, mut closed) = (0, 0);
            for &(t, c) in &self.frames {
                if t >= w.end_ms {
                    break;
                }
                if t >= w.start_ms {
                    total += 1;
                    closed += usize::from(c);
                }
            }
            if total > 0 {
                out.push(stats(w, total, closed, self.threshold));
            }
            self.next_start += self.stride_ms;
            while self.frames.front().is_some_and(|&(t, _)| t < self.next_start) {
                self.frames.pop_front();
            }
        }
    }

    pub fn push(&mut self, t_ms: i64, state: EyeState) -> Result<Vec<WindowStats>> {
        if self.last_t.is_some_and(|last| t_ms <= last) {
            return Err(Error::NonMonotonic { index: 0 });
        }
        self.last_t = Some(t_ms);
        let mut out = Vec::new();
        // A frame at t means everything before t has been seen.
        self.emit_until(t_ms, &mut out);
        if t_ms >= self.next_start {
            self.frames.push_back((t_ms, state == EyeState::Closed));
        }
        Ok(out)
    }

    /// Reports the remaining windows that end by `session_end_ms`.
    pub fn finish(&mut self, session_end_ms: i64) -> Vec<WindowStats> {
        let mut out = Vec::new();
        self.emit_until(session_end_ms, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn starts(ws: &[Window]) -> Vec<f64> {
        ws.iter().map(|w| w.start()).collect()
    }

    #[test]
    fn default_plan() {
        let ws = window_plan(300.0, 180.0, 2.0 / 3.0).unwrap();
        assert_eq!(starts(&ws), vec![0.0, 60.0, 120.0]);
        assert_eq!(ws.iter().map(|w| w.end()).collect::<Vec<_>>(), vec![180.0, 240.0, 300.0]);
        assert!(window_plan(179.0, 180.0, 2.0 / 3.0).unwrap().is_empty());
        assert_eq!(window_plan(180.0, 180.0, 0.0).unwrap().len(), 1);
    }

    #[test]
    fn plan_errors() {
        assert!(window_plan(100.0, 0.0, 0.5).is_err());
        assert!(window_plan(100.0, -3.0, 0.5).is_err());
        assert!(window_plan(100.0, 10.0, 1.0).is_err());
        assert!(window_plan(100.0, 10.0, -0.1).is_err());
    }

    fn frames(states: &[EyeState]) -> Vec<(i64, EyeState)> {
        states.iter().enumerate().map(|(i, &s)| (i as i64 * 1000, s)).collect()
    }

    #[test]
    fn all_open_is_alert() {
        let f = frames(&[EyeState::Open; 180]);
        let s = perclos(&f, Window::new(0, 180_000), 0.15).unwrap();
        assert_eq!((s.perclos, s.alertness), (0.0, Alertness::Alert));
    }

    #[test]
    fn fifteen_percent_is_still_alert() {
        let mut states = vec![EyeState::Open; 180];
        states[..27].fill(EyeState::Closed);
        let s = perclos(&frames(&states), Window::new(0, 180_000), 0.15).unwrap();
        assert_eq!(s.frames_closed, 27);
        assert_eq!(s.perclos, 0.15);
        assert_eq!(s.alertness, Alertness::Alert);
        states[27] = EyeState::Closed;
        let s = perclos(&frames(&states), Window::new(0, 180_000), 0.15).unwrap();
        assert_eq!(s.alertness, Alertness::Drowsy);
    }

    #[test]
    fn window_is_half_open() {
        let f = frames(&[EyeState::Closed, EyeState::Open, EyeState::Open, EyeState::Closed]);
        let s = perclos(&f, Window::new(1000, 3000), 0.15).unwrap();
        assert_eq!((s.frames_total, s.frames_closed), (2, 0));
    }

    #[test]
    fn perclos_errors() {
        let f = frames(&[EyeState::Open; 4]);
        assert!(matches!(perclos(&f, Window::new(10_000, 20_000), 0.15), Err(Error::EmptyWindow { .. })));
        let bad = vec![(0, EyeState::Open), (0, EyeState::Closed)];
        assert!(matches!(perclos(&bad, Window::new(0, 10), 0.15), Err(Error::NonMonotonic { index: 1 })));
    }

    #[test]
    fn duplicating_frames_keeps_perclos() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let states: Vec<EyeState> = (0..600)
            .map(|_| if rng.random_bool(0.3) { EyeState::Closed } else { EyeState::Open })
            .collect();
        let single: Vec<_> = states.iter().enumerate().map(|(i, &s)| (i as i64 * 100, s)).collect();
        let doubled: Vec<_> = states
            .iter()
            .enumerate()
            .flat_map(|(i, &s)| [(i as i64 * 100, s), (i as i64 * 100 + 50, s)])
            .collect();
        let w = Window::new(0, 60_000);
        assert_eq!(perclos(&single, w, 0.15).unwrap().perclos, perclos(&doubled, w, 0.15).unwrap().perclos);
    }

    #[test]
    fn drowsy_is_monotone_in_closed_frames() {
        let mut states = vec![EyeState::Open; 200];
        let mut was_drowsy = false;
        for i in 0..200 {
            states[i] = EyeState::Closed;
            let s = perclos(&frames(&states), Window::new(0, 200_000), 0.15).unwrap();
            let drowsy = s.alertness == Alertness::Drowsy;
            assert!(!was_drowsy || drowsy);
            was_drowsy = drowsy;
        }
    }

    #[test]
    fn accumulator_matches_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut t = 0i64;
        let mut f = Vec::new();
        while t < 400_000 {
            let s = if rng.random_bool(0.2) { EyeState::Closed } else { EyeState::Open };
            f.push((t, s));
            t += rng.random_range(20..50);
        }
        let mut acc = WindowAccumulator::new(180.0, 2.0 / 3.0, 0.15).unwrap();
        let mut streamed = Vec::new();
        for &(t, s) in &f {
            streamed.extend(acc.push(t, s).unwrap());
        }
        streamed.extend(acc.finish(400_000));
        let batch: Vec<_> = window_plan(400.0, 180.0, 2.0 / 3.0)
            .unwrap()
            .into_iter()
            .map(|w| perclos(&f, w, 0.15).unwrap())
            .collect();
        assert_eq!(streamed, batch);
        assert!(acc.push(f.last().unwrap().0, EyeState::Open).is_err());
    }
}
