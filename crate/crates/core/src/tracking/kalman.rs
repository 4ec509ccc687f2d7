use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Process and measurement noise for the constant-velocity model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// White-acceleration spectral density, units²/s³.
    pub q: f64,
    /// Isotropic measurement variance, units².
    pub r: f64,
    /// Prior velocity variance at initialisation, (units/s)².
    pub initial_velocity_var: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            q: 50.0,
            r: 1.0,
            initial_velocity_var: 1e6,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.q >= 0.0 && self.r >= 0.0 && self.initial_velocity_var >= 0.0) {
            return Err(Error::InvalidParameter(format!("noise parameters must be >= 0: {self:?}")));
        }
        Ok(())
    }
}

/// State `(px, py, vx, vy)` with covariance, stamped at `t_last` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanState {
    pub x: Vector4<f64>,
    pub p: Matrix4<f64>,
    pub t_last: f64,
}

impl KalmanState {
    /// Position from the first measurement, zero velocity,
    /// `P = diag(r, r, v0, v0)`.
    pub fn from_measurement(t: f64, z: [f64; 2], cfg: &NoiseConfig) -> Self {
        let v0 = cfg.initial_velocity_var;
        Self {
            x: Vector4::new(z[0], z[1], 0.0, 0.0),
            p: Matrix4::from_diagonal(&Vector4::new(cfg.r, cfg.r, v0, v0)),
            t_last: t,
        }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x[0], self.x[1]]
    }

    pub fn velocity(&self) -> [f64; 2] {
        [self.x[2], self.x[3]]
    }
}

fn transition(dt: f64) -> Matrix4<f64> {
    let mut f = Matrix4::identity();
    f[(0, 2)] = dt;
    f[(1, 3)] = dt;
    f
}

fn process_noise(dt: f64, q: f64) -> Matrix4<f64> {
    let (a, b, c) = (q * dt.powi(3) / 3.0, q * dt.powi(2) / 2.0, q * dt);
    let mut m = Matrix4::zeros();
    for (p, v) in [(0, 2), (1, 3)] {
        m[(p, p)] = a;
        m[(p, v)] = b;
        m[(v, p)] = b;
        m[(v, v)] = c;
    }
    m
}

fn observation() -> Matrix2x4<f64> {
    Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
}

fn symmetrize(p: Matrix4<f64>) -> Matrix4<f64> {
    (p + p.transpose()) * 0.5
}

pub fn kalman_predict(s: &KalmanState, dt: f64, cfg: &NoiseConfig) -> Result<KalmanState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let f = transition(dt);
    Ok(KalmanState {
        x: f * s.x,
        p: symmetrize(f * s.p * f.transpose() + process_noise(dt, cfg.q)),
        t_last: s.t_last + dt,
    })
}

/// Measurement update with the Joseph-form covariance.
///
/// A singular innovation covariance is only an error when the measurement
/// disagrees with the prediction; a zero innovation leaves the state as is.
pub fn kalman_update(s: &KalmanState, z: [f64; 2], cfg: &NoiseConfig) -> Result<KalmanState> {
    if !(z[0].is_finite() && z[1].is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite measurement {z:?}")));
    }
    let h = observation();
    let r = Matrix2::identity() * cfg.r;
    let zv = Vector2::new(z[0], z[1]);
    let innovation = zv - h * s.x;
    let s_cov = h * s.p * h.transpose() + r;
    let Some(chol) = s_cov.cholesky() else {
        if innovation.iter().all(|v| *v == 0.0) {
            return Ok(*s);
        }
        return Err(Error::SingularInnovation);
    };
    let gain = s.p * h.transpose() * chol.inverse();
    let mut x = s.x + gain * innovation;
    let i_kh = Matrix4::identity() - gain * h;
    let p = i_kh * s.p * i_kh.transpose() + gain * r * gain.transpose();
    if cfg.r == 0.0 {
        // H·K is the identity for an exact measurement.
        x[0] = z[0];
        x[1] = z[1];
    }
    Ok(KalmanState {
        x,
        p: symmetrize(p),
        t_last: s.t_last,
    })
}

/// Axis-aligned search region around a predicted position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Roi {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Roi {
    fn around(s: &KalmanState, sigmas: f64) -> Self {
        let (sx, sy) = (s.p[(0, 0)].max(0.0).sqrt(), s.p[(1, 1)].max(0.0).sqrt());
        Roi {
            x_min: s.x[0] - sigmas * sx,
            y_min: s.x[1] - sigmas * sy,
            x_max: s.x[0] + sigmas * sx,
            y_max: s.x[1] + sigmas * sy,
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (self.x_min..=self.x_max).contains(&p[0]) && (self.y_min..=self.y_max).contains(&p[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackStep {
    pub t: f64,
    pub position: [f64; 2],
    pub velocity: [f64; 2],
    /// Where the measurement at `t` was expected: prediction ± 3σ.
    pub roi: Roi,
}

/// Filters a measurement sequence, predicting to each timestamp before
/// updating with it.
pub fn track(points: &[(f64, [f64; 2])], cfg: &NoiseConfig) -> Result<Vec<TrackStep>> {
    cfg.validate()?;
    let Some(&(t0, z0)) = points.first() else {
        return Ok(Vec::new());
    };
    let mut state = KalmanState::from_measurement(t0, z0, cfg);
    let mut out = Vec::with_capacity(points.len());
    out.push(TrackStep {
        t: t0,
        position: state.position(),
        velocity: state.velocity(),
        roi: Roi::around(&state, 3.0),
    });
    for (i, &(t, z)) in points.iter().enumerate().skip(1) {
        let dt = t - state.t_last;
        if !(dt > 0.0) {
            return Err(Error::NonMonotonic { index: i });
        }
        let predicted = kalman_predict(&state, dt, cfg)?;
        let roi = Roi::around(&predicted, 3.0);
        state = kalman_update(&predicted, z, cfg)?;
        state.t_last = t;
        out.push(TrackStep {
            t,
            position: state.position(),
            velocity: state.velocity(),
            roi,
        });
    }
    Ok(out)
}
