//! Kalman tracking, iris localisation and face geometry.

mod geometry;
mod homography;
mod iris;
mod kalman;

pub use geometry::{deroll, head_tilt, rotate_about, FaceLandmarks, HeadPose, Point};
pub use homography::{solve_homography, Homography};
pub use iris::estimate_iris_center;
pub use kalman::{kalman_predict, kalman_update, track, KalmanState, NoiseConfig, Roi, TrackStep};
