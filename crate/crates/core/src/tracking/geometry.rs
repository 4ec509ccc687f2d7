use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(p: [f64; 2]) -> Self {
        Point::new(p[0], p[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadPose {
    pub tilt_deg: f64,
    pub frustration_flag: bool,
}

/// Roll angle of the eye-corner baseline in degrees, in `(-90, 90]`.
pub fn head_tilt(left_corner: Point, right_corner: Point) -> Result<f64> {
    let (dx, dy) = (right_corner.x - left_corner.x, right_corner.y - left_corner.y);
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::Degenerate("eye corners coincide".into()));
    }
    let mut deg = dy.atan2(dx).to_degrees();
    if deg > 90.0 {
        deg -= 180.0;
    } else if deg <= -90.0 {
        deg += 180.0;
    }
    Ok(deg)
}

pub fn rotate_about(p: Point, pivot: Point, deg: f64) -> Point {
    let (s, c) = deg.to_radians().sin_cos();
    let (dx, dy) = (p.x - pivot.x, p.y - pivot.y);
    Point::new(pivot.x + c * dx - s * dy, pivot.y + s * dx + c * dy)
}

/// Eye corners plus any other facial landmarks carried along with them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceLandmarks {
    pub left_eye: Point,
    pub right_eye: Point,
    #[serde(default)]
    pub others: Vec<Point>,
}

impl FaceLandmarks {
    pub fn eye_midpoint(&self) -> Point {
        Point::new(
            (self.left_eye.x + self.right_eye.x) / 2.0,
            (self.left_eye.y + self.right_eye.y) / 2.0,
        )
    }

    pub fn tilt(&self) -> Result<f64> {
        head_tilt(self.left_eye, self.right_eye)
    }

    pub fn rotated(&self, pivot: Point, deg: f64) -> FaceLandmarks {
        FaceLandmarks {
            left_eye: rotate_about(self.left_eye, pivot, deg),
            right_eye: rotate_about(self.right_eye, pivot, deg),
            others: self.others.iter().map(|&p| rotate_about(p, pivot, deg)).collect(),
        }
    }
}

/// Undoes an in-plane roll of `tilt_deg` about the eye midpoint.
pub fn deroll(landmarks: &FaceLandmarks, tilt_deg: f64) -> FaceLandmarks {
    landmarks.rotated(landmarks.eye_midpoint(), -tilt_deg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tilt_cases() {
        let o = Point::new(0.0, 0.0);
        assert_eq!(head_tilt(o, Point::new(10.0, 0.0)).unwrap(), 0.0);
        assert!((head_tilt(o, Point::new(10.0, 10.0)).unwrap() - 45.0).abs() < 1e-12);
        assert_eq!(head_tilt(o, Point::new(0.0, 10.0)).unwrap(), 90.0);
        assert_eq!(head_tilt(o, Point::new(0.0, -10.0)).unwrap(), 90.0);
        assert!((head_tilt(o, Point::new(-10.0, -10.0)).unwrap() - 45.0).abs() < 1e-12);
        assert!((head_tilt(o, Point::new(-10.0, 10.0)).unwrap() + 45.0).abs() < 1e-12);
        assert!(head_tilt(o, o).is_err());
    }

    #[test]
    fn zero_tilt_is_identity() {
        let lm = FaceLandmarks {
            left_eye: Point::new(1.0, 2.0),
            right_eye: Point::new(5.0, 2.5),
            others: vec![Point::new(3.0, 7.0)],
        };
        assert_eq!(deroll(&lm, 0.0), lm);
    }

    fn point() -> impl Strategy<Value = Point> {
        (-500.0..500.0f64, -500.0..500.0f64).prop_map(|(x, y)| Point::new(x, y))
    }

    proptest! {
        #[test]
        fn deroll_undoes_rotation(
            l in point(), r in point(), others in prop::collection::vec(point(), 0..8), deg in -89.0..89.0f64
        ) {
            prop_assume!(l.distance(&r) > 1e-3);
            let lm = FaceLandmarks { left_eye: l, right_eye: r, others };
            let rolled = lm.rotated(lm.eye_midpoint(), deg);
            let back = deroll(&rolled, deg);
            for (a, b) in [(back.left_eye, lm.left_eye), (back.right_eye, lm.right_eye)]
                .into_iter()
                .chain(back.others.iter().copied().zip(lm.others.iter().copied()))
            {
                prop_assert!(a.distance(&b) < 1e-9);
            }
        }

        #[test]
        fn derolled_baseline_is_level(l in point(), r in point()) {
            prop_assume!(l.distance(&r) > 1e-3);
            let lm = FaceLandmarks { left_eye: l, right_eye: r, others: vec![] };
            let level = deroll(&lm, lm.tilt().unwrap());
            prop_assert!(level.tilt().unwrap().abs() < 1e-9);
        }
    }
}
