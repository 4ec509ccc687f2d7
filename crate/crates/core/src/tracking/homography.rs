use nalgebra::{Matrix3, SMatrix, Vector3};
use serde::{Deserialize, Serialize};

use super::Point;
use crate::error::{Error, Result};

/// Planar projective map, scaled so `h33 == 1` whenever it is nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homography {
    m: [[f64; 3]; 3],
}

impl Homography {
    pub fn identity() -> Self {
        Self::from_matrix(Matrix3::identity()).expect("identity is invertible")
    }

    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let scale = if m[(2, 2)].abs() > 1e-12 { m[(2, 2)] } else { m.norm() };
        if scale == 0.0 || !scale.is_finite() {
            return Err(Error::Degenerate("zero homography".into()));
        }
        let m = m / scale;
        if !(m.determinant().abs() > 1e-12) {
            return Err(Error::Degenerate("homography is not invertible".into()));
        }
        let mut rows = [[0.0; 3]; 3];
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = m[(r, c)];
            }
        }
        Ok(Self { m: rows })
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.m[r][c])
    }

    /// Maps a point; `None` if it lands on the line at infinity.
    pub fn apply(&self, p: Point) -> Option<Point> {
        let v = self.matrix() * Vector3::new(p.x, p.y, 1.0);
        if v[2].abs() < 1e-300 {
            return None;
        }
        Some(Point::new(v[0] / v[2], v[1] / v[2]))
    }

    /// `other ∘ self`: apply `self` first.
    pub fn then(&self, other: &Homography) -> Result<Homography> {
        Homography::from_matrix(other.matrix() * self.matrix())
    }

    pub fn inverse(&self) -> Result<Homography> {
        let inv = self
            .matrix()
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("homography is not invertible".into()))?;
        Homography::from_matrix(inv)
    }
}

fn cross(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn check_general_position(pts: &[Point; 4], which: &str) -> Result<()> {
    let scale = pts
        .iter()
        .flat_map(|p| pts.iter().map(move |q| p.distance(q)))
        .fold(0.0, f64::max);
    if !(scale > 0.0) || pts.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(Error::Degenerate(format!("{which} points coincide or are not finite")));
    }
    for (i, j, k) in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)] {
        if cross(pts[i], pts[j], pts[k]).abs() <= 1e-10 * scale * scale {
            return Err(Error::Degenerate(format!("{which} points {i}, {j}, {k} are collinear")));
        }
    }
    Ok(())
}

/// Similarity that moves the centroid to the origin with mean distance √2.
fn normalizer(pts: &[Point; 4]) -> Matrix3<f64> {
    let cx = pts.iter().map(|p| p.x).sum::<f64>() / 4.0;
    let cy = pts.iter().map(|p| p.y).sum::<f64>() / 4.0;
    let mean_dist = pts.iter().map(|p| (p.x - cx).hypot(p.y - cy)).sum::<f64>() / 4.0;
    let s = std::f64::consts::SQRT_2 / mean_dist;
    Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0)
}

fn transform(t: &Matrix3<f64>, p: Point) -> Point {
    let v = t * Vector3::new(p.x, p.y, 1.0);
    Point::new(v[0] / v[2], v[1] / v[2])
}

/// Exact homography through four correspondences (normalised DLT).
pub fn solve_homography(src: &[Point; 4], dst: &[Point; 4]) -> Result<Homography> {
    check_general_position(src, "source")?;
    check_general_position(dst, "destination")?;
    let (ts, td) = (normalizer(src), normalizer(dst));

    // Eight equations in the nine entries of H; the ninth row stays zero so
    // the SVD yields a full right basis.
    let mut a = SMatrix::<f64, 9, 9>::zeros();
    for (i, (s, d)) in src.iter().zip(dst).enumerate() {
        let (s, d) = (transform(&ts, *s), transform(&td, *d));
        let r = 2 * i;
        let row_u = [-s.x, -s.y, -1.0, 0.0, 0.0, 0.0, d.x * s.x, d.x * s.y, d.x];
        let row_v = [0.0, 0.0, 0.0, -s.x, -s.y, -1.0, d.y * s.x, d.y * s.y, d.y];
        for c in 0..9 {
            a[(r, c)] = row_u[c];
            a[(r + 1, c)] = row_v[c];
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Degenerate("SVD failed".into()))?;
    let smallest = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(8);
    let h = v_t.row(smallest);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let td_inv = td
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("normaliser not invertible".into()))?;
    Homography::from_matrix(td_inv * hn * ts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quad(pts: [[f64; 2]; 4]) -> [Point; 4] {
        pts.map(Point::from)
    }

    const UNIT: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

    fn assert_maps(h: &Homography, src: &[Point; 4], dst: &[Point; 4], tol: f64) {
        for (s, d) in src.iter().zip(dst) {
            let m = h.apply(*s).unwrap();
            assert!(m.distance(d) < tol, "{m:?} vs {d:?}");
        }
    }

    #[test]
    fn identity_square() {
        let h = solve_homography(&quad(UNIT), &quad(UNIT)).unwrap();
        let diff = h.matrix() - Matrix3::identity();
        assert!(diff.abs().max() < 1e-12, "{}", h.matrix());
    }

    #[test]
    fn translation() {
        let dst = quad(UNIT.map(|[x, y]| [x + 5.0, y - 2.0]));
        let h = solve_homography(&quad(UNIT), &dst).unwrap();
        let want = Matrix3::new(1.0, 0.0, 5.0, 0.0, 1.0, -2.0, 0.0, 0.0, 1.0);
        assert!((h.matrix() - want).abs().max() < 1e-12);
    }

    pub(crate) fn random_quad(rng: &mut ChaCha8Rng) -> [Point; 4] {
        loop {
            let q = [(); 4].map(|_| Point::new(rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0)));
            let ok = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
                .iter()
                .all(|&(i, j, k)| cross(q[i], q[j], q[k]).abs() > 100.0);
            if ok {
                return q;
            }
        }
    }

    #[test]
    fn random_quads_are_reproduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let (src, dst) = (random_quad(&mut rng), random_quad(&mut rng));
            let h = solve_homography(&src, &dst).unwrap();
            assert_maps(&h, &src, &dst, 1e-9);
            let inv = h.inverse().unwrap();
            assert_maps(&inv, &dst, &src, 1e-8);
        }
    }

    #[test]
    fn composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let (a, b, c) = (random_quad(&mut rng), random_quad(&mut rng), random_quad(&mut rng));
            let ab = solve_homography(&a, &b).unwrap();
            let bc = solve_homography(&b, &c).unwrap();
            let ac = solve_homography(&a, &c).unwrap();
            let composed = ab.then(&bc).unwrap();
            for p in a {
                assert!(composed.apply(p).unwrap().distance(&ac.apply(p).unwrap()) < 1e-6);
            }
        }
    }

    #[test]
    fn degenerate_inputs() {
        let collinear = quad([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [0.0, 1.0]]);
        assert!(matches!(solve_homography(&collinear, &quad(UNIT)), Err(Error::Degenerate(_))));
        assert!(solve_homography(&quad(UNIT), &collinear).is_err());
        let repeated = quad([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert!(solve_homography(&repeated, &quad(UNIT)).is_err());
        assert!(Homography::from_matrix(Matrix3::zeros()).is_err());
    }
}
