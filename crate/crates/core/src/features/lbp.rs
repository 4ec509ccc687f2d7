use super::GrayImage;
use crate::error::{Error, Result};

/// Neighbour offsets (dx, dy), clockwise from the top-left. Index = bit.
const NEIGHBOURS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
];

/// Code of a 3x3 patch given as rows.
///
/// Bit `i` is set iff neighbour `i` (clockwise from top-left) is `>=` the
/// centre, so flat patches map to 255.
pub fn lbp_code(patch: &[[u8; 3]; 3]) -> u8 {
    let center = patch[1][1];
    NEIGHBOURS
        .iter()
        .enumerate()
        .fold(0u8, |code, (bit, &(dx, dy))| {
            let v = patch[(1 + dy) as usize][(1 + dx) as usize];
            if v >= center {
                code | (1 << bit)
            } else {
                code
            }
        })
}

/// Per-pixel LBP codes with the one-pixel border dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LbpCodeMap {
    width: usize,
    height: usize,
    codes: Vec<u8>,
}

impl LbpCodeMap {
    pub fn from_codes(width: usize, height: usize, codes: Vec<u8>) -> Result<Self> {
        if width * height != codes.len() {
            return Err(Error::ImageDataLength {
                width,
                height,
                len: codes.len(),
            });
        }
        Ok(Self {
            width,
            height,
            codes,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.codes[y * self.width + x]
    }
}

pub fn lbp_map(img: &GrayImage) -> Result<LbpCodeMap> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
        });
    }
    let data = img.data();
    let (out_w, out_h) = (w - 2, h - 2);
    let mut codes = Vec::with_capacity(out_w * out_h);
    for y in 1..h - 1 {
        let above = &data[(y - 1) * w..y * w];
        let row = &data[y * w..(y + 1) * w];
        let below = &data[(y + 1) * w..(y + 2) * w];
        for x in 1..w - 1 {
            let c = row[x];
            let bits = [
                above[x - 1],
                above[x],
                above[x + 1],
                row[x + 1],
                below[x + 1],
                below[x],
                below[x - 1],
                row[x - 1],
            ];
            let mut code = 0u8;
            for (i, &n) in bits.iter().enumerate() {
                code |= u8::from(n >= c) << i;
            }
            codes.push(code);
        }
    }
    Ok(LbpCodeMap {
        width: out_w,
        height: out_h,
        codes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn patch_at(img: &GrayImage, cx: usize, cy: usize) -> [[u8; 3]; 3] {
        let mut p = [[0u8; 3]; 3];
        for (r, row) in p.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = img.get(cx + c - 1, cy + r - 1);
            }
        }
        p
    }

    #[test]
    fn constant_patch_is_all_ones() {
        assert_eq!(lbp_code(&[[5; 3]; 3]), 255);
    }

    #[test]
    fn dark_neighbours_give_zero() {
        assert_eq!(lbp_code(&[[0, 0, 0], [0, 100, 0], [0, 0, 0]]), 0);
    }

    #[test]
    fn clockwise_bit_order() {
        assert_eq!(lbp_code(&[[6, 5, 2], [7, 6, 1], [9, 8, 7]]), 241);
        // Single brighter neighbour on each position lights exactly its bit.
        let pos = [(0, 0), (0, 1), (0, 2), (1, 2), (2, 2), (2, 1), (2, 0), (1, 0)];
        for (bit, &(r, c)) in pos.iter().enumerate() {
            let mut p = [[0u8; 3]; 3];
            p[1][1] = 10;
            p[r][c] = 20;
            assert_eq!(lbp_code(&p), 1 << bit);
        }
    }

    #[test]
    fn map_dimensions() {
        let m = lbp_map(&GrayImage::filled(3, 3, 9)).unwrap();
        assert_eq!((m.width(), m.height()), (1, 1));
        assert_eq!(m.codes(), &[255]);
        let m = lbp_map(&GrayImage::filled(4, 3, 9)).unwrap();
        assert_eq!((m.width(), m.height()), (2, 1));
    }

    #[test]
    fn too_small_is_rejected() {
        assert!(matches!(
            lbp_map(&GrayImage::filled(2, 5, 0)),
            Err(Error::ImageTooSmall { .. })
        ));
        assert!(lbp_map(&GrayImage::filled(5, 2, 0)).is_err());
    }

    proptest! {
        #[test]
        fn map_matches_patch_codes(w in 3usize..20, h in 3usize..20, seed in any::<u64>()) {
            let mut s = seed;
            let img = GrayImage::from_fn(w, h, |_, _| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 56) as u8
            });
            let m = lbp_map(&img).unwrap();
            for y in 0..m.height() {
                for x in 0..m.width() {
                    prop_assert_eq!(m.get(x, y), lbp_code(&patch_at(&img, x + 1, y + 1)));
                }
            }
        }
    }
}
