use serde::{Deserialize, Serialize};

use super::LbpCodeMap;
use crate::error::{Error, Result};

pub const BINS_PER_BLOCK: usize = 256;

/// Block layout of a feature vector: `(grid_rows, grid_cols, bins_per_block)`.
pub type Layout = (usize, usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    values: Vec<f64>,
    layout: Layout,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, layout: Layout) -> Result<Self> {
        let expected = layout.0 * layout.1 * layout.2;
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(Self { values, layout })
    }

    /// Unstructured vector, treated as a single block.
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len();
        Self {
            values,
            layout: (1, 1, n),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.layout.2.max(1))
    }

    /// Each block scaled to unit L1 mass. Empty blocks stay zero.
    pub fn l1_normalized(&self) -> FeatureVector {
        let mut values = Vec::with_capacity(self.values.len());
        for block in self.blocks() {
            let mass: f64 = block.iter().sum();
            if mass > 0.0 {
                values.extend(block.iter().map(|v| v / mass));
            } else {
                values.extend_from_slice(block);
            }
        }
        FeatureVector {
            values,
            layout: self.layout,
        }
    }
}

/// Span of block `index` out of `count` over `len` cells; the last block
/// absorbs the remainder.
fn block_span(index: usize, count: usize, len: usize) -> (usize, usize) {
    let size = len / count;
    let start = index * size;
    let end = if index + 1 == count { len } else { start + size };
    (start, end)
}

/// Row-major concatenation of 256-bin code histograms over a grid of blocks.
pub fn block_histogram(map: &LbpCodeMap, grid_rows: usize, grid_cols: usize) -> Result<FeatureVector> {
    let (w, h) = (map.width(), map.height());
    if grid_rows == 0 || grid_cols == 0 || grid_rows > h || grid_cols > w {
        return Err(Error::GridTooLarge {
            rows: grid_rows,
            cols: grid_cols,
            width: w,
            height: h,
        });
    }
    let mut values = vec![0.0; grid_rows * grid_cols * BINS_PER_BLOCK];
    for br in 0..grid_rows {
        let (y0, y1) = block_span(br, grid_rows, h);
        for bc in 0..grid_cols {
            let (x0, x1) = block_span(bc, grid_cols, w);
            let base = (br * grid_cols + bc) * BINS_PER_BLOCK;
            let hist = &mut values[base..base + BINS_PER_BLOCK];
            for y in y0..y1 {
                for x in x0..x1 {
                    hist[map.get(x, y) as usize] += 1.0;
                }
            }
        }
    }
    Ok(FeatureVector {
        values,
        layout: (grid_rows, grid_cols, BINS_PER_BLOCK),
    })
}
