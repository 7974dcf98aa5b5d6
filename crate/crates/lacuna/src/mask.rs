//! Binary image masks: the input geometry for every computation in this crate.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MaskError {
    #[error("mask dimensions must be positive, got {width}x{height}")]
    ZeroDimension { width: usize, height: usize },
    #[error("bit buffer has length {len}, expected {width}x{height} = {expected}")]
    LengthMismatch {
        width: usize,
        height: usize,
        len: usize,
        expected: usize,
    },
    #[error("mask dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("pixel (col {col}, row {row}) is activated in the subset but not in the superset")]
    SubsetViolation { col: usize, row: usize },
    #[error("pixel (col {col}, row {row}) is activated in the core but covered by neither enhanced nor necrosis")]
    CoverViolation { col: usize, row: usize },
}

/// A W x H grid of activated/deactivated pixels, stored row-major.
///
/// Pixel (col `i`, row `j`) lives at index `j * width + i`; row 0 is the top
/// image row. The mask doubles as the cubical complex it spans: activated
/// pixels are the top-dimensional cells, their closure supplies the edges
/// and vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::ZeroDimension { width, height });
        }
        let expected = width * height;
        if bits.len() != expected {
            return Err(MaskError::LengthMismatch {
                width,
                height,
                len: bits.len(),
                expected,
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    /// Mask with every pixel deactivated.
    pub fn empty(width: usize, height: usize) -> Result<Self, MaskError> {
        Self::new(width, height, vec![false; width * height])
    }

    /// Mask with every pixel activated.
    pub fn filled(width: usize, height: usize) -> Result<Self, MaskError> {
        Self::new(width, height, vec![true; width * height])
    }

    /// Build from a predicate over (col, row).
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self, MaskError> {
        if width == 0 || height == 0 {
            return Err(MaskError::ZeroDimension { width, height });
        }
        let mut bits = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                bits.push(f(col, row));
            }
        }
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| !b)
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn activation_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// (col, row) of every activated pixel, row-major.
    pub fn iter_activated(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(idx, _)| (idx % w, idx / w))
    }

    pub fn same_dimensions(&self, other: &Self) -> Result<(), MaskError> {
        if self.width != other.width || self.height != other.height {
            return Err(MaskError::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    /// Check `self ⊆ superset` pixel-wise; the error names the first
    /// offending pixel in row-major order.
    pub fn check_subset_of(&self, superset: &Self) -> Result<(), MaskError> {
        self.same_dimensions(superset)?;
        for (idx, (&a, &b)) in self.bits.iter().zip(&superset.bits).enumerate() {
            if a && !b {
                return Err(MaskError::SubsetViolation {
                    col: idx % self.width,
                    row: idx / self.width,
                });
            }
        }
        Ok(())
    }

    /// Pixel-wise `self AND NOT other`.
    pub fn difference(&self, other: &Self) -> Result<Self, MaskError> {
        self.same_dimensions(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| a && !b)
            .collect();
        Self::new(self.width, self.height, bits)
    }

    /// Number of 8-connected components of the activated pixels.
    ///
    /// Matches the component count seen by the cubical complex, where
    /// corner-adjacent pixels share a vertex.
    pub fn connected_components_8(&self) -> usize {
        let mut seen = vec![false; self.bits.len()];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.bits.len() {
            if !self.bits[start] || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(idx) = stack.pop() {
                let (c, r) = (idx % self.width, idx / self.width);
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let (nc, nr) = (c as i64 + dc, r as i64 + dr);
                        if nc < 0 || nr < 0 || nc >= self.width as i64 || nr >= self.height as i64
                        {
                            continue;
                        }
                        let nidx = nr as usize * self.width + nc as usize;
                        if self.bits[nidx] && !seen[nidx] {
                            seen[nidx] = true;
                            stack.push(nidx);
                        }
                    }
                }
            }
        }
        count
    }
}
