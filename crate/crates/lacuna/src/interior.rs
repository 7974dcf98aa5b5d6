//! The interior function: distance filtrations, grid evaluation, integration.
//!
//! For a mask embedded in a box, `interior_value(mask, v)` is twice the sup
//! norm of the landscape of the degree-1 diagram of the sublevel filtration
//! by `h_v(x) = -d(v, x)`, which reduces to the length of the longest finite
//! degree-1 interval. Sampling it on a grid gives a surface that is large
//! where `v` is deeply enclosed by the mask and zero over holes and outside
//! the shape.

use crate::cubical::{
    build_filtered_complex, reduce_parts, ComplexTemplate, FiltrationField, ReducedPairing,
    ReductionScratch,
};
use crate::landscape::{EssentialPolicy as LandscapePolicy, Landscape};
use crate::mask::BinaryMask;
use rayon::prelude::*;
use std::io::{self, Write};

/// Metric used for the distance filtration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
    Chebyshev,
}

impl Metric {
    #[inline]
    pub fn distance(self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let (dx, dy) = ((a.0 - b.0).abs(), (a.1 - b.1).abs());
        match self {
            Metric::Euclidean => (dx * dx + dy * dy).sqrt(),
            Metric::Manhattan => dx + dy,
            Metric::Chebyshev => dx.max(dy),
        }
    }
}

/// Axis-aligned embedding box, default [-1,1]^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for EmbeddingBox {
    fn default() -> Self {
        Self {
            x_min: -1.0,
            x_max: 1.0,
            y_min: -1.0,
            y_max: 1.0,
        }
    }
}

impl EmbeddingBox {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn has_positive_area(&self) -> bool {
        self.width() > 0.0 && self.height() > 0.0
    }
}

/// Embedding convention: box plus metric.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EmbeddingSpec {
    pub bounds: EmbeddingBox,
    pub metric: Metric,
}

/// Uniform closed evaluation grid, `resolution` nodes per axis (>= 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub resolution: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { resolution: 100 }
    }
}

/// Policy for essential degree-1 intervals when evaluating the interior
/// function. `Drop` reproduces the null value over holes; `CapAtMax` closes
/// essential intervals at the complex's maximum filtration value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InteriorPolicy {
    #[default]
    Drop,
    CapAtMax,
}

/// Sampled interior function on a uniform grid over the embedding box.
///
/// Node `(ix, iy)` sits at `(x_min + ix*dx, y_min + iy*dy)` with
/// `dx = width/(G-1)`; values are stored row-major with `iy` as the row.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorGrid {
    resolution: usize,
    bounds: EmbeddingBox,
    values: Vec<f64>,
}

impl InteriorGrid {
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn bounds(&self) -> &EmbeddingBox {
        &self.bounds
    }

    pub fn spacing(&self) -> (f64, f64) {
        let g = (self.resolution - 1) as f64;
        (self.bounds.width() / g, self.bounds.height() / g)
    }

    pub fn node(&self, ix: usize, iy: usize) -> (f64, f64) {
        let (dx, dy) = self.spacing();
        (
            self.bounds.x_min + ix as f64 * dx,
            self.bounds.y_min + iy as f64 * dy,
        )
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.resolution + ix]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// CSV export: header `x,y,value`, row-major over nodes, 17 significant
    /// digits, LF line endings.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(b"x,y,value\n")?;
        for iy in 0..self.resolution {
            for ix in 0..self.resolution {
                let (x, y) = self.node(ix, iy);
                writeln!(w, "{:.16e},{:.16e},{:.16e}", x, y, self.value(ix, iy))?;
            }
        }
        Ok(())
    }
}

/// Centers of all pixels of a mask under the embedding, row-major.
///
/// Pixel (col i, row j) maps to `x = x_min + (i + 0.5) * w/W`; image row 0 is
/// the top row and maps to the largest y.
pub fn pixel_centers(mask: &BinaryMask, emb: &EmbeddingSpec) -> Vec<(f64, f64)> {
    let (w, h) = (mask.width() as f64, mask.height() as f64);
    let b = &emb.bounds;
    let mut centers = Vec::with_capacity(mask.len());
    for row in 0..mask.height() {
        for col in 0..mask.width() {
            let x = b.x_min + (col as f64 + 0.5) * b.width() / w;
            let y = b.y_max - (row as f64 + 0.5) * b.height() / h;
            centers.push((x, y));
        }
    }
    centers
}

#[inline]
fn signed_height(d: f64) -> f64 {
    // Canonicalise -0.0 away so filtration values have a single zero.
    if d == 0.0 {
        0.0
    } else {
        -d
    }
}

/// The field `h_v(x) = -d(v, x)` sampled at the activated pixel centers.
pub fn distance_filtration(mask: &BinaryMask, v: (f64, f64), emb: &EmbeddingSpec) -> FiltrationField {
    let centers = pixel_centers(mask, emb);
    let mut values = vec![0.0; mask.len()];
    for (col, row) in mask.iter_activated() {
        let idx = row * mask.width() + col;
        values[idx] = signed_height(emb.metric.distance(v, centers[idx]));
    }
    FiltrationField::new(mask, values).expect("distances are finite")
}

/// Per-mask state for evaluating the interior function at many points.
pub(crate) struct InteriorEngine {
    template: ComplexTemplate,
    active_centers: Vec<(f64, f64)>,
    metric: Metric,
}

/// Per-thread buffers; contents are rewritten for every node.
#[derive(Default)]
pub(crate) struct NodeScratch {
    slot_values: Vec<f64>,
    values: Vec<f64>,
    order: Vec<u32>,
    reduction: ReductionScratch,
    pairing: ReducedPairing,
}

impl InteriorEngine {
    pub(crate) fn new(mask: &BinaryMask, emb: &EmbeddingSpec) -> Self {
        assert!(emb.bounds.has_positive_area(), "embedding box must have positive area");
        let template = ComplexTemplate::build(mask);
        let centers = pixel_centers(mask, emb);
        let active_centers = template
            .activated_pixels()
            .iter()
            .map(|&(c, r)| centers[r as usize * mask.width() + c as usize])
            .collect();
        Self {
            template,
            active_centers,
            metric: emb.metric,
        }
    }

    /// Interior value at `v`: longest finite degree-1 interval under the
    /// policy (essential intervals capped at the max filtration value first
    /// when requested).
    pub(crate) fn value_at(&self, v: (f64, f64), policy: InteriorPolicy, scratch: &mut NodeScratch) -> f64 {
        if self.active_centers.is_empty() {
            return 0.0;
        }
        scratch.slot_values.clear();
        scratch
            .slot_values
            .extend(self.active_centers.iter().map(|&c| signed_height(self.metric.distance(v, c))));
        self.template
            .fill(&scratch.slot_values, &mut scratch.values, &mut scratch.order);
        reduce_parts(
            &self.template,
            &scratch.order,
            &mut scratch.reduction,
            &mut scratch.pairing,
        );

        let values = &scratch.values;
        let mut longest = 0.0f64;
        for &(bc, dc) in &scratch.pairing.finite1 {
            let len = values[dc as usize] - values[bc as usize];
            if len > longest {
                longest = len;
            }
        }
        if policy == InteriorPolicy::CapAtMax && !scratch.pairing.essential1.is_empty() {
            let max_value = scratch
                .slot_values
                .iter()
                .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            for &c in &scratch.pairing.essential1 {
                let len = max_value - values[c as usize];
                if len > longest {
                    longest = len;
                }
            }
        }
        longest
    }
}

/// Interior function at a single point.
pub fn interior_value(
    mask: &BinaryMask,
    v: (f64, f64),
    emb: &EmbeddingSpec,
    policy: InteriorPolicy,
) -> f64 {
    let engine = InteriorEngine::new(mask, emb);
    engine.value_at(v, policy, &mut NodeScratch::default())
}

/// Sample the interior function on the closed uniform grid.
///
/// Node evaluations are independent; they run in parallel on the current
/// rayon pool and the result is bit-identical at any parallelism degree.
pub fn interior_grid(
    mask: &BinaryMask,
    emb: &EmbeddingSpec,
    grid: &GridSpec,
    policy: InteriorPolicy,
) -> InteriorGrid {
    let g = grid.resolution;
    assert!(g >= 2, "grid resolution must be at least 2");
    let engine = InteriorEngine::new(mask, emb);
    let b = emb.bounds;
    let (dx, dy) = (b.width() / (g - 1) as f64, b.height() / (g - 1) as f64);
    let values: Vec<f64> = (0..g * g)
        .into_par_iter()
        .map_init(NodeScratch::default, |scratch, idx| {
            let (ix, iy) = (idx % g, idx / g);
            let v = (b.x_min + ix as f64 * dx, b.y_min + iy as f64 * dy);
            engine.value_at(v, policy, scratch)
        })
        .collect();
    InteriorGrid {
        resolution: g,
        bounds: b,
        values,
    }
}

/// Composite 2D trapezoidal rule over the grid: corner weight 1/4, edge
/// weight 1/2, interior weight 1, scaled by dx*dy. Exact for functions
/// bilinear on each cell.
pub fn trapezoid_integral(grid: &InteriorGrid) -> f64 {
    let g = grid.resolution();
    let (dx, dy) = grid.spacing();
    let w = |i: usize| if i == 0 || i == g - 1 { 0.5 } else { 1.0 };
    let mut total = 0.0;
    for iy in 0..g {
        let wy = w(iy);
        let mut row = 0.0;
        for ix in 0..g {
            row += w(ix) * grid.value(ix, iy);
        }
        total += wy * row;
    }
    total * dx * dy
}

/// Landscape of the degree-1 diagram at `v`; the cross-check route for
/// [`interior_value`].
pub fn interior_landscape(
    mask: &BinaryMask,
    v: (f64, f64),
    emb: &EmbeddingSpec,
    policy: InteriorPolicy,
) -> Landscape {
    let field = distance_filtration(mask, v, emb);
    let cx = build_filtered_complex(mask, &field);
    let diagram = crate::cubical::persistence_diagram(&cx, crate::cubical::Degree::One);
    let lp = match policy {
        InteriorPolicy::Drop => LandscapePolicy::Drop,
        InteriorPolicy::CapAtMax => {
            LandscapePolicy::Cap(cx.max_value().unwrap_or(0.0))
        }
    };
    Landscape::from_diagram(&diagram, lp)
}
