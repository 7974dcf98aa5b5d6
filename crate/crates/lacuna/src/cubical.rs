//! Sublevel-filtered 2D cubical complexes and their persistence diagrams.
//!
//! A binary mask is turned into a cubical complex by taking one 2-cell per
//! activated pixel together with the closure (edges and vertices). Filtration
//! values live on the pixels; every lower-dimensional cell inherits the
//! minimum over the activated pixels it is incident to, so the sublevel
//! complex at `t` is exactly the union of closed pixels with value <= t.
//!
//! Persistence is computed over Z/2 by reducing the boundary matrix of the
//! 2-cells (with clearing) and running a union-find pass over the 1-skeleton;
//! [`naive_reduction_oracle`] is an unoptimised full left-to-right reduction
//! kept as an independent cross-check.

use crate::mask::BinaryMask;
use thiserror::Error;

/// The naive oracle is for test-scale inputs only.
pub const ORACLE_CELL_BUDGET: usize = 10_000;

const NONE: u32 = u32::MAX;

#[derive(Debug, Error, PartialEq)]
pub enum PersistenceError {
    #[error("naive reduction oracle refuses complexes with more than {budget} cells (got {cells})")]
    OracleBudgetExceeded { cells: usize, budget: usize },
    #[error("field value at activated pixel (col {col}, row {row}) is not finite")]
    NonFiniteField { col: usize, row: usize },
    #[error("field buffer has length {len}, expected {expected}")]
    FieldLengthMismatch { len: usize, expected: usize },
}

/// Homology degree of a persistence computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degree {
    Zero,
    One,
}

impl Degree {
    pub fn as_u8(self) -> u8 {
        match self {
            Degree::Zero => 0,
            Degree::One => 1,
        }
    }
}

/// A scalar field defined on the activated pixels of a mask.
///
/// Stored as a full `width*height` buffer indexed like the mask; entries at
/// deactivated pixels are ignored.
#[derive(Debug, Clone)]
pub struct FiltrationField {
    values: Vec<f64>,
}

impl FiltrationField {
    pub fn new(mask: &BinaryMask, values: Vec<f64>) -> Result<Self, PersistenceError> {
        if values.len() != mask.len() {
            return Err(PersistenceError::FieldLengthMismatch {
                len: values.len(),
                expected: mask.len(),
            });
        }
        for (col, row) in mask.iter_activated() {
            let v = values[row * mask.width() + col];
            if !v.is_finite() {
                return Err(PersistenceError::NonFiniteField { col, row });
            }
        }
        Ok(Self { values })
    }

    #[inline]
    pub fn value(&self, col: usize, row: usize, width: usize) -> f64 {
        self.values[row * width + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Value-independent structure of the complex spanned by a mask.
///
/// Rebuilding the structure for every filtration over the same mask is
/// wasted work; the template is built once and refilled with new values.
#[derive(Debug, Clone)]
pub struct ComplexTemplate {
    n_cells: usize,
    dims: Vec<u8>,
    /// Boundary cell indices; `NONE`-padded to 4 entries (a k-cell has 2k).
    boundary: Vec<[u32; 4]>,
    /// Activated-pixel slots whose minimum gives the cell value, NONE-padded.
    incident: Vec<[u32; 4]>,
    /// (col, row) per activated-pixel slot, row-major over the mask.
    activated: Vec<(u32, u32)>,
}

impl ComplexTemplate {
    pub fn build(mask: &BinaryMask) -> Self {
        let (w, h) = (mask.width(), mask.height());
        let (gw, gh) = (2 * w + 1, 2 * h + 1);

        let mut slot_of_pixel = vec![NONE; w * h];
        let mut activated = Vec::new();
        for (col, row) in mask.iter_activated() {
            slot_of_pixel[row * w + col] = activated.len() as u32;
            activated.push((col as u32, row as u32));
        }

        // Cells live on the doubled grid: (a, b) with a in [0, 2w], b in
        // [0, 2h]; parity of (a, b) gives the dimension. A cell is present
        // iff some incident pixel is activated.
        let mut id_of_key = vec![NONE; gw * gh];
        let mut dims = Vec::new();
        let mut incident = Vec::new();
        let mut keys = Vec::new();

        let mut inc_buf = [NONE; 4];
        for b in 0..gh {
            for a in 0..gw {
                let mut n_inc = 0usize;
                let i_lo = if a == 0 { 0 } else { (a - 1) / 2 };
                let i_hi = a / 2;
                let j_lo = if b == 0 { 0 } else { (b - 1) / 2 };
                let j_hi = b / 2;
                for j in j_lo..=j_hi.min(h.saturating_sub(1)) {
                    for i in i_lo..=i_hi.min(w.saturating_sub(1)) {
                        // pixel (i, j) covers doubled coords [2i, 2i+2] x [2j, 2j+2]
                        if 2 * i <= a && a <= 2 * i + 2 && 2 * j <= b && b <= 2 * j + 2 {
                            let slot = slot_of_pixel[j * w + i];
                            if slot != NONE {
                                inc_buf[n_inc] = slot;
                                n_inc += 1;
                            }
                        }
                    }
                }
                if n_inc == 0 {
                    continue;
                }
                let key = b * gw + a;
                id_of_key[key] = dims.len() as u32;
                dims.push(((a % 2) + (b % 2)) as u8);
                let mut padded = [NONE; 4];
                padded[..n_inc].copy_from_slice(&inc_buf[..n_inc]);
                incident.push(padded);
                keys.push((a, b));
            }
        }

        let mut boundary = Vec::with_capacity(dims.len());
        for (idx, &(a, b)) in keys.iter().enumerate() {
            let mut bnd = [NONE; 4];
            match dims[idx] {
                0 => {}
                1 => {
                    let (p, q) = if a % 2 == 1 {
                        ((b * gw + a - 1), (b * gw + a + 1))
                    } else {
                        (((b - 1) * gw + a), ((b + 1) * gw + a))
                    };
                    bnd[0] = id_of_key[p];
                    bnd[1] = id_of_key[q];
                }
                2 => {
                    bnd[0] = id_of_key[b * gw + a - 1];
                    bnd[1] = id_of_key[b * gw + a + 1];
                    bnd[2] = id_of_key[(b - 1) * gw + a];
                    bnd[3] = id_of_key[(b + 1) * gw + a];
                }
                _ => unreachable!(),
            }
            boundary.push(bnd);
        }
        debug_assert!(boundary
            .iter()
            .zip(&dims)
            .all(|(bnd, &d)| bnd.iter().filter(|&&x| x != NONE).count() == 2 * d as usize));

        Self {
            n_cells: dims.len(),
            dims,
            boundary,
            incident,
            activated,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn activated_pixels(&self) -> &[(u32, u32)] {
        &self.activated
    }

    /// Fill per-cell filtration values (min over incident activated pixels)
    /// and the filtration ordering, given one value per activated-pixel slot.
    ///
    /// Ordering: value ascending, then dimension ascending, then row-major
    /// cell id on the doubled grid (cell ids are assigned in that scan order,
    /// so comparing indices suffices).
    pub fn fill(&self, slot_values: &[f64], values: &mut Vec<f64>, order: &mut Vec<u32>) {
        let mut keys = Vec::new();
        self.fill_with(slot_values, values, order, &mut keys);
    }

    /// [`ComplexTemplate::fill`] with a caller-owned sort buffer.
    pub(crate) fn fill_with(
        &self,
        slot_values: &[f64],
        values: &mut Vec<f64>,
        order: &mut Vec<u32>,
        keys: &mut Vec<u128>,
    ) {
        assert_eq!(slot_values.len(), self.activated.len());
        values.clear();
        values.reserve(self.n_cells);
        keys.clear();
        keys.reserve(self.n_cells);
        for (idx, inc) in self.incident.iter().enumerate() {
            let mut v = f64::INFINITY;
            for &slot in inc {
                if slot == NONE {
                    break;
                }
                let s = slot_values[slot as usize];
                if s < v {
                    v = s;
                }
            }
            values.push(v);
            keys.push(sort_key(v, self.dims[idx], idx as u32));
        }
        keys.sort_unstable();
        order.clear();
        order.extend(keys.iter().map(|&k| (k & 0xFFFF_FFFF) as u32));
    }
}

/// Packed filtration-order key: value (total order) | dimension | cell id.
#[inline]
fn sort_key(value: f64, dim: u8, idx: u32) -> u128 {
    let bits = value.to_bits();
    // Map f64 bits to an order-preserving unsigned key (IEEE total order).
    let vkey = if bits >> 63 == 1 { !bits } else { bits ^ (1 << 63) };
    ((vkey as u128) << 34) | ((dim as u128) << 32) | idx as u128
}

/// A cubical complex together with filtration values and ordering.
#[derive(Debug, Clone)]
pub struct FilteredCubicalComplex {
    template: ComplexTemplate,
    values: Vec<f64>,
    order: Vec<u32>,
}

impl FilteredCubicalComplex {
    pub fn n_cells(&self) -> usize {
        self.template.n_cells
    }

    pub fn dim(&self, cell: usize) -> u8 {
        self.template.dims[cell]
    }

    pub fn value(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cell indices in filtration order.
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    pub fn boundary(&self, cell: usize) -> impl Iterator<Item = u32> + '_ {
        self.template.boundary[cell]
            .iter()
            .copied()
            .take_while(|&c| c != NONE)
    }

    pub fn max_value(&self) -> Option<f64> {
        self.order
            .last()
            .map(|&c| self.values[c as usize])
    }

    pub fn cell_count_by_dim(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for &d in &self.template.dims {
            counts[d as usize] += 1;
        }
        counts
    }
}

/// Build the filtered complex of a mask under a scalar field.
///
/// An empty mask yields the empty complex.
pub fn build_filtered_complex(mask: &BinaryMask, field: &FiltrationField) -> FilteredCubicalComplex {
    let template = ComplexTemplate::build(mask);
    let slot_values: Vec<f64> = template
        .activated
        .iter()
        .map(|&(c, r)| field.value(c as usize, r as usize, mask.width()))
        .collect();
    let mut values = Vec::new();
    let mut order = Vec::new();
    template.fill(&slot_values, &mut values, &mut order);
    FilteredCubicalComplex {
        template,
        values,
        order,
    }
}

/// One persistence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair {
    pub birth: f64,
    /// `f64::INFINITY` for essential classes.
    pub death: f64,
    pub degree: u8,
}

impl PersistencePair {
    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }

    pub fn length(&self) -> f64 {
        self.death - self.birth
    }
}

/// Multiset of persistence intervals of a single degree.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PersistenceDiagram {
    pub pairs: Vec<PersistencePair>,
}

impl PersistenceDiagram {
    pub fn finite_pairs(&self) -> impl Iterator<Item = &PersistencePair> {
        self.pairs.iter().filter(|p| !p.is_essential())
    }

    pub fn essential_pairs(&self) -> impl Iterator<Item = &PersistencePair> {
        self.pairs.iter().filter(|p| p.is_essential())
    }

    /// Canonical ordering for multiset comparison.
    pub fn sorted(mut self) -> Self {
        self.pairs.sort_by(|a, b| {
            a.birth
                .total_cmp(&b.birth)
                .then(a.death.total_cmp(&b.death))
        });
        self
    }
}

/// Pairing of cells produced by a reduction, expressed in cell indices.
#[derive(Debug, Default, Clone)]
pub struct ReducedPairing {
    /// (birth 0-cell, death 1-cell)
    pub finite0: Vec<(u32, u32)>,
    /// (birth 1-cell, death 2-cell)
    pub finite1: Vec<(u32, u32)>,
    pub essential0: Vec<u32>,
    pub essential1: Vec<u32>,
}

/// Reusable buffers for [`reduce`]; contents are fully overwritten per call.
#[derive(Debug, Default)]
pub struct ReductionScratch {
    pos_of: Vec<u32>,
    pivot_owner: Vec<u32>,
    cols: Vec<Vec<u32>>,
    col: Vec<u32>,
    tmp: Vec<u32>,
    uf_parent: Vec<u32>,
    uf_birth_pos: Vec<u32>,
}

impl ReductionScratch {
    fn reset(&mut self, n: usize) {
        self.pos_of.clear();
        self.pos_of.resize(n, NONE);
        self.pivot_owner.clear();
        self.pivot_owner.resize(n, NONE);
        self.cols.clear();
        self.uf_parent.clear();
        self.uf_parent.resize(n, NONE);
        self.uf_birth_pos.clear();
        self.uf_birth_pos.resize(n, NONE);
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.uf_parent[x as usize] != x {
            let gp = self.uf_parent[self.uf_parent[x as usize] as usize];
            self.uf_parent[x as usize] = gp;
            x = gp;
        }
        x
    }
}

/// Symmetric difference of two sorted index lists (Z/2 column addition).
fn symmetric_difference(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

/// Compute the full persistence pairing of a filtered complex.
///
/// Degree-1 classes come from reducing the 2-cell boundary columns; the
/// 1-skeleton is handled by union-find with the elder rule, which yields the
/// same pairing as matrix reduction for the vertex-edge part. The pairing is
/// a function of the filtration order alone.
pub fn reduce(
    cx: &FilteredCubicalComplex,
    scratch: &mut ReductionScratch,
    out: &mut ReducedPairing,
) {
    reduce_parts(&cx.template, &cx.order, scratch, out);
}

pub(crate) fn reduce_parts(
    template: &ComplexTemplate,
    order: &[u32],
    scratch: &mut ReductionScratch,
    out: &mut ReducedPairing,
) {
    let n = template.n_cells;
    scratch.reset(n);
    out.finite0.clear();
    out.finite1.clear();
    out.essential0.clear();
    out.essential1.clear();

    for (p, &c) in order.iter().enumerate() {
        scratch.pos_of[c as usize] = p as u32;
    }

    // Reduce 2-cell columns; pivots are positions of 1-cells.
    for &c in order.iter() {
        if template.dims[c as usize] != 2 {
            continue;
        }
        let col = &mut scratch.col;
        col.clear();
        for &f in &template.boundary[c as usize] {
            col.push(scratch.pos_of[f as usize]);
        }
        col.sort_unstable();
        loop {
            let Some(&piv) = col.last() else {
                break; // positive 2-cell: no 3-cells, nothing to record
            };
            let owner = scratch.pivot_owner[piv as usize];
            if owner == NONE {
                scratch.pivot_owner[piv as usize] = scratch.cols.len() as u32;
                out.finite1.push((order[piv as usize], c));
                scratch.cols.push(std::mem::take(col));
                break;
            }
            symmetric_difference(col, &scratch.cols[owner as usize], &mut scratch.tmp);
            std::mem::swap(col, &mut scratch.tmp);
        }
    }

    // Union-find over the 1-skeleton in filtration order.
    for (p, &c) in order.iter().enumerate() {
        match template.dims[c as usize] {
            0 => {
                scratch.uf_parent[c as usize] = c;
                scratch.uf_birth_pos[c as usize] = p as u32;
            }
            1 => {
                let bnd = &template.boundary[c as usize];
                let ru = scratch.find(bnd[0]);
                let rv = scratch.find(bnd[1]);
                if ru == rv {
                    // Positive edge: creates a degree-1 class. Essential iff
                    // no 2-cell column claimed it as pivot.
                    if scratch.pivot_owner[scratch.pos_of[c as usize] as usize] == NONE {
                        out.essential1.push(c);
                    }
                } else {
                    let (elder, younger) =
                        if scratch.uf_birth_pos[ru as usize] < scratch.uf_birth_pos[rv as usize] {
                            (ru, rv)
                        } else {
                            (rv, ru)
                        };
                    out.finite0
                        .push((order[scratch.uf_birth_pos[younger as usize] as usize], c));
                    scratch.uf_parent[younger as usize] = elder;
                }
            }
            _ => {}
        }
    }

    for c in 0..n as u32 {
        if template.dims[c as usize] == 0 && scratch.find(c) == c {
            out.essential0.push(c);
        }
    }
}

fn diagram_from_pairing(
    cx: &FilteredCubicalComplex,
    pairing: &ReducedPairing,
    degree: Degree,
) -> PersistenceDiagram {
    let (finite, essential) = match degree {
        Degree::Zero => (&pairing.finite0, &pairing.essential0),
        Degree::One => (&pairing.finite1, &pairing.essential1),
    };
    let mut pairs = Vec::new();
    for &(bc, dc) in finite {
        let (b, d) = (cx.values[bc as usize], cx.values[dc as usize]);
        debug_assert!(b <= d, "filtration monotonicity violated");
        if b < d {
            pairs.push(PersistencePair {
                birth: b,
                death: d,
                degree: degree.as_u8(),
            });
        }
    }
    for &c in essential {
        pairs.push(PersistencePair {
            birth: cx.values[c as usize],
            death: f64::INFINITY,
            degree: degree.as_u8(),
        });
    }
    PersistenceDiagram { pairs }.sorted()
}

/// Persistence diagram of the sublevel filtration in the given degree.
pub fn persistence_diagram(cx: &FilteredCubicalComplex, degree: Degree) -> PersistenceDiagram {
    let mut scratch = ReductionScratch::default();
    let mut pairing = ReducedPairing::default();
    reduce(cx, &mut scratch, &mut pairing);
    diagram_from_pairing(cx, &pairing, degree)
}

/// Textbook left-to-right boundary-matrix reduction over Z/2, no
/// optimisations. Test oracle; refuses inputs beyond [`ORACLE_CELL_BUDGET`].
pub fn naive_reduction_oracle(
    cx: &FilteredCubicalComplex,
    degree: Degree,
) -> Result<PersistenceDiagram, PersistenceError> {
    let n = cx.n_cells();
    if n > ORACLE_CELL_BUDGET {
        return Err(PersistenceError::OracleBudgetExceeded {
            cells: n,
            budget: ORACLE_CELL_BUDGET,
        });
    }

    let mut pos_of = vec![0u32; n];
    for (p, &c) in cx.order.iter().enumerate() {
        pos_of[c as usize] = p as u32;
    }
    let mut columns: Vec<Vec<u32>> = cx
        .order
        .iter()
        .map(|&c| {
            let mut col: Vec<u32> = cx
                .template
                .boundary[c as usize]
                .iter()
                .take_while(|&&f| f != NONE)
                .map(|&f| pos_of[f as usize])
                .collect();
            col.sort_unstable();
            col
        })
        .collect();

    let mut owner: Vec<Option<usize>> = vec![None; n];
    for j in 0..n {
        while let Some(&piv) = columns[j].last() {
            match owner[piv as usize] {
                None => {
                    owner[piv as usize] = Some(j);
                    break;
                }
                Some(k) => {
                    let mut merged = Vec::new();
                    symmetric_difference(&columns[j], &columns[k], &mut merged);
                    columns[j] = merged;
                }
            }
        }
    }

    let mut is_pivot_row = vec![false; n];
    let mut pairs = Vec::new();
    for (j, col) in columns.iter().enumerate() {
        if let Some(&piv) = col.last() {
            is_pivot_row[piv as usize] = true;
            let bc = cx.order[piv as usize] as usize;
            let dc = cx.order[j] as usize;
            if cx.template.dims[bc] == degree.as_u8() {
                let (b, d) = (cx.values[bc], cx.values[dc]);
                if b < d {
                    pairs.push(PersistencePair {
                        birth: b,
                        death: d,
                        degree: degree.as_u8(),
                    });
                }
            }
        }
    }
    for j in 0..n {
        if columns[j].is_empty() && !is_pivot_row[j] {
            let c = cx.order[j] as usize;
            if cx.template.dims[c] == degree.as_u8() {
                pairs.push(PersistencePair {
                    birth: cx.values[c],
                    death: f64::INFINITY,
                    degree: degree.as_u8(),
                });
            }
        }
    }
    Ok(PersistenceDiagram { pairs }.sorted())
}
