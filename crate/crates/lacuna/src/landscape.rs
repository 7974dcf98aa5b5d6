//! Persistence landscapes, their norms and distances.
//!
//! The landscape of a diagram is the sequence of piecewise-linear functions
//! `lambda_k(t)` = k-th largest value of `min(t - b_i, d_i - t)_+` over the
//! diagram's intervals. Levels are stored as breakpoint lists; every
//! computation here is exact piecewise-linear arithmetic, there is no grid
//! sampling anywhere.

use crate::cubical::PersistenceDiagram;

/// How to treat essential (infinite-death) intervals before building a
/// landscape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EssentialPolicy {
    /// Remove essential intervals.
    Drop,
    /// Replace an essential interval `(b, inf)` by `(b, cap)`; intervals
    /// emptied by the cap (cap <= b) are dropped.
    Cap(f64),
}

/// A persistence landscape: levels `lambda_1 >= lambda_2 >= ...`, each a
/// piecewise-linear function given by breakpoints and zero outside them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Landscape {
    levels: Vec<Vec<(f64, f64)>>,
}

impl Landscape {
    /// Build the landscape of a diagram under an essential-interval policy.
    pub fn from_diagram(diagram: &PersistenceDiagram, policy: EssentialPolicy) -> Self {
        let mut intervals: Vec<(f64, f64)> = Vec::with_capacity(diagram.pairs.len());
        for pair in &diagram.pairs {
            let (b, d) = if pair.is_essential() {
                match policy {
                    EssentialPolicy::Drop => continue,
                    EssentialPolicy::Cap(cap) => (pair.birth, cap),
                }
            } else {
                (pair.birth, pair.death)
            };
            if b < d {
                intervals.push((b, d));
            }
        }
        Self::from_intervals(intervals)
    }

    /// Build from finite intervals (b < d each).
    pub fn from_intervals(mut intervals: Vec<(f64, f64)>) -> Self {
        // Sort by birth ascending, death descending.
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        let mut pool = intervals;
        let mut levels = Vec::new();

        while !pool.is_empty() {
            let (b0, mut d) = pool.remove(0);
            let mut level: Vec<(f64, f64)> = vec![(b0, 0.0), ((b0 + d) / 2.0, (d - b0) / 2.0)];
            let mut scan = 0usize;
            loop {
                // First remaining interval (in order) whose death exceeds d.
                let hit = pool[scan..].iter().position(|&(_, dn)| dn > d);
                let Some(off) = hit else {
                    level.push((d, 0.0));
                    break;
                };
                let idx = scan + off;
                let (bn, dn) = pool.remove(idx);
                scan = idx;
                if bn >= d {
                    // Disjoint (or touching) mountain to the right.
                    level.push((d, 0.0));
                    if bn > d {
                        level.push((bn, 0.0));
                    }
                } else {
                    // Overlap: valley where the new tent crosses the old
                    // down-slope; the overlap (bn, d) shadows lower levels.
                    level.push(((bn + d) / 2.0, (d - bn) / 2.0));
                    let shadow = (bn, d);
                    let at = pool
                        .partition_point(|&(pb, pd)| pb < shadow.0 || (pb == shadow.0 && pd > shadow.1));
                    pool.insert(at, shadow);
                }
                level.push(((bn + dn) / 2.0, (dn - bn) / 2.0));
                d = dn;
            }
            debug_assert!(level.windows(2).all(|w| w[0].0 < w[1].0));
            levels.push(level);
        }
        Self { levels }
    }

    /// Number of stored (nonzero) levels.
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Breakpoints of level `k` (1-based); empty slice beyond stored levels.
    pub fn level(&self, k: usize) -> &[(f64, f64)] {
        if k == 0 || k > self.levels.len() {
            &[]
        } else {
            &self.levels[k - 1]
        }
    }

    /// Evaluate level `k` (1-based) at `t` by linear interpolation; zero
    /// outside the support or beyond the stored levels.
    pub fn evaluate(&self, k: usize, t: f64) -> f64 {
        let bp = self.level(k);
        if bp.is_empty() || t <= bp[0].0 || t >= bp[bp.len() - 1].0 {
            // Endpoints carry value 0 by construction.
            return if bp.is_empty() { 0.0 } else { interp_at_edge(bp, t) };
        }
        let i = bp.partition_point(|&(x, _)| x <= t);
        let (x0, v0) = bp[i - 1];
        let (x1, v1) = bp[i];
        v0 + (v1 - v0) * (t - x0) / (x1 - x0)
    }

    /// The p-norm: sum over levels of the level's L^p norm for finite p,
    /// supremum over all levels for p = infinity.
    pub fn norm(&self, p: f64) -> f64 {
        assert!(p >= 1.0, "p-norm requires p >= 1, got {p}");
        if p.is_infinite() {
            return self
                .levels
                .iter()
                .flat_map(|lv| lv.iter().map(|&(_, v)| v))
                .fold(0.0, f64::max);
        }
        self.levels
            .iter()
            .map(|lv| level_lp_integral(lv, p).powf(1.0 / p))
            .sum()
    }

    /// `sup_k sup_t |self_k(t) - other_k(t)|`, exact over the union of
    /// breakpoints (the sup of a piecewise-linear difference is attained at
    /// a breakpoint).
    pub fn sup_distance(&self, other: &Self) -> f64 {
        let levels = self.levels.len().max(other.levels.len());
        let mut best = 0.0f64;
        for k in 1..=levels {
            let a = self.level(k);
            let b = other.level(k);
            for &(t, _) in a.iter().chain(b.iter()) {
                let d = (self.evaluate(k, t) - other.evaluate(k, t)).abs();
                if d > best {
                    best = d;
                }
            }
        }
        best
    }
}

fn interp_at_edge(bp: &[(f64, f64)], t: f64) -> f64 {
    if t < bp[0].0 || t > bp[bp.len() - 1].0 {
        0.0
    } else if t == bp[0].0 {
        bp[0].1
    } else {
        bp[bp.len() - 1].1
    }
}

/// Exact integral of |f|^p over one level's support, in closed form per
/// linear segment. For a segment from v0 to v1 over width w the integral is
/// `w * (v1^{p+1} - v0^{p+1}) / ((p+1)(v1 - v0))`.
fn level_lp_integral(bp: &[(f64, f64)], p: f64) -> f64 {
    let mut total = 0.0;
    for pair in bp.windows(2) {
        let (x0, v0) = pair[0];
        let (x1, v1) = pair[1];
        let w = x1 - x0;
        if w <= 0.0 {
            continue;
        }
        total += if v0 == v1 {
            w * v0.powf(p)
        } else {
            w * (v1.powf(p + 1.0) - v0.powf(p + 1.0)) / ((p + 1.0) * (v1 - v0))
        };
    }
    total
}
