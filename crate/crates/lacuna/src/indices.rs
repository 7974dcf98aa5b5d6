//! Subcomplex lacunarity and the four necrosis-geometry indices.
//!
//! For a complex K and subcomplex S, the lacunarity `omega(K, S)` is the
//! ratio of the integrals of their interior functions (zero when the
//! denominator vanishes). Applied to a core/enhanced/necrosis triple this
//! yields the necrotic lacunarity `eta = omega(K, N)`, the tumour mass
//! lacunarity `tau = omega(K, E)`, the disorder `sigma = tau - eta` and the
//! polarity `rho = (tau + eta) / 2`.

use crate::interior::{interior_grid, trapezoid_integral, EmbeddingSpec, GridSpec, InteriorPolicy};
use crate::mask::{BinaryMask, MaskError};

/// Core, enhanced and necrosis masks of one image.
///
/// Invariants (validated at construction): all three share dimensions,
/// `E ⊆ K`, `N ⊆ K` and `E ∪ N = K` pixel-wise.
#[derive(Debug, Clone)]
pub struct ImageTriple {
    core: BinaryMask,
    enhanced: BinaryMask,
    necrosis: BinaryMask,
}

impl ImageTriple {
    /// Build a triple, deriving the necrosis mask as `K \ E` when absent.
    ///
    /// A user-supplied necrosis mask overrides derivation; it is validated
    /// against the subcomplex invariants but is allowed to overlap the
    /// enhanced mask.
    pub fn new(
        core: BinaryMask,
        enhanced: BinaryMask,
        necrosis: Option<BinaryMask>,
    ) -> Result<Self, MaskError> {
        enhanced.check_subset_of(&core)?;
        let necrosis = match necrosis {
            None => derive_necrosis(&core, &enhanced)?,
            Some(n) => {
                n.check_subset_of(&core)?;
                // E ∪ N = K
                for (col, row) in core.iter_activated() {
                    if !enhanced.get(col, row) && !n.get(col, row) {
                        return Err(MaskError::CoverViolation { col, row });
                    }
                }
                n
            }
        };
        Ok(Self {
            core,
            enhanced,
            necrosis,
        })
    }

    pub fn core(&self) -> &BinaryMask {
        &self.core
    }

    pub fn enhanced(&self) -> &BinaryMask {
        &self.enhanced
    }

    pub fn necrosis(&self) -> &BinaryMask {
        &self.necrosis
    }
}

/// `N = K AND NOT E`; errors if the enhanced mask activates a pixel outside
/// the core (corrupted segmentation), naming the first offender.
pub fn derive_necrosis(core: &BinaryMask, enhanced: &BinaryMask) -> Result<BinaryMask, MaskError> {
    enhanced.check_subset_of(core)?;
    core.difference(enhanced)
}

/// Subcomplex lacunarity `omega(whole, sub)`: ratio of the interior-function
/// integrals of `sub` and `whole` on one grid/embedding configuration.
/// Returns 0 when the denominator is 0 (a warning is logged: such inputs
/// distort downstream statistics).
pub fn subcomplex_lacunarity(
    whole: &BinaryMask,
    sub: &BinaryMask,
    emb: &EmbeddingSpec,
    grid: &GridSpec,
    policy: InteriorPolicy,
) -> Result<f64, MaskError> {
    sub.check_subset_of(whole)?;
    let denominator = trapezoid_integral(&interior_grid(whole, emb, grid, policy));
    if denominator <= 0.0 {
        log::warn!("subcomplex lacunarity: zero denominator integral, returning 0");
        return Ok(0.0);
    }
    let numerator = trapezoid_integral(&interior_grid(sub, emb, grid, policy));
    Ok(numerator / denominator)
}

/// The primary indices of a triple plus the shared denominator integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimaryIndices {
    pub eta: f64,
    pub tau: f64,
    pub integral_core: f64,
    /// True when the core integral vanished and both indices were forced
    /// to 0.
    pub zero_denominator: bool,
}

/// `eta = omega(K, N)`, `tau = omega(K, E)`; the core integral is evaluated
/// once and shared between the two ratios.
pub fn primary_indices(
    triple: &ImageTriple,
    emb: &EmbeddingSpec,
    grid: &GridSpec,
    policy: InteriorPolicy,
) -> PrimaryIndices {
    let integral_core = trapezoid_integral(&interior_grid(triple.core(), emb, grid, policy));
    if integral_core <= 0.0 {
        log::warn!("primary indices: core interior integral is zero; eta = tau = 0");
        return PrimaryIndices {
            eta: 0.0,
            tau: 0.0,
            integral_core,
            zero_denominator: true,
        };
    }
    let integral_necrosis =
        trapezoid_integral(&interior_grid(triple.necrosis(), emb, grid, policy));
    let integral_enhanced =
        trapezoid_integral(&interior_grid(triple.enhanced(), emb, grid, policy));
    PrimaryIndices {
        eta: integral_necrosis / integral_core,
        tau: integral_enhanced / integral_core,
        integral_core,
        zero_denominator: false,
    }
}

/// `sigma = tau - eta`, `rho = (tau + eta) / 2`.
pub fn secondary_indices(eta: f64, tau: f64) -> (f64, f64) {
    (tau - eta, (tau + eta) / 2.0)
}

/// Per-image index record with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexRecord {
    pub patient_id: String,
    pub image_id: String,
    pub eta: f64,
    pub tau: f64,
    pub sigma: f64,
    pub rho: f64,
    pub active_core: usize,
    pub active_enhanced: usize,
    pub active_necrosis: usize,
    pub integral_core: f64,
    pub zero_denominator: bool,
}

/// Compute the full record for one image triple.
pub fn compute_record(
    patient_id: &str,
    image_id: &str,
    triple: &ImageTriple,
    emb: &EmbeddingSpec,
    grid: &GridSpec,
    policy: InteriorPolicy,
) -> IndexRecord {
    let primary = primary_indices(triple, emb, grid, policy);
    let (sigma, rho) = secondary_indices(primary.eta, primary.tau);
    IndexRecord {
        patient_id: patient_id.to_string(),
        image_id: image_id.to_string(),
        eta: primary.eta,
        tau: primary.tau,
        sigma,
        rho,
        active_core: triple.core().activation_count(),
        active_enhanced: triple.enhanced().activation_count(),
        active_necrosis: triple.necrosis().activation_count(),
        integral_core: primary.integral_core,
        zero_denominator: primary.zero_denominator,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::MaskError;

    fn emb() -> EmbeddingSpec {
        EmbeddingSpec::default()
    }

    #[test]
    fn derive_necrosis_examples() {
        let core = BinaryMask::filled(3, 3).unwrap();
        let n = derive_necrosis(&core, &core).unwrap();
        assert_eq!(n.activation_count(), 0);

        let ring = BinaryMask::from_fn(3, 3, |c, r| !(c == 1 && r == 1)).unwrap();
        let n = derive_necrosis(&core, &ring).unwrap();
        assert_eq!(n.activation_count(), 1);
        assert!(n.get(1, 1));

        let empty = BinaryMask::empty(3, 3).unwrap();
        let n = derive_necrosis(&empty, &empty).unwrap();
        assert_eq!(n.activation_count(), 0);
    }

    #[test]
    fn derive_necrosis_rejects_non_subset() {
        let core = BinaryMask::empty(2, 2).unwrap();
        let enhanced = BinaryMask::from_fn(2, 2, |c, r| c == 1 && r == 0).unwrap();
        assert_eq!(
            derive_necrosis(&core, &enhanced),
            Err(MaskError::SubsetViolation { col: 1, row: 0 })
        );
    }

    #[test]
    fn triple_accepts_overlapping_user_necrosis() {
        let core = BinaryMask::filled(2, 2).unwrap();
        let enhanced = BinaryMask::filled(2, 2).unwrap();
        // Overlap allowed: E ∪ N = K still holds.
        let triple = ImageTriple::new(core.clone(), enhanced, Some(core.clone()));
        assert!(triple.is_ok());

        // Cover violation: a core pixel in neither E nor N.
        let e = BinaryMask::from_fn(2, 2, |c, _| c == 0).unwrap();
        let n = BinaryMask::empty(2, 2).unwrap();
        assert!(matches!(
            ImageTriple::new(core, e, Some(n)),
            Err(MaskError::CoverViolation { col: 1, row: 0 })
        ));
    }

    #[test]
    fn omega_self_is_one_and_empty_is_zero() {
        let grid = GridSpec { resolution: 21 };
        let square = BinaryMask::from_fn(9, 9, |c, r| (2..7).contains(&c) && (2..7).contains(&r))
            .unwrap();
        let omega = subcomplex_lacunarity(&square, &square, &emb(), &grid, InteriorPolicy::Drop)
            .unwrap();
        assert_eq!(omega, 1.0);

        let empty = BinaryMask::empty(9, 9).unwrap();
        let omega = subcomplex_lacunarity(&square, &empty, &emb(), &grid, InteriorPolicy::Drop)
            .unwrap();
        assert_eq!(omega, 0.0);
    }

    #[test]
    fn omega_zero_denominator_flag() {
        let empty = BinaryMask::empty(4, 4).unwrap();
        let grid = GridSpec { resolution: 11 };
        let triple = ImageTriple::new(empty.clone(), empty.clone(), None).unwrap();
        let primary = primary_indices(&triple, &emb(), &grid, InteriorPolicy::Drop);
        assert!(primary.zero_denominator);
        assert_eq!(primary.eta, 0.0);
        assert_eq!(primary.tau, 0.0);
        assert_eq!(primary.integral_core, 0.0);
    }

    #[test]
    fn omega_rejects_non_subset() {
        let a = BinaryMask::from_fn(3, 3, |c, _| c == 0).unwrap();
        let b = BinaryMask::from_fn(3, 3, |c, _| c == 2).unwrap();
        assert!(subcomplex_lacunarity(&a, &b, &emb(), &GridSpec { resolution: 5 }, InteriorPolicy::Drop).is_err());
    }

    #[test]
    fn secondary_index_examples() {
        assert_eq!(secondary_indices(0.0, 0.0), (0.0, 0.0));
        assert_eq!(secondary_indices(0.2, 0.6), (0.4, 0.4));
        assert_eq!(secondary_indices(1.0, 0.0), (-1.0, 0.5));
    }

    #[test]
    fn secondary_round_trip() {
        for &(eta, tau) in &[(0.0, 0.0), (0.3, 0.8), (0.9, 0.1), (0.25, 0.25)] {
            let (sigma, rho) = secondary_indices(eta, tau);
            assert!((rho + sigma / 2.0 - tau).abs() < 1e-15);
            assert!((rho - sigma / 2.0 - eta).abs() < 1e-15);
        }
    }

    /// The 15x15-square / centered 5x5-block pair: continuum scaling gives
    /// eta ~ (1/3)^3 = 1/27.
    #[test]
    fn square_block_lacunarity_value() {
        let core = BinaryMask::filled(15, 15).unwrap();
        let block = |c: usize, r: usize| (5..10).contains(&c) && (5..10).contains(&r);
        let necrosis = BinaryMask::from_fn(15, 15, block).unwrap();
        let enhanced = BinaryMask::from_fn(15, 15, |c, r| !block(c, r)).unwrap();
        let triple = ImageTriple::new(core, enhanced, Some(necrosis)).unwrap();

        let grid = GridSpec { resolution: 100 };
        let primary = primary_indices(&triple, &emb(), &grid, InteriorPolicy::Drop);
        let (sigma, rho) = secondary_indices(primary.eta, primary.tau);
        assert!(
            (primary.eta - 1.0 / 27.0).abs() < 0.015,
            "eta = {}",
            primary.eta
        );
        // E is an annulus: its own interior drops the essential cycle, so
        // tau stays well below 1.
        assert!(primary.tau > 0.0 && primary.tau < 0.9, "tau = {}", primary.tau);
        assert_eq!(sigma, primary.tau - primary.eta);
        assert_eq!(rho, (primary.tau + primary.eta) / 2.0);
    }

    #[test]
    fn record_algebra_is_bit_exact() {
        let core = BinaryMask::from_fn(8, 8, |c, r| c.abs_diff(4) + r.abs_diff(4) < 4).unwrap();
        let enhanced =
            BinaryMask::from_fn(8, 8, |c, r| core.get(c, r) && (c + r) % 2 == 0).unwrap();
        let triple = ImageTriple::new(core, enhanced, None).unwrap();
        let rec = compute_record(
            "p1",
            "img1",
            &triple,
            &emb(),
            &GridSpec { resolution: 15 },
            InteriorPolicy::Drop,
        );
        assert_eq!(rec.sigma.to_bits(), (rec.tau - rec.eta).to_bits());
        assert_eq!(rec.rho.to_bits(), ((rec.tau + rec.eta) / 2.0).to_bits());
        assert!(rec.eta >= 0.0 && rec.tau >= 0.0);
        assert_eq!(
            rec.active_necrosis,
            rec.active_core - rec.active_enhanced
        );
    }
}
