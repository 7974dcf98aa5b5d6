//! Interior functions and subcomplex lacunarity for 2D binary masks.
//!
//! The pipeline, bottom to top:
//!
//! * [`mask`] — binary masks, the cubical-complex stand-in for a shape.
//! * [`cubical`] — sublevel-filtered cubical complexes and persistence
//!   diagrams over Z/2, with an independent naive reduction oracle.
//! * [`landscape`] — persistence landscapes, p-norms and sup distances in
//!   exact piecewise-linear arithmetic.
//! * [`interior`] — the interior function `I(v)` (twice the landscape sup
//!   norm of the degree-1 diagram of the distance filtration at `v`),
//!   sampled on grids and integrated with the 2D trapezoidal rule.
//! * [`indices`] — subcomplex lacunarity `omega(K, S)` and the four
//!   necrosis-geometry indices eta, tau, sigma, rho.
//! * [`clustering`] — deterministic k-means, silhouette analysis and
//!   per-patient medians over the primary index diagram.

pub mod clustering;
pub mod cubical;
pub mod indices;
pub mod interior;
pub mod landscape;
pub mod mask;

pub use clustering::{
    kmeans_fit, patient_medians, silhouette_samples, silhouette_scan, ClusterResult, DiagramPoint,
    KMeansConfig, SilhouetteScan,
};
pub use cubical::{
    build_filtered_complex, naive_reduction_oracle, persistence_diagram, Degree,
    FilteredCubicalComplex, FiltrationField, PersistenceDiagram, PersistencePair,
};
pub use indices::{
    compute_record, derive_necrosis, primary_indices, secondary_indices, subcomplex_lacunarity,
    ImageTriple, IndexRecord, PrimaryIndices,
};
pub use interior::{
    distance_filtration, interior_grid, interior_value, pixel_centers, trapezoid_integral,
    EmbeddingBox, EmbeddingSpec, GridSpec, InteriorGrid, InteriorPolicy, Metric,
};
pub use landscape::{EssentialPolicy, Landscape};
pub use mask::{BinaryMask, MaskError};
