//! Invariants of representations into `SO(n-1,n) ⋉ R^{2n-1}` and `SO(n,n)`.
//!
//! The crate is organised bottom up:
//!
//! * [`qspace`]: quadratic spaces, subspaces, complements, dual bases, exponentials.
//! * [`groups`]: isometries, affine isometries, free group representations, deformation families.
//! * [`dynamics`]: ordered Schur decompositions and the proximal data of hyperbolic elements.
//! * [`invariants`]: neutral vectors, Margulis invariants, the cross-ratios `β` and `θ`.
//! * [`asymptotics`]: derivative and limit formula checks.
//! * [`diagnostics`]: word spectra and example builders.

pub mod asymptotics;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod expm;
pub mod groups;
pub mod invariants;
pub mod linalg;
pub mod qspace;

pub use error::{Error, Result};

pub type Matrix = nalgebra::DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;

pub use asymptotics::{ConvergenceReport, DerivReport, OrbitRates, Verdict};
pub use diagnostics::{SpectrumKind, SpectrumReport, SpectrumVerdict, WordRecord};
pub use dynamics::{EigenData, MarginRecord, ProximalData};
pub use groups::{
    AffineIsometry, AffineRep, DeformationFamily, FreeRep, GroupElement, Isometry, LinearRep, Word,
};
pub use invariants::{AffineNullPlane, LabeledPair, NullPlane};
pub use qspace::{ModelData, QSpace, Subspace};
