//! Reconstruction of the prior state of a language system from basic-list
//! coincidence coefficients.
//!
//! The pipeline converts coefficients to swadesh distances
//! ([`lexstat`]), builds a dendrogram of isolect chains and divergence lines
//! ([`retro`], [`dendrogram`]), refits its lengths to the data, and maps
//! distances to time under several decay laws ([`decay`]). A forward
//! simulator ([`simulate`]) generates cognacy data on a known tree for
//! checking the reconstruction.

pub mod decay;
pub mod dendrogram;
pub mod error;
pub mod formats;
pub mod lexstat;
mod lsq;
pub mod retro;
pub mod simulate;
pub mod svg;

pub use dendrogram::{
    fit_report, theoretical_matrix, ChainNode, Dendrogram, Edge, FitReport, Leaf, NodeRef, PairFit,
    Root, RootGeometry, RootLink, RootVariant, Side,
};
pub use error::{Error, Result};
pub use lexstat::{
    adjust_coincidence_for_borrowings, coincidence_from_cognacy, coincidence_from_distance,
    distance_from_coincidence, distance_matrix, BorrowingAdjustment, CognacyRow, CognacyTable,
    Coincidence, CoincidenceMatrix, DistanceMatrix, SwadeshDistance,
};
pub use retro::{
    build_dendrogram, case_one, case_two, redistribute_residuals, root_variants, CaseTwo, JoinStep,
    Reconstruction, TwoLanguageFamily,
};
