//! Numerical laboratory for harmonic spheres in Kähler targets.
//!
//! The crate evaluates holomorphic/anti-holomorphic energy densities and
//! curvature densities of explicit maps from the round 2-sphere, integrates
//! them with a two-chart stereographic quadrature, checks the associated
//! Gauss–Bonnet and Cauchy–Schwarz type bounds, and extracts bubble trees
//! from concentrating families of rational maps.
//!
//! Module map:
//!
//! * [`geometry`]: charts on the domain sphere, domain metrics, Kähler targets
//!   (curve targets and Fubini–Study spaces) with their connections and
//!   curvature tensors.
//! * [`maps`]: jets, rational maps, projective curves, Möbius pullbacks,
//!   ramification analysis and map families.
//! * [`densities`]: pointwise energy/curvature densities and the Bochner
//!   residuals on finite-difference grids.
//! * [`integration`]: quadrature over the sphere and over small disks,
//!   global totals, the ramification bound and energy lower bounds.
//! * [`potential`]: logarithmic potentials and the L^p estimates built on them.
//! * [`bubbletree`]: bubble point detection, renormalisation, partitioning and
//!   the energy/curvature identities.

pub mod bubbletree;
pub mod densities;
pub mod geometry;
pub mod integration;
pub mod maps;
pub mod poly;
pub mod potential;
pub mod quadrature;

pub use num_complex::Complex64 as C64;

/// Errors surfaced by the numerical routines.
#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum Error {
    #[error("point is the other chart's infinity")]
    ChartInfinity,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("root finding did not converge (max residual {residual:e} after {iterations} iterations)")]
    RootFinding { residual: f64, iterations: usize },
    #[error("non-finite sample at {chart:?} ({re}, {im})")]
    NonFinite {
        chart: geometry::Chart,
        re: f64,
        im: f64,
    },
    #[error("mass out of admissible range: {0}")]
    MassOutOfRange(String),
    #[error("potential is +∞ at an atom")]
    AtAtom,
    #[error("no concentration at this scale: annulus energy {available} < {required}")]
    NoConcentration { available: f64, required: f64 },
    #[error("scales not separated; increase n (n·λ = {bubble_radius:e} ≥ ε = {neck_radius:e})")]
    ScalesNotSeparated {
        bubble_radius: f64,
        neck_radius: f64,
    },
    #[error("zero disk energy")]
    ZeroEnergy,
    #[error("boundary loop does not fit in a normal ball (radius {radius}, allowed {allowed})")]
    BallTooLarge { radius: f64, allowed: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
