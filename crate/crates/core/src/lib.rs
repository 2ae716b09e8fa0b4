//! Embedded and conforming discrete fracture models for steady single-phase
//! flow in 2D fractured porous media.
//!
//! Every discrete operator is a list of two-point [`fv::Connection`]s (plus
//! optional multi-point [`fv::FluxStencil`]s) assembled by [`fv::assemble`].

pub mod analytic1d;
pub mod dfm;
pub mod error;
pub mod fv;
pub mod geometry;
pub mod grid;
pub mod ledfm;
pub mod mesh;
pub mod model;
pub mod msfv;
pub mod projection;
pub mod sparse;
pub mod transport;
pub mod vtk;

pub use error::{Error, Result};
pub use geometry::Point;
pub use grid::{CoarseGrid, CutCell, FractureSegment};
pub use model::{DomainBoundary, EmbeddedModel, Method, ModelOptions, PedfmVariant, SideCondition};
