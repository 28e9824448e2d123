//! Dyadic cubes, dyadic figures and the functions that live on them.

pub mod cube;
pub mod field;
pub mod figure;
pub mod geometry;
pub mod haar;
pub mod increment;

pub use cube::CubeIndex;
pub use field::{CellField, VertexField};
pub use figure::DyadicFigure;
pub use geometry::{figure_geometry, FigureGeometry};
pub use haar::{faber_eval_1d, haar_eval, HaarIndex, Pattern};
pub use increment::{cube_increments, rect_increment, rect_increment_at, vitali_variation_dyadic};
