//! Incremental SPD linear algebra and ellipsoid geometry.

mod ellipsoid;
mod spd;

pub use ellipsoid::{
    project_ball, project_intersection, ArmGeometry, ConstraintSet, Ellipsoid, PROJECTION_MAX_ITER,
};
pub use spd::{SpdMatrix, REFACTOR_PERIOD};
