//! Vector math, transmitter-array layout, receiver orientation and mobility.

mod array;
mod mobility;
mod orientation;
mod vec3;

pub use array::{angles, build_grid_array, BeamArrayLayout, BeamSite, LinkAngles};
pub use mobility::{random_waypoint_step, MobilityParams, Rect, UeState};
pub use orientation::{elevation_deg, sample_orientation, OrientationModel};
pub use vec3::Vec3;
