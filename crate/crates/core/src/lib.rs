//! Energy-minimising trajectory and TDMA schedule design for a fixed-wing
//! UAV collecting data from sea-surface buoys under constant wind.

pub mod comms;
pub mod cyclical;
pub mod error;
pub mod geometry;
pub mod kinematics;
pub mod scenario;
pub mod sca;
pub mod validator;

pub use comms::{Buoy, ChannelParams, Schedule};
pub use error::{Error, Result};
pub use geometry::Vec2;
pub use kinematics::{Trajectory, UavParams, Wind};
