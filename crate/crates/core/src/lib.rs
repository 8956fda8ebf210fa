//! Self-similar solutions of the binormal flow, their Hasimoto profiles and
//! the associated scattering data.

pub mod curve;
pub mod error;
pub mod fit;
pub mod geom3;
pub mod nls;
pub mod ode;
pub mod selfsimilar;

pub use error::{Error, Result};
pub use geom3::{AntisymParam, Mat3, Rotation3, Vec3};
pub mod families;
pub mod scattering;
