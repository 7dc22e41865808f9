//! Manifold analysis from local covariance matrices.
//!
//! Point clouds come in through [`pointcloud`]; everything local (tangent
//! frames, barycentric weights, deformation-corrected distances) is built on
//! the eigenstructure of neighborhood covariances from [`covariance`].

pub mod covariance;
pub mod eig;
pub mod error;
pub mod geodesic;
pub mod linalg;
pub mod lle;
pub mod manifolds;
pub mod pointcloud;
pub mod rng;

pub use error::{Error, Result};
pub use pointcloud::PointCloud;
