//! Transmitter-side interference alignment for the K-user MIMO
//! interference channel.
//!
//! Precoders are designed by minimizing leakage interference (the
//! interference power left in each receiver's least-interfered subspace)
//! with steepest descent in one of three geometries:
//!
//! * flat complex matrix space with Gram-Schmidt re-orthonormalization,
//! * the complex Stiefel manifold with an SVD (polar) retraction,
//! * the complex Grassmann manifold with a QR retraction.
//!
//! Only transmitters iterate; receivers apply zero-forcing filters derived
//! from the final interference covariance.
//!
//! ```
//! use ia_manifold::prelude::*;
//!
//! let cfg = NetworkConfig::symmetric(3, 2, 2, 1, 100.0).unwrap();
//! let channels = sample_channels(&cfg, 7);
//! let init = sample_initial_precoders(&cfg, 8);
//! let run = Optimizer::new(ManifoldKind::Grassmann, StopRule::default())
//!     .optimize(&channels, &cfg, init)
//!     .unwrap();
//! let costs = run.state.costs();
//! assert!(costs.last().unwrap() <= &(1e-6 * costs[0]));
//! ```

pub mod alignment;
pub mod harness;
pub mod manifolds;
pub mod metrics;
pub mod network;
pub mod numerics;
pub mod optimizer;

pub mod prelude {
    pub use crate::alignment::{
        euclidean_gradient, interference_covariance, leakage_cost, receiver_filters, PrecoderSet,
    };
    pub use crate::manifolds::{descent_direction, inner_product, retract, ManifoldKind};
    pub use crate::metrics::{dof_slope, interference_angles, normalized_leakage, sum_rate};
    pub use crate::network::{
        check_feasibility, derive_seed, sample_channels, sample_initial_precoders, ChannelSet,
        NetworkConfig, SeedPurpose,
    };
    pub use crate::numerics::ComplexMatrix;
    pub use crate::optimizer::{Optimizer, StepPolicy, StopReason, StopRule};
}
