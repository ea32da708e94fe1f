//! Descent directions, metrics and retractions for the three search spaces.
//!
//! | kind        | direction `Z` from gradient `D` | metric `⟨Z1, Z2⟩`               | retraction        |
//! |-------------|---------------------------------|---------------------------------|-------------------|
//! | `Euclidean` | `−D`                            | `Re tr(Z2† Z1)`                 | Gram-Schmidt      |
//! | `Stiefel`   | `V D† V − D`                    | `Re tr(Z2† (I − ½VV†) Z1)`      | polar factor `UW†`|
//! | `Grassmann` | `−(I − VV†) D`                  | `Re tr(Z2† Z1)`                 | QR `Q` factor     |
//!
//! A Grassmann point is carried as one orthonormal representative; any
//! comparison between Grassmann points goes through principal angles.
//! Steps are retracted by projection, never along geodesics.

use std::fmt;
use std::str::FromStr;

use crate::numerics::{gram_schmidt, thin_qr, thin_svd, ComplexMatrix, LinalgError, RANK_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ManifoldKind {
    /// Flat `C^{n×p}` with Gram-Schmidt re-orthonormalization.
    Euclidean,
    Stiefel,
    Grassmann,
}

impl ManifoldKind {
    pub const ALL: [ManifoldKind; 3] = [
        ManifoldKind::Euclidean,
        ManifoldKind::Stiefel,
        ManifoldKind::Grassmann,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ManifoldKind::Euclidean => "euclidean",
            ManifoldKind::Stiefel => "stiefel",
            ManifoldKind::Grassmann => "grassmann",
        }
    }
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown algorithm `{0}` (expected euclidean, stiefel or grassmann)")]
pub struct UnknownKind(pub String);

impl FromStr for ManifoldKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euclidean" | "flat" | "complex" => Ok(ManifoldKind::Euclidean),
            "stiefel" => Ok(ManifoldKind::Stiefel),
            "grassmann" => Ok(ManifoldKind::Grassmann),
            other => Err(UnknownKind(other.to_string())),
        }
    }
}

/// A search direction at a precoder, tagged with the geometry it lives in.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentDirection {
    pub z: ComplexMatrix,
    pub kind: ManifoldKind,
}

impl TangentDirection {
    /// Departure from the kind's tangency condition at `v`: `‖V†Z + Z†V‖`
    /// for Stiefel, `‖V†Z‖` for Grassmann, zero for the flat space.
    pub fn tangency_defect(&self, v: &ComplexMatrix) -> f64 {
        match self.kind {
            ManifoldKind::Euclidean => 0.0,
            ManifoldKind::Stiefel => {
                let vz = v.adjoint_mul(&self.z);
                (&vz + &vz.adjoint()).frobenius_norm()
            }
            ManifoldKind::Grassmann => v.adjoint_mul(&self.z).frobenius_norm(),
        }
    }
}

/// Steepest-descent direction at `v` for Euclidean gradient `d`.
pub fn descent_direction(
    kind: ManifoldKind,
    v: &ComplexMatrix,
    d: &ComplexMatrix,
) -> TangentDirection {
    assert_eq!(v.shape(), d.shape(), "gradient shape must match the precoder");
    let z = match kind {
        ManifoldKind::Euclidean => -d,
        ManifoldKind::Stiefel => &(v * &d.adjoint_mul(v)) - d,
        ManifoldKind::Grassmann => &(v * &v.adjoint_mul(d)) - d,
    };
    TangentDirection { z, kind }
}

/// Metric at `v` used by the step-size rule; always a real number.
pub fn inner_product(
    kind: ManifoldKind,
    v: &ComplexMatrix,
    z1: &ComplexMatrix,
    z2: &ComplexMatrix,
) -> f64 {
    match kind {
        ManifoldKind::Euclidean | ManifoldKind::Grassmann => z1.real_inner(z2),
        ManifoldKind::Stiefel => {
            // Re tr(Z2† Z1) − ½ Re tr((V†Z2)† (V†Z1))
            let a1 = v.adjoint_mul(z1);
            let a2 = v.adjoint_mul(z2);
            z1.real_inner(z2) - 0.5 * a1.real_inner(&a2)
        }
    }
}

/// Maps a full-rank `y` back to a matrix with orthonormal columns.
pub fn retract(kind: ManifoldKind, y: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    match kind {
        ManifoldKind::Euclidean => gram_schmidt(y),
        ManifoldKind::Stiefel => {
            let svd = thin_svd(y)?;
            let max = svd.singular_values[0];
            let min = *svd.singular_values.last().expect("non-empty");
            if max == 0.0 || min <= RANK_TOL * max {
                return Err(LinalgError::RankDeficient {
                    ratio: if max == 0.0 { 0.0 } else { min / max },
                });
            }
            Ok(svd.u.mul_adjoint(&svd.v))
        }
        ManifoldKind::Grassmann => thin_qr(y).map(|qr| qr.q),
    }
}

/// Dimension of the search space for `n×p` precoders: `np` for the flat
/// space, `np − p(p+1)/2` for Stiefel and `p(n − p)` for Grassmann.
pub fn manifold_dim(kind: ManifoldKind, n: usize, p: usize) -> usize {
    assert!(p <= n, "need p ≤ n");
    match kind {
        ManifoldKind::Euclidean => n * p,
        ManifoldKind::Stiefel => n * p - p * (p + 1) / 2,
        ManifoldKind::Grassmann => p * (n - p),
    }
}
