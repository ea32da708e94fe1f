//! Leakage interference: the cost being minimized, its Euclidean gradient,
//! and the zero-forcing receive subspaces it induces.
//!
//! At receiver `k` the interference covariance is
//!
//! ```text
//! Q[k] = Σ_{j≠k} (P[j]/d[j]) · H[kj] V[j] V[j]† H[kj]†
//! ```
//!
//! and the leakage is the sum of its `d[k]` smallest eigenvalues (taken in
//! absolute value), i.e. the interference power left in the least-interfered
//! `d[k]`-dimensional subspace. The total cost sums this over receivers.
//!
//! For a simple spectrum (a gap between eigenvalues `d[k]` and `d[k]+1`) the
//! sum of the smallest eigenvalues has derivative `U[k] U[k]†` with respect
//! to `Q[k]`, which yields the gradient
//!
//! ```text
//! D[j] = 2 Σ_{k≠j} (P[j]/d[j]) · H[kj]† U[k] U[k]† H[kj] V[j]
//! ```
//!
//! under the real inner product `Re tr(B† A)`.

use std::ops::Index;

use thiserror::Error;

use crate::network::{ChannelSet, NetworkConfig};
use crate::numerics::{hermitian_eig, ComplexMatrix, EigenDecomposition, LinalgError};

/// Orthonormality tolerance `‖V†V − I‖_F` for precoders.
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Minimum eigen-gap at the receive-subspace boundary before the gradient
/// is flagged as a subgradient.
pub const SPECTRAL_GAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("precoder {user} departs from orthonormal columns by {defect:.3e}")]
pub struct NotOrthonormal {
    pub user: usize,
    pub defect: f64,
}

/// The K precoders, each with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    precoders: Vec<ComplexMatrix>,
}

impl PrecoderSet {
    pub fn new(precoders: Vec<ComplexMatrix>) -> Result<Self, NotOrthonormal> {
        for (user, v) in precoders.iter().enumerate() {
            let defect = v.orthonormality_defect();
            if !(defect <= ORTHONORMAL_TOL) {
                return Err(NotOrthonormal { user, defect });
            }
        }
        Ok(Self { precoders })
    }

    pub fn len(&self) -> usize {
        self.precoders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.precoders.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ComplexMatrix> {
        self.precoders.iter()
    }

    /// Replaces precoder `j`. The caller guarantees orthonormal columns;
    /// every retraction in this crate does.
    pub(crate) fn set(&mut self, j: usize, v: ComplexMatrix) {
        debug_assert!(v.orthonormality_defect() <= 1e-8);
        self.precoders[j] = v;
    }

    /// Largest orthonormality defect across users.
    pub fn max_orthonormality_defect(&self) -> f64 {
        self.precoders
            .iter()
            .map(ComplexMatrix::orthonormality_defect)
            .fold(0.0, f64::max)
    }

    /// Right-multiplies every precoder by the matching matrix in `t`.
    /// Unitary `t` leaves the cost unchanged.
    pub fn rotated(&self, t: &[ComplexMatrix]) -> Result<Self, NotOrthonormal> {
        Self::new(self.precoders.iter().zip(t).map(|(v, t)| v * t).collect())
    }

    pub fn into_inner(self) -> Vec<ComplexMatrix> {
        self.precoders
    }
}

impl Index<usize> for PrecoderSet {
    type Output = ComplexMatrix;

    fn index(&self, j: usize) -> &ComplexMatrix {
        &self.precoders[j]
    }
}

/// Everything a receiver needs from its interference covariance.
#[derive(Debug, Clone)]
pub struct ReceiverAnalysis {
    pub covariance: ComplexMatrix,
    pub eig: EigenDecomposition,
    /// Eigenvectors of the `d[k]` smallest eigenvalues.
    pub filter: ComplexMatrix,
    pub leakage: f64,
}

impl ReceiverAnalysis {
    /// Gap between the largest kept and the smallest rejected eigenvalue,
    /// or `None` when the receive subspace fills the whole space.
    pub fn spectral_gap(&self) -> Option<f64> {
        let d = self.filter.cols();
        self.eig
            .values
            .get(d)
            .map(|&above| above - self.eig.values[d - 1])
    }
}

fn covariance_with<'a>(
    ch: &ChannelSet,
    cfg: &NetworkConfig,
    k: usize,
    precoder: impl Fn(usize) -> &'a ComplexMatrix,
) -> ComplexMatrix {
    let n = cfg.rx_antennas(k);
    let mut q = ComplexMatrix::zeros(n, n);
    for j in (0..cfg.users()).filter(|&j| j != k) {
        let beam = ch.get(k, j) * precoder(j);
        q.axpy(cfg.stream_power(j), &beam.mul_adjoint(&beam));
    }
    q
}

fn analyze_covariance(
    covariance: ComplexMatrix,
    streams: usize,
) -> Result<ReceiverAnalysis, LinalgError> {
    let eig = hermitian_eig(&covariance)?;
    let filter = eig.vectors.columns(0, streams);
    let leakage = eig.values[..streams].iter().map(|l| l.abs()).sum();
    Ok(ReceiverAnalysis {
        covariance,
        eig,
        filter,
        leakage,
    })
}

/// Interference covariance `Q[k]` at receiver `k`.
pub fn interference_covariance(
    ch: &ChannelSet,
    pre: &PrecoderSet,
    cfg: &NetworkConfig,
    k: usize,
) -> ComplexMatrix {
    covariance_with(ch, cfg, k, |j| &pre[j])
}

pub fn analyze_receiver(
    ch: &ChannelSet,
    pre: &PrecoderSet,
    cfg: &NetworkConfig,
    k: usize,
) -> Result<ReceiverAnalysis, LinalgError> {
    analyze_covariance(interference_covariance(ch, pre, cfg, k), cfg.streams(k))
}

pub fn analyze_receivers(
    ch: &ChannelSet,
    pre: &PrecoderSet,
    cfg: &NetworkConfig,
) -> Result<Vec<ReceiverAnalysis>, LinalgError> {
    (0..cfg.users())
        .map(|k| analyze_receiver(ch, pre, cfg, k))
        .collect()
}

/// Total leakage interference `f = Σ_k Σ_{i ≤ d[k]} |λ_i(Q[k])|`.
pub fn leakage_cost(
    ch: &ChannelSet,
    pre: &PrecoderSet,
    cfg: &NetworkConfig,
) -> Result<f64, LinalgError> {
    (0..cfg.users())
        .map(|k| analyze_receiver(ch, pre, cfg, k).map(|a| a.leakage))
        .sum()
}

/// Leakage with precoder `j` swapped for `candidate`, leaving `pre` intact.
pub fn leakage_cost_with(
    ch: &ChannelSet,
    pre: &PrecoderSet,
    cfg: &NetworkConfig,
    j: usize,
    candidate: &ComplexMatrix,
) -> Result<f64, LinalgError> {
    let pick = |i: usize| if i == j { candidate } else { &pre[i] };
    (0..cfg.users())
        .map(|k| {
            analyze_covariance(covariance_with(ch, cfg, k, pick), cfg.streams(k)).map(|a| a.leakage)
        })
        .sum()
}

/// Zero-forcing receive filters `U[k]`, one per receiver.
pub fn receiver_filters(
    ch: &ChannelSet,
    pre: &PrecoderSet,
    cfg: &NetworkConfig,
) -> Result<Vec<ComplexMatrix>, LinalgError> {
    (0..cfg.users())
        .map(|k| analyze_receiver(ch, pre, cfg, k).map(|a| a.filter))
        .collect()
}

/// Euclidean gradient of the cost with respect to one precoder.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub value: ComplexMatrix,
    /// Some receiver had no eigen-gap at its subspace boundary, so `value`
    /// is only a subgradient.
    pub degenerate_spectrum: bool,
}

/// Gradient for transmitter `j` from precomputed receiver analyses.
pub fn gradient_from_analyses(
    ch: &ChannelSet,
    pre: &PrecoderSet,
    cfg: &NetworkConfig,
    analyses: &[ReceiverAnalysis],
    j: usize,
) -> Gradient {
    let v = &pre[j];
    let mut value = ComplexMatrix::zeros(v.rows(), v.cols());
    let mut degenerate_spectrum = false;
    for k in (0..cfg.users()).filter(|&k| k != j) {
        let analysis = &analyses[k];
        if analysis.spectral_gap().is_some_and(|g| g <= SPECTRAL_GAP_TOL) {
            degenerate_spectrum = true;
        }
        let h = ch.get(k, j);
        let u = &analysis.filter;
        let projected = u.adjoint_mul(&(h * v));
        let term = h.adjoint_mul(&(u * &projected));
        value.axpy(2.0 * cfg.stream_power(j), &term);
    }
    Gradient {
        value,
        degenerate_spectrum,
    }
}

pub fn euclidean_gradient(
    ch: &ChannelSet,
    pre: &PrecoderSet,
    cfg: &NetworkConfig,
    j: usize,
) -> Result<Gradient, LinalgError> {
    let analyses = analyze_receivers(ch, pre, cfg)?;
    Ok(gradient_from_analyses(ch, pre, cfg, &analyses, j))
}
