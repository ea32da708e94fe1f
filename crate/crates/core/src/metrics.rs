//! Post-hoc evaluation of a precoder design: normalized leakage traces,
//! principal angles between interference subspaces, zero-forcing sum rate
//! and the high-SNR degrees-of-freedom slope.

use thiserror::Error;

use crate::alignment::PrecoderSet;
use crate::network::{snr_db_to_power, ChannelSet, NetworkConfig};
use crate::numerics::{gram_schmidt, hermitian_eig, singular_values, ComplexMatrix, LinalgError};

/// Initial costs at or below this make normalization meaningless.
pub const DEGENERATE_START_TOL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("initial cost {0:e} is already zero; nothing to normalize")]
    DegenerateStart(f64),
    #[error("trace is empty")]
    EmptyTrace,
    #[error("need at least two rate points with strictly increasing SNR")]
    BadRateGrid,
    #[error("noise-plus-interference matrix at receiver {receiver} is not positive definite")]
    NumericalFailure { receiver: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `cost[t] / cost[0]` for every entry of a cost trace.
pub fn normalized_leakage(trace: &[f64]) -> Result<Vec<f64>, MetricsError> {
    let &first = trace.first().ok_or(MetricsError::EmptyTrace)?;
    if !(first > DEGENERATE_START_TOL) {
        return Err(MetricsError::DegenerateStart(first));
    }
    Ok(trace.iter().map(|c| c / first).collect())
}

/// Principal angles (radians, ascending) between the column spans of `a`
/// and `b`. Neither input needs orthonormal columns.
///
/// Angles come from the cosines `σ(Qa†Qb)`, except below π/4 where
/// `acos` loses half the digits; there the sines `σ((I − QaQa†)Qb)` are
/// used instead.
pub fn principal_angles(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Vec<f64>, MetricsError> {
    let (a, b) = if a.cols() >= b.cols() { (a, b) } else { (b, a) };
    let qa = gram_schmidt(a)?;
    let qb = gram_schmidt(b)?;
    let overlap = qa.adjoint_mul(&qb);
    let cosines = singular_values(&overlap)?;
    let mut residual = qb.clone();
    residual -= &(&qa * &overlap);
    let mut sines = singular_values(&residual)?;
    sines.reverse();
    Ok(cosines
        .iter()
        .zip(&sines)
        .map(|(&c, &s)| {
            let c = c.clamp(0.0, 1.0);
            if c > std::f64::consts::FRAC_1_SQRT_2 {
                s.clamp(0.0, 1.0).asin()
            } else {
                c.acos()
            }
        })
        .collect())
}

/// Principal angles between the interference subspaces of two interferers
/// seen at one receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct PairAngles {
    pub first: usize,
    pub second: usize,
    pub angles: Vec<f64>,
}

/// Angles between `⌊H[kj₁]V[j₁]⌋` and `⌊H[kj₂]V[j₂]⌋` for every pair of
/// interferers at receiver `k`. Empty when there are fewer than two.
pub fn interference_angles(
    ch: &ChannelSet,
    pre: &PrecoderSet,
    cfg: &NetworkConfig,
    k: usize,
) -> Result<Vec<PairAngles>, MetricsError> {
    let interferers: Vec<usize> = (0..cfg.users()).filter(|&j| j != k).collect();
    let beams: Vec<ComplexMatrix> = interferers.iter().map(|&j| ch.get(k, j) * &pre[j]).collect();
    let mut out = Vec::new();
    for (a, &first) in interferers.iter().enumerate() {
        for (b, &second) in interferers.iter().enumerate().skip(a + 1) {
            out.push(PairAngles {
                first,
                second,
                angles: principal_angles(&beams[a], &beams[b])?,
            });
        }
    }
    Ok(out)
}

/// Largest principal angle over all interferer pairs at receiver `k`.
pub fn max_interference_angle(
    ch: &ChannelSet,
    pre: &PrecoderSet,
    cfg: &NetworkConfig,
    k: usize,
) -> Result<Option<f64>, MetricsError> {
    let pairs = interference_angles(ch, pre, cfg, k)?;
    Ok(pairs
        .iter()
        .flat_map(|p| p.angles.iter().copied())
        .reduce(f64::max))
}

fn log2_det_hpd(a: &ComplexMatrix, receiver: usize) -> Result<f64, MetricsError> {
    let eig = hermitian_eig(a)?;
    if eig.values[0] <= 0.0 {
        return Err(MetricsError::NumericalFailure { receiver });
    }
    Ok(eig.values.iter().map(|l| l.log2()).sum())
}

/// Per-user achievable rates (bits/s/Hz) of zero-forcing receivers that
/// treat residual interference as noise, with every user at linear power
/// `powers[j]`:
///
/// ```text
/// R[k] = log2 det(I + (P[k]/d[k]) (U†(I + Q)U)^{-1} U†H[kk]V[k]V[k]†H[kk]†U)
/// ```
///
/// evaluated as `log2 det(A + S) − log2 det(A)` with `A = U†(I + Q)U`.
pub fn user_rates_at(
    ch: &ChannelSet,
    pre: &PrecoderSet,
    cfg: &NetworkConfig,
    powers: &[f64],
) -> Result<Vec<f64>, MetricsError> {
    let users = cfg.users();
    assert_eq!(powers.len(), users, "one power per user");
    (0..users)
        .map(|k| {
            let n = cfg.rx_antennas(k);
            let mut q = ComplexMatrix::zeros(n, n);
            for j in (0..users).filter(|&j| j != k) {
                let beam = ch.get(k, j) * &pre[j];
                q.axpy(powers[j] / cfg.streams(j) as f64, &beam.mul_adjoint(&beam));
            }
            let d = cfg.streams(k);
            let u = hermitian_eig(&q)?.vectors.columns(0, d);
            let mut noise = u.adjoint_mul(&(&q * &u));
            noise += &ComplexMatrix::identity(d);
            let desired = u.adjoint_mul(&(ch.get(k, k) * &pre[k]));
            let mut total = desired.mul_adjoint(&desired).scale(powers[k] / d as f64);
            total += &noise;
            Ok(log2_det_hpd(&total, k)? - log2_det_hpd(&noise, k)?)
        })
        .collect()
}

/// Per-user rates at the powers stored in `cfg`.
pub fn user_rates(
    ch: &ChannelSet,
    pre: &PrecoderSet,
    cfg: &NetworkConfig,
) -> Result<Vec<f64>, MetricsError> {
    user_rates_at(ch, pre, cfg, cfg.powers())
}

/// Sum rate with every user at `10^(snr_db/10)` and unit noise.
pub fn sum_rate(
    ch: &ChannelSet,
    pre: &PrecoderSet,
    cfg: &NetworkConfig,
    snr_db: f64,
) -> Result<f64, MetricsError> {
    let powers = vec![snr_db_to_power(snr_db); cfg.users()];
    Ok(user_rates_at(ch, pre, cfg, &powers)?.iter().sum())
}

/// Least-squares slope of rate against `log2(SNR)` over the upper half of
/// the grid (at least two points), i.e. bits per 3.01 dB.
pub fn dof_slope(rates: &[(f64, f64)]) -> Result<f64, MetricsError> {
    if rates.len() < 2 || rates.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(MetricsError::BadRateGrid);
    }
    let take = (rates.len() / 2).max(2);
    let tail = &rates[rates.len() - take..];
    let xs: Vec<f64> = tail
        .iter()
        .map(|(snr, _)| snr / 10.0 * std::f64::consts::LOG2_10)
        .collect();
    let n = tail.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = tail.iter().map(|(_, r)| r).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, (_, y)) in xs.iter().zip(tail) {
        sxy += (x - mean_x) * (y - mean_y);
        sxx += (x - mean_x) * (x - mean_x);
    }
    Ok(sxy / sxx)
}

/// Everything reported about one finished design.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub raw_trace: Vec<f64>,
    pub normalized_trace: Vec<f64>,
    /// Per receiver: every principal angle between interferer pairs.
    pub angles: Vec<Vec<f64>>,
    /// `(snr_db, sum rate)` with the precoders held fixed.
    pub rates: Vec<(f64, f64)>,
    /// `None` when the SNR grid has fewer than two points.
    pub dof_estimate: Option<f64>,
}

impl MetricsReport {
    pub fn evaluate(
        ch: &ChannelSet,
        pre: &PrecoderSet,
        cfg: &NetworkConfig,
        costs: &[f64],
        snr_db_grid: &[f64],
    ) -> Result<Self, MetricsError> {
        let normalized_trace = normalized_leakage(costs)?;
        let angles = (0..cfg.users())
            .map(|k| {
                interference_angles(ch, pre, cfg, k)
                    .map(|pairs| pairs.into_iter().flat_map(|p| p.angles).collect())
            })
            .collect::<Result<_, _>>()?;
        let rates = snr_db_grid
            .iter()
            .map(|&snr| sum_rate(ch, pre, cfg, snr).map(|r| (snr, r)))
            .collect::<Result<Vec<_>, _>>()?;
        let dof_estimate = dof_slope(&rates).ok();
        Ok(Self {
            raw_trace: costs.to_vec(),
            normalized_trace,
            angles,
            rates,
            dof_estimate,
        })
    }
}
