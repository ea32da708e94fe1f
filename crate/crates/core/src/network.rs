//! Problem instances: the K-user MIMO interference network, its
//! feasibility condition, and seeded random channels and starting points.
//!
//! Users are indexed from 0. Noise variance is fixed at 1, so transmit
//! powers double as linear SNRs.
//!
//! # Random streams
//!
//! All randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded
//! with `seed_from_u64`, with a distinct ChaCha stream id per purpose, and
//! Gaussian variates from `rand_distr::StandardNormal` (ziggurat). Harness
//! seeds are derived with [`derive_seed`] from a master seed, a purpose tag
//! and a realization index, so adding realizations never perturbs earlier
//! ones.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::alignment::PrecoderSet;
use crate::numerics::{gram_schmidt, ComplexMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("need at least two users, got {0}")]
    TooFewUsers(usize),
    #[error("per-user list `{field}` has {found} entries for {users} users")]
    LengthMismatch {
        field: &'static str,
        users: usize,
        found: usize,
    },
    #[error("user {user}: stream count {streams} must lie in 1..=min(M={tx}, N={rx})")]
    Streams {
        user: usize,
        streams: usize,
        tx: usize,
        rx: usize,
    },
    #[error("user {user}: transmit power must be positive and finite, got {power}")]
    Power { user: usize, power: f64 },
}

/// Network dimensions and powers for K transmitter/receiver pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    tx_antennas: Vec<usize>,
    rx_antennas: Vec<usize>,
    streams: Vec<usize>,
    powers: Vec<f64>,
}

/// Converts an SNR in dB to linear transmit power (unit noise).
pub fn snr_db_to_power(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

impl NetworkConfig {
    pub fn new(
        tx_antennas: Vec<usize>,
        rx_antennas: Vec<usize>,
        streams: Vec<usize>,
        powers: Vec<f64>,
    ) -> Result<Self, ConfigError> {
        let users = tx_antennas.len();
        if users < 2 {
            return Err(ConfigError::TooFewUsers(users));
        }
        for (field, found) in [
            ("rx_antennas", rx_antennas.len()),
            ("streams", streams.len()),
            ("powers", powers.len()),
        ] {
            if found != users {
                return Err(ConfigError::LengthMismatch {
                    field,
                    users,
                    found,
                });
            }
        }
        for user in 0..users {
            let (tx, rx, d) = (tx_antennas[user], rx_antennas[user], streams[user]);
            if d == 0 || d > tx.min(rx) {
                return Err(ConfigError::Streams {
                    user,
                    streams: d,
                    tx,
                    rx,
                });
            }
            let power = powers[user];
            if !(power > 0.0 && power.is_finite()) {
                return Err(ConfigError::Power { user, power });
            }
        }
        Ok(Self {
            tx_antennas,
            rx_antennas,
            streams,
            powers,
        })
    }

    /// Every user with `m` transmit antennas, `n` receive antennas, `d`
    /// streams and the same linear power.
    pub fn symmetric(
        users: usize,
        m: usize,
        n: usize,
        d: usize,
        power: f64,
    ) -> Result<Self, ConfigError> {
        Self::new(
            vec![m; users],
            vec![n; users],
            vec![d; users],
            vec![power; users],
        )
    }

    /// Bypasses validation; used to probe degenerate grids in tests.
    #[cfg(test)]
    pub(crate) fn unchecked(
        tx_antennas: Vec<usize>,
        rx_antennas: Vec<usize>,
        streams: Vec<usize>,
        powers: Vec<f64>,
    ) -> Self {
        Self {
            tx_antennas,
            rx_antennas,
            streams,
            powers,
        }
    }

    pub fn users(&self) -> usize {
        self.tx_antennas.len()
    }

    pub fn tx_antennas(&self, j: usize) -> usize {
        self.tx_antennas[j]
    }

    pub fn rx_antennas(&self, k: usize) -> usize {
        self.rx_antennas[k]
    }

    pub fn streams(&self, k: usize) -> usize {
        self.streams[k]
    }

    pub fn power(&self, j: usize) -> f64 {
        self.powers[j]
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    /// Per-stream power `P^[j] / d^[j]`.
    pub fn stream_power(&self, j: usize) -> f64 {
        self.powers[j] / self.streams[j] as f64
    }

    /// Same dimensions with every power set to `power`.
    pub fn with_power(&self, power: f64) -> Result<Self, ConfigError> {
        Self::new(
            self.tx_antennas.clone(),
            self.rx_antennas.clone(),
            self.streams.clone(),
            vec![power; self.users()],
        )
    }

    /// Same dimensions with every power set to `10^(snr_db/10)`.
    pub fn with_snr_db(&self, snr_db: f64) -> Result<Self, ConfigError> {
        self.with_power(snr_db_to_power(snr_db))
    }

    /// Same dimensions with every power multiplied by `factor`.
    pub fn scaled_powers(&self, factor: f64) -> Result<Self, ConfigError> {
        Self::new(
            self.tx_antennas.clone(),
            self.rx_antennas.clone(),
            self.streams.clone(),
            self.powers.iter().map(|p| p * factor).collect(),
        )
    }
}

/// Outcome of the alignment feasibility test `M + N ≥ (K + 1) d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feasibility {
    pub per_user: Vec<bool>,
    pub all: bool,
}

/// Feasibility of alignment without symbol extension. Advisory only: the
/// optimizer runs on infeasible instances too, it just won't reach zero.
pub fn check_feasibility(cfg: &NetworkConfig) -> Feasibility {
    let k = cfg.users();
    let per_user: Vec<bool> = (0..k)
        .map(|j| cfg.tx_antennas(j) + cfg.rx_antennas(j) >= (k + 1) * cfg.streams(j))
        .collect();
    let all = per_user.iter().all(|&f| f);
    Feasibility { per_user, all }
}

/// The K×K grid of channel matrices; block `(k, j)` is the N^[k]×M^[j]
/// channel from transmitter `j` to receiver `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    users: usize,
    blocks: Vec<ComplexMatrix>,
    seed: u64,
}

impl ChannelSet {
    /// Builds a channel set from row-major blocks (`blocks[k * K + j]`),
    /// checking every block against `cfg`.
    pub fn from_blocks(
        cfg: &NetworkConfig,
        blocks: Vec<ComplexMatrix>,
        seed: u64,
    ) -> Result<Self, ChannelShapeError> {
        let users = cfg.users();
        if blocks.len() != users * users {
            return Err(ChannelShapeError::Count {
                expected: users * users,
                found: blocks.len(),
            });
        }
        for k in 0..users {
            for j in 0..users {
                let want = (cfg.rx_antennas(k), cfg.tx_antennas(j));
                let got = blocks[k * users + j].shape();
                if got != want {
                    return Err(ChannelShapeError::Block {
                        rx: k,
                        tx: j,
                        expected: want,
                        found: got,
                    });
                }
            }
        }
        Ok(Self {
            users,
            blocks,
            seed,
        })
    }

    /// Channel from transmitter `j` to receiver `k`.
    pub fn get(&self, k: usize, j: usize) -> &ComplexMatrix {
        &self.blocks[k * self.users + j]
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelShapeError {
    #[error("expected {expected} channel blocks, found {found}")]
    Count { expected: usize, found: usize },
    #[error("channel ({rx},{tx}) should be {expected:?}, found {found:?}")]
    Block {
        rx: usize,
        tx: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
}

/// What a derived seed is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeedPurpose {
    Channels,
    InitialPrecoders,
}

impl SeedPurpose {
    fn tag(self) -> u64 {
        match self {
            SeedPurpose::Channels => 0x6368_616e_6e65_6c73,
            SeedPurpose::InitialPrecoders => 0x7072_6563_6f64_6572,
        }
    }

    fn stream(self) -> u64 {
        match self {
            SeedPurpose::Channels => 1,
            SeedPurpose::InitialPrecoders => 2,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed for realization `index` of the given purpose under `master`.
pub fn derive_seed(master: u64, purpose: SeedPurpose, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ purpose.tag()) ^ splitmix64(index.wrapping_add(1)))
}

fn rng_for(seed: u64, purpose: SeedPurpose) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(purpose.stream());
    rng
}

/// One circularly-symmetric complex Gaussian with unit variance.
fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// I.i.d. CN(0, 1) channel entries, deterministic in `(cfg dims, seed)`.
pub fn sample_channels(cfg: &NetworkConfig, seed: u64) -> ChannelSet {
    let mut rng = rng_for(seed, SeedPurpose::Channels);
    let users = cfg.users();
    let mut blocks = Vec::with_capacity(users * users);
    for k in 0..users {
        for j in 0..users {
            blocks.push(gaussian_matrix(&mut rng, cfg.rx_antennas(k), cfg.tx_antennas(j)));
        }
    }
    ChannelSet {
        users,
        blocks,
        seed,
    }
}

/// Haar-distributed starting precoders: Gram-Schmidt of Gaussian matrices.
pub fn sample_initial_precoders(cfg: &NetworkConfig, seed: u64) -> PrecoderSet {
    let mut rng = rng_for(seed, SeedPurpose::InitialPrecoders);
    let precoders = (0..cfg.users())
        .map(|j| loop {
            let g = gaussian_matrix(&mut rng, cfg.tx_antennas(j), cfg.streams(j));
            // A Gaussian draw is rank deficient with probability zero;
            // redraw rather than fail if it ever happens numerically.
            if let Ok(v) = gram_schmidt(&g) {
                break v;
            }
        })
        .collect();
    PrecoderSet::new(precoders).expect("Gram-Schmidt output is orthonormal")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasibility_examples() {
        let three = NetworkConfig::symmetric(3, 2, 2, 1, 1.0).unwrap();
        assert!(check_feasibility(&three).all);

        let four = NetworkConfig::symmetric(4, 2, 2, 1, 1.0).unwrap();
        let f = check_feasibility(&four);
        assert!(!f.all);
        assert_eq!(f.per_user, vec![false; 4]);

        let boundary = NetworkConfig::symmetric(4, 5, 5, 2, 1.0).unwrap();
        assert!(check_feasibility(&boundary).all);
    }

    #[test]
    fn config_validation() {
        assert_eq!(
            NetworkConfig::symmetric(1, 2, 2, 1, 1.0),
            Err(ConfigError::TooFewUsers(1))
        );
        assert!(matches!(
            NetworkConfig::symmetric(3, 2, 2, 3, 1.0),
            Err(ConfigError::Streams { .. })
        ));
        assert!(matches!(
            NetworkConfig::symmetric(3, 2, 2, 0, 1.0),
            Err(ConfigError::Streams { .. })
        ));
        assert!(matches!(
            NetworkConfig::symmetric(3, 2, 2, 1, 0.0),
            Err(ConfigError::Power { .. })
        ));
        assert!(matches!(
            NetworkConfig::new(vec![2, 2], vec![2], vec![1, 1], vec![1.0, 1.0]),
            Err(ConfigError::LengthMismatch { field: "rx_antennas", .. })
        ));
    }

    #[test]
    fn snr_maps_to_linear_power() {
        let cfg = NetworkConfig::symmetric(3, 2, 2, 1, 1.0).unwrap();
        let at20 = cfg.with_snr_db(20.0).unwrap();
        assert!(at20.powers().iter().all(|&p| (p - 100.0).abs() < 1e-9));
        assert_eq!(cfg.with_snr_db(0.0).unwrap().power(1), 1.0);
    }

    #[test]
    fn channels_are_deterministic_and_shaped() {
        let cfg = NetworkConfig::new(vec![2, 3, 4], vec![2, 2, 3], vec![1, 1, 1], vec![1.0; 3]).unwrap();
        let a = sample_channels(&cfg, 42);
        let b = sample_channels(&cfg, 42);
        assert_eq!(a, b);
        for k in 0..3 {
            for j in 0..3 {
                assert_eq!(a.get(k, j).shape(), (cfg.rx_antennas(k), cfg.tx_antennas(j)));
            }
        }
        assert_ne!(sample_channels(&cfg, 43), a);
    }

    #[test]
    fn channel_second_moment() {
        let cfg = NetworkConfig::symmetric(10, 10, 10, 1, 1.0).unwrap();
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut seed = 0;
        while count < 100_000 {
            let ch = sample_channels(&cfg, seed);
            for k in 0..10 {
                for j in 0..10 {
                    for z in ch.get(k, j).as_slice() {
                        sum += z.norm_sqr();
                        count += 1;
                    }
                }
            }
            seed += 1;
        }
        let mean = sum / count as f64;
        assert!((0.98..=1.02).contains(&mean), "E|h|^2 = {mean}");
    }

    #[test]
    fn initial_precoders_orthonormal_and_deterministic() {
        let cfg = NetworkConfig::new(vec![2, 4, 3], vec![2, 4, 3], vec![1, 2, 3], vec![1.0; 3]).unwrap();
        let a = sample_initial_precoders(&cfg, 7);
        assert_eq!(a, sample_initial_precoders(&cfg, 7));
        for v in a.iter() {
            assert!(v.orthonormality_defect() < 1e-10);
        }
    }

    #[test]
    fn square_initial_precoder_is_unitary() {
        let cfg = NetworkConfig::symmetric(2, 2, 2, 2, 1.0).unwrap();
        let v = &sample_initial_precoders(&cfg, 3)[0];
        // |det| of a 2x2 by cofactor expansion.
        let det = v[(0, 0)] * v[(1, 1)] - v[(0, 1)] * v[(1, 0)];
        assert!((det.norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn derived_seeds_separate_purposes_and_indices() {
        let a = derive_seed(1, SeedPurpose::Channels, 0);
        assert_ne!(a, derive_seed(1, SeedPurpose::InitialPrecoders, 0));
        assert_ne!(a, derive_seed(1, SeedPurpose::Channels, 1));
        assert_ne!(a, derive_seed(2, SeedPurpose::Channels, 0));
        assert_eq!(a, derive_seed(1, SeedPurpose::Channels, 0));
    }
}
