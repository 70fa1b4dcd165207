//! Antenna configurations, channel sampling and symbol extension.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{block_diag_repeat, Mat};

/// Antenna counts with users already ordered so that `m1 >= m2 >= m3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct AntennaConfig {
    m: [usize; 3],
    n: usize,
}

impl AntennaConfig {
    /// Builds an ordered configuration. Fails if any count is zero or the
    /// user counts are not non-increasing; use [`validate_and_order`] for
    /// arbitrary input order.
    pub fn new(m1: usize, m2: usize, m3: usize, n: usize) -> Result<Self> {
        if m1 == 0 || m2 == 0 || m3 == 0 || n == 0 {
            return Err(Error::InvalidAntennaCount(m1 as i64, m2 as i64, m3 as i64, n as i64));
        }
        if !(m1 >= m2 && m2 >= m3) {
            return Err(Error::ShapeMismatch(format!(
                "user antennas must satisfy m1 >= m2 >= m3, got ({m1}, {m2}, {m3})"
            )));
        }
        Ok(Self { m: [m1, m2, m3], n })
    }

    pub fn m1(&self) -> usize {
        self.m[0]
    }

    pub fn m2(&self) -> usize {
        self.m[1]
    }

    pub fn m3(&self) -> usize {
        self.m[2]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Antenna count of internal user `j` (0-based).
    pub fn m(&self, j: usize) -> usize {
        self.m[j]
    }

    pub fn users(&self) -> [usize; 3] {
        self.m
    }
}

impl std::fmt::Display for AntennaConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{},{})", self.m[0], self.m[1], self.m[2], self.n)
    }
}

/// Relabeling between the caller's user numbering and the internal ordered
/// numbering. All indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UserPermutation {
    external_to_internal: [usize; 3],
}

impl UserPermutation {
    pub fn identity() -> Self {
        Self {
            external_to_internal: [0, 1, 2],
        }
    }

    pub fn internal(&self, external: usize) -> usize {
        self.external_to_internal[external]
    }

    pub fn external(&self, internal: usize) -> usize {
        self.external_to_internal
            .iter()
            .position(|&i| i == internal)
            .expect("permutation is a bijection")
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// 1-based mapping for display, e.g. `1->3 2->2 3->1`.
    pub fn describe(&self) -> String {
        (0..3)
            .map(|e| format!("{}->{}", e + 1, self.internal(e) + 1))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Validates raw antenna counts and sorts users by descending antenna count.
/// Ties keep input order.
pub fn validate_and_order(m1: i64, m2: i64, m3: i64, n: i64) -> Result<(AntennaConfig, UserPermutation)> {
    if m1 < 1 || m2 < 1 || m3 < 1 || n < 1 {
        return Err(Error::InvalidAntennaCount(m1, m2, m3, n));
    }
    let raw = [m1 as usize, m2 as usize, m3 as usize];
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| raw[b].cmp(&raw[a]));
    let mut external_to_internal = [0usize; 3];
    for (internal, &external) in order.iter().enumerate() {
        external_to_internal[external] = internal;
    }
    let cfg = AntennaConfig::new(raw[order[0]], raw[order[1]], raw[order[2]], n as usize)?;
    Ok((cfg, UserPermutation { external_to_internal }))
}

/// Transmit power per node and per channel use, and receiver noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerConfig {
    p: f64,
    noise_variance: f64,
}

impl PowerConfig {
    pub fn new(p: f64, noise_variance: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidPower(format!("power must be positive, got {p}")));
        }
        if !(noise_variance > 0.0 && noise_variance.is_finite()) {
            return Err(Error::InvalidPower(format!(
                "noise variance must be positive, got {noise_variance}"
            )));
        }
        Ok(Self { p, noise_variance })
    }

    /// Unit noise variance, `P = 10^(snr_db / 10)`.
    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        Self::new(10f64.powf(snr_db / 10.0), 1.0)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }
}

/// Uplink matrices `h[j]` (relay × user j) and downlink matrices `d[j]`
/// (user j × relay), indexed by internal user.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: [Mat; 3],
    pub d: [Mat; 3],
    extension_factor: usize,
}

impl ChannelRealization {
    /// Wraps hand-built matrices. Shapes must match `cfg`.
    pub fn from_matrices(cfg: &AntennaConfig, h: [Mat; 3], d: [Mat; 3]) -> Result<Self> {
        let ch = Self {
            h,
            d,
            extension_factor: 1,
        };
        ch.check_shapes(cfg)?;
        Ok(ch)
    }

    pub fn extension_factor(&self) -> usize {
        self.extension_factor
    }

    pub fn check_shapes(&self, cfg: &AntennaConfig) -> Result<()> {
        let f = self.extension_factor;
        for j in 0..3 {
            let up = (cfg.n() * f, cfg.m(j) * f);
            let down = (cfg.m(j) * f, cfg.n() * f);
            if self.h[j].shape() != up || self.d[j].shape() != down {
                return Err(Error::ShapeMismatch(format!(
                    "user {}: expected uplink {:?} and downlink {:?}, got {:?} and {:?}",
                    j + 1,
                    up,
                    down,
                    self.h[j].shape(),
                    self.d[j].shape()
                )));
            }
        }
        Ok(())
    }

    pub fn is_reciprocal(&self) -> bool {
        (0..3).all(|j| self.d[j] == self.h[j].transpose())
    }
}

/// Generator for trial `stream` of a seeded campaign. Distinct streams of
/// one seed are independent.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat {
    // Row-major fill so the draw order does not depend on storage layout.
    let mut m = Mat::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m[(r, c)] = StandardNormal.sample(rng);
        }
    }
    m
}

/// I.i.d. standard normal channel, deterministic in `seed`.
pub fn sample_channel(cfg: &AntennaConfig, reciprocal: bool, seed: u64) -> ChannelRealization {
    sample_channel_trial(cfg, reciprocal, seed, 0)
}

/// Channel for trial `trial` of a campaign seeded with `seed`.
pub fn sample_channel_trial(cfg: &AntennaConfig, reciprocal: bool, seed: u64, trial: u64) -> ChannelRealization {
    let mut rng = trial_rng(seed, trial);
    let h: [Mat; 3] = std::array::from_fn(|j| gaussian_matrix(cfg.n(), cfg.m(j), &mut rng));
    let d: [Mat; 3] = if reciprocal {
        std::array::from_fn(|j| h[j].transpose())
    } else {
        std::array::from_fn(|j| gaussian_matrix(cfg.m(j), cfg.n(), &mut rng))
    };
    ChannelRealization {
        h,
        d,
        extension_factor: 1,
    }
}

/// Two-slot symbol extension of a constant channel: every matrix becomes
/// `blockdiag(A, A)`.
pub fn extend_channel(ch: &ChannelRealization) -> Result<ChannelRealization> {
    if ch.extension_factor != 1 {
        return Err(Error::AlreadyExtended);
    }
    Ok(ChannelRealization {
        h: std::array::from_fn(|j| block_diag_repeat(&ch.h[j], 2)),
        d: std::array::from_fn(|j| block_diag_repeat(&ch.d[j], 2)),
        extension_factor: 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hstack, max_abs, rank, DEFAULT_TOL};

    #[test]
    fn ordered_input_keeps_identity() {
        let (cfg, perm) = validate_and_order(3, 2, 1, 3).unwrap();
        assert_eq!(cfg, AntennaConfig::new(3, 2, 1, 3).unwrap());
        assert!(perm.is_identity());
    }

    #[test]
    fn reversed_input_is_relabelled() {
        let (cfg, perm) = validate_and_order(1, 2, 3, 4).unwrap();
        assert_eq!(cfg, AntennaConfig::new(3, 2, 1, 4).unwrap());
        assert_eq!(perm.internal(0), 2);
        assert_eq!(perm.internal(1), 1);
        assert_eq!(perm.internal(2), 0);
        assert_eq!(perm.external(0), 2);
    }

    #[test]
    fn ties_keep_input_order() {
        let (cfg, perm) = validate_and_order(2, 2, 2, 3).unwrap();
        assert_eq!(cfg.users(), [2, 2, 2]);
        assert!(perm.is_identity());
        let (_, perm) = validate_and_order(1, 2, 2, 3).unwrap();
        assert_eq!([perm.internal(0), perm.internal(1), perm.internal(2)], [2, 0, 1]);
    }

    #[test]
    fn rejects_non_positive_counts() {
        assert!(matches!(
            validate_and_order(0, 1, 1, 1),
            Err(Error::InvalidAntennaCount(..))
        ));
        assert!(validate_and_order(1, 1, 1, -2).is_err());
        assert!(AntennaConfig::new(1, 2, 1, 1).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = AntennaConfig::new(3, 2, 1, 3).unwrap();
        let a = sample_channel(&cfg, false, 42);
        let b = sample_channel(&cfg, false, 42);
        assert_eq!(a, b);
        assert_ne!(a, sample_channel(&cfg, false, 43));
        assert_ne!(a, sample_channel_trial(&cfg, false, 42, 1));
    }

    #[test]
    fn reciprocal_downlink_is_transpose() {
        let cfg = AntennaConfig::new(3, 2, 1, 3).unwrap();
        let ch = sample_channel(&cfg, true, 5);
        for j in 0..3 {
            assert_eq!(ch.d[j], ch.h[j].transpose());
        }
        assert!(ch.is_reciprocal());
        assert!(!sample_channel(&cfg, false, 5).is_reciprocal());
    }

    #[test]
    fn shapes_follow_config() {
        let cfg = AntennaConfig::new(3, 2, 1, 3).unwrap();
        let ch = sample_channel(&cfg, false, 0);
        assert_eq!(ch.h[0].shape(), (3, 3));
        assert_eq!(ch.h[1].shape(), (3, 2));
        assert_eq!(ch.h[2].shape(), (3, 1));
        assert_eq!(ch.d[1].shape(), (2, 3));
        ch.check_shapes(&cfg).unwrap();
    }

    #[test]
    fn extension_doubles_shapes_and_rank() {
        let cfg = AntennaConfig::new(3, 2, 1, 3).unwrap();
        let ch = sample_channel(&cfg, false, 1);
        let ext = extend_channel(&ch).unwrap();
        assert_eq!(ext.extension_factor(), 2);
        assert_eq!(ext.h[1].shape(), (6, 4));
        ext.check_shapes(&cfg).unwrap();
        for j in 0..3 {
            assert_eq!(rank(&ext.h[j], DEFAULT_TOL), 2 * rank(&ch.h[j], DEFAULT_TOL));
        }
        assert_eq!(extend_channel(&ext), Err(Error::AlreadyExtended));
    }

    #[test]
    fn extension_does_not_mix_slots() {
        let cfg = AntennaConfig::new(2, 2, 1, 3).unwrap();
        let ext = extend_channel(&sample_channel(&cfg, false, 3)).unwrap();
        let slot1_input = Mat::from_column_slice(4, 1, &[0.3, -1.2, 0.0, 0.0]);
        let out = &ext.h[0] * slot1_input;
        assert_eq!(max_abs(&out.rows(3, 3).into_owned()), 0.0);
    }

    #[test]
    fn sampled_channels_are_generic() {
        for (m1, m2, m3, n) in [(3, 2, 1, 3), (2, 2, 2, 3), (4, 3, 2, 5), (5, 2, 2, 3)] {
            let cfg = AntennaConfig::new(m1, m2, m3, n).unwrap();
            for seed in 0..20 {
                let ch = sample_channel(&cfg, false, seed);
                let stacked = hstack(&[&ch.h[1], &ch.h[2]]);
                assert_eq!(rank(&stacked, DEFAULT_TOL), n.min(m2 + m3));
            }
        }
    }

    #[test]
    fn power_config_from_db() {
        let p = PowerConfig::from_snr_db(40.0).unwrap();
        assert!((p.p() - 1e4).abs() < 1e-8);
        assert_eq!(p.noise_variance(), 1.0);
        assert!(PowerConfig::new(0.0, 1.0).is_err());
        assert!(PowerConfig::new(1.0, -1.0).is_err());
    }
}
