//! Signal-space alignment in the uplink, zero-forcing in the downlink.
//!
//! A plan works in *effective* coordinates: the relay sees `n_bar`
//! dimensions (a subset of its antennas, or a fixed orthonormal combination
//! of both slots when two-slot symbol extension is needed) and user `j`
//! uses its first `m_bar[j]` antennas in every slot. The uplink precoders
//! of a pair are chosen so both users land in the same relay subspace and
//! the relay projection `N_p` returns the sum `u_jk + u_kj`, each symbol
//! weighted by its sender's amplitude. Every user scales its stacked
//! precoder to meet the power constraint.

use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::bounds::{binding_case, theorem_sum_dof, BindingCase};
use crate::channel::{extend_channel, trial_rng, AntennaConfig, ChannelRealization};
use crate::error::{Error, Result};
use crate::linalg::{
    column_space, column_space_intersection, hstack, max_abs, null_space, pseudo_inverse, rank, selection, Mat,
    DEFAULT_TOL,
};

/// Span-equality threshold used by [`validate_plan`].
pub const SPAN_TOL: f64 = 1e-8;
/// Zero-forcing residual threshold used by [`validate_plan`].
pub const ZF_TOL: f64 = 1e-9;

// Seed of the fixed relay combiner used with symbol extension. Any generic
// matrix works; it only has to be independent of the channel draw.
const COMBINER_SEED: u64 = 0x7963_6861_6e6e_656c;

/// Unordered user pair, internal 0-based users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Pair {
    P12,
    P13,
    P23,
}

impl Pair {
    pub const ALL: [Pair; 3] = [Pair::P12, Pair::P13, Pair::P23];

    pub fn users(self) -> (usize, usize) {
        match self {
            Pair::P12 => (0, 1),
            Pair::P13 => (0, 2),
            Pair::P23 => (1, 2),
        }
    }

    /// The user that is not part of the pair.
    pub fn excluded(self) -> usize {
        match self {
            Pair::P12 => 2,
            Pair::P13 => 1,
            Pair::P23 => 0,
        }
    }

    pub fn of(a: usize, b: usize) -> Pair {
        match (a.min(b), a.max(b)) {
            (0, 1) => Pair::P12,
            (0, 2) => Pair::P13,
            (1, 2) => Pair::P23,
            _ => panic!("no pair for users {a} and {b}"),
        }
    }

    pub fn contains(self, user: usize) -> bool {
        let (a, b) = self.users();
        a == user || b == user
    }

    pub fn label(self) -> &'static str {
        match self {
            Pair::P12 => "12",
            Pair::P13 => "13",
            Pair::P23 => "23",
        }
    }
}

/// Streams per pair and direction over one block of `slots` channel uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DofAllocation {
    pub d12: usize,
    pub d13: usize,
    pub d23: usize,
    pub slots: usize,
}

impl DofAllocation {
    pub fn d(&self, pair: Pair) -> usize {
        match pair {
            Pair::P12 => self.d12,
            Pair::P13 => self.d13,
            Pair::P23 => self.d23,
        }
    }

    /// Streams carried by message `(from, to)` per block.
    pub fn message_streams(&self, from: usize, to: usize) -> usize {
        self.d(Pair::of(from, to))
    }

    /// Streams decoded by `user` per block.
    pub fn decoded_streams(&self, user: usize) -> usize {
        Pair::ALL.iter().filter(|p| p.contains(user)).map(|&p| self.d(p)).sum()
    }

    /// Streams sent by `user` per block (same as decoded: exchanges are symmetric).
    pub fn sent_streams(&self, user: usize) -> usize {
        self.decoded_streams(user)
    }

    /// Total degrees of freedom per channel use.
    pub fn sum_dof(&self) -> f64 {
        2.0 * (self.d12 + self.d13 + self.d23) as f64 / self.slots as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReducedConfig {
    /// Active relay dimensions per block (after symbol extension).
    pub n_bar: usize,
    /// Active antennas per user, per slot.
    pub m_bar: [usize; 3],
    pub relay_antenna_selection: Vec<usize>,
    pub user_antenna_selection: [Vec<usize>; 3],
    /// Case of the original configuration.
    pub binding_case: BindingCase,
    /// Construction actually used (A or B); differs from `binding_case`
    /// only for case C, which runs A or B on the reduced antennas.
    pub construction: BindingCase,
}

/// Largest usable user antenna counts for a relay-limited configuration:
/// lexicographically largest `(m1, m2, m3)` with `m_j <= min(M_j, N)`,
/// `m1 >= m2 >= m3`, and `2N = min(2 m2 + 2 m3, m1 + m2 + m3)`. Solutions
/// keeping every user active are preferred; user 3 is only switched off
/// when no such solution exists (e.g. a single relay antenna).
pub fn reduce_user_antennas(cfg: &AntennaConfig) -> [usize; 3] {
    let n = cfg.n();
    let caps: [usize; 3] = std::array::from_fn(|j| cfg.m(j).min(n));
    let target = 2 * n;
    let mut best_active: Option<[usize; 3]> = None;
    let mut best_any: Option<[usize; 3]> = None;
    for m1 in (1..=caps[0]).rev() {
        for m2 in (1..=caps[1].min(m1)).rev() {
            for m3 in (0..=caps[2].min(m2)).rev() {
                if (2 * (m2 + m3)).min(m1 + m2 + m3) != target {
                    continue;
                }
                let cand = [m1, m2, m3];
                if m3 > 0 && best_active.is_none_or(|b| cand > b) {
                    best_active = Some(cand);
                }
                if best_any.is_none_or(|b| cand > b) {
                    best_any = Some(cand);
                }
            }
        }
    }
    best_active
        .or(best_any)
        .expect("a relay-limited configuration always admits a reduction")
}

/// Stream allocation and active antennas for `cfg`.
pub fn allocate_streams(cfg: &AntennaConfig) -> (DofAllocation, ReducedConfig) {
    let case = binding_case(cfg);
    let m_bar = match case {
        BindingCase::A | BindingCase::B => cfg.users(),
        BindingCase::C => reduce_user_antennas(cfg),
    };
    // The reduced configuration is never relay-limited: the reduction makes
    // 2N equal to one of the other two terms.
    let construction = {
        let [m1, m2, m3] = m_bar;
        if 2 * (m2 + m3) <= m1 + m2 + m3 {
            BindingCase::A
        } else {
            BindingCase::B
        }
    };
    let [m1, m2, m3] = m_bar;
    let (alloc, n_bar) = match construction {
        BindingCase::A => (
            DofAllocation {
                d12: m2,
                d13: m3,
                d23: 0,
                slots: 1,
            },
            m2 + m3,
        ),
        BindingCase::B => {
            let total = m1 + m2 + m3;
            let slots = if total % 2 == 0 { 1 } else { 2 };
            // With two slots every half-integer quantity doubles.
            (
                DofAllocation {
                    d12: (m1 + m2 - m3) * slots / 2,
                    d13: (m1 + m3 - m2) * slots / 2,
                    d23: (m2 + m3 - m1) * slots / 2,
                    slots,
                },
                total * slots / 2,
            )
        }
        BindingCase::C => unreachable!("construction is A or B"),
    };
    let relay_antenna_selection = if alloc.slots == 1 {
        (0..n_bar).collect()
    } else {
        (0..cfg.n()).collect()
    };
    let reduced = ReducedConfig {
        n_bar,
        m_bar,
        relay_antenna_selection,
        user_antenna_selection: std::array::from_fn(|j| (0..m_bar[j]).collect()),
        binding_case: case,
        construction,
    };
    (alloc, reduced)
}

/// Precoders, relay projections and downlink precoders for one channel.
#[derive(Debug, Clone)]
pub struct BeamformingPlan {
    pub config: AntennaConfig,
    pub alloc: DofAllocation,
    pub reduced: ReducedConfig,
    /// Maps the relay's received block (`n * slots`) to the `n_bar` active
    /// dimensions; its transpose maps the relay's transmit vector back.
    /// Rows are orthonormal.
    pub relay_combiner: Mat,
    /// Uplink precoder of message `(from, to)`, shape `m_bar[from]*slots × d`.
    pub v: BTreeMap<(usize, usize), Mat>,
    /// Relay projection per pair, shape `d × n_bar`.
    pub n_proj: BTreeMap<Pair, Mat>,
    /// Downlink precoder per pair, shape `n_bar × d`.
    pub t: BTreeMap<Pair, Mat>,
    /// Per-user symbol amplitude at unit power: user `j` sends
    /// `sqrt(P) * uplink_power_scale[j] * sum_k V_jk u_jk`.
    pub uplink_power_scale: [f64; 3],
    /// Relay amplitude gain at unit power and unit noise variance.
    pub relay_power_scale: f64,
    /// `sum_j scale_j^2 ||T N H_j V_j||_F^2`: relay output signal energy at unit power.
    pub relay_signal_energy: f64,
    /// `||T N||_F^2`: relay output energy per unit relay noise variance.
    pub relay_noise_energy: f64,
}

/// Channel matrices restricted to a plan's active dimensions.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    /// Uplink in active coordinates, `n_bar × m_bar[j]*slots`.
    pub h: [Mat; 3],
    /// Downlink in active coordinates, `m_bar[j]*slots × n_bar`.
    pub d: [Mat; 3],
    /// Channel at block level (extended when `slots == 2`).
    pub block: ChannelRealization,
}

/// Row selection of user `j`'s active antennas across all slots,
/// shape `m_bar*slots × M*slots`.
fn user_selection(cfg: &AntennaConfig, reduced: &ReducedConfig, slots: usize, j: usize) -> Mat {
    let m = cfg.m(j);
    let idx: Vec<usize> = (0..slots)
        .flat_map(|s| reduced.user_antenna_selection[j].iter().map(move |&a| s * m + a))
        .collect();
    selection(&idx, m * slots)
}

fn relay_combiner(cfg: &AntennaConfig, reduced: &ReducedConfig, slots: usize) -> Mat {
    if slots == 1 {
        return selection(&reduced.relay_antenna_selection, cfg.n());
    }
    // Per-slot antenna selection keeps the slots decoupled and cannot realize
    // half-integer dimensions, so mix both slots with a fixed generic map.
    let width = cfg.n() * slots;
    let mut rng = trial_rng(COMBINER_SEED, (reduced.n_bar * 64 + width) as u64);
    let g = Mat::from_fn(width, reduced.n_bar, |_, _| StandardNormal.sample(&mut rng));
    let q = g.qr().q();
    q.transpose()
}

fn block_channel(ch: &ChannelRealization, slots: usize) -> Result<ChannelRealization> {
    if slots == 2 {
        extend_channel(ch)
    } else {
        Ok(ch.clone())
    }
}

impl BeamformingPlan {
    pub fn slots(&self) -> usize {
        self.alloc.slots
    }

    pub fn user_selection(&self, j: usize) -> Mat {
        user_selection(&self.config, &self.reduced, self.alloc.slots, j)
    }

    /// Restricts `ch` (unextended) to the plan's active coordinates.
    pub fn effective_channel(&self, ch: &ChannelRealization) -> Result<EffectiveChannel> {
        if ch.extension_factor() != 1 {
            return Err(Error::ShapeMismatch("plans take the unextended channel".into()));
        }
        ch.check_shapes(&self.config)?;
        let block = block_channel(ch, self.alloc.slots)?;
        let r = &self.relay_combiner;
        let h = std::array::from_fn(|j| {
            let s = self.user_selection(j);
            r * &block.h[j] * s.transpose()
        });
        let d = std::array::from_fn(|j| {
            let s = self.user_selection(j);
            s * &block.d[j] * r.transpose()
        });
        Ok(EffectiveChannel { h, d, block })
    }

    /// Uplink precoder of `(from, to)` mapped to all of the sender's antennas
    /// across the block; deselected antennas carry exact zeros.
    pub fn full_precoder(&self, from: usize, to: usize) -> Mat {
        self.user_selection(from).transpose() * &self.v[&(from, to)]
    }

    /// Stacked precoder `[V_jk V_jl]` of user `j` in effective coordinates.
    pub fn user_precoder(&self, j: usize) -> Mat {
        let blocks: Vec<&Mat> = (0..3).filter(|&k| k != j).map(|k| &self.v[&(j, k)]).collect();
        hstack(&blocks)
    }

    /// `sum_p T_p N_p`, the relay's linear map from its active observation
    /// to its active transmit vector (before the power gain).
    pub fn relay_map(&self) -> Mat {
        let nb = self.reduced.n_bar;
        let mut m = Mat::zeros(nb, nb);
        for p in Pair::ALL {
            m += &self.t[&p] * &self.n_proj[&p];
        }
        m
    }

    /// Uplink symbol amplitude of user `j` at power `p`.
    pub fn uplink_amplitude(&self, j: usize, p: f64) -> f64 {
        p.sqrt() * self.uplink_power_scale[j]
    }

    /// Relay gain meeting the power constraint with equality at power `p`.
    pub fn relay_gain(&self, p: f64, noise_variance: f64) -> f64 {
        let energy = p * self.relay_signal_energy + noise_variance * self.relay_noise_energy;
        if energy <= 0.0 {
            return 0.0;
        }
        (p * self.alloc.slots as f64 / energy).sqrt()
    }
}

fn degenerate(msg: impl Into<String>) -> Error {
    Error::DegenerateChannel(msg.into())
}

/// Builds the alignment/zero-forcing plan for `cfg` on channel `ch`.
pub fn build_plan(cfg: &AntennaConfig, ch: &ChannelRealization) -> Result<BeamformingPlan> {
    if ch.extension_factor() != 1 {
        return Err(Error::ShapeMismatch("build_plan takes the unextended channel".into()));
    }
    ch.check_shapes(cfg)?;
    let (alloc, reduced) = allocate_streams(cfg);
    let slots = alloc.slots;
    let nb = reduced.n_bar;

    let mut plan = BeamformingPlan {
        config: *cfg,
        alloc,
        relay_combiner: relay_combiner(cfg, &reduced, slots),
        reduced,
        v: BTreeMap::new(),
        n_proj: BTreeMap::new(),
        t: BTreeMap::new(),
        uplink_power_scale: [0.0; 3],
        relay_power_scale: 0.0,
        relay_signal_energy: 0.0,
        relay_noise_energy: 0.0,
    };
    let eff = plan.effective_channel(ch)?;
    let dims: [usize; 3] = std::array::from_fn(|j| eff.h[j].ncols());

    for (j, h) in eff.h.iter().enumerate() {
        if rank(h, DEFAULT_TOL) != dims[j].min(nb) {
            return Err(degenerate(format!("uplink of user {} is rank deficient", j + 1)));
        }
    }

    // Aligned directions per pair, before normalization.
    for p in Pair::ALL {
        let (j, k) = p.users();
        let d = alloc.d(p);
        let (vj, vk) = if d == 0 {
            (Mat::zeros(dims[j], 0), Mat::zeros(dims[k], 0))
        } else if plan.reduced.construction == BindingCase::A {
            // User 1's channel covers the whole active relay space, so the
            // smaller user's own column space is the intersection.
            debug_assert_eq!(j, 0);
            (
                pseudo_inverse(&eff.h[0], DEFAULT_TOL) * &eff.h[k],
                Mat::identity(dims[k], dims[k]),
            )
        } else {
            let (va, vb) = column_space_intersection(&eff.h[j], &eff.h[k], DEFAULT_TOL);
            if va.ncols() != d {
                return Err(degenerate(format!(
                    "pair {}: intersection has dimension {}, expected {}",
                    p.label(),
                    va.ncols(),
                    d
                )));
            }
            (va, vb)
        };
        plan.v.insert((j, k), vj);
        plan.v.insert((k, j), vk);
    }

    // Relay projections: rows span the left null space of the excluded user.
    for p in Pair::ALL {
        let l = p.excluded();
        let basis = null_space(&eff.h[l].transpose(), DEFAULT_TOL).into_basis();
        let d = alloc.d(p);
        if basis.ncols() != d {
            return Err(degenerate(format!(
                "pair {}: relay projection has dimension {}, expected {}",
                p.label(),
                basis.ncols(),
                d
            )));
        }
        plan.n_proj.insert(p, basis.transpose());
    }

    // Normalize so that N_p H_j V_jk = I for both directions.
    for p in Pair::ALL {
        let (j, k) = p.users();
        let n = &plan.n_proj[&p];
        for (from, to) in [(j, k), (k, j)] {
            let v = &plan.v[&(from, to)];
            let inner = n * &eff.h[from] * v;
            let inv = if inner.is_empty() {
                inner.clone()
            } else {
                inner
                    .clone()
                    .try_inverse()
                    .filter(|_| rank(&inner, DEFAULT_TOL) == inner.nrows())
                    .ok_or_else(|| {
                        degenerate(format!(
                            "pair {}: inner channel of user {} is singular",
                            p.label(),
                            from + 1
                        ))
                    })?
            };
            let normalized = v * inv;
            plan.v.insert((from, to), normalized);
        }
    }

    // Downlink precoders: columns span the null space of the excluded user.
    for p in Pair::ALL {
        let l = p.excluded();
        let basis = null_space(&eff.d[l], DEFAULT_TOL).into_basis();
        let d = alloc.d(p);
        if basis.ncols() != d {
            return Err(degenerate(format!(
                "pair {}: downlink precoder has dimension {}, expected {}",
                p.label(),
                basis.ncols(),
                d
            )));
        }
        plan.t.insert(p, basis);
    }

    // Aligned relay subspaces must be independent so projections separate them.
    let aligned: Vec<Mat> = Pair::ALL
        .iter()
        .map(|&p| {
            let (j, k) = p.users();
            &eff.h[j] * &plan.v[&(j, k)]
        })
        .collect();
    let aligned_refs: Vec<&Mat> = aligned.iter().collect();
    if rank(&hstack(&aligned_refs), DEFAULT_TOL) != nb {
        return Err(degenerate("aligned relay subspaces are not linearly independent"));
    }

    for k in 0..3 {
        let a = receiver_downlink(&plan, &eff, k);
        if rank(&a, DEFAULT_TOL) != a.ncols() {
            return Err(degenerate(format!("downlink to user {} is rank deficient", k + 1)));
        }
    }

    for j in 0..3 {
        let trace = plan.user_precoder(j).norm_squared();
        plan.uplink_power_scale[j] = if trace == 0.0 {
            0.0
        } else {
            (slots as f64 / trace).sqrt()
        };
    }

    let relay = plan.relay_map();
    plan.relay_signal_energy = (0..3)
        .map(|j| plan.uplink_power_scale[j].powi(2) * (&relay * &eff.h[j] * plan.user_precoder(j)).norm_squared())
        .sum();
    plan.relay_noise_energy = relay.norm_squared();
    plan.relay_power_scale = plan.relay_gain(1.0, 1.0);
    Ok(plan)
}

/// `D_k [T_p ...]` over the pairs containing `k`, in pair order.
pub(crate) fn receiver_downlink(plan: &BeamformingPlan, eff: &EffectiveChannel, k: usize) -> Mat {
    let ts: Vec<&Mat> = Pair::ALL.iter().filter(|p| p.contains(k)).map(|p| &plan.t[p]).collect();
    &eff.d[k] * hstack(&ts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl CheckResult {
    fn at_most(name: String, residual: f64, threshold: f64) -> Self {
        Self {
            name,
            passed: residual <= threshold,
            residual,
            threshold,
        }
    }

    /// Rank check: the residual is the rank deficit.
    fn full_rank(name: String, actual: usize, expected: usize) -> Self {
        Self::at_most(name, expected.abs_diff(actual) as f64, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanValidation {
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl PlanValidation {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn worst(&self, prefix: &str) -> f64 {
        self.checks
            .iter()
            .filter(|c| c.name.starts_with(prefix))
            .map(|c| c.residual)
            .fold(0.0, f64::max)
    }
}

/// Evaluates every plan invariant against `ch`. Failures are reported, not
/// returned as errors.
pub fn validate_plan(plan: &BeamformingPlan, ch: &ChannelRealization) -> PlanValidation {
    let mut checks = Vec::new();
    let eff = match plan.effective_channel(ch) {
        Ok(e) => e,
        Err(e) => {
            checks.push(CheckResult {
                name: format!("channel_shape: {e}"),
                residual: f64::INFINITY,
                threshold: 0.0,
                passed: false,
            });
            return PlanValidation { checks, passed: false };
        }
    };
    let nb = plan.reduced.n_bar;

    for p in Pair::ALL {
        let (j, k) = p.users();
        let d = plan.alloc.d(p);
        let label = p.label();
        let vjk = &plan.v[&(j, k)];
        let vkj = &plan.v[&(k, j)];
        let n = &plan.n_proj[&p];
        let t = &plan.t[&p];

        let shapes_ok = vjk.shape() == (eff.h[j].ncols(), d)
            && vkj.shape() == (eff.h[k].ncols(), d)
            && n.shape() == (d, nb)
            && t.shape() == (nb, d);
        checks.push(CheckResult::at_most(
            format!("shape_{label}"),
            if shapes_ok { 0.0 } else { 1.0 },
            0.0,
        ));
        if !shapes_ok {
            continue;
        }

        let sj = &eff.h[j] * vjk;
        let sk = &eff.h[k] * vkj;
        let span = max_abs(&(column_space(&sj, DEFAULT_TOL).projector() - column_space(&sk, DEFAULT_TOL).projector()));
        checks.push(CheckResult::at_most(format!("alignment_{label}"), span, SPAN_TOL));

        let l = p.excluded();
        checks.push(CheckResult::at_most(
            format!("relay_zf_{label}"),
            max_abs(&(n * &eff.h[l])),
            ZF_TOL,
        ));
        checks.push(CheckResult::at_most(
            format!("downlink_zf_{label}"),
            max_abs(&(&eff.d[l] * t)),
            ZF_TOL,
        ));

        for (from, s) in [(j, &sj), (k, &sk)] {
            let inner = n * s;
            checks.push(CheckResult::full_rank(
                format!("relay_inner_rank_{label}_u{}", from + 1),
                rank(&inner, DEFAULT_TOL),
                d,
            ));
        }
    }

    let aligned: Vec<Mat> = Pair::ALL
        .iter()
        .filter_map(|&p| {
            let (j, k) = p.users();
            plan.v.get(&(j, k)).map(|v| &eff.h[j] * v)
        })
        .filter(|m| m.nrows() == nb)
        .collect();
    let refs: Vec<&Mat> = aligned.iter().collect();
    let total: usize = Pair::ALL.iter().map(|&p| plan.alloc.d(p)).sum();
    checks.push(CheckResult::full_rank(
        "relay_subspace_independence".into(),
        rank(&hstack(&refs), DEFAULT_TOL),
        total,
    ));

    for k in 0..3 {
        let ts: Vec<&Mat> = Pair::ALL.iter().filter(|p| p.contains(k)).map(|p| &plan.t[p]).collect();
        if ts.iter().any(|t| t.nrows() != nb) {
            continue;
        }
        let stacked = hstack(&ts);
        checks.push(CheckResult::full_rank(
            format!("downlink_precoder_rank_u{}", k + 1),
            rank(&stacked, DEFAULT_TOL),
            stacked.ncols(),
        ));
        let seen = &eff.d[k] * &stacked;
        checks.push(CheckResult::full_rank(
            format!("receiver_rank_u{}", k + 1),
            rank(&seen, DEFAULT_TOL),
            stacked.ncols(),
        ));
    }

    let mut leaked = 0.0_f64;
    for &(from, to) in plan.v.keys() {
        let full = plan.full_precoder(from, to);
        let active = plan.user_selection(from).transpose() * plan.user_selection(from);
        let outside = (Mat::identity(full.nrows(), full.nrows()) - active) * full;
        leaked = leaked.max(max_abs(&outside));
    }
    checks.push(CheckResult::at_most("deselected_antennas_zero".into(), leaked, 0.0));

    let theorem = theorem_sum_dof(&plan.config).theorem_sum as f64;
    checks.push(CheckResult::at_most(
        "stream_accounting".into(),
        (plan.alloc.sum_dof() - theorem).abs(),
        0.0,
    ));

    let passed = checks.iter().all(|c| c.passed);
    PlanValidation { checks, passed }
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixShape {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

/// Diagnostic dump of a plan: allocation, active dimensions, matrix shapes
/// and validation residuals.
#[derive(Debug, Clone, Serialize)]
pub struct PlanDump {
    pub config: AntennaConfig,
    pub alloc: DofAllocation,
    pub reduced: ReducedConfig,
    pub matrices: Vec<MatrixShape>,
    pub uplink_power_scale: [f64; 3],
    pub relay_power_scale: f64,
    pub validation: PlanValidation,
}

impl BeamformingPlan {
    pub fn dump(&self, validation: &PlanValidation) -> PlanDump {
        let mut matrices = Vec::new();
        for (&(from, to), v) in &self.v {
            matrices.push(MatrixShape {
                name: format!("V{}{}", from + 1, to + 1),
                rows: v.nrows(),
                cols: v.ncols(),
            });
        }
        for (p, n) in &self.n_proj {
            matrices.push(MatrixShape {
                name: format!("N{}", p.label()),
                rows: n.nrows(),
                cols: n.ncols(),
            });
        }
        for (p, t) in &self.t {
            matrices.push(MatrixShape {
                name: format!("T{}", p.label()),
                rows: t.nrows(),
                cols: t.ncols(),
            });
        }
        matrices.push(MatrixShape {
            name: "relay_combiner".into(),
            rows: self.relay_combiner.nrows(),
            cols: self.relay_combiner.ncols(),
        });
        PlanDump {
            config: self.config,
            alloc: self.alloc,
            reduced: self.reduced.clone(),
            matrices,
            uplink_power_scale: self.uplink_power_scale,
            relay_power_scale: self.relay_power_scale,
            validation: validation.clone(),
        }
    }
}
