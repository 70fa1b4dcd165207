//! Closed-form degrees-of-freedom bounds for the 3-user MIMO Y-channel.

use serde::Serialize;

use crate::channel::AntennaConfig;
use crate::error::{Error, Result};

/// Which term attains the sum-DoF minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BindingCase {
    /// `2 M2 + 2 M3`: user 1 pairs with the two smaller users.
    A,
    /// `M1 + M2 + M3`: all three pairs exchange streams.
    B,
    /// `2 N`: the relay is the bottleneck, users drop antennas.
    C,
}

impl std::fmt::Display for BindingCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BindingCase::A => "A",
            BindingCase::B => "B",
            BindingCase::C => "C",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DofBoundSet {
    /// Cut-set bound on `d_jk + d_jl` for each internal user `j`.
    pub cutset_per_user: [usize; 3],
    pub cutset_sum: usize,
    pub genie_sum: usize,
    pub theorem_sum: usize,
    pub binding_case: BindingCase,
}

/// `min(N, M_j, M_k + M_l)` for 1-based user `j`.
pub fn cutset_bound_user(cfg: &AntennaConfig, j: usize) -> Result<usize> {
    if !(1..=3).contains(&j) {
        return Err(Error::InvalidUser(j));
    }
    let m = cfg.users();
    let own = m[j - 1];
    let others: usize = m.iter().sum::<usize>() - own;
    Ok(cfg.n().min(own).min(others))
}

/// `2 min(N, M2 + M3)`.
pub fn genie_bound_sum(cfg: &AntennaConfig) -> usize {
    2 * cfg.n().min(cfg.m2() + cfg.m3())
}

/// The three candidate terms `(2M2+2M3, M1+M2+M3, 2N)`.
pub fn theorem_terms(cfg: &AntennaConfig) -> [usize; 3] {
    [2 * (cfg.m2() + cfg.m3()), cfg.m1() + cfg.m2() + cfg.m3(), 2 * cfg.n()]
}

/// Case label with ties resolved A, then B, then C.
pub fn binding_case(cfg: &AntennaConfig) -> BindingCase {
    let [a, b, c] = theorem_terms(cfg);
    if a <= b && a <= c {
        BindingCase::A
    } else if b <= c {
        BindingCase::B
    } else {
        BindingCase::C
    }
}

pub fn theorem_sum_dof(cfg: &AntennaConfig) -> DofBoundSet {
    let cutset_per_user: [usize; 3] = std::array::from_fn(|j| cutset_bound_user(cfg, j + 1).expect("index in range"));
    let genie_sum = genie_bound_sum(cfg);
    let theorem_sum = *theorem_terms(cfg).iter().min().expect("three terms");
    DofBoundSet {
        cutset_per_user,
        cutset_sum: cutset_per_user.iter().sum(),
        genie_sum,
        theorem_sum,
        binding_case: binding_case(cfg),
    }
}
