//! Feedback bit allocation across cross links.
//!
//! The dynamic allocation minimizes the sum of per-link residual interference
//! envelopes `Σ (β l/(t−1)) 2^{−B/(t−1)}` with `t = MʳMᵗ` subject to a total
//! budget. The common `P·d` factor does not move the minimizer and is left out.
//! The continuous minimizer is the clamped log-linear water-filling rule
//! `B = [(t−1)(log₂(β l/(t−1)²) + b)]⁺`; integers are recovered by flooring,
//! greedy completion and a single-bit exchange pass.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::DEFAULT_GAIN_FLOOR;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId {
    pub rx: usize,
    pub tx: usize,
}

impl LinkId {
    pub fn new(rx: usize, tx: usize) -> Self {
        LinkId { rx, tx }
    }
}

impl std::fmt::Display for LinkId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}<-{}", self.rx, self.tx)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkQuantStats {
    #[serde(flatten)]
    pub id: LinkId,
    pub beta: f64,
    pub l: f64,
    pub m_r: usize,
    pub m_t: usize,
}

impl LinkQuantStats {
    /// `MʳMᵗ − 1`, the exponent scale of the distortion decay.
    pub fn dof(&self) -> usize {
        (self.m_r * self.m_t).saturating_sub(1)
    }

    /// Needs bits: connected and not rank one.
    pub fn is_eligible(&self, gain_floor: f64) -> bool {
        self.l > gain_floor && self.dof() >= 1 && self.beta > 0.0
    }

    /// Residual envelope coefficient `β l/(t−1)`; zero for ineligible links.
    fn coeff(&self, gain_floor: f64) -> f64 {
        if self.is_eligible(gain_floor) {
            self.beta * self.l / self.dof() as f64
        } else {
            0.0
        }
    }

    /// `(β l/(t−1)) 2^{−bits/(t−1)}`.
    pub fn envelope(&self, bits: f64, gain_floor: f64) -> f64 {
        let c = self.coeff(gain_floor);
        if c == 0.0 {
            0.0
        } else {
            c * (-bits / self.dof() as f64).exp2()
        }
    }

    /// Real water-filling bits at water level `b`.
    fn real_bits(&self, b: f64, gain_floor: f64) -> f64 {
        if !self.is_eligible(gain_floor) {
            return 0.0;
        }
        let n = self.dof() as f64;
        (n * ((self.beta * self.l / (n * n)).log2() + b)).max(0.0)
    }
}

/// Integer bits per link, in the order of the stats the allocation was built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BitAllocation {
    pub bits: Vec<(LinkId, u32)>,
    pub budget: u32,
    /// Water level of the continuous solution, when one was computed.
    pub water_level: Option<f64>,
}

impl BitAllocation {
    pub fn get(&self, id: LinkId) -> Option<u32> {
        self.bits.iter().find(|(k, _)| *k == id).map(|&(_, b)| b)
    }

    pub fn total(&self) -> u64 {
        self.bits.iter().map(|&(_, b)| b as u64).sum()
    }
}

/// Water-filling allocation with the default gain floor.
pub fn allocate_bits(stats: &[LinkQuantStats], budget: u32) -> Result<BitAllocation> {
    allocate_bits_with_floor(stats, budget, DEFAULT_GAIN_FLOOR)
}

pub fn allocate_bits_with_floor(
    stats: &[LinkQuantStats],
    budget: u32,
    gain_floor: f64,
) -> Result<BitAllocation> {
    if !stats.iter().any(|s| s.is_eligible(gain_floor)) {
        return Err(Error::NoEligibleLinks);
    }
    let (b, real) = water_fill(stats, budget as f64, gain_floor);
    let mut bits: Vec<u32> = real
        .iter()
        .map(|x| (x + 1e-9).floor().max(0.0) as u32)
        .collect();
    let mut assigned: u64 = bits.iter().map(|&x| x as u64).sum();
    // Floor may overshoot by rounding; take back from the least costly links.
    while assigned > budget as u64 {
        let k = cheapest_removal(stats, &bits, gain_floor).expect("positive bits exist");
        bits[k] -= 1;
        assigned -= 1;
    }
    while assigned < budget as u64 {
        let k = best_addition(stats, &bits, gain_floor).expect("eligible link exists");
        bits[k] += 1;
        assigned += 1;
    }
    exchange_pass(stats, &mut bits, gain_floor);
    Ok(BitAllocation {
        bits: stats.iter().zip(bits).map(|(s, x)| (s.id, x)).collect(),
        budget,
        water_level: Some(b),
    })
}

/// Continuous solution: water level and per-link real bits summing to `budget`.
pub fn water_fill(stats: &[LinkQuantStats], budget: f64, gain_floor: f64) -> (f64, Vec<f64>) {
    let total = |b: f64| {
        stats
            .iter()
            .map(|s| s.real_bits(b, gain_floor))
            .sum::<f64>()
    };
    let (mut lo, mut hi) = (-200.0_f64, 200.0_f64);
    while total(hi) < budget {
        hi *= 2.0;
    }
    while total(lo) > budget {
        lo *= 2.0;
    }
    for _ in 0..200 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if total(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let b = 0.5 * (lo + hi);
    (
        b,
        stats.iter().map(|s| s.real_bits(b, gain_floor)).collect(),
    )
}

fn marginal_gain(s: &LinkQuantStats, bits: u32, gain_floor: f64) -> f64 {
    s.envelope(bits as f64, gain_floor) - s.envelope(bits as f64 + 1.0, gain_floor)
}

fn best_addition(stats: &[LinkQuantStats], bits: &[u32], gain_floor: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, s) in stats
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_eligible(gain_floor))
    {
        let g = marginal_gain(s, bits[k], gain_floor);
        if best.is_none_or(|(_, bg)| g > bg) {
            best = Some((k, g));
        }
    }
    best.map(|(k, _)| k)
}

fn cheapest_removal(stats: &[LinkQuantStats], bits: &[u32], gain_floor: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, s) in stats.iter().enumerate().filter(|&(k, _)| bits[k] > 0) {
        let loss = marginal_gain(s, bits[k] - 1, gain_floor);
        if best.is_none_or(|(_, bl)| loss < bl) {
            best = Some((k, loss));
        }
    }
    best.map(|(k, _)| k)
}

/// Move single bits while that strictly lowers the objective. For a separable
/// convex objective the fixed point is the integer optimum.
fn exchange_pass(stats: &[LinkQuantStats], bits: &mut [u32], gain_floor: f64) {
    for _ in 0..bits.len() * 64 + 1024 {
        let (Some(add), Some(rem)) = (
            best_addition(stats, bits, gain_floor),
            cheapest_removal(stats, bits, gain_floor),
        ) else {
            return;
        };
        if add == rem {
            return;
        }
        let gain = marginal_gain(&stats[add], bits[add], gain_floor);
        let loss = marginal_gain(&stats[rem], bits[rem] - 1, gain_floor);
        if gain <= loss * (1.0 + 1e-12) {
            return;
        }
        bits[add] += 1;
        bits[rem] -= 1;
    }
}

/// `⌊budget/n⌋` bits per link, the remainder one each to the lowest ids.
pub fn equal_allocation(budget: u32, link_ids: &[LinkId]) -> BitAllocation {
    let n = link_ids.len() as u32;
    let mut order: Vec<usize> = (0..link_ids.len()).collect();
    order.sort_by_key(|&k| link_ids[k]);
    let mut bits = vec![0u32; link_ids.len()];
    if let (Some(base), Some(rem)) = (budget.checked_div(n), budget.checked_rem(n)) {
        for (rank, &k) in order.iter().enumerate() {
            bits[k] = base + u32::from((rank as u32) < rem);
        }
    }
    BitAllocation {
        bits: link_ids.iter().copied().zip(bits).collect(),
        budget,
        water_level: None,
    }
}

fn bits_for(alloc: &BitAllocation, s: &LinkQuantStats) -> f64 {
    alloc.get(s.id).unwrap_or(0) as f64
}

/// Upper bound on the mean residual interference at Rx `rx`:
/// `P·d·Σ_{i≠rx} (β l/(t−1)) 2^{−B/(t−1)}`.
pub fn rinr_upper_bound(
    alloc: &BitAllocation,
    stats: &[LinkQuantStats],
    p: f64,
    d: usize,
    rx: usize,
) -> f64 {
    p * d as f64
        * stats
            .iter()
            .filter(|s| s.id.rx == rx && s.id.tx != rx)
            .map(|s| s.envelope(bits_for(alloc, s), DEFAULT_GAIN_FLOOR))
            .sum::<f64>()
}

/// Sum of [`rinr_upper_bound`] over all receivers.
pub fn objective(alloc: &BitAllocation, stats: &[LinkQuantStats], p: f64, d: usize) -> f64 {
    p * d as f64
        * stats
            .iter()
            .map(|s| s.envelope(bits_for(alloc, s), DEFAULT_GAIN_FLOOR))
            .sum::<f64>()
}

/// Budget that preserves the sum degrees of freedom at SNR `p`:
/// `⌈Σ 1{l > floor} (MʳMᵗ − 1) log₂ p + c_b⌉`.
pub fn scaling_bits(p: f64, stats: &[LinkQuantStats], c_b: f64, gain_floor: f64) -> u32 {
    let slope: f64 = stats
        .iter()
        .filter(|s| s.l > gain_floor)
        .map(|s| s.dof() as f64)
        .sum();
    (slope * p.log2() + c_b - 1e-9).ceil().max(0.0) as u32
}

/// Read link statistics from CSV with header `rx,tx,beta,l,m_r,m_t`.
pub fn read_link_stats_csv<R: Read>(reader: R) -> Result<Vec<LinkQuantStats>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let rows = rdr
        .deserialize::<LinkQuantStats>()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    for s in &rows {
        if s.beta.is_nan() || s.l.is_nan() || s.beta < 0.0 || s.l < 0.0 {
            return Err(Error::InvalidLinkStats(format!(
                "link {} has negative beta or gain",
                s.id
            )));
        }
    }
    Ok(rows)
}
