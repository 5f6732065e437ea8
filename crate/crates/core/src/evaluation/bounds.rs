//! Perfect-CSI throughput and its lower bounds under residual interference.
//!
//! All integrals are over the marginal density `f` of an unordered eigenvalue
//! of a `d×d` central Wishart matrix with `d` degrees of freedom,
//! `f(v) = (1/d) e^{−v} Σ_{k<d} L_k(v)²`.

use serde::{Deserialize, Serialize};

use crate::allocation::{rinr_upper_bound, BitAllocation, LinkQuantStats};
use crate::error::{Error, Result};

/// Absolute tolerance of every throughput integral.
pub const QUAD_TOL: f64 = 1e-12;
const MAX_DEPTH: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Adaptive double-exponential quadrature on `[a, b]`: panels whose error
/// estimate misses their share of `tol` are bisected.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Integral> {
    let width = b - a;
    let mut stack = vec![(a, b, 0u32)];
    let mut value = 0.0;
    let mut error = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let share = tol * (hi - lo) / width;
        let out = quadrature::integrate(&f, lo, hi, share);
        if out.error_estimate <= share || depth >= MAX_DEPTH {
            value += out.integral;
            error += out.error_estimate;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    if error > tol * 10.0 || !value.is_finite() {
        return Err(Error::QuadratureFailure(error));
    }
    Ok(Integral { value, error })
}

/// Laguerre polynomials `L_0..L_{d-1}` at `v`.
fn laguerre_all(d: usize, v: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(d);
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..d {
        out.push(cur);
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - v) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    out
}

/// Marginal eigenvalue density of the central Wishart `W_d(I, d)`.
pub fn wishart_marginal_pdf(d: usize, v: f64) -> f64 {
    if v < 0.0 || d == 0 {
        return 0.0;
    }
    let s: f64 = laguerre_all(d, v).iter().map(|l| l * l).sum();
    (-v).exp() * s / d as f64
}

/// Upper end of the finite integration range for stream count `d`.
fn v_max(d: usize) -> f64 {
    40.0 + 10.0 * d as f64
}

/// `∫₀^∞ g(v) f(v) dv` for `g` growing at most logarithmically.
fn wishart_expectation<G: Fn(f64) -> f64>(d: usize, g: G) -> Result<f64> {
    let top = v_max(d);
    let integrand = |v: f64| g(v) * wishart_marginal_pdf(d, v);
    let body = integrate(integrand, 0.0, top, QUAD_TOL)?;
    // The integrand decays at least like e^{−v}·poly(v) beyond the range.
    let tail = integrand(top) * (2.0 * d as f64 + 2.0);
    if tail > QUAD_TOL {
        return Err(Error::QuadratureFailure(tail));
    }
    Ok(body.value)
}

/// Per-stream rate `∫ log₂(1 + snr·v) f(v) dv`.
fn stream_rate(snr: f64, d: usize) -> Result<f64> {
    if snr <= 0.0 {
        return Ok(0.0);
    }
    wishart_expectation(d, |v| (snr * v).ln_1p() / std::f64::consts::LN_2)
}

/// Perfect-CSI network throughput `K d ∫ log₂(1 + (P/d) v) f(v) dv`.
pub fn throughput_perfect(p: f64, d: usize, k: usize) -> Result<f64> {
    Ok((k * d) as f64 * stream_rate(p / d as f64, d)?)
}

/// Lower bound for given mean RINR at each receiver:
/// `Σ_j d ∫ log₂(1 + E_j/d + (P/d)v) f − d log₂(1 + E_j/d)`,
/// evaluated as `d ∫ log₂(1 + (P/d) v/(1 + E_j/d)) f`.
pub fn throughput_lb_given_rinr(avg_rinrs: &[f64], p: f64, d: usize) -> Result<f64> {
    let df = d as f64;
    avg_rinrs
        .iter()
        .map(|&e| Ok(df * stream_rate(p / df / (1.0 + e / df), d)?))
        .sum()
}

/// Comparison bound that keeps the interference only in the penalty term:
/// `Σ_j d ∫ log₂(1 + (P/d)v) f − d log₂(1 + E_j/d)`.
pub fn throughput_lb_conventional(avg_rinrs: &[f64], p: f64, d: usize) -> Result<f64> {
    let df = d as f64;
    let per = df * stream_rate(p / df, d)?;
    Ok(avg_rinrs
        .iter()
        .map(|&e| per - df * (e / df).ln_1p() / std::f64::consts::LN_2)
        .sum())
}

/// Lower bound of the dynamic scheme: the given-RINR bound at the RINR
/// envelopes implied by the allocation.
pub fn throughput_lb_scheme(
    alloc: &BitAllocation,
    stats: &[LinkQuantStats],
    p: f64,
    d: usize,
    k: usize,
) -> Result<f64> {
    let i_upp: Vec<f64> = (0..k)
        .map(|j| rinr_upper_bound(alloc, stats, p, d, j))
        .collect();
    throughput_lb_given_rinr(&i_upp, p, d)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub r_per: f64,
    pub r_low: f64,
    pub r_low_conventional: f64,
    pub i_upp: Vec<f64>,
}

impl BoundReport {
    pub fn compute(
        alloc: &BitAllocation,
        stats: &[LinkQuantStats],
        p: f64,
        d: usize,
        k: usize,
    ) -> Result<Self> {
        let i_upp: Vec<f64> = (0..k)
            .map(|j| rinr_upper_bound(alloc, stats, p, d, j))
            .collect();
        Ok(BoundReport {
            r_per: throughput_perfect(p, d, k)?,
            r_low: throughput_lb_given_rinr(&i_upp, p, d)?,
            r_low_conventional: throughput_lb_conventional(&i_upp, p, d)?,
            i_upp,
        })
    }
}
