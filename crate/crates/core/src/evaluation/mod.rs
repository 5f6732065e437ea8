//! Residual interference, throughput with interference treated as noise, and
//! the analytical throughput bounds.

mod bounds;

pub use bounds::{
    integrate, throughput_lb_conventional, throughput_lb_given_rinr, throughput_lb_scheme,
    throughput_perfect, wishart_marginal_pdf, BoundReport, Integral, QUAD_TOL,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ia::TransceiverSet;
use crate::linalg::{self, CMat};
use crate::topology::{ChannelRealization, InterferenceTopologyProfile};

/// Per-receiver outcome of one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThroughputSample {
    /// Rate at each Rx, bits/s/Hz.
    pub rates: Vec<f64>,
    /// Residual interference-to-noise ratio at each Rx.
    pub rinr: Vec<f64>,
    pub seed: u64,
}

impl ThroughputSample {
    pub fn sum_rate(&self) -> f64 {
        self.rates.iter().sum()
    }
}

/// `U_jᴴ H_ji V_i`.
fn effective(ts: &TransceiverSet, h: &CMat, j: usize, i: usize) -> CMat {
    ts.u[j].adjoint() * h * &ts.v[i]
}

/// `(P/d) Σ_{i≠j} l_ji ‖U_jᴴ H_ji V_i‖²` on the given (true) channels.
pub fn rinr(
    ts: &TransceiverSet,
    channels: &ChannelRealization,
    itp: &InterferenceTopologyProfile,
    p: f64,
    d: usize,
    rx: usize,
) -> f64 {
    let k = itp.dims().k;
    (0..k)
        .filter(|&i| i != rx)
        .map(|i| itp.gain(rx, i) * linalg::frob_norm_sq(&effective(ts, channels.h(rx, i), rx, i)))
        .sum::<f64>()
        * p
        / d as f64
}

/// Rate at Rx `rx`: `log₂det(I + C + (P/d) l S Sᴴ) − log₂det(I + C)` with
/// `S = U_jᴴ H_jj V_j` and `C` the weighted interference covariance.
pub fn rate_at(
    ts: &TransceiverSet,
    channels: &ChannelRealization,
    itp: &InterferenceTopologyProfile,
    p: f64,
    d: usize,
    rx: usize,
) -> Result<f64> {
    let k = itp.dims().k;
    let scale = p / d as f64;
    let mut cov = linalg::identity(d);
    for i in (0..k).filter(|&i| i != rx) {
        let a = effective(ts, channels.h(rx, i), rx, i);
        cov += (&a * a.adjoint()) * linalg::c(scale * itp.gain(rx, i), 0.0);
    }
    let s = effective(ts, channels.h(rx, rx), rx, rx);
    let total = &cov + (&s * s.adjoint()) * linalg::c(scale * itp.gain(rx, rx), 0.0);
    Ok((linalg::log2_det_hpd(&total)? - linalg::log2_det_hpd(&cov)?).max(0.0))
}

/// Sum over receivers of [`rate_at`].
pub fn throughput_limited(
    ts: &TransceiverSet,
    channels: &ChannelRealization,
    itp: &InterferenceTopologyProfile,
    p: f64,
    d: usize,
) -> Result<f64> {
    (0..itp.dims().k)
        .map(|j| rate_at(ts, channels, itp, p, d, j))
        .sum()
}

/// Rates and RINR at every receiver.
pub fn evaluate(
    ts: &TransceiverSet,
    channels: &ChannelRealization,
    itp: &InterferenceTopologyProfile,
    p: f64,
    seed: u64,
) -> Result<ThroughputSample> {
    let dims = itp.dims();
    let rates = (0..dims.k)
        .map(|j| rate_at(ts, channels, itp, p, dims.d, j))
        .collect::<Result<Vec<_>>>()?;
    let rinr = (0..dims.k)
        .map(|j| rinr(ts, channels, itp, p, dims.d, j))
        .collect();
    Ok(ThroughputSample { rates, rinr, seed })
}
