//! Centralized interference alignment by alternating leakage minimization.
//!
//! Each iteration updates every decorrelator `U_j` to the `d` least-interfered
//! directions at Rx `j`, then does the same for every precoder `V_i` in the
//! reciprocal network. Both half-steps minimize the same weighted leakage, so
//! the leakage trace never increases.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::rng::{complex_gaussian_matrix, substream};
use crate::topology::SystemDims;

/// Precoders `V_i` (`Nt×d`) and decorrelators `U_j` (`Nr×d`), orthonormal columns.
#[derive(Clone, Debug)]
pub struct TransceiverSet {
    pub v: Vec<CMat>,
    pub u: Vec<CMat>,
}

impl TransceiverSet {
    /// Largest deviation of `UᴴU` or `VᴴV` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        self.u
            .iter()
            .chain(self.v.iter())
            .map(|m| linalg::max_abs_diff(&(m.adjoint() * m), &linalg::identity(m.ncols())))
            .fold(0.0, f64::max)
    }

    /// Relabel pairs: slot `new` holds the old pair `perm[new]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        TransceiverSet {
            v: perm.iter().map(|&p| self.v[p].clone()).collect(),
            u: perm.iter().map(|&p| self.u[p].clone()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IaOptions {
    pub max_iters: usize,
    /// Target for `final leakage / initial leakage`, also the stall threshold
    /// on the relative per-iteration change.
    pub leakage_tol: f64,
    pub init_seed: u64,
    pub restart_count: usize,
}

impl Default for IaOptions {
    fn default() -> Self {
        IaOptions {
            max_iters: 2000,
            leakage_tol: 1e-10,
            init_seed: 0,
            restart_count: 3,
        }
    }
}

impl IaOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0
            || self.restart_count == 0
            || self.leakage_tol.is_nan()
            || self.leakage_tol <= 0.0
        {
            return Err(Error::InvalidConfig(
                "IA options need positive limits".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct IaOutcome {
    pub transceivers: TransceiverSet,
    pub leakage: f64,
    pub initial_leakage: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Leakage after initialization and after each iteration.
    pub trace: Vec<f64>,
}

impl IaOutcome {
    pub fn relative_leakage(&self) -> f64 {
        if self.initial_leakage > 0.0 {
            self.leakage / self.initial_leakage
        } else {
            0.0
        }
    }

    /// Write the leakage trace as `iteration,leakage` CSV.
    pub fn write_trace<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "leakage"])?;
        for (it, l) in self.trace.iter().enumerate() {
            w.write_record([it.to_string(), format!("{l:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

const POLISH_WARMUP: usize = 5;
const LM_TRIES: usize = 6;
const LM_INIT_DAMPING: f64 = 1e-3;
const LM_MIN_DAMPING: f64 = 1e-12;
const LM_MAX_DAMPING: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Feasibility {
    Feasible,
    Infeasible,
    Unknown,
}

/// Proper-system counting screen for symmetric networks.
pub fn check_feasibility(dims: &SystemDims) -> Feasibility {
    let need = (dims.k + 1) * dims.d;
    let have = dims.nt + dims.nr;
    if dims.d > dims.nt.min(dims.nr) || have < need {
        Feasibility::Infeasible
    } else {
        Feasibility::Feasible
    }
}

/// Haar-distributed orthonormal transceivers.
pub fn random_transceivers<R: Rng + ?Sized>(dims: &SystemDims, rng: &mut R) -> TransceiverSet {
    let v = (0..dims.k)
        .map(|_| linalg::orthonormalize(&complex_gaussian_matrix(rng, dims.nt, dims.d)))
        .collect();
    let u = (0..dims.k)
        .map(|_| linalg::orthonormalize(&complex_gaussian_matrix(rng, dims.nr, dims.d)))
        .collect();
    TransceiverSet { v, u }
}

/// `Σ_j Σ_{i≠j} w_ji ‖U_jᴴ H_ji V_i‖²` over a `K×K` grid (row `j`, column `i`).
pub fn leakage(ts: &TransceiverSet, channels: &[CMat], weights: &[f64], k: usize) -> f64 {
    let mut total = 0.0;
    for j in 0..k {
        for i in 0..k {
            let w = weights[j * k + i];
            if i == j || w == 0.0 {
                continue;
            }
            total +=
                w * linalg::frob_norm_sq(&(ts.u[j].adjoint() * &channels[j * k + i] * &ts.v[i]));
        }
    }
    total
}

fn check_inputs(channels: &[CMat], weights: &[f64], dims: &SystemDims) -> Result<()> {
    dims.validate()?;
    let kk = dims.k * dims.k;
    if channels.len() != kk || weights.len() != kk {
        return Err(Error::DimensionMismatch(format!(
            "expected {kk} channels and weights, got {} and {}",
            channels.len(),
            weights.len()
        )));
    }
    for (idx, h) in channels.iter().enumerate() {
        if h.shape() != (dims.nr, dims.nt) {
            return Err(Error::DimensionMismatch(format!(
                "channel {idx} is {}x{}, expected {}x{}",
                h.nrows(),
                h.ncols(),
                dims.nr,
                dims.nt
            )));
        }
    }
    if weights.iter().any(|w| w.is_nan() || *w < 0.0) {
        return Err(Error::InvalidConfig(
            "IA weights must be nonnegative".into(),
        ));
    }
    Ok(())
}

/// Best of `restart_count` random initializations. Initialization `r` draws
/// from the substream `(init_seed, [r], "ia-init")`. Restarts stop early once
/// one initialization converges.
pub fn compute_ia(
    channels: &[CMat],
    weights: &[f64],
    dims: &SystemDims,
    opts: &IaOptions,
) -> Result<IaOutcome> {
    check_inputs(channels, weights, dims)?;
    opts.validate()?;
    let mut best: Option<IaOutcome> = None;
    for r in 0..opts.restart_count {
        let mut rng = substream(opts.init_seed, &[r as u64], "ia-init");
        let init = random_transceivers(dims, &mut rng);
        let out = iterate(channels, weights, dims, opts, init.v);
        let done = out.converged;
        if best.as_ref().is_none_or(|b| out.leakage < b.leakage) {
            best = Some(out);
        }
        if done {
            break;
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Single run from explicit initial precoders.
pub fn compute_ia_with_init(
    channels: &[CMat],
    weights: &[f64],
    dims: &SystemDims,
    opts: &IaOptions,
    init_v: Vec<CMat>,
) -> Result<IaOutcome> {
    check_inputs(channels, weights, dims)?;
    opts.validate()?;
    if init_v.len() != dims.k || init_v.iter().any(|v| v.shape() != (dims.nt, dims.d)) {
        return Err(Error::DimensionMismatch(
            "initial precoders must be K matrices of Nt x d".into(),
        ));
    }
    Ok(iterate(channels, weights, dims, opts, init_v))
}

fn update_u(channels: &[CMat], weights: &[f64], dims: &SystemDims, v: &[CMat]) -> Vec<CMat> {
    let k = dims.k;
    (0..k)
        .map(|j| {
            let mut q = CMat::zeros(dims.nr, dims.nr);
            for i in (0..k).filter(|&i| i != j) {
                let w = weights[j * k + i];
                if w == 0.0 {
                    continue;
                }
                let a = &channels[j * k + i] * &v[i];
                q += (&a * a.adjoint()) * linalg::c(w, 0.0);
            }
            linalg::smallest_eigvecs(&q, dims.d)
        })
        .collect()
}

fn update_v(channels: &[CMat], weights: &[f64], dims: &SystemDims, u: &[CMat]) -> Vec<CMat> {
    let k = dims.k;
    (0..k)
        .map(|i| {
            let mut q = CMat::zeros(dims.nt, dims.nt);
            for j in (0..k).filter(|&j| j != i) {
                let w = weights[j * k + i];
                if w == 0.0 {
                    continue;
                }
                let a = channels[j * k + i].adjoint() * &u[j];
                q += (&a * a.adjoint()) * linalg::c(w, 0.0);
            }
            linalg::smallest_eigvecs(&q, dims.d)
        })
        .collect()
}

/// Orthonormal basis of the complement of the column span of `m`.
fn complement(m: &CMat) -> CMat {
    let n = m.nrows();
    let (_, vecs) = linalg::hermitian_eig(&(m * m.adjoint()));
    vecs.columns(0, n - m.ncols()).clone_owned()
}

/// Weighted leakage blocks `U_jᴴ H_ji V_i` linearized in the tangent
/// coordinates `U_j + U_j⊥ Aᴴ`, `V_i + V_i⊥ B`.
struct Linearization {
    jac: CMat,
    rhs: CVec,
    u_perp: Vec<CMat>,
    v_perp: Vec<CMat>,
}

fn linearize(
    channels: &[CMat],
    weights: &[f64],
    dims: &SystemDims,
    ts: &TransceiverSet,
) -> Option<Linearization> {
    let (k, d, nr, nt) = (dims.k, dims.d, dims.nr, dims.nt);
    let a_len = d * (nr - d);
    let b_len = (nt - d) * d;
    let cols = k * (a_len + b_len);
    if cols == 0 {
        return None;
    }
    let u_perp: Vec<CMat> = ts.u.iter().map(complement).collect();
    let v_perp: Vec<CMat> = ts.v.iter().map(complement).collect();
    let blocks: Vec<(usize, usize)> = (0..k)
        .flat_map(|j| (0..k).map(move |i| (j, i)))
        .filter(|&(j, i)| i != j && weights[j * k + i] > 0.0)
        .collect();
    let rows = blocks.len() * d * d;
    let mut jac = CMat::zeros(rows, cols);
    let mut rhs = CVec::zeros(rows);
    for (b, &(j, i)) in blocks.iter().enumerate() {
        let h = &channels[j * k + i];
        let s = linalg::c(weights[j * k + i].sqrt(), 0.0);
        let hv = h * &ts.v[i];
        let e = ts.u[j].adjoint() * &hv;
        let g = u_perp[j].adjoint() * &hv;
        let f = ts.u[j].adjoint() * h * &v_perp[i];
        let r0 = b * d * d;
        // vec(A G) = (Gᵀ ⊗ I_d) vec(A)
        let ja = linalg::kron(&g.transpose(), &linalg::identity(d)) * s;
        jac.view_mut((r0, j * a_len), (d * d, a_len)).copy_from(&ja);
        // vec(F B) = (I_d ⊗ F) vec(B)
        let jb = linalg::kron(&linalg::identity(d), &f) * s;
        jac.view_mut((r0, k * a_len + i * b_len), (d * d, b_len))
            .copy_from(&jb);
        for (n, z) in e.iter().enumerate() {
            rhs[r0 + n] = -z * s;
        }
    }
    Some(Linearization {
        jac,
        rhs,
        u_perp,
        v_perp,
    })
}

fn apply_step(
    lin: &Linearization,
    dims: &SystemDims,
    ts: &TransceiverSet,
    x: &CVec,
) -> TransceiverSet {
    let (k, d) = (dims.k, dims.d);
    let (ar, bt) = (dims.nr - d, dims.nt - d);
    let a_len = d * ar;
    let b_len = bt * d;
    let u = (0..k)
        .map(|j| {
            let a = linalg::unvec(&x.as_slice()[j * a_len..(j + 1) * a_len], d, ar);
            linalg::orthonormalize(&(&ts.u[j] + &lin.u_perp[j] * a.adjoint()))
        })
        .collect();
    let v = (0..k)
        .map(|i| {
            let off = k * a_len + i * b_len;
            let b = linalg::unvec(&x.as_slice()[off..off + b_len], bt, d);
            linalg::orthonormalize(&(&ts.v[i] + &lin.v_perp[i] * b))
        })
        .collect();
    TransceiverSet { v, u }
}

/// Levenberg–Marquardt step on the weighted leakage. `damping` is relative to
/// the largest squared singular value of the Jacobian and adapts across calls.
/// Returns the improved set only if leakage drops.
fn polish(
    channels: &[CMat],
    weights: &[f64],
    dims: &SystemDims,
    ts: &TransceiverSet,
    current: f64,
    damping: &mut f64,
) -> Option<(TransceiverSet, f64)> {
    let lin = linearize(channels, weights, dims, ts)?;
    let svd = lin.jac.clone().svd(true, true);
    let (u, vt) = (svd.u.as_ref()?, svd.v_t.as_ref()?);
    let coeff = u.adjoint() * &lin.rhs;
    let top = svd.singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
    if top == 0.0 {
        return None;
    }
    for _ in 0..LM_TRIES {
        let mu = *damping * top * top;
        let scaled = CVec::from_iterator(
            coeff.len(),
            coeff
                .iter()
                .zip(svd.singular_values.iter())
                .map(|(c, &s)| c * (s / (s * s + mu))),
        );
        let x = vt.adjoint() * scaled;
        let cand = apply_step(&lin, dims, ts, &x);
        let l = leakage(&cand, channels, weights, dims.k);
        if l < current {
            *damping = (*damping / 3.0).max(LM_MIN_DAMPING);
            return Some((cand, l));
        }
        *damping = (*damping * 4.0).min(LM_MAX_DAMPING);
    }
    None
}

fn iterate(
    channels: &[CMat],
    weights: &[f64],
    dims: &SystemDims,
    opts: &IaOptions,
    init_v: Vec<CMat>,
) -> IaOutcome {
    let k = dims.k;
    let u = update_u(channels, weights, dims, &init_v);
    let mut ts = TransceiverSet { v: init_v, u };
    let initial = leakage(&ts, channels, weights, k);
    let mut trace = vec![initial];
    let mut current = initial;
    let mut iterations = 0;
    let target = opts.leakage_tol * initial;
    // Damped Gauss–Newton attempts back off exponentially after failures.
    let mut next_polish = POLISH_WARMUP;
    let mut backoff = 1;
    let mut damping = LM_INIT_DAMPING;
    while iterations < opts.max_iters && current > target && current > 0.0 {
        let v = update_v(channels, weights, dims, &ts.u);
        let u = update_u(channels, weights, dims, &v);
        ts = TransceiverSet { v, u };
        let mut next = leakage(&ts, channels, weights, k);
        iterations += 1;
        if iterations >= next_polish && next > target {
            match polish(channels, weights, dims, &ts, next, &mut damping) {
                Some((better, l)) => {
                    ts = better;
                    next = l;
                    backoff = 1;
                    next_polish = iterations + 1;
                }
                None => {
                    backoff = (backoff * 2).min(64);
                    next_polish = iterations + backoff;
                }
            }
        }
        trace.push(next);
        let change = (current - next).abs() / current.max(1e-30);
        current = next;
        if change < opts.leakage_tol {
            break;
        }
    }
    IaOutcome {
        transceivers: ts,
        leakage: current,
        initial_leakage: initial,
        iterations,
        converged: current <= target || current == 0.0,
        trace,
    }
}
