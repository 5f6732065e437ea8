//! Distortion coefficient of a correlated link and the high-resolution
//! distortion bound `β · 2^{−B/(MʳMᵗ−1)}`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::stats::Running;
use crate::topology::LinkStats;

pub const DEFAULT_BETA_SAMPLES: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Monte Carlo estimate of `β` from the correlation matrices.
pub fn distortion_coefficient_beta<R: Rng + ?Sized>(
    phi_r: &CMat,
    phi_t: &CMat,
    n_samples: usize,
    rng: &mut R,
) -> Result<BetaEstimate> {
    let stats = LinkStats::new(phi_r.clone(), phi_t.clone(), 1.0)?;
    beta_for_link(&stats, n_samples, rng)
}

/// As [`distortion_coefficient_beta`], from validated link statistics.
pub fn beta_for_link<R: Rng + ?Sized>(
    stats: &LinkStats,
    n_samples: usize,
    rng: &mut R,
) -> Result<BetaEstimate> {
    let (lam, sig) = stats.nonzero_eigenvalues();
    beta_from_eigenvalues(&lam, &sig, stats.nr() * stats.nt(), n_samples, rng)
}

/// `β = (Π λσ)^{k₁}/(2t) · E{(Σy / Σλσy)^{k₂} · Σ λσ(NrNt − λσ) y}` with
/// `t = MʳMᵗ`, `k₁ = 1/(t−1)`, `k₂ = (2t−1)/(t−1)` and `y` i.i.d. chi-square
/// with two degrees of freedom.
pub fn beta_from_eigenvalues<R: Rng + ?Sized>(
    lam: &[f64],
    sig: &[f64],
    full_dim: usize,
    n_samples: usize,
    rng: &mut R,
) -> Result<BetaEstimate> {
    let prods: Vec<f64> = lam
        .iter()
        .flat_map(|l| sig.iter().map(move |s| l * s))
        .collect();
    let t = prods.len();
    if t < 2 {
        return Err(Error::RankOne);
    }
    if n_samples < 2 {
        return Err(Error::InvalidConfig(
            "beta needs at least two samples".into(),
        ));
    }
    let tf = t as f64;
    let k1 = 1.0 / (tf - 1.0);
    let k2 = (2.0 * tf - 1.0) / (tf - 1.0);
    let nn = full_dim as f64;
    let log_prefactor = k1 * prods.iter().map(|p| p.ln()).sum::<f64>() - (2.0 * tf).ln();
    let mut acc = Running::new();
    let mut y = vec![0.0; t];
    for _ in 0..n_samples {
        for yk in y.iter_mut() {
            let e: f64 = Exp1.sample(rng);
            *yk = 2.0 * e;
        }
        let sum_y: f64 = y.iter().sum();
        let sum_py: f64 = prods.iter().zip(&y).map(|(p, yk)| p * yk).sum();
        let weighted: f64 = prods.iter().zip(&y).map(|(p, yk)| p * (nn - p) * yk).sum();
        acc.push((k2 * (sum_y / sum_py).ln() + log_prefactor).exp() * weighted);
    }
    Ok(BetaEstimate {
        value: acc.mean(),
        std_error: acc.std_error(),
    })
}

/// Exact value for uncorrelated links, `Nr·Nt − 1`.
pub fn beta_uncorrelated(nr: usize, nt: usize) -> f64 {
    (nr * nt) as f64 - 1.0
}

/// `β · 2^{−bits/(MʳMᵗ−1)}`.
pub fn distortion_bound(beta: f64, m_r: usize, m_t: usize, bits: u32) -> Result<f64> {
    let t = m_r * m_t;
    if t < 2 {
        return Err(Error::RankOne);
    }
    Ok(beta * (-(bits as f64) / (t as f64 - 1.0)).exp2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, identity};
    use crate::rng::substream;

    #[test]
    fn iid_beta_is_nrnt_minus_one() {
        for (nr, nt) in [(2, 3), (2, 2)] {
            let est = distortion_coefficient_beta(
                &identity(nr),
                &identity(nt),
                20_000,
                &mut substream(1, &[], "b"),
            )
            .unwrap();
            let target = beta_uncorrelated(nr, nt);
            assert!(
                (est.value - target).abs() <= 3.0 * est.std_error + 1e-9,
                "{est:?}"
            );
        }
    }

    #[test]
    fn toy_beta_reproducible_across_seeds() {
        let phi_t = diag(&[2.8, 0.1, 0.1]);
        let a =
            distortion_coefficient_beta(&identity(2), &phi_t, 20_000, &mut substream(1, &[], "b"))
                .unwrap();
        let b =
            distortion_coefficient_beta(&identity(2), &phi_t, 20_000, &mut substream(2, &[], "b"))
                .unwrap();
        let joint = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.value - b.value).abs() <= 3.0 * joint, "{a:?} {b:?}");
        assert!(a.value > 0.0);
    }

    #[test]
    fn rank_one_is_rejected() {
        let r = distortion_coefficient_beta(
            &diag(&[2.0, 0.0]),
            &diag(&[3.0, 0.0, 0.0]),
            100,
            &mut substream(1, &[], "b"),
        );
        assert!(matches!(r, Err(Error::RankOne)));
        assert!(matches!(
            distortion_bound(5.0, 1, 1, 3),
            Err(Error::RankOne)
        ));
    }

    #[test]
    fn bound_arithmetic() {
        assert!((distortion_bound(5.0, 2, 3, 5).unwrap() - 2.5).abs() < 1e-15);
        assert_eq!(distortion_bound(5.0, 2, 3, 0).unwrap(), 5.0);
        assert!((distortion_bound(5.0, 2, 3, 15).unwrap() - 0.625).abs() < 1e-15);
    }
}
