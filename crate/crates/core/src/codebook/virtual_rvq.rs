//! Direct sampling of the winning codeword of a fresh random codebook.
//!
//! For `N` isotropic unit codewords in `ℂⁿ` and a target direction `v`, the
//! best squared alignment `x` satisfies `P(1 − x ≤ s) = 1 − (1 − s^{n−1})^N`,
//! and the winner's residual direction is uniform on the unit sphere of `v^⊥`.
//! Both facts let us draw the winner exactly without listing `N` words.
//!
//! A spatially shaped codebook has words distributed as an angular central
//! Gaussian with shape `τ` in the correlation eigenbasis. At high resolution
//! the nearest word around `v` behaves like an isotropic codebook with
//! `N·ρ(v)` words, where `ρ` is that density relative to uniform:
//! `ln ρ(v) = −Σ ln τ_k − n·ln Σ |v_k|²/τ_k`.

use num_complex::Complex64;
use rand::Rng;

use super::QuantizationResult;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::rng::complex_gaussian_vector;
use crate::topology::LinkStats;

#[derive(Clone, Debug)]
enum Shape {
    Isotropic { nr: usize, nt: usize },
    Spatial { f_r: CMat, f_t: CMat, tau: Vec<f64> },
}

/// Sampler for the quantization outcome of a never-materialized random
/// codebook of arbitrary size.
#[derive(Clone, Debug)]
pub struct VirtualRvq {
    shape: Shape,
}

impl VirtualRvq {
    /// Unshaped (base) codebook words.
    pub fn isotropic(nr: usize, nt: usize) -> Self {
        VirtualRvq {
            shape: Shape::Isotropic { nr, nt },
        }
    }

    /// Words shaped by the link's correlations, restricted to their support.
    pub fn spatial(stats: &LinkStats) -> Self {
        let (m_r, m_t) = (stats.m_r(), stats.m_t());
        let (sr, st) = (stats.spectrum_r(), stats.spectrum_t());
        let f_r = sr.vectors.columns(stats.nr() - m_r, m_r).clone_owned();
        let f_t = st.vectors.columns(stats.nt() - m_t, m_t).clone_owned();
        let (lam, sig) = stats.nonzero_eigenvalues();
        let tau = sig
            .iter()
            .flat_map(|s| lam.iter().map(move |l| l * s))
            .collect();
        VirtualRvq {
            shape: Shape::Spatial { f_r, f_t, tau },
        }
    }

    /// Quantize `h` against a fresh `2^bits`-word codebook.
    pub fn quantize<R: Rng + ?Sized>(
        &self,
        h: &CMat,
        bits: u32,
        rng: &mut R,
    ) -> Result<QuantizationResult> {
        if linalg::frob_norm_sq(h) == 0.0 {
            return Err(Error::ZeroInput);
        }
        let ln_words = bits as f64 * std::f64::consts::LN_2;
        match &self.shape {
            Shape::Isotropic { nr, nt } => {
                if h.shape() != (*nr, *nt) {
                    return Err(Error::DimensionMismatch(
                        "channel shape differs from codebook".into(),
                    ));
                }
                let v = linalg::vec_of(h);
                let v = &v / Complex64::new(v.norm(), 0.0);
                let w = winner(&v, ln_words, rng);
                Ok(QuantizationResult::from_codeword(
                    h,
                    linalg::unvec(w.as_slice(), *nr, *nt),
                    None,
                ))
            }
            Shape::Spatial { f_r, f_t, tau } => {
                if h.shape() != (f_r.nrows(), f_t.nrows()) {
                    return Err(Error::DimensionMismatch(
                        "channel shape differs from codebook".into(),
                    ));
                }
                let (m_r, m_t) = (f_r.ncols(), f_t.ncols());
                let e = f_r.adjoint() * h * f_t;
                let v = linalg::vec_of(&e);
                let norm = v.norm();
                if norm == 0.0 {
                    // Channel orthogonal to the codebook support: every word is equally bad.
                    let w = f_r.column(m_r - 1) * f_t.column(m_t - 1).adjoint();
                    return Ok(QuantizationResult::from_codeword(h, w, None));
                }
                let v = &v / Complex64::new(norm, 0.0);
                let n = tau.len() as f64;
                let log_density = -tau.iter().map(|t| t.ln()).sum::<f64>()
                    - n * v
                        .iter()
                        .zip(tau)
                        .map(|(z, t)| z.norm_sqr() / t)
                        .sum::<f64>()
                        .ln();
                // Normalize so that the density integrates to one for any overall scale of τ.
                let mean_tau = tau.iter().sum::<f64>() / n;
                let log_density = log_density + n * mean_tau.ln();
                let w = winner(&v, ln_words + log_density, rng);
                let w = f_r * linalg::unvec(w.as_slice(), m_r, m_t) * f_t.adjoint();
                let wn = linalg::frob_norm(&w);
                Ok(QuantizationResult::from_codeword(
                    h,
                    w / Complex64::new(wn, 0.0),
                    None,
                ))
            }
        }
    }
}

/// Best of `exp(ln_words)` isotropic unit vectors around unit `v`.
fn winner<R: Rng + ?Sized>(v: &CVec, ln_words: f64, rng: &mut R) -> CVec {
    let n = v.len();
    if n == 1 {
        return v.clone();
    }
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let words = ln_words.exp();
    // 1 − u^{1/N}, accurate for huge N.
    let tail = if words.is_finite() {
        -(u.ln() / words).exp_m1()
    } else {
        0.0
    };
    let s = tail.powf(1.0 / (n as f64 - 1.0)).clamp(0.0, 1.0);
    let mut z = complex_gaussian_vector(rng, n);
    let proj = v.dotc(&z);
    z -= v * proj;
    let zn = z.norm();
    let z = z / Complex64::new(zn, 0.0);
    v * Complex64::new((1.0 - s).sqrt(), 0.0) + z * Complex64::new(s.sqrt(), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{gen_base_codebook, rvq_expected_distortion, transform_codebook};
    use crate::linalg::{diag, identity};
    use crate::rng::{complex_gaussian_matrix, substream};
    use crate::stats::{Running, Z99};
    use crate::topology::LinkStats;

    #[test]
    fn isotropic_matches_closed_form() {
        let q = VirtualRvq::isotropic(2, 3);
        let mut rng = substream(3, &[], "virt");
        for bits in [4, 10, 20] {
            let r: Running = (0..20_000)
                .map(|_| {
                    q.quantize(&complex_gaussian_matrix(&mut rng, 2, 3), bits, &mut rng)
                        .unwrap()
                        .distortion
                })
                .collect();
            let exact = rvq_expected_distortion(2, 3, bits);
            assert!(
                (r.mean() - exact).abs() < r.half_width(Z99) + 1e-3 * exact,
                "{bits}: {} vs {exact}",
                r.mean()
            );
        }
    }

    #[test]
    fn output_is_consistent_quantization() {
        let stats = LinkStats::new(identity(2), diag(&[2.8, 0.1, 0.1]), 1.0).unwrap();
        let q = VirtualRvq::spatial(&stats);
        let mut rng = substream(4, &[], "virt");
        for _ in 0..50 {
            let h = stats.sqrt_r() * complex_gaussian_matrix(&mut rng, 2, 3) * stats.sqrt_t();
            let r = q.quantize(&h, 30, &mut rng).unwrap();
            assert!((linalg::frob_norm(&r.h_hat) - 1.0).abs() < 1e-12);
            assert!(linalg::inner(&r.delta_h, &r.h_hat).norm() < 1e-10);
        }
    }

    #[test]
    fn spatial_sampler_tracks_materialized_codebook() {
        // Compare against real transformed codebooks at the same size.
        let stats = LinkStats::new(identity(2), diag(&[2.8, 0.1, 0.1]), 1.0).unwrap();
        let q = VirtualRvq::spatial(&stats);
        let bits = 12;
        let mut rng = substream(5, &[], "virt-vs-real");
        let mut virt = Running::new();
        let mut real = Running::new();
        for t in 0..1500 {
            let h = stats.sqrt_r() * complex_gaussian_matrix(&mut rng, 2, 3) * stats.sqrt_t();
            virt.push(q.quantize(&h, bits, &mut rng).unwrap().distortion);
            let base = gen_base_codebook(2, 3, bits, 77 + t).unwrap();
            let cb = transform_codebook(&base, stats.phi_r(), stats.phi_t()).unwrap();
            real.push(cb.quantize(&h).unwrap().distortion);
        }
        let tol = virt.half_width(Z99) + real.half_width(Z99);
        assert!(
            (virt.mean() - real.mean()).abs() < tol + 0.05 * real.mean(),
            "{} vs {}",
            virt.mean(),
            real.mean()
        );
    }
}
