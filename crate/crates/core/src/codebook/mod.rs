//! Random-vector-quantization codebooks, spatial transformation and the
//! nearest-direction quantizer.
//!
//! Base codebooks are nested: the `2^B`-word book is a prefix of the
//! `2^(B+1)`-word book drawn from the same seed. A spatial codebook shapes
//! every base word by the link's correlation, `W ∝ (Φʳ)^{1/2} S (Φᵗ)^{1/2}`.
//!
//! Codebooks too large to materialize are handled by [`VirtualRvq`], which
//! samples the winning codeword of a fresh random codebook directly.

mod beta;
mod virtual_rvq;

pub use beta::{
    beta_for_link, beta_from_eigenvalues, beta_uncorrelated, distortion_bound,
    distortion_coefficient_beta, BetaEstimate, DEFAULT_BETA_SAMPLES,
};
pub use virtual_rvq::VirtualRvq;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::rng::{complex_gaussian_matrix, substream};
use crate::topology::{matrix_from_doc, matrix_to_doc, MatrixDoc};

/// Default cap on materialized codebook size.
pub const DEFAULT_WORD_CAP: usize = 1 << 24;
const DEGENERATE_NORM: f64 = 1e-12;
const MAX_REGENERATIONS: u64 = 64;

#[derive(Clone, Debug)]
pub struct BaseCodebook {
    nr: usize,
    nt: usize,
    bits: u32,
    seed: u64,
    words: Vec<CMat>,
}

/// `2^bits` unit-norm i.i.d. Gaussian directions drawn in order from
/// the stream `(seed, "base-codebook")`.
pub fn gen_base_codebook(nr: usize, nt: usize, bits: u32, seed: u64) -> Result<BaseCodebook> {
    gen_base_codebook_capped(nr, nt, bits, seed, DEFAULT_WORD_CAP)
}

pub fn gen_base_codebook_capped(
    nr: usize,
    nt: usize,
    bits: u32,
    seed: u64,
    cap: usize,
) -> Result<BaseCodebook> {
    if nr == 0 || nt == 0 {
        return Err(Error::InvalidDims(
            "codebook dimensions must be positive".into(),
        ));
    }
    let size = 1usize
        .checked_shl(bits)
        .filter(|&n| bits < usize::BITS && n <= cap);
    let size = size.ok_or(Error::BudgetTooLarge { bits, cap })?;
    let mut rng = substream(seed, &[], "base-codebook");
    let words = (0..size)
        .map(|_| {
            let g = complex_gaussian_matrix(&mut rng, nr, nt);
            let n = linalg::frob_norm(&g);
            g / Complex64::new(n, 0.0)
        })
        .collect();
    Ok(BaseCodebook {
        nr,
        nt,
        bits,
        seed,
        words,
    })
}

impl BaseCodebook {
    pub fn words(&self) -> &[CMat] {
        &self.words
    }
    pub fn bits(&self) -> u32 {
        self.bits
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn shape(&self) -> (usize, usize) {
        (self.nr, self.nt)
    }
    pub fn len(&self) -> usize {
        self.words.len()
    }
    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// The nested sub-codebook of `bits` bits.
    pub fn prefix(&self, bits: u32) -> Option<BaseCodebook> {
        (bits <= self.bits).then(|| BaseCodebook {
            nr: self.nr,
            nt: self.nt,
            bits,
            seed: self.seed,
            words: self.words[..1 << bits].to_vec(),
        })
    }

    pub fn quantize(&self, h: &CMat) -> Result<QuantizationResult> {
        quantize_words(h, &self.words)
    }

    /// Replacement base word for index `l`, attempt `attempt`.
    fn regenerate(&self, l: usize, attempt: u64) -> CMat {
        let mut rng = substream(self.seed, &[l as u64, attempt], "base-codebook-regen");
        let g = complex_gaussian_matrix(&mut rng, self.nr, self.nt);
        let n = linalg::frob_norm(&g);
        g / Complex64::new(n, 0.0)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = CodebookDoc {
            nr: self.nr,
            nt: self.nt,
            bits: self.bits,
            seed: self.seed,
            transform: TransformDoc::Identity,
            words: self.words.iter().map(matrix_to_doc).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }
}

/// Base codebook shaped by a link's correlation matrices.
#[derive(Clone, Debug)]
pub struct SpatialCodebook {
    bits: u32,
    base_seed: u64,
    phi_r: CMat,
    phi_t: CMat,
    words: Vec<CMat>,
}

/// `W^l = (Φʳ)^{1/2} S^l (Φᵗ)^{1/2} / ‖·‖`. A base word whose image falls
/// below `1e-12` in norm is replaced from a dedicated regeneration stream.
pub fn transform_codebook(
    base: &BaseCodebook,
    phi_r: &CMat,
    phi_t: &CMat,
) -> Result<SpatialCodebook> {
    if phi_r.shape() != (base.nr, base.nr) || phi_t.shape() != (base.nt, base.nt) {
        return Err(Error::DimensionMismatch(
            "correlation sizes do not match codebook".into(),
        ));
    }
    let sqrt_or_identity = |m: &CMat| -> Result<Option<CMat>> {
        if linalg::max_abs_diff(m, &linalg::identity(m.nrows())) == 0.0 {
            Ok(None)
        } else {
            linalg::matrix_sqrt_psd(m).map(Some)
        }
    };
    let sr = sqrt_or_identity(phi_r)?;
    let st = sqrt_or_identity(phi_t)?;
    let shape = |s: &CMat| -> CMat {
        match (&sr, &st) {
            (None, None) => s.clone(),
            (Some(r), None) => r * s,
            (None, Some(t)) => s * t,
            (Some(r), Some(t)) => r * s * t,
        }
    };
    let words = base
        .words
        .iter()
        .enumerate()
        .map(|(l, s)| {
            let mut w = shape(s);
            let mut attempt = 0;
            while linalg::frob_norm(&w) < DEGENERATE_NORM {
                if attempt == MAX_REGENERATIONS {
                    return Err(Error::DegenerateCodeword(l));
                }
                w = shape(&base.regenerate(l, attempt));
                attempt += 1;
            }
            if sr.is_none() && st.is_none() {
                return Ok(w);
            }
            let n = linalg::frob_norm(&w);
            Ok(w / Complex64::new(n, 0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpatialCodebook {
        bits: base.bits,
        base_seed: base.seed,
        phi_r: phi_r.clone(),
        phi_t: phi_t.clone(),
        words,
    })
}

impl SpatialCodebook {
    pub fn words(&self) -> &[CMat] {
        &self.words
    }
    pub fn bits(&self) -> u32 {
        self.bits
    }
    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }
    pub fn phi_r(&self) -> &CMat {
        &self.phi_r
    }
    pub fn phi_t(&self) -> &CMat {
        &self.phi_t
    }
    pub fn len(&self) -> usize {
        self.words.len()
    }
    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn quantize(&self, h: &CMat) -> Result<QuantizationResult> {
        quantize_words(h, &self.words)
    }

    pub fn to_json(&self) -> Result<String> {
        let (nr, nt) = self.words[0].shape();
        let doc = CodebookDoc {
            nr,
            nt,
            bits: self.bits,
            seed: self.base_seed,
            transform: TransformDoc::Spatial {
                phi_r: matrix_to_doc(&self.phi_r),
                phi_t: matrix_to_doc(&self.phi_t),
            },
            words: self.words.iter().map(matrix_to_doc).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }
}

/// Either kind of codebook, as read back from its text form.
#[derive(Clone, Debug)]
pub enum StoredCodebook {
    Base(BaseCodebook),
    Spatial(SpatialCodebook),
}

impl StoredCodebook {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CodebookDoc = serde_json::from_str(text)?;
        let words = doc
            .words
            .iter()
            .map(matrix_from_doc)
            .collect::<Result<Vec<_>>>()?;
        if words.len() != 1usize << doc.bits || words.iter().any(|w| w.shape() != (doc.nr, doc.nt))
        {
            return Err(Error::Parse(
                "codebook header does not match its words".into(),
            ));
        }
        Ok(match doc.transform {
            TransformDoc::Identity => StoredCodebook::Base(BaseCodebook {
                nr: doc.nr,
                nt: doc.nt,
                bits: doc.bits,
                seed: doc.seed,
                words,
            }),
            TransformDoc::Spatial { phi_r, phi_t } => StoredCodebook::Spatial(SpatialCodebook {
                bits: doc.bits,
                base_seed: doc.seed,
                phi_r: matrix_from_doc(&phi_r)?,
                phi_t: matrix_from_doc(&phi_t)?,
                words,
            }),
        })
    }

    pub fn words(&self) -> &[CMat] {
        match self {
            StoredCodebook::Base(b) => b.words(),
            StoredCodebook::Spatial(s) => s.words(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TransformDoc {
    Identity,
    Spatial { phi_r: MatrixDoc, phi_t: MatrixDoc },
}

#[derive(Serialize, Deserialize)]
struct CodebookDoc {
    nr: usize,
    nt: usize,
    bits: u32,
    seed: u64,
    transform: TransformDoc,
    words: Vec<MatrixDoc>,
}

/// Outcome of quantizing one channel matrix.
#[derive(Clone, Debug)]
pub struct QuantizationResult {
    /// Selected codeword id; `None` for virtual codebooks.
    pub index: Option<usize>,
    /// Unit-norm selected codeword `Ĥ`.
    pub h_hat: CMat,
    /// `⟨Ĥ, H⟩`.
    pub alpha: Complex64,
    /// `H − α Ĥ`, orthogonal to `Ĥ`.
    pub delta_h: CMat,
    /// `‖ΔH‖²`.
    pub distortion: f64,
}

impl QuantizationResult {
    pub(crate) fn from_codeword(h: &CMat, h_hat: CMat, index: Option<usize>) -> Self {
        let alpha = linalg::inner(&h_hat, h);
        let delta_h = h - &h_hat * alpha;
        let distortion = linalg::frob_norm_sq(&delta_h);
        QuantizationResult {
            index,
            h_hat,
            alpha,
            delta_h,
            distortion,
        }
    }
}

/// `argmax_l |⟨vec h, vec W^l⟩|`, lowest index on ties.
pub fn quantize_words(h: &CMat, words: &[CMat]) -> Result<QuantizationResult> {
    let first = words
        .first()
        .ok_or_else(|| Error::InvalidConfig("empty codebook".into()))?;
    if first.shape() != h.shape() {
        return Err(Error::DimensionMismatch(
            "codeword and channel shapes differ".into(),
        ));
    }
    if linalg::frob_norm_sq(h) == 0.0 {
        return Err(Error::ZeroInput);
    }
    let hs = h.as_slice();
    let mut best = 0;
    let mut best_gain = -1.0;
    for (l, w) in words.iter().enumerate() {
        let ip: Complex64 = w.as_slice().iter().zip(hs).map(|(a, b)| a.conj() * b).sum();
        let gain = ip.norm_sqr();
        if gain > best_gain {
            best_gain = gain;
            best = l;
        }
    }
    Ok(QuantizationResult::from_codeword(
        h,
        words[best].clone(),
        Some(best),
    ))
}

/// Expected distortion `E‖ΔH‖²` of an i.i.d. `nr×nt` Rayleigh channel quantized
/// by a fresh `2^bits`-word random codebook:
/// `n · Γ(1+1/(n−1)) Γ(N+1) / Γ(N+1+1/(n−1))` with `n = nr·nt`, `N = 2^bits`.
pub fn rvq_expected_distortion(nr: usize, nt: usize, bits: u32) -> f64 {
    let n = (nr * nt) as f64;
    if nr * nt == 1 {
        return 0.0;
    }
    let a = 1.0 / (n - 1.0);
    let big_n = 2f64.powi(bits as i32);
    n * (ln_gamma(1.0 + a) + ln_gamma(big_n + 1.0) - ln_gamma(big_n + 1.0 + a)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, identity};
    use crate::rng::{complex_gaussian_matrix, substream};

    #[test]
    fn zero_bits_gives_one_unit_word() {
        let cb = gen_base_codebook(2, 3, 0, 1).unwrap();
        assert_eq!(cb.len(), 1);
        assert!((linalg::frob_norm(&cb.words()[0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sixteen_distinct_unit_words() {
        let cb = gen_base_codebook(2, 3, 4, 1).unwrap();
        assert_eq!(cb.len(), 16);
        for (a, wa) in cb.words().iter().enumerate() {
            assert!((linalg::frob_norm(wa) - 1.0).abs() < 1e-12);
            for wb in &cb.words()[a + 1..] {
                assert!(linalg::max_abs_diff(wa, wb) > 1e-6);
            }
        }
    }

    #[test]
    fn codebooks_are_nested_and_capped() {
        let big = gen_base_codebook(2, 3, 6, 9).unwrap();
        let small = gen_base_codebook(2, 3, 4, 9).unwrap();
        for (a, b) in small.words().iter().zip(big.words()) {
            assert_eq!(a, b);
        }
        assert!(matches!(
            gen_base_codebook_capped(2, 3, 10, 0, 512),
            Err(Error::BudgetTooLarge { .. })
        ));
    }

    #[test]
    fn isotropic_mean_squared_inner_product() {
        let cb = gen_base_codebook(1, 2, 10, 4).unwrap();
        let w = cb.words();
        let mut acc = 0.0;
        let mut count = 0usize;
        for a in 0..w.len() {
            for b in a + 1..w.len() {
                acc += linalg::inner(&w[a], &w[b]).norm_sqr();
                count += 1;
            }
        }
        let mean = acc / count as f64;
        assert!((mean - 0.5).abs() < 0.025, "{mean}");
    }

    #[test]
    fn identity_transform_keeps_words() {
        let base = gen_base_codebook(2, 3, 5, 2).unwrap();
        let sp = transform_codebook(&base, &identity(2), &identity(3)).unwrap();
        for (a, b) in base.words().iter().zip(sp.words()) {
            assert!(linalg::max_abs_diff(a, b) < 1e-12);
        }
    }

    #[test]
    fn toy_transform_matches_scaled_direction() {
        let base = gen_base_codebook(2, 3, 5, 2).unwrap();
        let sp = transform_codebook(&base, &identity(2), &diag(&[2.8, 0.1, 0.1])).unwrap();
        let scale = diag(&[28f64.sqrt(), 28f64.sqrt(), 1.0, 1.0, 1.0, 1.0]);
        for (s, w) in base.words().iter().zip(sp.words()) {
            let v = &scale * linalg::vec_of(s);
            let v = &v / Complex64::new(v.norm(), 0.0);
            assert!((v - linalg::vec_of(w)).norm() < 1e-12);
            assert!((linalg::frob_norm(w) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_one_transform_annihilates_columns() {
        let base = gen_base_codebook(2, 3, 4, 3).unwrap();
        let sp = transform_codebook(&base, &identity(2), &diag(&[3.0, 0.0, 0.0])).unwrap();
        for w in sp.words() {
            for r in 0..2 {
                assert!(w[(r, 1)].norm() < 1e-15 && w[(r, 2)].norm() < 1e-15);
            }
        }
    }

    #[test]
    fn degenerate_words_are_regenerated() {
        // A base word living only in column 0 is annihilated by diag(0, 1.5, 1.5).
        let mut base = gen_base_codebook(2, 3, 2, 3).unwrap();
        let mut bad = CMat::zeros(2, 3);
        bad[(0, 0)] = Complex64::new(1.0, 0.0);
        base.words[1] = bad;
        let sp = transform_codebook(&base, &identity(2), &diag(&[0.0, 1.5, 1.5])).unwrap();
        assert!((linalg::frob_norm(&sp.words()[1]) - 1.0).abs() < 1e-12);
        assert_eq!(sp.words()[1].column(0).norm(), 0.0);
    }

    #[test]
    fn exact_codeword_is_recovered() {
        let cb = gen_base_codebook(2, 3, 6, 5).unwrap();
        let h = &cb.words()[17] * Complex64::new(5.0, 0.0);
        let q = cb.quantize(&h).unwrap();
        assert_eq!(q.index, Some(17));
        assert!(q.distortion < 1e-20);
        assert!((q.alpha - Complex64::new(5.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn quantizer_is_scale_invariant_and_splits_energy() {
        let cb = gen_base_codebook(2, 3, 8, 6).unwrap();
        let mut rng = substream(1, &[], "q");
        for _ in 0..50 {
            let h = complex_gaussian_matrix(&mut rng, 2, 3);
            let a = cb.quantize(&h).unwrap();
            let b = cb.quantize(&(&h * Complex64::new(2.0, 0.0))).unwrap();
            assert_eq!(a.index, b.index);
            assert!(linalg::inner(&a.delta_h, &a.h_hat).norm() < 1e-10);
            assert!((linalg::frob_norm_sq(&h) - a.alpha.norm_sqr() - a.distortion).abs() < 1e-8);
        }
        assert!(matches!(
            cb.quantize(&CMat::zeros(2, 3)),
            Err(Error::ZeroInput)
        ));
    }

    #[test]
    fn ties_pick_lowest_index() {
        let w = CMat::from_element(1, 2, Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        let words = vec![w.clone() * Complex64::new(0.0, 1.0), w.clone(), w];
        let q =
            quantize_words(&CMat::from_element(1, 2, Complex64::new(1.0, 0.0)), &words).unwrap();
        assert_eq!(q.index, Some(0));
    }

    #[test]
    fn empirical_distortion_matches_rvq_closed_form() {
        // Fresh codebook per draw, so the ensemble mean is the closed form.
        let (nr, nt, bits) = (2, 3, 8);
        let mut rng = substream(8, &[], "iid");
        let n = 2000;
        let mut acc = 0.0;
        for t in 0..n {
            let cb = gen_base_codebook(nr, nt, bits, 1000 + t).unwrap();
            acc += cb
                .quantize(&complex_gaussian_matrix(&mut rng, nr, nt))
                .unwrap()
                .distortion;
        }
        let mean = acc / n as f64;
        let exact = rvq_expected_distortion(nr, nt, bits);
        assert!((mean / exact - 1.0).abs() < 0.05, "{mean} vs {exact}");
    }

    #[test]
    fn json_round_trip() {
        let base = gen_base_codebook(2, 3, 3, 7).unwrap();
        let sp = transform_codebook(&base, &identity(2), &diag(&[2.8, 0.1, 0.1])).unwrap();
        let back = StoredCodebook::from_json(&base.to_json().unwrap()).unwrap();
        assert!(matches!(back, StoredCodebook::Base(_)));
        for (a, b) in back.words().iter().zip(base.words()) {
            assert_eq!(a, b);
        }
        match StoredCodebook::from_json(&sp.to_json().unwrap()).unwrap() {
            StoredCodebook::Spatial(s) => {
                for (a, b) in s.words().iter().zip(sp.words()) {
                    assert!(linalg::max_abs_diff(a, b) == 0.0);
                }
            }
            StoredCodebook::Base(_) => panic!("lost transform"),
        }
    }
}
