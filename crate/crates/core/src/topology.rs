//! Interference topology profiles and Kronecker-correlated channel sampling.
//!
//! A profile holds, for every Tx `i` → Rx `j` link, the receive and transmit
//! correlation matrices and the large-scale gain. Entry `(j, i)` of every
//! `K×K` grid in this crate is the link from Tx `i` to Rx `j`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::rng::complex_gaussian_matrix;

/// Relative eigenvalue threshold below which an eigenvalue counts as zero.
pub const DEFAULT_EPS_RANK: f64 = 1e-9;
/// Path gains below this value are treated as disconnected links.
pub const DEFAULT_GAIN_FLOOR: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDims {
    pub k: usize,
    pub nt: usize,
    pub nr: usize,
    pub d: usize,
}

impl SystemDims {
    pub fn new(k: usize, nt: usize, nr: usize, d: usize) -> Result<Self> {
        let dims = SystemDims { k, nt, nr, d };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidDims(format!(
                "K = {} must be at least 2",
                self.k
            )));
        }
        if self.d == 0 || self.d > self.nt.min(self.nr) {
            return Err(Error::InvalidDims(format!(
                "d = {} must satisfy 1 <= d <= min(Nt, Nr) = {}",
                self.d,
                self.nt.min(self.nr)
            )));
        }
        Ok(())
    }

    /// All cross links `(j, i)` with `i != j`, rows first.
    pub fn cross_links(&self) -> Vec<(usize, usize)> {
        let k = self.k;
        (0..k)
            .flat_map(|j| (0..k).filter(move |&i| i != j).map(move |i| (j, i)))
            .collect()
    }

    pub fn num_cross_links(&self) -> usize {
        self.k * (self.k - 1)
    }
}

/// Eigendecomposition of a correlation matrix, ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

/// Long-term statistics of one link.
#[derive(Clone, Debug)]
pub struct LinkStats {
    phi_r: CMat,
    phi_t: CMat,
    l: f64,
    m_r: usize,
    m_t: usize,
    sqrt_r: CMat,
    sqrt_t: CMat,
    spec_r: Spectrum,
    spec_t: Spectrum,
}

impl LinkStats {
    /// Validate and cache the square roots, spectra and effective ranks.
    pub fn new(phi_r: CMat, phi_t: CMat, l: f64) -> Result<Self> {
        Self::with_eps_rank(phi_r, phi_t, l, DEFAULT_EPS_RANK)
    }

    pub fn with_eps_rank(phi_r: CMat, phi_t: CMat, l: f64, eps_rank: f64) -> Result<Self> {
        if !l.is_finite() || l < 0.0 {
            return Err(Error::InvalidLinkStats(format!(
                "path gain {l} must be finite and >= 0"
            )));
        }
        for (name, phi) in [("receive", &phi_r), ("transmit", &phi_t)] {
            if !phi.is_square() {
                return Err(Error::InvalidLinkStats(format!(
                    "{name} correlation is not square"
                )));
            }
            let n = phi.nrows() as f64;
            let tr = phi.trace();
            if (tr.re - n).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
                return Err(Error::InvalidLinkStats(format!(
                    "{name} correlation trace {} differs from {n}",
                    tr.re
                )));
            }
        }
        let (vr, fr) = linalg::psd_eig(&phi_r)?;
        let (vt, ft) = linalg::psd_eig(&phi_t)?;
        let m_r = count_rank(&vr, eps_rank);
        let m_t = count_rank(&vt, eps_rank);
        let sqrt_r = sqrt_from(&vr, &fr, eps_rank);
        let sqrt_t = sqrt_from(&vt, &ft, eps_rank);
        Ok(LinkStats {
            phi_r,
            phi_t,
            l,
            m_r,
            m_t,
            sqrt_r,
            sqrt_t,
            spec_r: Spectrum {
                values: vr,
                vectors: fr,
            },
            spec_t: Spectrum {
                values: vt,
                vectors: ft,
            },
        })
    }

    /// i.i.d. Rayleigh link with gain `l`.
    pub fn iid(nr: usize, nt: usize, l: f64) -> Self {
        Self::new(linalg::identity(nr), linalg::identity(nt), l)
            .expect("identity statistics are valid")
    }

    pub fn phi_r(&self) -> &CMat {
        &self.phi_r
    }
    pub fn phi_t(&self) -> &CMat {
        &self.phi_t
    }
    pub fn gain(&self) -> f64 {
        self.l
    }
    pub fn m_r(&self) -> usize {
        self.m_r
    }
    pub fn m_t(&self) -> usize {
        self.m_t
    }
    /// `Mʳ·Mᵗ`, the real dimension count of the channel direction support.
    pub fn support_dim(&self) -> usize {
        self.m_r * self.m_t
    }
    pub fn sqrt_r(&self) -> &CMat {
        &self.sqrt_r
    }
    pub fn sqrt_t(&self) -> &CMat {
        &self.sqrt_t
    }
    pub fn spectrum_r(&self) -> &Spectrum {
        &self.spec_r
    }
    pub fn spectrum_t(&self) -> &Spectrum {
        &self.spec_t
    }

    pub fn nr(&self) -> usize {
        self.phi_r.nrows()
    }
    pub fn nt(&self) -> usize {
        self.phi_t.nrows()
    }

    /// Both correlations are the identity (to `1e-12`).
    pub fn is_uncorrelated(&self) -> bool {
        linalg::max_abs_diff(&self.phi_r, &linalg::identity(self.nr())) < 1e-12
            && linalg::max_abs_diff(&self.phi_t, &linalg::identity(self.nt())) < 1e-12
    }

    pub fn is_connected(&self, gain_floor: f64) -> bool {
        self.l > gain_floor
    }

    /// Nonzero eigenvalues of `Φʳ` and `Φᵗ` (the top `Mʳ`, `Mᵗ` values).
    pub fn nonzero_eigenvalues(&self) -> (Vec<f64>, Vec<f64>) {
        let r = self.spec_r.values[self.nr() - self.m_r..].to_vec();
        let t = self.spec_t.values[self.nt() - self.m_t..].to_vec();
        (r, t)
    }

    /// Same correlations, different gain.
    pub fn with_gain(&self, l: f64) -> Self {
        let mut out = self.clone();
        out.l = l;
        out
    }
}

fn count_rank(values: &[f64], eps_rank: f64) -> usize {
    let top = values.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    values.iter().filter(|&&v| v > eps_rank * top).count()
}

/// Square root on the effective support: eigenvalues at or below
/// `eps_rank·max` are dropped so sampled channels stay in the declared range.
fn sqrt_from(values: &[f64], vectors: &CMat, eps_rank: f64) -> CMat {
    let top = values.iter().fold(0.0_f64, |a, &v| a.max(v));
    let roots: Vec<f64> = values
        .iter()
        .map(|&v| if v > eps_rank * top { v.sqrt() } else { 0.0 })
        .collect();
    vectors * linalg::diag(&roots) * vectors.adjoint()
}

/// The full set of per-link statistics of a network.
#[derive(Clone, Debug)]
pub struct InterferenceTopologyProfile {
    dims: SystemDims,
    links: Vec<LinkStats>,
    analysis_mode: bool,
}

impl InterferenceTopologyProfile {
    /// `links` is the `K×K` grid flattened row by row (`j * K + i`).
    pub fn new(dims: SystemDims, links: Vec<LinkStats>) -> Result<Self> {
        dims.validate()?;
        if links.len() != dims.k * dims.k {
            return Err(Error::DimensionMismatch(format!(
                "expected {} links, got {}",
                dims.k * dims.k,
                links.len()
            )));
        }
        for (idx, s) in links.iter().enumerate() {
            if s.nr() != dims.nr || s.nt() != dims.nt {
                return Err(Error::DimensionMismatch(format!(
                    "link {} has correlation sizes {}x{}, expected {}x{}",
                    idx,
                    s.nr(),
                    s.nt(),
                    dims.nr,
                    dims.nt
                )));
            }
            if s.m_r == 0 || s.m_t == 0 {
                return Err(Error::InvalidLinkStats(format!(
                    "link {idx} has a zero correlation"
                )));
            }
        }
        Ok(InterferenceTopologyProfile {
            dims,
            links,
            analysis_mode: false,
        })
    }

    /// Require direct links to be i.i.d. with unit gain.
    pub fn into_analysis_mode(mut self) -> Result<Self> {
        for j in 0..self.dims.k {
            let s = self.link(j, j);
            if !s.is_uncorrelated() || (s.gain() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidLinkStats(format!(
                    "direct link {j} is not i.i.d. with unit gain"
                )));
            }
        }
        self.analysis_mode = true;
        Ok(self)
    }

    /// Homogeneous i.i.d. network with unit gains.
    pub fn iid(dims: SystemDims) -> Self {
        let links = (0..dims.k * dims.k)
            .map(|_| LinkStats::iid(dims.nr, dims.nt, 1.0))
            .collect();
        Self::new(dims, links)
            .expect("valid dims")
            .into_analysis_mode()
            .expect("iid")
    }

    pub fn dims(&self) -> SystemDims {
        self.dims
    }
    pub fn analysis_mode(&self) -> bool {
        self.analysis_mode
    }
    pub fn link(&self, j: usize, i: usize) -> &LinkStats {
        &self.links[j * self.dims.k + i]
    }
    pub fn set_link(&mut self, j: usize, i: usize, stats: LinkStats) {
        let k = self.dims.k;
        self.links[j * k + i] = stats;
    }
    pub fn links(&self) -> &[LinkStats] {
        &self.links
    }
    pub fn gain(&self, j: usize, i: usize) -> f64 {
        self.link(j, i).gain()
    }

    /// Weights `l_ji · P / d` for every link, grid order.
    pub fn weights(&self, p: f64) -> Vec<f64> {
        let d = self.dims.d as f64;
        self.links.iter().map(|s| s.gain() * p / d).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ItpDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ItpDoc = serde_json::from_str(text)?;
        doc.into_profile()
    }
}

/// One draw of every small-scale channel matrix.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    k: usize,
    h: Vec<CMat>,
    pub seed_tag: Option<u64>,
}

impl ChannelRealization {
    pub fn from_grid(k: usize, h: Vec<CMat>) -> Result<Self> {
        if h.len() != k * k {
            return Err(Error::DimensionMismatch(format!(
                "expected {} matrices, got {}",
                k * k,
                h.len()
            )));
        }
        Ok(ChannelRealization {
            k,
            h,
            seed_tag: None,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }
    pub fn h(&self, j: usize, i: usize) -> &CMat {
        &self.h[j * self.k + i]
    }
    pub fn set(&mut self, j: usize, i: usize, m: CMat) {
        self.h[j * self.k + i] = m;
    }
    pub fn grid(&self) -> &[CMat] {
        &self.h
    }
}

/// Draw `H_ji = (Φʳ)^{1/2} Hʷ (Φᵗ)^{1/2}` for every link, independent `Hʷ`.
pub fn sample_channel<R: Rng + ?Sized>(
    itp: &InterferenceTopologyProfile,
    rng: &mut R,
) -> ChannelRealization {
    let dims = itp.dims();
    let h = itp
        .links()
        .iter()
        .map(|s| {
            let hw = complex_gaussian_matrix(rng, dims.nr, dims.nt);
            s.sqrt_r() * hw * s.sqrt_t()
        })
        .collect();
    ChannelRealization {
        k: dims.k,
        h,
        seed_tag: None,
    }
}

/// Exponential correlation matrix with entry `(p, q) = eps^(q-p)` for `q >= p`
/// and Hermitian symmetry below the diagonal.
pub fn exponential_correlation(n: usize, eps: Complex64) -> Result<CMat> {
    if eps.norm() >= 1.0 {
        return Err(Error::CorrelationNotPsd(eps.norm()));
    }
    let mut m = CMat::zeros(n, n);
    for p in 0..n {
        for q in p..n {
            let v = eps.powu((q - p) as u32);
            m[(p, q)] = v;
            m[(q, p)] = v.conj();
        }
    }
    Ok(m)
}

/// Random topology: every cross link gets `Φʳ = I`, exponential transmit
/// correlation with coefficient `eps`, and i.i.d. log-normal gain
/// `exp(N(-delta2/2, delta2))` so that `E[l] = 1`. Direct links are i.i.d.
/// with unit gain.
pub fn sample_random_itp<R: Rng + ?Sized>(
    dims: SystemDims,
    eps: Complex64,
    delta2: f64,
    rng: &mut R,
) -> Result<InterferenceTopologyProfile> {
    dims.validate()?;
    if delta2.is_nan() || delta2 < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "shadowing variance {delta2} must be >= 0"
        )));
    }
    let phi_t = exponential_correlation(dims.nt, eps)?;
    let template = LinkStats::new(linalg::identity(dims.nr), phi_t, 1.0)?;
    let direct = LinkStats::iid(dims.nr, dims.nt, 1.0);
    let shadow = Normal::new(-delta2 / 2.0, delta2.sqrt())
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut links = Vec::with_capacity(dims.k * dims.k);
    for j in 0..dims.k {
        for i in 0..dims.k {
            if i == j {
                links.push(direct.clone());
            } else {
                let l = shadow.sample(rng).exp();
                links.push(template.with_gain(l));
            }
        }
    }
    InterferenceTopologyProfile::new(dims, links)?.into_analysis_mode()
}

// ---------------------------------------------------------------------------
// Text serialization
// ---------------------------------------------------------------------------

/// Complex matrix as a list of rows of `[re, im]` pairs.
pub type MatrixDoc = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_doc(m: &CMat) -> MatrixDoc {
    (0..m.nrows())
        .map(|r| {
            (0..m.ncols())
                .map(|k| [m[(r, k)].re, m[(r, k)].im])
                .collect()
        })
        .collect()
}

pub fn matrix_from_doc(doc: &MatrixDoc) -> Result<CMat> {
    let rows = doc.len();
    let cols = doc.first().map(|r| r.len()).unwrap_or(0);
    if doc.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("ragged matrix rows".into()));
    }
    Ok(CMat::from_fn(rows, cols, |r, k| {
        Complex64::new(doc[r][k][0], doc[r][k][1])
    }))
}

#[derive(Serialize, Deserialize)]
struct LinkDoc {
    rx: usize,
    tx: usize,
    l: f64,
    phi_r: MatrixDoc,
    phi_t: MatrixDoc,
}

#[derive(Serialize, Deserialize)]
struct ItpDoc {
    dims: SystemDims,
    #[serde(default)]
    analysis_mode: bool,
    links: Vec<LinkDoc>,
}

impl From<&InterferenceTopologyProfile> for ItpDoc {
    fn from(itp: &InterferenceTopologyProfile) -> Self {
        let k = itp.dims.k;
        let links = (0..k)
            .flat_map(|j| (0..k).map(move |i| (j, i)))
            .map(|(j, i)| {
                let s = itp.link(j, i);
                LinkDoc {
                    rx: j,
                    tx: i,
                    l: s.gain(),
                    phi_r: matrix_to_doc(s.phi_r()),
                    phi_t: matrix_to_doc(s.phi_t()),
                }
            })
            .collect();
        ItpDoc {
            dims: itp.dims,
            analysis_mode: itp.analysis_mode,
            links,
        }
    }
}

impl ItpDoc {
    fn into_profile(self) -> Result<InterferenceTopologyProfile> {
        let k = self.dims.k;
        let mut slots: Vec<Option<LinkStats>> = vec![None; k * k];
        for link in self.links {
            if link.rx >= k || link.tx >= k {
                return Err(Error::Parse(format!(
                    "link ({}, {}) out of range",
                    link.rx, link.tx
                )));
            }
            let stats = LinkStats::new(
                matrix_from_doc(&link.phi_r)?,
                matrix_from_doc(&link.phi_t)?,
                link.l,
            )?;
            slots[link.rx * k + link.tx] = Some(stats);
        }
        let links = slots
            .into_iter()
            .enumerate()
            .map(|(idx, s)| {
                s.ok_or_else(|| Error::Parse(format!("missing link {} -> {}", idx % k, idx / k)))
            })
            .collect::<Result<Vec<_>>>()?;
        let itp = InterferenceTopologyProfile::new(self.dims, links)?;
        if self.analysis_mode {
            itp.into_analysis_mode()
        } else {
            Ok(itp)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, identity};
    use crate::rng::substream;

    fn dims() -> SystemDims {
        SystemDims::new(4, 3, 2, 1).unwrap()
    }

    #[test]
    fn dims_validation() {
        assert!(SystemDims::new(1, 3, 2, 1).is_err());
        assert!(SystemDims::new(3, 3, 2, 3).is_err());
        assert!(SystemDims::new(3, 3, 2, 0).is_err());
        assert_eq!(dims().cross_links().len(), 12);
    }

    #[test]
    fn link_stats_validation() {
        assert!(LinkStats::new(identity(2), diag(&[2.8, 0.1, 0.1]), 1.0).is_ok());
        assert!(LinkStats::new(identity(2), diag(&[2.0, 0.1, 0.1]), 1.0).is_err());
        assert!(LinkStats::new(identity(2), identity(3), -1.0).is_err());
        let s = LinkStats::new(identity(2), diag(&[3.0, 0.0, 0.0]), 1.0).unwrap();
        assert_eq!((s.m_r(), s.m_t()), (2, 1));
        assert_eq!(s.nonzero_eigenvalues().1, vec![3.0]);
    }

    #[test]
    fn rank_one_transmit_correlation_zeroes_columns() {
        let mut itp = InterferenceTopologyProfile::iid(dims());
        itp.set_link(
            0,
            1,
            LinkStats::new(identity(2), diag(&[3.0, 0.0, 0.0]), 1.0).unwrap(),
        );
        let mut rng = substream(1, &[], "rank1");
        for _ in 0..50 {
            let ch = sample_channel(&itp, &mut rng);
            let h = ch.h(0, 1);
            for r in 0..2 {
                assert_eq!(h[(r, 1)].norm(), 0.0);
                assert_eq!(h[(r, 2)].norm(), 0.0);
            }
        }
    }

    #[test]
    fn exponential_correlation_is_psd_with_unit_diagonal() {
        let m = exponential_correlation(3, Complex64::from_polar(0.7, 0.4)).unwrap();
        let (vals, _) = crate::linalg::hermitian_eig(&m);
        assert!(vals.iter().all(|&v| v > 0.0));
        assert!((m.trace().re - 3.0).abs() < 1e-12);
        assert!(exponential_correlation(3, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn random_itp_reduces_to_homogeneous() {
        let mut rng = substream(2, &[], "itp");
        let itp = sample_random_itp(dims(), Complex64::new(0.0, 0.0), 0.0, &mut rng).unwrap();
        for s in itp.links() {
            assert!(s.is_uncorrelated());
            assert_eq!(s.gain(), 1.0);
        }
        assert!(itp.analysis_mode());
    }

    #[test]
    fn random_itp_is_reproducible() {
        let a = sample_random_itp(
            dims(),
            Complex64::new(0.7, 0.0),
            3.0,
            &mut substream(5, &[], "itp"),
        )
        .unwrap();
        let b = sample_random_itp(
            dims(),
            Complex64::new(0.7, 0.0),
            3.0,
            &mut substream(5, &[], "itp"),
        )
        .unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let mut rng = substream(3, &[], "json");
        let itp =
            sample_random_itp(dims(), Complex64::from_polar(0.7, 1.1), 3.0, &mut rng).unwrap();
        let text = itp.to_json().unwrap();
        let back = InterferenceTopologyProfile::from_json(&text).unwrap();
        for (a, b) in itp.links().iter().zip(back.links()) {
            assert!(crate::linalg::max_abs_diff(a.phi_t(), b.phi_t()) <= 1e-15);
            assert!(crate::linalg::max_abs_diff(a.phi_r(), b.phi_r()) <= 1e-15);
            assert!((a.gain() - b.gain()).abs() <= 1e-15 * a.gain().max(1.0));
        }
        assert!(back.analysis_mode());
    }
}
