//! One Monte Carlo trial: draw a topology and channels, feed back every
//! quantized cross link per scheme, align on the fed-back CSI and evaluate on
//! the true channels.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::sync::Mutex;

use crate::allocation::{
    allocate_bits_with_floor, equal_allocation, BitAllocation, LinkId, LinkQuantStats,
};
use crate::codebook::{
    beta_for_link, beta_uncorrelated, gen_base_codebook, transform_codebook, QuantizationResult,
    VirtualRvq,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    evaluate, throughput_lb_conventional, throughput_lb_given_rinr, ThroughputSample,
};
use crate::ia::{compute_ia, random_transceivers, IaOptions};
use crate::linalg::CMat;
use crate::rng::{derive_seed, substream};
use crate::topology::{sample_channel, InterferenceTopologyProfile, LinkStats};

use super::{QuantOptions, Scheme, TopologyModel};

/// Distortion coefficients per distinct correlation pair, estimated once.
#[derive(Debug)]
pub struct BetaCache {
    samples: usize,
    seed: u64,
    map: Mutex<HashMap<Vec<u64>, Option<f64>>>,
}

impl BetaCache {
    pub fn new(samples: usize, seed: u64) -> Self {
        BetaCache {
            samples,
            seed,
            map: Mutex::new(HashMap::new()),
        }
    }

    /// `None` for rank-one statistics. Uncorrelated links use the exact value.
    pub fn beta(&self, link: &LinkStats) -> Result<Option<f64>> {
        if link.support_dim() < 2 {
            return Ok(None);
        }
        if link.is_uncorrelated() {
            return Ok(Some(beta_uncorrelated(link.nr(), link.nt())));
        }
        let key: Vec<u64> = link
            .phi_r()
            .iter()
            .chain(link.phi_t().iter())
            .flat_map(|z| [z.re.to_bits(), z.im.to_bits()])
            .collect();
        if let Some(&b) = self.map.lock().expect("beta cache lock").get(&key) {
            return Ok(b);
        }
        let mut rng = substream(self.seed, &key, "beta");
        let est = beta_for_link(link, self.samples, &mut rng)?;
        self.map
            .lock()
            .expect("beta cache lock")
            .insert(key, Some(est.value));
        Ok(Some(est.value))
    }
}

/// Everything a trial needs besides its id.
#[derive(Clone, Copy, Debug)]
pub struct TrialSetup<'a> {
    pub model: &'a TopologyModel,
    pub p: f64,
    pub budget: u32,
    pub master: u64,
    pub quant: QuantOptions,
    pub ia: IaOptions,
    pub bounds: bool,
    pub quantized_links: Option<&'a [LinkId]>,
    pub betas: &'a BetaCache,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    pub sample: ThroughputSample,
    pub converged: bool,
    pub ia_iterations: usize,
    /// Lower bound at this trial's topology and allocation (spatial schemes only).
    pub r_low: Option<f64>,
    pub r_low_conventional: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub trial: u64,
    pub schemes: Vec<SchemeOutcome>,
    /// Sum rate with IA on the true channels.
    pub r_per_sample: Option<f64>,
}

impl TrialOutcome {
    pub fn get(&self, scheme: Scheme) -> Option<&SchemeOutcome> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }
}

/// Quantize one link with a `bits`-bit codebook: materialized up to
/// `quant.exact_max_bits`, sampled beyond.
pub fn quantize_link(
    h: &CMat,
    link: &LinkStats,
    spatial: bool,
    bits: u32,
    quant: &QuantOptions,
    codebook_seed: u64,
    virtual_seed: u64,
) -> Result<QuantizationResult> {
    let (nr, nt) = (link.nr(), link.nt());
    if bits <= quant.exact_max_bits {
        let base = gen_base_codebook(nr, nt, bits, codebook_seed)?;
        if spatial {
            transform_codebook(&base, link.phi_r(), link.phi_t())?.quantize(h)
        } else {
            base.quantize(h)
        }
    } else {
        let sampler = if spatial {
            VirtualRvq::spatial(link)
        } else {
            VirtualRvq::isotropic(nr, nt)
        };
        sampler.quantize(h, bits, &mut substream(virtual_seed, &[], "virtual-rvq"))
    }
}

fn link_ids(itp: &InterferenceTopologyProfile, only: Option<&[LinkId]>) -> Vec<LinkId> {
    match only {
        Some(ids) => ids.to_vec(),
        None => itp
            .dims()
            .cross_links()
            .into_iter()
            .map(|(j, i)| LinkId::new(j, i))
            .collect(),
    }
}

/// Quantization statistics of the fed-back links.
pub(crate) fn quant_stats(
    itp: &InterferenceTopologyProfile,
    ids: &[LinkId],
    betas: &BetaCache,
) -> Result<Vec<LinkQuantStats>> {
    ids.iter()
        .map(|&id| {
            let link = itp.link(id.rx, id.tx);
            Ok(LinkQuantStats {
                id,
                beta: betas.beta(link)?.unwrap_or(0.0),
                l: link.gain(),
                m_r: link.m_r(),
                m_t: link.m_t(),
            })
        })
        .collect()
}

/// Run every scheme in `schemes` on trial `trial`.
pub fn run_trial_schemes(
    setup: &TrialSetup<'_>,
    schemes: &[Scheme],
    trial: u64,
) -> Result<TrialOutcome> {
    let master = setup.master;
    let itp = setup.model.profile(master, trial)?;
    let dims = itp.dims();
    let k = dims.k;
    let channels = sample_channel(&itp, &mut substream(master, &[trial], "channel"));
    let ids = link_ids(&itp, setup.quantized_links);
    let stats = quant_stats(&itp, &ids, setup.betas)?;
    let weights = itp.weights(setup.p);
    let ia = IaOptions {
        init_seed: derive_seed(master, &[trial], "ia-init"),
        ..setup.ia
    };

    let dynamic = if schemes.iter().any(|s| s.dynamic_bits()) {
        match allocate_bits_with_floor(&stats, setup.budget, setup.quant.gain_floor) {
            Ok(a) => Some(a),
            Err(Error::NoEligibleLinks) => Some(equal_allocation(0, &ids)),
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let equal = equal_allocation(setup.budget, &ids);

    let mut fed_back: HashMap<(bool, LinkId, u32), CMat> = HashMap::new();
    let mut outcomes = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        if !scheme.uses_feedback() {
            let ts = random_transceivers(
                &dims,
                &mut substream(master, &[trial], "random-beamforming"),
            );
            outcomes.push(SchemeOutcome {
                scheme,
                sample: evaluate(&ts, &channels, &itp, setup.p, trial)?,
                converged: true,
                ia_iterations: 0,
                r_low: None,
                r_low_conventional: None,
            });
            continue;
        }
        let alloc: &BitAllocation = if scheme.dynamic_bits() {
            dynamic.as_ref().expect("dynamic")
        } else {
            &equal
        };
        let spatial = scheme.spatial_codebook();
        let mut grid = channels.grid().to_vec();
        for &id in &ids {
            let bits = alloc.get(id).unwrap_or(0);
            let key = (spatial, id, bits);
            if let Entry::Vacant(slot) = fed_back.entry(key) {
                let link = itp.link(id.rx, id.tx);
                let path = [id.rx as u64, id.tx as u64];
                let cb_seed = if setup.quant.fixed_codebook {
                    derive_seed(master, &path, "codebook")
                } else {
                    derive_seed(master, &[trial, path[0], path[1]], "codebook")
                };
                let v_seed =
                    derive_seed(master, &[trial, path[0], path[1], bits as u64], "virtual");
                let q = quantize_link(
                    channels.h(id.rx, id.tx),
                    link,
                    spatial,
                    bits,
                    &setup.quant,
                    cb_seed,
                    v_seed,
                )?;
                slot.insert(q.h_hat);
            }
            grid[id.rx * k + id.tx] = fed_back[&key].clone();
        }
        let out = compute_ia(&grid, &weights, &dims, &ia)?;
        let sample = evaluate(&out.transceivers, &channels, &itp, setup.p, trial)?;
        let (r_low, r_low_conventional) = if setup.bounds && spatial {
            let i_upp: Vec<f64> = (0..k)
                .map(|j| crate::allocation::rinr_upper_bound(alloc, &stats, setup.p, dims.d, j))
                .collect();
            (
                Some(throughput_lb_given_rinr(&i_upp, setup.p, dims.d)?),
                Some(throughput_lb_conventional(&i_upp, setup.p, dims.d)?),
            )
        } else {
            (None, None)
        };
        outcomes.push(SchemeOutcome {
            scheme,
            sample,
            converged: out.converged,
            ia_iterations: out.iterations,
            r_low,
            r_low_conventional,
        });
    }

    let r_per_sample = if setup.bounds {
        let out = compute_ia(channels.grid(), &weights, &dims, &ia)?;
        Some(evaluate(&out.transceivers, &channels, &itp, setup.p, trial)?.sum_rate())
    } else {
        None
    };
    Ok(TrialOutcome {
        trial,
        schemes: outcomes,
        r_per_sample,
    })
}

/// Single scheme on a fixed profile with default options.
pub fn run_trial(
    itp: &InterferenceTopologyProfile,
    scheme: Scheme,
    budget: u32,
    p: f64,
    seed: u64,
) -> Result<SchemeOutcome> {
    let model = TopologyModel::Fixed(itp.clone());
    let quant = QuantOptions::default();
    let betas = BetaCache::new(quant.beta_samples, seed);
    let setup = TrialSetup {
        model: &model,
        p,
        budget,
        master: seed,
        quant,
        ia: IaOptions::default(),
        bounds: false,
        quantized_links: None,
        betas: &betas,
    };
    let mut out = run_trial_schemes(&setup, &[scheme], 0)?;
    Ok(out.schemes.remove(0))
}
