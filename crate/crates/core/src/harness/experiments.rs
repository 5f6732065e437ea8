//! Sweeps over the scenario axes and the toy residual-interference table.

use rayon::prelude::*;

use crate::allocation::LinkId;
use crate::error::{Error, Result};
use crate::evaluation::{rinr, throughput_perfect};
use crate::ia::{compute_ia, IaOptions};
use crate::linalg::{diag, identity};
use crate::rng::{derive_seed, substream};
use crate::stats::{Running, Summary, Z95, Z99};
use crate::topology::{sample_channel, InterferenceTopologyProfile, LinkStats, SystemDims};

use super::output::SimRecord;
use super::trial::{
    quant_stats, quantize_link, run_trial_schemes, BetaCache, TrialOutcome, TrialSetup,
};
use super::{db_to_linear, Axis, QuantOptions, ScenarioConfig, Scheme, TopologyModel};

/// Aggregated results of one scheme at one sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub scheme: Scheme,
    pub axis: String,
    pub snr_db: f64,
    pub budget: u32,
    pub eps_abs: Option<f64>,
    pub delta2: Option<f64>,
    pub trials: usize,
    pub not_converged: usize,
    /// Mean RINR per receiver, 95% intervals.
    pub rinr: Vec<Summary>,
    pub r_lim: Summary,
    pub r_per: f64,
    pub r_per_mc: Option<Summary>,
    pub r_low: Option<Summary>,
    pub r_low_conventional: Option<Summary>,
    pub seed: u64,
    /// Per-trial sum rates, indexed by trial, for paired comparisons.
    pub sum_rates: Vec<f64>,
}

impl CellResult {
    pub fn record(&self) -> SimRecord {
        SimRecord::from(self)
    }
}

struct Point {
    snr_db: f64,
    budget: u32,
    model: TopologyModel,
}

fn with_eps(model: &TopologyModel, eps_abs: f64) -> Result<TopologyModel> {
    match model {
        TopologyModel::Random { dims, eps, delta2 } => Ok(TopologyModel::Random {
            dims: *dims,
            eps: num_complex::Complex64::from_polar(eps_abs, eps.arg()),
            delta2: *delta2,
        }),
        TopologyModel::Fixed(_) => Err(Error::InvalidConfig(
            "this axis needs the random topology model".into(),
        )),
    }
}

fn with_delta2(model: &TopologyModel, delta2: f64) -> Result<TopologyModel> {
    match model {
        TopologyModel::Random { dims, eps, .. } => Ok(TopologyModel::Random {
            dims: *dims,
            eps: *eps,
            delta2,
        }),
        TopologyModel::Fixed(_) => Err(Error::InvalidConfig(
            "this axis needs the random topology model".into(),
        )),
    }
}

fn points(
    cfg: &ScenarioConfig,
    axis: Axis,
    model: &TopologyModel,
    betas: &BetaCache,
) -> Result<Vec<Point>> {
    let snr0 = cfg.snr_db[0];
    let b0 = cfg.budgets[0];
    let pt = |snr_db, budget, model: TopologyModel| Point {
        snr_db,
        budget,
        model,
    };
    Ok(match axis {
        Axis::Bits => cfg
            .budgets
            .iter()
            .map(|&b| pt(snr0, b, model.clone()))
            .collect(),
        Axis::Snr => cfg
            .snr_db
            .iter()
            .map(|&s| pt(s, b0, model.clone()))
            .collect(),
        Axis::SnrScaled => {
            let itp = model.profile(cfg.seed, 0)?;
            let ids = link_ids(cfg, &itp);
            let stats = quant_stats(&itp, &ids, betas)?;
            cfg.snr_db
                .iter()
                .map(|&s| {
                    let b = crate::allocation::scaling_bits(
                        db_to_linear(s),
                        &stats,
                        cfg.sweep.c_b,
                        cfg.quant.gain_floor,
                    );
                    pt(s, b, model.clone())
                })
                .collect()
        }
        Axis::Correlation => {
            if cfg.sweep.eps_abs.is_empty() {
                return Err(Error::InvalidConfig(
                    "correlation axis needs sweep.eps_abs values".into(),
                ));
            }
            cfg.sweep
                .eps_abs
                .iter()
                .map(|&e| Ok(pt(snr0, b0, with_eps(model, e)?)))
                .collect::<Result<_>>()?
        }
        Axis::Shadowing => {
            if cfg.sweep.delta2.is_empty() {
                return Err(Error::InvalidConfig(
                    "shadowing axis needs sweep.delta2 values".into(),
                ));
            }
            cfg.sweep
                .delta2
                .iter()
                .map(|&v| Ok(pt(snr0, b0, with_delta2(model, v)?)))
                .collect::<Result<_>>()?
        }
    })
}

fn link_ids(cfg: &ScenarioConfig, itp: &InterferenceTopologyProfile) -> Vec<LinkId> {
    cfg.quantized_links.clone().unwrap_or_else(|| {
        itp.dims()
            .cross_links()
            .into_iter()
            .map(|(j, i)| LinkId::new(j, i))
            .collect()
    })
}

fn run_point(
    cfg: &ScenarioConfig,
    axis: &str,
    point: &Point,
    betas: &BetaCache,
) -> Result<Vec<CellResult>> {
    let p = db_to_linear(point.snr_db);
    let setup = TrialSetup {
        model: &point.model,
        p,
        budget: point.budget,
        master: cfg.seed,
        quant: cfg.quant,
        ia: cfg.ia,
        bounds: cfg.bounds,
        quantized_links: cfg.quantized_links.as_deref(),
        betas,
    };
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial_schemes(&setup, &cfg.schemes, t))
        .collect::<Result<_>>()?;

    let dims = cfg.dims;
    let r_per = throughput_perfect(p, dims.d, dims.k)?;
    let r_per_mc = cfg.bounds.then(|| {
        outcomes
            .iter()
            .filter_map(|o| o.r_per_sample)
            .collect::<Running>()
            .summary(Z95)
    });
    Ok(cfg
        .schemes
        .iter()
        .map(|&scheme| {
            let per: Vec<_> = outcomes
                .iter()
                .map(|o| o.get(scheme).expect("scheme outcome"))
                .collect();
            let rinr = (0..dims.k)
                .map(|j| {
                    per.iter()
                        .map(|s| s.sample.rinr[j])
                        .collect::<Running>()
                        .summary(Z95)
                })
                .collect();
            let sum_rates: Vec<f64> = per.iter().map(|s| s.sample.sum_rate()).collect();
            let optional = |f: fn(&super::SchemeOutcome) -> Option<f64>| {
                let acc: Running = per.iter().filter_map(|s| f(s)).collect();
                (acc.count() > 0).then(|| acc.summary(Z95))
            };
            CellResult {
                scheme,
                axis: axis.to_string(),
                snr_db: point.snr_db,
                budget: point.budget,
                eps_abs: point.model.eps_abs(),
                delta2: point.model.delta2(),
                trials: cfg.trials,
                not_converged: per.iter().filter(|s| !s.converged).count(),
                rinr,
                r_lim: sum_rates.iter().copied().collect::<Running>().summary(Z95),
                r_per,
                r_per_mc,
                r_low: optional(|s| s.r_low),
                r_low_conventional: optional(|s| s.r_low_conventional),
                seed: cfg.seed,
                sum_rates,
            }
        })
        .collect())
}

/// Every scheme at every point of `axis`, with per-trial data kept.
pub fn sweep_detailed(cfg: &ScenarioConfig, axis: Axis) -> Result<Vec<CellResult>> {
    cfg.validate()?;
    let model = TopologyModel::from_source(cfg.dims, &cfg.itp)?;
    let betas = BetaCache::new(cfg.quant.beta_samples, cfg.seed);
    let mut out = Vec::new();
    for point in points(cfg, axis, &model, &betas)? {
        out.extend(run_point(cfg, axis.name(), &point, &betas)?);
    }
    Ok(out)
}

/// Records for every scheme at every point of `axis`.
pub fn sweep(cfg: &ScenarioConfig, axis: Axis) -> Result<Vec<SimRecord>> {
    Ok(sweep_detailed(cfg, axis)?
        .iter()
        .map(SimRecord::from)
        .collect())
}

/// Every scheme on the full SNR × budget grid of the config.
pub fn run_config(cfg: &ScenarioConfig) -> Result<Vec<CellResult>> {
    cfg.validate()?;
    let model = TopologyModel::from_source(cfg.dims, &cfg.itp)?;
    let betas = BetaCache::new(cfg.quant.beta_samples, cfg.seed);
    let mut out = Vec::new();
    for &snr_db in &cfg.snr_db {
        for &budget in &cfg.budgets {
            let point = Point {
                snr_db,
                budget,
                model: model.clone(),
            };
            out.extend(run_point(cfg, "grid", &point, &betas)?);
        }
    }
    Ok(out)
}

pub const TABLE1_BUDGETS: [u32; 3] = [4, 10, 16];

/// The toy network: `K=4`, `3×2`, `d=1`; Rx 0 sees a strongly correlated
/// interferer on Tx 2 and a weak uncorrelated one on Tx 3; everything else is
/// i.i.d. with unit gain.
pub fn table1_profile() -> InterferenceTopologyProfile {
    let dims = SystemDims {
        k: 4,
        nt: 3,
        nr: 2,
        d: 1,
    };
    let mut itp = InterferenceTopologyProfile::iid(dims);
    let strong =
        LinkStats::new(identity(2), diag(&[2.8, 0.1, 0.1]), 1.0).expect("valid toy correlation");
    itp.set_link(0, 2, strong);
    itp.set_link(0, 3, LinkStats::iid(2, 3, 0.1));
    itp
}

/// Mean RINR at Rx 0 per budget; intervals at 99%.
#[derive(Clone, Debug, PartialEq)]
pub struct Table1Result {
    pub budgets: Vec<u32>,
    pub conventional: Vec<Summary>,
    pub dynamic: Vec<Summary>,
    /// Paired `conventional − dynamic`.
    pub difference: Vec<Summary>,
    pub trials: usize,
    pub not_converged: usize,
}

/// Conventional: half the bits on each of the two fed-back links with base
/// codebooks. Dynamic: every bit on the correlated link with its spatial
/// codebook, a single-word codebook on the weak one.
pub fn table1_experiment(trials: usize, seed: u64) -> Result<Table1Result> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let itp = table1_profile();
    let dims = itp.dims();
    let p = 1.0;
    let weights = itp.weights(p);
    let quant = QuantOptions {
        exact_max_bits: 16,
        ..QuantOptions::default()
    };
    let strong = LinkId::new(0, 2);
    let weak = LinkId::new(0, 3);
    let n_b = TABLE1_BUDGETS.len();

    let per_trial: Vec<(Vec<(f64, f64)>, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let channels = sample_channel(&itp, &mut substream(seed, &[t], "channel"));
            let ia = IaOptions {
                init_seed: derive_seed(seed, &[t], "ia-init"),
                ..IaOptions::default()
            };
            let cb_seed =
                |id: LinkId| derive_seed(seed, &[t, id.rx as u64, id.tx as u64], "codebook");
            let mut failures = 0;
            let mut solve = |assign: [(LinkId, bool, u32); 2]| -> Result<f64> {
                let mut grid = channels.grid().to_vec();
                for (id, spatial, bits) in assign {
                    let link = itp.link(id.rx, id.tx);
                    let q = quantize_link(
                        channels.h(id.rx, id.tx),
                        link,
                        spatial,
                        bits,
                        &quant,
                        cb_seed(id),
                        0,
                    )?;
                    grid[id.rx * dims.k + id.tx] = q.h_hat;
                }
                let out = compute_ia(&grid, &weights, &dims, &ia)?;
                failures += usize::from(!out.converged);
                Ok(rinr(&out.transceivers, &channels, &itp, p, dims.d, 0))
            };
            let row = TABLE1_BUDGETS
                .iter()
                .map(|&b| {
                    let conv = solve([(strong, false, b / 2), (weak, false, b / 2)])?;
                    let dynamic = solve([(strong, true, b), (weak, true, 0)])?;
                    Ok((conv, dynamic))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((row, failures))
        })
        .collect::<Result<_>>()?;

    let column = |f: &dyn Fn(&(f64, f64)) -> f64, b: usize| -> Summary {
        per_trial
            .iter()
            .map(|(row, _)| f(&row[b]))
            .collect::<Running>()
            .summary(Z99)
    };
    Ok(Table1Result {
        budgets: TABLE1_BUDGETS.to_vec(),
        conventional: (0..n_b).map(|b| column(&|x| x.0, b)).collect(),
        dynamic: (0..n_b).map(|b| column(&|x| x.1, b)).collect(),
        difference: (0..n_b).map(|b| column(&|x| x.0 - x.1, b)).collect(),
        trials,
        not_converged: per_trial.iter().map(|(_, f)| f).sum(),
    })
}
