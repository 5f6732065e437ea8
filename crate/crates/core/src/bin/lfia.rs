use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use lfia::allocation::{allocate_bits, read_link_stats_csv};
use lfia::codebook::{distortion_coefficient_beta, DEFAULT_BETA_SAMPLES};
use lfia::harness::{
    run_config, sweep_detailed, table1_experiment, write_metadata, write_records, Axis, CellResult,
    ScenarioConfig, SimRecord,
};
use lfia::rng::substream;
use lfia::topology::{matrix_from_doc, MatrixDoc};

#[derive(Parser)]
#[command(
    name = "lfia",
    version,
    about = "Limited-feedback interference alignment simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Every scheme on the config's SNR × budget grid.
    Simulate {
        config: PathBuf,
        /// CSV destination; overrides the config. A `.meta.json` sidecar is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean residual interference of the toy network at 4, 10 and 16 bits.
    Table1 {
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Every scheme along one axis.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Water-filling allocation for a link statistics CSV (`rx,tx,beta,l,m_r,m_t`).
    Alloc {
        stats: PathBuf,
        #[arg(long)]
        budget: u32,
    },
    /// Distortion coefficient of a link given as JSON `{"phi_r": .., "phi_t": ..}`.
    Beta {
        link: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BETA_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Deserialize)]
struct LinkDoc {
    phi_r: MatrixDoc,
    phi_t: MatrixDoc,
}

fn emit(
    cells: &[CellResult],
    cfg: &ScenarioConfig,
    command: &str,
    out: Option<PathBuf>,
) -> lfia::Result<bool> {
    let records: Vec<SimRecord> = cells.iter().map(SimRecord::from).collect();
    match out.or_else(|| cfg.output.clone()) {
        Some(path) => {
            write_records(BufWriter::new(File::create(&path)?), &records)?;
            let mut meta = path.clone().into_os_string();
            meta.push(".meta.json");
            write_metadata(
                BufWriter::new(File::create(Path::new(&meta))?),
                command,
                cfg,
            )?;
        }
        None => write_records(io::stdout().lock(), &records)?,
    }
    Ok(cells.iter().all(|c| c.not_converged == 0))
}

fn run(cli: Cli) -> lfia::Result<bool> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            emit(&run_config(&cfg)?, &cfg, "simulate", out)
        }
        Command::Sweep { config, axis, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            emit(
                &sweep_detailed(&cfg, axis)?,
                &cfg,
                &format!("sweep --axis {}", axis.name()),
                out,
            )
        }
        Command::Table1 { trials, seed } => {
            let t = table1_experiment(trials, seed)?;
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            w.write_record([
                "budget",
                "conventional_mean",
                "conventional_hw",
                "dynamic_mean",
                "dynamic_hw",
                "difference_mean",
                "difference_hw",
            ])?;
            for (k, b) in t.budgets.iter().enumerate() {
                let (c, d, x) = (t.conventional[k], t.dynamic[k], t.difference[k]);
                w.serialize((
                    b,
                    c.mean,
                    c.half_width,
                    d.mean,
                    d.half_width,
                    x.mean,
                    x.half_width,
                ))?;
            }
            w.flush()?;
            Ok(t.not_converged == 0)
        }
        Command::Alloc { stats, budget } => {
            let stats = read_link_stats_csv(File::open(stats)?)?;
            let alloc = allocate_bits(&stats, budget)?;
            let mut out = io::stdout().lock();
            writeln!(out, "rx,tx,bits")?;
            for (id, bits) in &alloc.bits {
                writeln!(out, "{},{},{}", id.rx, id.tx, bits)?;
            }
            if let Some(b) = alloc.water_level {
                writeln!(out, "# water level {b}")?;
            }
            Ok(true)
        }
        Command::Beta {
            link,
            samples,
            seed,
        } => {
            let doc: LinkDoc = serde_json::from_str(&std::fs::read_to_string(link)?)?;
            let (phi_r, phi_t) = (matrix_from_doc(&doc.phi_r)?, matrix_from_doc(&doc.phi_t)?);
            let est = distortion_coefficient_beta(
                &phi_r,
                &phi_t,
                samples,
                &mut substream(seed, &[], "beta"),
            )?;
            println!("beta,std_error\n{},{}", est.value, est.std_error);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("warning: some IA runs did not converge");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
