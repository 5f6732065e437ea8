//! Run a scenario file along one axis and print the records as CSV.
//!
//! `cargo run --release --example sweep -- examples/configs/correlation.json correlation 50`

use std::path::PathBuf;

use clap::ValueEnum;

use lfia::harness::{sweep, write_records, Axis, ScenarioConfig};

fn main() -> lfia::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/bits.json")
    });
    let axis = args
        .next()
        .map(|a| Axis::from_str(&a, true).map_err(lfia::Error::InvalidConfig))
        .transpose()?
        .unwrap_or(Axis::Bits);
    let mut cfg = ScenarioConfig::load(&path)?;
    if let Some(trials) = args.next().and_then(|t| t.parse().ok()) {
        cfg.trials = trials;
    }
    write_records(std::io::stdout().lock(), &sweep(&cfg, axis)?)
}
