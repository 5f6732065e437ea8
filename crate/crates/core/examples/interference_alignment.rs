//! Align a 4-user 3x2 network and print the leakage trace as CSV.

use lfia::ia::{check_feasibility, compute_ia, IaOptions};
use lfia::rng::substream;
use lfia::topology::{sample_channel, InterferenceTopologyProfile, SystemDims};

fn main() -> lfia::Result<()> {
    let dims = SystemDims::new(4, 3, 2, 1)?;
    println!("# feasibility: {:?}", check_feasibility(&dims));
    let itp = InterferenceTopologyProfile::iid(dims);
    let ch = sample_channel(&itp, &mut substream(1, &[], "channel"));
    let out = compute_ia(ch.grid(), &itp.weights(1.0), &dims, &IaOptions::default())?;
    println!(
        "# converged {} after {} iterations, relative leakage {:.2e}",
        out.converged,
        out.iterations,
        out.relative_leakage()
    );
    out.write_trace(std::io::stdout().lock())
}
