//! Draw a random interference topology and one channel realization, then
//! report per-link shadowing gains and received energies.

use num_complex::Complex64;

use lfia::linalg::frob_norm_sq;
use lfia::rng::substream;
use lfia::topology::{sample_channel, sample_random_itp, SystemDims};

fn main() -> lfia::Result<()> {
    let dims = SystemDims::new(4, 3, 2, 1)?;
    let itp = sample_random_itp(
        dims,
        Complex64::new(0.7, 0.0),
        3.0,
        &mut substream(7, &[], "itp"),
    )?;
    let ch = sample_channel(&itp, &mut substream(7, &[], "channel"));

    println!("rx tx gain   |H|^2   l*|H|^2");
    for j in 0..dims.k {
        for i in 0..dims.k {
            let e = frob_norm_sq(ch.h(j, i));
            println!(
                "{j}  {i}  {:<6.3} {:<7.3} {:.3}",
                itp.gain(j, i),
                e,
                itp.gain(j, i) * e
            );
        }
    }
    let (_, sig) = itp.link(0, 1).nonzero_eigenvalues();
    println!("transmit correlation eigenvalues of a cross link: {sig:.3?}");
    Ok(())
}
