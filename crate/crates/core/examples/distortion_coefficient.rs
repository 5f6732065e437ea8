//! Distortion coefficients of a few correlation structures and the distortion
//! bound they imply.

use num_complex::Complex64;

use lfia::codebook::{beta_for_link, beta_uncorrelated, distortion_bound};
use lfia::linalg::{diag, identity};
use lfia::rng::substream;
use lfia::topology::{exponential_correlation, LinkStats};

fn main() -> lfia::Result<()> {
    let links = [
        ("i.i.d.", LinkStats::iid(2, 3, 1.0)),
        (
            "diag(2.8,0.1,0.1)",
            LinkStats::new(identity(2), diag(&[2.8, 0.1, 0.1]), 1.0)?,
        ),
        (
            "exponential 0.7",
            LinkStats::new(
                identity(2),
                exponential_correlation(3, Complex64::new(0.7, 0.0))?,
                1.0,
            )?,
        ),
        (
            "exponential 0.9",
            LinkStats::new(
                identity(2),
                exponential_correlation(3, Complex64::new(0.9, 0.0))?,
                1.0,
            )?,
        ),
    ];
    println!("exact i.i.d. value: {}", beta_uncorrelated(2, 3));
    for (name, link) in &links {
        let est = beta_for_link(link, 100_000, &mut substream(1, &[], "beta"))?;
        let bound = distortion_bound(est.value, link.m_r(), link.m_t(), 12)?;
        println!(
            "{name:<18} beta {:.4} ± {:.4}   bound at 12 bits {:.4}",
            est.value, est.std_error, bound
        );
    }
    Ok(())
}
