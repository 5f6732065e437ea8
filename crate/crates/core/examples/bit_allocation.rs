//! Water-filling feedback bits over the cross links of a random topology and
//! comparing the residual-interference objective with an equal split.

use num_complex::Complex64;

use lfia::allocation::{allocate_bits, equal_allocation, objective, LinkId, LinkQuantStats};
use lfia::codebook::beta_for_link;
use lfia::rng::substream;
use lfia::topology::{sample_random_itp, SystemDims};

fn main() -> lfia::Result<()> {
    let dims = SystemDims::new(4, 3, 2, 1)?;
    let itp = sample_random_itp(
        dims,
        Complex64::new(0.7, 0.0),
        3.0,
        &mut substream(5, &[], "itp"),
    )?;
    let beta = beta_for_link(itp.link(0, 1), 20_000, &mut substream(5, &[], "beta"))?.value;
    let stats: Vec<LinkQuantStats> = dims
        .cross_links()
        .into_iter()
        .map(|(j, i)| {
            let link = itp.link(j, i);
            LinkQuantStats {
                id: LinkId::new(j, i),
                beta,
                l: link.gain(),
                m_r: link.m_r(),
                m_t: link.m_t(),
            }
        })
        .collect();

    let budget = 120;
    let dynamic = allocate_bits(&stats, budget)?;
    let equal = equal_allocation(budget, &stats.iter().map(|s| s.id).collect::<Vec<_>>());
    println!("link   gain    bits");
    for (s, (_, bits)) in stats.iter().zip(&dynamic.bits) {
        println!("{:<6} {:<7.3} {bits}", s.id.to_string(), s.l);
    }
    let p = 10f64.powf(2.5);
    println!("water level {:.3}", dynamic.water_level.unwrap_or(f64::NAN));
    println!(
        "objective: water-filling {:.3}, equal {:.3}",
        objective(&dynamic, &stats, p, 1),
        objective(&equal, &stats, p, 1)
    );
    Ok(())
}
