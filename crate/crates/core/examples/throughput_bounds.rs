//! Perfect-CSI throughput and the two lower bounds for a homogeneous network
//! as the feedback budget grows.

use lfia::allocation::{allocate_bits, rinr_upper_bound, LinkId, LinkQuantStats};
use lfia::evaluation::{throughput_lb_conventional, throughput_lb_given_rinr, throughput_perfect};
use lfia::topology::SystemDims;

fn main() -> lfia::Result<()> {
    let dims = SystemDims::new(4, 3, 2, 1)?;
    let p = 10f64.powf(2.5);
    let stats: Vec<LinkQuantStats> = dims
        .cross_links()
        .into_iter()
        .map(|(j, i)| LinkQuantStats {
            id: LinkId::new(j, i),
            beta: 5.0,
            l: 1.0,
            m_r: 2,
            m_t: 3,
        })
        .collect();
    println!("perfect CSI: {:.3}", throughput_perfect(p, dims.d, dims.k)?);
    println!("bits,lower,conventional");
    for budget in (40..=400).step_by(40) {
        let alloc = allocate_bits(&stats, budget)?;
        let rinr: Vec<f64> = (0..dims.k)
            .map(|j| rinr_upper_bound(&alloc, &stats, p, dims.d, j))
            .collect();
        println!(
            "{budget},{:.4},{:.4}",
            throughput_lb_given_rinr(&rinr, p, dims.d)?,
            throughput_lb_conventional(&rinr, p, dims.d)?
        );
    }
    Ok(())
}
