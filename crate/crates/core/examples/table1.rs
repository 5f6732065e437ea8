//! Residual interference of the toy network under conventional and dynamic
//! feedback at 4, 10 and 16 bits.

use lfia::harness::table1_experiment;

fn main() -> lfia::Result<()> {
    let trials = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(500);
    let t = table1_experiment(trials, 1)?;
    println!("bits  conventional        dynamic");
    for (k, b) in t.budgets.iter().enumerate() {
        let (c, d) = (t.conventional[k], t.dynamic[k]);
        println!(
            "{b:>4}  {:.4} ± {:.4}   {:.4} ± {:.4}",
            c.mean, c.half_width, d.mean, d.half_width
        );
    }
    Ok(())
}
