//! Quantize a strongly correlated link with the base codebook and with the
//! codebook matched to its correlation, and compare mean distortion.

use lfia::codebook::{gen_base_codebook, transform_codebook};
use lfia::linalg::{diag, identity};
use lfia::rng::substream;
use lfia::stats::{Running, Z95};
use lfia::topology::{sample_channel, InterferenceTopologyProfile, LinkStats, SystemDims};

fn main() -> lfia::Result<()> {
    let phi_r = identity(2);
    let phi_t = diag(&[2.8, 0.1, 0.1]);
    let dims = SystemDims::new(2, 3, 2, 1)?;
    let mut itp = InterferenceTopologyProfile::iid(dims);
    itp.set_link(0, 1, LinkStats::new(phi_r.clone(), phi_t.clone(), 1.0)?);

    let mut rng = substream(3, &[], "channels");
    for bits in [4, 8, 12] {
        let base = gen_base_codebook(2, 3, bits, 11)?;
        let spatial = transform_codebook(&base, &phi_r, &phi_t)?;
        let (mut plain, mut matched) = (Running::new(), Running::new());
        for _ in 0..2000 {
            let h = sample_channel(&itp, &mut rng).h(0, 1).clone();
            plain.push(base.quantize(&h)?.distortion);
            matched.push(spatial.quantize(&h)?.distortion);
        }
        let (a, b) = (plain.summary(Z95), matched.summary(Z95));
        println!(
            "B={bits:>2}: base {:.4} ± {:.4}   spatial {:.4} ± {:.4}",
            a.mean, a.half_width, b.mean, b.half_width
        );
    }

    // The matched codebook only spends words on the dominant direction.
    let w = transform_codebook(&gen_base_codebook(2, 3, 2, 11)?, &phi_r, &phi_t)?;
    println!("first spatial word:{:.3}", w.words()[0]);
    Ok(())
}
