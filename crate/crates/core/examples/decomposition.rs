//! Splitting vectors into differences of activation-cone members.

use convex_relu::arrangements::sample_patterns;
use convex_relu::dataset::{generate_dataset, rng_stream, standard_normal_vector, stream, LabelMode, SolverConfig};
use convex_relu::decomposition::{cone_sharpness, decompose_min_norm, lambda_construction_check};
use nalgebra::DVector;

fn main() -> convex_relu::error::Result<()> {
    let ds = generate_dataset(12, 3, 0.1, &LabelMode::RandomGaussian, 4)?;
    let pattern = sample_patterns(&ds, 1, 4)?.patterns()[0].clone();
    let cfg = SolverConfig::default();
    let mut rng = rng_stream(4, stream::DIRECTIONS);
    for _ in 0..4 {
        let z = standard_normal_vector(&mut rng, 3).normalize();
        let dec = decompose_min_norm(&ds, &pattern, &z, &cfg)?;
        let sharp = cone_sharpness(&ds, &pattern, &z, &cfg)?;
        println!(
            "sharpness {:.4}  feasibility bound {}",
            dec.sharpness,
            sharp.upper_bound.map_or("none".into(), |b| format!("{b:.2}"))
        );
    }

    let check = lambda_construction_check(50, &DVector::from_element(50, 1.0), 1.0, 0)?;
    println!("lambda construction: norm {:?}, within 5c: {}", check.norm, check.success);
    Ok(())
}
