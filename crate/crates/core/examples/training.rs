//! Gradient descent on the network and how many activation bits it flips.

use convex_relu::dataset::{generate_dataset, LabelMode};
use convex_relu::experiments::{drift_experiment, NetworkConfig};
use convex_relu::network::network_to_convex_patterns;

fn main() -> convex_relu::error::Result<()> {
    let ds = generate_dataset(200, 50, 0.01, &LabelMode::RandomGaussian, 6)?;
    let (trace, net) = drift_experiment(&ds, &NetworkConfig::default(), 6)?;
    for (step, drift) in trace.drift_history.iter().enumerate().step_by(250) {
        println!("step {step:>4}  loss {:.5}  drift {drift:.3}", trace.losses[step]);
    }
    let induced = network_to_convex_patterns(&net, &ds)?;
    println!("final drift {:.3}, {} distinct induced patterns", trace.drift_fraction, induced.len());
    Ok(())
}
