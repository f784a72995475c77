//! Sampled, enumerated and paired activation patterns on a small dataset.

use convex_relu::arrangements::{central_region_count, enumerate_patterns, paired_patterns, sample_patterns};
use convex_relu::dataset::{generate_dataset, LabelMode};

fn main() -> convex_relu::error::Result<()> {
    let ds = generate_dataset(8, 3, 0.1, &LabelMode::RandomGaussian, 0)?;
    let all = enumerate_patterns(&ds)?;
    println!("enumerated {} patterns (region count {})", all.len(), central_region_count(8, 3));

    for count in [5, 20, 80] {
        let ps = sample_patterns(&ds, count, 0)?;
        println!("requested {count:>3}, got {:>3} distinct, subset of enumeration: {}", ps.len(), ps.is_subset_of(&all));
    }

    let paired = paired_patterns(&ds)?;
    for (i, (a, b)) in paired.pairs.iter().enumerate().take(3) {
        println!("pair {i}: {a} / {b}");
    }
    Ok(())
}
