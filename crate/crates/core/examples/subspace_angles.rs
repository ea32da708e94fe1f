//! Watches the interference subspaces at each receiver collapse onto each
//! other while leakage is driven to zero.

use ia_manifold::metrics::max_interference_angle;
use ia_manifold::prelude::*;

fn main() {
    let cfg = NetworkConfig::symmetric(3, 2, 2, 1, 100.0).unwrap();
    let channels = sample_channels(&cfg, derive_seed(5, SeedPurpose::Channels, 0));
    let init = sample_initial_precoders(&cfg, derive_seed(5, SeedPurpose::InitialPrecoders, 0));
    let stop = StopRule {
        max_iterations: 60,
        cost_tolerance: 0.0,
        relative_tolerance: 1e-14,
    };
    let initial = leakage_cost(&channels, &init, &cfg).unwrap();

    println!("sweep  leakage/initial   max angle per receiver (rad)");
    Optimizer::new(ManifoldKind::Stiefel, stop)
        .optimize_with(&channels, &cfg, init, |state, _| {
            if state.iteration % 5 != 0 {
                return;
            }
            let angles: Vec<String> = (0..3)
                .map(|k| {
                    let a = max_interference_angle(&channels, &state.precoders, &cfg, k).unwrap();
                    format!("{:.2e}", a.unwrap())
                })
                .collect();
            println!("{:5}  {:15.3e}   {}", state.iteration, state.cost / initial, angles.join("  "));
        })
        .unwrap();
}
