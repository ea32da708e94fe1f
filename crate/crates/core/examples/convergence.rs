//! Mean normalized leakage over Monte-Carlo draws of the 3-user 2×2
//! network at 20 dB, one column per geometry.

use ia_manifold::harness::{convergence_runs, ExperimentConfig};
use ia_manifold::manifolds::ManifoldKind;

fn main() {
    let cfg = ExperimentConfig {
        seeds: 40,
        ..ExperimentConfig::default()
    };
    let report = convergence_runs(&cfg).expect("valid config");

    println!("{:>5} {:>12} {:>12} {:>12}", "sweep", "euclidean", "stiefel", "grassmann");
    for t in [0, 1, 2, 5, 10, 20, 30, 50, 100] {
        let row: Vec<String> = ManifoldKind::ALL
            .iter()
            .map(|&k| format!("{:12.3e}", report.mean_at(k, t).unwrap_or(f64::NAN)))
            .collect();
        println!("{t:>5} {}", row.join(" "));
    }

    for kind in ManifoldKind::ALL {
        let done = report
            .runs_for(kind)
            .filter(|r| r.final_normalized().is_some_and(|x| x <= 1e-6))
            .count();
        println!("{kind}: {done}/{} seeds below 1e-6", cfg.seeds);
    }
}
