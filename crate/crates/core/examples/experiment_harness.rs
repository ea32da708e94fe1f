//! Drives the batch harness from config text, writes every CSV into a
//! scratch directory and prints where they went.

use ia_manifold::harness::{run_experiment, ExperimentConfig, ExperimentKind};

const CONFIG: &str = "
# small 3-user 2x2 batch
users = 3
tx_antennas = 2
rx_antennas = 2
streams = 1
seeds = 8
master_seed = 2024
snr_db = 0:40:10
max_iterations = 200
relative_tolerance = 1e-12
rate_mode = fixed
";

fn main() {
    let dir = std::env::temp_dir().join("ia-sim-example");
    let mut cfg = ExperimentConfig::parse(CONFIG).expect("config parses");
    cfg.output_dir = dir.clone();
    println!("config hash {}", cfg.config_hash());

    for kind in [ExperimentKind::Convergence, ExperimentKind::Rate, ExperimentKind::Angle] {
        for path in run_experiment(kind, &cfg).expect("batch runs") {
            let text = std::fs::read_to_string(&path).unwrap();
            println!("{:<12} {} ({} rows)", kind.name(), path.display(), text.lines().count() - 2);
        }
    }
    let dof = std::fs::read_to_string(dir.join("rate_dof.csv")).unwrap();
    print!("{dof}");
}
