//! Checks the per-user feasibility bound `M + N >= (K + 1) d` on a few
//! symmetric networks and reports the degrees of freedom on offer.

use ia_manifold::network::{check_feasibility, NetworkConfig};

fn main() {
    let cases = [(3, 2, 1), (4, 2, 1), (3, 4, 2), (4, 5, 2), (5, 5, 2)];
    println!("{:>3} {:>3} {:>3}  feasible  total streams", "K", "M=N", "d");
    for (users, antennas, streams) in cases {
        let cfg = NetworkConfig::symmetric(users, antennas, antennas, streams, 1.0)
            .expect("valid shape");
        let verdict = check_feasibility(&cfg);
        println!(
            "{users:>3} {antennas:>3} {streams:>3}  {:<8}  {}",
            verdict.all,
            users * streams
        );
    }
}
