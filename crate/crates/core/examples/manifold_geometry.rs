//! Descent directions, metrics and retractions of the three geometries at
//! the same point, plus the dimension counts behind them.

use ia_manifold::alignment::euclidean_gradient;
use ia_manifold::manifolds::{descent_direction, inner_product, manifold_dim, retract, ManifoldKind};
use ia_manifold::network::{sample_channels, sample_initial_precoders, NetworkConfig};

fn main() {
    let cfg = NetworkConfig::symmetric(3, 4, 4, 2, 100.0).unwrap();
    let channels = sample_channels(&cfg, 3);
    let precoders = sample_initial_precoders(&cfg, 4);
    let v = &precoders[0];
    let gradient = euclidean_gradient(&channels, &precoders, &cfg, 0).unwrap();

    for kind in ManifoldKind::ALL {
        let z = descent_direction(kind, v, &gradient.value);
        let norm2 = inner_product(kind, v, &z.z, &z.z);
        let mut y = v.clone();
        y.axpy(1e-3, &z.z);
        let next = retract(kind, &y).unwrap();
        println!(
            "{:>9}: ⟨Z,Z⟩ = {norm2:10.4}  tangency {:.1e}  retracted defect {:.1e}  dim {}",
            kind.name(),
            z.tangency_defect(v),
            next.orthonormality_defect(),
            manifold_dim(kind, 4, 2)
        );
    }

    for kind in ManifoldKind::ALL {
        let back = retract(kind, v).unwrap();
        let moved = if kind == ManifoldKind::Grassmann {
            // Only the span is fixed: compare projectors.
            back.mul_adjoint(&back).distance(&v.mul_adjoint(v))
        } else {
            back.distance(v)
        };
        println!("{:>9}: retract(V) vs V = {moved:.1e}", kind.name());
    }
}
