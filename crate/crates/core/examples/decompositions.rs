//! The dense kernels underneath everything else: Hermitian eigensolver,
//! thin SVD, Householder QR and Gram-Schmidt, each checked by reassembly.

use ia_manifold::numerics::{gram_schmidt, hermitian_eig, thin_qr, thin_svd, ComplexMatrix};
use num_complex::Complex64;

fn main() {
    let a = ComplexMatrix::from_fn(4, 3, |r, c| {
        Complex64::new((r + 2 * c) as f64 - 1.5, (r as f64 * 0.7 - c as f64).sin())
    });

    let h = a.mul_adjoint(&a);
    let eig = hermitian_eig(&h).unwrap();
    let rebuilt = &(&eig.vectors * &ComplexMatrix::diag_real(&eig.values)) * &eig.vectors.adjoint();
    println!("eigenvalues (ascending): {:.6?}", eig.values);
    println!("  ‖VΛV† − H‖ = {:.2e}", rebuilt.distance(&h));

    let svd = thin_svd(&a).unwrap();
    let rebuilt = &(&svd.u * &ComplexMatrix::diag_real(&svd.singular_values)) * &svd.v.adjoint();
    println!("singular values: {:.6?}", svd.singular_values);
    println!("  ‖UΣV† − A‖ = {:.2e}", rebuilt.distance(&a));

    let qr = thin_qr(&a).unwrap();
    println!("QR: ‖QR − A‖ = {:.2e}, ‖Q†Q − I‖ = {:.2e}", (&qr.q * &qr.r).distance(&a), qr.q.orthonormality_defect());

    let q = gram_schmidt(&a).unwrap();
    println!("Gram-Schmidt: ‖Q†Q − I‖ = {:.2e}", q.orthonormality_defect());

    let mut rank_one = a.clone();
    let first = a.col(0).to_vec();
    rank_one.col_mut(1).copy_from_slice(&first);
    println!("duplicate column: {}", gram_schmidt(&rank_one).unwrap_err());
}
