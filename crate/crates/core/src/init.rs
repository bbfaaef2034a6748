//! Starting points for the iterative solvers.

use nalgebra::SymmetricEigen;

use crate::error::{CpError, Result};
use crate::kruskal::KruskalModel;
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;
use crate::Matrix;

/// Leading `R` left singular vectors of each unfolding.
///
/// Computed as eigenvectors of `Y_(n) Y_(n)^H`. When `R > I_n` the remaining
/// columns are Gaussian draws from `seed`, scaled to unit norm.
pub fn svd_init<T: Scalar>(y: &DenseTensor<T>, rank: usize, seed: u64) -> Result<KruskalModel<T>> {
    check_rank(rank)?;
    let mut rng = stream_rng(seed, Stream::Padding);
    let mut factors = Vec::with_capacity(y.order());
    for n in 0..y.order() {
        let yn = y.unfold(n)?;
        let eig = SymmetricEigen::new(&yn * yn.adjoint());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let i_n = y.dims()[n];
        let mut a = Matrix::zeros(i_n, rank);
        for (r, &k) in order.iter().take(rank).enumerate() {
            a.set_column(r, &eig.eigenvectors.column(k));
        }
        for r in i_n.min(rank)..rank {
            let mut col = Matrix::from_fn(i_n, 1, |_, _| T::standard_normal(&mut rng));
            col /= T::from_real(col.norm());
            a.set_column(r, &col.column(0));
        }
        factors.push(a);
    }
    KruskalModel::new(factors)
}

/// Independent standard Gaussian entries.
pub fn random_init<T: Scalar>(dims: &[usize], rank: usize, seed: u64) -> Result<KruskalModel<T>> {
    check_rank(rank)?;
    let mut rng = stream_rng(seed, Stream::Init);
    let factors = dims
        .iter()
        .map(|&d| Matrix::from_fn(d, rank, |_, _| T::standard_normal(&mut rng)))
        .collect();
    KruskalModel::new(factors)
}

fn check_rank(rank: usize) -> Result<()> {
    if rank == 0 {
        return Err(CpError::InvalidArgument("rank must be at least 1".into()));
    }
    Ok(())
}
