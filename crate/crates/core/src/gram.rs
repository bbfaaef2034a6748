//! Per-iteration Gram matrices and their Hadamard products.

use crate::kruskal::KruskalModel;
use crate::scalar::Scalar;
use crate::Matrix;

/// `C^(n) = A^(n)^H A^(n)`, `Γ^(n,m) = ⊛_{k≠n,m} C^(k)`, `Γ^(n) = Γ^(n,n)` and `Γ = ⊛_n C^(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramCache<T: Scalar> {
    c: Vec<Matrix<T>>,
    gamma_pair: Vec<Matrix<T>>,
    gamma_full: Matrix<T>,
}

impl<T: Scalar> GramCache<T> {
    pub fn from_factors(factors: &[Matrix<T>]) -> Self {
        let order = factors.len();
        let r = factors[0].ncols();
        let c: Vec<Matrix<T>> = factors.iter().map(|a| a.adjoint() * a).collect();
        let ones = Matrix::from_element(r, r, T::one());
        let mut gamma_pair = vec![ones.clone(); order * order];
        for n in 0..order {
            for m in n..order {
                let mut g = ones.clone();
                for (k, ck) in c.iter().enumerate() {
                    if k != n && k != m {
                        g.component_mul_assign(ck);
                    }
                }
                gamma_pair[m * order + n] = g.clone();
                gamma_pair[n * order + m] = g;
            }
        }
        let gamma_full = c.iter().fold(ones, |acc, ck| acc.component_mul(ck));
        Self { c, gamma_pair, gamma_full }
    }

    pub fn order(&self) -> usize {
        self.c.len()
    }

    pub fn rank(&self) -> usize {
        self.gamma_full.nrows()
    }

    pub fn c(&self, n: usize) -> &Matrix<T> {
        &self.c[n]
    }

    pub fn gamma_excl(&self, n: usize) -> &Matrix<T> {
        self.gamma_pair(n, n)
    }

    pub fn gamma_pair(&self, n: usize, m: usize) -> &Matrix<T> {
        &self.gamma_pair[n * self.order() + m]
    }

    pub fn gamma_full(&self) -> &Matrix<T> {
        &self.gamma_full
    }
}

/// Gram cache of the model with its weights folded into the last factor.
pub fn build_gram_cache<T: Scalar>(model: &KruskalModel<T>) -> GramCache<T> {
    GramCache::from_factors(model.absorb_weights().factors())
}
