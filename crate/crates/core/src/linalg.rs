//! Dense complex Hermitian helpers built on the real symmetric embedding
//! H = X + iY  ->  [[X, -Y], [Y, X]].
//!
//! The embedding is a *-algebra homomorphism, so matrix functions (square
//! roots, eigenvalue counts) can be evaluated on the real side with
//! nalgebra's symmetric eigendecomposition and mapped back.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Frobenius distance of `h` from its own adjoint, relative to its norm.
pub fn hermitian_defect(h: &DMatrix<Complex64>) -> f64 {
    let scale = h.norm().max(1.0);
    (h - h.adjoint()).norm() / scale
}

/// Real symmetric embedding of a Hermitian matrix.
/// Note the trace convention: <embed(A), embed(B)> = 2 Re<A, B>.
pub fn embed(h: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = h.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let (i, j) = (r % n, c % n);
        match (r < n, c < n) {
            (true, true) | (false, false) => h[(i, j)].re,
            (true, false) => -h[(i, j)].im,
            (false, true) => h[(i, j)].im,
        }
    })
}

/// Maps a real symmetric 2n x 2n matrix back to an n x n Hermitian matrix,
/// averaging the two embedded copies so that floating-point asymmetry between
/// them cancels.
pub fn unembed(r: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n = r.nrows() / 2;
    DMatrix::from_fn(n, n, |i, j| {
        let re = 0.5 * (r[(i, j)] + r[(n + i, n + j)]);
        let im = 0.5 * (r[(n + i, j)] - r[(i, n + j)]);
        Complex64::new(re, im)
    })
}

/// Eigenvalues of a Hermitian matrix in descending order.
///
/// The embedded spectrum carries each eigenvalue twice; adjacent pairs of the
/// sorted real spectrum are averaged back into single eigenvalues.
pub fn hermitian_eigenvalues(h: &DMatrix<Complex64>) -> Vec<f64> {
    let n = h.nrows();
    if n == 0 {
        return Vec::new();
    }
    let mut vals: Vec<f64> = embed(h).symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (0..n)
        .map(|k| 0.5 * (vals[2 * k] + vals[2 * k + 1]))
        .collect()
}

/// Full Hermitian eigendecomposition, eigenvalues descending.
///
/// Complex eigenvectors are recovered from the top half of each embedded
/// eigenvector pair; within a degenerate eigenvalue cluster they need not be
/// mutually orthogonal, which is irrelevant for the rank and leading-pair
/// uses in this crate.
pub fn hermitian_eigen(h: &DMatrix<Complex64>) -> (Vec<f64>, Vec<DVector<Complex64>>) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let eig = embed(h).symmetric_eigen();
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for k in 0..n {
        let ia = order[2 * k];
        let ib = order[2 * k + 1];
        values.push(0.5 * (eig.eigenvalues[ia] + eig.eigenvalues[ib]));
        let col = eig.eigenvectors.column(ia);
        let mut v = DVector::from_fn(n, |i, _| Complex64::new(col[i], col[n + i]));
        let norm = v.norm();
        if norm > 0.0 {
            v /= Complex64::new(norm, 0.0);
        }
        vectors.push(v);
    }
    (values, vectors)
}

/// Principal square root of a Hermitian positive semidefinite matrix.
/// Tiny negative eigenvalues from rounding are clamped to zero.
pub fn hermitian_sqrt(h: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let e = embed(h);
    let mut eig = e.symmetric_eigen();
    for v in eig.eigenvalues.iter_mut() {
        *v = v.max(0.0).sqrt();
    }
    unembed(&eig.recompose())
}

/// Re tr(A^H B) for same-shape complex matrices.
pub fn herm_inner(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Nearest-PSD cleanup: symmetrizes and clamps negative eigenvalues to zero.
/// Intended for matrices that are PSD up to solver rounding.
pub fn hermitian_psd_clean(h: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let sym = (h + h.adjoint()) * num_complex::Complex64::new(0.5, 0.0);
    let mut eig = embed(&sym).symmetric_eigen();
    let mut dirty = false;
    for v in eig.eigenvalues.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
            dirty = true;
        }
    }
    if dirty {
        unembed(&eig.recompose())
    } else {
        sym
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_hermitian(n: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = CounterRng::from_key(seed, 0, 0, 0);
        let g = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
    }

    fn random_psd(n: usize, seed: u64) -> DMatrix<Complex64> {
        let h = random_hermitian(n, seed);
        &h * h.adjoint()
    }

    #[test]
    fn embed_unembed_round_trip() {
        let h = random_hermitian(5, 11);
        let back = unembed(&embed(&h));
        assert!((&h - &back).norm() < 1e-14);
    }

    #[test]
    fn sqrt_squares_back() {
        for seed in [1, 2, 3] {
            let p = random_psd(6, seed);
            let s = hermitian_sqrt(&p);
            assert!(hermitian_defect(&s) <= 1e-12);
            assert!((&s * &s - &p).norm() < 1e-10 * p.norm().max(1.0));
        }
    }

    #[test]
    fn eigen_reconstructs_leading_action() {
        let h = random_hermitian(4, 7);
        let (vals, vecs) = hermitian_eigen(&h);
        assert!(vals.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        for (lam, v) in vals.iter().zip(vecs.iter()) {
            let r = &h * v - v * Complex64::new(*lam, 0.0);
            assert!(r.norm() < 1e-10, "eigenpair residual {}", r.norm());
        }
    }

    #[test]
    fn eigenvalues_match_trace() {
        let h = random_hermitian(6, 19);
        let vals = hermitian_eigenvalues(&h);
        let tr: f64 = (0..6).map(|i| h[(i, i)].re).sum();
        let sum: f64 = vals.iter().sum();
        assert!((tr - sum).abs() < 1e-10);
    }
}
