//! Elementary operators on truncated Fock spaces and qubits.
//!
//! All matrices use the basis ordering of [`crate::tensor`]: the first factor
//! of a Kronecker product is the most significant index.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Annihilation operator truncated to `dim` Fock levels.
pub fn destroy(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn create(dim: usize) -> CMatrix {
    destroy(dim).adjoint()
}

pub fn number(dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            ZERO
        }
    })
}

/// `|i⟩⟨j|` in a `dim`-level space.
pub fn outer_basis(dim: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(i, j)] = ONE;
    m
}

pub fn projector(dim: usize, level: usize) -> CMatrix {
    outer_basis(dim, level, level)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Kronecker product of a list of factors; an empty list gives the 1x1 identity.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors
        .into_iter()
        .fold(CMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

/// Two-mode beamsplitter generator `θ(a b† − a† b)` on modes `(a, b)`.
pub fn beamsplitter_generator(dim_a: usize, dim_b: usize, theta: f64) -> CMatrix {
    let a = kron(&destroy(dim_a), &identity(dim_b));
    let b = kron(&identity(dim_a), &destroy(dim_b));
    (&a * b.adjoint() - a.adjoint() * &b) * C64::new(theta, 0.0)
}

/// Unitary `exp[θ(a b† − a† b)]` on the truncated two-mode space.
pub fn beamsplitter(dim_a: usize, dim_b: usize, theta: f64) -> CMatrix {
    beamsplitter_generator(dim_a, dim_b, theta).exp()
}

/// Truncated displacement `exp(α a† − α* a)`, the same construction QuTiP uses.
pub fn displacement(dim: usize, alpha: C64) -> CMatrix {
    let a = destroy(dim);
    (a.adjoint() * alpha - &a * alpha.conj()).exp()
}

/// Fock amplitudes `e^{-|α|²/2} αⁿ/√n!` of a coherent state for `n < dim`,
/// together with the probability mass that falls outside the truncation.
pub fn coherent_amplitudes(dim: usize, alpha: C64) -> (Vec<C64>, f64) {
    let mut amps = Vec::with_capacity(dim);
    let mut amp = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    let mut kept = 0.0;
    for n in 0..dim {
        if n > 0 {
            amp = amp * alpha / (n as f64).sqrt();
        }
        kept += amp.norm_sqr();
        amps.push(amp);
    }
    (amps, (1.0 - kept).max(0.0))
}

/// Poisson weights `P(k) = λᵏ e^{-λ} / k!` for `k < dim` plus the truncated tail mass.
pub fn poisson_weights(dim: usize, mean: f64) -> (Vec<f64>, f64) {
    let mut weights = Vec::with_capacity(dim);
    let mut p = (-mean).exp();
    let mut kept = 0.0;
    for k in 0..dim {
        if k > 0 {
            p *= mean / k as f64;
        }
        kept += p;
        weights.push(p);
    }
    (weights, (1.0 - kept).max(0.0))
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Largest entrywise deviation of `U†U` from the identity.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let prod = u.adjoint() * u;
    let n = prod.nrows();
    let mut err: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { ONE } else { ZERO };
            err = err.max((prod[(i, j)] - target).norm());
        }
    }
    err
}
