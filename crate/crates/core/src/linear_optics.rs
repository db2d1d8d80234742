//! Passive linear optics on truncated Fock spaces.
//!
//! A passive network is described by its single-photon transfer matrix `S`:
//! a photon entering port `i` leaves port `j` with amplitude `S[(j, i)]`.
//! [`lift_passive`] builds the corresponding multi-photon operator and
//! [`dilation_kraus`] turns a unitary on system ⊗ vacuum ancilla into Kraus
//! operators on the system alone.

use crate::ops::{factorial, CMatrix, ONE, ZERO};
use num_complex::Complex64 as C64;

/// Fock-space operator of a passive network with single-photon matrix `s`
/// on modes with the given truncations (first mode most significant).
///
/// Each input basis state `∏ (a_i†)^{n_i}/√n_i! |0⟩` is mapped through
/// `a_i† → Σ_j S[(j, i)] a_j†`. Components exceeding a truncation are
/// dropped, so the result is exact on every photon-number block that fits.
pub fn lift_passive(s: &CMatrix, dims: &[usize]) -> CMatrix {
    let n_modes = dims.len();
    assert_eq!(s.nrows(), n_modes, "transfer matrix must match mode count");
    assert_eq!(s.ncols(), n_modes, "transfer matrix must be square");
    let total: usize = dims.iter().product();
    let mut strides = vec![1usize; n_modes];
    for k in (0..n_modes.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let levels =
        |idx: usize| -> Vec<usize> { (0..n_modes).map(|k| (idx / strides[k]) % dims[k]).collect() };

    // creation-operator polynomial applied to a dense truncated ket
    let create_mixed = |ket: &[C64], col: usize| -> Vec<C64> {
        let mut out = vec![ZERO; total];
        for (idx, &amp) in ket.iter().enumerate() {
            if amp == ZERO {
                continue;
            }
            let occ = levels(idx);
            for j in 0..n_modes {
                let coef = s[(j, col)];
                if coef == ZERO || occ[j] + 1 >= dims[j] {
                    continue;
                }
                let factor = ((occ[j] + 1) as f64).sqrt();
                out[idx + strides[j]] += amp * coef * factor;
            }
        }
        out
    };

    let mut u = CMatrix::zeros(total, total);
    for input in 0..total {
        let occ = levels(input);
        let mut ket = vec![ZERO; total];
        ket[0] = ONE;
        for (i, &n) in occ.iter().enumerate() {
            for _ in 0..n {
                ket = create_mixed(&ket, i);
            }
            let norm = factorial(n).sqrt();
            for v in ket.iter_mut() {
                *v /= norm;
            }
        }
        for (row, v) in ket.into_iter().enumerate() {
            u[(row, input)] = v;
        }
    }
    u
}

/// Kraus operators `K_j = ⟨j|_anc U |0⟩_anc` of a unitary on system ⊗ ancilla,
/// with the system as the most significant factor.
pub fn dilation_kraus(u: &CMatrix, sys_dim: usize, anc_dim: usize) -> Vec<CMatrix> {
    assert_eq!(u.nrows(), sys_dim * anc_dim);
    (0..anc_dim)
        .map(|j| CMatrix::from_fn(sys_dim, sys_dim, |a, b| u[(a * anc_dim + j, b * anc_dim)]))
        .collect()
}

/// Kraus operators on one mode of dimension `dim` for a photon split into the
/// kept amplitude `keep` and discarded output ports with amplitudes `lost`
/// (each discarded port starts in vacuum and is traced).
///
/// `K_m |n⟩ = √(n!/(p! m_1! …)) keep^p ∏ lost_i^{m_i} |p⟩` with `p = n − Σ m_i`.
/// Operators are listed for every count vector with `Σ m_i < dim`, in a fixed
/// order that depends only on `dim` and `lost.len()`, so lists built for
/// different amplitudes can be combined term by term.
pub fn splitter_kraus(dim: usize, keep: C64, lost: &[C64]) -> Vec<CMatrix> {
    let mut out = Vec::new();
    let mut counts = vec![0usize; lost.len()];
    loop {
        let m: usize = counts.iter().sum();
        if m < dim {
            let mut k = CMatrix::zeros(dim, dim);
            for n in m..dim {
                let p = n - m;
                let mut denom = factorial(p);
                let mut amp = keep.powu(p as u32);
                for (c, l) in counts.iter().zip(lost) {
                    denom *= factorial(*c);
                    amp *= l.powu(*c as u32);
                }
                k[(p, n)] = amp * (factorial(n) / denom).sqrt();
            }
            out.push(k);
        }
        // odometer over counts with each count < dim
        let mut i = 0;
        loop {
            if i == counts.len() {
                return out;
            }
            counts[i] += 1;
            if counts[i] < dim {
                break;
            }
            counts[i] = 0;
            i += 1;
        }
    }
}

/// Single-photon matrix of `exp[θ(a†b − a b†)]` on `n` ports acting on `(p, q)`.
pub fn beamsplitter_single_photon(n: usize, p: usize, q: usize, theta: f64) -> CMatrix {
    let mut m = CMatrix::identity(n, n);
    let (c, s) = (theta.cos(), theta.sin());
    m[(p, p)] = C64::new(c, 0.0);
    m[(q, q)] = C64::new(c, 0.0);
    m[(p, q)] = C64::new(s, 0.0);
    m[(q, p)] = C64::new(-s, 0.0);
    m
}

/// Single-photon matrix of a phase shift `e^{iφ}` on port `p` of `n`.
pub fn phase_single_photon(n: usize, p: usize, phi: f64) -> CMatrix {
    let mut m = CMatrix::identity(n, n);
    m[(p, p)] = C64::from_polar(1.0, phi);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops;

    #[test]
    fn lifted_beamsplitter_matches_matrix_exponential() {
        // exp[θ(a b† − a† b)] sends a† → cosθ a† + sinθ b†
        let theta = 0.37;
        let s = beamsplitter_single_photon(2, 0, 1, -theta);
        let lifted = lift_passive(&s, &[3, 3]);
        let exact = ops::beamsplitter(3, 3, theta);
        // compare on the blocks with at most two photons, which fit in dim 3
        for col in 0..9 {
            let (n0, n1) = (col / 3, col % 3);
            if n0 + n1 > 2 {
                continue;
            }
            for row in 0..9 {
                assert!((lifted[(row, col)] - exact[(row, col)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn splitter_kraus_is_complete() {
        let keep = C64::new(0.6, 0.1);
        let lost = [
            C64::new(0.0, 0.5),
            C64::from_polar((1.0 - 0.37 - 0.25f64).sqrt(), 1.2),
        ];
        let ks = splitter_kraus(4, keep, &lost);
        let mut sum = CMatrix::zeros(4, 4);
        for k in &ks {
            sum += k.adjoint() * k;
        }
        assert!((sum - CMatrix::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn dilation_of_identity_is_single_identity_kraus() {
        let u = CMatrix::identity(6, 6);
        let ks = dilation_kraus(&u, 3, 2);
        assert!((&ks[0] - CMatrix::identity(3, 3)).norm() < 1e-15);
        assert!(ks[1].norm() < 1e-15);
    }
}
