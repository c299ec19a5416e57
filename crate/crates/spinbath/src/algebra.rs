//! Exact dense Hermitian linear algebra for small multi-spin Hilbert spaces.
//!
//! Everything here works on general complex matrices; dimensions stay small
//! (a few hundred at most for the cluster problems), so dense storage and
//! full eigendecompositions are the simplest reliable choice.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest entry modulus, used for relative tolerances.
pub fn max_norm(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Spin operators for a single spin of total quantum number S.
///
/// The basis is ordered by descending magnetic quantum number
/// m = S, S-1, ..., -S; every other module relies on this ordering.
#[derive(Debug, Clone)]
pub struct SpinOperatorSet {
    pub total_spin: f64,
    pub dimension: usize,
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
    pub s_plus: CMatrix,
    pub s_minus: CMatrix,
}

/// Build the spin matrices for arbitrary total spin (integer or half-integer).
pub fn build_spin_operators(total_spin: f64) -> Result<SpinOperatorSet> {
    let two_s = 2.0 * total_spin;
    if total_spin < 0.0 || (two_s - two_s.round()).abs() > 1e-9 {
        return Err(invalid(format!(
            "total spin must be a non-negative half-integer, got {total_spin}"
        )));
    }
    let two_s = two_s.round() as i64;
    let dim = (two_s + 1) as usize;
    let s = total_spin;

    let mut sz = CMatrix::zeros(dim, dim);
    let mut s_plus = CMatrix::zeros(dim, dim);
    for (row, m2) in (-two_s..=two_s).rev().step_by(2).enumerate() {
        let m = m2 as f64 / 2.0;
        sz[(row, row)] = Complex64::new(m, 0.0);
        // S+ |m> = sqrt(S(S+1) - m(m+1)) |m+1>; |m+1> sits one row above.
        if row > 0 {
            let elem = (s * (s + 1.0) - m * (m + 1.0)).sqrt();
            s_plus[(row - 1, row)] = Complex64::new(elem, 0.0);
        }
    }
    let s_minus = s_plus.adjoint();
    let sx = (&s_plus + &s_minus).scale(0.5);
    let sy = (&s_plus - &s_minus) * Complex64::new(0.0, -0.5);

    Ok(SpinOperatorSet {
        total_spin,
        dimension: dim,
        sx,
        sy,
        sz,
        s_plus,
        s_minus,
    })
}

/// Tensor-product space of spin factors in a fixed canonical order
/// (central system first, then bath spins by ascending site index).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductSpace {
    factor_dimensions: Vec<usize>,
    total_dimension: usize,
}

impl ProductSpace {
    pub fn new(factor_dimensions: Vec<usize>) -> Result<Self> {
        if factor_dimensions.is_empty() || factor_dimensions.iter().any(|&d| d == 0) {
            return Err(invalid("product space needs non-empty, non-zero factors"));
        }
        let total_dimension = factor_dimensions.iter().product();
        Ok(Self {
            factor_dimensions,
            total_dimension,
        })
    }

    pub fn factor_dimensions(&self) -> &[usize] {
        &self.factor_dimensions
    }

    pub fn total_dimension(&self) -> usize {
        self.total_dimension
    }

    /// Dimension of everything after `slot` (the fast index block size).
    fn post_dimension(&self, slot: usize) -> usize {
        self.factor_dimensions[slot + 1..].iter().product()
    }

    fn pre_dimension(&self, slot: usize) -> usize {
        self.factor_dimensions[..slot].iter().product()
    }
}

/// Embed a single-factor operator into the full product space:
/// identity on every other factor.
pub fn embed(op: &CMatrix, slot: usize, space: &ProductSpace) -> Result<CMatrix> {
    let dims = space.factor_dimensions();
    if slot >= dims.len() {
        return Err(invalid(format!(
            "slot {slot} out of range for {} factors",
            dims.len()
        )));
    }
    if op.nrows() != dims[slot] || op.ncols() != dims[slot] {
        return Err(invalid(format!(
            "operator is {}x{}, slot {slot} has dimension {}",
            op.nrows(),
            op.ncols(),
            dims[slot]
        )));
    }
    let pre = CMatrix::identity(space.pre_dimension(slot), space.pre_dimension(slot));
    let post = CMatrix::identity(space.post_dimension(slot), space.post_dimension(slot));
    Ok(pre.kronecker(op).kronecker(&post))
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues ascending and a
/// deterministic phase convention on the eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEigensystem {
    pub eigenvalues: Vec<f64>,
    /// Column k is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: CMatrix,
}

/// Decompose a Hermitian matrix. Fails if the input deviates from
/// Hermiticity by more than 1e-9 relative to its largest entry.
pub fn eigendecompose(h: &CMatrix) -> Result<HermitianEigensystem> {
    let scale = max_norm(h);
    let dev = max_norm(&(h - h.adjoint()));
    if dev > 1e-9 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NonHermitian {
            deviation: dev,
            scale,
        });
    }

    let se = h.clone().symmetric_eigen();
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        eigenvalues.push(se.eigenvalues[src]);
        let mut col = se.eigenvectors.column(src).clone_owned();
        // Phase convention: the largest-modulus component is real positive.
        // First strict maximum wins, so the choice is reproducible.
        let mut best = 0;
        let mut best_norm = 0.0;
        for (i, z) in col.iter().enumerate() {
            let nz = z.norm();
            if nz > best_norm + 1e-300 {
                best_norm = nz;
                best = i;
            }
        }
        if best_norm > 0.0 {
            let phase = col[best].conj() / Complex64::new(best_norm, 0.0);
            col *= phase;
        }
        eigenvectors.set_column(k, &col);
    }
    Ok(HermitianEigensystem {
        eigenvalues,
        eigenvectors,
    })
}

impl HermitianEigensystem {
    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Reconstruction V diag(lambda) V^dag.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.dimension();
        let mut d = CMatrix::zeros(n, n);
        for (i, &ev) in self.eigenvalues.iter().enumerate() {
            d[(i, i)] = Complex64::new(ev, 0.0);
        }
        &self.eigenvectors * d * self.eigenvectors.adjoint()
    }

    /// Apply exp(-i H t) to a state without forming the full unitary.
    pub fn evolve_state(&self, state: &CVector, t: f64) -> CVector {
        let mut coeffs = self.eigenvectors.adjoint() * state;
        for (i, &ev) in self.eigenvalues.iter().enumerate() {
            coeffs[i] *= Complex64::from_polar(1.0, -ev * t);
        }
        &self.eigenvectors * coeffs
    }
}

/// Unitary free-evolution operator exp(-i H t) from a decomposed Hamiltonian.
pub fn evolve(eig: &HermitianEigensystem, t: f64) -> CMatrix {
    let n = eig.dimension();
    let mut d = CMatrix::zeros(n, n);
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        d[(i, i)] = Complex64::from_polar(1.0, -ev * t);
    }
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Off-diagonal element `<u| Tr_B rho |l>` of the reduced central density
/// matrix, with the central system in slot 0 of the product space.
pub fn partial_trace_offdiagonal(
    state: &CMatrix,
    space: &ProductSpace,
    u: usize,
    l: usize,
) -> Result<Complex64> {
    let total = space.total_dimension();
    if state.nrows() != total || state.ncols() != total {
        return Err(invalid("density matrix does not match product space"));
    }
    let central = space.factor_dimensions()[0];
    let bath = total / central;
    if u >= central || l >= central || u == l {
        return Err(invalid(format!(
            "central indices u={u}, l={l} invalid for dimension {central}"
        )));
    }
    let trace: Complex64 = (0..total).map(|i| state[(i, i)]).sum();
    if (trace - C_ONE).norm() > 1e-9 {
        return Err(invalid(format!("density matrix trace {} != 1", trace)));
    }
    let mut sum = C_ZERO;
    for k in 0..bath {
        sum += state[(u * bath + k, l * bath + k)];
    }
    Ok(sum)
}

/// Same off-diagonal for a pure state given as a vector, where the central
/// "levels" are arbitrary unit vectors in the central factor.
pub fn offdiagonal_from_state(psi: &CVector, u_vec: &CVector, l_vec: &CVector) -> Complex64 {
    let central = u_vec.len();
    let bath = psi.len() / central;
    debug_assert_eq!(central * bath, psi.len());
    let mut sum = C_ZERO;
    for k in 0..bath {
        let mut au = C_ZERO;
        let mut al = C_ZERO;
        for c in 0..central {
            let amp = psi[c * bath + k];
            au += u_vec[c].conj() * amp;
            al += l_vec[c].conj() * amp;
        }
        sum += au * al.conj();
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let a = CMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        (&a + a.adjoint()).scale(0.5)
    }

    #[test]
    fn spin_half_matches_pauli_over_two() {
        let ops = build_spin_operators(0.5).unwrap();
        assert_eq!(ops.dimension, 2);
        assert_relative_eq!(ops.sx[(0, 1)].re, 0.5);
        assert_relative_eq!(ops.sx[(1, 0)].re, 0.5);
        assert_relative_eq!(ops.sz[(0, 0)].re, 0.5);
        assert_relative_eq!(ops.sz[(1, 1)].re, -0.5);
        assert_eq!(ops.sz[(0, 1)], C_ZERO);
    }

    #[test]
    fn spin_zero_is_trivial() {
        let ops = build_spin_operators(0.0).unwrap();
        assert_eq!(ops.dimension, 1);
        assert_eq!(max_norm(&ops.sx), 0.0);
        assert_eq!(max_norm(&ops.sz), 0.0);
    }

    #[test]
    fn non_half_integer_spin_rejected() {
        assert!(build_spin_operators(0.7).is_err());
        assert!(build_spin_operators(-0.5).is_err());
    }

    #[test]
    fn commutator_holds_for_nine_halves() {
        let ops = build_spin_operators(4.5).unwrap();
        assert_eq!(ops.dimension, 10);
        let comm = &ops.sx * &ops.sy - &ops.sy * &ops.sx;
        let expected = &ops.sz * Complex64::new(0.0, 1.0);
        assert!(max_norm(&(comm - expected)) <= 1e-12);
    }

    #[test]
    fn pauli_product_identity_for_spin_half() {
        // sigma_i sigma_j = delta_ij + i eps_ijk sigma_k, with sigma = 2 S.
        let ops = build_spin_operators(0.5).unwrap();
        let two = Complex64::new(2.0, 0.0);
        let sig = [&ops.sx * two, &ops.sy * two, &ops.sz * two];
        let eye = CMatrix::identity(2, 2);
        for i in 0..3 {
            for j in 0..3 {
                let prod = &sig[i] * &sig[j];
                let mut expected = if i == j { eye.clone() } else { CMatrix::zeros(2, 2) };
                for k in 0..3 {
                    let eps = match (i, j, k) {
                        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
                        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
                        _ => 0.0,
                    };
                    if eps != 0.0 {
                        expected += &sig[k] * Complex64::new(0.0, eps);
                    }
                }
                assert!(max_norm(&(prod - expected)) <= 1e-12);
            }
        }
    }

    #[test]
    fn embed_on_two_qubits() {
        let ops = build_spin_operators(0.5).unwrap();
        let space = ProductSpace::new(vec![2, 2]).unwrap();
        let sz0 = embed(&ops.sz, 0, &space).unwrap();
        let expected = [0.5, 0.5, -0.5, -0.5];
        for (i, &v) in expected.iter().enumerate() {
            assert_relative_eq!(sz0[(i, i)].re, v);
        }
        let sz1 = embed(&ops.sz, 1, &space).unwrap();
        let ising = &sz0 * &sz1;
        let expected = [0.25, -0.25, -0.25, 0.25];
        for (i, &v) in expected.iter().enumerate() {
            assert_relative_eq!(ising[(i, i)].re, v);
        }
    }

    #[test]
    fn embeddings_on_distinct_slots_commute() {
        let ops = build_spin_operators(0.5).unwrap();
        let space = ProductSpace::new(vec![20, 2, 2]).unwrap();
        let a = embed(&ops.sx, 1, &space).unwrap();
        let b = embed(&ops.sy, 2, &space).unwrap();
        assert!(max_norm(&(&a * &b - &b * &a)) <= 1e-14);
    }

    #[test]
    fn embed_rejects_bad_slot() {
        let ops = build_spin_operators(0.5).unwrap();
        let space = ProductSpace::new(vec![2, 2]).unwrap();
        assert!(embed(&ops.sz, 2, &space).is_err());
    }

    #[test]
    fn eigendecompose_diagonal() {
        let mut h = CMatrix::zeros(3, 3);
        for (i, v) in [1.0, 2.0, 3.0].iter().enumerate() {
            h[(i, i)] = Complex64::new(*v, 0.0);
        }
        let eig = eigendecompose(&h).unwrap();
        assert_relative_eq!(eig.eigenvalues[0], 1.0);
        assert_relative_eq!(eig.eigenvalues[2], 3.0);
        assert!(max_norm(&(eig.eigenvectors.clone() - CMatrix::identity(3, 3))) <= 1e-12);
    }

    #[test]
    fn eigendecompose_half_pauli_x() {
        let ops = build_spin_operators(0.5).unwrap();
        let eig = eigendecompose(&ops.sx).unwrap();
        assert_relative_eq!(eig.eigenvalues[0], -0.5, epsilon = 1e-14);
        assert_relative_eq!(eig.eigenvalues[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn eigendecompose_reconstructs_random_matrix() {
        let h = random_hermitian(40, 7);
        let eig = eigendecompose(&h).unwrap();
        let scale = max_norm(&h);
        assert!(max_norm(&(eig.reconstruct() - &h)) <= 1e-10 * scale);
        let vtv = eig.eigenvectors.adjoint() * &eig.eigenvectors;
        assert!(max_norm(&(vtv - CMatrix::identity(40, 40))) <= 1e-12);
    }

    #[test]
    fn eigendecompose_rejects_non_hermitian() {
        let mut h = CMatrix::zeros(2, 2);
        h[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            eigendecompose(&h),
            Err(Error::NonHermitian { .. })
        ));
    }

    #[test]
    fn evolution_at_zero_is_identity() {
        let h = random_hermitian(6, 3);
        let eig = eigendecompose(&h).unwrap();
        let u = evolve(&eig, 0.0);
        assert!(max_norm(&(u - CMatrix::identity(6, 6))) <= 1e-12);
    }

    #[test]
    fn evolution_phase_for_spin_half() {
        let ops = build_spin_operators(0.5).unwrap();
        let omega = 2.0;
        let eig = eigendecompose(&(&ops.sz * Complex64::new(omega, 0.0))).unwrap();
        let u = evolve(&eig, std::f64::consts::PI / omega);
        let expected = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_2);
        assert!((u[(0, 0)] - expected).norm() <= 1e-12);
        assert!((u[(1, 1)] - expected.conj()).norm() <= 1e-12);
    }

    #[test]
    fn evolution_composes_on_three_spins() {
        // Three coupled spins: U(tau)^2 = U(2 tau), and unitarity holds.
        let ops = build_spin_operators(0.5).unwrap();
        let space = ProductSpace::new(vec![2, 2, 2]).unwrap();
        let mut h = CMatrix::zeros(8, 8);
        for (i, j, w) in [(0usize, 1usize, 1.3), (1, 2, 0.7), (0, 2, 0.4)] {
            let a = embed(&ops.sx, i, &space).unwrap() * embed(&ops.sx, j, &space).unwrap();
            let b = embed(&ops.sz, i, &space).unwrap() * embed(&ops.sz, j, &space).unwrap();
            h += (a + b).scale(w);
        }
        let eig = eigendecompose(&h).unwrap();
        let tau = 0.37;
        let u1 = evolve(&eig, tau);
        let u2 = evolve(&eig, 2.0 * tau);
        assert!(max_norm(&(&u1 * &u1 - u2)) <= 1e-9);
        let unit = u1.adjoint() * &u1;
        assert!(max_norm(&(unit - CMatrix::identity(8, 8))) <= 1e-10);
    }

    #[test]
    fn partial_trace_of_product_state() {
        // (|u> + |l>)/sqrt(2) tensor |bath up> has off-diagonal 1/2.
        let space = ProductSpace::new(vec![2, 2]).unwrap();
        let mut psi = CVector::zeros(4);
        let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        psi[0] = amp; // |u, up>
        psi[2] = amp; // |l, up>
        let rho = &psi * psi.adjoint();
        let val = partial_trace_offdiagonal(&rho, &space, 0, 1).unwrap();
        assert!((val - Complex64::new(0.5, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn partial_trace_of_maximally_entangled_state() {
        let space = ProductSpace::new(vec![2, 2]).unwrap();
        let mut psi = CVector::zeros(4);
        let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        psi[0] = amp; // |u, up>
        psi[3] = amp; // |l, down>
        let rho = &psi * psi.adjoint();
        let val = partial_trace_offdiagonal(&rho, &space, 0, 1).unwrap();
        assert!(val.norm() <= 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_indices() {
        let space = ProductSpace::new(vec![2, 2]).unwrap();
        let rho = CMatrix::identity(4, 4).scale(0.25);
        assert!(partial_trace_offdiagonal(&rho, &space, 0, 0).is_err());
        assert!(partial_trace_offdiagonal(&rho, &space, 2, 0).is_err());
    }

    #[test]
    fn overlap_route_matches_partial_trace_route() {
        // Pure-dephasing two-bath-spin problem evolved for a while: the
        // bath-overlap evaluation must equal the density-matrix route.
        let ops = build_spin_operators(0.5).unwrap();
        let space = ProductSpace::new(vec![2, 2, 2]).unwrap();
        let sz0 = embed(&ops.sz, 0, &space).unwrap();
        let mut h = &sz0 * (embed(&ops.sz, 1, &space).unwrap() * Complex64::new(2.1, 0.0));
        h += &sz0 * (embed(&ops.sz, 2, &space).unwrap() * Complex64::new(0.9, 0.0));
        let flip = embed(&ops.s_plus, 1, &space).unwrap() * embed(&ops.s_minus, 2, &space).unwrap();
        h += (&flip + flip.adjoint()).scale(-0.55);
        let eig = eigendecompose(&h).unwrap();

        let mut psi0 = CVector::zeros(8);
        let amp = Complex64::new(0.5_f64.sqrt(), 0.0);
        psi0[1] = amp; // |u, up down>
        psi0[5] = amp; // |l, up down>
        let t = 0.8;
        let psi = eig.evolve_state(&psi0, t);
        let rho = &psi * psi.adjoint();
        let via_trace = partial_trace_offdiagonal(&rho, &space, 0, 1).unwrap();

        // Conditional bath evolution: h_u on the bath for central index 0,
        // h_l for central index 1 (h is block diagonal in the central index).
        let hu = CMatrix::from_fn(4, 4, |i, j| h[(i, j)]);
        let hl = CMatrix::from_fn(4, 4, |i, j| h[(4 + i, 4 + j)]);
        let mut b0 = CVector::zeros(4);
        b0[1] = C_ONE;
        let bu = eigendecompose(&hu).unwrap().evolve_state(&b0, t);
        let bl = eigendecompose(&hl).unwrap().evolve_state(&b0, t);
        let overlap: Complex64 = bu.iter().zip(bl.iter()).map(|(a, b)| a.conj() * b).sum();
        assert!((overlap.norm() - 2.0 * via_trace.norm()).abs() <= 1e-9);
    }

    #[test]
    fn offdiagonal_from_state_matches_density_route() {
        let space = ProductSpace::new(vec![2, 4]).unwrap();
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(11);
        let mut psi = CVector::from_fn(8, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        psi /= Complex64::new(psi.norm(), 0.0);
        let rho = &psi * psi.adjoint();
        let via_trace = partial_trace_offdiagonal(&rho, &space, 0, 1).unwrap();
        let mut u = CVector::zeros(2);
        u[0] = C_ONE;
        let mut l = CVector::zeros(2);
        l[1] = C_ONE;
        let via_state = offdiagonal_from_state(&psi, &u, &l);
        assert!((via_trace - via_state).norm() <= 1e-12);
    }
}
