//! Hurwitz–Radon families of orthogonal matrices and the witness tensors
//! `z_{n,k}` built from them.
//!
//! A family `A₁ = I, A₂ = J₁, …, A_n = J_{n−1}` uses pairwise anticommuting
//! skew matrices with `Jᵢ² = −I`, so that `Θ(x) = Σ xᵢAᵢ` satisfies
//! `Θ(x)ᵀΘ(x) = ‖x‖²·I`. All matrices are signed permutations with entries in
//! `{−1, 0, 1}`, which keeps every family-level identity in exact arithmetic.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::compalg::{AlgebraKind, CompositionAlgebra};
use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::Tensor;

/// Largest `n` supported by [`build_family`].
pub const MAX_N: usize = 16;

/// Default cap on `nᵏ·N²` for [`witness_tensor`].
pub const WITNESS_BUDGET: u128 = 100_000_000;

/// `e_j ↦ sign[j]·e_{perm[j]}`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct SignedPerm {
    perm: Vec<usize>,
    sign: Vec<i8>,
}

impl SignedPerm {
    fn identity(n: usize) -> Self {
        Self { perm: (0..n).collect(), sign: vec![1; n] }
    }

    fn from_matrix(m: &DMatrix<f64>) -> Self {
        let n = m.ncols();
        let mut perm = vec![0; n];
        let mut sign = vec![0; n];
        for j in 0..n {
            for i in 0..n {
                if m[(i, j)] != 0.0 {
                    perm[j] = i;
                    sign[j] = m[(i, j)].signum() as i8;
                }
            }
        }
        Self { perm, sign }
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.perm.len();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            m[(self.perm[j], j)] = f64::from(self.sign[j]);
        }
        m
    }

    /// `self · other`.
    fn mul(&self, other: &SignedPerm) -> SignedPerm {
        let n = self.perm.len();
        let mut perm = vec![0; n];
        let mut sign = vec![0; n];
        for j in 0..n {
            let mid = other.perm[j];
            perm[j] = self.perm[mid];
            sign[j] = other.sign[j] * self.sign[mid];
        }
        SignedPerm { perm, sign }
    }

    fn kron(&self, other: &SignedPerm) -> SignedPerm {
        let (a, b) = (self.perm.len(), other.perm.len());
        let mut perm = vec![0; a * b];
        let mut sign = vec![0; a * b];
        for i in 0..a {
            for j in 0..b {
                perm[i * b + j] = self.perm[i] * b + other.perm[j];
                sign[i * b + j] = self.sign[i] * other.sign[j];
            }
        }
        SignedPerm { perm, sign }
    }
}

/// Radon–Hurwitz number `ρ(2^{4a+b}·odd) = 8a + 2^b`.
pub fn radon_hurwitz(big_n: usize) -> usize {
    assert!(big_n > 0, "ρ is defined on positive integers");
    let e = big_n.trailing_zeros() as usize;
    8 * (e / 4) + (1 << (e % 4))
}

/// Smallest `N` admitting an `n`-dimensional subspace of `M_N(ℝ)` made of
/// multiples of orthogonal matrices.
#[allow(non_snake_case)]
pub fn N_of(n: usize) -> Result<usize> {
    if n == 0 || n > MAX_N {
        return Err(Error::OutOfRange(format!("n = {n} outside 1..={MAX_N}")));
    }
    let mut big_n = 1;
    while radon_hurwitz(big_n) < n {
        big_n *= 2;
    }
    Ok(big_n)
}

/// Anticommuting skew signed permutations with square `−I` in `M_N`, as many
/// as the construction provides (`ρ(N) − 1`).
fn complex_structures(big_n: usize) -> Vec<SignedPerm> {
    let from_alg = |kind: AlgebraKind| -> Vec<SignedPerm> {
        let a = CompositionAlgebra::new(kind);
        (1..a.dim)
            .map(|i| {
                let mut e = vec![0.0; a.dim];
                e[i] = 1.0;
                SignedPerm::from_matrix(&a.left_mult_matrix(&e).expect("unit vector"))
            })
            .collect()
    };
    match big_n {
        1 => Vec::new(),
        2 => from_alg(AlgebraKind::C),
        4 => from_alg(AlgebraKind::H),
        8 => from_alg(AlgebraKind::O),
        16 => {
            let e = SignedPerm { perm: vec![1, 0], sign: vec![1, -1] };
            let x = SignedPerm { perm: vec![1, 0], sign: vec![1, 1] };
            let mut out = vec![e.kron(&SignedPerm::identity(8))];
            out.extend(from_alg(AlgebraKind::O).iter().map(|l| x.kron(l)));
            out
        }
        _ => {
            let rest = big_n / 16;
            let base = complex_structures(16);
            let omega = base.iter().skip(1).fold(base[0].clone(), |acc, j| acc.mul(j));
            let mut out: Vec<SignedPerm> =
                base.iter().map(|j| j.kron(&SignedPerm::identity(rest))).collect();
            out.extend(complex_structures(rest).iter().map(|k| omega.kron(k)));
            out
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HurwitzFamily {
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    #[serde(skip)]
    perms: Vec<SignedPerm>,
}

impl HurwitzFamily {
    fn perm(&self, i: usize) -> SignedPerm {
        self.perms[i].clone()
    }

    pub fn mats(&self) -> Vec<DMatrix<f64>> {
        (0..self.n).map(|i| self.perm(i).to_matrix()).collect()
    }

    /// `Θ(x) = Σ xᵢAᵢ`.
    pub fn theta(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        crate::error::check_dim(self.n, x.len())?;
        let mut m = DMatrix::zeros(self.big_n, self.big_n);
        for (i, a) in self.mats().iter().enumerate() {
            m += a * x[i];
        }
        Ok(m)
    }

    /// Checks `(1/N)Tr(AᵢᵀAⱼ) = δᵢⱼ` and `AᵢᵀAⱼ + AⱼᵀAᵢ = 0` for `i ≠ j`,
    /// both in exact arithmetic.
    pub fn verify(&self) -> Result<()> {
        let mats = self.mats();
        let nn = self.big_n as f64;
        for i in 0..self.n {
            for j in 0..self.n {
                let prod = mats[i].transpose() * &mats[j];
                let ip = prod.trace() / nn;
                let expect = if i == j { 1.0 } else { 0.0 };
                if ip != expect {
                    return Err(Error::Verification(format!("⟨A{i},A{j}⟩ = {ip}")));
                }
                if i != j {
                    let sym = &prod + prod.transpose();
                    if sym.iter().any(|v| *v != 0.0) {
                        return Err(Error::Verification(format!("A{i}, A{j} fail anticommutation")));
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn build_family(n: usize) -> Result<HurwitzFamily> {
    let big_n = N_of(n)?;
    let mut perms = vec![SignedPerm::identity(big_n)];
    perms.extend(complex_structures(big_n).into_iter().take(n - 1));
    if perms.len() < n {
        return Err(Error::Verification(format!("construction in M_{big_n} too small for n = {n}")));
    }
    Ok(HurwitzFamily { n, big_n, perms })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessTensor {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub coords: Tensor,
    pub sq_norm: f64,
    /// `(i₀, j₀)` of the selected `z(i,j)`.
    pub source: (usize, usize),
    /// `Σ_{i,j} ‖z(i,j)‖²`, equal to `N·nᵏ`.
    pub total_sq_norm: u128,
}

/// Builds all `z(i,j)` implicitly and returns the one of largest norm (ties
/// broken by the smallest `(i,j)`).
pub fn witness_tensor(n: usize, k: usize) -> Result<WitnessTensor> {
    witness_tensor_with_budget(n, k, WITNESS_BUDGET)
}

pub fn witness_tensor_with_budget(n: usize, k: usize, budget: u128) -> Result<WitnessTensor> {
    if k == 0 {
        return Err(Error::OutOfRange("k must be at least 1".into()));
    }
    let family = build_family(n)?;
    let big_n = family.big_n;
    let tuples = (n as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    let needed = tuples.saturating_mul((big_n * big_n) as u128);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, limit: budget });
    }
    let tuples = tuples as usize;
    let perms: Vec<SignedPerm> = (0..n).map(|i| family.perm(i)).collect();

    // products[t] = A_{l₁}⋯A_{l_k} for the row-major tuple index t.
    let mut products = vec![SignedPerm::identity(big_n)];
    for _ in 0..k {
        products = products.iter().flat_map(|p| perms.iter().map(move |a| p.mul(a))).collect();
    }

    let mut counts = vec![0u128; big_n * big_n];
    for p in &products {
        for j in 0..big_n {
            counts[p.perm[j] * big_n + j] += 1;
        }
    }
    let total: u128 = counts.iter().sum();
    if total != big_n as u128 * tuples as u128 {
        return Err(Error::Verification(format!("Σ‖z(i,j)‖² = {total} ≠ N·nᵏ")));
    }
    let best = counts
        .iter()
        .enumerate()
        .fold((0, 0u128), |acc, (idx, &c)| if c > acc.1 { (idx, c) } else { acc })
        .0;
    let (i0, j0) = (best / big_n, best % big_n);
    let mut data = vec![0.0; tuples];
    for (t, p) in products.iter().enumerate() {
        if p.perm[j0] == i0 {
            data[t] = f64::from(p.sign[j0]);
        }
    }
    let coords = Tensor::new(vec![n; k], data)?;
    let sq_norm = coords.norm_sq();
    Ok(WitnessTensor { n, k, big_n, coords, sq_norm, source: (i0, j0), total_sq_norm: total })
}

impl WitnessTensor {
    /// `z` placed in the `ℝⁿ` block of `(ℝ^{n+1})^{⊗k}`.
    pub fn embedded(&self) -> Tensor {
        let dims = vec![self.n + 1; self.k];
        let mut out = Tensor::zeros(&dims);
        for flat in 0..self.coords.len() {
            let v = self.coords.data()[flat];
            if v != 0.0 {
                let idx: Vec<usize> = self.coords.multi_index(flat).iter().map(|i| i + 1).collect();
                out.set(&idx, v);
            }
        }
        out
    }

    /// Largest `|⟨x₁⊗…⊗x_k, z⟩|` over `samples` random product unit vectors.
    pub fn sampled_injective<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> Result<f64> {
        let mut best: f64 = 0.0;
        for _ in 0..samples {
            let xs: Vec<Vec<f64>> = (0..self.k).map(|_| linalg::random_unit(rng, self.n)).collect();
            let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
            best = best.max(self.coords.contract_vectors(&refs)?.abs());
        }
        Ok(best)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessPair {
    pub z_plus: Tensor,
    pub z_minus: Tensor,
    pub sq_norm: f64,
}

/// `z± = e₀^{⊗k} ± z_{n,k}` in `(ℝ^{n+1})^{⊗k}`.
pub fn lorentz_witness_pair(n: usize, k: usize) -> Result<WitnessPair> {
    let w = witness_tensor(n, k)?;
    let mut e0 = vec![0.0; n + 1];
    e0[0] = 1.0;
    let base = Tensor::power(&e0, k);
    let z = w.embedded();
    Ok(WitnessPair { z_plus: base.add_scaled(&z, 1.0)?, z_minus: base.add_scaled(&z, -1.0)?, sq_norm: w.sq_norm })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EbBoundRow {
    /// `None` for the `k → ∞` limit row.
    pub k: Option<usize>,
    /// `n·N(n)^{−1/k}`.
    pub factor: f64,
    /// `|β|·factor`, the smallest `α` compatible with `k`-level annihilation.
    pub required_alpha: f64,
    pub satisfied: bool,
}

/// Necessary conditions `α ≥ |β|·n·N(n)^{−1/k}` for `I_{α,β}` to be
/// `k`-level annihilating on `L_n`, followed by the limit row `α ≥ |β|·n`.
pub fn eb_bound_from_witness(n: usize, alpha: f64, beta: f64, ks: &[usize]) -> Result<Vec<EbBoundRow>> {
    if alpha <= 0.0 {
        return Err(Error::OutOfRange("α must be positive".into()));
    }
    let big_n = N_of(n)? as f64;
    let row = |k: Option<usize>, factor: f64| {
        let required_alpha = beta.abs() * factor;
        EbBoundRow { k, factor, required_alpha, satisfied: alpha >= required_alpha }
    };
    let mut rows: Vec<EbBoundRow> = ks
        .iter()
        .map(|&k| row(Some(k), n as f64 * big_n.powf(-1.0 / k.max(1) as f64)))
        .collect();
    rows.push(row(None, n as f64));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::IsotropicMap;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn radon_hurwitz_values() {
        let expect = [(1, 1), (2, 2), (4, 4), (8, 8), (16, 9), (32, 10), (64, 12), (128, 16), (12, 4)];
        for (big_n, rho) in expect {
            assert_eq!(radon_hurwitz(big_n), rho, "ρ({big_n})");
        }
    }

    #[test]
    fn n_of_values() {
        assert_eq!(N_of(1).unwrap(), 1);
        assert_eq!(N_of(2).unwrap(), 2);
        assert_eq!(N_of(3).unwrap(), 4);
        assert_eq!(N_of(9).unwrap(), 16);
        assert_eq!(N_of(10).unwrap(), 32);
        assert_eq!(N_of(12).unwrap(), 64);
        assert_eq!(N_of(16).unwrap(), 128);
        assert!(N_of(17).is_err());
        assert!(N_of(0).is_err());
    }

    #[test]
    fn families_verify_for_all_n() {
        for n in 1..=MAX_N {
            let f = build_family(n).unwrap();
            assert_eq!(f.big_n, N_of(n).unwrap());
            f.verify().unwrap();
        }
    }

    #[test]
    fn small_family_examples() {
        assert_eq!(build_family(1).unwrap().mats(), vec![DMatrix::identity(1, 1)]);
        let f = build_family(2).unwrap();
        assert_eq!(f.mats()[1], DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let f = build_family(4).unwrap();
        let h = CompositionAlgebra::new(AlgebraKind::H);
        assert_eq!(f.mats()[2], h.left_mult_matrix(&[0.0, 0.0, 1.0, 0.0]).unwrap());
    }

    #[test]
    fn theta_is_isometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [3, 9, 13] {
            let f = build_family(n).unwrap();
            let x = linalg::gaussian_vec(&mut rng, n);
            let t = f.theta(&x).unwrap();
            let expect = DMatrix::identity(f.big_n, f.big_n) * x.iter().map(|v| v * v).sum::<f64>();
            assert!(linalg::max_diff(&(t.transpose() * &t), &expect) < 1e-12);
        }
    }

    #[test]
    fn witness_n2_k2() {
        let w = witness_tensor(2, 2).unwrap();
        assert_eq!(w.sq_norm, 2.0);
        assert_eq!(w.coords.data(), &[1.0, 0.0, 0.0, -1.0]);
        assert_eq!(w.total_sq_norm, 2 * 4);
    }

    #[test]
    fn witness_trivial_n1() {
        for k in 1..5 {
            let w = witness_tensor(1, k).unwrap();
            assert_eq!(w.sq_norm, 1.0);
        }
    }

    #[test]
    fn witness_n4_k2() {
        let w = witness_tensor(4, 2).unwrap();
        assert!(w.sq_norm >= 4.0);
        assert_eq!(w.total_sq_norm, 4 * 16);
    }

    #[test]
    fn witness_budget_guard() {
        assert!(matches!(witness_tensor_with_budget(4, 8, 1000), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn pair_pairings() {
        let p = lorentz_witness_pair(2, 2).unwrap();
        for (alpha, beta) in [(1.0, 1.0), (0.7, -0.4), (2.0, 0.0)] {
            let iso = IsotropicMap::new(alpha, beta, 2).matrix();
            let img = p.z_plus.apply_all(&iso).unwrap();
            let minus = p.z_minus.inner(&img).unwrap();
            let plus = p.z_plus.inner(&img).unwrap();
            let ak = f64::powi(alpha, 2);
            let bk = f64::powi(beta, 2) * p.sq_norm;
            assert!((minus - (ak - bk)).abs() < 1e-12);
            assert!((plus - (ak + bk)).abs() < 1e-12);
        }
    }

    #[test]
    fn eb_bound_rows() {
        let rows = eb_bound_from_witness(2, 1.0, 1.0, &[1, 2, 8]).unwrap();
        assert!((rows[2].factor - 1.8340).abs() < 5e-5);
        assert_eq!(rows[3].k, None);
        assert_eq!(rows[3].factor, 2.0);
        let zero = eb_bound_from_witness(2, 1.0, 0.0, &[1, 2, 3]).unwrap();
        assert!(zero.iter().all(|r| r.satisfied));
    }
}
