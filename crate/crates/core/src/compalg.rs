//! Real composition algebras `ℝ, ℂ, ℂ′, ℍ, 𝕆` and the direct-sum protocol
//! on Lorentz cones built from a pair of them.
//!
//! A protocol cone pairs `𝔸₁ ∈ {ℝ, ℂ′}` with `𝔸₂ ∈ {ℝ, ℂ, ℍ, 𝕆}` and lives in
//! `𝔸₁ ⊕ 𝔸₂` with coordinates `(x₁, x₂)` concatenated. The cone
//! `{q₂(x₂) ≤ q₁(x₁), x₁[0] ≥ 0}` is then already the standard Lorentz cone
//! `L_N` with `t = x₁[0]`, so no change of basis is needed.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cones::{twirl, ConeHandle, IsotropicMap};
use crate::error::{check_dim, Error, Result};

/// Multiplication table of the octonions obtained by Cayley–Dickson doubling
/// of the quaternions with `(a,b)(c,d) = (ac − d̄b, da + bc̄)`. Entry
/// `T[i][j] = ±(k+1)` encodes `eᵢ·eⱼ = ±e_k`.
pub const OCTONION_TABLE: [[i8; 8]; 8] = [
    [1, 2, 3, 4, 5, 6, 7, 8],
    [2, -1, 4, -3, 6, -5, -8, 7],
    [3, -4, -1, 2, 7, 8, -5, -6],
    [4, 3, -2, -1, 8, -7, 6, -5],
    [5, -6, -7, -8, -1, 2, 3, 4],
    [6, 5, -8, 7, -2, -1, -4, 3],
    [7, 8, 5, -6, -3, 4, -1, -2],
    [8, -7, 6, 5, -4, -3, 2, -1],
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlgebraKind {
    R,
    C,
    Csplit,
    H,
    O,
}

impl FromStr for AlgebraKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "R" => Ok(AlgebraKind::R),
            "C" => Ok(AlgebraKind::C),
            "Csplit" | "C'" => Ok(AlgebraKind::Csplit),
            "H" => Ok(AlgebraKind::H),
            "O" => Ok(AlgebraKind::O),
            _ => Err(Error::OutOfRange(format!("unknown composition algebra '{s}'"))),
        }
    }
}

impl std::fmt::Display for AlgebraKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AlgebraKind::R => "R",
            AlgebraKind::C => "C",
            AlgebraKind::Csplit => "Csplit",
            AlgebraKind::H => "H",
            AlgebraKind::O => "O",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionAlgebra {
    pub kind: AlgebraKind,
    pub dim: usize,
    /// `table[i][j] = ±(k+1)` when `eᵢ * eⱼ = ±e_k`.
    pub table: Vec<Vec<i8>>,
    /// Diagonal signature of the quadratic form.
    pub qform: Vec<f64>,
}

impl CompositionAlgebra {
    pub fn new(kind: AlgebraKind) -> Self {
        let (dim, table): (usize, Vec<Vec<i8>>) = match kind {
            AlgebraKind::R => (1, vec![vec![1]]),
            AlgebraKind::C => (2, vec![vec![1, 2], vec![2, -1]]),
            AlgebraKind::Csplit => (2, vec![vec![1, 2], vec![2, 1]]),
            AlgebraKind::H => (4, OCTONION_TABLE[..4].iter().map(|r| r[..4].to_vec()).collect()),
            AlgebraKind::O => (8, OCTONION_TABLE.iter().map(|r| r.to_vec()).collect()),
        };
        let mut qform = vec![1.0; dim];
        if kind == AlgebraKind::Csplit {
            qform[1] = -1.0;
        }
        Self { kind, dim, table, qform }
    }

    pub fn is_division(&self) -> bool {
        self.kind != AlgebraKind::Csplit
    }

    pub fn unit(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.dim];
        e[0] = 1.0;
        e
    }

    pub fn multiply(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, y.len())?;
        let mut out = vec![0.0; self.dim];
        for (i, xi) in x.iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            for (j, yj) in y.iter().enumerate() {
                let t = self.table[i][j];
                let k = t.unsigned_abs() as usize - 1;
                out[k] += f64::from(t.signum()) * xi * yj;
            }
        }
        Ok(out)
    }

    pub fn q(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.qform).map(|(xi, s)| s * xi * xi).sum()
    }

    /// `m : V ⊗ V → V` as a `dim × dim²` matrix, column `i·dim + j` holding
    /// `eᵢ * eⱼ`.
    pub fn mult_matrix(&self) -> DMatrix<f64> {
        let d = self.dim;
        let mut m = DMatrix::zeros(d, d * d);
        for i in 0..d {
            for j in 0..d {
                let t = self.table[i][j];
                m[(t.unsigned_abs() as usize - 1, i * d + j)] = f64::from(t.signum());
            }
        }
        m
    }

    /// Left multiplication `y ↦ a * y` as a matrix.
    pub fn left_mult_matrix(&self, a: &[f64]) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            let mut e = vec![0.0; self.dim];
            e[j] = 1.0;
            let col = self.multiply(a, &e)?;
            for i in 0..self.dim {
                m[(i, j)] = col[i];
            }
        }
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolCone {
    pub alg1: CompositionAlgebra,
    pub alg2: CompositionAlgebra,
}

/// `m_{𝔸₁} ⊕ m_{𝔸₂}` as a `(N+1) × (N+1)²` matrix on `L_N` coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectSumMap {
    #[serde(with = "crate::serde_util::matrix")]
    pub matrix: DMatrix<f64>,
    pub cone: ConeHandle,
}

impl DirectSumMap {
    pub fn apply_pair(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let d = self.cone.ambient_dim();
        check_dim(d, x.len())?;
        check_dim(d, y.len())?;
        let mut xy = Vec::with_capacity(d * d);
        for a in x {
            xy.extend(y.iter().map(|b| a * b));
        }
        Ok((&self.matrix * DVector::from_vec(xy)).iter().copied().collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolStep {
    pub alpha_prime: f64,
    pub beta_prime: f64,
}

impl ProtocolStep {
    /// `β′/α′`, the parameter of the equivalent map `I_{1, β′/α′}`.
    pub fn normalized_beta(&self) -> f64 {
        self.beta_prime / self.alpha_prime
    }
}

impl ProtocolCone {
    pub fn new(alg1: AlgebraKind, alg2: AlgebraKind) -> Result<Self> {
        if !matches!(alg1, AlgebraKind::R | AlgebraKind::Csplit) {
            return Err(Error::OutOfRange(format!("first algebra must be R or Csplit, got {alg1}")));
        }
        if alg2 == AlgebraKind::Csplit {
            return Err(Error::OutOfRange("second algebra must be a division algebra".into()));
        }
        Ok(Self { alg1: CompositionAlgebra::new(alg1), alg2: CompositionAlgebra::new(alg2) })
    }

    /// `N = dim 𝔸₁ + dim 𝔸₂ − 1`, so the cone is `L_N ⊂ ℝ^{N+1}`.
    pub fn big_n(&self) -> usize {
        self.alg1.dim + self.alg2.dim - 1
    }

    pub fn cone(&self) -> ConeHandle {
        ConeHandle::Lorentz(self.big_n())
    }

    /// `dim 𝔸₂`.
    pub fn n(&self) -> usize {
        self.alg2.dim
    }

    pub fn order_unit(&self) -> Vec<f64> {
        self.cone().order_unit()
    }

    pub fn direct_sum_map(&self) -> DirectSumMap {
        let d1 = self.alg1.dim;
        let d = self.big_n() + 1;
        let mut m = DMatrix::zeros(d, d * d);
        let m1 = self.alg1.mult_matrix();
        let m2 = self.alg2.mult_matrix();
        for a in 0..d {
            for b in 0..d {
                let col = a * d + b;
                if a < d1 && b < d1 {
                    for r in 0..d1 {
                        m[(r, col)] = m1[(r, a * d1 + b)];
                    }
                } else if a >= d1 && b >= d1 {
                    let d2 = self.alg2.dim;
                    let (i, j) = (a - d1, b - d1);
                    for r in 0..d2 {
                        m[(d1 + r, col)] = m2[(r, i * d2 + j)];
                    }
                }
            }
        }
        DirectSumMap { matrix: m, cone: self.cone() }
    }

    /// Closed-form protocol step.
    pub fn step(&self, alpha: f64, beta: f64) -> ProtocolStep {
        let n = self.n() as f64;
        match self.alg1.kind {
            AlgebraKind::R => ProtocolStep { alpha_prime: alpha * alpha, beta_prime: n * beta * beta },
            _ => ProtocolStep {
                alpha_prime: alpha * alpha + beta * beta,
                beta_prime: (2.0 * alpha * beta + beta * beta * n * n) / (n + 1.0),
            },
        }
    }

    /// Protocol step computed as `twirl(M ∘ I_{α,β}^{⊗2} ∘ Mᵀ)`.
    pub fn step_by_matrix(&self, alpha: f64, beta: f64) -> Result<ProtocolStep> {
        let m = self.direct_sum_map().matrix;
        let iso = IsotropicMap::new(alpha, beta, self.big_n()).matrix();
        let j = &m * iso.kronecker(&iso) * m.transpose();
        let t = twirl(&j)?;
        Ok(ProtocolStep { alpha_prime: t.alpha, beta_prime: t.beta })
    }

    /// `f(β) = β′/α′` at `α = 1`.
    pub fn f(&self, beta: f64) -> f64 {
        self.step(1.0, beta).normalized_beta()
    }

    /// Iterates `β ↦ f(β)` from `β₀`, returning the whole trajectory.
    pub fn iterate(&self, beta0: f64, steps: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(steps + 1);
        let mut b = beta0;
        out.push(b);
        for _ in 0..steps {
            b = self.f(b);
            out.push(b);
        }
        out
    }
}

/// Smallest `β ∈ (0, 1]` where `f(β) ≤ β` stops holding, located by a grid
/// scan of `h(β) = f(β)/β − 1` followed by bisection to `tol`.
pub fn protocol_threshold(p: &ProtocolCone, tol: f64) -> Result<f64> {
    if tol <= 0.0 {
        return Err(Error::OutOfRange("tolerance must be positive".into()));
    }
    let h = |b: f64| p.f(b) / b - 1.0;
    const GRID: usize = 1000;
    let mut prev = (1.0 / GRID as f64, h(1.0 / GRID as f64));
    if prev.1 == 0.0 {
        return Ok(prev.0);
    }
    for i in 2..=GRID {
        let b = i as f64 / GRID as f64;
        let hb = h(b);
        if hb == 0.0 {
            return Ok(b);
        }
        if (hb > 0.0) != (prev.1 > 0.0) {
            let (mut lo, mut hi) = (prev.0, b);
            let lo_sign = prev.1 > 0.0;
            let mut iters = 0;
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                let hm = h(mid);
                if hm == 0.0 {
                    return Ok(mid);
                }
                if (hm > 0.0) == lo_sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
                iters += 1;
                if iters > 200 {
                    return Err(Error::NoConvergence { iterations: iters, residual: hi - lo });
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev = (b, hb);
    }
    Err(Error::NoConvergence { iterations: GRID, residual: prev.1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent Cayley–Dickson product on pairs of quaternions.
    fn cd_octonion(a: &[f64], b: &[f64]) -> Vec<f64> {
        let h = CompositionAlgebra::new(AlgebraKind::H);
        let conj = |x: &[f64]| vec![x[0], -x[1], -x[2], -x[3]];
        let (p, q) = (&a[..4], &a[4..]);
        let (r, s) = (&b[..4], &b[4..]);
        let first: Vec<f64> = h
            .multiply(p, r)
            .unwrap()
            .iter()
            .zip(h.multiply(&conj(s), q).unwrap())
            .map(|(x, y)| x - y)
            .collect();
        let second: Vec<f64> = h
            .multiply(s, p)
            .unwrap()
            .iter()
            .zip(h.multiply(q, &conj(r)).unwrap())
            .map(|(x, y)| x + y)
            .collect();
        [first, second].concat()
    }

    /// Hamilton product written out by hand.
    fn hamilton(a: &[f64], b: &[f64]) -> Vec<f64> {
        vec![
            a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
            a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
            a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
            a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
        ]
    }

    #[test]
    fn quaternion_table_matches_hamilton() {
        let h = CompositionAlgebra::new(AlgebraKind::H);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let a: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let d = crate::linalg::vec_max_diff(&h.multiply(&a, &b).unwrap(), &hamilton(&a, &b));
            assert!(d < 1e-15);
        }
    }

    #[test]
    fn octonion_table_matches_cayley_dickson() {
        let o = CompositionAlgebra::new(AlgebraKind::O);
        for i in 0..8 {
            for j in 0..8 {
                let mut a = vec![0.0; 8];
                let mut b = vec![0.0; 8];
                a[i] = 1.0;
                b[j] = 1.0;
                assert_eq!(o.multiply(&a, &b).unwrap(), cd_octonion(&a, &b), "e{i}·e{j}");
            }
        }
    }

    #[test]
    fn multiply_examples() {
        let h = CompositionAlgebra::new(AlgebraKind::H);
        let x = [1.0, 1.0, 0.0, 0.0];
        let y = [0.0, 0.0, 1.0, 0.0];
        assert_eq!(h.multiply(&x, &y).unwrap(), vec![0.0, 0.0, 1.0, 1.0]);
        assert_eq!(h.q(&h.multiply(&x, &y).unwrap()), h.q(&x) * h.q(&y));

        let cs = CompositionAlgebra::new(AlgebraKind::Csplit);
        let p = cs.multiply(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(p, vec![0.0, 1.0]);
        assert_eq!(cs.q(&p), -1.0);
        assert_eq!(cs.multiply(&[2.0, 3.0], &[5.0, 7.0]).unwrap(), vec![2.0 * 5.0 + 3.0 * 7.0, 2.0 * 7.0 + 5.0 * 3.0]);

        for kind in [AlgebraKind::R, AlgebraKind::C, AlgebraKind::Csplit, AlgebraKind::H, AlgebraKind::O] {
            let a = CompositionAlgebra::new(kind);
            let y: Vec<f64> = (0..a.dim).map(|i| i as f64 - 1.5).collect();
            assert_eq!(a.multiply(&a.unit(), &y).unwrap(), y);
            assert_eq!(a.multiply(&y, &a.unit()).unwrap(), y);
        }
    }

    #[test]
    fn mult_adjoint_identity_for_division_algebras() {
        for kind in [AlgebraKind::R, AlgebraKind::C, AlgebraKind::H, AlgebraKind::O] {
            let a = CompositionAlgebra::new(kind);
            let m = a.mult_matrix();
            assert_eq!(&m * m.transpose(), DMatrix::identity(a.dim, a.dim) * a.dim as f64);
        }
    }

    #[test]
    fn direct_sum_examples() {
        let p = ProtocolCone::new(AlgebraKind::Csplit, AlgebraKind::H).unwrap();
        let m = p.direct_sum_map();
        let e = p.order_unit();
        assert_eq!(m.apply_pair(&e, &e).unwrap(), e);

        let rr = ProtocolCone::new(AlgebraKind::R, AlgebraKind::R).unwrap();
        assert_eq!(rr.direct_sum_map().apply_pair(&[2.0, 0.0], &[3.0, 0.0]).unwrap(), vec![6.0, 0.0]);

        let rc = ProtocolCone::new(AlgebraKind::R, AlgebraKind::C).unwrap();
        let x = [1.0, 0.6, 0.8];
        let y = [2.0, -2.0, 0.0];
        let z = rc.direct_sum_map().apply_pair(&x, &y).unwrap();
        assert!(rc.cone().margin(&z).unwrap().abs() < 1e-15);
    }

    #[test]
    fn step_examples() {
        let rh = ProtocolCone::new(AlgebraKind::R, AlgebraKind::H).unwrap();
        let s = rh.step(1.0, 0.3);
        assert_eq!(s.alpha_prime, 1.0);
        assert!((s.beta_prime - 4.0 * 0.09).abs() < 1e-15);

        let cc = ProtocolCone::new(AlgebraKind::Csplit, AlgebraKind::C).unwrap();
        assert_eq!(cc.step(1.0, 0.0), ProtocolStep { alpha_prime: 1.0, beta_prime: 0.0 });

        let ch = ProtocolCone::new(AlgebraKind::Csplit, AlgebraKind::H).unwrap();
        let s = ch.step(1.0, 0.1);
        assert!((s.alpha_prime - 1.01).abs() < 1e-15);
        assert!((s.beta_prime - 0.36 / 5.0).abs() < 1e-15);
        assert!((s.normalized_beta() - 0.36 / 5.05).abs() < 1e-15);
    }

    #[test]
    fn step_matches_matrix_construction() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (a1, a2) in [(AlgebraKind::R, AlgebraKind::O), (AlgebraKind::Csplit, AlgebraKind::H)] {
            let p = ProtocolCone::new(a1, a2).unwrap();
            for _ in 0..5 {
                let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                let c = p.step(a, b);
                let m = p.step_by_matrix(a, b).unwrap();
                assert!((c.alpha_prime - m.alpha_prime).abs() < 1e-12);
                assert!((c.beta_prime - m.beta_prime).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn thresholds() {
        let ro = ProtocolCone::new(AlgebraKind::R, AlgebraKind::O).unwrap();
        assert!((protocol_threshold(&ro, 1e-12).unwrap() - 0.125).abs() < 1e-10);
        let rr = ProtocolCone::new(AlgebraKind::R, AlgebraKind::R).unwrap();
        assert_eq!(protocol_threshold(&rr, 1e-12).unwrap(), 1.0);
        let ch = ProtocolCone::new(AlgebraKind::Csplit, AlgebraKind::H).unwrap();
        assert!((protocol_threshold(&ch, 1e-12).unwrap() - 0.2).abs() < 1e-10);
    }

    #[test]
    fn rejects_invalid_pairs() {
        assert!(ProtocolCone::new(AlgebraKind::H, AlgebraKind::R).is_err());
        assert!(ProtocolCone::new(AlgebraKind::R, AlgebraKind::Csplit).is_err());
    }
}
