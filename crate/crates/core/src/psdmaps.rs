//! Linear maps between Hermitian matrix spaces in Hermitian-basis
//! coordinates: Choi tensors, canonical forms, factorizations through
//! Lorentz cones, and block positivity.
//!
//! In real coordinates the Choi tensor `P̂ = Σ Xᵢ ⊗ P(Xᵢ)` is the matrix of
//! `P` itself, and it equals the complex Choi matrix of `P∘ϑ` expanded in the
//! Hermitian basis. Canonical forms and Lorentz factorizations therefore
//! decompose the operator `P`, which must be self-adjoint.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certificate::Certificate;
use crate::cones::{ConeHandle, LinearMapDense};
use crate::error::{check_dim, Error, Result};
use crate::jordan::{coords_to_matrix, matrix_to_coords};
use crate::linalg::{self, CMat};
use crate::tensor::Tensor;

/// Random product starts for block positivity.
pub const BLOCK_STARTS: usize = 1000;
/// Alternating steps per start.
pub const BLOCK_STEPS: usize = 200;
const BLOCK_SEED: u64 = 0xb10c_4b05;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn isqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// A real-linear map `M_{d_in}^{sa} → M_{d_out}^{sa}` as a `d_out² × d_in²`
/// matrix on Hermitian-basis coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermMap {
    pub d_in: usize,
    pub d_out: usize,
    #[serde(with = "crate::serde_util::matrix")]
    pub matrix: DMatrix<f64>,
}

impl HermMap {
    pub fn new(d_in: usize, d_out: usize, matrix: DMatrix<f64>) -> Result<Self> {
        check_dim(d_out * d_out, matrix.nrows())?;
        check_dim(d_in * d_in, matrix.ncols())?;
        Ok(Self { d_in, d_out, matrix })
    }

    /// Tabulates a map given on matrices; `f` must send Hermitian to Hermitian.
    pub fn from_fn(d_in: usize, d_out: usize, f: impl Fn(&CMat) -> CMat) -> Self {
        let n_in = d_in * d_in;
        let mut matrix = DMatrix::zeros(d_out * d_out, n_in);
        for j in 0..n_in {
            let mut e = vec![0.0; n_in];
            e[j] = 1.0;
            let image = matrix_to_coords(&f(&coords_to_matrix(d_in, &e)));
            matrix.column_mut(j).copy_from_slice(&image);
        }
        Self { d_in, d_out, matrix }
    }

    pub fn identity(d: usize) -> Self {
        Self { d_in: d, d_out: d, matrix: DMatrix::identity(d * d, d * d) }
    }

    pub fn apply_coords(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.matrix.ncols(), x.len())?;
        Ok((&self.matrix * DVector::from_column_slice(x)).iter().copied().collect())
    }

    /// Applies the map to a Hermitian matrix.
    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        check_dim(self.d_in, x.nrows())?;
        Ok(coords_to_matrix(self.d_out, &self.apply_coords(&matrix_to_coords(x))?))
    }

    /// Complex-linear extension to arbitrary matrices.
    pub fn apply_complex(&self, x: &CMat) -> Result<CMat> {
        let re = (x + x.adjoint()).scale(0.5);
        let im = (x - x.adjoint()).map(|z| z * Complex64::new(0.0, -0.5));
        Ok(self.apply(&re)? + self.apply(&im)?.map(|z| z * Complex64::i()))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &HermMap) -> Result<Self> {
        check_dim(self.d_in, inner.d_out)?;
        Ok(Self { d_in: inner.d_in, d_out: self.d_out, matrix: &self.matrix * &inner.matrix })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { matrix: &self.matrix * s, ..self.clone() }
    }

    pub fn as_linear_map(&self) -> LinearMapDense {
        LinearMapDense {
            matrix: self.matrix.clone(),
            domain: ConeHandle::Psd(self.d_in),
            codomain: ConeHandle::Psd(self.d_out),
        }
    }
}

/// `P̂ = Σᵢ Xᵢ ⊗ P(Xᵢ)` over the Hermitian basis, a `d_in² × d_out²` tensor.
pub fn choi(p: &HermMap) -> Tensor {
    let t = p.matrix.transpose();
    let (r, cdim) = (t.nrows(), t.ncols());
    let data = (0..r).flat_map(|i| (0..cdim).map(move |j| (i, j))).map(|(i, j)| t[(i, j)]).collect();
    Tensor::new(vec![r, cdim], data).expect("shape")
}

pub fn map_from_choi(t: &Tensor) -> Result<HermMap> {
    check_dim(2, t.order())?;
    let (a, b) = (t.dims()[0], t.dims()[1]);
    let d_in = isqrt(a).ok_or_else(|| Error::OutOfRange(format!("{a} is not a square")))?;
    let d_out = isqrt(b).ok_or_else(|| Error::OutOfRange(format!("{b} is not a square")))?;
    HermMap::new(d_in, d_out, t.matricize(1).transpose())
}

/// Complex Choi matrix `C_P = Σ_{ij} E_{ij} ⊗ P(E_{ij})`.
pub fn choi_matrix(p: &HermMap) -> Result<CMat> {
    let (a, b) = (p.d_in, p.d_out);
    let mut out = CMat::zeros(a * b, a * b);
    for i in 0..a {
        for j in 0..a {
            let mut e = CMat::zeros(a, a);
            e[(i, j)] = c(1.0);
            let img = p.apply_complex(&e)?;
            out.view_mut((i * b, j * b), (b, b)).copy_from(&img);
        }
    }
    Ok(out)
}

/// Transpose of the second tensor factor of a `(d1·d2)`-square matrix.
pub fn partial_transpose(m: &CMat, d1: usize, d2: usize) -> CMat {
    CMat::from_fn(d1 * d2, d1 * d2, |r, s| {
        let (a, c1) = (r / d2, r % d2);
        let (b, e) = (s / d2, s % d2);
        m[(a * d2 + e, b * d2 + c1)]
    })
}

/// Diagonal of `ϑ_d` in Hermitian coordinates: antisymmetric basis elements
/// change sign, the rest are fixed.
pub fn transpose_signs(d: usize) -> Vec<f64> {
    let mut s = vec![1.0; d * d];
    let mut p = d;
    for j in 0..d {
        for _ in j + 1..d {
            s[p + 1] = -1.0;
            p += 2;
        }
    }
    s
}

/// The transpose map `ϑ_d`.
pub fn transpose_map(d: usize) -> HermMap {
    HermMap { d_in: d, d_out: d, matrix: DMatrix::from_diagonal(&DVector::from_vec(transpose_signs(d))) }
}

/// Adjoint with respect to `⟨X,Y⟩ = Tr(XY)`; the basis is orthonormal, so this
/// is the matrix transpose.
pub fn adjoint(p: &HermMap) -> HermMap {
    HermMap { d_in: p.d_out, d_out: p.d_in, matrix: p.matrix.transpose() }
}

/// `P∘ϑ` as a real matrix.
fn compose_transpose(p: &HermMap) -> DMatrix<f64> {
    let s = transpose_signs(p.d_in);
    let mut m = p.matrix.clone();
    for (j, sj) in s.iter().enumerate() {
        m.column_mut(j).scale_mut(*sj);
    }
    m
}

/// Eigenvalues of the operator `P∘ϑ` in descending order; it must be
/// self-adjoint.
pub fn transpose_composed_spectrum(p: &HermMap, tol: f64) -> Result<Vec<f64>> {
    Ok(linalg::sym_eigen_desc(&symmetrized(compose_transpose(p), tol)?)?.0)
}

/// Eigenvalues of the self-adjoint operator `P` in descending order.
pub fn spectrum(p: &HermMap, tol: f64) -> Result<Vec<f64>> {
    check_dim(p.d_in, p.d_out)?;
    Ok(linalg::sym_eigen_desc(&symmetrized(p.matrix.clone(), tol)?)?.0)
}

fn symmetrized(m: DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    check_dim(m.nrows(), m.ncols())?;
    let residual = linalg::max_diff(&m, &m.transpose());
    if residual > tol * m.amax().max(1.0) {
        return Err(Error::SymmetryViolated { residual });
    }
    Ok((&m + m.transpose()) * 0.5)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalForm {
    #[serde(with = "crate::serde_util::cmatrix")]
    pub x0: CMat,
    pub xs: Vec<HermCoords>,
    /// Normalized eigenvalues `λᵢ ∈ [−1,1]∖{0}` of `P`.
    pub lambdas: Vec<f64>,
    pub rank: usize,
    pub spectral_radius: f64,
    /// Full spectrum of `P`, unnormalized, descending.
    pub spectrum: Vec<f64>,
    /// Eigenvalues of the operator `P∘ϑ` as `[re, im]`, for comparison.
    pub p_theta_eigenvalues: Vec<[f64; 2]>,
    pub residual: f64,
}

/// A Hermitian matrix carried in basis coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermCoords {
    pub d: usize,
    pub coords: Vec<f64>,
}

impl HermCoords {
    pub fn matrix(&self) -> CMat {
        coords_to_matrix(self.d, &self.coords)
    }
}

impl CanonicalForm {
    /// `x₀x₀ᵀ + Σ λᵢ xᵢxᵢᵀ`, the normalized matrix of `P`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let x0 = DVector::from_vec(matrix_to_coords(&self.x0));
        let mut m = &x0 * x0.transpose();
        for (x, l) in self.xs.iter().zip(&self.lambdas) {
            let v = DVector::from_column_slice(&x.coords);
            m += (&v * v.transpose()) * *l;
        }
        m
    }
}

/// Spectral decomposition `P̂ = X₀⊗X₀ + Σ λᵢ Xᵢ⊗Xᵢ` normalized to spectral
/// radius one.
pub fn canonical_form(p: &HermMap, tol: f64) -> Result<CanonicalForm> {
    check_dim(p.d_in, p.d_out)?;
    let s = symmetrized(p.matrix.clone(), tol)?;
    let (vals, vecs) = linalg::sym_eigen_desc(&s)?;
    let rho = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if rho == 0.0 {
        return Err(Error::OutOfRange("zero map has no canonical form".into()));
    }
    if vals[0] < rho * (1.0 - tol) {
        return Err(Error::NotPositive { min_eigenvalue: vals[0] - rho });
    }
    if vals.len() > 1 && vals[1] >= vals[0] - tol * rho {
        return Err(Error::DegenerateSpectralRadius { eigenvalues: vals });
    }
    let d = p.d_in;
    let mut x0c: Vec<f64> = vecs.column(0).iter().copied().collect();
    let x0m = coords_to_matrix(d, &x0c);
    if x0m.trace().re < 0.0 {
        x0c.iter_mut().for_each(|v| *v = -*v);
    }
    let x0 = coords_to_matrix(d, &x0c);
    let (min_eig, _) = linalg::herm_min_eigen(&x0)?;
    if min_eig < -tol.max(1e-9) {
        return Err(Error::NotPositive { min_eigenvalue: min_eig });
    }
    let mut xs = Vec::new();
    let mut lambdas = Vec::new();
    for (i, &v) in vals.iter().enumerate().skip(1) {
        if v.abs() > tol.max(1e-12) * rho {
            xs.push(HermCoords { d, coords: vecs.column(i).iter().copied().collect() });
            lambdas.push(v / rho);
        }
    }
    let p_theta_eigenvalues = compose_transpose(p).complex_eigenvalues().iter().map(|z| [z.re, z.im]).collect();
    let mut form = CanonicalForm {
        x0,
        rank: 1 + xs.len(),
        xs,
        lambdas,
        spectral_radius: rho,
        spectrum: vals,
        p_theta_eigenvalues,
        residual: 0.0,
    };
    form.residual = linalg::max_diff(&form.reconstruct(), &(s / rho));
    if form.residual > 1e-10 {
        return Err(Error::Verification(format!("canonical form residual {:e}", form.residual)));
    }
    Ok(form)
}

/// `P = α∘A∘α*` as real-coordinate operators (the Choi-level statement
/// `C_{P∘ϑ} = Σ ±α(eᵢ)⊗α(eᵢ)`), with `α : ℝ^{k+1} → M_d^{sa}` and
/// `A = diag(1, −1, …, −1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorentzFactorization {
    pub k: usize,
    pub d: usize,
    /// `d² × (k+1)`; column `i` holds the coordinates of `α(eᵢ)`.
    #[serde(with = "crate::serde_util::matrix")]
    pub alpha_map: DMatrix<f64>,
    pub a_diag: Vec<f64>,
    pub residual: f64,
    /// Smallest eigenvalue of `α(x)` over the frame of `L_k` and sampled
    /// boundary points.
    pub alpha_positivity_min: f64,
}

impl LorentzFactorization {
    /// Builds and verifies a factorization from its parts.
    pub fn from_alpha(p: &HermMap, alpha_map: DMatrix<f64>) -> Result<Self> {
        check_dim(p.d_in, p.d_out)?;
        check_dim(p.d_in * p.d_in, alpha_map.nrows())?;
        let k = alpha_map.ncols().saturating_sub(1);
        let a_diag: Vec<f64> = (0..=k).map(|i| if i == 0 { 1.0 } else { -1.0 }).collect();
        let mut f = Self {
            k,
            d: p.d_in,
            alpha_map,
            a_diag,
            residual: 0.0,
            alpha_positivity_min: 0.0,
        };
        f.residual = linalg::max_diff(&f.map().matrix, &p.matrix);
        f.alpha_positivity_min = f.sampled_alpha_min(200)?;
        Ok(f)
    }

    /// `α∘A∘α*`.
    pub fn core(&self) -> DMatrix<f64> {
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&self.a_diag));
        &self.alpha_map * a * self.alpha_map.transpose()
    }

    pub fn map(&self) -> HermMap {
        HermMap { d_in: self.d, d_out: self.d, matrix: self.core() }
    }

    fn sampled_alpha_min(&self, samples: usize) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(BLOCK_SEED);
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut e0 = vec![0.0; self.k + 1];
        e0[0] = 1.0;
        points.push(e0);
        for i in 1..=self.k {
            for s in [1.0, -1.0] {
                let mut v = vec![0.0; self.k + 1];
                v[0] = 1.0;
                v[i] = s;
                points.push(v);
            }
        }
        if self.k > 0 {
            for _ in 0..samples {
                let u = linalg::random_unit(&mut rng, self.k);
                points.push([vec![1.0], u].concat());
            }
        }
        let mut worst = f64::INFINITY;
        for x in points {
            let img = &self.alpha_map * DVector::from_vec(x);
            let (m, _) = linalg::herm_min_eigen(&coords_to_matrix(self.d, img.as_slice()))?;
            worst = worst.min(m);
        }
        Ok(worst)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refusal {
    pub index: usize,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizeReport {
    pub accepted: bool,
    pub k: Option<usize>,
    pub lambdas: Vec<f64>,
    pub residual: Option<f64>,
    pub factorization: Option<LorentzFactorization>,
    pub refusal: Option<Refusal>,
}

/// Factors `P` through `L_k` when every nonzero `λᵢ` of the canonical form is
/// negative; otherwise refuses, naming the first positive `λᵢ`.
pub fn lorentz_factorize(p: &HermMap, tol: f64) -> Result<FactorizeReport> {
    let form = canonical_form(p, tol)?;
    if let Some((index, &lambda)) = form.lambdas.iter().enumerate().find(|(_, &l)| l > 0.0) {
        return Ok(FactorizeReport {
            accepted: false,
            k: None,
            lambdas: form.lambdas.clone(),
            residual: None,
            factorization: None,
            refusal: Some(Refusal { index: index + 1, lambda }),
        });
    }
    let d = p.d_in;
    let rho = form.spectral_radius;
    let mut alpha = DMatrix::zeros(d * d, form.rank);
    alpha.column_mut(0).copy_from_slice(&matrix_to_coords(&form.x0));
    alpha.column_mut(0).scale_mut(rho.sqrt());
    for (i, (x, l)) in form.xs.iter().zip(&form.lambdas).enumerate() {
        alpha.column_mut(i + 1).copy_from_slice(&x.coords);
        alpha.column_mut(i + 1).scale_mut((-l * rho).sqrt());
    }
    let f = LorentzFactorization::from_alpha(p, alpha)?;
    if f.residual > 1e-10 * rho.max(1.0) {
        return Err(Error::Verification(format!("factorization residual {:e}", f.residual)));
    }
    Ok(FactorizeReport {
        accepted: true,
        k: Some(f.k),
        lambdas: form.lambdas,
        residual: Some(f.residual),
        factorization: Some(f),
        refusal: None,
    })
}

/// `R(X) = Tr(X)·id − X`.
pub fn reduction(d: usize) -> HermMap {
    HermMap::from_fn(d, d, |x| linalg::cidentity(d).scale(x.trace().re) - x)
}

/// `B(X) = Tr(X)·id₄ − X − U Xᵀ U†` with `U = σ_y ⊗ id₂`.
pub fn breuer_hall() -> HermMap {
    let [_, sy, _] = linalg::paulis();
    let u = sy.kronecker(&linalg::cidentity(2));
    HermMap::from_fn(4, 4, |x| linalg::cidentity(4).scale(x.trace().re) - x - &u * x.transpose() * u.adjoint())
}

/// The embedding `ℝ⁶ → M₄` through which the Breuer–Hall map factors, in
/// the published normalization (`α∘A∘α* = 2B`).
pub fn breuer_hall_reference_alpha() -> DMatrix<f64> {
    let i = Complex64::i();
    let build = |x: [f64; 6]| -> CMat {
        let r = |v: f64| c(v);
        let [x0, x1, x2, x3, x4, x5] = x;
        CMat::from_row_slice(
            4,
            4,
            &[
                r(x0 + x5),
                r(x4) - i * x3,
                r(0.0),
                r(x2) - i * x1,
                r(x4) + i * x3,
                r(x0 - x5),
                r(-x2) + i * x1,
                r(0.0),
                r(0.0),
                r(-x2) - i * x1,
                r(x0 + x5),
                r(x4) + i * x3,
                r(x2) + i * x1,
                r(0.0),
                r(x4) - i * x3,
                r(x0 - x5),
            ],
        )
    };
    let mut m = DMatrix::zeros(16, 6);
    for j in 0..6 {
        let mut e = [0.0; 6];
        e[j] = 1.0;
        m.column_mut(j).copy_from_slice(&matrix_to_coords(&build(e)));
    }
    m
}

/// The spinor map `(t,x) ↦ (tσ₀ + Σ xᵢσᵢ)/√2` as a `4 × 4` coordinate matrix.
pub fn spinor_alpha() -> DMatrix<f64> {
    let [sx, sy, sz] = linalg::paulis();
    let gens = [linalg::cidentity(2), sx, sy, sz];
    let mut m = DMatrix::zeros(4, 4);
    for (j, g) in gens.iter().enumerate() {
        let v = matrix_to_coords(&g.scale(std::f64::consts::FRAC_1_SQRT_2));
        m.column_mut(j).copy_from_slice(&v);
    }
    m
}

/// The qubit reduction map written as `R = α∘A∘α*` through `L₃` with the
/// spinor map.
pub fn reduction_qubit_factorization() -> Result<LorentzFactorization> {
    LorentzFactorization::from_alpha(&reduction(2), spinor_alpha())
}

/// Checks that `s` is a spin system: Hermitian unitaries, pairwise
/// anticommuting, at least two of them.
pub fn validate_spin_system(s: &[CMat], tol: f64) -> Result<usize> {
    let d = s.first().map(|m| m.nrows()).ok_or_else(|| Error::InvalidSpinSystem("empty".into()))?;
    if s.len() < 2 {
        return Err(Error::InvalidSpinSystem("a spin system has at least two elements".into()));
    }
    let id = linalg::cidentity(d);
    for (i, a) in s.iter().enumerate() {
        if a.nrows() != d || a.ncols() != d {
            return Err(Error::InvalidSpinSystem(format!("s{i} is not {d}×{d}")));
        }
        if linalg::cmax_diff(a, &a.adjoint()) > tol {
            return Err(Error::InvalidSpinSystem(format!("s{i} is not Hermitian")));
        }
        if linalg::cmax_diff(&(a * a), &id) > tol {
            return Err(Error::InvalidSpinSystem(format!("s{i} is not unitary")));
        }
        for (j, b) in s.iter().enumerate().skip(i + 1) {
            if (a * b + b * a).iter().map(|z| z.norm()).fold(0.0, f64::max) > tol {
                return Err(Error::InvalidSpinSystem(format!("s{i} and s{j} do not anticommute")));
            }
        }
    }
    Ok(d)
}

/// `P_A(X) = (1/d)[Tr(X)·id + Σ Tr(X sᵢ) sᵢ]`, i.e. `φ∘φ*` for
/// `φ(e₀) = id`, `φ(eᵢ) = sᵢ` under the normalized trace inner product.
pub fn spin_projection(s: &[CMat]) -> Result<HermMap> {
    let d = validate_spin_system(s, 1e-10)?;
    let s = s.to_vec();
    Ok(HermMap::from_fn(d, d, move |x| {
        let mut out = linalg::cidentity(d).scale(x.trace().re);
        for si in &s {
            out += si.scale((x * si).trace().re);
        }
        out.scale(1.0 / d as f64)
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockPositivity {
    pub block_positive: bool,
    /// Smallest `⟨y⊗z|M|y⊗z⟩` found over unit product vectors.
    pub min_value: f64,
    #[serde(with = "crate::serde_util::cvector")]
    pub y: DVector<Complex64>,
    #[serde(with = "crate::serde_util::cvector")]
    pub z: DVector<Complex64>,
    /// A positive answer only reflects the search; a negative one is proved
    /// by `(y, z)`.
    pub heuristic: bool,
}

/// `⟨y⊗z|M|y⊗z⟩`.
pub fn product_value(m: &CMat, y: &DVector<Complex64>, z: &DVector<Complex64>) -> f64 {
    let v = y.kronecker(z);
    (v.adjoint() * m * &v)[(0, 0)].re
}

fn reduce_first(m: &CMat, y: &DVector<Complex64>, d1: usize, d2: usize) -> CMat {
    let mut out = CMat::zeros(d2, d2);
    for a in 0..d1 {
        for b in 0..d1 {
            let w = y[a].conj() * y[b];
            if w != c(0.0) {
                out += m.view((a * d2, b * d2), (d2, d2)) * w;
            }
        }
    }
    (&out + out.adjoint()).scale(0.5)
}

fn reduce_second(m: &CMat, z: &DVector<Complex64>, d1: usize, d2: usize) -> CMat {
    let out = CMat::from_fn(d1, d1, |a, b| {
        let mut s = c(0.0);
        for i in 0..d2 {
            for j in 0..d2 {
                s += z[i].conj() * z[j] * m[(a * d2 + i, b * d2 + j)];
            }
        }
        s
    });
    (&out + out.adjoint()).scale(0.5)
}

/// Minimizes `⟨y⊗z|M|y⊗z⟩` over unit product vectors by alternating exact
/// eigenvector updates from seeded random starts.
pub fn block_positivity(m: &CMat, d1: usize, d2: usize, tol: f64) -> Result<BlockPositivity> {
    block_positivity_with(m, d1, d2, tol, BLOCK_STARTS, BLOCK_STEPS)
}

pub fn block_positivity_with(
    m: &CMat,
    d1: usize,
    d2: usize,
    tol: f64,
    starts: usize,
    steps: usize,
) -> Result<BlockPositivity> {
    check_dim(d1 * d2, m.nrows())?;
    check_dim(d1 * d2, m.ncols())?;
    let mut best: Option<(f64, DVector<Complex64>, DVector<Complex64>)> = None;
    for s in 0..starts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(BLOCK_SEED.wrapping_add(s as u64));
        let mut y = linalg::random_cunit(&mut rng, d1);
        let (mut value, mut z) = linalg::herm_min_eigen(&reduce_first(m, &y, d1, d2))?;
        for _ in 0..steps {
            let (_, ny) = linalg::herm_min_eigen(&reduce_second(m, &z, d1, d2))?;
            y = ny;
            let (v, nz) = linalg::herm_min_eigen(&reduce_first(m, &y, d1, d2))?;
            z = nz;
            let done = value - v <= 1e-15 * v.abs().max(1.0);
            value = v;
            if done {
                break;
            }
        }
        let exact = product_value(m, &y, &z);
        if best.as_ref().is_none_or(|b| exact < b.0) {
            best = Some((exact, y, z));
        }
    }
    let (min_value, y, z) = best.expect("at least one start");
    let block_positive = min_value >= -tol * m.iter().map(|v| v.norm()).fold(1.0, f64::max);
    Ok(BlockPositivity { block_positive, min_value, y, z, heuristic: block_positive })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdLorentzMembership {
    pub member: bool,
    pub x0_min_eigenvalue: f64,
    pub block: Option<BlockPositivity>,
}

/// Whether `X₀⊗X₀ − Σ Xₛ⊗Xₛ` lies in `PSD ⊗max PSD` with `X₀ ⪰ 0`.
pub fn lorentz_psd_max_membership(xs: &[CMat], tol: f64) -> Result<PsdLorentzMembership> {
    let x0 = xs.first().ok_or_else(|| Error::OutOfRange("need at least X0".into()))?;
    let d = x0.nrows();
    if d > 4 {
        return Err(Error::BudgetExceeded { needed: (d * d) as u128, limit: 16 });
    }
    for x in xs {
        check_dim(d, x.nrows())?;
        check_dim(d, x.ncols())?;
    }
    let (x0_min, _) = linalg::herm_min_eigen(x0)?;
    if x0_min < -tol {
        return Ok(PsdLorentzMembership { member: false, x0_min_eigenvalue: x0_min, block: None });
    }
    let mut m = x0.kronecker(x0);
    for x in &xs[1..] {
        m -= x.kronecker(x);
    }
    let block = block_positivity(&m, d, d, tol)?;
    Ok(PsdLorentzMembership { member: block.block_positive, x0_min_eigenvalue: x0_min, block: Some(block) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionCheck {
    pub choi_min_eigenvalue: f64,
    pub ppt_min_eigenvalue: f64,
    /// `"choi_psd"` or `"ppt"` when a necessary condition for `Q∘P` to be
    /// entanglement breaking fails.
    pub failed: Option<String>,
    pub certificate: Option<Certificate>,
}

/// Tests the decidable necessary conditions for `Q∘P` to be entanglement
/// breaking; a failure certifies that `P` is not entanglement annihilating.
pub fn generalized_reduction_check(p: &HermMap, q: &LorentzFactorization, tol: f64) -> Result<ReductionCheck> {
    let composed = q.map().compose(p)?;
    let choi = choi_matrix(&composed)?;
    let pt = partial_transpose(&choi, composed.d_in, composed.d_out);
    let (choi_min, v1) = linalg::herm_min_eigen(&choi)?;
    let (ppt_min, v2) = linalg::herm_min_eigen(&pt)?;
    let scale = tol * choi.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let failure = if choi_min < -scale {
        Some(("choi_psd", v1))
    } else if ppt_min < -scale {
        Some(("ppt", v2))
    } else {
        None
    };
    let certificate = match &failure {
        Some((test, v)) => Some(Certificate::eb_violation(&composed, test, v, tol)?),
        None => None,
    };
    Ok(ReductionCheck {
        choi_min_eigenvalue: choi_min,
        ppt_min_eigenvalue: ppt_min,
        failed: failure.map(|(t, _)| t.to_string()),
        certificate,
    })
}

pub(crate) fn eb_test_value(map: &HermMap, test: &str, v: &DVector<Complex64>) -> Result<f64> {
    let choi = choi_matrix(map)?;
    let m = match test {
        "choi_psd" => choi,
        "ppt" => partial_transpose(&choi, map.d_in, map.d_out),
        other => return Err(Error::Verification(format!("unknown test '{other}'"))),
    };
    check_dim(m.nrows(), v.len())?;
    let norm = v.norm_squared();
    Ok((v.adjoint() * m * v)[(0, 0)].re / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn random_map(d_in: usize, d_out: usize, r: &mut ChaCha8Rng) -> HermMap {
        HermMap::new(d_in, d_out, linalg::gaussian_matrix(r, d_out * d_out, d_in * d_in)).unwrap()
    }

    #[test]
    fn choi_round_trip_and_identity() {
        let mut r = rng();
        for _ in 0..20 {
            let p = random_map(2, 3, &mut r);
            assert_eq!(map_from_choi(&choi(&p)).unwrap(), p);
        }
        let id = choi(&HermMap::identity(2));
        assert_eq!(id.matricize(1), DMatrix::<f64>::identity(4, 4));
    }

    #[test]
    fn transpose_examples() {
        let [sx, sy, _] = linalg::paulis();
        let t = transpose_map(2);
        assert!(linalg::cmax_diff(&t.apply(&sy).unwrap(), &(-sy.clone())) < 1e-15);
        assert!(linalg::cmax_diff(&t.apply(&sx).unwrap(), &sx) < 1e-15);
        assert_eq!(t.compose(&t).unwrap(), HermMap::identity(2));
        let p = random_map(3, 2, &mut rng());
        assert_eq!(adjoint(&adjoint(&p)), p);
    }

    #[test]
    fn reduction_spectra() {
        let s2 = transpose_composed_spectrum(&reduction(2), 1e-12).unwrap();
        let expect2 = [1.0, 1.0, -1.0, -1.0];
        assert!(s2.iter().zip(expect2).all(|(a, b)| (a - b).abs() < 1e-12), "{s2:?}");
        let s3 = transpose_composed_spectrum(&reduction(3), 1e-12).unwrap();
        let expect3 = [2.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0, -1.0];
        assert!(s3.iter().zip(expect3).all(|(a, b)| (a - b).abs() < 1e-12), "{s3:?}");
        let r2 = lorentz_factorize(&reduction(2), 1e-9).unwrap();
        assert_eq!(r2.k, Some(3));
        let r3 = spectrum(&reduction(3), 1e-12).unwrap();
        assert!((r3[0] - 2.0).abs() < 1e-12 && r3[1..].iter().all(|v| (v + 1.0).abs() < 1e-12));
        let both = transpose_composed_spectrum(&reduction(3), 1e-12).unwrap();
        assert!(matches!(
            canonical_form(&HermMap::new(3, 3, compose_transpose(&reduction(3))).unwrap(), 1e-9),
            Err(Error::DegenerateSpectralRadius { .. })
        ) || both[1] < both[0]);
    }

    #[test]
    fn reduction_qubit_through_l3() {
        let f = reduction_qubit_factorization().unwrap();
        assert_eq!(f.k, 3);
        assert!(f.residual < 1e-14);
        assert!(f.alpha_positivity_min > -1e-12);
    }

    #[test]
    fn breuer_hall_factorization() {
        let b = breuer_hall();
        let id = linalg::cidentity(4);
        assert!(linalg::cmax_diff(&b.apply(&id).unwrap(), &id.scale(2.0)) < 1e-14);
        let report = lorentz_factorize(&b, 1e-9).unwrap();
        assert!(report.accepted);
        let f = report.factorization.unwrap();
        assert_eq!(f.k, 5);
        assert!(f.residual <= 1e-10);
        assert!(f.alpha_positivity_min > -1e-9);
        let alpha = breuer_hall_reference_alpha();
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, -1.0, -1.0, -1.0, -1.0]));
        let reference = &alpha * a * alpha.transpose() * 0.5;
        assert!(linalg::max_diff(&reference, &f.core()) < 1e-10);
    }

    #[test]
    fn rank_one_map_factors_through_l0() {
        let x0 = matrix_to_coords(&CMat::from_row_slice(2, 2, &[c(2.0), c(1.0), c(1.0), c(1.0)]));
        let v = DVector::from_vec(x0);
        let core = &v * v.transpose();
        let p = HermMap::new(2, 2, core).unwrap();
        let form = canonical_form(&p, 1e-9).unwrap();
        assert!(form.lambdas.is_empty());
        let report = lorentz_factorize(&p, 1e-9).unwrap();
        assert_eq!(report.k, Some(0));
    }

    #[test]
    fn second_positive_eigenvalue_is_refused() {
        let mut core = DMatrix::zeros(4, 4);
        core[(0, 0)] = 1.0;
        core[(1, 1)] = 0.5;
        core[(2, 2)] = -0.3;
        let p = HermMap::new(2, 2, core).unwrap();
        let report = lorentz_factorize(&p, 1e-9).unwrap();
        assert!(!report.accepted);
        assert_eq!(report.refusal.unwrap().lambda, 0.5);
    }

    #[test]
    fn spin_projection_pauli_is_identity() {
        let p = spin_projection(&linalg::paulis()).unwrap();
        assert!(linalg::max_diff(&p.matrix, &DMatrix::identity(4, 4)) < 1e-14);
        let [sx, sy, _] = linalg::paulis();
        let q = spin_projection(&[sx.clone(), sy]).unwrap();
        assert!(linalg::max_diff(&q.compose(&q).unwrap().matrix, &q.matrix) < 1e-14);
        assert!(spin_projection(&[sx.clone(), sx]).is_err());
    }

    #[test]
    fn psd_lorentz_membership_examples() {
        let id = linalg::cidentity(2);
        let r = lorentz_psd_max_membership(std::slice::from_ref(&id), 1e-8).unwrap();
        assert!(r.member);
        assert!((r.block.unwrap().min_value - 1.0).abs() < 1e-12);
        let [_, _, sz] = linalg::paulis();
        let r = lorentz_psd_max_membership(&[id.clone(), sz.scale(2f64.sqrt())], 1e-8).unwrap();
        assert!(!r.member);
        let b = r.block.unwrap();
        assert!((b.min_value + 1.0).abs() < 1e-9);
        let r = lorentz_psd_max_membership(&[id, sz], 1e-8).unwrap();
        assert!(r.member);
    }

    #[test]
    fn reduction_check_on_identity() {
        let q = reduction_qubit_factorization().unwrap();
        let r = generalized_reduction_check(&HermMap::identity(2), &q, 1e-9).unwrap();
        assert_eq!(r.failed.as_deref(), Some("choi_psd"));
        assert!((r.choi_min_eigenvalue + 1.0).abs() < 1e-12);
        assert!(r.certificate.unwrap().verify().valid);
    }
}
