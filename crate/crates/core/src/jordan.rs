//! Euclidean Jordan algebras: the spin factor `J(ℝⁿ)` and complex Hermitian
//! `d×d` matrices viewed as a real vector space.
//!
//! Spin coordinates are `(t, x₁..xₙ)` with product
//! `(s,x)∘(t,y) = (st + ⟨x,y⟩, sy + tx)`.
//!
//! Hermitian coordinates use the orthonormal basis (for `⟨A,B⟩ = Re Tr(A†B)`)
//!
//! 1. `I/√d`;
//! 2. diagonal generalized Gell-Mann matrices
//!    `(Σ_{j<l} E_jj − l·E_ll)/√(l(l+1))` for `l = 1..d−1`;
//! 3. for each pair `j < k` (lexicographic) the symmetric direction
//!    `(E_jk + E_kj)/√2` followed by the antisymmetric direction
//!    `(−iE_jk + iE_kj)/√2`.
//!
//! For `d = 2` this is `[I, σz, σx, σy]/√2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cones::{ConeHandle, LinearMapDense};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "lowercase")]
pub enum Algebra {
    /// `J(ℝⁿ)`, ambient dimension `n + 1`, rank 2.
    Spin(usize),
    /// Hermitian `d×d` complex matrices, ambient dimension `d²`, rank `d`.
    Hermitian(usize),
}

impl std::fmt::Display for Algebra {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algebra::Spin(n) => write!(f, "spin:{n}"),
            Algebra::Hermitian(d) => write!(f, "psd:{d}"),
        }
    }
}

impl Algebra {
    pub fn ambient_dim(&self) -> usize {
        match *self {
            Algebra::Spin(n) => n + 1,
            Algebra::Hermitian(d) => d * d,
        }
    }

    pub fn rank(&self) -> usize {
        match *self {
            Algebra::Spin(_) => 2,
            Algebra::Hermitian(d) => d,
        }
    }

    pub fn identity(&self) -> JordanElement {
        let mut coords = vec![0.0; self.ambient_dim()];
        match *self {
            Algebra::Spin(_) => coords[0] = 1.0,
            Algebra::Hermitian(d) => coords[0] = (d as f64).sqrt(),
        }
        JordanElement { algebra: *self, coords }
    }

    pub fn zero(&self) -> JordanElement {
        JordanElement { algebra: *self, coords: vec![0.0; self.ambient_dim()] }
    }

    /// The cone of squares as a cone handle.
    pub fn cone(&self) -> ConeHandle {
        match *self {
            Algebra::Spin(n) => ConeHandle::Lorentz(n),
            Algebra::Hermitian(d) => ConeHandle::Psd(d),
        }
    }

    pub fn basis(&self) -> Vec<JordanElement> {
        (0..self.ambient_dim())
            .map(|i| {
                let mut coords = vec![0.0; self.ambient_dim()];
                coords[i] = 1.0;
                JordanElement { algebra: *self, coords }
            })
            .collect()
    }

    pub fn element(&self, coords: Vec<f64>) -> Result<JordanElement> {
        JordanElement::new(*self, coords)
    }

    /// Gaussian random element.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> JordanElement {
        JordanElement { algebra: *self, coords: linalg::gaussian_vec(rng, self.ambient_dim()) }
    }

    /// Random element of the cone (a square of a Gaussian element).
    pub fn random_in_cone<R: Rng + ?Sized>(&self, rng: &mut R) -> JordanElement {
        let x = self.random(rng);
        x.product(&x).expect("same algebra")
    }

    /// Random point of the cone boundary: a nonzero element with smallest
    /// eigenvalue exactly zero.
    pub fn random_boundary<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<JordanElement> {
        let s = self.random(rng).spectral_decompose()?;
        let min = *s.eigenvalues.last().expect("rank ≥ 1");
        let shifted: Vec<f64> = s.eigenvalues.iter().map(|l| (l - min).abs()).collect();
        Ok(s.compose(&shifted))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JordanElement {
    pub algebra: Algebra,
    pub coords: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub frame: Vec<JordanElement>,
    /// Sorted in descending order.
    pub eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetInv {
    pub det: f64,
    pub inverse: Option<JordanElement>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parts {
    pub pos: JordanElement,
    pub neg: JordanElement,
    pub abs: JordanElement,
    pub sqrt: Option<JordanElement>,
}

fn mismatch(a: &Algebra, b: &Algebra) -> Error {
    Error::AlgebraMismatch { left: a.to_string(), right: b.to_string() }
}

impl SpectralData {
    /// `Σ f_i c_i` for the given coefficients.
    pub fn compose(&self, coeffs: &[f64]) -> JordanElement {
        let algebra = self.frame[0].algebra;
        let mut coords = vec![0.0; algebra.ambient_dim()];
        for (c, &l) in self.frame.iter().zip(coeffs) {
            for (y, x) in coords.iter_mut().zip(&c.coords) {
                *y += l * x;
            }
        }
        JordanElement { algebra, coords }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> JordanElement {
        let coeffs: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.compose(&coeffs)
    }

    pub fn reconstruct(&self) -> JordanElement {
        self.compose(&self.eigenvalues)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("rank ≥ 1")
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, l| m.max(l.abs()))
    }
}

impl JordanElement {
    pub fn new(algebra: Algebra, coords: Vec<f64>) -> Result<Self> {
        crate::error::check_dim(algebra.ambient_dim(), coords.len())?;
        Ok(Self { algebra, coords })
    }

    pub fn norm(&self) -> f64 {
        linalg::norm2(&self.coords)
    }

    pub fn inner(&self, other: &JordanElement) -> Result<f64> {
        self.same(other)?;
        Ok(linalg::dot(&self.coords, &other.coords))
    }

    fn same(&self, other: &JordanElement) -> Result<()> {
        if self.algebra == other.algebra {
            Ok(())
        } else {
            Err(mismatch(&self.algebra, &other.algebra))
        }
    }

    pub fn scale(&self, c: f64) -> JordanElement {
        JordanElement { algebra: self.algebra, coords: self.coords.iter().map(|x| c * x).collect() }
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, other: &JordanElement, c: f64) -> Result<JordanElement> {
        self.same(other)?;
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a + c * b).collect();
        Ok(JordanElement { algebra: self.algebra, coords })
    }

    pub fn add(&self, other: &JordanElement) -> Result<JordanElement> {
        self.add_scaled(other, 1.0)
    }

    pub fn sub(&self, other: &JordanElement) -> Result<JordanElement> {
        self.add_scaled(other, -1.0)
    }

    /// Encoded Hermitian matrix (Hermitian kind only).
    pub fn to_matrix(&self) -> Result<CMat> {
        match self.algebra {
            Algebra::Hermitian(d) => Ok(coords_to_matrix(d, &self.coords)),
            Algebra::Spin(_) => Err(Error::Unsupported("matrix view of a spin-factor element".into())),
        }
    }

    /// Coordinates of the Hermitian part of `m`.
    pub fn from_matrix(m: &CMat) -> Result<JordanElement> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let d = m.nrows();
        Ok(JordanElement { algebra: Algebra::Hermitian(d), coords: matrix_to_coords(m) })
    }

    pub fn product(&self, other: &JordanElement) -> Result<JordanElement> {
        jordan_product(self, other)
    }

    pub fn square(&self) -> JordanElement {
        jordan_product(self, self).expect("same algebra")
    }

    pub fn spectral_decompose(&self) -> Result<SpectralData> {
        spectral_decompose(self)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.spectral_decompose()?.min_eigenvalue())
    }

    /// Matrix of `L_x : y ↦ x∘y`.
    pub fn left_mult(&self) -> DMatrix<f64> {
        let n = self.algebra.ambient_dim();
        let mut m = DMatrix::zeros(n, n);
        for (j, b) in self.algebra.basis().iter().enumerate() {
            let col = self.square_free_product(b);
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        m
    }

    fn square_free_product(&self, b: &JordanElement) -> Vec<f64> {
        jordan_product(self, b).expect("same algebra").coords
    }

    pub fn inverse(&self, tol: f64) -> Result<Option<JordanElement>> {
        Ok(det_inv_with_tol(self, tol)?.inverse)
    }

    /// Spectral square root; `None` outside the cone.
    pub fn sqrt(&self, tol: f64) -> Result<Option<JordanElement>> {
        Ok(parts_with_tol(self, tol)?.sqrt)
    }
}

pub(crate) fn coords_to_matrix(d: usize, c: &[f64]) -> CMat {
    let mut m = CMat::zeros(d, d);
    let c0 = c[0] / (d as f64).sqrt();
    for j in 0..d {
        m[(j, j)] = Complex64::new(c0, 0.0);
    }
    for l in 1..d {
        let s = c[l] / ((l * (l + 1)) as f64).sqrt();
        for j in 0..l {
            m[(j, j)].re += s;
        }
        m[(l, l)].re -= l as f64 * s;
    }
    let mut p = d;
    let r2 = std::f64::consts::SQRT_2;
    for j in 0..d {
        for k in j + 1..d {
            let z = Complex64::new(c[p] / r2, -c[p + 1] / r2);
            m[(j, k)] = z;
            m[(k, j)] = z.conj();
            p += 2;
        }
    }
    m
}

pub(crate) fn matrix_to_coords(m: &CMat) -> Vec<f64> {
    let d = m.nrows();
    let mut c = vec![0.0; d * d];
    c[0] = (0..d).map(|j| m[(j, j)].re).sum::<f64>() / (d as f64).sqrt();
    for l in 1..d {
        let s: f64 = (0..l).map(|j| m[(j, j)].re).sum::<f64>() - l as f64 * m[(l, l)].re;
        c[l] = s / ((l * (l + 1)) as f64).sqrt();
    }
    let mut p = d;
    let r2 = std::f64::consts::SQRT_2;
    for j in 0..d {
        for k in j + 1..d {
            let (a, b) = (m[(j, k)], m[(k, j)]);
            c[p] = (a.re + b.re) / r2;
            c[p + 1] = (b.im - a.im) / r2;
            p += 2;
        }
    }
    c
}

/// The documented orthonormal basis of Hermitian `d×d` matrices.
pub fn hermitian_basis(d: usize) -> Vec<CMat> {
    (0..d * d)
        .map(|i| {
            let mut c = vec![0.0; d * d];
            c[i] = 1.0;
            coords_to_matrix(d, &c)
        })
        .collect()
}

pub fn jordan_product(a: &JordanElement, b: &JordanElement) -> Result<JordanElement> {
    a.same(b)?;
    let coords = match a.algebra {
        Algebra::Spin(_) => {
            let (s, x) = (a.coords[0], &a.coords[1..]);
            let (t, y) = (b.coords[0], &b.coords[1..]);
            let mut out = Vec::with_capacity(a.coords.len());
            out.push(s * t + linalg::dot(x, y));
            out.extend(x.iter().zip(y).map(|(xi, yi)| s * yi + t * xi));
            out
        }
        Algebra::Hermitian(d) => {
            let ma = coords_to_matrix(d, &a.coords);
            let mb = coords_to_matrix(d, &b.coords);
            let p = (&ma * &mb + &mb * &ma).scale(0.5);
            matrix_to_coords(&p)
        }
    };
    Ok(JordanElement { algebra: a.algebra, coords })
}

pub fn spectral_decompose(a: &JordanElement) -> Result<SpectralData> {
    match a.algebra {
        Algebra::Spin(n) => {
            let t = a.coords[0];
            let x = &a.coords[1..];
            let r = linalg::norm2(x);
            let mut u = vec![0.0; n];
            if r > 0.0 {
                u.iter_mut().zip(x).for_each(|(ui, xi)| *ui = xi / r);
            } else if n > 0 {
                u[0] = 1.0;
            }
            let idem = |sign: f64| {
                let mut c = Vec::with_capacity(n + 1);
                c.push(0.5);
                c.extend(u.iter().map(|ui| 0.5 * sign * ui));
                JordanElement { algebra: a.algebra, coords: c }
            };
            if n == 0 {
                // J(ℝ⁰) = ℝ has rank 1 in disguise; keep rank 2 with a split identity.
                let half = JordanElement { algebra: a.algebra, coords: vec![0.5] };
                return Ok(SpectralData { frame: vec![half.clone(), half], eigenvalues: vec![t, t] });
            }
            Ok(SpectralData { frame: vec![idem(1.0), idem(-1.0)], eigenvalues: vec![t + r, t - r] })
        }
        Algebra::Hermitian(d) => {
            let m = coords_to_matrix(d, &a.coords);
            let (vals, vecs) = linalg::herm_eigen_desc(&m)?;
            let frame = (0..d)
                .map(|i| {
                    let v = vecs.column(i);
                    let p = v * v.adjoint();
                    JordanElement { algebra: a.algebra, coords: matrix_to_coords(&p) }
                })
                .collect();
            Ok(SpectralData { frame, eigenvalues: vals })
        }
    }
}

/// Determinant and inverse with the default tolerance.
pub fn det_inv(a: &JordanElement) -> Result<DetInv> {
    det_inv_with_tol(a, crate::DEFAULT_TOL)
}

/// The inverse is returned when every eigenvalue exceeds `tol` in modulus,
/// relative to the spectral radius (absolute when the radius is below 1).
pub fn det_inv_with_tol(a: &JordanElement, tol: f64) -> Result<DetInv> {
    let s = spectral_decompose(a)?;
    let det = s.eigenvalues.iter().product();
    let scale = s.max_abs_eigenvalue().max(1.0);
    let invertible = s.eigenvalues.iter().all(|l| l.abs() > tol * scale);
    let inverse = invertible.then(|| s.map(|l| 1.0 / l));
    Ok(DetInv { det, inverse })
}

/// `Q_x = 2L_x² − L_{x²}`, acting on the algebra's cone.
pub fn quadratic_rep(x: &JordanElement) -> LinearMapDense {
    let l = x.left_mult();
    let l2 = x.square().left_mult();
    let q = &l * &l * 2.0 - l2;
    let cone = x.algebra.cone();
    LinearMapDense::new(q, cone, cone).expect("square operator on the ambient space")
}

pub fn parts(a: &JordanElement) -> Result<Parts> {
    parts_with_tol(a, crate::DEFAULT_TOL)
}

pub fn parts_with_tol(a: &JordanElement, tol: f64) -> Result<Parts> {
    let s = spectral_decompose(a)?;
    let pos = s.map(|l| l.max(0.0));
    let neg = s.map(|l| (-l).max(0.0));
    let abs = s.map(f64::abs);
    let thresh = tol * a.norm().max(f64::MIN_POSITIVE);
    let sqrt = (s.min_eigenvalue() >= -thresh).then(|| s.map(|l| l.max(0.0).sqrt()));
    Ok(Parts { pos, neg, abs, sqrt })
}

/// Cone membership: smallest eigenvalue at least `−tol·‖a‖`.
pub fn in_cone(a: &JordanElement, tol: f64) -> Result<bool> {
    let min = spectral_decompose(a)?.min_eigenvalue();
    Ok(min >= -tol * a.norm())
}

/// `Q_x(y)` for Hermitian elements computed as the matrix product `x y x`.
pub fn hermitian_sandwich(x: &JordanElement, y: &JordanElement) -> Result<JordanElement> {
    let mx = x.to_matrix()?;
    let my = y.to_matrix()?;
    JordanElement::from_matrix(&(&mx * my * &mx))
}

/// Embeds a complex vector `v` as the rank-one element `v v†`.
pub fn rank_one(v: &DVector<Complex64>) -> JordanElement {
    JordanElement::from_matrix(&(v * v.adjoint())).expect("square")
}
