//! Proper cones in coordinates, dense linear maps between them, twirling,
//! isotropic and central maps, and maximal tensor product membership against
//! an `ℓ1` factor.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::jordan::{coords_to_matrix, Algebra, JordanElement};
use crate::linalg;
use crate::norms::{self, Space};
use crate::tensor::Tensor;

/// Largest `k` accepted by the `2^k` sign enumeration.
pub const MAX_SIGN_K: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "lowercase")]
pub enum ConeHandle {
    /// `L_n ⊂ ℝ^{n+1}`.
    Lorentz(usize),
    /// Positive semidefinite `d×d` Hermitian matrices in the Hermitian basis.
    Psd(usize),
    /// `C_{ℓ1^k} = {(t,x) : ‖x‖₁ ≤ t} ⊂ ℝ^{k+1}`.
    Ell1(usize),
    /// `C_{ℓ∞^k} = {(t,x) : ‖x‖_∞ ≤ t} ⊂ ℝ^{k+1}`.
    EllInf(usize),
    /// Nonnegative orthant of `ℝⁿ`.
    Simplex(usize),
}

impl std::fmt::Display for ConeHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConeHandle::Lorentz(n) => write!(f, "lorentz:{n}"),
            ConeHandle::Psd(d) => write!(f, "psd:{d}"),
            ConeHandle::Ell1(k) => write!(f, "ell1:{k}"),
            ConeHandle::EllInf(k) => write!(f, "ellinf:{k}"),
            ConeHandle::Simplex(n) => write!(f, "simplex:{n}"),
        }
    }
}

impl FromStr for ConeHandle {
    type Err = Error;

    /// Parses `lorentz:n`, `spin:n`, `psd:d`, `ell1:k`, `ellinf:k` or `simplex:n`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, param) = s
            .split_once(':')
            .ok_or_else(|| Error::OutOfRange(format!("cone '{s}' is not of the form kind:param")))?;
        let p: usize = param
            .parse()
            .map_err(|_| Error::OutOfRange(format!("cone parameter '{param}' is not an integer")))?;
        match kind {
            "lorentz" | "spin" => Ok(ConeHandle::Lorentz(p)),
            "psd" if p > 0 => Ok(ConeHandle::Psd(p)),
            "ell1" => Ok(ConeHandle::Ell1(p)),
            "ellinf" => Ok(ConeHandle::EllInf(p)),
            "simplex" if p > 0 => Ok(ConeHandle::Simplex(p)),
            _ => Err(Error::OutOfRange(format!("unknown cone '{s}'"))),
        }
    }
}

impl ConeHandle {
    pub fn ambient_dim(&self) -> usize {
        match *self {
            ConeHandle::Lorentz(n) | ConeHandle::Ell1(n) | ConeHandle::EllInf(n) => n + 1,
            ConeHandle::Psd(d) => d * d,
            ConeHandle::Simplex(n) => n,
        }
    }

    pub fn dual(&self) -> ConeHandle {
        match *self {
            ConeHandle::Ell1(k) => ConeHandle::EllInf(k),
            ConeHandle::EllInf(k) => ConeHandle::Ell1(k),
            other => other,
        }
    }

    /// The Jordan algebra whose cone of squares this is, if any.
    pub fn algebra(&self) -> Option<Algebra> {
        match *self {
            ConeHandle::Lorentz(n) => Some(Algebra::Spin(n)),
            ConeHandle::Psd(d) => Some(Algebra::Hermitian(d)),
            _ => None,
        }
    }

    /// Order unit: `e₀` for the `(t,x)` cones, the identity for PSD and the
    /// all-ones vector for the orthant.
    pub fn order_unit(&self) -> Vec<f64> {
        match *self {
            ConeHandle::Psd(d) => Algebra::Hermitian(d).identity().coords,
            ConeHandle::Simplex(n) => vec![1.0; n],
            _ => {
                let mut v = vec![0.0; self.ambient_dim()];
                v[0] = 1.0;
                v
            }
        }
    }

    /// Signed membership margin: nonnegative exactly on the cone.
    pub fn margin(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.ambient_dim(), x.len())?;
        Ok(match *self {
            ConeHandle::Lorentz(_) => x[0] - linalg::norm2(&x[1..]),
            ConeHandle::Ell1(_) => x[0] - linalg::norm1(&x[1..]),
            ConeHandle::EllInf(_) => x[0] - linalg::norm_inf(&x[1..]),
            ConeHandle::Simplex(_) => x.iter().copied().fold(f64::INFINITY, f64::min),
            ConeHandle::Psd(d) => {
                let m = coords_to_matrix(d, x);
                let (vals, _) = linalg::herm_eigen_desc(&m)?;
                vals[d - 1]
            }
        })
    }

    /// Membership with tolerance relative to `‖x‖₂`.
    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        Ok(self.margin(x)? >= -tol * linalg::norm2(x))
    }

    /// A random element of the cone.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match *self {
            ConeHandle::Lorentz(n) => Algebra::Spin(n).random_in_cone(rng).coords,
            ConeHandle::Psd(d) => Algebra::Hermitian(d).random_in_cone(rng).coords,
            ConeHandle::Ell1(k) | ConeHandle::EllInf(k) => {
                let mut x = linalg::gaussian_vec(rng, k + 1);
                let r: f64 = rng.random();
                let size = match self {
                    ConeHandle::Ell1(_) => linalg::norm1(&x[1..]),
                    _ => linalg::norm_inf(&x[1..]),
                };
                x[0] = size * (1.0 + r);
                x
            }
            ConeHandle::Simplex(n) => (0..n).map(|_| rng.random::<f64>()).collect(),
        }
    }
}

pub fn dual_pairing(phi: &[f64], x: &[f64]) -> Result<f64> {
    check_dim(phi.len(), x.len())?;
    Ok(linalg::dot(phi, x))
}

/// Membership in a cone; see [`ConeHandle::contains`].
pub fn in_cone(c: &ConeHandle, x: &[f64], tol: f64) -> Result<bool> {
    c.contains(x, tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearMapDense {
    #[serde(with = "crate::serde_util::matrix")]
    pub matrix: DMatrix<f64>,
    pub domain: ConeHandle,
    pub codomain: ConeHandle,
}

impl LinearMapDense {
    pub fn new(matrix: DMatrix<f64>, domain: ConeHandle, codomain: ConeHandle) -> Result<Self> {
        check_dim(domain.ambient_dim(), matrix.ncols())?;
        check_dim(codomain.ambient_dim(), matrix.nrows())?;
        Ok(Self { matrix, domain, codomain })
    }

    pub fn identity(cone: ConeHandle) -> Self {
        let n = cone.ambient_dim();
        Self { matrix: DMatrix::identity(n, n), domain: cone, codomain: cone }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.matrix.ncols(), x.len())?;
        Ok((&self.matrix * DVector::from_column_slice(x)).iter().copied().collect())
    }

    /// `P^{⊗k}` applied to an order-`k` tensor.
    pub fn apply_tensor(&self, x: &Tensor) -> Result<Tensor> {
        x.apply_all(&self.matrix)
    }

    /// Adjoint between the dual cones.
    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.transpose(),
            domain: self.codomain.dual(),
            codomain: self.domain.dual(),
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &LinearMapDense) -> Result<Self> {
        check_dim(self.matrix.ncols(), inner.matrix.nrows())?;
        Ok(Self { matrix: &self.matrix * &inner.matrix, domain: inner.domain, codomain: self.codomain })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { matrix: &self.matrix * c, ..self.clone() }
    }
}

/// `I_{α,β} = α π₁ + β π₂` on `ℝ ⊕ ℝⁿ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsotropicMap {
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
}

impl IsotropicMap {
    pub fn new(alpha: f64, beta: f64, n: usize) -> Self {
        Self { alpha, beta, n }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::identity(self.n + 1, self.n + 1) * self.beta;
        m[(0, 0)] = self.alpha;
        m
    }

    pub fn as_map(&self, cone: ConeHandle) -> Result<LinearMapDense> {
        LinearMapDense::new(self.matrix(), cone, cone)
    }
}

/// Positivity on a symmetric-base cone: `|β| ≤ α`.
pub fn isotropic_positive(map: &IsotropicMap, tol: f64) -> bool {
    map.beta.abs() <= map.alpha + tol * map.alpha.abs().max(1.0)
}

/// Entanglement breaking on a symmetric-base cone: `|β| ≤ α/n`.
pub fn isotropic_eb(map: &IsotropicMap, tol: f64) -> bool {
    let n = map.n.max(1) as f64;
    map.beta.abs() <= map.alpha / n + tol * (map.alpha / n).abs().max(1.0)
}

/// Exact twirl: `α = L₀₀`, `β = (Σ_{i≥1} L_ii)/n`.
pub fn twirl(l: &DMatrix<f64>) -> Result<IsotropicMap> {
    check_dim(l.nrows(), l.ncols())?;
    if l.nrows() < 2 {
        return Err(Error::OutOfRange("twirl needs a base of dimension ≥ 1".into()));
    }
    let n = l.nrows() - 1;
    let beta = (1..=n).map(|i| l[(i, i)]).sum::<f64>() / n as f64;
    Ok(IsotropicMap { alpha: l[(0, 0)], beta, n })
}

/// Monte-Carlo estimate of `∫ g̃⁻¹ L g̃ dg` over Haar-random `g ∈ O(n)`
/// acting on the base, with `g̃ = 1 ⊕ g`.
pub fn twirl_monte_carlo<R: Rng + ?Sized>(l: &DMatrix<f64>, samples: usize, rng: &mut R) -> DMatrix<f64> {
    let n = l.nrows() - 1;
    let mut acc = DMatrix::zeros(n + 1, n + 1);
    let mut gt = DMatrix::identity(n + 1, n + 1);
    for _ in 0..samples {
        let g = linalg::haar_orthogonal(rng, n);
        gt.view_mut((1, 1), (n, n)).copy_from(&g);
        acc += gt.transpose() * l * &gt;
    }
    acc / samples as f64
}

/// Outcome of a central-map test. `exact` is false when the underlying norm
/// is only bracketed; `holds` is then decided from the bracket when
/// possible and otherwise conservatively from the upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralDecision {
    pub holds: bool,
    pub exact: bool,
    pub lower: f64,
    pub upper: f64,
}

fn central_decide(alpha: f64, lower: f64, upper: f64, exact: bool, tol: f64) -> CentralDecision {
    let slack = tol * alpha.abs().max(1.0);
    let holds = upper <= alpha + slack;
    let decided = holds || lower > alpha + slack;
    CentralDecision { holds, exact: exact || decided, lower, upper }
}

/// `α ⊕ P : C_X → C_Y` is positive iff `‖P‖_{X→Y} ≤ α`.
pub fn central_positive(alpha: f64, p: &DMatrix<f64>, x: Space, y: Space, tol: f64) -> Result<CentralDecision> {
    let v = norms::operator_norm(p, x, y)?;
    Ok(central_decide(alpha, v, v, true, tol))
}

/// `α ⊕ P : C_X → C_Y` is entanglement breaking iff `‖P‖_{N(X→Y)} ≤ α`.
pub fn central_eb(alpha: f64, p: &DMatrix<f64>, x: Space, y: Space, tol: f64) -> Result<CentralDecision> {
    let nn = norms::nuclear_norm(p, x, y)?;
    Ok(central_decide(alpha, nn.lower, nn.upper, nn.exact, tol))
}

/// `½(L + A L A)` with `A = diag(1, −1, …, −1)`: keeps the scalar and base
/// blocks and zeroes the mixed blocks.
pub fn central_symmetrize(l: &LinearMapDense) -> Result<LinearMapDense> {
    check_dim(l.matrix.nrows(), l.matrix.ncols())?;
    let n = l.matrix.nrows();
    let sign = |i: usize| if i == 0 { 1.0 } else { -1.0 };
    let m = DMatrix::from_fn(n, n, |i, j| {
        let v = l.matrix[(i, j)];
        (v + sign(i) * sign(j) * v) * 0.5
    });
    Ok(LinearMapDense { matrix: m, domain: l.domain, codomain: l.codomain })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxMembership {
    pub member: bool,
    pub violating_sign: Option<Vec<i8>>,
}

/// Decides `(x₀, …, x_k) ∈ C ⊗max C_{ℓ1^k}`, i.e. `x₀ + Σ sᵢxᵢ ∈ C` for every
/// sign vector `s`.
pub fn max_membership_ell1_factor(c: &ConeHandle, xs: &[Vec<f64>], tol: f64) -> Result<MaxMembership> {
    if xs.is_empty() {
        return Err(Error::OutOfRange("need at least x₀".into()));
    }
    let dim = c.ambient_dim();
    for x in xs {
        check_dim(dim, x.len())?;
    }
    let k = xs.len() - 1;
    if k > MAX_SIGN_K {
        return Err(Error::BudgetExceeded { needed: 1u128 << k, limit: 1u128 << MAX_SIGN_K });
    }
    let signs_of = |mask: u64| -> Vec<i8> { (0..k).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).collect() };
    let fresh = |mask: u64| -> Vec<f64> {
        let mut v = xs[0].clone();
        for (i, x) in xs[1..].iter().enumerate() {
            let s = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
            v.iter_mut().zip(x).for_each(|(a, b)| *a += s * b);
        }
        v
    };
    // Gray-code walk, refreshed periodically to keep rounding drift negligible.
    let mut v = fresh(0);
    let mut mask = 0u64;
    for step in 0u64..(1u64 << k) {
        if step > 0 {
            let bit = step.trailing_zeros() as usize;
            mask ^= 1 << bit;
            if step % 256 == 0 {
                v = fresh(mask);
            } else {
                let s = if mask >> bit & 1 == 1 { 2.0 } else { -2.0 };
                v.iter_mut().zip(&xs[bit + 1]).for_each(|(a, b)| *a += s * b);
            }
        }
        if !c.contains(&v, tol)? {
            // Confirm on a freshly summed vector before reporting.
            if !c.contains(&fresh(mask), tol)? {
                return Ok(MaxMembership { member: false, violating_sign: Some(signs_of(mask)) });
            }
        }
    }
    Ok(MaxMembership { member: true, violating_sign: None })
}

/// Re-checks a violating sign vector reported by [`max_membership_ell1_factor`].
pub fn check_max_violation(c: &ConeHandle, xs: &[Vec<f64>], sign: &[i8], tol: f64) -> Result<bool> {
    check_dim(xs.len().saturating_sub(1), sign.len())?;
    let mut v = xs[0].clone();
    for (x, &s) in xs[1..].iter().zip(sign) {
        v.iter_mut().zip(x).for_each(|(a, b)| *a += f64::from(s) * b);
    }
    Ok(!c.contains(&v, tol)?)
}

impl ConeHandle {
    /// Extreme rays of a polyhedral cone; `None` for Lorentz and PSD cones.
    pub fn extreme_rays(&self) -> Option<Vec<Vec<f64>>> {
        let d = self.ambient_dim();
        match *self {
            ConeHandle::Simplex(n) => Some((0..n).map(|i| unit(d, i)).collect()),
            ConeHandle::Ell1(k) => Some(
                (1..=k)
                    .flat_map(|i| {
                        [1.0, -1.0].map(|s| {
                            let mut v = unit(d, 0);
                            v[i] = s;
                            v
                        })
                    })
                    .collect(),
            ),
            ConeHandle::EllInf(k) if k <= MAX_SIGN_K => Some(
                (0u64..1 << k)
                    .map(|mask| {
                        let mut v = vec![1.0; d];
                        for i in 0..k {
                            if mask >> i & 1 == 0 {
                                v[i + 1] = -1.0;
                            }
                        }
                        v
                    })
                    .collect(),
            ),
            _ => None,
        }
    }
}

fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[i] = 1.0;
    v
}

fn product_rays(cones: &[ConeHandle], which: impl Fn(&ConeHandle) -> Option<Vec<Vec<f64>>>) -> Result<Vec<Tensor>> {
    let mut rays: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut count = 1u128;
    for c in cones {
        let r = which(c).ok_or_else(|| Error::Unsupported(format!("{c} is not polyhedral")))?;
        count = count.saturating_mul(r.len() as u128);
        rays.push(r);
    }
    if count > POLY_RAY_LIMIT {
        return Err(Error::BudgetExceeded { needed: count, limit: POLY_RAY_LIMIT });
    }
    let mut out = vec![Tensor::outer(&[])];
    for r in &rays {
        out = out.iter().flat_map(|t| r.iter().map(move |v| t.tensor_product(&Tensor::vector(v)))).collect();
    }
    Ok(out)
}

/// Largest number of product rays enumerated by the polyhedral tests.
pub const POLY_RAY_LIMIT: u128 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyhedralMembership {
    pub member: bool,
    /// Nonnegative weights on the product rays (min) or the most negative
    /// pairing with a product of dual rays (max).
    pub weights: Vec<f64>,
    pub min_pairing: f64,
    pub residual: f64,
}

/// Decides `x ∈ C₁ ⊗min ⋯ ⊗min C_k` for polyhedral factors by nonnegative
/// least squares over products of extreme rays.
pub fn min_membership_polyhedral(cones: &[ConeHandle], x: &Tensor, tol: f64) -> Result<PolyhedralMembership> {
    check_shape(cones, x)?;
    let gens = product_rays(cones, ConeHandle::extreme_rays)?;
    let a = DMatrix::from_fn(x.len(), gens.len(), |i, j| gens[j].data()[i]);
    let w = linalg::nnls(&a, x.data())?;
    let r = &a * DVector::from_column_slice(&w) - DVector::from_column_slice(x.data());
    let residual = r.amax();
    Ok(PolyhedralMembership { member: residual <= tol * x.max_abs().max(1.0), weights: w, min_pairing: f64::NAN, residual })
}

/// Decides `x ∈ C₁ ⊗max ⋯ ⊗max C_k` for polyhedral factors by pairing with
/// every product of extreme rays of the duals.
pub fn max_membership_polyhedral(cones: &[ConeHandle], x: &Tensor, tol: f64) -> Result<PolyhedralMembership> {
    check_shape(cones, x)?;
    let duals: Vec<ConeHandle> = cones.iter().map(ConeHandle::dual).collect();
    let tests = product_rays(&duals, ConeHandle::extreme_rays)?;
    let mut min_pairing = f64::INFINITY;
    for t in &tests {
        min_pairing = min_pairing.min(t.inner(x)?);
    }
    Ok(PolyhedralMembership { member: min_pairing >= -tol, weights: Vec::new(), min_pairing, residual: 0.0 })
}

fn check_shape(cones: &[ConeHandle], x: &Tensor) -> Result<()> {
    check_dim(cones.len(), x.order())?;
    for (c, &d) in cones.iter().zip(x.dims()) {
        check_dim(c.ambient_dim(), d)?;
    }
    Ok(())
}

/// Convenience: a Jordan element as a cone vector.
pub fn coords(x: &JordanElement) -> Vec<f64> {
    x.coords.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::paulis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn polyhedral_tensor_products() {
        let c = [ConeHandle::Ell1(2), ConeHandle::Ell1(2)];
        let e0 = [1.0, 0.0, 0.0];
        let prod = Tensor::outer(&[&[1.0, 0.5, -0.5], &e0]);
        assert!(min_membership_polyhedral(&c, &prod, 1e-9).unwrap().member);
        // e₀⊗e₀ + e₁⊗e₁ + e₂⊗e₂ pairs to −1 with (1,1,−1)⊗(1,−1,1).
        let mut z = Tensor::zeros(&[3, 3]);
        for i in 0..3 {
            z.set(&[i, i], 1.0);
        }
        let max = max_membership_polyhedral(&c, &z, 1e-12).unwrap();
        assert_eq!(max.min_pairing, -1.0);
        assert!(!min_membership_polyhedral(&c, &z, 1e-9).unwrap().member);
        // e₀⊗e₀ + ½(e₁⊗e₁ + e₂⊗e₂) is separable: average of rays.
        z.set(&[1, 1], 0.5);
        z.set(&[2, 2], 0.5);
        assert!(max_membership_polyhedral(&c, &z, 1e-12).unwrap().member);
        assert!(min_membership_polyhedral(&c, &z, 1e-9).unwrap().member);
    }

    #[test]
    fn dual_handles_are_involutive() {
        for c in [
            ConeHandle::Lorentz(3),
            ConeHandle::Psd(2),
            ConeHandle::Ell1(2),
            ConeHandle::EllInf(4),
            ConeHandle::Simplex(3),
        ] {
            assert_eq!(c.dual().dual(), c);
            assert_eq!(c.to_string().parse::<ConeHandle>().unwrap(), c);
        }
        assert_eq!(ConeHandle::Ell1(2).dual(), ConeHandle::EllInf(2));
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(dual_pairing(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(dual_pairing(&[1.0, 0.3, 0.4], &[1.0, -0.3, -0.4]).unwrap(), 1.0 - 0.25);
        let i = JordanElement::from_matrix(&linalg::cidentity(2)).unwrap();
        let sx = JordanElement::from_matrix(&paulis()[0]).unwrap();
        assert!(dual_pairing(&i.coords, &sx.coords).unwrap().abs() < 1e-15);
        assert!(dual_pairing(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn membership_examples() {
        assert!(ConeHandle::Lorentz(3).contains(&[1.0, 0.6, 0.8, 0.0], 1e-9).unwrap());
        assert!(!ConeHandle::Ell1(2).contains(&[1.0, 0.6, 0.6], 1e-9).unwrap());
        assert!(ConeHandle::EllInf(2).contains(&[1.0, 0.6, -1.0], 1e-9).unwrap());
        assert!(ConeHandle::Simplex(3).contains(&[0.2, 0.0, 0.8], 1e-9).unwrap());
        assert!(ConeHandle::Simplex(2).contains(&[0.0, 0.0], 0.0).unwrap());
        let psd = ConeHandle::Psd(2);
        assert!(psd.contains(&psd.order_unit(), 1e-9).unwrap());
    }

    #[test]
    fn ell1_factor_examples() {
        let l = ConeHandle::Lorentz(3);
        let e = l.order_unit();
        let zero = vec![0.0; 4];
        assert!(max_membership_ell1_factor(&l, &[e.clone(), zero.clone(), zero], 1e-9).unwrap().member);
        let x1 = vec![0.0, 0.6, 0.0, 0.8];
        assert!(max_membership_ell1_factor(&l, &[e, x1], 1e-9).unwrap().member);

        let s = ConeHandle::Simplex(2);
        let r = max_membership_ell1_factor(&s, &[vec![1.0, 1.0], vec![1.0, -2.0]], 1e-9).unwrap();
        assert!(!r.member);
        assert_eq!(r.violating_sign, Some(vec![1]));
        assert!(check_max_violation(&s, &[vec![1.0, 1.0], vec![1.0, -2.0]], &[1], 1e-9).unwrap());
    }

    #[test]
    fn ell1_factor_rejects_large_k() {
        let c = ConeHandle::Simplex(1);
        let xs = vec![vec![1.0]; 22];
        assert!(matches!(
            max_membership_ell1_factor(&c, &xs, 1e-9),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn twirl_examples() {
        let t = twirl(&DMatrix::identity(4, 4)).unwrap();
        assert_eq!((t.alpha, t.beta, t.n), (1.0, 1.0, 3));
        let t = twirl(&DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0, 0.0, 0.0]))).unwrap();
        assert_eq!((t.alpha, t.beta), (2.0, 1.0));
        let iso = IsotropicMap::new(0.7, -0.2, 3);
        let back = twirl(&iso.matrix()).unwrap();
        assert_eq!(back.alpha, 0.7);
        assert!((back.beta + 0.2).abs() < 1e-15);
    }

    #[test]
    fn twirl_monte_carlo_agrees_with_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let l = linalg::gaussian_matrix(&mut rng, 3, 3);
        let mc = twirl_monte_carlo(&l, 4000, &mut rng);
        let exact = twirl(&l).unwrap().matrix();
        assert!(linalg::max_diff(&mc, &exact) < 0.1);
    }

    #[test]
    fn isotropic_thresholds() {
        assert!(isotropic_eb(&IsotropicMap::new(1.0, 1.0 / 3.0, 3), 1e-12));
        let m = IsotropicMap::new(1.0, 0.34, 3);
        assert!(!isotropic_eb(&m, 1e-12) && isotropic_positive(&m, 1e-12));
        assert!(!isotropic_positive(&IsotropicMap::new(1.0, 1.01, 3), 1e-12));
    }

    #[test]
    fn central_examples() {
        let id = DMatrix::identity(3, 3);
        let l2 = Space::L2(3);
        assert!(central_eb(3.0, &id, l2, l2, 1e-12).unwrap().holds);
        assert!(!central_eb(2.99, &id, l2, l2, 1e-12).unwrap().holds);
        assert!(central_positive(1.0, &id, l2, l2, 1e-12).unwrap().holds);
        assert!(!central_positive(0.99, &id, l2, l2, 1e-12).unwrap().holds);
        assert!(central_eb(0.0, &DMatrix::zeros(3, 3), l2, l2, 1e-12).unwrap().holds);
    }

    #[test]
    fn symmetrize_examples() {
        let c = ConeHandle::Lorentz(2);
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 1)] = 2.0;
        m[(2, 0)] = -1.0;
        let out = central_symmetrize(&LinearMapDense::new(m, c, c).unwrap()).unwrap();
        assert_eq!(out.matrix, DMatrix::zeros(3, 3));
        let central = IsotropicMap::new(2.0, 0.5, 2).as_map(c).unwrap();
        assert_eq!(central_symmetrize(&central).unwrap(), central);
    }
}
