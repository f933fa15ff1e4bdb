//! Sinkhorn-type scaling of maps between symmetric cones, the constructive
//! `ℓ1`-entanglement-breaking decomposition, and the two implications
//! relating `e ± x`, `e − x²` and `e − x`.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certificate::Certificate;
use crate::cones::{self, ConeHandle, LinearMapDense};
use crate::error::{check_dim, Error, Result};
use crate::jordan::{self, Algebra, JordanElement};
use crate::linalg;
use crate::tensor::Tensor;

/// Undamped steps before the damped fallback may engage.
pub const UNDAMPED_STEPS: usize = 1000;
pub const DAMPING: f64 = 0.5;
/// Random boundary points in the interiority check.
pub const INTERIORITY_SAMPLES: usize = 100;
const INTERIORITY_SEED: u64 = 0x5111_4400;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    /// `A = Q_{√x}`.
    pub a: LinearMapDense,
    /// `B = Q_{(√y)⁻¹}`.
    pub b: LinearMapDense,
    pub sqrt_x: JordanElement,
    pub inv_sqrt_y: JordanElement,
    pub p_tilde: LinearMapDense,
    pub iterations: usize,
    pub residual_unital: f64,
    pub residual_trace: f64,
    /// `λ` in `P♯∘inv₂∘P(x) = λ·inv₁(x)`.
    pub lambda: f64,
    /// Factor `c = ‖e₁‖²/‖e₂‖²` making the adjoint `P♯ = c·Pᵀ` match equal
    /// unit norms.
    pub adjoint_scale: f64,
    pub damped: bool,
    /// Smallest eigenvalue of `P(c)/‖c‖` over the sampled cone generators.
    pub interiority_margin: f64,
    pub trajectory: Vec<f64>,
}

fn algebra_of(c: &ConeHandle) -> Result<Algebra> {
    c.algebra().ok_or_else(|| Error::Unsupported(format!("{c:?} is not a symmetric cone with a Jordan structure")))
}

fn apply(m: &LinearMapDense, x: &JordanElement, target: Algebra) -> Result<JordanElement> {
    JordanElement::new(target, m.apply(&x.coords)?)
}

/// Smallest eigenvalue of `P(c)/‖c‖` over a Jordan frame of `e₁` and random
/// boundary points.
pub fn interiority_margin(p: &LinearMapDense, samples: usize) -> Result<f64> {
    let (a1, a2) = (algebra_of(&p.domain)?, algebra_of(&p.codomain)?);
    let mut points = a1.identity().spectral_decompose()?.frame;
    let mut rng = ChaCha8Rng::seed_from_u64(INTERIORITY_SEED);
    for _ in 0..samples {
        points.push(a1.random_boundary(&mut rng)?);
    }
    let mut margin = f64::INFINITY;
    for c in &points {
        let img = apply(p, c, a2)?;
        margin = margin.min(img.min_eigenvalue()? / c.norm());
    }
    Ok(margin)
}

fn inverse_or_fail(x: &JordanElement) -> Result<JordanElement> {
    match x.inverse(1e-14)? {
        Some(inv) if x.min_eigenvalue()? > 0.0 => Ok(inv),
        _ => Err(Error::InteriorityViolated { margin: x.min_eigenvalue()? }),
    }
}

/// Finds `A ∈ Aut(C₁)`, `B ∈ Aut(C₂)` with `P̃ = B∘P∘A` unital and
/// trace-preserving by iterating `x ← M(x)` from `e₁/⟨e₁,e₁⟩`.
pub fn sinkhorn_scale(p: &LinearMapDense, tol: f64, max_iter: usize) -> Result<ScalingResult> {
    let (a1, a2) = (algebra_of(&p.domain)?, algebra_of(&p.codomain)?);
    let margin = interiority_margin(p, INTERIORITY_SAMPLES)?;
    if margin <= 0.0 {
        return Err(Error::InteriorityViolated { margin });
    }
    let (e1, e2) = (a1.identity(), a2.identity());
    let c = e1.inner(&e1)? / e2.inner(&e2)?;
    let adj = p.adjoint().scale(c);

    let step = |x: &JordanElement| -> Result<JordanElement> {
        let y_inv = inverse_or_fail(&apply(p, x, a2)?)?;
        let z = inverse_or_fail(&apply(&adj, &y_inv, a1)?)?;
        let s = e1.inner(&z)?;
        Ok(z.scale(1.0 / s))
    };

    let mut x = e1.scale(1.0 / e1.inner(&e1)?);
    let mut trajectory = Vec::new();
    let mut damped = false;
    let mut increased = false;
    let mut iterations = 0;
    loop {
        let mx = step(&x)?;
        let r = mx.sub(&x)?.norm();
        if let Some(&prev) = trajectory.last() {
            increased |= r > prev;
        }
        trajectory.push(r);
        if r <= tol {
            x = mx;
            break;
        }
        if iterations >= max_iter {
            return Err(Error::NoConvergence { iterations, residual: r });
        }
        if !damped && iterations >= UNDAMPED_STEPS && increased {
            damped = true;
        }
        x = if damped { x.scale(1.0 - DAMPING).add_scaled(&mx, DAMPING)? } else { mx };
        iterations += 1;
    }

    let y = apply(p, &x, a2)?;
    let sqrt_x = x.sqrt(1e-14)?.ok_or(Error::InteriorityViolated { margin: x.min_eigenvalue()? })?;
    let sqrt_y = y.sqrt(1e-14)?.ok_or(Error::InteriorityViolated { margin: y.min_eigenvalue()? })?;
    let inv_sqrt_y = inverse_or_fail(&sqrt_y)?;
    let a = jordan::quadratic_rep(&sqrt_x);
    let b = jordan::quadratic_rep(&inv_sqrt_y);
    let p_tilde = b.compose(p)?.compose(&a)?;

    let lhs = apply(&adj, &inverse_or_fail(&y)?, a1)?;
    let lambda = lhs.inner(&x)? / inverse_or_fail(&x)?.inner(&x)?;
    let unital = apply(&p_tilde, &e1, a2)?.sub(&e2)?.norm();
    let trace = apply(&p_tilde.adjoint().scale(c), &e2, a1)?.sub(&e1)?.norm();
    Ok(ScalingResult {
        a,
        b,
        sqrt_x,
        inv_sqrt_y,
        p_tilde,
        iterations,
        residual_unital: unital,
        residual_trace: trace,
        lambda,
        adjoint_scale: c,
        damped,
        interiority_margin: margin,
        trajectory,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinTerm {
    /// Element of `C_{ℓ1^k}`.
    pub ell1: Vec<f64>,
    pub element: JordanElement,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinDecomposition {
    pub algebra: Algebra,
    pub k: usize,
    /// `(√k·x₀, x₁, …, x_k)`, the image under `id ⊗ I_{√k}`.
    pub target: Vec<JordanElement>,
    pub terms: Vec<MinTerm>,
    /// The same decomposition before mapping back through `Q_{√x₀}`.
    pub normalized_terms: Vec<MinTerm>,
    /// Smallest eigenvalue of `√k·e − Σ|xᵢ′|`.
    pub middle_min_eigenvalue: f64,
    /// `ε` added to `x₀` when it was not strictly interior.
    pub regularization: Option<f64>,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCheck {
    pub valid: bool,
    pub residual: f64,
    pub worst_ell1_margin: f64,
    pub worst_cone_margin: f64,
}

fn sum_terms(terms: &[MinTerm], algebra: Algebra, k: usize) -> Vec<JordanElement> {
    let mut out = vec![algebra.zero(); k + 1];
    for t in terms {
        for (j, c) in t.ell1.iter().enumerate() {
            if *c != 0.0 {
                out[j] = out[j].add_scaled(&t.element, *c).expect("same algebra");
            }
        }
    }
    out
}

impl MinDecomposition {
    /// Recomputes every cone membership and the reconstruction.
    pub fn verify(&self, tol: f64) -> Result<DecompositionCheck> {
        let ell1 = ConeHandle::Ell1(self.k);
        let mut worst_ell1 = f64::INFINITY;
        let mut worst_cone = f64::INFINITY;
        let mut members = true;
        for t in &self.terms {
            check_dim(self.k + 1, t.ell1.len())?;
            let m1 = ell1.margin(&t.ell1)?;
            let m2 = t.element.min_eigenvalue()?;
            worst_ell1 = worst_ell1.min(m1 / linalg::norm2(&t.ell1).max(f64::MIN_POSITIVE));
            worst_cone = worst_cone.min(m2 / t.element.norm().max(f64::MIN_POSITIVE));
            members &= m1 >= -tol * linalg::norm2(&t.ell1).max(1.0) && m2 >= -tol * t.element.norm().max(1.0);
        }
        let sum = sum_terms(&self.terms, self.algebra, self.k);
        let residual = sum
            .iter()
            .zip(&self.target)
            .map(|(a, b)| a.sub(b).map(|d| d.norm()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let scale = self.target.iter().map(JordanElement::norm).fold(1.0, f64::max);
        Ok(DecompositionCheck {
            valid: members && residual <= 1e-10 * scale,
            residual,
            worst_ell1_margin: worst_ell1,
            worst_cone_margin: worst_cone,
        })
    }

    /// The decomposition as a minimal-product membership certificate on the
    /// order-two tensor `Σ element ⊗ ell1`.
    pub fn to_certificate(&self, tol: f64) -> Result<Certificate> {
        let dim = self.algebra.ambient_dim();
        let mut target = Tensor::zeros(&[dim, self.k + 1]);
        for (j, x) in self.target.iter().enumerate() {
            for (i, v) in x.coords.iter().enumerate() {
                target.set(&[i, j], *v);
            }
        }
        let terms = self.terms.iter().map(|t| (t.element.coords.clone(), t.ell1.clone())).collect();
        Certificate::min_membership(self.algebra.cone(), ConeHandle::Ell1(self.k), target, terms, tol)
    }
}

/// Decomposes `(id ⊗ I_{√k})(x₀, …, x_k)` into products of cone elements
/// after checking `(x₀, …, x_k) ∈ C ⊗max C_{ℓ1^k}`.
pub fn ell1_break_decompose(xs: &[JordanElement], tol: f64) -> Result<MinDecomposition> {
    let x0 = xs.first().ok_or_else(|| Error::OutOfRange("need x₀".into()))?;
    let algebra = x0.algebra;
    let k = xs.len() - 1;
    if k == 0 {
        return Err(Error::OutOfRange("need k ≥ 1".into()));
    }
    for x in xs {
        if x.algebra != algebra {
            return Err(Error::AlgebraMismatch { left: algebra.to_string(), right: x.algebra.to_string() });
        }
    }
    let cone = algebra.cone();
    let coords: Vec<Vec<f64>> = xs.iter().map(|x| x.coords.clone()).collect();
    let mm = cones::max_membership_ell1_factor(&cone, &coords, tol)?;
    if let Some(sign) = mm.violating_sign {
        return Err(Error::MaxMembershipViolated { sign });
    }

    let mut base = x0.clone();
    let mut regularization = None;
    let interior = |x: &JordanElement| -> Result<bool> { Ok(x.min_eigenvalue()? > tol * x.norm().max(1e-300)) };
    if !interior(&base)? {
        let eps = 1e-8 * x0.norm().max(f64::MIN_POSITIVE);
        base = base.add_scaled(&algebra.identity(), eps)?;
        regularization = Some(eps);
        if !interior(&base)? {
            return Err(Error::NotPositive { min_eigenvalue: base.min_eigenvalue()? });
        }
    }
    let root = base.sqrt(tol)?.ok_or(Error::NotPositive { min_eigenvalue: base.min_eigenvalue()? })?;
    let root_inv = root.inverse(1e-14)?.ok_or(Error::NotPositive { min_eigenvalue: root.min_eigenvalue()? })?;
    let q = jordan::quadratic_rep(&root);
    let q_inv = jordan::quadratic_rep(&root_inv);

    let sk = (k as f64).sqrt();
    let e = algebra.identity();
    let normalized: Vec<JordanElement> =
        xs[1..].iter().map(|x| apply(&q_inv, x, algebra)).collect::<Result<_>>()?;
    let mut middle = e.scale(sk);
    let mut normalized_terms = Vec::new();
    for (i, x) in normalized.iter().enumerate() {
        let parts = jordan::parts(x)?;
        middle = middle.sub(&parts.abs)?;
        let mut plus = vec![0.0; k + 1];
        plus[0] = 1.0;
        plus[i + 1] = 1.0;
        let mut minus = plus.clone();
        minus[i + 1] = -1.0;
        normalized_terms.push(MinTerm { ell1: plus, element: parts.pos });
        normalized_terms.push(MinTerm { ell1: minus, element: parts.neg });
    }
    let middle_min_eigenvalue = middle.min_eigenvalue()?;
    let mut e0 = vec![0.0; k + 1];
    e0[0] = 1.0;
    normalized_terms.insert(0, MinTerm { ell1: e0, element: middle });

    let terms = normalized_terms
        .iter()
        .map(|t| Ok(MinTerm { ell1: t.ell1.clone(), element: apply(&q, &t.element, algebra)? }))
        .collect::<Result<Vec<_>>>()?;
    let mut target = vec![base.scale(sk)];
    target.extend(xs[1..].iter().cloned());
    let mut d = MinDecomposition {
        algebra,
        k,
        target,
        terms,
        normalized_terms,
        middle_min_eigenvalue,
        regularization,
        residual: 0.0,
    };
    d.residual = d.verify(tol)?.residual;
    Ok(d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitIntervalReport {
    /// `e + x ∈ C` and `e − x ∈ C`.
    pub premise_pm: bool,
    /// `e − x² ∈ C`.
    pub conclusion_square: bool,
    /// `e − x² ∈ C` as the premise of the converse implication.
    pub premise_square: bool,
    /// `e − x ∈ C`.
    pub conclusion_minus: bool,
}

impl UnitIntervalReport {
    /// True when a premise holds but its conclusion fails.
    pub fn violated(&self) -> bool {
        (self.premise_pm && !self.conclusion_square) || (self.premise_square && !self.conclusion_minus)
    }
}

/// Order-interval implications: `−e ≤ x ≤ e ⇒ x² ≤ e` and `x² ≤ e ⇒ x ≤ e`.
pub fn unit_interval_check(x: &JordanElement, tol: f64) -> Result<UnitIntervalReport> {
    let e = x.algebra.identity();
    let inside = |y: &JordanElement| -> Result<bool> {
        let scale = tol * x.norm().max(1.0) * x.norm().max(1.0);
        Ok(y.min_eigenvalue()? >= -scale)
    };
    let plus = inside(&e.add(x)?)?;
    let minus = inside(&e.sub(x)?)?;
    let square = inside(&e.sub(&x.square())?)?;
    Ok(UnitIntervalReport { premise_pm: plus && minus, conclusion_square: square, premise_square: square, conclusion_minus: minus })
}

/// A strictly positive map `X ↦ Σ KᵢXKᵢ† + δ·Tr(X)·id` on `M_d`.
pub fn random_positive_psd_map<R: rand::Rng + ?Sized>(rng: &mut R, d: usize, kraus: usize, delta: f64) -> LinearMapDense {
    let ks: Vec<_> = (0..kraus).map(|_| linalg::gaussian_cmatrix(rng, d, d)).collect();
    let n = d * d;
    let a = Algebra::Hermitian(d);
    let mut m = nalgebra::DMatrix::zeros(n, n);
    for (j, b) in a.basis().iter().enumerate() {
        let x = b.to_matrix().expect("hermitian");
        let mut y = linalg::cidentity(d).scale(delta * x.trace().re);
        for k in &ks {
            y += k * &x * k.adjoint();
        }
        let coords = JordanElement::from_matrix(&y).expect("square").coords;
        m.column_mut(j).copy_from_slice(&coords);
    }
    LinearMapDense { matrix: m, domain: ConeHandle::Psd(d), codomain: ConeHandle::Psd(d) }
}

/// `I_{α,β}` on `L_n` plus a small perturbation by a map `Σ yᵢ φᵢᵀ` with
/// `yᵢ ∈ L_n` and `φᵢ ∈ L_n`, which keeps the cone inside the interior.
pub fn random_positive_spin_map<R: rand::Rng + ?Sized>(rng: &mut R, n: usize, alpha: f64, beta: f64, size: f64) -> LinearMapDense {
    let a = Algebra::Spin(n);
    let mut m = cones::IsotropicMap::new(alpha, beta, n).matrix();
    for _ in 0..3 {
        let y = DVector::from_vec(a.random_in_cone(rng).coords);
        let phi = DVector::from_vec(a.random_in_cone(rng).coords);
        let s = size / (y.norm() * phi.norm());
        m += (&y * phi.transpose()) * s;
    }
    LinearMapDense { matrix: m, domain: ConeHandle::Lorentz(n), codomain: ConeHandle::Lorentz(n) }
}
