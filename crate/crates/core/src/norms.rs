//! Injective and projective tensor norms of `ℓ1`, `ℓ2`, `ℓ∞`, operator and
//! nuclear norms of matrices between them, bounds on the tensor radius
//! `τ_k(T) = ‖T^{⊗k}‖^{1/k}_{ε_k → π_k}`, the projection onto
//! `X_k = span(e₀^{⊗k}) ⊕ X^{⊗k}`, and the two-qubit hat/check cones.
//!
//! Values that are only bracketed carry `exact = false` with both endpoints.
//! The single `value` is the endpoint attained by an explicit object: the
//! lower bound for injective norms (a product functional) and the upper
//! bound for projective and nuclear norms (a decomposition).

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::hurwitz;
use crate::jordan::{Algebra, JordanElement};
use crate::linalg::{self, CMat};
use crate::psdmaps;
use crate::tensor::Tensor;

/// Default cap on enumeration work (elementary operations).
pub const NORM_BUDGET: u128 = 1 << 30;

const SEARCH_SEED: u64 = 0x7e45_0a11;
const HOPM_STARTS: usize = 12;
const HOPM_SWEEPS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "lowercase")]
pub enum Space {
    L1(usize),
    L2(usize),
    Linf(usize),
}

impl FromStr for Space {
    type Err = Error;

    /// Parses `l1:n`, `l2:n` or `linf:n`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, n) = s
            .split_once(':')
            .ok_or_else(|| Error::OutOfRange(format!("space '{s}' is not of the form kind:n")))?;
        let n: usize = n.parse().map_err(|_| Error::OutOfRange(format!("bad dimension in '{s}'")))?;
        Space::from_kind(kind, n)
    }
}

impl std::fmt::Display for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Space::L1(n) => write!(f, "l1:{n}"),
            Space::L2(n) => write!(f, "l2:{n}"),
            Space::Linf(n) => write!(f, "linf:{n}"),
        }
    }
}

impl Space {
    pub fn from_kind(kind: &str, n: usize) -> Result<Self> {
        match kind {
            "l1" => Ok(Space::L1(n)),
            "l2" => Ok(Space::L2(n)),
            "linf" => Ok(Space::Linf(n)),
            _ => Err(Error::OutOfRange(format!("unknown space kind '{kind}'"))),
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Space::L1(n) | Space::L2(n) | Space::Linf(n) => n,
        }
    }

    pub fn dual(&self) -> Space {
        match *self {
            Space::L1(n) => Space::Linf(n),
            Space::L2(n) => Space::L2(n),
            Space::Linf(n) => Space::L1(n),
        }
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        match self {
            Space::L1(_) => linalg::norm1(v),
            Space::L2(_) => linalg::norm2(v),
            Space::Linf(_) => linalg::norm_inf(v),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    pub exact: bool,
    pub lower: f64,
    pub upper: f64,
}

impl NormValue {
    fn exact(v: f64) -> Self {
        Self { value: v, exact: true, lower: v, upper: v }
    }

    fn bracket(value: f64, lower: f64, upper: f64) -> Self {
        let lower = lower.min(upper);
        let exact = upper - lower <= 1e-12 * upper.abs().max(1.0);
        Self { value, exact, lower, upper }
    }
}

fn check_tensor(z: &Tensor, x: Space, k: usize) -> Result<()> {
    check_dim(k, z.order())?;
    for &d in z.dims() {
        check_dim(x.dim(), d)?;
    }
    Ok(())
}

fn pow_u128(base: usize, exp: usize) -> u128 {
    (base as u128).checked_pow(exp as u32).unwrap_or(u128::MAX)
}

fn sign_vec(mask: u64, offset: usize, n: usize) -> Vec<f64> {
    (0..n).map(|i| if mask >> (offset + i) & 1 == 1 { -1.0 } else { 1.0 }).collect()
}

/// Injective norm `ε_k(X)` of `z ∈ X^{⊗k}`.
pub fn injective_norm(z: &Tensor, x: Space, k: usize) -> Result<NormValue> {
    injective_norm_with_budget(z, x, k, NORM_BUDGET)
}

pub fn injective_norm_with_budget(z: &Tensor, x: Space, k: usize, budget: u128) -> Result<NormValue> {
    check_tensor(z, x, k)?;
    if k == 1 {
        return Ok(NormValue::exact(x.norm(z.data())));
    }
    match x {
        Space::Linf(_) => Ok(NormValue::exact(z.max_abs())),
        Space::L1(n) => Ok(NormValue::exact(eps_ell1(z, n, k, budget)?)),
        Space::L2(_) if k == 2 => Ok(NormValue::exact(linalg::spectral_norm(&z.matricize(1)))),
        Space::L2(_) => {
            let lower = best_rank_one(z).0;
            let upper = flattening_spectral_upper(z);
            Ok(NormValue::bracket(lower, lower, upper))
        }
    }
}

/// `sup |⟨s₁⊗…⊗s_{k−1}⊗t, z⟩|` over sign vectors, the last factor in closed
/// form `‖·‖₁`. The first sign of the first factor is fixed by symmetry.
fn eps_ell1(z: &Tensor, n: usize, k: usize, budget: u128) -> Result<f64> {
    let bits = n * (k - 1);
    let needed = (1u128 << bits.min(127)).saturating_mul(pow_u128(n, k));
    if bits > 62 || needed > budget {
        return Err(Error::BudgetExceeded { needed, limit: budget });
    }
    if n == 0 {
        return Ok(0.0);
    }
    let mut best: f64 = 0.0;
    let last = vec![0.0; n];
    for mask in 0u64..(1u64 << (bits - 1)) {
        let full = mask << 1;
        let signs: Vec<Vec<f64>> = (0..k - 1).map(|a| sign_vec(full, a * n, n)).collect();
        let mut refs: Vec<&[f64]> = signs.iter().map(Vec::as_slice).collect();
        refs.push(&last);
        let v = z.contract_except(k - 1, &refs)?;
        best = best.max(linalg::norm1(&v));
    }
    Ok(best)
}

fn top_left_singular(m: &DMatrix<f64>) -> Vec<f64> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    u.column(idx).iter().copied().collect()
}

/// Alternating maximization of `|⟨u₁⊗…⊗u_k, z⟩|` over unit vectors, from the
/// dominant singular vectors of the unfoldings and a few seeded random starts.
pub fn best_rank_one(z: &Tensor) -> (f64, Vec<Vec<f64>>) {
    let k = z.order();
    let mut rng = ChaCha8Rng::seed_from_u64(SEARCH_SEED);
    let mut starts: Vec<Vec<Vec<f64>>> = vec![(0..k).map(|a| top_left_singular(&z.unfold(a))).collect()];
    for _ in 0..HOPM_STARTS {
        starts.push(z.dims().iter().map(|&d| linalg::random_unit(&mut rng, d)).collect());
    }
    let mut best = (0.0, starts[0].clone());
    for mut us in starts {
        let mut value = 0.0;
        for _ in 0..HOPM_SWEEPS {
            let prev = value;
            for a in 0..k {
                let refs: Vec<&[f64]> = us.iter().map(Vec::as_slice).collect();
                let g = z.contract_except(a, &refs).expect("shapes match");
                let norm = linalg::norm2(&g);
                if norm == 0.0 {
                    break;
                }
                value = norm;
                us[a] = g.iter().map(|v| v / norm).collect();
            }
            if (value - prev).abs() <= 1e-15 * value.max(1.0) {
                break;
            }
        }
        if value > best.0 {
            best = (value, us);
        }
    }
    best
}

/// `min` over single-mode unfoldings and leading bipartitions of the
/// spectral norm; each is an upper bound on `ε_k(ℓ₂)`.
fn flattening_spectral_upper(z: &Tensor) -> f64 {
    let k = z.order();
    let mut best = f64::INFINITY;
    for a in 0..k {
        best = best.min(linalg::spectral_norm(&z.unfold(a)));
    }
    for s in 1..k {
        best = best.min(linalg::spectral_norm(&z.matricize(s)));
    }
    best
}

fn flattening_trace_lower(z: &Tensor) -> f64 {
    let k = z.order();
    let mut best: f64 = 0.0;
    for a in 0..k {
        best = best.max(linalg::trace_norm(&z.unfold(a)));
    }
    for s in 1..k {
        best = best.max(linalg::trace_norm(&z.matricize(s)));
    }
    best
}

/// Upper bound on `π_k(ℓ₂)` from a recursive SVD: splitting off the first
/// mode writes `z = Σ σᵢ uᵢ ⊗ vᵢ` with unit `uᵢ`, and each `vᵢ` is bounded
/// recursively (exactly by its trace norm at order two).
fn pi2_recursive_upper(z: &Tensor) -> f64 {
    match z.order() {
        0 => z.data().first().map_or(0.0, |v| v.abs()),
        1 => z.norm(),
        2 => linalg::trace_norm(&z.matricize(1)),
        _ => {
            let svd = z.matricize(1).svd(false, true);
            let vt = svd.v_t.expect("requested");
            let rest = z.dims()[1..].to_vec();
            svd.singular_values
                .iter()
                .enumerate()
                .filter(|(_, &s)| s > 0.0)
                .map(|(i, &s)| {
                    let v = Tensor::new(rest.clone(), vt.row(i).iter().copied().collect()).expect("shape");
                    s * pi2_recursive_upper(&v)
                })
                .sum()
        }
    }
}

/// Upper bound on `π_k(ℓ₂)` by greedy rank-one peeling, closing the
/// residual with the cheaper of its recursive bound and entrywise `ℓ1` norm.
fn pi2_greedy_upper(z: &Tensor) -> f64 {
    let mut residual = z.clone();
    let mut total = 0.0;
    let scale = z.norm();
    for _ in 0..4 * z.dims().iter().product::<usize>().min(64) {
        let (s, us) = best_rank_one(&residual);
        if s <= 1e-14 * scale.max(1.0) {
            break;
        }
        let refs: Vec<&[f64]> = us.iter().map(Vec::as_slice).collect();
        let sign = residual.contract_vectors(&refs).expect("shape").signum();
        residual = residual.add_scaled(&Tensor::outer(&refs), -sign * s).expect("shape");
        total += s;
    }
    total + pi2_recursive_upper(&residual).min(residual.norm1())
}

/// Upper bound on `π_k(ℓ∞)` from the same recursive SVD, charging each term
/// `σᵢ ‖uᵢ‖∞` and closing with the entrywise `ℓ1` norm when that is cheaper.
fn piinf_recursive_upper(z: &Tensor) -> f64 {
    let direct = z.norm1();
    if z.order() <= 1 {
        return z.max_abs();
    }
    let svd = z.matricize(1).svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let rest = z.dims()[1..].to_vec();
    let split: f64 = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0.0)
        .map(|(i, &s)| {
            let v = Tensor::new(rest.clone(), vt.row(i).iter().copied().collect()).expect("shape");
            s * u.column(i).amax() * piinf_recursive_upper(&v)
        })
        .sum();
    direct.min(split)
}

/// Projective norm `π_k(X)` of `z ∈ X^{⊗k}`.
pub fn projective_norm(z: &Tensor, x: Space, k: usize) -> Result<NormValue> {
    check_tensor(z, x, k)?;
    if k == 1 {
        return Ok(NormValue::exact(x.norm(z.data())));
    }
    match x {
        Space::L1(_) => Ok(NormValue::exact(z.norm1())),
        Space::L2(_) if k == 2 => Ok(NormValue::exact(linalg::trace_norm(&z.matricize(1)))),
        Space::L2(_) => {
            let upper = pi2_recursive_upper(z).min(pi2_greedy_upper(z)).min(z.norm1());
            let eps_up = flattening_spectral_upper(z);
            let dual = if eps_up > 0.0 { z.norm_sq() / eps_up } else { 0.0 };
            let lower = flattening_trace_lower(z).max(dual);
            Ok(NormValue::bracket(upper, lower, upper))
        }
        Space::Linf(n) => {
            // Trace duality with w = sign(z) against the exact ε_k(ℓ1).
            let upper = piinf_recursive_upper(z);
            let w = Tensor::new(z.dims().to_vec(), z.data().iter().map(|v| v.signum()).collect())?;
            let lower = match eps_ell1(&w, n, k, NORM_BUDGET) {
                Ok(e) if e > 0.0 => upper / e,
                _ => z.max_abs(),
            };
            Ok(NormValue::bracket(upper, lower, upper))
        }
    }
}

fn check_map(p: &DMatrix<f64>, x: Space, y: Space) -> Result<()> {
    check_dim(y.dim(), p.nrows())?;
    check_dim(x.dim(), p.ncols())
}

fn max_over_signs(len: usize, rows: usize, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
    if len == 0 {
        return Ok(0.0);
    }
    let needed = (1u128 << len.min(127)).saturating_mul((len * rows.max(1)) as u128);
    if len > 40 || needed > NORM_BUDGET {
        return Err(Error::BudgetExceeded { needed, limit: NORM_BUDGET });
    }
    let mut best: f64 = 0.0;
    for mask in 0u64..(1u64 << (len - 1)) {
        best = best.max(f(&sign_vec(mask << 1, 0, len)));
    }
    Ok(best)
}

/// `‖P‖_{X→Y}` for `P : ℝⁿ → ℝᵐ` stored as an `m×n` matrix.
pub fn operator_norm(p: &DMatrix<f64>, x: Space, y: Space) -> Result<f64> {
    check_map(p, x, y)?;
    let col = |j: usize| -> Vec<f64> { p.column(j).iter().copied().collect() };
    let row = |i: usize| -> Vec<f64> { p.row(i).iter().copied().collect() };
    Ok(match (x, y) {
        (Space::L1(_), _) => (0..p.ncols()).map(|j| y.norm(&col(j))).fold(0.0, f64::max),
        (_, Space::Linf(_)) => (0..p.nrows()).map(|i| x.dual().norm(&row(i))).fold(0.0, f64::max),
        (Space::L2(_), Space::L2(_)) => linalg::spectral_norm(p),
        (Space::L2(_), Space::L1(_)) => max_over_signs(p.nrows(), p.ncols(), |s| {
            linalg::norm2((p.transpose() * DVector::from_column_slice(s)).as_slice())
        })?,
        (Space::Linf(_), Space::L2(_)) => max_over_signs(p.ncols(), p.nrows(), |s| {
            linalg::norm2((p * DVector::from_column_slice(s)).as_slice())
        })?,
        (Space::Linf(_), Space::L1(_)) => max_over_signs(p.ncols(), p.nrows(), |s| {
            linalg::norm1((p * DVector::from_column_slice(s)).as_slice())
        })?,
    })
}

/// `‖P‖_{N(X→Y)}`, exact for `ℓ₂→ℓ₂`, `ℓ1→Y` and `X→ℓ∞`; bracketed otherwise
/// between trace duality with test maps and the best of three explicit
/// decompositions.
pub fn nuclear_norm(p: &DMatrix<f64>, x: Space, y: Space) -> Result<NormValue> {
    check_map(p, x, y)?;
    let cols: Vec<Vec<f64>> = (0..p.ncols()).map(|j| p.column(j).iter().copied().collect()).collect();
    let rows: Vec<Vec<f64>> = (0..p.nrows()).map(|i| p.row(i).iter().copied().collect()).collect();
    let xs = x.dual();
    match (x, y) {
        (Space::L2(_), Space::L2(_)) => return Ok(NormValue::exact(linalg::trace_norm(p))),
        (Space::L1(_), _) => return Ok(NormValue::exact(cols.iter().map(|c| y.norm(c)).sum())),
        (_, Space::Linf(_)) => return Ok(NormValue::exact(rows.iter().map(|r| xs.norm(r)).sum())),
        _ => {}
    }
    let by_cols: f64 = cols.iter().map(|c| y.norm(c)).sum();
    let by_rows: f64 = rows.iter().map(|r| xs.norm(r)).sum();
    let svd = p.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let by_svd: f64 = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let ui: Vec<f64> = u.column(i).iter().copied().collect();
            let vi: Vec<f64> = vt.row(i).iter().copied().collect();
            s * y.norm(&ui) * xs.norm(&vi)
        })
        .sum();
    let upper = by_cols.min(by_rows).min(by_svd);

    // ‖P‖_N = sup{Tr(QP) : ‖Q‖_{Y→X} ≤ 1}.
    let mut tests = vec![p.transpose(), p.transpose().map(f64::signum), vt.transpose() * u.transpose()];
    let mut rng = ChaCha8Rng::seed_from_u64(SEARCH_SEED);
    for _ in 0..32 {
        tests.push(linalg::gaussian_matrix(&mut rng, p.ncols(), p.nrows()));
    }
    let mut lower: f64 = 0.0;
    for q in &tests {
        let qn = operator_norm(q, y, x)?;
        if qn > 0.0 {
            lower = lower.max((q * p).trace().abs() / qn);
        }
    }
    Ok(NormValue::bracket(upper, lower, upper))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauBound {
    pub k: usize,
    pub lower: f64,
    pub upper: f64,
    pub witnesses: Vec<String>,
}

/// Bounds on `τ_k(T)`: the lower bound is the operator norm, improved for
/// `X = Y = ℓ₂` by the Hurwitz witness `z_{n,k}` (which has `ε_k(z) ≤ 1`, so
/// `τ_k(T)^k ≥ |⟨z, T^{⊗k} z⟩|`); the upper bound is the nuclear norm.
pub fn tau_bounds(t: &DMatrix<f64>, x: Space, y: Space, k: usize) -> Result<TauBound> {
    if k == 0 {
        return Err(Error::OutOfRange("k must be at least 1".into()));
    }
    let op = operator_norm(t, x, y)?;
    let mut lower = op;
    let mut witnesses = vec![format!("operator norm {op}")];
    if let (Space::L2(n), Space::L2(m)) = (x, y) {
        if n == m && k >= 2 && (1..=hurwitz::MAX_N).contains(&n) {
            let budget = pow_u128(n, k).saturating_mul((n * k) as u128);
            if budget <= NORM_BUDGET {
                let w = hurwitz::witness_tensor(n, k)?;
                let image = w.coords.apply_all(t)?;
                let v = image.inner(&w.coords)?.abs().powf(1.0 / k as f64);
                witnesses.push(format!(
                    "witness z_{{{n},{k}}} from (i0,j0)=({},{}), ‖z‖²={}, bound {v}",
                    w.source.0, w.source.1, w.sq_norm
                ));
                lower = lower.max(v);
            }
        }
    }
    let nn = nuclear_norm(t, x, y)?;
    witnesses.push(format!("nuclear norm ≤ {}", nn.upper));
    Ok(TauBound { k, lower, upper: nn.upper, witnesses })
}

/// Orthogonal projection onto `X_k`: keeps entries whose indices are all
/// zero or all nonzero.
pub fn project_xk(z: &Tensor) -> Tensor {
    let mut out = z.clone();
    for flat in 0..z.len() {
        let idx = z.multi_index(flat);
        let zeros = idx.iter().filter(|&&i| i == 0).count();
        if zeros != 0 && zeros != idx.len() {
            out.data_mut()[flat] = 0.0;
        }
    }
    out
}

/// The same projection as the product of `S_{i,j} = ½(id⊗id + A⊗A)` over
/// ordered pairs `i ≠ j`, with `A = diag(1, −1, …, −1)`.
pub fn project_xk_by_s(z: &Tensor) -> Result<Tensor> {
    let k = z.order();
    let mut t = z.clone();
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let a_i = reflection(z.dims()[i]);
            let a_j = reflection(z.dims()[j]);
            let flipped = t.apply_axis(&a_i, i)?.apply_axis(&a_j, j)?;
            t = t.add_scaled(&flipped, 1.0)?.scale(0.5);
        }
    }
    Ok(t)
}

fn reflection(d: usize) -> DMatrix<f64> {
    let mut a = -DMatrix::identity(d, d);
    if d > 0 {
        a[(0, 0)] = 1.0;
    }
    a
}

/// Moment matrix `M(Z)_{ij} = Tr[Z(σᵢ⊗σⱼ)]` of a two-qubit operator, with
/// `σ₀ = I` and `σ₁, σ₂, σ₃ = σx, σy, σz`.
pub fn moment_matrix(z: &CMat) -> Result<DMatrix<f64>> {
    check_dim(4, z.nrows())?;
    let [sx, sy, sz] = linalg::paulis();
    let s = [linalg::cidentity(2), sx, sy, sz];
    Ok(DMatrix::from_fn(4, 4, |i, j| (z * s[i].kronecker(&s[j])).trace().re))
}

/// Inverse of [`moment_matrix`].
pub fn from_moment(m: &DMatrix<f64>) -> CMat {
    let [sx, sy, sz] = linalg::paulis();
    let s = [linalg::cidentity(2), sx, sy, sz];
    let mut z = CMat::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            z += s[i].kronecker(&s[j]).scale(m[(i, j)] / 4.0);
        }
    }
    z
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductTerm {
    /// Moment-space vectors `u, v ∈ L₃`; the term contributes `u vᵀ`.
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HatDecomposition {
    pub s_terms: Vec<ProductTerm>,
    #[serde(with = "crate::serde_util::matrix")]
    pub w_moment: DMatrix<f64>,
    pub residual: f64,
}

impl HatDecomposition {
    /// Re-checks every constraint of the decomposition against `Z`'s moments.
    pub fn verify(&self, moment: &DMatrix<f64>, tol: f64) -> bool {
        let mut s = DMatrix::zeros(4, 4);
        for t in &self.s_terms {
            let lorentz = |v: &[f64]| v[0] >= linalg::norm2(&v[1..]) - tol * linalg::norm2(v);
            if t.left.len() != 4 || t.right.len() != 4 || !lorentz(&t.left) || !lorentz(&t.right) {
                return false;
            }
            s += DVector::from_column_slice(&t.left) * DVector::from_column_slice(&t.right).transpose();
        }
        let w = &self.w_moment;
        let mixed_zero = (1..4).all(|i| w[(0, i)].abs() <= tol && w[(i, 0)].abs() <= tol);
        let w3 = w.view((1, 1), (3, 3)).into_owned();
        let scale = moment.amax().max(1.0);
        let recon = linalg::max_diff(&(s + w), moment) <= tol * scale;
        mixed_zero && recon && w[(0, 0)] >= linalg::spectral_norm(&w3) - tol * scale
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HatCheckReport {
    pub in_check: bool,
    /// True when `in_check` rests on the block-positivity search rather than
    /// a violated inequality or a violating product vector.
    pub check_heuristic: bool,
    #[serde(with = "crate::serde_util::matrix")]
    pub moment: DMatrix<f64>,
    pub trace: f64,
    pub m3_trace_norm: f64,
    pub block_min: f64,
    /// `Some` when a verified `S + W` decomposition was found; `None` means
    /// unknown, never "not in hat".
    pub in_hat_evidence: Option<HatDecomposition>,
}

/// Check and hat memberships for a two-qubit element given in `Hermitian(4)`
/// coordinates.
pub fn hat_check_membership_qubit(z: &JordanElement, tol: f64) -> Result<HatCheckReport> {
    if z.algebra != Algebra::Hermitian(4) {
        return Err(Error::AlgebraMismatch { left: z.algebra.to_string(), right: "psd:4".into() });
    }
    let zm = z.to_matrix()?;
    let moment = moment_matrix(&zm)?;
    let m3 = moment.view((1, 1), (3, 3)).into_owned();
    let trace = moment[(0, 0)];
    let m3_trace_norm = linalg::trace_norm(&m3);
    let bp = psdmaps::block_positivity(&zm, 2, 2, tol)?;
    let scale = moment.amax().max(1.0);
    let norm_ok = trace >= m3_trace_norm - tol * scale;
    let in_check = norm_ok && bp.block_positive;
    let check_heuristic = in_check;
    let in_hat_evidence = hat_search(&moment, tol);
    Ok(HatCheckReport {
        in_check,
        check_heuristic,
        moment,
        trace,
        m3_trace_norm,
        block_min: bp.min_value,
        in_hat_evidence,
    })
}

fn hat_search(moment: &DMatrix<f64>, tol: f64) -> Option<HatDecomposition> {
    let scale = moment.amax().max(1.0);
    let finish = |terms: Vec<ProductTerm>| -> Option<HatDecomposition> {
        let mut s = DMatrix::zeros(4, 4);
        for t in &terms {
            s += DVector::from_column_slice(&t.left) * DVector::from_column_slice(&t.right).transpose();
        }
        let mut w = moment - s;
        for i in 1..4 {
            if w[(0, i)].abs() <= tol * scale {
                w[(0, i)] = 0.0;
            }
            if w[(i, 0)].abs() <= tol * scale {
                w[(i, 0)] = 0.0;
            }
        }
        let d = HatDecomposition { s_terms: terms, w_moment: w, residual: 0.0 };
        d.verify(moment, tol).then_some(d)
    };

    // Rank-one product: Z itself is in the minimal product.
    let svd = moment.clone().svd(true, true);
    let (u, vt) = (svd.u.as_ref().expect("requested"), svd.v_t.as_ref().expect("requested"));
    let (top, s0) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    if s0 > 0.0 {
        let mut a: Vec<f64> = u.column(top).iter().map(|v| v * s0.sqrt()).collect();
        let mut b: Vec<f64> = vt.row(top).iter().map(|v| v * s0.sqrt()).collect();
        if a[0] < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
            b.iter_mut().for_each(|v| *v = -*v);
        }
        if let Some(d) = finish(vec![ProductTerm { left: a, right: b }]) {
            return Some(d);
        }
    }

    // Absorb the mixed row and column into (‖c‖, c)⊗e₀ + e₀⊗(‖r‖, r).
    let c: Vec<f64> = (1..4).map(|i| moment[(i, 0)]).collect();
    let r: Vec<f64> = (1..4).map(|j| moment[(0, j)]).collect();
    let e0 = vec![1.0, 0.0, 0.0, 0.0];
    let mut terms = Vec::new();
    if linalg::norm2(&c) > 0.0 {
        terms.push(ProductTerm { left: [vec![linalg::norm2(&c)], c].concat(), right: e0.clone() });
    }
    if linalg::norm2(&r) > 0.0 {
        terms.push(ProductTerm { left: e0, right: [vec![linalg::norm2(&r)], r].concat() });
    }
    finish(terms)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferViolation {
    pub sample: usize,
    pub pi_lower: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub alpha: f64,
    pub k: usize,
    pub tau_upper: f64,
    /// Whether `τ_k`-upper `≤ α`, i.e. whether the implication is in force.
    pub applicable: bool,
    pub samples: usize,
    /// Largest observed `π_k(P^{⊗k}z) / (αᵏ z₀)` (upper estimate of `π`).
    pub max_ratio: f64,
    pub violations: Vec<TransferViolation>,
}

/// Samples `w = z₀e₀^{⊗k} + z` with `z₀ = ε_k(z)` (upper estimate) and checks
/// `π_k(P^{⊗k}z) ≤ αᵏz₀` whenever the `τ_k` upper bound is at most `α`.
/// A violation is only reported from a certified lower bound on `π`.
pub fn transfer_check<R: Rng + ?Sized>(
    alpha: f64,
    p: &DMatrix<f64>,
    x: Space,
    y: Space,
    k: usize,
    samples: usize,
    rng: &mut R,
) -> Result<TransferReport> {
    check_map(p, x, y)?;
    let tau = tau_bounds(p, x, y, k)?;
    let applicable = tau.upper <= alpha * (1.0 + 1e-12);
    let n = x.dim();
    let mut candidates: Vec<Tensor> = Vec::new();
    if matches!(x, Space::L2(_)) && (1..=hurwitz::MAX_N).contains(&n) {
        if let Ok(w) = hurwitz::witness_tensor(n, k) {
            candidates.push(w.coords);
        }
    }
    for _ in 0..samples {
        candidates.push(Tensor::new(vec![n; k], linalg::gaussian_vec(rng, pow_u128(n, k) as usize))?);
    }
    let bound_scale = alpha.powi(k as i32);
    let mut max_ratio: f64 = 0.0;
    let mut violations = Vec::new();
    for (i, z) in candidates.iter().enumerate() {
        let z0 = injective_norm(z, x, k)?.upper;
        let image = z.apply_all(p)?;
        let pi = projective_norm(&image, y, k)?;
        let bound = bound_scale * z0;
        if bound > 0.0 {
            max_ratio = max_ratio.max(pi.upper / bound);
        }
        if applicable && pi.lower > bound * (1.0 + 1e-9) + 1e-12 {
            violations.push(TransferViolation { sample: i, pi_lower: pi.lower, bound });
        }
    }
    Ok(TransferReport {
        alpha,
        k,
        tau_upper: tau.upper,
        applicable,
        samples: candidates.len(),
        max_ratio,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(dims: &[usize], data: &[f64]) -> Tensor {
        Tensor::new(dims.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn injective_examples() {
        let id = t(&[2, 2], &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(injective_norm(&id, Space::L2(2), 2).unwrap(), NormValue::exact(1.0));
        let z = t(&[2, 2], &[1.0, 0.0, 0.0, -1.0]);
        let v = injective_norm(&z, Space::L1(2), 2).unwrap();
        assert!(v.exact);
        let mut oracle: f64 = 0.0;
        for s in [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]] {
            for u in [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]] {
                oracle = oracle.max(z.contract_vectors(&[&s, &u]).unwrap().abs());
            }
        }
        assert_eq!(v.value, oracle);
        assert_eq!(v.value, 2.0);
        for space in [Space::L1(3), Space::L2(3), Space::Linf(3)] {
            let a = [1.0, -2.0, 0.5];
            let b = [0.0, 3.0, -1.0];
            let prod = Tensor::outer(&[&a, &b]);
            let e = injective_norm(&prod, space, 2).unwrap();
            assert!((e.value - space.norm(&a) * space.norm(&b)).abs() < 1e-12, "{space}");
            let p = projective_norm(&prod, space, 2).unwrap();
            assert!((p.upper - space.norm(&a) * space.norm(&b)).abs() < 1e-12, "{space}");
        }
    }

    #[test]
    fn projective_examples() {
        let id = t(&[2, 2], &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(projective_norm(&id, Space::L2(2), 2).unwrap().value, 2.0);
        let z = t(&[2, 2], &[1.0, -1.0, 0.5, 0.0]);
        assert_eq!(projective_norm(&z, Space::L1(2), 2).unwrap().value, 2.5);
    }

    #[test]
    fn order_three_bounds_bracket_product() {
        let a = [0.6, 0.8];
        let prod = Tensor::outer(&[&a, &a, &a]);
        let e = injective_norm(&prod, Space::L2(2), 3).unwrap();
        let p = projective_norm(&prod, Space::L2(2), 3).unwrap();
        assert!((e.lower - 1.0).abs() < 1e-12 && (e.upper - 1.0).abs() < 1e-12);
        assert!((p.lower - 1.0).abs() < 1e-12 && (p.upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn witness_has_unit_injective_norm() {
        let w = hurwitz::witness_tensor(2, 3).unwrap();
        let e = injective_norm(&w.coords, Space::L2(2), 3).unwrap();
        assert!(e.lower <= 1.0 + 1e-9);
        assert!(e.lower >= 1.0 - 1e-9);
    }

    #[test]
    fn operator_norm_pairs() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 0.5]);
        assert_eq!(operator_norm(&p, Space::L1(2), Space::L1(2)).unwrap(), 4.0);
        assert_eq!(operator_norm(&p, Space::Linf(2), Space::Linf(2)).unwrap(), 3.5);
        assert_eq!(operator_norm(&p, Space::Linf(2), Space::L1(2)).unwrap(), 5.5);
        let s = operator_norm(&p, Space::Linf(2), Space::L2(2)).unwrap();
        let expect = [[1.0, 1.0], [1.0, -1.0]]
            .iter()
            .map(|s| linalg::norm2((&p * DVector::from_column_slice(s)).as_slice()))
            .fold(0.0, f64::max);
        assert_eq!(s, expect);
        // ‖P‖_{2→1} = ‖Pᵀ‖_{∞→2}
        let a = operator_norm(&p, Space::L2(2), Space::L1(2)).unwrap();
        let b = operator_norm(&p.transpose(), Space::Linf(2), Space::L2(2)).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn nuclear_examples() {
        assert_eq!(nuclear_norm(&DMatrix::identity(3, 3), Space::L2(3), Space::L2(3)).unwrap().value, 3.0);
        assert_eq!(nuclear_norm(&DMatrix::identity(4, 4), Space::L1(4), Space::L1(4)).unwrap().value, 4.0);
        assert_eq!(nuclear_norm(&DMatrix::zeros(2, 2), Space::Linf(2), Space::L1(2)).unwrap().value, 0.0);
        let v = nuclear_norm(&DMatrix::identity(2, 2), Space::Linf(2), Space::L1(2)).unwrap();
        assert!(v.lower <= v.upper);
    }

    #[test]
    fn tau_identity_l2() {
        let id = DMatrix::identity(2, 2);
        let b = tau_bounds(&id, Space::L2(2), Space::L2(2), 8).unwrap();
        assert!(b.lower >= 1.834);
        assert_eq!(b.upper, 2.0);
        let b1 = tau_bounds(&id, Space::L2(2), Space::L2(2), 1).unwrap();
        assert_eq!(b1.lower, 1.0);
    }

    #[test]
    fn projection_examples() {
        let e0 = [1.0, 0.0, 0.0];
        let p = Tensor::power(&e0, 3);
        assert_eq!(project_xk(&p), p);
        let mixed = Tensor::outer(&[&e0, &[0.0, 1.0, 2.0]]);
        assert_eq!(project_xk(&mixed).norm(), 0.0);
        assert_eq!(project_xk_by_s(&mixed).unwrap().norm(), 0.0);
    }

    #[test]
    fn qubit_check_examples() {
        let mut omega = CMat::zeros(4, 4);
        for &(i, j) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
            omega[(i, j)] = num_complex::Complex64::new(1.0, 0.0);
        }
        let z = JordanElement::from_matrix(&omega).unwrap();
        let r = hat_check_membership_qubit(&z, 1e-9).unwrap();
        assert!((r.trace - 2.0).abs() < 1e-12);
        assert!((r.m3_trace_norm - 6.0).abs() < 1e-12);
        assert!(!r.in_check);

        let id = JordanElement::from_matrix(&linalg::cidentity(4)).unwrap();
        let r = hat_check_membership_qubit(&id, 1e-9).unwrap();
        assert!(r.in_check);
        assert_eq!(r.m3_trace_norm, 0.0);
        assert!(r.in_hat_evidence.unwrap().verify(&r.moment, 1e-9));
    }

    #[test]
    fn moment_round_trip() {
        let m = DMatrix::from_fn(4, 4, |i, j| (i * 4 + j) as f64 - 7.0);
        assert!(linalg::max_diff(&moment_matrix(&from_moment(&m)).unwrap(), &m) < 1e-12);
    }
}
