//! Machine-checkable evidence objects. Each certificate carries enough data
//! for [`Certificate::verify`] to recompute its claim from scratch.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cones::{self, ConeHandle, LinearMapDense};
use crate::error::{check_dim, Error, Result};
use crate::norms::{self, Space};
use crate::psdmaps::{self, HermMap};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    NotAnnihilating,
    MembershipMin,
    MembershipMaxViolation,
    EbViolation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Slack on the certified strict inequality.
    pub strict: f64,
    /// Slack when re-checking memberships and reconstructions.
    pub membership: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    /// `⟨w, P^{⊗k}(x)⟩ < 0` with `tensors = [x, w]`.
    Map { map: LinearMapDense },
    /// `x₀ + Σ sᵢxᵢ ∉ C` for the recorded sign vector.
    MaxViolation { cone: ConeHandle, xs: Vec<Vec<f64>>, sign: Vec<i8> },
    /// `tensors[0] = Σ aⱼ ⊗ bⱼ` with `aⱼ ∈ left`, `bⱼ ∈ right`.
    MinDecomposition { left: ConeHandle, right: ConeHandle, terms: Vec<(Vec<f64>, Vec<f64>)> },
    /// `⟨v|M|v⟩ < 0` for `M` the Choi matrix (or its partial transpose) of `map`.
    EbViolation {
        map: HermMap,
        test: String,
        #[serde(with = "crate::serde_util::cvector")]
        vector: DVector<Complex64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub k: usize,
    #[serde(with = "nested_list")]
    pub tensors: Vec<Tensor>,
    pub pairing_value: f64,
    pub tolerances: Tolerances,
    pub seed: Option<u64>,
    pub payload: Payload,
    /// Claims that could not be decided and were taken as given.
    pub assumptions: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub valid: bool,
    pub detail: String,
}

impl CertificateCheck {
    fn ok(detail: impl Into<String>) -> Self {
        Self { valid: true, detail: detail.into() }
    }

    fn fail(detail: impl Into<String>) -> Self {
        Self { valid: false, detail: detail.into() }
    }
}

mod nested_list {
    use super::Tensor;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::Value;

    pub fn serialize<S: Serializer>(ts: &[Tensor], s: S) -> Result<S::Ok, S::Error> {
        ts.iter().map(Tensor::to_nested).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Tensor>, D::Error> {
        let vs = Vec::<Value>::deserialize(d)?;
        vs.iter().map(|v| Tensor::from_nested(v).map_err(serde::de::Error::custom)).collect()
    }
}

/// Outcome of checking a membership claim.
#[derive(Clone, Debug, PartialEq)]
pub enum Claim {
    Verified,
    Refuted(String),
    Assumed(String),
}

/// Checks `x ∈ C^{⊗max k}` where a sound routine exists:
/// simplex cones (max = nonnegative tensors), `k = 1`, a second factor
/// `C_{ℓ1}` at `k = 2` (exact sign enumeration), and Lorentz tensors of the
/// form `c·e₀^{⊗k} + z` with `z` in the pure block and `ε_k(z) ≤ c`
/// (sufficient only).
pub fn check_max_claim(cone: &ConeHandle, x: &Tensor, k: usize, tol: f64) -> Result<Claim> {
    check_dim(k, x.order())?;
    for &d in x.dims() {
        check_dim(cone.ambient_dim(), d)?;
    }
    let scale = tol * x.norm().max(1.0);
    if k == 1 {
        return Ok(if cone.contains(x.data(), tol)? {
            Claim::Verified
        } else {
            Claim::Refuted("vector outside the cone".into())
        });
    }
    match cone {
        ConeHandle::Simplex(_) => {
            return Ok(if x.data().iter().all(|&v| v >= -scale) {
                Claim::Verified
            } else {
                Claim::Refuted("negative entry in a classical tensor".into())
            });
        }
        ConeHandle::Ell1(m) if k == 2 && *m <= cones::MAX_SIGN_K => {
            let mat = x.matricize(1);
            let xs: Vec<Vec<f64>> = (0..mat.ncols()).map(|j| mat.column(j).iter().copied().collect()).collect();
            let r = cones::max_membership_ell1_factor(cone, &xs, tol)?;
            return Ok(match r.violating_sign {
                None => Claim::Verified,
                Some(s) => Claim::Refuted(format!("violated at sign vector {s:?}")),
            });
        }
        ConeHandle::Lorentz(n) => {
            let projected = norms::project_xk(x);
            if projected.max_abs_diff(x)? <= scale {
                let c = x.data()[0];
                let mut z = x.clone();
                z.data_mut()[0] = 0.0;
                let inner: Vec<usize> = vec![*n; k];
                let mut pure = Tensor::zeros(&inner);
                for flat in 0..pure.len() {
                    let idx: Vec<usize> = pure.multi_index(flat).iter().map(|i| i + 1).collect();
                    pure.data_mut()[flat] = z.get(&idx);
                }
                if *n == 0 || norms::injective_norm(&pure, Space::L2(*n), k)?.upper <= c + scale {
                    return Ok(Claim::Verified);
                }
            }
        }
        _ => {}
    }
    Ok(Claim::Assumed(format!("membership in {cone:?}^(max {k}) not decided")))
}

/// `⟨w, P^{⊗k}(x)⟩`.
pub fn pairing(p: &LinearMapDense, k: usize, x: &Tensor, w: &Tensor) -> Result<f64> {
    check_dim(k, x.order())?;
    check_dim(k, w.order())?;
    p.apply_tensor(x)?.inner(w)
}

/// Issues a non-annihilation certificate when `⟨w, P^{⊗k}(x)⟩ < −tol`.
/// Refuted membership claims are errors; undecided ones become assumptions.
pub fn certify_not_annihilating(
    p: &LinearMapDense,
    k: usize,
    x: &Tensor,
    w: &Tensor,
    tol: f64,
) -> Result<Option<Certificate>> {
    let value = pairing(p, k, x, w)?;
    let mut assumptions = Vec::new();
    for (name, cone, t) in [("x", p.domain, x), ("w", p.codomain.dual(), w)] {
        match check_max_claim(&cone, t, k, tol)? {
            Claim::Verified => {}
            Claim::Assumed(why) => assumptions.push(format!("{name}: {why}")),
            Claim::Refuted(why) => return Err(Error::Verification(format!("{name}: {why}"))),
        }
    }
    if value >= -tol {
        return Ok(None);
    }
    Ok(Some(Certificate {
        kind: CertificateKind::NotAnnihilating,
        k,
        tensors: vec![x.clone(), w.clone()],
        pairing_value: value,
        tolerances: Tolerances { strict: tol, membership: tol },
        seed: None,
        payload: Payload::Map { map: p.clone() },
        assumptions,
    }))
}

impl Certificate {
    pub fn max_violation(cone: ConeHandle, xs: Vec<Vec<f64>>, sign: Vec<i8>, tol: f64) -> Result<Self> {
        let point = signed_sum(&xs, &sign)?;
        let margin = cone.margin(&point)?;
        Ok(Self {
            kind: CertificateKind::MembershipMaxViolation,
            k: xs.len().saturating_sub(1),
            tensors: Vec::new(),
            pairing_value: margin,
            tolerances: Tolerances { strict: tol, membership: tol },
            seed: None,
            payload: Payload::MaxViolation { cone, xs, sign },
            assumptions: Vec::new(),
        })
    }

    /// Wraps an explicit decomposition of an order-two tensor.
    pub fn min_membership(
        left: ConeHandle,
        right: ConeHandle,
        target: Tensor,
        terms: Vec<(Vec<f64>, Vec<f64>)>,
        tol: f64,
    ) -> Result<Self> {
        let residual = decomposition_residual(&target, &terms)?;
        Ok(Self {
            kind: CertificateKind::MembershipMin,
            k: 2,
            tensors: vec![target],
            pairing_value: residual,
            tolerances: Tolerances { strict: tol, membership: tol },
            seed: None,
            payload: Payload::MinDecomposition { left, right, terms },
            assumptions: Vec::new(),
        })
    }

    pub fn eb_violation(map: &HermMap, test: &str, v: &DVector<Complex64>, tol: f64) -> Result<Self> {
        let value = psdmaps::eb_test_value(map, test, v)?;
        Ok(Self {
            kind: CertificateKind::EbViolation,
            k: 1,
            tensors: Vec::new(),
            pairing_value: value,
            tolerances: Tolerances { strict: tol, membership: tol },
            seed: None,
            payload: Payload::EbViolation { map: map.clone(), test: test.to_string(), vector: v.clone() },
            assumptions: Vec::new(),
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Recomputes the claim from the payload alone.
    pub fn verify(&self) -> CertificateCheck {
        match self.verify_inner() {
            Ok(c) => c,
            Err(e) => CertificateCheck::fail(e.to_string()),
        }
    }

    fn verify_inner(&self) -> Result<CertificateCheck> {
        let tol = self.tolerances;
        let close = |a: f64, b: f64| (a - b).abs() <= tol.membership.max(1e-12) * a.abs().max(b.abs()).max(1.0);
        match (&self.kind, &self.payload) {
            (CertificateKind::NotAnnihilating, Payload::Map { map }) => {
                let [x, w] = self.tensors.as_slice() else {
                    return Ok(CertificateCheck::fail("expected tensors [x, w]"));
                };
                let v = pairing(map, self.k, x, w)?;
                if !close(v, self.pairing_value) {
                    return Ok(CertificateCheck::fail(format!("pairing {v} != recorded {}", self.pairing_value)));
                }
                if v >= -tol.strict {
                    return Ok(CertificateCheck::fail(format!("pairing {v} is not negative")));
                }
                for (name, cone, t) in [("x", map.domain, x), ("w", map.codomain.dual(), w)] {
                    if let Claim::Refuted(why) = check_max_claim(&cone, t, self.k, tol.membership)? {
                        return Ok(CertificateCheck::fail(format!("{name}: {why}")));
                    }
                }
                Ok(CertificateCheck::ok(format!("pairing {v} < 0")))
            }
            (CertificateKind::MembershipMaxViolation, Payload::MaxViolation { cone, xs, sign }) => {
                let point = signed_sum(xs, sign)?;
                if cones::check_max_violation(cone, xs, sign, tol.membership)? {
                    Ok(CertificateCheck::ok(format!("margin {} < 0 at {point:?}", cone.margin(&point)?)))
                } else {
                    Ok(CertificateCheck::fail("signed sum lies in the cone"))
                }
            }
            (CertificateKind::MembershipMin, Payload::MinDecomposition { left, right, terms }) => {
                let [target] = self.tensors.as_slice() else {
                    return Ok(CertificateCheck::fail("expected one target tensor"));
                };
                for (i, (a, b)) in terms.iter().enumerate() {
                    if !left.contains(a, tol.membership)? || !right.contains(b, tol.membership)? {
                        return Ok(CertificateCheck::fail(format!("term {i} leaves its cone")));
                    }
                }
                let r = decomposition_residual(target, terms)?;
                if r > tol.membership * target.norm().max(1.0) {
                    return Ok(CertificateCheck::fail(format!("reconstruction residual {r:e}")));
                }
                Ok(CertificateCheck::ok(format!("{} product terms, residual {r:e}", terms.len())))
            }
            (CertificateKind::EbViolation, Payload::EbViolation { map, test, vector }) => {
                let v = psdmaps::eb_test_value(map, test, vector)?;
                if !close(v, self.pairing_value) {
                    return Ok(CertificateCheck::fail(format!("value {v} != recorded {}", self.pairing_value)));
                }
                if v >= -tol.strict {
                    return Ok(CertificateCheck::fail(format!("{test} value {v} is not negative")));
                }
                Ok(CertificateCheck::ok(format!("{test} fails with ⟨v|M|v⟩ = {v}")))
            }
            _ => Ok(CertificateCheck::fail("payload does not match kind")),
        }
    }
}

fn signed_sum(xs: &[Vec<f64>], sign: &[i8]) -> Result<Vec<f64>> {
    let x0 = xs.first().ok_or_else(|| Error::OutOfRange("empty vector list".into()))?;
    check_dim(xs.len() - 1, sign.len())?;
    let mut p = x0.clone();
    for (x, &s) in xs[1..].iter().zip(sign) {
        check_dim(p.len(), x.len())?;
        p.iter_mut().zip(x).for_each(|(a, b)| *a += f64::from(s) * b);
    }
    Ok(p)
}

fn decomposition_residual(target: &Tensor, terms: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
    check_dim(2, target.order())?;
    let (r, c) = (target.dims()[0], target.dims()[1]);
    let mut sum = DMatrix::zeros(r, c);
    for (a, b) in terms {
        check_dim(r, a.len())?;
        check_dim(c, b.len())?;
        sum += DVector::from_column_slice(a) * DVector::from_column_slice(b).transpose();
    }
    Ok((sum - target.matricize(1)).amax())
}
