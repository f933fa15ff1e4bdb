//! Acceptance battery.
//!
//! Each criterion runs at its pinned tolerance and reports a single outcome.
//! Quick mode shrinks sample counts for smoke runs; tolerances never change.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certificate;
use crate::compalg::{self, AlgebraKind, CompositionAlgebra, ProtocolCone};
use crate::cones::{self, ConeHandle, IsotropicMap, LinearMapDense};
use crate::error::Result;
use crate::hurwitz;
use crate::jordan::{self, Algebra, JordanElement};
use crate::linalg;
use crate::norms::{self, Space};
use crate::psdmaps;
use crate::sinkhorn;
use crate::tensor::Tensor;

pub const CRITERIA: usize = 14;
pub const DEFAULT_SEED: u64 = 0x00c0_ffee;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub quick: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED, quick: false }
    }
}

impl SuiteConfig {
    fn rng(&self, id: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id as u64);
        rng
    }

    fn count(&self, full: usize) -> usize {
        if self.quick {
            (full / 10).max(1)
        } else {
            full
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{status}] {:>2} {} ({:.2}s): {}", self.id, self.name, self.seconds, self.detail)
    }
}

pub fn criterion_name(id: usize) -> &'static str {
    match id {
        1 => "composition law",
        2 => "multiplication tensor",
        3 => "protocol thresholds",
        4 => "twirl formula",
        5 => "witness tensors",
        6 => "non-annihilation certificate",
        7 => "tau lower bounds",
        8 => "isotropic and central EB",
        9 => "Lorentz factorizations",
        10 => "Sinkhorn scaling",
        11 => "l1-breaking decomposition",
        12 => "projection onto X_k",
        13 => "Jordan identities",
        14 => "I_sqrt2 on l1^2 experiment",
        _ => "unknown",
    }
}

/// Wall-clock limit in seconds, where one applies.
fn runtime_limit(id: usize) -> Option<f64> {
    match id {
        1 => Some(1.0),
        5 => Some(60.0),
        10 => Some(30.0),
        _ => None,
    }
}

pub fn run_suite(cfg: &SuiteConfig) -> Vec<CriterionOutcome> {
    (1..=CRITERIA).map(|id| run_criterion(id, cfg)).collect()
}

pub fn run_criterion(id: usize, cfg: &SuiteConfig) -> CriterionOutcome {
    let start = Instant::now();
    let result = match id {
        1 => composition_law(cfg),
        2 => multiplication_tensor(),
        3 => protocol_thresholds(cfg),
        4 => twirl_formula(cfg),
        5 => witness_tensors(cfg),
        6 => not_annihilating(),
        7 => tau_lower_bounds(),
        8 => isotropic_central(cfg),
        9 => factorizations(),
        10 => sinkhorn_scaling(cfg),
        11 => ell1_breaking(cfg),
        12 => projections(cfg),
        13 => jordan_identities(cfg),
        14 => isqrt2_experiment(cfg),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    if let Some(limit) = runtime_limit(id) {
        if !cfg.quick && seconds >= limit {
            passed = false;
            detail.push_str(&format!("; runtime {seconds:.2}s exceeds {limit}s"));
        }
    }
    CriterionOutcome { id, name: criterion_name(id).to_string(), passed, detail, seconds }
}

type Check = Result<(bool, String)>;

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

const ALL_ALGEBRAS: [AlgebraKind; 5] = [AlgebraKind::R, AlgebraKind::C, AlgebraKind::Csplit, AlgebraKind::H, AlgebraKind::O];
const DIVISION: [AlgebraKind; 4] = [AlgebraKind::R, AlgebraKind::C, AlgebraKind::H, AlgebraKind::O];

fn composition_law(cfg: &SuiteConfig) -> Check {
    let mut rng = cfg.rng(1);
    let mut worst: f64 = 0.0;
    for kind in ALL_ALGEBRAS {
        let a = CompositionAlgebra::new(kind);
        for _ in 0..1000 {
            let x = uniform_vec(&mut rng, a.dim);
            let y = uniform_vec(&mut rng, a.dim);
            let xy = a.multiply(&x, &y)?;
            worst = worst.max((a.q(&xy) - a.q(&x) * a.q(&y)).abs());
        }
    }
    Ok((worst <= 1e-12, format!("max |q(xy) - q(x)q(y)| = {worst:.3e} over 1000 pairs per algebra")))
}

fn multiplication_tensor() -> Check {
    let mut bad = Vec::new();
    for kind in DIVISION {
        let a = CompositionAlgebra::new(kind);
        let m = a.mult_matrix();
        let gram = &m * m.transpose();
        if gram != DMatrix::identity(a.dim, a.dim) * a.dim as f64 {
            bad.push(kind.to_string());
        }
    }
    Ok((bad.is_empty(), if bad.is_empty() { "m m* = dim id exactly for R, C, H, O".into() } else { format!("failed for {bad:?}") }))
}

fn protocol_thresholds(cfg: &SuiteConfig) -> Check {
    let mut rng = cfg.rng(3);
    let mut ok = true;
    let mut values = Vec::new();
    let mut worst_step: f64 = 0.0;
    for first in [AlgebraKind::R, AlgebraKind::Csplit] {
        for second in DIVISION {
            let p = ProtocolCone::new(first, second)?;
            let n = p.n() as f64;
            let expected = if first == AlgebraKind::R { 1.0 / n } else { 1.0 / (n + 1.0) };
            let t = compalg::protocol_threshold(&p, 1e-12)?;
            ok &= (t - expected).abs() <= 1e-9;
            values.push(format!("{first}/{second}: {t:.10}"));
            for _ in 0..20 {
                let alpha = rng.random_range(0.1..2.0);
                let beta = rng.random_range(-1.0..1.0) * alpha;
                let closed = p.step(alpha, beta);
                let twirled = p.step_by_matrix(alpha, beta)?;
                worst_step = worst_step
                    .max((closed.alpha_prime - twirled.alpha_prime).abs())
                    .max((closed.beta_prime - twirled.beta_prime).abs());
            }
        }
    }
    ok &= worst_step <= 1e-10;
    Ok((ok, format!("thresholds [{}]; closed form vs twirled matrix max diff {worst_step:.3e}", values.join(", "))))
}

fn twirl_formula(cfg: &SuiteConfig) -> Check {
    let mut rng = cfg.rng(4);
    // The Monte-Carlo tolerance is statistical, so quick mode keeps the count.
    let samples = 10_000;
    let mut worst_mc: f64 = 0.0;
    let mut worst_formula: f64 = 0.0;
    for n in [2, 3, 5] {
        for _ in 0..10 {
            let l = DMatrix::from_fn(n + 1, n + 1, |_, _| rng.random_range(-1.0..1.0));
            let iso = cones::twirl(&l)?;
            let beta = (1..=n).map(|i| l[(i, i)]).sum::<f64>() / n as f64;
            worst_formula = worst_formula.max((iso.alpha - l[(0, 0)]).abs()).max((iso.beta - beta).abs());
            let mc = cones::twirl_monte_carlo(&l, samples, &mut rng);
            worst_mc = worst_mc.max(linalg::max_diff(&mc, &iso.matrix()));
        }
    }
    Ok((
        worst_mc <= 5e-2 && worst_formula == 0.0,
        format!("Monte-Carlo ({samples} rotations) max entry diff {worst_mc:.4}; formula diff {worst_formula:e}"),
    ))
}

fn witness_tensors(cfg: &SuiteConfig) -> Check {
    let mut rng = cfg.rng(5);
    let samples = cfg.count(100_000);
    let mut cases: Vec<(usize, usize)> = Vec::new();
    for n in [2, 3, 4] {
        for k in 2..=5 {
            cases.push((n, k));
        }
    }
    cases.extend([(8, 2), (8, 3)]);
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for (n, k) in cases {
        let w = hurwitz::witness_tensor(n, k)?;
        let nk = (n as u128).pow(k as u32);
        let big_n = hurwitz::N_of(n)?;
        ok &= w.total_sq_norm == big_n as u128 * nk;
        ok &= w.sq_norm * big_n as f64 >= nk as f64;
        let v = w.sampled_injective(samples, &mut rng)?;
        worst = worst.max(v);
        ok &= v <= 1.0 + 1e-9;
        if !ok && notes.is_empty() {
            notes.push(format!("first failure at (n,k)=({n},{k})"));
        }
    }
    notes.push(format!("max sampled |<x1..xk, z>| = {worst:.6} over {samples} samples per case"));
    Ok((ok, notes.join("; ")))
}

fn not_annihilating() -> Check {
    let pair = hurwitz::lorentz_witness_pair(2, 2)?;
    let id = LinearMapDense::identity(ConeHandle::Lorentz(2));
    let cert = certificate::certify_not_annihilating(&id, 2, &pair.z_plus, &pair.z_minus, 1e-12)?;
    match cert {
        Some(c) => {
            let check = c.verify();
            Ok((c.pairing_value == -1.0 && check.valid, format!("pairing {} ; checker: {}", c.pairing_value, check.detail)))
        }
        None => Ok((false, "no certificate issued".into())),
    }
}

fn tau_lower_bounds() -> Check {
    let id = DMatrix::identity(2, 2);
    let mut prev = 0.0;
    let mut ok = true;
    let mut lowers = Vec::new();
    for k in 1..=8 {
        let t = norms::tau_bounds(&id, Space::L2(2), Space::L2(2), k)?;
        ok &= t.lower >= prev - 1e-15 && (t.upper - 2.0).abs() <= 1e-12;
        prev = t.lower;
        lowers.push(format!("{:.4}", t.lower));
    }
    ok &= prev >= 1.834;
    Ok((ok, format!("lower(k=1..8) = [{}], upper = 2", lowers.join(", "))))
}

fn isotropic_central(cfg: &SuiteConfig) -> Check {
    let mut rng = cfg.rng(8);
    let mut mismatches = 0;
    let mut worst_threshold: f64 = 0.0;
    for n in [2, 3, 5] {
        let space = Space::L2(n);
        let id = DMatrix::<f64>::identity(n, n);
        for _ in 0..100 {
            let alpha = rng.random_range(0.1..2.0);
            let beta = rng.random_range(-1.0..1.0) * alpha;
            let iso = cones::isotropic_eb(&IsotropicMap::new(alpha, beta, n), 0.0);
            let central = cones::central_eb(alpha, &(&id * beta), space, space, 0.0)?;
            if iso != central.holds || !central.exact {
                mismatches += 1;
            }
        }
        // Bisection on the central test for the largest EB β at α = 1.
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cones::central_eb(1.0, &(&id * mid), space, space, 0.0)?.holds {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        worst_threshold = worst_threshold.max((lo - 1.0 / n as f64).abs());
    }
    Ok((
        mismatches == 0 && worst_threshold <= 1e-12,
        format!("{mismatches} disagreements over 300 samples; threshold |beta| = alpha/n reproduced to {worst_threshold:.2e}"),
    ))
}

fn factorizations() -> Check {
    let b = psdmaps::breuer_hall();
    let report = psdmaps::lorentz_factorize(&b, 1e-9)?;
    let f = report.factorization.as_ref();
    let reference = psdmaps::breuer_hall_reference_alpha();
    let a = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(6, |i, _| if i == 0 { 1.0 } else { -1.0 }));
    let target = (&reference * a * reference.transpose()) * 0.5;
    let embed_diff = f.map_or(f64::INFINITY, |f| linalg::max_diff(&f.core(), &target));
    let residual = report.residual.unwrap_or(f64::INFINITY);
    let bh_ok = report.k == Some(5) && residual <= 1e-10 && embed_diff <= 1e-10;

    let r2 = psdmaps::lorentz_factorize(&psdmaps::reduction(2), 1e-9)?;
    let r2_ok = r2.k.is_some_and(|k| k <= 3) && r2.residual.is_some_and(|r| r <= 1e-10);

    let mut spectra = Vec::new();
    for d in [2, 3] {
        let r = psdmaps::reduction(d);
        let composed = psdmaps::transpose_composed_spectrum(&r, 1e-12)?;
        let own = psdmaps::spectrum(&r, 1e-12)?;
        spectra.push(format!("d={d}: R∘ϑ {} | R {}", summarize(&composed), summarize(&own)));
    }
    Ok((
        bh_ok && r2_ok,
        format!(
            "Breuer-Hall k={:?} residual {residual:.2e} embedding diff {embed_diff:.2e}; reduction d=2 k={:?}; spectra {}",
            report.k,
            r2.k,
            spectra.join("; ")
        ),
    ))
}

/// Eigenvalues grouped with multiplicities, e.g. `2x3, -1x5`.
fn summarize(vals: &[f64]) -> String {
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for &v in vals {
        let r = (v * 1e8).round() / 1e8 + 0.0;
        match groups.last_mut() {
            Some((g, c)) if (*g - r).abs() < 1e-6 => *c += 1,
            _ => groups.push((r, 1)),
        }
    }
    groups.iter().map(|(g, c)| format!("{g}x{c}")).collect::<Vec<_>>().join(", ")
}

fn sinkhorn_scaling(cfg: &SuiteConfig) -> Check {
    let mut rng = cfg.rng(10);
    let count = cfg.count(100);
    let mut failures = Vec::new();
    let (mut worst_res, mut worst_lambda, mut max_iter) = (0.0f64, 0.0f64, 0usize);
    for family in ["psd2", "psd3", "spin4"] {
        for i in 0..count {
            let p = match family {
                "psd2" => sinkhorn::random_positive_psd_map(&mut rng, 2, 2, 0.1),
                "psd3" => sinkhorn::random_positive_psd_map(&mut rng, 3, 3, 0.1),
                _ => sinkhorn::random_positive_spin_map(&mut rng, 4, 2.0, 0.5, 0.2),
            };
            match sinkhorn::sinkhorn_scale(&p, 1e-13, 10_000) {
                Ok(r) => {
                    worst_res = worst_res.max(r.residual_unital).max(r.residual_trace);
                    worst_lambda = worst_lambda.max((r.lambda - 1.0).abs());
                    max_iter = max_iter.max(r.iterations);
                    if r.residual_unital > 1e-9 || r.residual_trace > 1e-9 || (r.lambda - 1.0).abs() > 1e-8 {
                        failures.push(format!("{family}#{i}"));
                    }
                }
                Err(e) => failures.push(format!("{family}#{i}: {e}")),
            }
        }
    }
    Ok((
        failures.is_empty(),
        format!(
            "{} maps per family; worst residual {worst_res:.2e}, worst |lambda-1| {worst_lambda:.2e}, max iterations {max_iter}; failures {failures:?}",
            count
        ),
    ))
}

/// A random `(x₀, …, x_k)` in `C ⊗max C_{ℓ1^k}`, found by shrinking the
/// `xᵢ` until the sign test passes.
fn random_max_element(rng: &mut ChaCha8Rng, a: Algebra, k: usize) -> Result<Vec<JordanElement>> {
    let cone = a.cone();
    let x0 = a.random_in_cone(rng);
    let xs: Vec<JordanElement> = (0..k).map(|_| a.random(rng)).collect();
    let build = |scale: f64| {
        let mut all = vec![x0.clone()];
        all.extend(xs.iter().map(|x| x.scale(scale)));
        all
    };
    let accepts = |all: &[JordanElement]| -> Result<bool> {
        let coords: Vec<Vec<f64>> = all.iter().map(cones::coords).collect();
        Ok(cones::max_membership_ell1_factor(&cone, &coords, 0.0)?.member)
    };
    let (mut lo, mut hi) = (0.0, x0.norm() / xs.iter().map(JordanElement::norm).sum::<f64>().max(1e-12));
    while accepts(&build(hi))? {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if accepts(&build(mid))? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Half the samples sit just inside the boundary of the maximal product.
    let scale = if rng.random_bool(0.5) { lo } else { lo * rng.random_range(0.2..1.0) };
    Ok(build(scale))
}

fn ell1_breaking(cfg: &SuiteConfig) -> Check {
    let mut rng = cfg.rng(11);
    let count = cfg.count(100);
    let (mut worst_middle, mut worst_res) = (f64::INFINITY, 0.0f64);
    let mut failures = Vec::new();
    for a in [Algebra::Spin(3), Algebra::Hermitian(2), Algebra::Hermitian(3)] {
        for k in 2..=4 {
            for i in 0..count {
                let xs = random_max_element(&mut rng, a, k)?;
                match sinkhorn::ell1_break_decompose(&xs, 1e-12) {
                    Ok(d) => {
                        let check = d.verify(1e-10)?;
                        worst_middle = worst_middle.min(d.middle_min_eigenvalue);
                        worst_res = worst_res.max(check.residual);
                        if d.middle_min_eigenvalue < -1e-9 || !check.valid || check.residual > 1e-10 {
                            failures.push(format!("{a}/k={k}#{i}"));
                        }
                    }
                    Err(e) => failures.push(format!("{a}/k={k}#{i}: {e}")),
                }
            }
        }
    }
    Ok((
        failures.is_empty(),
        format!("{count} inputs per case; min middle eigenvalue {worst_middle:.3e}; worst residual {worst_res:.2e}; failures {failures:?}"),
    ))
}

fn random_tensor(rng: &mut ChaCha8Rng, dims: Vec<usize>) -> Tensor {
    let len = dims.iter().product();
    Tensor::new(dims, uniform_vec(rng, len)).expect("shape")
}

/// A random element of `C_{ℓ1^n}^{⊗min k}` as a positive combination of
/// products of cone elements.
fn random_min_ell1(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Tensor {
    let mut t = Tensor::zeros(&vec![n + 1; k]);
    for _ in 0..4 {
        let factors: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let x = uniform_vec(rng, n);
                let t0 = linalg::norm1(&x) * rng.random_range(1.0..1.5);
                [vec![t0], x].concat()
            })
            .collect();
        let refs: Vec<&[f64]> = factors.iter().map(Vec::as_slice).collect();
        t = t.add_scaled(&Tensor::outer(&refs), rng.random_range(0.0..1.0)).expect("shape");
    }
    t
}

/// A random element of `C_{ℓ1^n}^{⊗max k}` on or near the boundary.
fn random_max_ell1(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Result<Tensor> {
    let cones_k = vec![ConeHandle::Ell1(n); k];
    let mut t = random_tensor(rng, vec![n + 1; k]);
    let m = cones::max_membership_polyhedral(&cones_k, &t, 0.0)?.min_pairing;
    let e0 = Tensor::power(&ConeHandle::Ell1(n).order_unit(), k);
    t = t.add_scaled(&e0, (-m).max(0.0) + rng.random_range(0.0..0.05))?;
    Ok(t)
}

fn projections(cfg: &SuiteConfig) -> Check {
    let mut rng = cfg.rng(12);
    let count = cfg.count(100);
    let (mut worst_agree, mut worst_idem) = (0.0f64, 0.0f64);
    let mut cone_violations = 0;
    let mut cone_checks = 0;
    for n in 1..=3 {
        for k in 2..=4 {
            let cones_k = vec![ConeHandle::Ell1(n); k];
            for i in 0..count {
                let z = random_tensor(&mut rng, vec![n + 1; k]);
                let direct = norms::project_xk(&z);
                let by_s = norms::project_xk_by_s(&z)?;
                worst_agree = worst_agree.max(direct.max_abs_diff(&by_s)?);
                worst_idem = worst_idem.max(norms::project_xk(&direct).max_abs_diff(&direct)?);
                // Cone preservation on C_{ℓ1^n}, checked exactly. The min side at
                // n = 3, k = 4 is an NNLS over 1296 rays, so it is subsampled.
                let zmax = random_max_ell1(&mut rng, n, k)?;
                cone_checks += 1;
                if !cones::max_membership_polyhedral(&cones_k, &norms::project_xk(&zmax), 1e-12)?.member {
                    cone_violations += 1;
                }
                if n < 3 || k < 4 || i % 10 == 0 {
                    let zmin = random_min_ell1(&mut rng, n, k);
                    cone_checks += 1;
                    if !cones::min_membership_polyhedral(&cones_k, &norms::project_xk(&zmin), 1e-9)?.member {
                        cone_violations += 1;
                    }
                }
            }
        }
    }
    Ok((
        worst_agree <= 1e-12 && worst_idem == 0.0 && cone_violations == 0,
        format!(
            "direct vs S-product max diff {worst_agree:.2e}; idempotence diff {worst_idem:e}; {cone_violations} cone violations in {cone_checks} checks on C_l1"
        ),
    ))
}

fn jordan_identities(cfg: &SuiteConfig) -> Check {
    let mut rng = cfg.rng(13);
    let trials = cfg.count(1000);
    let mut violations: Vec<String> = Vec::new();
    for a in [Algebra::Spin(3), Algebra::Spin(5), Algebra::Hermitian(2), Algebra::Hermitian(3)] {
        let id = DMatrix::<f64>::identity(a.ambient_dim(), a.ambient_dim());
        let mut count = 0;
        for _ in 0..trials {
            let x = a.random(&mut rng);
            let y = a.random(&mut rng);
            let scale = x.norm().max(1.0).powi(3) * y.norm().max(1.0);
            let x2 = x.square();
            let lhs = x.product(&y)?.product(&x2)?;
            let rhs = x.product(&y.product(&x2)?)?;
            let jordan_ok = linalg::vec_max_diff(&lhs.coords, &rhs.coords) <= 1e-12 * scale;

            let spec = x.spectral_decompose()?;
            let round_ok = linalg::vec_max_diff(&spec.reconstruct().coords, &x.coords) <= 1e-12 * x.norm().max(1.0);

            let r = sinkhorn::unit_interval_check(&x.scale(rng.random_range(0.2..2.0) / spec.max_abs_eigenvalue()), 1e-10)?;

            let c = a.random_in_cone(&mut rng);
            let qc = JordanElement::new(a, jordan::quadratic_rep(&x).apply(&c.coords)?)?;
            let pos_ok = qc.min_eigenvalue()? >= -1e-10 * x.norm().powi(2) * c.norm();

            let inv_ok = match x.inverse(1e-6)? {
                Some(inv) if jordan::det_inv(&x)?.det.abs() > 1e-3 => {
                    let prod = &jordan::quadratic_rep(&x).matrix * &jordan::quadratic_rep(&inv).matrix;
                    let cond = x.norm().powi(2) * inv.norm().powi(2);
                    linalg::max_diff(&prod, &id) <= 1e-12 * cond.max(1.0)
                }
                _ => true,
            };
            if !(jordan_ok && round_ok && !r.violated() && pos_ok && inv_ok) {
                count += 1;
            }
        }
        if count > 0 {
            violations.push(format!("{a}: {count}"));
        }
    }
    Ok((violations.is_empty(), format!("{trials} trials per algebra (spin 3, spin 5, herm 2, herm 3); violations {violations:?}")))
}

fn isqrt2_experiment(cfg: &SuiteConfig) -> Check {
    let mut rng = cfg.rng(14);
    let count = cfg.count(1000);
    let cones2 = [ConeHandle::Ell1(2), ConeHandle::Ell1(2)];
    let iso = IsotropicMap::new(2f64.sqrt(), 1.0, 2).matrix();
    let mut counterexamples = 0;
    let mut worst_res: f64 = 0.0;
    let mut worst_pairing = f64::INFINITY;
    for _ in 0..count {
        let z = random_max_ell1(&mut rng, 2, 2)?;
        let image = z.apply_all(&iso)?;
        let max = cones::max_membership_polyhedral(&cones2, &image, 1e-12)?;
        let min = cones::min_membership_polyhedral(&cones2, &image, 1e-9)?;
        worst_pairing = worst_pairing.min(max.min_pairing);
        worst_res = worst_res.max(min.residual / image.max_abs().max(1.0));
        if !max.member || !min.member {
            counterexamples += 1;
        }
    }
    // Exploratory: the outcome is recorded, and the run itself is the criterion.
    Ok((
        true,
        format!(
            "{count} max-cone samples; {counterexamples} counterexamples to I^2(max) in min; worst NNLS residual {worst_res:.2e}; min dual pairing {worst_pairing:.3e}"
        ),
    ))
}
