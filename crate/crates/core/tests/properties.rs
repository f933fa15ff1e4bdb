//! Property tests for the invariants of each module.

use conelab::compalg::{self, AlgebraKind, ProtocolCone};
use conelab::cones::{self, ConeHandle, IsotropicMap};
use conelab::hurwitz;
use conelab::jordan::{self, Algebra, JordanElement};
use conelab::linalg;
use conelab::norms::{self, Space};
use conelab::psdmaps::{self, HermMap};
use conelab::sinkhorn;
use conelab::tensor::Tensor;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn algebra() -> impl Strategy<Value = Algebra> {
    prop_oneof![(1usize..6).prop_map(Algebra::Spin), (1usize..4).prop_map(Algebra::Hermitian)]
}

fn element(a: Algebra) -> impl Strategy<Value = JordanElement> {
    prop::collection::vec(-2.0f64..2.0, a.ambient_dim()).prop_map(move |c| JordanElement::new(a, c).unwrap())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn jordan_identity_and_trace_form(
        (x, y, z) in algebra().prop_flat_map(|a| (element(a), element(a), element(a)))
    ) {
        let x2 = x.square();
        let lhs = x.product(&y).unwrap().product(&x2).unwrap();
        let rhs = x.product(&y.product(&x2).unwrap()).unwrap();
        let scale = x.norm().max(1.0).powi(3) * y.norm().max(1.0);
        prop_assert!(linalg::vec_max_diff(&lhs.coords, &rhs.coords) <= 1e-10 * scale);
        let a = x.product(&y).unwrap().inner(&z).unwrap();
        let b = y.inner(&x.product(&z).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * x.norm().max(1.0) * y.norm().max(1.0) * z.norm().max(1.0));
    }

    #[test]
    fn spectral_round_trip_and_parts(x in algebra().prop_flat_map(element)) {
        let s = x.spectral_decompose().unwrap();
        prop_assert!(linalg::vec_max_diff(&s.reconstruct().coords, &x.coords) <= 1e-10 * x.norm().max(1.0));
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        let p = jordan::parts(&x).unwrap();
        prop_assert!(linalg::vec_max_diff(&p.pos.sub(&p.neg).unwrap().coords, &x.coords) <= 1e-10 * x.norm().max(1.0));
        prop_assert!(p.pos.product(&p.neg).unwrap().norm() <= 1e-10 * x.norm().max(1.0).powi(2));
    }

    #[test]
    fn unit_interval_implications_hold(x in algebra().prop_flat_map(element), s in 0.1f64..2.0) {
        let lam = x.spectral_decompose().unwrap().max_abs_eigenvalue();
        prop_assume!(lam > 1e-6);
        let r = sinkhorn::unit_interval_check(&x.scale(s / lam), 1e-10).unwrap();
        prop_assert!(!r.violated(), "{r:?}");
    }

    #[test]
    fn quadratic_representation_is_positive(
        (x, y) in algebra().prop_flat_map(|a| (element(a), element(a)))
    ) {
        let c = y.square();
        let q = jordan::quadratic_rep(&x);
        let img = JordanElement::new(x.algebra, q.apply(&c.coords).unwrap()).unwrap();
        prop_assert!(img.min_eigenvalue().unwrap() >= -1e-10 * x.norm().max(1.0).powi(2) * c.norm().max(1.0));
        // Q_x(e) = x².
        let qe = q.apply(&x.algebra.identity().coords).unwrap();
        prop_assert!(linalg::vec_max_diff(&qe, &x.square().coords) <= 1e-10 * x.norm().max(1.0).powi(2));
    }

    #[test]
    fn twirl_is_idempotent_and_rotation_invariant(n in 1usize..6, seed in any::<u64>()) {
        let mut r = rng(seed);
        let l = linalg::gaussian_matrix(&mut r, n + 1, n + 1);
        let t = cones::twirl(&l).unwrap();
        prop_assert_eq!(cones::twirl(&t.matrix()).unwrap(), t);
        let mut g = DMatrix::identity(n + 1, n + 1);
        g.view_mut((1, 1), (n, n)).copy_from(&linalg::haar_orthogonal(&mut r, n));
        let rotated = cones::twirl(&(g.transpose() * &l * &g)).unwrap();
        prop_assert!((rotated.alpha - t.alpha).abs() <= 1e-12);
        prop_assert!((rotated.beta - t.beta).abs() <= 1e-12 * l.amax().max(1.0));
    }

    #[test]
    fn isotropic_eb_implies_positive(alpha in 0.0f64..3.0, beta in -3.0f64..3.0, n in 1usize..8) {
        let m = IsotropicMap::new(alpha, beta, n);
        prop_assert!(!cones::isotropic_eb(&m, 1e-12) || cones::isotropic_positive(&m, 1e-12));
    }

    #[test]
    fn max_membership_is_sign_and_order_invariant(seed in any::<u64>(), k in 1usize..5, flip in any::<u8>()) {
        let mut r = rng(seed);
        let c = ConeHandle::Lorentz(3);
        let xs: Vec<Vec<f64>> = (0..=k)
            .map(|i| {
                let mut v = linalg::gaussian_vec(&mut r, 4);
                if i == 0 { v[0] = v[0].abs() + 2.0; }
                v
            })
            .collect();
        let base = cones::max_membership_ell1_factor(&c, &xs, 1e-12).unwrap();
        let mut ys = xs.clone();
        ys[1..].reverse();
        for (i, y) in ys[1..].iter_mut().enumerate() {
            if flip >> i & 1 == 1 {
                y.iter_mut().for_each(|v| *v = -*v);
            }
        }
        let other = cones::max_membership_ell1_factor(&c, &ys, 1e-12).unwrap();
        prop_assert_eq!(base.member, other.member);
        if let Some(sign) = base.violating_sign {
            let cert = conelab::certificate::Certificate::max_violation(c, xs, sign, 1e-12).unwrap();
            prop_assert!(cert.verify().valid);
        }
    }

    #[test]
    fn protocol_traps_below_threshold_and_escapes_above(pair in 1usize..8) {
        // (Csplit, R) has f′(0) = 1, so the origin is not attracting there.
        prop_assume!(pair != 4);
        let first = if pair < 4 { AlgebraKind::R } else { AlgebraKind::Csplit };
        let second = [AlgebraKind::R, AlgebraKind::C, AlgebraKind::H, AlgebraKind::O][pair % 4];
        let p = ProtocolCone::new(first, second).unwrap();
        let t = compalg::protocol_threshold(&p, 1e-12).unwrap();
        let below = p.iterate(t - 1e-3, 400);
        prop_assert!(below.last().unwrap().abs() < 1e-6);
        let above = p.iterate(t + 1e-3, 50);
        prop_assert!(above[1] > above[0]);
        // The threshold coincides with the isotropic EB threshold 1/N.
        prop_assert!((t - 1.0 / p.big_n() as f64).abs() <= 1e-9);
    }

    #[test]
    fn witness_pairing_identity(n in 2usize..5, k in 2usize..4, alpha in 0.1f64..2.0, beta in -1.0f64..1.0) {
        let pair = hurwitz::lorentz_witness_pair(n, k).unwrap();
        let map = IsotropicMap::new(alpha, beta, n).as_map(ConeHandle::Lorentz(n)).unwrap();
        let image = map.apply_tensor(&pair.z_plus).unwrap();
        let plus = image.inner(&pair.z_plus).unwrap();
        let minus = image.inner(&pair.z_minus).unwrap();
        let bk = beta.powi(k as i32) * pair.sq_norm;
        prop_assert!((plus - (alpha.powi(k as i32) + bk)).abs() <= 1e-10 * (1.0 + bk.abs()));
        prop_assert!((minus - (alpha.powi(k as i32) - bk)).abs() <= 1e-10 * (1.0 + bk.abs()));
    }

    #[test]
    fn canonical_form_reconstructs(d in 2usize..4, seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = linalg::gaussian_matrix(&mut r, d * d, d * d);
        let e = DVector::from_vec(Algebra::Hermitian(d).identity().coords);
        let sym = (&m + m.transpose()) * 0.5 + (&e * e.transpose()) * (4.0 * m.amax() * d as f64);
        let p = HermMap::new(d, d, sym).unwrap();
        let form = psdmaps::canonical_form(&p, 1e-9).unwrap();
        prop_assert!(form.residual <= 1e-10);
        let rep = psdmaps::lorentz_factorize(&p, 1e-9).unwrap();
        if let Some(f) = rep.factorization {
            let again = psdmaps::lorentz_factorize(&f.map(), 1e-9).unwrap();
            prop_assert_eq!(again.k, Some(f.k));
            prop_assert!(again.residual.unwrap() <= 1e-10 * form.spectral_radius.max(1.0));
        }
    }

    #[test]
    fn block_positivity_negatives_are_proved(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = linalg::gaussian_cmatrix(&mut r, 4, 4);
        let shift = r.random_range(-1.0..2.0);
        let m = (&g + g.adjoint()).scale(0.5) + linalg::cidentity(4).scale(shift);
        let b = psdmaps::block_positivity_with(&m, 2, 2, 1e-12, 50, 100).unwrap();
        if !b.block_positive {
            prop_assert!(psdmaps::product_value(&m, &b.y, &b.z) < 0.0);
            prop_assert!((b.y.norm() - 1.0).abs() < 1e-12 && (b.z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn injective_below_projective(n in 2usize..4, k in 2usize..4, seed in any::<u64>(), kind in 0usize..3) {
        let mut r = rng(seed);
        let len = (0..k).map(|_| n).product();
        let z = Tensor::new(vec![n; k], linalg::gaussian_vec(&mut r, len)).unwrap();
        let space = [Space::L1(n), Space::L2(n), Space::Linf(n)][kind];
        let e = norms::injective_norm(&z, space, k).unwrap();
        let p = norms::projective_norm(&z, space, k).unwrap();
        prop_assert!(e.lower <= p.upper * (1.0 + 1e-12));
        prop_assert!(e.lower <= e.upper + 1e-12 && p.lower <= p.upper + 1e-12);
        if e.exact && p.exact {
            prop_assert!(e.value <= p.value * (1.0 + 1e-12));
        }
    }

    #[test]
    fn projection_is_idempotent_and_self_adjoint(n in 1usize..4, k in 2usize..5, seed in any::<u64>()) {
        let mut r = rng(seed);
        let len = (0..k).map(|_| n + 1).product();
        let z = Tensor::new(vec![n + 1; k], linalg::gaussian_vec(&mut r, len)).unwrap();
        let w = Tensor::new(vec![n + 1; k], linalg::gaussian_vec(&mut r, len)).unwrap();
        let pz = norms::project_xk(&z);
        prop_assert_eq!(norms::project_xk(&pz), pz.clone());
        let a = pz.inner(&w).unwrap();
        let b = z.inner(&norms::project_xk(&w)).unwrap();
        prop_assert!((a - b).abs() <= 1e-14 * z.norm() * w.norm());
    }

    #[test]
    fn product_qubit_states_are_in_check_and_hat(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = Algebra::Hermitian(2).random_in_cone(&mut r).to_matrix().unwrap();
        let b = Algebra::Hermitian(2).random_in_cone(&mut r).to_matrix().unwrap();
        let z = JordanElement::from_matrix(&a.kronecker(&b)).unwrap();
        let rep = norms::hat_check_membership_qubit(&z, 1e-9).unwrap();
        prop_assert!(rep.in_check);
        if let Some(h) = &rep.in_hat_evidence {
            prop_assert!(h.verify(&rep.moment, 1e-9));
        }
    }

    #[test]
    fn sinkhorn_scale_covariance(seed in any::<u64>(), c in 0.1f64..10.0) {
        let mut r = rng(seed);
        let p = sinkhorn::random_positive_psd_map(&mut r, 2, 2, 0.1);
        let a = sinkhorn::sinkhorn_scale(&p, 1e-13, 10_000).unwrap();
        let b = sinkhorn::sinkhorn_scale(&p.scale(c), 1e-13, 10_000).unwrap();
        prop_assert!(linalg::max_diff(&a.p_tilde.matrix, &b.p_tilde.matrix) <= 1e-9);
        // B∘P∘A as operators equals the elementwise Q-sandwich.
        let x = Algebra::Hermitian(2).random(&mut r);
        let direct = a.p_tilde.apply(&x.coords).unwrap();
        let staged = a.b.apply(&p.apply(&a.a.apply(&x.coords).unwrap()).unwrap()).unwrap();
        prop_assert!(linalg::vec_max_diff(&direct, &staged) <= 1e-12 * x.norm().max(1.0) * a.p_tilde.matrix.amax().max(1.0));
    }

    #[test]
    fn decomposition_coefficients(seed in any::<u64>(), k in 1usize..4) {
        let mut r = rng(seed);
        let a = Algebra::Spin(3);
        let mut xs = vec![a.identity()];
        for _ in 0..k {
            let x = a.random(&mut r);
            xs.push(x.scale(0.3 / (k as f64 * x.norm().max(1e-3))));
        }
        let d = sinkhorn::ell1_break_decompose(&xs, 1e-12).unwrap();
        // e₀-components sum to √k·x₀′ = √k·e, the eᵢ-components to xᵢ′ = xᵢ.
        let mut sums = vec![a.zero(); k + 1];
        for t in &d.normalized_terms {
            for (j, c) in t.ell1.iter().enumerate() {
                sums[j] = sums[j].add_scaled(&t.element, *c).unwrap();
            }
        }
        prop_assert!(linalg::vec_max_diff(&sums[0].coords, &a.identity().scale((k as f64).sqrt()).coords) <= 1e-12);
        for i in 1..=k {
            prop_assert!(linalg::vec_max_diff(&sums[i].coords, &xs[i].coords) <= 1e-12);
        }
        prop_assert!(d.verify(1e-10).unwrap().valid);
        prop_assert!(d.to_certificate(1e-9).unwrap().verify().valid);
    }
}

#[test]
fn hurwitz_families_anticommute() {
    for n in 1..=hurwitz::MAX_N {
        let f = hurwitz::build_family(n).unwrap();
        f.verify().unwrap();
        let mats = f.mats();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let s = mats[i].transpose() * &mats[j] + mats[j].transpose() * &mats[i];
                    assert!(s.iter().all(|v| *v == 0.0));
                }
            }
        }
    }
}

#[test]
fn eb_bounds_grow_with_k() {
    for n in [2, 3, 4, 8] {
        let rows = hurwitz::eb_bound_from_witness(n, 1.0, 0.5, &[1, 2, 3, 4, 5, 6]).unwrap();
        let big_n = hurwitz::N_of(n).unwrap() as f64;
        for w in rows.windows(2).take(5) {
            let (a, b) = (w[0].k.unwrap() as f64, w[1].k.unwrap() as f64);
            let ratio = w[1].factor / w[0].factor;
            assert!((ratio - big_n.powf(1.0 / a - 1.0 / b)).abs() < 1e-12 && ratio >= 1.0);
        }
    }
}

#[test]
fn spin_projection_properties() {
    let [x, y, z] = linalg::paulis();
    for system in [vec![x.clone(), y.clone()], vec![x, y, z]] {
        assert_eq!(psdmaps::validate_spin_system(&system, 1e-12).unwrap(), 2);
        let p = psdmaps::spin_projection(&system).unwrap();
        let m = &p.matrix;
        assert!(linalg::max_diff(&(m * m), m) < 1e-12);
        assert!(linalg::max_diff(m, &m.transpose()) < 1e-12);
        let e = Algebra::Hermitian(2).identity().coords;
        assert!(linalg::vec_max_diff(&p.apply_coords(&e).unwrap(), &e) < 1e-12);
        assert_eq!(linalg::singular_values(m).iter().filter(|s| **s > 1e-9).count(), system.len() + 1);
    }
}

/// Grid oracle for `ε₃(ℓ₂²)`: maximize over two angles, the third factor in
/// closed form.
#[test]
fn injective_l2_matches_grid_oracle() {
    let mut r = rng(5);
    for _ in 0..5 {
        let z = Tensor::new(vec![2, 2, 2], linalg::gaussian_vec(&mut r, 8)).unwrap();
        let steps = 1500;
        let mut best: f64 = 0.0;
        for a in 0..steps {
            let ta = std::f64::consts::PI * a as f64 / steps as f64;
            let u = [ta.cos(), ta.sin()];
            for b in 0..steps {
                let tb = std::f64::consts::PI * b as f64 / steps as f64;
                let v = [tb.cos(), tb.sin()];
                let w = z.contract_except(2, &[&u, &v, &[0.0, 0.0]]).unwrap();
                best = best.max(linalg::norm2(&w));
            }
        }
        let e = norms::injective_norm(&z, Space::L2(2), 3).unwrap();
        assert!(e.lower >= best - 1e-9 && best <= e.upper + 1e-9, "{e:?} vs grid {best}");
        assert!((e.lower - best).abs() < 1e-4 * best, "{} vs grid {best}", e.lower);
    }
}

/// `π₂(ℓ1)` against the sign-matrix dual and `N(ℓ1 → Y)` against the
/// column decomposition computed independently.
#[test]
fn ell1_norm_oracles() {
    let mut r = rng(9);
    for _ in 0..20 {
        let p = linalg::gaussian_matrix(&mut r, 3, 4);
        for y in [Space::L1(3), Space::L2(3), Space::Linf(3)] {
            let cols: f64 = (0..4).map(|j| y.norm(p.column(j).as_slice())).sum();
            let nn = norms::nuclear_norm(&p, Space::L1(4), y).unwrap();
            assert!(nn.exact && (nn.value - cols).abs() < 1e-12);
        }
        let z = Tensor::new(vec![3, 3], linalg::gaussian_vec(&mut r, 9)).unwrap();
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..512 {
            let w: Vec<f64> = (0..9).map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
            best = best.max(z.inner(&Tensor::new(vec![3, 3], w).unwrap()).unwrap());
        }
        assert!((norms::projective_norm(&z, Space::L1(3), 2).unwrap().value - best).abs() < 1e-12);
    }
}

#[test]
fn sinkhorn_on_spin_factor() {
    let mut r = rng(21);
    let p = sinkhorn::random_positive_spin_map(&mut r, 3, 2.0, 0.5, 0.2);
    let s = sinkhorn::sinkhorn_scale(&p, 1e-12, 10_000).unwrap();
    assert!(s.residual_unital <= 1e-9 && s.residual_trace <= 1e-9);
    assert!((s.lambda - 1.0).abs() <= 1e-11);
}
