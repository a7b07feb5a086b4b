use mixkin_core::collision_ops::{
    conservative_fixup, post_collision_omega, post_collision_sigma, q_pair, weak_moment, KernelFamily, KernelSpec,
    PairSpec, SpeciesSelector, TestFn,
};
use mixkin_core::twophase::{
    conserved_from_primitive, primitive_from_conserved, rdt_step, EosSpec, Friction, MacroBc, RelaxationSpec,
    TwoPhasePrimitive,
};
use mixkin_core::velocity_space::{maxwellian, norm, sub, MaxwellianParams, SpeciesSpec, Vec3, VelocityGrid};
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-5.0..5.0f64)
}

fn unit() -> impl Strategy<Value = Vec3> {
    (0.0..std::f64::consts::PI, 0.0..2.0 * std::f64::consts::PI)
        .prop_map(|(t, p): (f64, f64)| [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()])
}

fn close(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn sigma_map_conserves_momentum_and_energy(
        v in vec3(), vs in vec3(), s in unit(), m_p in 0.1..10.0f64, m_q in 0.1..10.0f64,
    ) {
        let (a, b) = post_collision_sigma(&v, &vs, &s, m_p, m_q).unwrap();
        let e0 = m_p * norm(&v).powi(2) + m_q * norm(&vs).powi(2);
        let e1 = m_p * norm(&a).powi(2) + m_q * norm(&b).powi(2);
        prop_assert!(close(e0, e1, e0, 1e-12));
        for k in 0..3 {
            let p0 = m_p * v[k] + m_q * vs[k];
            prop_assert!(close(p0, m_p * a[k] + m_q * b[k], (m_p + m_q) * 5.0, 1e-12));
        }
    }

    #[test]
    fn omega_map_conserves_momentum_and_energy(
        v in vec3(), vs in vec3(), w in unit(), m_p in 0.1..10.0f64, m_q in 0.1..10.0f64,
    ) {
        let (a, b) = post_collision_omega(&v, &vs, &w, m_p, m_q).unwrap();
        let e0 = m_p * norm(&v).powi(2) + m_q * norm(&vs).powi(2);
        let e1 = m_p * norm(&a).powi(2) + m_q * norm(&b).powi(2);
        prop_assert!(close(e0, e1, e0, 1e-12));
        for k in 0..3 {
            let p0 = m_p * v[k] + m_q * vs[k];
            prop_assert!(close(p0, m_p * a[k] + m_q * b[k], (m_p + m_q) * 5.0, 1e-12));
        }
    }

    #[test]
    fn sigma_and_omega_maps_agree(
        v in vec3(), vs in vec3(), om in unit(), m_p in 0.1..10.0f64, m_q in 0.1..10.0f64,
    ) {
        let w = sub(&v, &vs);
        let r = norm(&w);
        prop_assume!(r > 1e-3);
        let c = w[0] * om[0] + w[1] * om[1] + w[2] * om[2];
        let sigma = [(w[0] - 2.0 * c * om[0]) / r, (w[1] - 2.0 * c * om[1]) / r, (w[2] - 2.0 * c * om[2]) / r];
        let (a, b) = post_collision_omega(&v, &vs, &om, m_p, m_q).unwrap();
        let (a2, b2) = post_collision_sigma(&v, &vs, &sigma, m_p, m_q).unwrap();
        for k in 0..3 {
            prop_assert!(close(a[k], a2[k], 10.0, 1e-13));
            prop_assert!(close(b[k], b2[k], 10.0, 1e-13));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn macro_round_trip(
        alpha in 0.01..0.99f64, r1 in 0.1..10.0f64, r2 in 0.1..10.0f64, u1 in -3.0..3.0f64, u2 in -3.0..3.0f64,
    ) {
        let p = TwoPhasePrimitive { alpha_1: alpha, rho_1: r1, rho_2: r2, u_1: u1, u_2: u2 };
        let back = primitive_from_conserved(&conserved_from_primitive(&p), 0).unwrap();
        prop_assert!(!back.clamped);
        let q = back.state;
        prop_assert!(close(q.alpha_1, alpha, 1.0, 1e-12));
        prop_assert!(close(q.rho_1, r1, r1, 1e-12) && close(q.rho_2, r2, r2, 1e-12));
        prop_assert!(close(q.u_1, u1, 3.0, 1e-12) && close(q.u_2, u2, 3.0, 1e-12));
        prop_assert_eq!(q.alpha_1 + q.alpha_2(), 1.0);
    }

    #[test]
    fn relaxation_fixed_points_are_exact(alpha in 0.05..0.95f64, rho in 0.2..5.0f64, u in -2.0..2.0f64) {
        let eos = EosSpec::new(1.3, 1.4).unwrap();
        let relax = RelaxationSpec::new(1e-4, Friction::Xi(3.0)).unwrap();
        let u0 = conserved_from_primitive(&TwoPhasePrimitive { alpha_1: alpha, rho_1: rho, rho_2: rho, u_1: u, u_2: u });
        let mut s = vec![u0];
        rdt_step(&mut s, 1e-3, 1e9, &eos, &relax, MacroBc::Periodic).unwrap();
        prop_assert_eq!(s[0].w, 0.0);
        prop_assert!(close(s[0].alpha_rho, u0.alpha_rho, u0.alpha_rho, 1e-14));
        prop_assert_eq!(s[0].rho, u0.rho);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fixup_enforces_collision_invariants(
        n1 in 0.3..2.0f64, n2 in 0.3..2.0f64, t1 in 0.5..1.5f64, t2 in 0.5..1.5f64,
        u1 in prop::array::uniform2(-0.6..0.6f64), u2 in prop::array::uniform2(-0.6..0.6f64),
        m2 in 0.5..3.0f64, family in prop::sample::select(vec![KernelFamily::PseudoMaxwellian, KernelFamily::HardSphere]),
    ) {
        let g = VelocityGrid::new(2, 12, 6.0, 8).unwrap();
        let a = SpeciesSpec::new(1.0, "a").unwrap();
        let b = SpeciesSpec::new(m2, "b").unwrap();
        let gamma = if family == KernelFamily::HardSphere { 1.0 } else { 0.0 };
        let k = KernelSpec::with_angular_mass(family, gamma, 1.0, 2).unwrap();
        let f1 = maxwellian(&MaxwellianParams::new(n1, [u1[0], u1[1], 0.0], t1).unwrap(), &a, &g);
        let f2 = maxwellian(&MaxwellianParams::new(n2, [u2[0], u2[1], 0.0], t2).unwrap(), &b, &g);
        let inter = conservative_fixup(&q_pair(&f1, &f2, &PairSpec::inter(a.clone(), b, k), &g), &g).unwrap();
        for sel in [SpeciesSelector::P, SpeciesSelector::Q] {
            prop_assert!(weak_moment(&inter, TestFn::One, sel, &g).unwrap().abs() < 1e-12);
        }
        for t in [TestFn::Velocity(0), TestFn::Velocity(1), TestFn::SpeedSq] {
            prop_assert!(weak_moment(&inter, t, SpeciesSelector::PairSum, &g).unwrap().abs() < 1e-12);
        }
        let intra = conservative_fixup(&q_pair(&f1, &f1, &PairSpec::intra(a, k), &g), &g).unwrap();
        for t in [TestFn::One, TestFn::Velocity(0), TestFn::Velocity(1), TestFn::SpeedSq] {
            prop_assert!(weak_moment(&intra, t, SpeciesSelector::P, &g).unwrap().abs() < 1e-12);
        }
    }
}
