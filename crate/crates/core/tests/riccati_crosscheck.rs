//! Closed-form exponents vs the generic Riccati integrator, flow and
//! symmetry properties, and explosion-time agreement.

use num_complex::Complex64;
use rand::Rng;

use eqprice_core::affine::{
    explosion_scan, riccati_integrate, AffineModel, StepControl,
};
use eqprice_core::heston::HestonParams;
use eqprice_core::oracle::stream_rng;
use eqprice_core::oujump::OuJumpParams;

fn heston() -> HestonParams {
    HestonParams { mu: 0.1, kappa: 0.006, lambda: 0.2, sigma: 0.3, v0: 0.03, x0: 1.0 }
}

fn oujump() -> OuJumpParams {
    OuJumpParams { lambda: 2.0, mu: 1.0, kappa: 30.0, theta: 30.0, x0: 1.0 }
}

/// Draw a complex payoff-slot argument and a time strictly inside the
/// transform's lifetime at that argument's real part.
fn sample_in_domain(
    model: &dyn AffineModel,
    rng: &mut impl Rng,
    re_span: (f64, f64),
    im_span: f64,
    t_cap: f64,
) -> (f64, Complex64) {
    loop {
        let re = rng.gen_range(re_span.0..re_span.1);
        let im = rng.gen_range(-im_span..im_span);
        let Ok(bound) = model.horizon_bound(re) else {
            continue;
        };
        let cap = if bound.is_finite() { 0.8 * bound } else { t_cap };
        let t = rng.gen_range(0.01..cap.min(t_cap).max(0.011));
        return (t, Complex64::new(re, im));
    }
}

#[test]
fn heston_closed_form_matches_integration() {
    let p = heston();
    let chars = p.characteristics();
    let ctrl = StepControl::default();
    let mut rng = stream_rng(2024, 0);
    for _ in 0..100 {
        let (t, u) = sample_in_domain(&p, &mut rng, (-2.0, 1.5), 30.0, 1.2);
        let cf = p.exponents(t, u).unwrap();
        let ni =
            riccati_integrate(&chars, t, &[Complex64::new(0.0, 0.0), u], &ctrl).unwrap();
        assert!(
            (cf.phi - ni.phi).norm() < 1e-7,
            "phi mismatch at t = {t}, u = {u}: {} vs {}",
            cf.phi,
            ni.phi
        );
        for (a, b) in cf.psi.iter().zip(&ni.psi) {
            assert!((a - b).norm() < 1e-7, "psi mismatch at t = {t}, u = {u}");
        }
    }
}

#[test]
fn oujump_closed_form_matches_integration() {
    let p = oujump();
    let chars = p.characteristics();
    let ctrl = StepControl::default();
    let mut rng = stream_rng(2024, 1);
    let mut checked = 0;
    while checked < 100 {
        let (t, u) = sample_in_domain(&p, &mut rng, (-35.0, 35.0), 40.0, 1.0);
        // keep a small guard band around the transform poles
        if (u.re.abs() - p.theta).abs() < 0.5 {
            continue;
        }
        checked += 1;
        let cf = p.exponents(t, u).unwrap();
        let ni = riccati_integrate(&chars, t, &[u], &ctrl).unwrap();
        assert!(
            (cf.phi - ni.phi).norm() < 1e-7,
            "phi mismatch at t = {t}, u = {u}: {} vs {}",
            cf.phi,
            ni.phi
        );
        assert!((cf.psi[0] - ni.psi[0]).norm() < 1e-7, "psi mismatch at t = {t}, u = {u}");
    }
}

/// Semigroup composition: the exponents over `t + s` equal the `t`-leg
/// composed with an `s`-leg restarted at `psi(t)`.
#[test]
fn flow_property_holds_for_both_models() {
    let ctrl = StepControl::default();
    let mut rng = stream_rng(77, 0);

    let hp = heston();
    let hchars = hp.characteristics();
    for _ in 0..25 {
        let (total, u) = sample_in_domain(&hp, &mut rng, (-1.5, 1.0), 10.0, 1.0);
        let t = total * rng.gen_range(0.2..0.8);
        let s = total - t;
        let leg1 = hp.exponents(t, u).unwrap();
        let leg2 = riccati_integrate(&hchars, s, &leg1.psi, &ctrl).unwrap();
        let full = hp.exponents(total, u).unwrap();
        let phi_comp = leg1.phi + leg2.phi;
        assert!(
            (full.phi - phi_comp).norm() <= 1e-9 * (1.0 + full.phi.norm()),
            "phi flow violated at t = {t}, s = {s}, u = {u}"
        );
        for (a, b) in full.psi.iter().zip(&leg2.psi) {
            assert!((a - b).norm() <= 1e-9 * (1.0 + a.norm()));
        }
    }

    let op = oujump();
    let ochars = op.characteristics();
    for _ in 0..25 {
        let (total, u) = sample_in_domain(&op, &mut rng, (-25.0, 25.0), 25.0, 1.0);
        let t = total * rng.gen_range(0.2..0.8);
        let s = total - t;
        let leg1 = op.exponents(t, u).unwrap();
        let leg2 = riccati_integrate(&ochars, s, &leg1.psi, &ctrl).unwrap();
        let full = op.exponents(total, u).unwrap();
        let phi_comp = leg1.phi + leg2.phi;
        assert!(
            (full.phi - phi_comp).norm() <= 1e-9 * (1.0 + full.phi.norm()),
            "phi flow violated at t = {t}, s = {s}, u = {u}"
        );
        assert!((full.psi[0] - leg2.psi[0]).norm() <= 1e-9 * (1.0 + full.psi[0].norm()));
    }
}

#[test]
fn exponents_commute_with_conjugation() {
    let hp = heston();
    let op = oujump();
    let mut rng = stream_rng(11, 3);
    for _ in 0..30 {
        let (t, u) = sample_in_domain(&hp, &mut rng, (-1.5, 1.0), 20.0, 1.0);
        let a = hp.exponents(t, u).unwrap();
        let b = hp.exponents(t, u.conj()).unwrap();
        assert!((a.phi.conj() - b.phi).norm() < 1e-12);
        for (x, y) in a.psi.iter().zip(&b.psi) {
            assert!((x.conj() - y).norm() < 1e-12);
        }
    }
    for _ in 0..30 {
        let (t, u) = sample_in_domain(&op, &mut rng, (-25.0, 25.0), 25.0, 1.0);
        let a = op.exponents(t, u).unwrap();
        let b = op.exponents(t, u.conj()).unwrap();
        assert!((a.phi.conj() - b.phi).norm() < 1e-12);
        assert!((a.psi[0].conj() - b.psi[0]).norm() < 1e-12);
    }
}

/// The integration blow-up time must land within 5% of the closed-form
/// lifetime, and trajectories gated inside the lifetime must survive.
#[test]
fn explosion_times_match_closed_form_bounds() {
    let ctrl = StepControl::default();

    let hp = heston();
    let u = -1.0;
    let bound = hp.max_horizon(u);
    assert!(bound.is_finite());
    let trip = explosion_scan(
        &hp.characteristics(),
        &[Complex64::new(0.0, 0.0), Complex64::new(u, 0.0)],
        1.1 * bound,
        &ctrl,
    )
    .unwrap()
    .expect("imaginary-branch trajectory must explode");
    assert!(
        (trip - bound).abs() < 0.05 * bound,
        "heston trip {trip} vs lifetime {bound}"
    );
    let survives = explosion_scan(
        &hp.characteristics(),
        &[Complex64::new(0.0, 0.0), Complex64::new(u, 0.0)],
        0.95 * bound,
        &ctrl,
    )
    .unwrap();
    assert!(survives.is_none());

    let op = oujump();
    let u = -35.0;
    let bound = op.max_horizon(u).unwrap();
    assert!(bound.is_finite());
    let trip = explosion_scan(&op.characteristics(), &[Complex64::new(u, 0.0)], 0.15, &ctrl)
        .unwrap()
        .expect("beyond-pole argument must explode");
    assert!(
        (trip - bound).abs() < 0.05 * bound,
        "oujump trip {trip} vs lifetime {bound}"
    );
    let survives =
        explosion_scan(&op.characteristics(), &[Complex64::new(u, 0.0)], 0.95 * bound, &ctrl)
            .unwrap();
    assert!(survives.is_none());
}
