//! Cross-module properties of balayage checks, Poisson–Jensen evaluators and
//! the duality maps, on disc fixtures in the plane.

use std::f64::consts::TAU;

use balayage_core::balayage::{
    check_har_balayage, check_har_test_functions, check_sbh_balayage, main_lemma_harness, Consistency,
    HarmonicTestFunction,
};
use balayage_core::classical_domains::BallDomain;
use balayage_core::duality::forward_map;
use balayage_core::geometry::{is_relatively_compact, support_infill, CellSet, GridOpenSet};
use balayage_core::kernels::Dimension;
use balayage_core::poisson_jensen::{
    asj_pj_residual, asp_pj_residual, classical_pj_residual, full_symmetric_pj_residual, measure_pj_residual,
    symmetric_pj_residual, CanonicalSubharmonic, Region,
};
use balayage_core::potentials::potential_f64;
use balayage_core::{DiscreteMeasure, ExtReal};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-3;

fn d2() -> Dimension {
    Dimension::new(2).unwrap()
}

fn grid() -> GridOpenSet {
    GridOpenSet::full_box(vec![-2.013, -2.013], 0.1, vec![41, 41]).unwrap()
}

fn region() -> Region {
    Region::of_grid(&grid())
}

fn gap_to_circle(p: &[f64], b: &BallDomain) -> f64 {
    (((p[0] - b.center[0]).powi(2) + (p[1] - b.center[1]).powi(2)).sqrt() - b.radius).abs()
}

fn point_in(rng: &mut ChaCha8Rng, b: &BallDomain, frac: f64) -> Vec<f64> {
    let t = rng.random_range(0.0..TAU);
    let s = b.radius * frac * rng.random_range(0.0f64..1.0).sqrt();
    vec![b.center[0] + s * t.cos(), b.center[1] + s * t.sin()]
}

fn disc(rng: &mut ChaCha8Rng) -> BallDomain {
    BallDomain::new(
        vec![rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)],
        rng.random_range(0.6..1.0),
    )
    .unwrap()
}

fn sweep(mu: &DiscreteMeasure, ball: &BallDomain, n: usize) -> DiscreteMeasure {
    let mut out = DiscreteMeasure::empty(mu.dim());
    for a in mu.atoms() {
        let w = ball.harmonic_measure_quadrature(&a.location, n).unwrap();
        out = DiscreteMeasure::combine(1.0, &out, a.weight, &w).unwrap();
    }
    out
}

/// A true balayage pair with the circles carrying its supports.
struct Pair {
    delta: DiscreteMeasure,
    omega: DiscreteMeasure,
    circles: Vec<BallDomain>,
}

fn balayage_pair(rng: &mut ChaCha8Rng, composed: bool) -> Pair {
    let b1 = disc(rng);
    let x = point_in(rng, &b1, 0.6);
    let dirac = DiscreteMeasure::dirac(&x).unwrap();
    let w1 = b1.harmonic_measure_quadrature(&x, 512).unwrap();
    if !composed {
        return Pair {
            delta: dirac,
            omega: w1,
            circles: vec![b1],
        };
    }
    let b2 = BallDomain::new(b1.center.clone(), b1.radius * rng.random_range(1.3..1.5)).unwrap();
    let w2 = sweep(&w1, &b2, 512);
    Pair {
        delta: w1,
        omega: w2,
        circles: vec![b1, b2],
    }
}

/// Subharmonic `u` with atoms `0.2r` away from every circle and two external sources.
fn random_u(rng: &mut ChaCha8Rng, circles: &[BallDomain]) -> CanonicalSubharmonic {
    let mut atoms = Vec::new();
    while atoms.len() < 3 {
        let p = vec![rng.random_range(-1.7..1.7), rng.random_range(-1.7..1.7)];
        if circles.iter().all(|b| gap_to_circle(&p, b) >= 0.2 * b.radius) {
            atoms.push((p, rng.random_range(0.2..1.0)));
        }
    }
    let sources: Vec<(Vec<f64>, f64)> = (0..2)
        .map(|_| {
            let t = rng.random_range(0.0..TAU);
            (vec![4.0 * t.cos(), 4.0 * t.sin()], rng.random_range(-1.0..1.0))
        })
        .collect();
    CanonicalSubharmonic::new(
        DiscreteMeasure::from_atoms(d2(), atoms).unwrap(),
        DiscreteMeasure::from_atoms(d2(), sources).unwrap(),
        rng.random_range(-1.0..1.0),
        region(),
    )
    .unwrap()
}

fn shared_harmonic(rng: &mut ChaCha8Rng) -> DiscreteMeasure {
    DiscreteMeasure::from_atoms(
        d2(),
        (0..3).map(|_| {
            let t = rng.random_range(0.0..TAU);
            (vec![5.0 * t.cos(), 5.0 * t.sin()], rng.random_range(-1.0..1.0))
        }),
    )
    .unwrap()
}

fn dilate(g: &GridOpenSet, s: &CellSet, steps: usize) -> CellSet {
    let mut out = s.clone();
    for _ in 0..steps {
        let cur = out.clone();
        for c in cur.iter() {
            let [i, j, _] = g.coords(c);
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                if a >= 0 && b >= 0 && (a as usize) < g.shape()[0] && (b as usize) < g.shape()[1] {
                    out.insert(g.index(&[a as usize, b as usize]));
                }
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn balayage_is_transitive_at_twice_the_tolerance(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid();
        let b1 = disc(&mut rng);
        let x = point_in(&mut rng, &b1, 0.6);
        let dirac = DiscreteMeasure::dirac(&x).unwrap();
        let w1 = b1.harmonic_measure_quadrature(&x, 256).unwrap();
        let b2 = BallDomain::new(b1.center.clone(), b1.radius * 1.4).unwrap();
        let w2 = sweep(&w1, &b2, 256);
        let first = check_har_balayage(&dirac, &w1, &g, TOL).unwrap().verdict;
        let second = check_har_balayage(&w1, &w2, &g, TOL).unwrap().verdict;
        prop_assume!(first && second);
        prop_assert!(check_har_balayage(&dirac, &w2, &g, 2.0 * TOL).unwrap().verdict);
    }

    #[test]
    fn residuals_scale_linearly(seed in any::<u64>(), c in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid();
        let pair = balayage_pair(&mut rng, false);
        let far = DiscreteMeasure::dirac(&point_in(&mut rng, &pair.circles[0], 0.9)).unwrap();
        for omega in [&pair.omega, &far] {
            let r1 = check_har_balayage(&pair.delta, omega, &g, TOL).unwrap();
            let rc = check_har_balayage(&pair.delta.scaled(c), &omega.scaled(c), &g, TOL).unwrap();
            let slack = 1e-12 * c * (1.0 + r1.potential_residual);
            prop_assert!((rc.potential_residual - c * r1.potential_residual).abs() <= slack);
            prop_assert!((rc.mass_gap - c * r1.mass_gap).abs() <= 1e-12 * c);
        }
    }

    #[test]
    fn clear_margin_verdicts_agree(seed in any::<u64>(), kind in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid();
        let pair = balayage_pair(&mut rng, kind == 1);
        let (delta, omega) = match kind {
            2 => (pair.delta.clone(), DiscreteMeasure::dirac(&point_in(&mut rng, &pair.circles[0], 0.9)).unwrap()),
            3 => {
                let b = &pair.circles[0];
                let other = b.harmonic_measure_quadrature(&point_in(&mut rng, b, 0.6), 512).unwrap();
                (pair.delta.clone(), other)
            }
            _ => (pair.delta.clone(), pair.omega.clone()),
        };
        let us: Vec<_> = (0..4).map(|_| random_u(&mut rng, &pair.circles)).collect();
        let r = main_lemma_harness(&delta, &omega, &g, &us, TOL).unwrap();
        let residuals = [
            r.har_test_residual.unwrap(),
            r.potential_residual.max(r.mass_gap),
            r.pj_residual.unwrap(),
            r.special_residual.unwrap(),
        ];
        let clear = residuals.iter().all(|v| *v <= TOL / 10.0 || *v >= 10.0 * TOL);
        prop_assert_ne!(r.consistency, Some(Consistency::Mixed));
        if clear {
            prop_assert_eq!(r.consistency, Some(Consistency::Agree), "{:?}", residuals);
        }
    }

    #[test]
    fn main_theorem_i_implies_iii(seed in any::<u64>(), composed in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid();
        let pair = balayage_pair(&mut rng, composed);
        let h = shared_harmonic(&mut rng);
        let q = CanonicalSubharmonic::potential_of(&pair.delta, region()).unwrap().with_harmonic_part(&h, 0.5).unwrap();
        let p = CanonicalSubharmonic::potential_of(&pair.omega, region()).unwrap().with_harmonic_part(&h, 0.5).unwrap();
        let s = balayage_core::geometry::rasterize_support(&g, &[&pair.delta, &pair.omega]).unwrap();
        let b = support_infill(&g, &[&pair.delta, &pair.omega]).unwrap();
        for _ in 0..50 {
            let u = random_u(&mut rng, &pair.circles);
            let r = full_symmetric_pj_residual(&u, &q, &p, &s, &b, &g, 1e-9).unwrap();
            prop_assert!(r.residual <= TOL, "{:?}", r);
        }
    }

    #[test]
    fn main_theorem_iv_implies_i(seed in any::<u64>(), kind in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid();
        let pair = balayage_pair(&mut rng, kind == 1);
        let omega = if kind == 2 {
            DiscreteMeasure::dirac(&point_in(&mut rng, &pair.circles[0], 0.9)).unwrap()
        } else {
            pair.omega.clone()
        };
        let r = main_lemma_harness(&pair.delta, &omega, &g, &[], TOL).unwrap();
        let s_o = support_infill(&g, &[&pair.delta, &omega]).unwrap();
        let worst = g
            .centers_outside(&s_o)
            .iter()
            .map(|y| (potential_f64(&pair.delta, y).unwrap() - potential_f64(&omega, y).unwrap()).abs())
            .fold(0.0, f64::max);
        if r.special_residual.unwrap() <= TOL {
            prop_assert!(worst <= 10.0 * TOL, "{worst}");
        }
    }

    #[test]
    fn residual_is_subadditive_in_u(seed in any::<u64>(), alpha in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid();
        let pair = balayage_pair(&mut rng, false);
        let ball = &pair.circles[0];
        let x = pair.delta.atoms()[0].location.clone();
        let (u1, u2) = (random_u(&mut rng, &pair.circles), random_u(&mut rng, &pair.circles));
        let mix = CanonicalSubharmonic::combine(alpha, &u1, 1.0, &u2).unwrap();
        let cls = |u: &CanonicalSubharmonic| classical_pj_residual(u, ball, &x, 512).unwrap().residual;
        prop_assert!(cls(&mix) <= alpha * cls(&u1) + cls(&u2) + 1e-12);
        let s_o = support_infill(&g, &[&pair.delta, &pair.omega]).unwrap();
        let mpj = |u: &CanonicalSubharmonic| measure_pj_residual(u, &pair.delta, &pair.omega, &s_o, &g).unwrap().residual;
        prop_assert!(mpj(&mix) <= alpha * mpj(&u1) + mpj(&u2) + 1e-12);
    }

    #[test]
    fn constants_and_larger_b_leave_residuals_unchanged(seed in any::<u64>(), shift in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid();
        let pair = balayage_pair(&mut rng, false);
        let u = random_u(&mut rng, &pair.circles);
        let s_o = support_infill(&g, &[&pair.delta, &pair.omega]).unwrap();
        let base = measure_pj_residual(&u, &pair.delta, &pair.omega, &s_o, &g).unwrap().residual;
        let shifted = u.with_constant(u.constant() + shift);
        let r = measure_pj_residual(&shifted, &pair.delta, &pair.omega, &s_o, &g).unwrap().residual;
        prop_assert!((r - base).abs() <= 1e-12);
        let bigger = dilate(&g, &s_o, 3);
        prop_assume!(is_relatively_compact(&g, &bigger));
        let r = measure_pj_residual(&u, &pair.delta, &pair.omega, &bigger, &g).unwrap().residual;
        prop_assert!((r - base).abs() <= 1e-9);
    }

    #[test]
    fn jensen_measures_have_nonnegative_potentials(seed in any::<u64>(), composed in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid();
        let pair = balayage_pair(&mut rng, false);
        let x = pair.delta.atoms()[0].location.clone();
        let omega = if composed {
            let b2 = BallDomain::new(pair.circles[0].center.clone(), pair.circles[0].radius * 1.4).unwrap();
            sweep(&pair.omega, &b2, 512)
        } else {
            pair.omega.clone()
        };
        prop_assume!(check_sbh_balayage(&pair.delta, &omega, &g, TOL).unwrap().verdict);
        let v = forward_map(&omega, &x, &g, TOL).unwrap();
        prop_assert!(v.min_on_grid().unwrap() >= -10.0 * TOL);
        prop_assert!(v.max_abs_outside_infill().unwrap() <= 10.0 * TOL);
    }

    #[test]
    fn forward_map_is_affine(seed in any::<u64>(), t in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid();
        let b1 = disc(&mut rng);
        let x = point_in(&mut rng, &b1, 0.5);
        let b2 = BallDomain::new(b1.center.clone(), b1.radius * 1.3).unwrap();
        let (w1, w2) = (b1.harmonic_measure_quadrature(&x, 128).unwrap(), b2.harmonic_measure_quadrature(&x, 160).unwrap());
        let mix = DiscreteMeasure::combine(t, &w1, 1.0 - t, &w2).unwrap();
        let (v, v1, v2) = (
            forward_map(&mix, &x, &g, TOL).unwrap(),
            forward_map(&w1, &x, &g, TOL).unwrap(),
            forward_map(&w2, &x, &g, TOL).unwrap(),
        );
        for _ in 0..20 {
            let y = vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let lhs = v.value(&y).unwrap().to_f64();
            let rhs = t * v1.value(&y).unwrap().to_f64() + (1.0 - t) * v2.value(&y).unwrap().to_f64();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }
}

#[test]
fn reversed_harmonic_measure_is_not_a_jensen_balayage() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pair = balayage_pair(&mut rng, false);
    let r = check_sbh_balayage(&pair.omega, &pair.delta, &grid(), TOL).unwrap();
    assert!(!r.verdict);
    assert!(r.sbh_violation.unwrap() > 1.0);
}

#[test]
fn distinct_diracs_fail_every_statement() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let circles = [BallDomain::new(vec![0.0, 0.0], 1.0).unwrap()];
    let us: Vec<_> = (0..4).map(|_| random_u(&mut rng, &circles)).collect();
    let delta = DiscreteMeasure::dirac(&[0.31, -0.22]).unwrap();
    let omega = DiscreteMeasure::dirac(&[-0.43, 0.54]).unwrap();
    let r = main_lemma_harness(&delta, &omega, &grid(), &us, TOL).unwrap();
    assert!(!r.verdict);
    for v in [
        r.har_test_residual,
        Some(r.potential_residual),
        r.pj_residual,
        r.special_residual,
    ] {
        assert!(v.unwrap() > 10.0 * TOL, "{r:?}");
    }
    assert_eq!(r.consistency, Some(Consistency::Agree));
}

#[test]
fn small_circle_sweeps_to_a_concentric_circle() {
    let c = [0.07, -0.04];
    let inner = DiscreteMeasure::from_atoms(
        d2(),
        (0..128).map(|k| {
            let t = TAU * k as f64 / 128.0;
            (vec![c[0] + 0.3 * t.cos(), c[1] + 0.3 * t.sin()], 1.0 / 128.0)
        }),
    )
    .unwrap();
    let outer_ball = BallDomain::new(c.to_vec(), 1.1).unwrap();
    let outer = outer_ball.harmonic_measure_quadrature(&c, 512).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let circles = [BallDomain::new(c.to_vec(), 0.3).unwrap(), outer_ball];
    let us: Vec<_> = (0..6).map(|_| random_u(&mut rng, &circles)).collect();
    let r = main_lemma_harness(&inner, &outer, &grid(), &us, TOL).unwrap();
    assert!(r.verdict, "{r:?}");
    assert_eq!(r.consistency, Some(Consistency::Agree), "{r:?}");
}

#[test]
fn test_function_residual_is_bounded_by_coefficient_mass() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pair = balayage_pair(&mut rng, false);
    assert!(
        check_har_balayage(&pair.delta, &pair.omega, &grid(), TOL)
            .unwrap()
            .verdict
    );
    let coords = [HarmonicTestFunction::Coordinate(0), HarmonicTestFunction::Coordinate(1)];
    assert!(check_har_test_functions(&pair.delta, &pair.omega, &coords).unwrap() < 1e-9);
    let one = [HarmonicTestFunction::Constant(1.0)];
    let moved = pair.omega.scaled(1.5);
    let r = check_har_test_functions(&pair.delta, &moved, &one).unwrap();
    assert!((r - 0.5).abs() < 1e-12);
    for _ in 0..20 {
        let h = shared_harmonic(&mut rng);
        let norm: f64 = h.atoms().iter().map(|a| a.weight.abs()).sum();
        let box_region = Region::new(vec![-1.5, -1.5], vec![1.5, 1.5]).unwrap();
        let f = HarmonicTestFunction::KernelSum(CanonicalSubharmonic::harmonic(h, 0.0, box_region).unwrap());
        assert!(check_har_test_functions(&pair.delta, &pair.omega, &[f]).unwrap() <= TOL * norm);
    }
}

#[test]
fn shared_sources_bound_the_symmetric_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = grid();
    for _ in 0..5 {
        let pair = balayage_pair(&mut rng, false);
        let report = check_har_balayage(&pair.delta, &pair.omega, &g, TOL).unwrap();
        let h = shared_harmonic(&mut rng);
        let q = CanonicalSubharmonic::potential_of(&pair.delta, region())
            .unwrap()
            .with_harmonic_part(&h, 0.0)
            .unwrap();
        let p = CanonicalSubharmonic::potential_of(&pair.omega, region())
            .unwrap()
            .with_harmonic_part(&h, 0.0)
            .unwrap();
        let s = support_infill(&g, &[&pair.delta, &pair.omega]).unwrap();
        // atoms of u outside S, where the potentials agree
        let atoms: Vec<(Vec<f64>, f64)> = g
            .centers_outside(&s)
            .into_iter()
            .filter(|y| y[0].abs() < 1.8 && y[1].abs() < 1.8)
            .step_by(97)
            .map(|y| (vec![y[0] + 0.011, y[1] - 0.017], 0.5))
            .collect();
        let mu = DiscreteMeasure::from_atoms(d2(), atoms).unwrap();
        let u = CanonicalSubharmonic::potential_of(&mu, region()).unwrap();
        let r = symmetric_pj_residual(&u, &q, &p, &s, &g, 1e-9).unwrap();
        assert!(
            r.residual <= 10.0 * report.potential_residual * mu.mass().total + 1e-12,
            "{r:?} vs {report:?}"
        );
    }
}

#[test]
fn measure_and_classical_evaluators_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let g = grid();
    for _ in 0..10 {
        let pair = balayage_pair(&mut rng, false);
        let ball = &pair.circles[0];
        let x = pair.delta.atoms()[0].location.clone();
        let x0 = point_in(&mut rng, ball, 0.7);
        let u = CanonicalSubharmonic::kernel(&x0, region()).unwrap();
        let s_o = support_infill(&g, &[&pair.delta, &pair.omega]).unwrap();
        let m = measure_pj_residual(&u, &pair.delta, &pair.omega, &s_o, &g)
            .unwrap()
            .residual;
        let c = classical_pj_residual(&u, ball, &x, 512).unwrap().residual;
        assert!((m - c).abs() <= 2.0 * TOL);
        let asj = asj_pj_residual(&u, &pair.omega, &x, &g, TOL).unwrap();
        assert!(asj.residual < TOL);
        let v = forward_map(&pair.omega, &x, &g, TOL).unwrap();
        assert_eq!(asp_pj_residual(&u, &v).unwrap(), asj);
    }
}

#[test]
fn arens_singer_identity_edge_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = grid();
    let pair = balayage_pair(&mut rng, false);
    let x = pair.delta.atoms()[0].location.clone();
    // harmonic u: the Riesz term vanishes
    let h = CanonicalSubharmonic::harmonic(shared_harmonic(&mut rng), 0.3, region()).unwrap();
    assert!(asj_pj_residual(&h, &pair.omega, &x, &g, TOL).unwrap().residual < TOL);
    // ω = δ_x: V ≡ 0
    let u = random_u(&mut rng, &pair.circles);
    let v0 = forward_map(&pair.delta, &x, &g, TOL).unwrap();
    assert_eq!(asp_pj_residual(&u, &v0).unwrap().residual, 0.0);
    // atom at the pole: both sides −∞
    let k = CanonicalSubharmonic::kernel(&x, region()).unwrap();
    let r = asj_pj_residual(&k, &pair.omega, &x, &g, TOL).unwrap();
    assert!(r.both_neg_inf);
    assert_eq!((r.lhs, r.rhs), (ExtReal::NegInf, ExtReal::NegInf));
}
