use std::f64::consts::PI;

use dcsim::correlation::{single_count_intensity, BeamParameters, Protocol, ScreenGrid};
use dcsim::geometry::{incidence_angle_phi, ExperimentLayout, LayoutSpec};
use dcsim::mode_space::{
    trace_distance, Basis, DensityOperator, Mode, Projector, SourcePoint, TwoPhotonState,
};
use dcsim::oracle::{
    continuum_marginal_pattern, max_abs_diff, quadrature_average, BobOptics, ContinuumModel,
};
use dcsim::quadrature::{simpson_average, WeightProfile};
use dcsim::scenarios::{monte_carlo_counts, MonteCarloOptions};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn amplitudes() -> impl Strategy<Value = [[Complex64; 4]; 4]> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16).prop_map(|v| {
        let mut a = [[Complex64::new(0.0, 0.0); 4]; 4];
        for (k, (re, im)) in v.into_iter().enumerate() {
            a[k / 4][k % 4] = Complex64::new(re, im);
        }
        a
    })
}

fn density(mix: &[([[Complex64; 4]; 4], f64)]) -> DensityOperator {
    let mut m = DMatrix::<Complex64>::zeros(16, 16);
    let total: f64 = mix.iter().map(|(_, w)| w).sum();
    for (amps, w) in mix {
        let st = TwoPhotonState::from_amplitudes(*amps, 0.1).unwrap().normalized().unwrap();
        let v = st.to_vector();
        m += (&v * v.adjoint()).scale(w / total);
    }
    // symmetrize away rounding
    let h = (&m + m.adjoint()).scale(0.5);
    DensityOperator::from_matrix(Basis::SignalIdler, h).unwrap()
}

fn layout_strategy() -> impl Strategy<Value = LayoutSpec> {
    (0.05f64..0.3, 1e-4f64..5e-3, 0.2f64..2.0, 1e-5f64..1e-3, 0.2f64..3.0).prop_map(
        |(g, a, f, s, big_d)| LayoutSpec {
            filter_focal_length: g,
            source_half_separation: a,
            alice_focal_length: f,
            slit_separation: s,
            screen_distance: big_d,
            interferometer_distance: 4.0 * g,
            ..LayoutSpec::default()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distinct_alice_outcomes_annihilate(amps in amplitudes()) {
        let st = TwoPhotonState::from_amplitudes(amps, 0.1).unwrap();
        let zero = Complex64::new(0.0, 0.0);
        for (a, b) in [
            (Projector::image_p(), Projector::image_q()),
            (Projector::image_q(), Projector::image_p()),
            (Projector::focal_side(), Projector::focal_down()),
            (Projector::focal_down(), Projector::focal_side()),
        ] {
            let out = st.project(&a).project(&b);
            prop_assert!(out.amplitudes().iter().flatten().all(|z| *z == zero));
        }
        for p in [Projector::image_p(), Projector::focal_down(), Projector::horizontal_idler()] {
            prop_assert_eq!(st.project(&p).project(&p), st.project(&p));
        }
    }

    #[test]
    fn outcome_pairs_are_complete_on_the_source_state(eps in 1e-3f64..0.5) {
        let st = TwoPhotonState::canonical(eps).unwrap();
        for (a, b) in [
            (Projector::image_p(), Projector::image_q()),
            (Projector::focal_side(), Projector::focal_down()),
        ] {
            let (x, y) = (st.project(&a), st.project(&b));
            for s in Mode::SIGNAL {
                for i in Mode::IDLER {
                    prop_assert_eq!(x.amplitude(s, i) + y.amplitude(s, i), st.amplitude(s, i));
                }
            }
        }
    }

    #[test]
    fn trace_distance_is_a_metric(
        a in amplitudes(), b in amplitudes(), c in amplitudes(), w in 0.05f64..0.95,
    ) {
        let ra = density(&[(a, 1.0)]);
        let rb = density(&[(a, w), (b, 1.0 - w)]);
        let rc = density(&[(c, 1.0)]);
        let ab = trace_distance(&ra, &rb).unwrap();
        let ba = trace_distance(&rb, &ra).unwrap();
        let bc = trace_distance(&rb, &rc).unwrap();
        let ac = trace_distance(&ra, &rc).unwrap();
        prop_assert!((ab - ba).abs() < 1e-10);
        prop_assert!(ac <= ab + bc + 1e-10);
        prop_assert!(trace_distance(&ra, &ra).unwrap() < 1e-10);
        prop_assert!(ab > 1e-10);
    }

    #[test]
    fn layout_identities(spec in layout_strategy()) {
        let l = ExperimentLayout::new(spec).unwrap();
        let rel = (l.d_prime() - l.d_prime_via_u()).abs() / l.d_prime();
        prop_assert!(rel < 1e-12);
        let p = incidence_angle_phi(&l, SourcePoint::P);
        let q = incidence_angle_phi(&l, SourcePoint::Q);
        if let (Ok(p), Ok(q)) = (p, q) {
            prop_assert!((p + q - PI).abs() < 1e-15);
        }
    }

    #[test]
    fn quadratures_agree(phi0 in 0.05f64..1.4, knots in prop::collection::vec(0.0f64..2.0, 3..8)) {
        let (lo, hi) = (phi0, PI - phi0);
        let n = knots.len();
        let table: Vec<_> = knots
            .iter()
            .enumerate()
            .map(|(i, &w)| (lo + (hi - lo) * i as f64 / (n - 1) as f64, w + 0.01))
            .collect();
        for w in [WeightProfile::Flat, WeightProfile::SinSquared, WeightProfile::tabulated(table).unwrap()] {
            for f in [f64::sin as fn(f64) -> f64, |p: f64| 1.0 + p.sin(), |p: f64| p.cos().powi(2)] {
                let a = simpson_average(f, &w, lo, hi).unwrap();
                let b = quadrature_average(f, &w, lo, hi).unwrap();
                prop_assert!((a - b).abs() < 1e-8, "{} vs {}", a, b);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn pattern_shape_under_any_weight(
        phi0_deg in 5.0f64..60.0,
        knots in prop::collection::vec(0.0f64..1.0, 2..6),
    ) {
        let spec = LayoutSpec { phi0: phi0_deg.to_radians(), ..LayoutSpec::default() };
        let l = ExperimentLayout::new(spec).unwrap();
        let (lo, hi) = l.phi_range();
        let n = knots.len();
        let table: Vec<_> = knots
            .iter()
            .enumerate()
            .map(|(i, &w)| (lo + (hi - lo) * i as f64 / (n - 1) as f64, w + 0.05))
            .collect();
        let w = WeightProfile::tabulated(table).unwrap();
        let grid = ScreenGrid::new(&l, 401).unwrap();
        let beam = BeamParameters::default();
        let p = single_count_intensity(&l, Protocol::Position, &w, &beam, &grid).unwrap();
        let m = single_count_intensity(&l, Protocol::Momentum, &w, &beam, &grid).unwrap();
        prop_assert!(p.intensities().iter().chain(m.intensities().iter()).all(|&v| v >= 0.0));
        prop_assert!((m.visibility.unwrap() - 1.0).abs() < 1e-9);
        // strictly below one: the weight is spread over an interval
        let vp = p.visibility.unwrap();
        prop_assert!(vp < 1.0 - 1e-6);
        let mean_sin = quadrature_average(f64::sin, &w, lo, hi).unwrap();
        prop_assert!((vp - mean_sin).abs() < 1e-8);
    }
}

#[test]
fn visibility_reaches_one_only_for_a_perpendicular_point_mass() {
    let l = ExperimentLayout::new(LayoutSpec::default()).unwrap();
    let grid = ScreenGrid::new(&l, 401).unwrap();
    let beam = BeamParameters::default();
    let at = |phi: f64| {
        single_count_intensity(&l, Protocol::Position, &WeightProfile::PointMass { phi }, &beam, &grid)
            .unwrap()
            .visibility
            .unwrap()
    };
    assert!((at(PI / 2.0) - 1.0).abs() < 1e-12);
    assert!(at(1.2) < 1.0 - 1e-3);
}

#[test]
fn filtered_branch_flux_is_half() {
    let psi = TwoPhotonState::canonical(0.1).unwrap().normalized().unwrap();
    let mb = Projector::horizontal_idler();
    let position: f64 = [Projector::image_p(), Projector::image_q()]
        .iter()
        .map(|p| psi.project(p).project(&mb).norm_sqr())
        .sum();
    let momentum: f64 = [Projector::focal_side(), Projector::focal_down()]
        .iter()
        .map(|p| psi.project(p).project(&mb).norm_sqr())
        .sum();
    assert!((position - 0.5).abs() < 1e-15);
    assert!((momentum - 0.5).abs() < 1e-15);
}

#[test]
fn monte_carlo_error_shrinks_as_inverse_root_n() {
    let l = ExperimentLayout::new(LayoutSpec::default()).unwrap();
    let grid = ScreenGrid::new(&l, 2001).unwrap();
    let pattern = single_count_intensity(
        &l,
        Protocol::Position,
        &WeightProfile::Flat,
        &BeamParameters::default(),
        &grid,
    )
    .unwrap();
    let truth = pattern.visibility.unwrap();
    let opts = MonteCarloOptions { resamples: 10, ..Default::default() };
    let rms = |n: u64| {
        let sq: f64 = (0..40)
            .map(|seed| {
                let r = monte_carlo_counts(&pattern, n, 1000 + seed, &opts).unwrap();
                (r.estimated_visibility - truth).powi(2)
            })
            .sum();
        (sq / 40.0).sqrt()
    };
    let e = [rms(1_000), rms(10_000), rms(100_000)];
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        // √10 ≈ 3.16, loose bounds for 40 seeds
        assert!((2.0..5.0).contains(&ratio), "errors {e:?}");
    }
}

#[test]
fn continuum_converges_in_alice_pixels() {
    let l = ExperimentLayout::new(LayoutSpec::default()).unwrap();
    for optics in [BobOptics::Diffracting, BobOptics::Geometric] {
        for setting in [Protocol::Position, Protocol::Momentum] {
            let model = |n| ContinuumModel {
                n_source_points: 2,
                n_alice_points: n,
                include_filter: true,
                bob_optics: optics,
                grid_points: 201,
                ..ContinuumModel::default()
            };
            let a = continuum_marginal_pattern(&model(64), &l, setting).unwrap();
            let b = continuum_marginal_pattern(&model(128), &l, setting).unwrap();
            let peak = a.intensities().iter().cloned().fold(0.0, f64::max);
            let d = max_abs_diff(&a, &b).unwrap() / peak;
            assert!(d < 1e-6, "{optics:?} {setting:?}: {d:e}");
        }
    }
}

#[test]
fn unfiltered_complete_difference_vanishes_on_every_grid() {
    let l = ExperimentLayout::new(LayoutSpec::default()).unwrap();
    for grid_points in [101, 401, 2001] {
        for n_source_points in [2, 5] {
            let model = ContinuumModel {
                n_source_points,
                include_filter: false,
                grid_points,
                ..ContinuumModel::default()
            }
            .with_complete_alice();
            let a = continuum_marginal_pattern(&model, &l, Protocol::Position).unwrap();
            let b = continuum_marginal_pattern(&model, &l, Protocol::Momentum).unwrap();
            let d = max_abs_diff(&a, &b).unwrap();
            assert!(d < 1e-12, "grid {grid_points}, n {n_source_points}: {d:e}");
        }
    }
}
