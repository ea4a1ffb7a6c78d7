use num_complex::Complex64;
use proptest::prelude::*;

use vlc_coverage::analytic::{sinr_coverage_typical_curve, CoverageEngine, Scenario};
use vlc_coverage::channel::{derive_constants, NetworkParams};
use vlc_coverage::geometry::Vec2;
use vlc_coverage::quadrature::QuadratureSpec;
use vlc_coverage::simulator::{self, Location, Mode, SimSetup};

fn engine(y: Vec2, k: usize, params: NetworkParams) -> CoverageEngine {
    let sc = Scenario::new(params, y).unwrap();
    CoverageEngine::new(&sc, k, QuadratureSpec::default()).unwrap()
}

fn setup(k: usize) -> SimSetup {
    let p = NetworkParams::default();
    SimSetup::new(&p, derive_constants(&p).unwrap(), k, Mode::Independent).unwrap()
}

#[test]
fn laplace_transform_matches_simulation() {
    let y = Vec2::new(9.0, 4.0);
    let e = engine(y, 1, NetworkParams::default());
    let samples = simulator::sample_interference(&setup(1), Location::Fixed(y), 20_000, 3).unwrap();
    for s in [3e4, 1e5, 3e5] {
        let want = e.laplace_interference(Complex64::new(s, 0.0)).re;
        let vals: Vec<f64> = samples.iter().map(|i| (-s * i).exp()).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
        assert!(
            (mean - want).abs() < 4.0 * sd / (vals.len() as f64).sqrt() + 1e-6,
            "s={s}: {mean} vs {want}"
        );
    }
}

#[test]
fn mean_interference_matches_simulation() {
    for y in [Vec2::ZERO, Vec2::new(9.0, 9.0)] {
        let e = engine(y, 1, NetworkParams::default());
        let samples = simulator::sample_interference(&setup(1), Location::Fixed(y), 20_000, 8).unwrap();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let sd = (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / samples.len() as f64).sqrt();
        let want = e.mean_interference();
        assert!(
            (mean - want).abs() < 4.0 * sd / (samples.len() as f64).sqrt(),
            "{mean} vs {want}"
        );
    }
}

#[test]
fn typical_user_matches_simulation() {
    let p = NetworkParams::default();
    let c = derive_constants(&p).unwrap();
    let taus = [1.0, 2.0];
    let a = sinr_coverage_typical_curve(&p, &c, &taus, 1, 8, QuadratureSpec::default()).unwrap();
    let m = simulator::estimate_coverage(&setup(1), Location::Typical, &taus, 40_000, 21).unwrap();
    for i in 0..taus.len() {
        assert!(
            (a[i] - m.values[i]).abs() <= 0.01f64.max(3.0 * m.ci_halfwidth[i]),
            "{a:?} vs {:?}",
            m.values
        );
    }
}

#[test]
fn center_and_corner_reference_values() {
    let p = NetworkParams::default();
    let corner = engine(Vec2::new(9.0, 9.0), 0, p.clone()).coverage(1.0).unwrap();
    let center = engine(Vec2::ZERO, 0, p).coverage(1.0).unwrap();
    // independent high-accuracy evaluation of the same integral
    assert!((corner - 0.76688).abs() < 2e-4, "{corner}");
    assert!((center - 0.27427).abs() < 2e-4, "{center}");
}

fn room_point() -> impl Strategy<Value = Vec2> {
    (-9.0f64..=9.0, -9.0f64..=9.0).prop_map(|(x, y)| Vec2::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn coverage_is_a_nonincreasing_probability(y in room_point(), t1 in 1.0f64..20.0, f in 1.0f64..4.0) {
        let e = engine(y, 1, NetworkParams::default());
        let a = e.coverage(t1).unwrap();
        let b = e.coverage(t1 * f).unwrap();
        prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        prop_assert!(b <= a + 2e-4, "{} then {}", a, b);
    }

    #[test]
    fn coverage_has_square_symmetry(y in room_point(), tau in 1.0f64..8.0) {
        let p = NetworkParams::default();
        let base = engine(y, 1, p.clone()).coverage(tau).unwrap();
        for img in [Vec2::new(y.y, y.x), Vec2::new(-y.x, y.y), Vec2::new(y.x, -y.y)] {
            let v = engine(img, 1, p.clone()).coverage(tau).unwrap();
            prop_assert!((v - base).abs() < 2e-4, "{:?}: {} vs {}", img, v, base);
        }
    }

    #[test]
    fn absorbing_walls_reduce_to_direct_path(y in room_point(), tau in 1.0f64..8.0, k in 1usize..=3) {
        let p = NetworkParams { eta: 0.0, ..NetworkParams::default() };
        let direct = engine(y, 0, p.clone()).coverage(tau).unwrap();
        let with_k = engine(y, k, p).coverage(tau).unwrap();
        prop_assert_eq!(direct, with_k);
    }

    #[test]
    fn characteristic_function_bounded(y in room_point(), lt in 2.0f64..12.0) {
        let e = engine(y, 2, NetworkParams::default());
        let v = e.characteristic(10f64.powf(lt));
        prop_assert!(v.norm() <= 1.0 + 1e-12);
    }
}
