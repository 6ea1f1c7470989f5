mod common;

use common::{max_abs_diff, naive_dft_centered, ncc, random_complex, uniform_plane};
use ndarray::Array2;
use proptest::prelude::*;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex64;
use sarfx::attack::simulate_pristine;
use sarfx::raster::AmplitudeImage;
use sarfx::rng::StreamKey;
use sarfx::speckle::DEFAULT_SIGMA_S;
use sarfx::spectral::{centered_frequency, mirror_index};
use sarfx::sysid::{
    estimate_direct, estimate_transfer_function, fit_gaussian, fit_raised_cosine, gaussian_response, normalize_energy,
    raised_cosine_transfer_function, GaussianAxis, GaussianFitParams, RaisedCosineAxis, RaisedCosineFitParams, Sources,
    Strategy, TransferFunction, PEAK_TOL, SYMMETRY_TOL,
};
use sarfx::Error;

fn separable(h: usize, w: usize, fx: impl Fn(f64) -> f64, fy: impl Fn(f64) -> f64) -> Array2<f64> {
    Array2::from_shape_fn((h, w), |(r, c)| {
        fy(centered_frequency(r, h)) * fx(centered_frequency(c, w))
    })
}

fn energy(plane: &Array2<f64>) -> f64 {
    plane.iter().map(|v| v * v).sum()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn assert_constraints(h: &TransferFunction) {
    let v = h.values();
    let (rows, cols) = v.dim();
    assert!(v.iter().all(|&x| x >= 0.0));
    for ((r, c), &x) in v.indexed_iter() {
        assert!((x - v[(mirror_index(r, rows), mirror_index(c, cols))]).abs() <= SYMMETRY_TOL);
    }
    let max = v.iter().copied().fold(f64::MIN, f64::max);
    assert!((max - 1.0).abs() <= PEAK_TOL);
}

#[test]
fn raised_cosine_fit_recovers_parameters() {
    let n = 256;
    let nyq = n as f64 / 2.0;
    let ax = RaisedCosineAxis {
        a: 0.6,
        b: 0.4,
        cutoff: 0.35 * nyq,
    };
    let ay = RaisedCosineAxis {
        a: 0.6,
        b: 0.4,
        cutoff: 0.3 * nyq,
    };
    let plane = separable(n, n, |f| ax.eval(f), |f| ay.eval(f));
    let scale = energy(&plane).sqrt();
    let fit = fit_raised_cosine(&normalize_energy(&plane).unwrap()).unwrap();
    // gains are reported for the unit-energy target
    let g = scale.sqrt().recip();
    let p = fit.params;
    for (got, want) in [(p.x, ax), (p.y, ay)] {
        assert!(rel(got.a, want.a * g) < 0.01, "A {} vs {}", got.a, want.a * g);
        assert!(rel(got.b, want.b * g) < 0.01, "B {} vs {}", got.b, want.b * g);
        assert!(
            rel(got.cutoff, want.cutoff) < 0.01,
            "fc {} vs {}",
            got.cutoff,
            want.cutoff
        );
    }
    assert!(fit.residual < 1e-6);
}

#[test]
fn gaussian_fit_recovers_parameters() {
    let n = 256;
    let gx = GaussianAxis {
        gain: 1.0,
        mean: 3.0,
        std: 20.0,
    };
    let gy = GaussianAxis {
        gain: 1.0,
        mean: -2.0,
        std: 28.0,
    };
    let plane = separable(n, n, |f| gx.eval(f), |f| gy.eval(f));
    let scale = energy(&plane).sqrt();
    let fit = fit_gaussian(&normalize_energy(&plane).unwrap()).unwrap();
    let gain = scale.sqrt().recip();
    let p = fit.params;
    for (got, want) in [(p.x, gx), (p.y, gy)] {
        assert!(rel(got.gain, gain) < 0.01);
        assert!(rel(got.mean, want.mean) < 0.01, "mean {} vs {}", got.mean, want.mean);
        assert!(rel(got.std, want.std) < 0.01, "std {} vs {}", got.std, want.std);
    }
    assert!(fit.residual < 1e-6);
}

fn noisy(plane: &Array2<f64>, level: f64, seed: u64) -> Array2<f64> {
    let peak = plane.iter().copied().fold(0.0, f64::max);
    let normal = Normal::new(0.0, level * peak).unwrap();
    let mut rng = StreamKey::new(seed, 77).rng();
    plane.mapv(|v| (v + normal.sample(&mut rng)).max(0.0))
}

#[test]
fn raised_cosine_cutoff_survives_noise() {
    let n = 256;
    let axis = RaisedCosineAxis {
        a: 0.6,
        b: 0.4,
        cutoff: 0.35 * 128.0,
    };
    let plane = separable(n, n, |f| axis.eval(f), |f| axis.eval(f));
    let fit = fit_raised_cosine(&normalize_energy(&noisy(&plane, 0.01, 1)).unwrap()).unwrap();
    assert!(rel(fit.params.x.cutoff, axis.cutoff) < 0.02, "{}", fit.params.x.cutoff);
    assert!(rel(fit.params.y.cutoff, axis.cutoff) < 0.02, "{}", fit.params.y.cutoff);
}

#[test]
fn direct_estimate_is_a_fixed_point_for_real_even_input() {
    let n = 64;
    // symmetrized random bumps on a Gaussian base
    let base = separable(n, n, |f| (-f * f / 200.0).exp(), |f| (-f * f / 300.0).exp());
    let noise = uniform_plane(n, n, 0.1, 5);
    let fk = Array2::from_shape_fn((n, n), |(r, c)| {
        base[(r, c)] + 0.5 * (noise[(r, c)] + noise[(mirror_index(r, n), mirror_index(c, n))])
    });
    let max = fk.iter().copied().fold(0.0, f64::max);
    let h = estimate_direct(&fk).unwrap();
    assert!(max_abs_diff(h.values(), &fk.mapv(|v| v / max)) < 1e-10);
    assert_eq!(h.strategy(), Strategy::Direct);
}

#[test]
fn direct_estimate_matches_composed_oracle() {
    let fk = uniform_plane(8, 8, 3.0, 9);
    let h = estimate_direct(&fk).unwrap();
    let spec = fk.mapv(|v| Complex64::new(v, 0.0));
    // naive_dft_centered expects natural-order input; move DC back first
    let impulse = naive_dft_centered(&common::uncenter(&spec), true);
    let impulse = common::uncenter(&impulse).mapv(|z| Complex64::new(z.re, 0.0));
    let mag = naive_dft_centered(&impulse, false).mapv(|z| z.norm());
    let max = mag.iter().copied().fold(0.0, f64::max);
    assert!(max_abs_diff(h.values(), &mag.mapv(|v| v / max)) < 1e-10);
}

#[test]
fn direct_estimate_is_centrally_symmetric() {
    let fk = uniform_plane(9, 12, 1.0, 10);
    assert_constraints(&estimate_direct(&fk).unwrap());
}

#[test]
fn direct_estimate_rejects_zero_input() {
    assert!(matches!(
        estimate_direct(&Array2::zeros((4, 4))),
        Err(Error::Degenerate(_))
    ));
}

#[test]
fn fitted_responses_are_separable() {
    let params = GaussianFitParams {
        x: GaussianAxis {
            gain: 0.7,
            mean: 1.5,
            std: 6.0,
        },
        y: GaussianAxis {
            gain: 1.3,
            mean: -0.5,
            std: 9.0,
        },
    };
    let h = gaussian_response(&params, 40, 50);
    let (r0, c0) = (20, 25);
    for ((r, c), &v) in h.indexed_iter() {
        assert!((v * h[(r0, c0)] - h[(r, c0)] * h[(r0, c)]).abs() < 1e-12);
    }
    let rc = RaisedCosineAxis {
        a: 0.6,
        b: 0.4,
        cutoff: 12.0,
    };
    let t = raised_cosine_transfer_function(&RaisedCosineFitParams { x: rc, y: rc }, 40, 50).unwrap();
    let t = t.values();
    for ((r, c), &v) in t.indexed_iter() {
        assert!((v * t[(r0, c0)] - t[(r, c0)] * t[(r0, c)]).abs() < 1e-12);
    }
}

#[test]
fn identical_sources_match_a_single_source() {
    let img = random_complex(48, 40, 1);
    let one = estimate_transfer_function(&Sources::Complex(vec![img.clone()]), Strategy::Direct, None).unwrap();
    let three = estimate_transfer_function(&Sources::Complex(vec![img.clone(); 3]), Strategy::Direct, None).unwrap();
    assert!(max_abs_diff(one.values(), three.values()) < 1e-12);
}

#[test]
fn source_order_does_not_matter() {
    let a = random_complex(32, 32, 2);
    let b = random_complex(32, 32, 4);
    let c = random_complex(32, 32, 6);
    let abc = estimate_transfer_function(
        &Sources::Complex(vec![a.clone(), b.clone(), c.clone()]),
        Strategy::Direct,
        None,
    )
    .unwrap();
    let cab = estimate_transfer_function(&Sources::Complex(vec![c, a, b]), Strategy::Direct, None).unwrap();
    assert!(max_abs_diff(abc.values(), cab.values()) < 1e-12);
}

#[test]
fn known_response_is_kept_unchanged() {
    let rc = RaisedCosineAxis {
        a: 0.6,
        b: 0.4,
        cutoff: 10.0,
    };
    let values = raised_cosine_transfer_function(&RaisedCosineFitParams { x: rc, y: rc }, 32, 32)
        .unwrap()
        .values()
        .clone();
    let h = TransferFunction::known(values.clone()).unwrap();
    assert_eq!(h.values(), &values);
    assert_eq!(h.strategy(), Strategy::Known);
    let src = Sources::Complex(vec![random_complex(32, 32, 1)]);
    assert!(matches!(
        estimate_transfer_function(&src, Strategy::Known, None),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn amplitude_sources_only_support_direct() {
    let amp = AmplitudeImage::from_values(uniform_plane(32, 32, 100.0, 3)).unwrap();
    let src = Sources::Amplitude(amp);
    for s in [Strategy::Gaussian, Strategy::RaisedCosine] {
        match estimate_transfer_function(&src, s, None) {
            Err(Error::Unsupported(msg)) => assert!(msg.contains("direct")),
            other => panic!("{s}: {other:?}"),
        }
    }
    assert_constraints(&estimate_transfer_function(&src, Strategy::Direct, None).unwrap());
}

#[test]
fn curve_fit_strategies_produce_valid_responses() {
    let rc = RaisedCosineAxis {
        a: 0.6,
        b: 0.4,
        cutoff: 0.4 * 32.0,
    };
    let h_true = raised_cosine_transfer_function(&RaisedCosineFitParams { x: rc, y: rc }, 64, 64).unwrap();
    let refl = AmplitudeImage::filled(64, 64, 200.0).unwrap();
    let src = Sources::Complex(vec![simulate_pristine(&refl, &h_true, DEFAULT_SIGMA_S, 1).unwrap()]);
    for s in [Strategy::Gaussian, Strategy::RaisedCosine] {
        let h = estimate_transfer_function(&src, s, None).unwrap();
        assert_constraints(&h);
        assert_eq!(h.fits().len(), 1);
    }
}

#[test]
fn three_speckled_sources_recover_the_system() {
    let n = 256;
    let rc = RaisedCosineAxis {
        a: 0.6,
        b: 0.4,
        cutoff: 0.4 * (n / 2) as f64,
    };
    let h_true = raised_cosine_transfer_function(&RaisedCosineFitParams { x: rc, y: rc }, n, n).unwrap();
    let refl = AmplitudeImage::filled(n, n, 300.0).unwrap();
    let sources = (0..3)
        .map(|s| simulate_pristine(&refl, &h_true, DEFAULT_SIGMA_S, 100 + s).unwrap())
        .collect();
    let h = estimate_transfer_function(&Sources::Complex(sources), Strategy::Direct, None).unwrap();
    let r = ncc(h.values(), h_true.values());
    assert!(r >= 0.95, "NCC {r:.4}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_estimate_satisfies_the_constraints(h in 4usize..40, w in 4usize..40, seed in any::<u64>()) {
        let src = Sources::Complex(vec![random_complex(h, w, seed)]);
        let tf = estimate_transfer_function(&src, Strategy::Direct, None).unwrap();
        assert_constraints(&tf);
    }
}
