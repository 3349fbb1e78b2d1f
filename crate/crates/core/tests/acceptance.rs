//! Acceptance suite: one test per shipping criterion, with the target
//! values frozen into the source. Each test prints its verdict line, so
//! `cargo test --test acceptance -- --nocapture` doubles as a report.
//!
//! The oracles here (Hansen integral, bisection on it) are written from
//! scratch and share no code with the production special-function paths.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use wavesrc::dsm::{estimate_disc, indicator, indicator_field};
use wavesrc::expansion::{BasisIndex, DiscBasis, ForwardOperator};
use wavesrc::forward::{far_field, Aperture, FarFieldData, NoiseTag};
use wavesrc::mcmc::{run_prior_chain, PriorSpec, SamplerConfig};
use wavesrc::pipeline::{evaluate_expansion, run_pipeline, simulate_measured, ExperimentConfig};
use wavesrc::source::{build_mesh, build_mesh_staggered, SourceSamples, SourceSpec};
use wavesrc::special::{bessel_j, bessel_zero, Parity};
use wavesrc::{Disc, Region};

// ---- independent oracles ---------------------------------------------

/// Hansen integral J_n(y) = (1/pi) int_0^pi cos(y sin t - n t) dt via
/// adaptive Simpson quadrature.
fn hansen(n: usize, y: f64) -> f64 {
    let f = |t: f64| (y * t.sin() - n as f64 * t).cos();
    simpson(&f, 0.0, std::f64::consts::PI, 1e-13, 40) / std::f64::consts::PI
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, depth)
}

/// First positive zero of J_n inside [lo, hi], bisecting the Hansen
/// integral itself.
fn hansen_zero(n: usize, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = hansen(n, lo);
    assert!(f_lo * hansen(n, hi) < 0.0, "oracle bracket must straddle the zero");
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let f_mid = hansen(n, mid);
        if f_lo * f_mid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    0.5 * (lo + hi)
}

// ---- criteria ---------------------------------------------------------

#[test]
fn criterion_01_bessel_matches_the_hansen_integral_and_zero_oracles() {
    let mut rng = ChaCha20Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(0..=8usize);
        let y = rng.random_range(-30.0..30.0);
        let got = bessel_j(n, y).unwrap();
        // the Hansen form holds for y >= 0; use the reflection J_n(-y) = (-1)^n J_n(y)
        let sign = if y < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
        let want = sign * hansen(n, y.abs());
        worst = worst.max((got - want).abs());
    }
    assert!(worst < 1e-10, "max |bessel_j - Hansen| = {worst:.3e}");

    let q01 = hansen_zero(0, 2.0, 3.0);
    let q11 = hansen_zero(1, 3.5, 4.5);
    let d0 = (bessel_zero(1, 0).unwrap() - q01).abs();
    let d1 = (bessel_zero(1, 1).unwrap() - q11).abs();
    assert!(d0 < 1e-10, "q_10 off by {d0:.3e}");
    assert!(d1 < 1e-10, "q_11 off by {d1:.3e}");
    println!(
        "criterion 01: PASS  max series/recurrence deviation {worst:.2e}; zero deviations {d0:.2e}, {d1:.2e}"
    );
}

#[test]
fn criterion_02_orthonormality_literal_reading_fails_verified_structure_holds() {
    // The advertised normalization 1/(sqrt(pi) R J_{n+1}(q_mn)) is not an
    // orthonormal scaling: the squared L2 norm of cos/sin(n theta) halves
    // for n >= 1. The literal criterion (Gram = identity within 1e-3) is
    // therefore unattainable; this test pins the structure the family
    // actually has, and asserts that the literal reading fails by exactly
    // the predicted margin.
    let disc = Disc::centered(0.9).unwrap();
    let basis = DiscBasis::new(BasisIndex::new(5, 2).unwrap(), disc).unwrap();
    let mesh = build_mesh(&Region::Disc(disc), 0.005).unwrap();
    let count = basis.index().len();
    assert_eq!(count, 25);

    let values: Vec<Vec<f64>> = basis
        .functions()
        .iter()
        .map(|q| mesh.centroids().iter().map(|&c| q.eval(c)).collect())
        .collect();
    let mut worst_structure: f64 = 0.0;
    let mut worst_literal: f64 = 0.0;
    for i in 0..count {
        for j in i..count {
            let inner: f64 = values[i]
                .iter()
                .zip(&values[j])
                .zip(mesh.areas())
                .map(|((a, b), area)| a * b * area)
                .sum();
            let n = basis.index().entries()[i].1;
            let expected = if i != j {
                0.0
            } else if n == 0 {
                1.0
            } else {
                0.5
            };
            worst_structure = worst_structure.max((inner - expected).abs());
            let literal = if i == j { 1.0 } else { 0.0 };
            worst_literal = worst_literal.max((inner - literal).abs());
        }
    }
    assert!(
        worst_structure < 1e-3,
        "Gram deviates from diag(1 for n=0, 1/2 for n>=1) by {worst_structure:.3e}"
    );
    assert!(
        worst_literal > 0.49,
        "the literal identity-Gram reading unexpectedly held (deviation {worst_literal:.3e})"
    );
    println!(
        "criterion 02: FAIL (literal: max |Gram - I| = {worst_literal:.3}), PASS (verified structure: \
         diag 1 for n=0 and 1/2 for n>=1, within {worst_structure:.2e})"
    );
}

#[test]
fn criterion_03_forward_map_is_linear_and_second_order_accurate() {
    // linearity of the far-field quadrature in the source samples
    let spec = SourceSpec::example(2).unwrap();
    let mesh = build_mesh(&spec.support(), 0.05).unwrap();
    let f = SourceSamples::from_spec(&spec, mesh.clone()).unwrap();
    let g_vals: Vec<f64> = mesh.centroids().iter().map(|c| 0.3 + c[0] - 0.7 * c[1]).collect();
    let g = SourceSamples::from_values(mesh.clone(), g_vals.clone()).unwrap();
    let (alpha, beta) = (1.7, -2.3);
    let combo_vals: Vec<f64> =
        f.values().iter().zip(&g_vals).map(|(a, b)| alpha * a + beta * b).collect();
    let combo = SourceSamples::from_values(mesh, combo_vals).unwrap();
    let mut worst_ff: f64 = 0.0;
    for (k, theta) in [(1.0, 0.0), (2.7, 0.9), (11.0, 4.4)] {
        let lhs = far_field(&combo, k, theta).unwrap();
        let rhs = alpha * far_field(&f, k, theta).unwrap() + beta * far_field(&g, k, theta).unwrap();
        worst_ff = worst_ff.max((lhs - rhs).norm());
    }
    assert!(worst_ff < 1e-12, "far_field linearity violated by {worst_ff:.3e}");

    // linearity of the assembled operator in the coefficients
    let disc = Disc::centered(1.0).unwrap();
    let basis = DiscBasis::new(BasisIndex::new(3, 1).unwrap(), disc).unwrap();
    let op_mesh = build_mesh_staggered(&Region::Disc(disc), 0.1, 0.5).unwrap();
    let op = ForwardOperator::assemble(
        &basis,
        &Aperture::named("G2").unwrap(),
        &[1.0, 2.0],
        &op_mesh,
    )
    .unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(33);
    let a: Vec<f64> = (0..op.ncols()).map(|_| rng.random_range(-2.0..2.0)).collect();
    let b: Vec<f64> = (0..op.ncols()).map(|_| rng.random_range(-2.0..2.0)).collect();
    let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| alpha * x + beta * y).collect();
    let fa = op.apply(&a).unwrap();
    let fb = op.apply(&b).unwrap();
    let fc = op.apply(&combo).unwrap();
    let worst_op = fc
        .iter()
        .zip(fa.iter().zip(&fb))
        .map(|(c, (x, y))| (c - (alpha * x + beta * y)).norm())
        .fold(0.0_f64, f64::max);
    assert!(worst_op < 1e-12, "operator linearity violated by {worst_op:.3e}");

    // quadrature order under mesh refinement, against a fine reference
    let (k, theta) = (3.0, 0.7);
    let reference = {
        let mesh = build_mesh(&spec.support(), 0.005).unwrap();
        far_field(&SourceSamples::from_spec(&spec, mesh).unwrap(), k, theta).unwrap()
    };
    let errors: Vec<f64> = [0.08, 0.04, 0.02]
        .iter()
        .map(|&h| {
            let mesh = build_mesh(&spec.support(), h).unwrap();
            let ff =
                far_field(&SourceSamples::from_spec(&spec, mesh).unwrap(), k, theta).unwrap();
            (ff - reference).norm()
        })
        .collect();
    let orders: Vec<f64> =
        errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    for order in &orders {
        assert!(
            (1.5..=2.6).contains(order),
            "observed quadrature order {order:.2} is not ~2 (errors {errors:?})"
        );
    }
    println!(
        "criterion 03: PASS  linearity within {:.1e}; observed orders {:.2}, {:.2}",
        worst_ff.max(worst_op),
        orders[0],
        orders[1]
    );
}

/// Published support radii, one row per example, columns G1, G2, G3.
const TABLE_1_RADII: [[f64; 3]; 5] = [
    [1.3601, 1.4213, 1.0817],
    [0.9055, 1.1180, 1.0817],
    [0.8246, 1.0198, 1.0630],
    [1.7205, 1.5000, 1.2806],
    [0.9849, 1.2166, 1.1705],
];

#[test]
fn criterion_04_dsm_reproduces_all_15_table_1_radii() {
    let mut worst: f64 = 0.0;
    for (row, example) in (1..=5).enumerate() {
        for (col, label) in ["G1", "G2", "G3"].iter().enumerate() {
            let mut cfg = ExperimentConfig::example(example, Aperture::named(label).unwrap())
                .unwrap();
            // deterministic noise is identical per wavenumber whether or not
            // the inversion set is simulated alongside, so the sampling
            // stage is driven on its own wavenumbers here
            cfg.bayes_wavenumbers = cfg.dsm_wavenumbers.clone();
            let data = simulate_measured(&cfg).unwrap();
            let field = indicator_field(cfg.grid, &data).unwrap();
            let gamma = ExperimentConfig::default_gamma(label).unwrap();
            let disc = estimate_disc(&field, gamma, cfg.center_mode).unwrap();
            let target = TABLE_1_RADII[row][col];
            let miss = (disc.radius - target).abs();
            worst = worst.max(miss);
            assert!(
                miss <= 0.1,
                "example {example} {label}: radius {:.4} vs published {target:.4}",
                disc.radius
            );
        }
    }
    println!("criterion 04: PASS  all 15 radii within 0.1 (worst miss {worst:.4})");
}

#[test]
fn criterion_05_exact_support_run_concentrates_on_the_true_coefficient() {
    let mut cfg = ExperimentConfig::example(1, Aperture::named("G1").unwrap()).unwrap();
    cfg.disc_override = Some(Disc::centered(0.9).unwrap());
    let report = run_pipeline(&cfg).unwrap();
    let idx = BasisIndex::new(cfg.m_max, cfg.n_max).unwrap();
    let target = idx.position(1, 1, Parity::Cosine).unwrap();
    let cm = &report.conditional_mean;
    assert!(
        (2.7..=3.3).contains(&cm[target]),
        "CM at (1,1,cos) = {:.4}, expected in [2.7, 3.3]",
        cm[target]
    );
    let worst_other = cm
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target)
        .map(|(_, v)| v.abs())
        .fold(0.0_f64, f64::max);
    assert!(worst_other < 0.3, "largest spurious |CM| = {worst_other:.4}");
    println!(
        "criterion 05: PASS  CM(1,1,cos) = {:.4}, largest other |CM| = {:.4}",
        cm[target], worst_other
    );
}

/// Published relative errors in percent, one row per example, columns
/// G1, G2, G3.
const TABLE_2_RE: [[f64; 3]; 5] = [
    [5.61, 6.20, 5.79],
    [3.06, 4.07, 4.48],
    [7.17, 16.62, 26.99],
    [25.97, 25.81, 30.88],
    [13.43, 17.13, 19.14],
];

#[test]
fn criterion_06_full_pipeline_reproduces_all_15_table_2_errors() {
    for (row, example) in (1..=5).enumerate() {
        for (col, label) in ["G1", "G2", "G3"].iter().enumerate() {
            let cfg = ExperimentConfig::example(example, Aperture::named(label).unwrap())
                .unwrap();
            let report = run_pipeline(&cfg).unwrap();
            let got = 100.0 * report.relative_error;
            let published = TABLE_2_RE[row][col];
            let upper = (published + 10.0).max(2.0 * published);
            let lower = published - 10.0;
            assert!(
                got <= upper && got >= lower,
                "example {example} {label}: RE {got:.2}% vs published {published:.2}% \
                 (accepted range [{lower:.2}, {upper:.2}])"
            );
            println!(
                "criterion 06: example {example} {label}: RE {got:.2}% (published {published:.2}%, bound {upper:.2}%)"
            );
        }
    }
    println!("criterion 06: PASS  all 15 cells within max(+10pp, 2x published)");
}

#[test]
fn criterion_07_pcn_preserves_the_prior_without_likelihood() {
    // beta = 0.5 rather than the production 0.001: prior invariance holds
    // for every beta, and larger steps decorrelate the chain enough for
    // meaningful moment checks within 1e5 steps. With the stationary
    // autocorrelation rho = sqrt(1 - beta^2) per lag, the effective sample
    // count is n (1 - rho) / (1 + rho).
    let steps = 100_000;
    let burn_in = 1_000;
    let beta = 0.5_f64;
    let variance = 0.01_f64;
    let cfg =
        SamplerConfig { beta, steps, burn_in, thin: 1, seed: 7, literal_proposal: false };
    let prior = PriorSpec::new(variance).unwrap();
    let index = BasisIndex::new(5, 2).unwrap();
    let chain =
        run_prior_chain(index, Disc::centered(0.9).unwrap(), &prior, &cfg).unwrap();
    assert_eq!(chain.accepted(), steps, "prior chain must accept everything");

    let n = chain.num_samples() as f64;
    let rho = (1.0 - beta * beta).sqrt();
    let n_eff = n * (1.0 - rho) / (1.0 + rho);
    let se_mean = (variance / n_eff).sqrt();
    let se_var = variance * (2.0 / n_eff).sqrt();
    let mut worst_mean: f64 = 0.0;
    let mut worst_var: f64 = 0.0;
    for d in 0..chain.dim() {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for s in 0..chain.num_samples() {
            let v = chain.sample(s)[d];
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n;
        let var = sum_sq / n - mean * mean;
        worst_mean = worst_mean.max(mean.abs());
        worst_var = worst_var.max((var - variance).abs());
        assert!(
            mean.abs() <= 3.0 * se_mean,
            "coordinate {d}: mean {mean:.2e} outside 3 SE = {:.2e}",
            3.0 * se_mean
        );
        assert!(
            (var - variance).abs() <= 3.0 * se_var,
            "coordinate {d}: variance {var:.3e} outside 0.01 +- {:.2e}",
            3.0 * se_var
        );
    }
    println!(
        "criterion 07: PASS  worst |mean| {worst_mean:.2e} (3 SE = {:.2e}), worst |var - 0.01| {worst_var:.2e} (3 SE = {:.2e})",
        3.0 * se_mean,
        3.0 * se_var
    );
}

#[test]
fn criterion_08_indicator_is_bounded_and_scale_invariant() {
    let mut rng = ChaCha20Rng::seed_from_u64(88);
    let mut worst_drift: f64 = 0.0;
    for _ in 0..1000 {
        let i_count = rng.random_range(3..=25usize);
        let j_count = rng.random_range(1..=4usize);
        let angles: Vec<f64> = {
            let mut a: Vec<f64> =
                (0..i_count).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
            a.sort_by(f64::total_cmp);
            a.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
            a
        };
        let i_count = angles.len();
        let wavenumbers: Vec<f64> = {
            let mut ks: Vec<f64> =
                (0..j_count).map(|_| rng.random_range(0.5..20.0)).collect();
            ks.sort_by(f64::total_cmp);
            ks.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            ks
        };
        let values: Vec<Complex64> = (0..i_count * wavenumbers.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let aperture = Aperture::custom(angles, "random").unwrap();
        let data =
            FarFieldData::new(aperture.clone(), wavenumbers.clone(), values.clone(), NoiseTag::Clean)
                .unwrap();
        let x = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
        let v = indicator(x, &data).unwrap();
        assert!((0.0..=1.0).contains(&v), "indicator {v} outside [0, 1]");

        let scale = Complex64::from_polar(
            rng.random_range(1e-3..1e3),
            rng.random_range(0.0..std::f64::consts::TAU),
        );
        let scaled = FarFieldData::new(
            aperture,
            wavenumbers,
            values.iter().map(|z| z * scale).collect(),
            NoiseTag::Clean,
        )
        .unwrap();
        let drift = (indicator(x, &scaled).unwrap() - v).abs();
        worst_drift = worst_drift.max(drift);
        assert!(drift <= 1e-12, "scale invariance violated by {drift:.3e}");
    }
    println!("criterion 08: PASS  1000 datasets in [0,1], worst scale drift {worst_drift:.2e}");
}

#[test]
fn criterion_09_projection_error_is_non_increasing_in_m() {
    let spec = SourceSpec::example(3).unwrap();
    let disc = Disc::centered(0.8246).unwrap();
    let samples =
        SourceSamples::from_spec(&spec, build_mesh(&Region::Disc(disc), 0.01).unwrap()).unwrap();
    let mut errors = Vec::new();
    for m in 1..=5 {
        let basis = DiscBasis::new(BasisIndex::new(m, 2).unwrap(), disc).unwrap();
        let coeffs = basis.project(&samples);
        let eval = evaluate_expansion(&spec, 0.01, &basis, &coeffs).unwrap();
        errors.push(eval.absolute_error);
    }
    for pair in errors.windows(2) {
        assert!(
            pair[1] <= pair[0] + 1e-10,
            "projection error increased: {:.6} -> {:.6} (all: {errors:?})",
            pair[0],
            pair[1]
        );
    }
    println!("criterion 09: PASS  projection errors M=1..5: {errors:?}");
}

#[test]
fn criterion_10_manifests_are_identical_across_runs_and_thread_counts() {
    let run_in_pool = |threads: usize| -> BTreeMap<String, String> {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::example(2, Aperture::named("G2").unwrap()).unwrap();
        cfg.output_dir = Some(dir.path().to_path_buf());
        let pool =
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let report = pool.install(|| run_pipeline(&cfg).unwrap());
        assert_eq!(report.manifest.len(), 6, "expected six hashed artifacts");
        report.manifest
    };
    let first = run_in_pool(1);
    let second = run_in_pool(1);
    let wide = run_in_pool(7);
    assert_eq!(first, second, "same-settings runs must hash identically");
    assert_eq!(first, wide, "manifest must not depend on the thread count");
    println!("criterion 10: PASS  {} artifact hashes identical across runs and thread counts", first.len());
}
