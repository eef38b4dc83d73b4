use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use rmtl_core::contrasts::{dunnett, expand, tukey, ContrastSpec, ExpansionMode};
use rmtl_core::estimators::{fit_all, GroupSample, RmtlSummary};
use rmtl_core::inference::{local_level, permutation_global_test, wald_statistic};
use rmtl_core::io::{emit_csv, read_csv, Dataset};
use rmtl_core::numerics::{RngStream, SymMatrix};

fn group_strategy(causes: usize) -> impl Strategy<Value = (Vec<f64>, Vec<u32>)> {
    prop::collection::vec((1u32..=12, 0..=causes as u32), 4..25).prop_map(|obs| {
        let (t, d): (Vec<u32>, Vec<u32>) = obs.into_iter().unzip();
        (t.into_iter().map(|x| x as f64 * 0.75).collect(), d)
    })
}

fn samples_strategy() -> impl Strategy<Value = (Vec<GroupSample>, usize)> {
    (1usize..=3, 2usize..=4).prop_flat_map(|(causes, k)| {
        prop::collection::vec(group_strategy(causes), k).prop_map(move |groups| {
            let samples = groups
                .into_iter()
                .map(|(t, d)| GroupSample::new(t, d, causes).unwrap())
                .collect();
            (samples, causes)
        })
    })
}

const TAU: f64 = 6.0;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covariance_is_psd((samples, _) in samples_strategy()) {
        let s = fit_all(&samples, TAU).unwrap();
        let eig = s.sigma_hat.eigenvalues();
        let scale = eig.iter().cloned().fold(1.0, f64::max);
        prop_assert!(eig.iter().all(|&e| e >= -1e-10 * scale), "{eig:?}");
    }

    #[test]
    fn rescaling_time_scales_moments((samples, _) in samples_strategy(), c in 0.1f64..10.0) {
        let a = fit_all(&samples, TAU).unwrap();
        let scaled: Vec<GroupSample> = samples.iter().map(|s| s.rescaled(c).unwrap()).collect();
        let b = fit_all(&scaled, TAU * c).unwrap();
        for (x, y) in a.mu_hat.iter().zip(&b.mu_hat) {
            prop_assert!(close(x * c, *y, 1e-10));
        }
        let (sa, sb) = (a.sigma_hat.as_matrix(), b.sigma_hat.as_matrix());
        for (x, y) in sa.iter().zip(sb.iter()) {
            prop_assert!(close(x * c * c, *y, 1e-9));
        }
    }

    #[test]
    fn relabeling_causes_permutes_moments((samples, causes) in samples_strategy()) {
        // reverse the cause labels: m -> causes + 1 - m
        let relabel: Vec<u32> = (1..=causes as u32).map(|m| causes as u32 + 1 - m).collect();
        let a = fit_all(&samples, TAU).unwrap();
        let swapped: Vec<GroupSample> = samples.iter().map(|s| s.relabeled(&relabel).unwrap()).collect();
        let b = fit_all(&swapped, TAU).unwrap();
        let k = samples.len();
        let idx = |g: usize, m: usize| g * causes + (causes - 1 - m);
        for g in 0..k {
            for m in 0..causes {
                prop_assert!(close(a.mu_hat[g * causes + m], b.mu_hat[idx(g, m)], 1e-12));
                for m2 in 0..causes {
                    prop_assert!(close(
                        a.sigma_hat.get(g * causes + m, g * causes + m2),
                        b.sigma_hat.get(idx(g, m), idx(g, m2)),
                        1e-10
                    ));
                }
            }
        }
    }

    #[test]
    fn wald_invariant_under_row_mixing((samples, causes) in samples_strategy(), seed in 0u64..1000) {
        let s = fit_all(&samples, TAU).unwrap();
        let k = samples.len();
        let spec = expand(&dunnett(k).unwrap(), causes, &ExpansionMode::AllEvents).unwrap();
        let h = spec.matrix.clone();
        let r = h.nrows();
        // unit lower-triangular mixing is always invertible
        let mut a = DMatrix::<f64>::identity(r, r);
        let mut x = seed as f64;
        for i in 0..r {
            for j in 0..i {
                x = (x * 1.618 + 0.37).fract();
                a[(i, j)] = 2.0 * x - 1.0;
            }
        }
        let c = DVector::zeros(r);
        let (w1, r1) = wald_statistic(&s, &h, &c).unwrap();
        let (w2, r2) = wald_statistic(&s, &(&a * &h), &c).unwrap();
        prop_assert_eq!(r1, r2);
        prop_assert!(close(w1, w2, 1e-6), "{} vs {}", w1, w2);
    }

    #[test]
    fn wald_invariant_under_group_reordering((samples, causes) in samples_strategy()) {
        let k = samples.len();
        let s = fit_all(&samples, TAU).unwrap();
        let spec = expand(&tukey(k).unwrap(), causes, &ExpansionMode::AllEvents).unwrap();
        let reversed: Vec<GroupSample> = samples.iter().rev().cloned().collect();
        let sr = fit_all(&reversed, TAU).unwrap();
        // move group g's columns to position k - 1 - g
        let mut h = DMatrix::<f64>::zeros(spec.matrix.nrows(), k * causes);
        for g in 0..k {
            for m in 0..causes {
                h.set_column((k - 1 - g) * causes + m, &spec.matrix.column(g * causes + m));
            }
        }
        let c = DVector::zeros(h.nrows());
        let (w1, _) = wald_statistic(&s, &spec.matrix, &c).unwrap();
        let (w2, _) = wald_statistic(&sr, &h, &c).unwrap();
        prop_assert!(close(w1, w2, 1e-7), "{} vs {}", w1, w2);
    }

    #[test]
    fn csv_round_trip((samples, _) in samples_strategy()) {
        let labels: Vec<String> = (0..samples.len()).map(|g| format!("arm{g}")).collect();
        let causes = samples.iter().flat_map(|s| s.statuses()).copied().max().unwrap_or(0);
        prop_assume!(causes > 0);
        // the reader infers the number of causes from the data
        let samples: Vec<GroupSample> = samples
            .iter()
            .map(|s| GroupSample::new(s.times().to_vec(), s.statuses().to_vec(), causes as usize).unwrap())
            .collect();
        let d = Dataset { labels, samples };
        let mut buf = Vec::new();
        emit_csv(&d, &mut buf).unwrap();
        prop_assert_eq!(read_csv(buf.as_slice()).unwrap(), d);
    }
}

fn random_psd(dim: usize, seed: u64) -> SymMatrix {
    let mut x = seed as f64 * 0.1 + 0.5;
    let a = DMatrix::from_fn(dim, dim, |_, _| {
        x = (x * 3.7 + 0.13).fract();
        2.0 * x - 1.0
    });
    SymMatrix::new(&a * a.transpose()).unwrap()
}

fn summary_with(sigma: SymMatrix, k: usize, causes: usize) -> RmtlSummary {
    RmtlSummary {
        mu_hat: vec![0.0; k * causes],
        sigma_hat: sigma,
        group_covariances: Vec::new(),
        group_sizes: vec![10; k],
        total_size: 10 * k,
        tau: 1.0,
        causes,
        warnings: Vec::new(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn local_level_between_bonferroni_and_alpha(seed in 0u64..10_000, k in 2usize..=4, causes in 1usize..=2, dup in any::<bool>()) {
        let b = 20_000;
        let alpha = 0.05;
        let summary = summary_with(random_psd(k * causes, seed), k, causes);
        let mut spec = expand(&tukey(k).unwrap(), causes, &ExpansionMode::PerEvent).unwrap();
        if dup {
            // duplicate the first block: dependence can only raise beta
            let row = spec.matrix.row(0).clone_owned();
            let r = spec.matrix.nrows();
            spec.matrix = spec.matrix.clone().insert_row(r, 0.0);
            spec.matrix.set_row(r, &row);
            spec.offset = DVector::zeros(r + 1);
            spec.blocks.push(r..r + 1);
            spec.labels.push("dup".into());
        }
        let level = local_level(&summary, &spec, alpha, b, RngStream::new(seed, 0)).unwrap();
        let l = spec.block_count() as f64;
        // grid slack 2/B plus Monte-Carlo slack: each marginal empirical CDF at
        // alpha / L carries binomial noise of order sqrt(alpha / B)
        let slack = 2.0 / b as f64 + 4.0 * (alpha / b as f64).sqrt();
        prop_assert!(level.beta >= alpha / l - slack, "beta {} L {}", level.beta, l);
        prop_assert!(level.beta <= alpha + slack);
        prop_assert!(level.fwer(level.beta) <= alpha);
    }
}

#[test]
fn permutation_p_value_bounds() {
    let mk = |t: Vec<f64>, d: Vec<u32>| GroupSample::new(t, d, 2).unwrap();
    let samples = vec![
        mk(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], vec![1, 2, 0, 1, 2, 1]),
        mk(vec![1.5, 2.5, 3.5, 4.5, 5.5, 6.5], vec![2, 1, 1, 0, 2, 2]),
    ];
    let spec: ContrastSpec = expand(&dunnett(2).unwrap(), 2, &ExpansionMode::AllEvents).unwrap();
    for seed in 0..20 {
        let t = permutation_global_test(&samples, &spec, 6.0, 0.05, 99, RngStream::new(seed, 0)).unwrap();
        assert!(t.p_value >= 1.0 / 100.0 && t.p_value <= 1.0);
        assert_eq!(t.rejected, t.statistic > t.critical_value);
    }
}

#[test]
fn bonferroni_lower_bound_independent_blocks() {
    // five equicorrelated many-to-one blocks: beta at least the Bonferroni level alpha / 5
    let k = 6;
    let sigma = SymMatrix::identity(k);
    let spec = expand(&dunnett(k).unwrap(), 1, &ExpansionMode::PerEvent).unwrap();
    let level = local_level(&summary_with(sigma, k, 1), &spec, 0.05, 20_000, RngStream::new(5, 5)).unwrap();
    assert!(level.beta >= 0.01 - 1e-4);
    assert!(level.beta <= 0.05);
}
