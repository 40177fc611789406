use vertex_expansion::gadget::{self, build_chain};
use vertex_expansion::gauss::{self, GaussianGraphSpec};
use vertex_expansion::seed;

fn chi2(counts: &[usize], probs: &[f64]) -> f64 {
    let n: usize = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = n as f64 * p;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

#[test]
fn constraint_slots_have_stationary_marginals() {
    let h = build_chain(0.1).unwrap();
    let (r, d) = (2, 3);
    let mut rng = seed::rng(4);
    // slot 0 is x, slots 1..=d are the y_j; coordinates pooled
    let mut counts = vec![[0usize; 4]; d + 1];
    for _ in 0..100_000 {
        let (x, ys) = gadget::sample_constraint(&h, r, d, &mut rng);
        for i in 0..r {
            counts[0][x[i] as usize] += 1;
            for (j, y) in ys.iter().enumerate() {
                counts[j + 1][y[i] as usize] += 1;
            }
        }
    }
    // 3 degrees of freedom, three sigma
    let limit = 3.0 + 3.0 * 6f64.sqrt();
    for (slot, c) in counts.iter().enumerate() {
        let stat = chi2(c, &h.stationary);
        assert!(stat < limit, "slot {slot}: χ² = {stat}");
    }
}

#[test]
fn constraint_stream_is_reproducible() {
    let h = build_chain(0.05).unwrap();
    let a: Vec<_> = gadget::constraint_stream(&h, 3, 4, 99).take(50).collect();
    let b: Vec<_> = gadget::constraint_stream(&h, 3, 4, 99).take(50).collect();
    assert_eq!(a, b);
}

#[test]
fn spectrum_report() {
    for eps in [0.01, 0.05, 0.1, 0.2] {
        let h = build_chain(eps).unwrap();
        let s = h.spectrum();
        println!(
            "eps={eps}: eigenvalues {:?} gap {:.6} nominal {:.6} holds={}",
            s.eigenvalues, s.gap, s.nominal_gap, s.nominal_gap_holds
        );
        for (a, b) in h.eigenvalues.iter().zip(h.numeric_eigenvalues()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(h.reversibility_error() < 1e-12);
        assert!(s.gap > 0.0);
    }
}

#[test]
fn dictator_monte_carlo_agrees_with_closed_form() {
    let h = build_chain(0.1).unwrap();
    let f = gadget::ProductFunction::dictator(3, 1);
    let (num, var1) = gadget::dictator_value_exact(0.1, 4).unwrap();
    let est = gadget::estimate_value(&h, 4, &f, 100_000, 8).unwrap();
    assert!((est.numerator - num).abs() <= 4.0 * est.numerator_se);
    assert!((est.var1 - var1).abs() <= 4.0 * est.var1_se);
}

#[test]
fn soundness_probe_at_four_coordinates() {
    let h = build_chain(0.1).unwrap();
    let records = gadget::soundness_probe(&h, 4, 8, 10, 2).unwrap();
    for r in &records {
        println!(
            "{:>8} ratio {:?} max influence {:.4} normalized {:?}",
            r.kind, r.ratio, r.max_influence, r.normalized
        );
    }
    assert_eq!(records.len(), 11);
    assert!(records.iter().all(|r| r.max_influence >= 0.0));
}

#[test]
fn gaussian_thresholds_are_exact_at_degree_one() {
    let h = build_chain(0.1).unwrap();
    let spec = GaussianGraphSpec::from_chain(&h, 1).unwrap();
    let mut rng = seed::rng(12);
    for k in 0..10 {
        let (cuts, levels) = gauss::random_levels(4, &mut rng);
        let cmp = gauss::compare_thresholds(&spec, &cuts, &levels, 20_000, k).unwrap();
        let (Some(frac), Some(best)) = (cmp.fractional.ratio, cmp.best_threshold_ratio()) else {
            continue;
        };
        assert!(best <= frac + 1e-12, "{best} > {frac}");
    }
}

#[test]
fn gaussian_thresholds_lose_at_most_factor_two() {
    let h = build_chain(0.1).unwrap();
    let spec = GaussianGraphSpec::from_chain(&h, 6).unwrap();
    let mut rng = seed::rng(13);
    for k in 0..10 {
        let (cuts, levels) = gauss::random_levels(4, &mut rng);
        let cmp = gauss::compare_thresholds(&spec, &cuts, &levels, 20_000, k).unwrap();
        let (Some(frac), Some(best)) = (cmp.fractional.ratio, cmp.best_threshold_ratio()) else {
            continue;
        };
        assert!(best <= 2.0 * frac + 1e-12, "{best} > 2·{frac}");
    }
}

/// With several neighbors, a three-level function can beat all of its
/// threshold sets.
#[test]
fn gaussian_thresholds_can_lose_for_larger_degree() {
    let h = build_chain(0.1).unwrap();
    let spec = GaussianGraphSpec::from_chain(&h, 8).unwrap();
    let cmp = gauss::compare_thresholds(&spec, &[-0.3, 0.3], &[0.0, 0.5, 1.0], 200_000, 1).unwrap();
    let frac = cmp.fractional.ratio.unwrap();
    let best = cmp.best_threshold_ratio().unwrap();
    let se = cmp.fractional.ratio_se.unwrap().hypot(
        cmp.thresholds
            .iter()
            .filter_map(|e| e.ratio_se)
            .fold(0.0, f64::max),
    );
    assert!(best - frac > 5.0 * se, "frac {frac} best {best} se {se}");
}
