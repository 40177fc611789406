use vertex_expansion::corpus;
use vertex_expansion::exact::{exact_min, ExactOptions};
use vertex_expansion::rounding::{self, RoundOptions};
use vertex_expansion::sdp::{self, SolveOptions};
use vertex_expansion::seed;

const RANK_TOL: f64 = 1e-9;

#[test]
fn certified_solutions_are_feasible() {
    for ng in corpus::standard_corpus(8)
        .into_iter()
        .filter(|g| g.graph.is_connected())
    {
        let p = sdp::build_sdp(&ng.graph).unwrap();
        let sol = sdp::solve(&p, SolveOptions::default()).unwrap();
        let (viol, norm_dev, mineig) = sol.check(&p);
        assert!(viol <= 1e-9, "{}: violation {viol}", ng.name);
        assert!(
            norm_dev <= 1e-9,
            "{}: normalization off by {norm_dev}",
            ng.name
        );
        assert!(mineig >= -1e-9, "{}: min eigenvalue {mineig}", ng.name);
    }
}

#[test]
fn relaxation_is_below_one_dimensional_quotients() {
    for ng in corpus::standard_corpus(8)
        .into_iter()
        .filter(|g| g.graph.is_connected())
    {
        let g = &ng.graph;
        let val = sdp::solve(&sdp::build_sdp(g).unwrap(), SolveOptions::default())
            .unwrap()
            .value;
        let mut rng = seed::rng(seed::derive(3, &ng.name));
        for _ in 0..20 {
            let x: Vec<f64> = (0..g.n())
                .map(|_| rand::Rng::random::<f64>(&mut rng))
                .collect();
            if let Ok(q) = sdp::lambda_inf_quotient(g, &x) {
                assert!(val <= q + 1e-6, "{}: {val} > {q}", ng.name);
            }
        }
    }
}

#[test]
fn rounding_is_reproducible_per_seed() {
    let g = corpus::barbell(4).unwrap();
    let opts = RoundOptions {
        reps: 5,
        seed: 11,
        ..Default::default()
    };
    let (a, ra) = rounding::round(&g, None, opts).unwrap();
    let (b, rb) = rounding::round(&g, None, opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra.per_rep, rb.per_rep);
    assert!(ra.achieved <= ra.bound);
}

#[test]
fn rounding_finds_components_of_disconnected_graphs() {
    let g = corpus::two_cliques(3).unwrap();
    let (cut, report) = rounding::round(&g, None, RoundOptions::default()).unwrap();
    assert_eq!(report.achieved, 0.0);
    assert!(report.disconnected);
    assert_eq!(cut.len(), 3);
}

#[test]
fn rounding_on_k2_gives_the_only_value() {
    let g = corpus::clique(2).unwrap();
    let (_, report) = rounding::round(
        &g,
        None,
        RoundOptions {
            reps: 5,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(report.achieved, 2.0);
    let opt = exact_min(&g, ExactOptions::default()).unwrap().value;
    assert_eq!(opt, 2.0);
}

/// Gaussian projections of the SDP vectors: the projected quotient is small
/// with constant probability, and the projected (centered) denominator
/// exceeds 1/2 with constant probability.
#[test]
fn projection_events_have_constant_probability() {
    for ng in corpus::standard_corpus(8)
        .into_iter()
        .filter(|g| g.graph.is_connected())
    {
        let g = &ng.graph;
        let sol = sdp::solve(&sdp::build_sdp(g).unwrap(), SolveOptions::default()).unwrap();
        let vectors = sdp::factorize(&sol, RANK_TOL).unwrap();
        let d = g.max_degree().max(2) as f64;
        let limit = 96.0 * sol.value * d.ln();

        let seeds = 200;
        let small = (0..seeds)
            .filter(|&k| {
                let x = rounding::gaussian_project(&vectors, seed::derive_index(5, k));
                sdp::lambda_inf_quotient(g, &x).is_ok_and(|q| q <= limit)
            })
            .count();
        assert!(small * 48 >= seeds as usize, "{}: {small}/{seeds}", ng.name);

        let trials = 10_000;
        let large = (0..trials)
            .filter(|&k| {
                let x = rounding::gaussian_project(&vectors, seed::derive_index(6, k));
                let n = x.len() as f64;
                let mean = x.iter().sum::<f64>() / n;
                x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() >= 0.5
            })
            .count();
        assert!(
            large * 24 >= trials as usize,
            "{}: {large}/{trials}",
            ng.name
        );
    }
}

#[test]
fn lambda_upper_bound_dominates_relaxation() {
    for ng in corpus::standard_corpus(6)
        .into_iter()
        .filter(|g| g.graph.is_connected())
    {
        let g = &ng.graph;
        let val = sdp::solve(&sdp::build_sdp(g).unwrap(), SolveOptions::default())
            .unwrap()
            .value;
        let (upper, x) = sdp::lambda_inf_upper(g, 20, 1);
        assert!(val <= upper + 1e-6, "{}", ng.name);
        assert!((sdp::lambda_inf_quotient(g, &x).unwrap() - upper).abs() < 1e-9);
    }
}
