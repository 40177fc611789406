use std::collections::HashMap;

use proptest::prelude::*;
use rand::Rng;

use vertex_expansion::bave::{self, Assignment, BaveInstance, Tuple};
use vertex_expansion::graph::symmetric_vertex_expansion;
use vertex_expansion::reduction::{self, ReductionParams, UnfoldedSampler};
use vertex_expansion::{corpus, seed, Cut};

#[test]
fn indicator_ratio_is_half_symmetric_expansion() {
    for ng in corpus::standard_corpus(8) {
        let g = &ng.graph;
        let Ok(inst) = bave::graph_to_instance(g) else {
            continue;
        };
        for bits in 1..(1u64 << g.n()) - 1 {
            let s = Cut::from_bits(g.n(), bits);
            let f = Assignment::indicator(g.n(), s.members().iter().copied()).unwrap();
            let ratio = bave::bave_value(&inst, &f).unwrap().ratio().unwrap();
            let expect = symmetric_vertex_expansion(g, &s).unwrap() / 2.0;
            assert!((ratio - expect).abs() < 1e-12, "{} {bits:b}", ng.name);
        }
    }
}

#[test]
fn instance_json_round_trip() {
    let inst = bave::graph_to_instance(&corpus::petersen().unwrap()).unwrap();
    let back = BaveInstance::from_json(&inst.to_json()).unwrap();
    assert_eq!(back, inst);
}

/// Random instance of arity `d` with equal marginals: a symmetric pair
/// distribution for `d = 1`, or rotations of random tuples for larger `d`
/// (the rotation closure makes every slot see the same variables).
fn random_instance(n: usize, d: usize, rng: &mut seed::Rng) -> BaveInstance {
    let base: Vec<(Vec<usize>, f64)> = (0..6)
        .map(|_| {
            (
                (0..=d).map(|_| rng.random_range(0..n)).collect(),
                rng.random::<f64>() + 0.1,
            )
        })
        .collect();
    let mut tuples = Vec::new();
    for (vars, w) in &base {
        for shift in 0..=d {
            let mut t = vars[shift..].to_vec();
            t.extend_from_slice(&vars[..shift]);
            tuples.push((t, *w));
        }
    }
    let total: f64 = tuples.iter().map(|(_, w)| w).sum();
    let tuples = tuples
        .into_iter()
        .map(|(vars, w)| Tuple { vars, p: w / total })
        .collect();
    BaveInstance::new(n, d, tuples).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn thresholding_loses_at_most_factor_two(s in any::<u64>(), d in 1usize..4) {
        let mut rng = seed::rng(s);
        let inst = random_instance(5, d, &mut rng);
        let f = Assignment::new((0..5).map(|_| rng.random::<f64>()).collect()).unwrap();
        let Ok(frac) = bave::bave_value(&inst, &f).unwrap().ratio() else { return Ok(()) };
        let (_, best) = bave::threshold_round(&inst, &f).unwrap();
        prop_assert!(best <= 2.0 * frac + 1e-12);
        if d == 1 {
            prop_assert!(best <= frac + 1e-12);
        }
    }
}

fn chi2_uniform(counts: &[usize]) -> (f64, f64) {
    let n: usize = counts.iter().sum();
    let e = n as f64 / counts.len() as f64;
    let stat = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    (stat, (counts.len() - 1) as f64)
}

fn within_three_sigma((stat, dof): (f64, f64)) -> bool {
    stat <= dof + 3.0 * (2.0 * dof).sqrt()
}

#[test]
fn unfolded_slots_are_uniform_on_graph_tuples() {
    let g = corpus::cycle(5).unwrap();
    let params = ReductionParams::new(2, 0.1, 3, 100_000, 1).unwrap();
    let sampler = UnfoldedSampler::new(&g, params).unwrap();
    let mut rng = seed::rng(17);
    let mut counts = vec![vec![0usize; 25]; 4];
    for _ in 0..100_000 {
        let u = sampler.sample(&mut rng);
        for (k, (a, _)) in u.slots.iter().enumerate() {
            counts[k][a[0] + 5 * a[1]] += 1;
        }
    }
    for c in &counts {
        assert!(within_three_sigma(chi2_uniform(c)));
    }
}

#[test]
fn folded_slot_distributions_agree() {
    let g = corpus::clique(3).unwrap();
    let params = ReductionParams::new(1, 0.1, 2, 60_000, 3).unwrap();
    let folded = reduction::build_folded_instance(&g, params).unwrap();
    let mut counts = vec![vec![0usize; folded.vertices.len()]; 3];
    for t in folded.instance.tuples() {
        for (slot, &v) in t.vars.iter().enumerate() {
            counts[slot][v] += 1;
        }
    }
    for j in 1..3 {
        // two-sample χ² between slot 0 and slot j
        let mut stat = 0.0;
        let mut dof = 0.0;
        for (&a, &b) in counts[0].iter().zip(&counts[j]) {
            let (a, b) = (a as f64, b as f64);
            if a + b > 0.0 {
                stat += (a - b).powi(2) / (a + b);
                dof += 1.0;
            }
        }
        assert!(
            within_three_sigma((stat, dof - 1.0)),
            "slot {j}: {stat} on {dof}"
        );
    }
    assert!(folded.instance.marginal_gap() < 0.02);
}

#[test]
fn completeness_assignment_matches_rule_on_instance() {
    let g = corpus::two_cliques(3).unwrap();
    let params = ReductionParams::new(2, 0.1, 2, 2_000, 5).unwrap();
    let folded = reduction::build_folded_instance(&g, params).unwrap();
    let in_s = reduction::membership(6, &[0, 1, 2]).unwrap();
    let f = reduction::completeness_assignment(&folded, &in_s).unwrap();
    for (v, &value) in folded.vertices.iter().zip(f.values()) {
        let count = v.pairs().iter().filter(|(u, _)| *u < 3).count();
        assert_eq!(value, if count == 1 { 1.0 } else { 0.0 });
    }
}

#[test]
fn soundness_probe_records() {
    let g = corpus::two_cliques(3).unwrap();
    let params = ReductionParams::new(2, 0.1, 3, 5_000, 9).unwrap();
    let folded = reduction::build_folded_instance(&g, params).unwrap();
    let in_s = reduction::membership(6, &[0, 1, 2]).unwrap();
    let records = reduction::soundness_probe(&folded, &in_s, 5, 1).unwrap();
    let mut by_kind: HashMap<&str, Vec<f64>> = HashMap::new();
    for r in &records {
        if let Some(v) = r.ratio {
            by_kind.entry(r.kind.as_str()).or_default().push(v);
        }
    }
    for (kind, ratios) in &by_kind {
        println!("{kind}: {ratios:?}");
    }
    assert_eq!(records.len(), 7);
}
