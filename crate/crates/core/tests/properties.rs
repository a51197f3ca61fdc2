use knowctx::context::{build_context, AmplitudeAssignment, ContextNetwork, Knowability};
use knowctx::engine::{divergence_check, eval_auto, eval_classical, eval_delayed, eval_interference};
use knowctx::feasibility::{
    build_system, dof_count, sampled_independence_check, solve, ShapeSpec,
};
use knowctx::hilbert::{project, tensor_context, to_state_vector, StateVector};
use knowctx::oracle::{enumerate_paths, mc_sample_classical};
use knowctx::random::{random_context, random_normalized, random_row_normalized, rng_for};
use knowctx::state::{initial_state, parse_canonical, Bracket, ContextEvent, EventKind, Symbol};
use knowctx::ProbabilityRule;
use num_complex::Complex64;
use proptest::prelude::*;

fn level(l: u8) -> Knowability {
    Knowability::from_level(l).unwrap()
}

/// Layer sizes and levels with a level-3 final layer.
fn layers(max_layers: usize, max_size: usize) -> impl Strategy<Value = Vec<(usize, Knowability)>> {
    prop::collection::vec((1..=max_size, 1u8..=3), 1..=max_layers).prop_map(|v| {
        let n = v.len();
        v.into_iter()
            .enumerate()
            .map(|(i, (s, l))| (s, if i + 1 == n { Knowability::L3 } else { level(l) }))
            .collect()
    })
}

/// A context whose rows are normalized under `rule`, with no L1 layers.
fn context_under(rule: ProbabilityRule, sizes: &[usize], seed: u64) -> ContextNetwork {
    let mut rng = rng_for(seed, 0);
    let first = random_normalized(&mut rng, sizes[0], rule);
    let transitions = sizes
        .windows(2)
        .map(|w| random_row_normalized(&mut rng, w[0], w[1], rule))
        .collect();
    let layers: Vec<(usize, Knowability)> = sizes.iter().map(|&s| (s, Knowability::L3)).collect();
    build_context("p", &layers, AmplitudeAssignment::new(first, transitions), rule).unwrap()
}

fn event(n: u64, kind: u8, layer: usize, outcome: usize) -> ContextEvent {
    let kind = match kind % 4 {
        0 => EventKind::Attain { layer },
        1 => EventKind::Observe { layer, outcome },
        2 => EventKind::Erase { layer },
        _ => EventKind::PromoteKnowability {
            layer,
            level: Knowability::L3,
        },
    };
    ContextEvent::new(n, kind)
}

fn normalize(b: &Bracket) -> Bracket {
    match b {
        Bracket::Collapsed(alts) if alts.len() == 1 => Bracket::Resolved(alts[0].clone()),
        other => other.clone(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn brackets_are_conserved_and_resolution_is_monotone(
        shape in layers(4, 3),
        seed in any::<u64>(),
        raw in prop::collection::vec((0u8..4, 0usize..4, 0usize..3), 0..12),
    ) {
        let ctx = random_context(&mut rng_for(seed, 0), &shape, true).unwrap();
        let mut state = initial_state(&ctx);
        for (i, &(kind, layer, outcome)) in raw.iter().enumerate() {
            let ev = event(i as u64 + 1, kind, layer, outcome);
            let Ok(next) = state.apply_event(&ctx, &ev) else { continue };
            prop_assert_eq!(next.brackets().len(), ctx.num_layers());
            for (before, after) in state.brackets().iter().zip(next.brackets()) {
                match before {
                    Bracket::Resolved(_) => prop_assert_eq!(before, after),
                    Bracket::Collapsed(_) => prop_assert!(after.is_collapsed()),
                    Bracket::Unresolved(_) => {}
                }
            }
            let text = next.canonical_string();
            let parsed = parse_canonical(&ctx, &text).unwrap();
            let want: Vec<Bracket> = next.brackets().iter().map(normalize).collect();
            let got: Vec<Bracket> = parsed.iter().map(normalize).collect();
            prop_assert_eq!(got, want, "{}", text);
            // Any state still leaves a distribution for an open final layer.
            let k = ctx.num_layers() - 1;
            if next.resolved_outcome(k).is_none() {
                let d = eval_auto(&ctx, &next, k).unwrap();
                prop_assert!(d.probs.iter().all(|p| p.is_finite() && *p >= 0.0));
            }
            state = next;
        }
    }

    #[test]
    fn canonical_strings_are_deterministic(shape in layers(3, 3), seed in any::<u64>()) {
        let ctx = random_context(&mut rng_for(seed, 0), &shape, false).unwrap();
        let a = initial_state(&ctx);
        let b = initial_state(&ctx.clone());
        prop_assert_eq!(a.canonical_string(), b.canonical_string());
        prop_assert_eq!(parse_canonical(&ctx, &a.canonical_string()).unwrap(), a.brackets().to_vec());
    }

    #[test]
    fn unitary_rows_normalize_every_mode(
        sizes in prop::collection::vec(1usize..=4, 1..=3),
        seed in any::<u64>(),
    ) {
        let mut sizes = sizes;
        sizes.sort_unstable();
        let shape: Vec<(usize, Knowability)> = sizes.iter().map(|&s| (s, Knowability::L3)).collect();
        let ctx = random_context(&mut rng_for(seed, 1), &shape, true).unwrap();
        let k = ctx.num_layers() - 1;
        for d in [eval_classical(&ctx, k).unwrap(), eval_delayed(&ctx, k).unwrap(), eval_interference(&ctx, k).unwrap()] {
            prop_assert!((d.sum() - 1.0).abs() < 1e-9, "{:?}", d.probs);
        }
    }

    #[test]
    fn delayed_equals_classical_under_any_exponent(
        sizes in prop::collection::vec(1usize..=4, 1..=3),
        gamma in 0.2f64..3.0,
        seed in any::<u64>(),
    ) {
        let rule = ProbabilityRule::gamma(gamma).unwrap();
        let ctx = context_under(rule, &sizes, seed);
        let k = ctx.num_layers() - 1;
        let a = eval_delayed(&ctx, k).unwrap();
        let b = eval_classical(&ctx, k).unwrap();
        for (x, y) in a.probs.iter().zip(&b.probs) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_amplitudes_carry_no_paths(
        m in 1usize..=3,
        n in 2usize..=3,
        seed in any::<u64>(),
        j in 0usize..3,
        jp in 0usize..3,
    ) {
        let (j, jp) = (j % m, jp % n);
        let rule = ProbabilityRule::BORN;
        let mut rng = rng_for(seed, 2);
        let first = random_normalized(&mut rng, m, rule);
        let mut t = random_row_normalized(&mut rng, m, n, rule);
        t[(j, jp)] = Complex64::new(0.0, 0.0);
        let norm: f64 = (0..n).map(|c| t[(j, c)].norm_sqr()).sum::<f64>().sqrt();
        for c in 0..n {
            t[(j, c)] /= norm;
        }
        let ctx = build_context(
            "z",
            &[(m, Knowability::L2), (n, Knowability::L3)],
            AmplitudeAssignment::new(first.clone(), vec![t.clone()]),
            rule,
        ).unwrap();
        let zero = Symbol::Transition { layer: 1, from: j, to: jp };
        if let Bracket::Unresolved(entries) = &initial_state(&ctx).brackets()[1] {
            for e in entries {
                prop_assert!(e.terms.iter().all(|term| !term.0.contains(&zero)));
            }
        }
        let d = eval_delayed(&ctx, 1).unwrap();
        let without: f64 = (0..m).filter(|&i| i != j).map(|i| rule.apply(first[i]) * rule.apply(t[(i, jp)])).sum();
        prop_assert!((d.probs[jp] - without).abs() < 1e-15);
        let coherent: Complex64 = (0..m).filter(|&i| i != j).map(|i| first[i] * t[(i, jp)]).sum();
        prop_assert!((eval_interference(&ctx, 1).unwrap().probs[jp] - rule.apply(coherent)).abs() < 1e-15);
    }

    #[test]
    fn identity_rule_never_diverges(sizes in prop::collection::vec(1usize..=4, 2..=3), seed in any::<u64>()) {
        let ctx = context_under(ProbabilityRule::Classical, &sizes, seed);
        prop_assert!(divergence_check(&ctx) < 1e-15);
    }

    #[test]
    fn classical_chain_matches_path_enumeration(shape in layers(4, 5), seed in any::<u64>()) {
        let shape: Vec<(usize, Knowability)> = shape.into_iter().map(|(s, _)| (s, Knowability::L3)).collect();
        let ctx = random_context(&mut rng_for(seed, 3), &shape, seed % 2 == 0).unwrap();
        prop_assume!(ctx.path_count() <= 10_000);
        let k = ctx.num_layers() - 1;
        let exact = enumerate_paths(&ctx).unwrap();
        let chained = eval_classical(&ctx, k).unwrap();
        for (x, y) in exact.iter().zip(&chained.probs) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn state_vectors_have_unit_norm(
        sizes in prop::collection::vec(1usize..=5, 1..=3),
        seed in any::<u64>(),
    ) {
        let mut sizes = sizes;
        sizes.sort_unstable();
        let shape: Vec<(usize, Knowability)> = sizes.iter().map(|&s| (s, Knowability::L3)).collect();
        let ctx = random_context(&mut rng_for(seed, 4), &shape, true).unwrap();
        let first = eval_classical(&ctx, 0).unwrap();
        let v0 = to_state_vector(&ctx, 0).unwrap();
        prop_assert!((v0.norm() - 1.0).abs() < 1e-9);
        for j in 0..v0.dim() {
            let p = project(&v0, j).unwrap();
            prop_assert!((p.weight - first.probs[j]).abs() < 1e-12);
            let again = project(&p.state, j).unwrap();
            prop_assert_eq!(&again.state, &p.state);
        }
        let k = ctx.num_layers() - 1;
        let vk = to_state_vector(&ctx, k).unwrap();
        prop_assert!((vk.norm() - 1.0).abs() < 1e-9);
        let d = eval_interference(&ctx, k).unwrap();
        for j in 0..vk.dim() {
            let w = project(&vk, j).map(|p| p.weight).unwrap_or(0.0);
            prop_assert!((w - d.probs[j]).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solves_are_deterministic(m in 1usize..=3, mp in 1usize..=3, seed in any::<u64>(), gamma in prop::sample::select(vec![1.0, 2.0, 1.5])) {
        let shape = ShapeSpec::new(m, mp).unwrap();
        let system = build_system(shape, ProbabilityRule::gamma(gamma).unwrap()).unwrap();
        prop_assert_eq!(solve(&system, 6, seed), solve(&system, 6, seed));
    }

    #[test]
    fn born_witnesses_keep_every_first_layer_normalized(m in 1usize..=3, extra in 0usize..=2, seed in any::<u64>()) {
        let shape = ShapeSpec::new(m, m + extra).unwrap();
        let system = build_system(shape, ProbabilityRule::BORN).unwrap();
        let report = solve(&system, 8, seed);
        let witness = report.verdict.witness().expect("feasible when M' >= M");
        let dev = sampled_independence_check(shape, ProbabilityRule::BORN, &witness, 500, seed).unwrap();
        prop_assert!(dev < 1e-8, "{}", dev);
    }

    #[test]
    fn mc_frequencies_converge(shape in layers(3, 3), seed in any::<u64>()) {
        let shape: Vec<(usize, Knowability)> = shape.into_iter().map(|(s, _)| (s, Knowability::L3)).collect();
        let ctx = random_context(&mut rng_for(seed, 5), &shape, false).unwrap();
        let t = mc_sample_classical(&ctx, 40_000, seed).unwrap();
        prop_assert_eq!(t.counts.iter().sum::<u64>(), 40_000);
        prop_assert!(t.max_z() < 5.0, "{:?}", t);
    }
}

#[test]
fn path_expressions_are_complete() {
    for n in 1..=4u32 {
        for code in 0..4usize.pow(n) {
            let sizes: Vec<usize> = (0..n).map(|i| code / 4usize.pow(i) % 4 + 1).collect();
            let shape: Vec<(usize, Knowability)> = sizes.iter().map(|&s| (s, Knowability::L3)).collect();
            let ctx = random_context(&mut rng_for(code as u64, n as u64), &shape, false).unwrap();
            let state = initial_state(&ctx);
            for (k, b) in state.brackets().iter().enumerate() {
                let Bracket::Unresolved(entries) = b else { panic!("initial brackets are open") };
                let upstream: usize = sizes[..k].iter().product();
                assert_eq!(entries.len(), sizes[k]);
                for e in entries {
                    assert_eq!(e.terms.len(), upstream, "{sizes:?} layer {k}");
                }
            }
        }
    }
}

#[test]
fn dof_matches_independent_residual_count() {
    for m in 1..=5 {
        for mp in 1..=5 {
            let shape = ShapeSpec::new(m, mp).unwrap();
            let system = build_system(shape, ProbabilityRule::BORN).unwrap();
            let d = dof_count(shape, ProbabilityRule::BORN).unwrap();
            // One norm per row, two reals per unordered pair of rows.
            let pairs = m * (m - 1) / 2;
            assert_eq!(system.num_residuals(), m + 2 * pairs);
            assert_eq!(d.conditions as usize, system.num_residuals());
            assert_eq!(d.available, (2 * m * mp) as i64 - system.num_residuals() as i64);
        }
    }
}

#[test]
fn tensor_bases_are_orthonormal_up_to_dim_25() {
    for m in 1..=25usize {
        for mp in 1..=25usize {
            if m * mp > 25 {
                continue;
            }
            let mut rng = rng_for((m * 31 + mp) as u64, 0);
            let ctx = random_context(&mut rng, &[(m, Knowability::L3), (mp, Knowability::L3)], true).unwrap();
            let basis = tensor_context(&ctx, true).unwrap();
            assert_eq!(basis.dim(), m * mp);
            let v: Vec<StateVector> = basis.basis_vectors();
            for (a, x) in v.iter().enumerate() {
                for (b, y) in v.iter().enumerate() {
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((x.inner(y) - Complex64::new(want, 0.0)).norm() < 1e-15);
                }
            }
        }
    }
}
