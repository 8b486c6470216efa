use axmul_core::adder::{load_library, AdderLibrary, FullAdderSpec};
use axmul_core::cluster::{cluster_sweep, ClusterSpec};
use axmul_core::design::{select_per_cluster, DesignId, SelectionPolicy};
use axmul_core::fabric::{build_multiplier, Architecture, MultiplierConfig};
use axmul_core::metrics::{exhaustive_sweep, finalize, global_pmax, EvalOutcome, MetricAccumulator};
use proptest::prelude::*;

fn outcomes() -> impl Strategy<Value = Vec<EvalOutcome>> {
    prop::collection::vec((0u64..1 << 16, 0u64..1 << 16), 0..64)
        .prop_map(|v| v.into_iter().map(|(p, q)| EvalOutcome::new(0, 0, p, q)).collect())
}

fn acc(v: &[EvalOutcome]) -> MetricAccumulator {
    v.iter().collect()
}

fn library(sum: u8, cout: u8) -> AdderLibrary {
    AdderLibrary::from_specs([FullAdderSpec::from_masks("T", sum, cout)]).unwrap()
}

fn arch() -> impl Strategy<Value = Architecture> {
    prop_oneof![Just(Architecture::RippleCarry), Just(Architecture::CarrySave)]
}

proptest! {
    #[test]
    fn merge_is_commutative_and_associative(a in outcomes(), b in outcomes(), c in outcomes()) {
        let (a, b, c) = (acc(&a), acc(&b), acc(&c));
        prop_assert_eq!(a.merge(&b), b.merge(&a));
        prop_assert_eq!(a.merge(&b).merge(&c), a.merge(&b.merge(&c)));
        prop_assert_eq!(a.merge(&MetricAccumulator::new()), a);
    }

    #[test]
    fn any_partition_gives_the_same_accumulator(v in outcomes(), cuts in prop::collection::vec(0usize..64, 0..8)) {
        let whole = acc(&v);
        let mut cuts: Vec<usize> = cuts.into_iter().map(|c| c.min(v.len())).collect();
        cuts.sort_unstable();
        let mut parts = Vec::new();
        let mut start = 0;
        for c in cuts.into_iter().chain([v.len()]) {
            parts.push(acc(&v[start..c]));
            start = c;
        }
        let merged = parts.iter().rev().fold(MetricAccumulator::new(), |m, p| m.merge(p));
        prop_assert_eq!(merged, whole);
    }

    #[test]
    fn mse_dominates_squared_med(sum in any::<u8>(), cout in any::<u8>(), degree in 0u32..=8, a in arch()) {
        let lib = library(sum, cout);
        let g = build_multiplier(&MultiplierConfig::with_architecture(4, "T", degree, a), &lib).unwrap();
        let r = finalize(&exhaustive_sweep(&g), global_pmax(4)).unwrap();
        prop_assert!(r.mse >= r.med * r.med);
        prop_assert!(r.er >= 0.0 && r.er <= 1.0);
        prop_assert!(r.max_ed as f64 >= r.med);
    }

    #[test]
    fn degree_zero_is_exact(sum in any::<u8>(), cout in any::<u8>(), n in 2u32..=5, a in arch()) {
        let lib = library(sum, cout);
        let g = build_multiplier(&MultiplierConfig::with_architecture(n, "T", 0, a), &lib).unwrap();
        prop_assert_eq!(g.approximate_cell_count(), 0);
        prop_assert_eq!(exhaustive_sweep(&g).sum_ed, 0);
    }

    #[test]
    fn approximate_cells_grow_with_degree(n in 2u32..=8, d1 in 0u32..=16, d2 in 0u32..=16, a in arch()) {
        let (lo, hi) = (d1.min(d2).min(2 * n), d1.max(d2).min(2 * n));
        let lib = AdderLibrary::exact_only();
        let small = build_multiplier(&MultiplierConfig::with_architecture(n, "exact", lo, a), &lib).unwrap();
        let large = build_multiplier(&MultiplierConfig::with_architecture(n, "exact", hi, a), &lib).unwrap();
        for (s, l) in small.cells().iter().zip(large.cells()) {
            prop_assert!(!s.approximate || l.approximate);
            prop_assert_eq!(s.approximate, s.weight < lo);
        }
    }

    #[test]
    fn threshold_counts_are_monotone(sum in any::<u8>(), cout in any::<u8>(), degree in 0u32..=8, t1 in 0.0f64..2.0, t2 in 0.0f64..2.0, p1 in 0.0f64..60.0, p2 in 0.0f64..60.0) {
        let lib = library(sum, cout);
        let g = build_multiplier(&MultiplierConfig::new(4, "T", degree), &lib).unwrap();
        let r = cluster_sweep(&g, &ClusterSpec::new(4, 4).unwrap()).unwrap();
        let (tl, th) = (t1.min(t2), t1.max(t2));
        let (pl, ph) = (p1.min(p2), p1.max(p2));
        prop_assert!(r.count_ned_over(tl) >= r.count_ned_over(th));
        prop_assert!(r.count_psnr_under(pl) <= r.count_psnr_under(ph));
    }

    #[test]
    fn library_document_round_trips(tables in prop::collection::vec((any::<u8>(), any::<u8>()), 1..6)) {
        let lib = AdderLibrary::from_specs(
            tables.iter().enumerate().map(|(i, &(s, c))| FullAdderSpec::from_masks(format!("FA{i}"), s, c)),
        ).unwrap();
        let back = load_library(&lib.to_document()).unwrap();
        prop_assert_eq!(&back, &lib);
        prop_assert_eq!(back.to_document(), lib.to_document());
    }

    #[test]
    fn looser_ned_threshold_never_lowers_the_chosen_degree(
        specs in prop::collection::vec((any::<u8>(), any::<u8>()), 2..4),
        t1 in 0.0f64..1.5,
        t2 in 0.0f64..1.5,
    ) {
        let lib = AdderLibrary::from_specs(
            specs.iter().enumerate().map(|(i, &(s, c))| FullAdderSpec::from_masks(format!("T{i}"), s, c)),
        ).unwrap();
        let spec = ClusterSpec::new(4, 4).unwrap();
        let mut evals = Vec::new();
        for (i, _) in specs.iter().enumerate() {
            for (k, degree) in [2u32, 4, 6].into_iter().enumerate() {
                let g = build_multiplier(&MultiplierConfig::new(4, format!("T{i}"), degree), &lib).unwrap();
                let id = DesignId { ordinal: (3 * i + k + 1) as u32, adder: format!("T{i}"), degree, knob: None };
                evals.push((id, cluster_sweep(&g, &spec).unwrap()));
            }
        }
        let cands: Vec<(DesignId, &_)> = evals.iter().map(|(id, r)| (id.clone(), r)).collect();
        let degree_of = |o: Option<u32>| o.map_or(0, |o| cands[o as usize - 1].0.degree);
        let strict = select_per_cluster(&cands, &SelectionPolicy::ned(t1.min(t2))).unwrap();
        let loose = select_per_cluster(&cands, &SelectionPolicy::ned(t1.max(t2))).unwrap();
        for (s, l) in strict.assignments.iter().zip(&loose.assignments) {
            prop_assert!(degree_of(*l) >= degree_of(*s));
        }
        prop_assert!(loose.exact_fraction() <= strict.exact_fraction());
    }
}
