use bitree_core::capacity::{capacity_lower_bound, dual_capacity, tree_capacity_exact};
use bitree_core::dense::DenseFunction;
use bitree_core::lattice::{BoxSet, DyadicBox, DyadicInterval};
use bitree_core::measure::AtomicMeasure;
use bitree_core::poset::RelevantPoset;
use bitree_core::solver::{maximize_dual, BoxKernel, SolverOptions};
use proptest::prelude::*;

fn interval(max_depth: usize) -> impl Strategy<Value = DyadicInterval> {
    prop::collection::vec(any::<bool>(), 0..=max_depth).prop_map(DyadicInterval::from_bits)
}

fn boxes(dim: usize, max_depth: usize) -> impl Strategy<Value = DyadicBox> {
    prop::collection::vec(interval(max_depth), dim).prop_map(|s| DyadicBox::new(s).unwrap())
}

fn measure(dim: usize, max_depth: usize, max_atoms: usize) -> impl Strategy<Value = AtomicMeasure> {
    prop::collection::vec((boxes(dim, max_depth), 0.01f64..1.0), 1..=max_atoms)
        .prop_map(move |atoms| AtomicMeasure::new(dim, atoms).unwrap())
}

fn box_set(dim: usize, max_depth: usize, max_len: usize) -> impl Strategy<Value = BoxSet> {
    prop::collection::vec(boxes(dim, max_depth), 1..=max_len).prop_map(move |b| BoxSet::new(dim, b).unwrap())
}

fn dense(dim: usize, depth: usize) -> impl Strategy<Value = Vec<f64>> {
    let per_axis = (1usize << (depth + 1)) - 1;
    prop::collection::vec(0.0f64..1.0, per_axis.pow(dim as u32))
}

fn dense_from(dim: usize, depth: usize, values: &[f64]) -> DenseFunction {
    let mut it = values.iter();
    DenseFunction::from_fn(dim, depth, |_| *it.next().unwrap()).unwrap()
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn containment_is_a_partial_order(a in boxes(2, 8), b in boxes(2, 8), c in boxes(2, 8)) {
        let ab = a.contains(&b).unwrap();
        if ab && b.contains(&c).unwrap() {
            prop_assert!(a.contains(&c).unwrap());
        }
        if ab && b.contains(&a).unwrap() {
            prop_assert_eq!(&a, &b);
        }
        prop_assert!(a.contains(&a).unwrap());
    }

    #[test]
    fn join_laws(a in boxes(2, 8), b in boxes(2, 8), c in boxes(2, 8)) {
        let ab = a.join(&b).unwrap();
        prop_assert_eq!(&ab, &b.join(&a).unwrap());
        prop_assert_eq!(&a.join(&a).unwrap(), &a);
        prop_assert_eq!(ab.join(&c).unwrap(), a.join(&b.join(&c).unwrap()).unwrap());
        prop_assert!(ab.contains(&a).unwrap() && ab.contains(&b).unwrap());
        // smallest common ancestor
        for r in a.ancestors().filter(|r| r.contains(&b).unwrap()) {
            prop_assert!(r.contains(&ab).unwrap());
        }
    }

    #[test]
    fn ancestor_count_matches_stream(d in 1usize..=3, bits in prop::collection::vec(0usize..=10, 3)) {
        prop_assume!(bits[..d].iter().sum::<usize>() <= 10);
        let b = DyadicBox::new(bits[..d].iter().map(|&k| DyadicInterval::zeros(k)).collect()).unwrap();
        let all: Vec<_> = b.ancestors().collect();
        prop_assert_eq!(all.len() as u128, b.ancestor_count());
        let unique = BoxSet::new(d, all.iter().cloned()).unwrap();
        prop_assert_eq!(unique.len(), all.len());
        prop_assert!(all.iter().all(|r| r.contains(&b).unwrap()));
    }

    #[test]
    fn reduction_matches_brute_force(set in box_set(2, 4, 20)) {
        let reduced = set.reduce_to_maximal();
        let brute: Vec<_> = set
            .iter()
            .filter(|b| !set.iter().any(|o| o != *b && o.contains(b).unwrap()))
            .cloned()
            .collect();
        prop_assert_eq!(reduced.as_slice(), &brute[..]);
    }

    #[test]
    fn adjointness_on_tree(f in dense(1, 6), g in dense(1, 6)) {
        let (f, g) = (dense_from(1, 6, &f), dense_from(1, 6, &g));
        let lhs = f.hardy_up_all().inner(&g).unwrap();
        let rhs = f.inner(&g.hardy_down_all()).unwrap();
        prop_assert!(rel(lhs, rhs) < 1e-12);
    }

    #[test]
    fn energy_scaling(nu in measure(2, 6, 6), t in 0.1f64..10.0) {
        let scaled = nu.scaled(t).unwrap();
        prop_assert!(rel(scaled.energy(), t * t * nu.energy()) < 1e-12);
        let e = BoxSet::new(2, nu.atoms().iter().map(|(b, _)| b.clone())).unwrap();
        let lb = capacity_lower_bound(&nu, &e).unwrap();
        let ratio = |m: &AtomicMeasure| m.total_mass().powi(2) / m.energy();
        prop_assert!(rel(ratio(&scaled), ratio(&nu)) < 1e-12);
        prop_assert!(lb <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjointness_on_bitree(f in dense(2, 3), g in dense(2, 3)) {
        let (f, g) = (dense_from(2, 3, &f), dense_from(2, 3, &g));
        let lhs = f.hardy_up_all().inner(&g).unwrap();
        let rhs = f.inner(&g.hardy_down_all()).unwrap();
        prop_assert!(rel(lhs, rhs) < 1e-12);
    }

    #[test]
    fn potentials_grow_towards_the_leaves(nu in measure(2, 6, 8)) {
        let poset = RelevantPoset::build(&nu).unwrap();
        for (i, e) in poset.entries().iter().enumerate() {
            for p in poset.parents(i) {
                prop_assert!(e.potential >= poset.entries()[p].potential);
                prop_assert!(e.mass <= poset.entries()[p].mass);
            }
        }
    }

    #[test]
    fn energy_three_ways(nu in measure(2, 6, 8)) {
        let poset = RelevantPoset::build(&nu).unwrap();
        let kernel = nu.energy();
        prop_assert!(rel(kernel, poset.energy()) < 1e-9);
        prop_assert!(rel(kernel, nu.energy_from_potentials()) < 1e-9);
    }

    #[test]
    fn potential_matches_dense_oracle(nu in measure(2, 4, 5)) {
        let f = DenseFunction::from_measure(&nu, 4).unwrap();
        let v = f.hardy_down_all().hardy_up_all();
        let poset = RelevantPoset::build(&nu).unwrap();
        for (alpha, value) in v.iter().step_by(37) {
            prop_assert!(rel(nu.potential(&alpha).unwrap(), value) < 1e-12);
            prop_assert!(rel(poset.potential(&alpha).unwrap(), value) < 1e-12);
        }
        let dense_count = f.hardy_down_all().values().iter().filter(|&&m| m > 0.0).count();
        prop_assert_eq!(poset.len(), dense_count);
    }

    #[test]
    fn tree_maximum_principle(nu in measure(1, 8, 10)) {
        let top = nu.potentials_on_support().into_iter().fold(0.0, f64::max);
        let nu = nu.scaled(1.0 / top).unwrap();
        let v = DenseFunction::from_measure(&nu, 8).unwrap().hardy_down_all().hardy_up_all();
        prop_assert!(v.values().iter().all(|&x| x <= 1.0 + 1e-12));
    }

    #[test]
    fn tree_partial_energy_bounds(nu in measure(1, 6, 10), frac in 0.0f64..1.2) {
        let poset = RelevantPoset::build(&nu).unwrap();
        let eps = frac * poset.max_potential();
        prop_assert!(poset.partial_energy(eps) <= eps * nu.total_mass() * (1.0 + 1e-12));
        for (alpha, _) in poset.iter_boxes() {
            for child in alpha.side(0).children() {
                let b = DyadicBox::interval(child);
                prop_assert!(poset.truncated_potential(eps, &b).unwrap() <= eps * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn cut_inequality_on_bitree(g in dense(2, 3), lambda in 0.1f64..4.0) {
        let g = dense_from(2, 3, &g);
        let ig = g.hardy_up_all();
        let cut = g.zip_with(&ig, |gv, iv| if iv <= lambda { gv } else { 0.0 }).hardy_up_all();
        for ((c, i), _) in cut.values().iter().zip(ig.values()).zip(g.values()) {
            let rhs = if *i <= lambda { *i } else { 0.0 };
            prop_assert!(*c >= rhs - 1e-12 * rhs);
        }
    }

    #[test]
    fn tree_cut_bound(nu in measure(1, 7, 10), frac in 0.05f64..1.0) {
        let g = DenseFunction::from_measure(&nu, 7).unwrap().hardy_down_all();
        let ig = g.hardy_up_all();
        let x = frac * ig.values().iter().copied().fold(0.0, f64::max);
        let cut = g.zip_with(&ig, |gv, iv| if iv <= x { gv } else { 0.0 }).hardy_up_all();
        for alpha in ig.vertices() {
            let Some(parent) = alpha.parent_along(0) else { continue };
            if ig.get(&alpha).unwrap() >= x && ig.get(&parent).unwrap() <= x {
                prop_assert!(cut.get(&alpha).unwrap() >= x / 2.0 * (1.0 - 1e-12));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dual_solver_matches_tree_capacity(set in box_set(1, 6, 12)) {
        let exact = tree_capacity_exact(&set).unwrap();
        let dual = dual_capacity(&set, &SolverOptions::default()).unwrap();
        prop_assert!(rel(exact.cap_value, dual.cap_value) < 1e-6);
        prop_assert!(dual.duality_gap >= -1e-12);
        prop_assert!(rel(exact.equilibrium.total_mass(), exact.cap_value) < 1e-9);
    }

    #[test]
    fn capacity_invariant_under_reduction(set in box_set(1, 6, 12)) {
        let full = tree_capacity_exact(&set).unwrap().cap_value;
        let reduced = tree_capacity_exact(&set.reduce_to_maximal()).unwrap().cap_value;
        prop_assert_eq!(full, reduced);
    }

    #[test]
    fn capacity_is_monotone(small in box_set(2, 4, 6), extra in box_set(2, 4, 6)) {
        let big = BoxSet::new(2, small.iter().chain(extra.iter()).cloned()).unwrap();
        let opts = SolverOptions::default();
        let a = dual_capacity(&small, &opts).unwrap().cap_value;
        let b = dual_capacity(&big, &opts).unwrap().cap_value;
        prop_assert!(a <= b + 1e-9);
    }

    #[test]
    fn ascent_is_monotone_and_weakly_dual(set in box_set(2, 5, 15), t in prop::collection::vec(0.0f64..2.0, 15)) {
        let boxes = set.as_slice();
        let targets = &t[..boxes.len()];
        let sol = maximize_dual(&BoxKernel::new(boxes), targets, &vec![0.0; boxes.len()], &SolverOptions::default());
        prop_assert!(sol.history.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs()));
        prop_assert_eq!(sol.weak_duality_violations, 0);
        prop_assert!(sol.gap() >= -1e-12 * sol.objective.abs());
    }
}
