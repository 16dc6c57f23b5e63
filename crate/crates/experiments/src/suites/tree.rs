//! Randomized positive suites on `T` and the oracle cross-checks on `T` and `T²`.

use anyhow::Result;
use bitree_core::capacity::{dual_capacity, tree_capacity_exact};
use bitree_core::dense::DenseFunction;
use bitree_core::lattice::BoxSet;
use bitree_core::poset::RelevantPoset;
use rand::Rng;
use rayon::prelude::*;

use crate::random::{self, generator, trial_seeds};
use crate::report::{ExperimentReport, Relation};
use crate::{rel_diff, Settings};

#[derive(Clone, Copy, Debug, Default)]
struct MeasureTrial {
    max_principle: bool,
    truncated: bool,
    partial: bool,
    max_potential: f64,
    truncated_ratio: f64,
    partial_ratio: f64,
    route_diff: f64,
}

fn measure_trial(seed: u64, s: &Settings) -> Result<MeasureTrial> {
    let cfg = &s.config.tree;
    let mut rng = generator(seed);
    let nu = random::measure(&mut rng, 1, cfg.depth, cfg.max_atoms);
    let slack = 1.0 + cfg.slack;

    // maximum principle: V ≤ 1 on supp ν forces V ≤ 1 everywhere
    let top = nu.potentials_on_support().into_iter().fold(0.0, f64::max);
    let unit = nu.scaled(1.0 / top)?;
    let v_unit = DenseFunction::from_measure(&unit, cfg.depth)?.hardy_down_all().hardy_up_all();
    let max_potential = v_unit.values().iter().copied().fold(0.0, f64::max);

    let g = DenseFunction::from_measure(&nu, cfg.depth)?.hardy_down_all();
    let v = g.hardy_up_all();
    let vmax = v.values().iter().copied().fold(0.0, f64::max);
    let delta = rng.gen_range(0.01..1.2) * vmax;
    let cut = g.zip_with(&v, |gv, vv| if vv <= delta { gv } else { 0.0 });
    let truncated = cut.hardy_up_all().values().iter().copied().fold(0.0, f64::max);
    let dense_partial = cut.inner(&cut)?;
    let poset_partial = RelevantPoset::build_with(&nu, s.poset)?.partial_energy(delta);
    let bound = delta * nu.total_mass();
    Ok(MeasureTrial {
        max_principle: max_potential <= slack,
        truncated: truncated <= delta * slack,
        partial: dense_partial <= bound * slack,
        max_potential,
        truncated_ratio: truncated / delta,
        partial_ratio: dense_partial / bound,
        route_diff: rel_diff(dense_partial, poset_partial),
    })
}

#[derive(Clone, Copy, Debug, Default)]
struct PairTrial {
    violations: usize,
    max_ratio: f64,
    route_diff: f64,
}

/// `C(x) ≤ 4|ν|/x` for the equilibrium measure `ν` of a random `E`, with `D_x`
/// enumerated exhaustively on the dense lattice.
fn pair_trial(seed: u64, s: &Settings) -> Result<PairTrial> {
    let cfg = &s.config.tree;
    let mut rng = generator(seed);
    let e = random::box_set(&mut rng, 1, cfg.depth, cfg.max_set_size);
    let nu = tree_capacity_exact(&e)?.equilibrium;
    let mass = nu.total_mass();
    let v = DenseFunction::from_measure(&nu, cfg.depth)?.hardy_down_all().hardy_up_all();
    let mut out = PairTrial::default();
    // interior grid: at x = |ν| and x = 1 the level set hinges on round-off
    let k = cfg.x_points.max(1);
    for i in 0..k {
        let x = mass * (1.0 / mass).powf((i as f64 + 0.5) / k as f64);
        let level: Vec<_> = v.iter().filter(|(_, p)| *p >= x).map(|(b, _)| b).collect();
        let exhaustive = if level.is_empty() {
            0.0
        } else {
            tree_capacity_exact(&BoxSet::new(1, level)?)?.cap_value
        };
        let routed = bitree_core::capacity::level_set_capacity(&nu, x, None, &s.solver)?.value();
        let bound = cfg.level_set_factor * mass / x;
        if exhaustive > bound * (1.0 + cfg.slack) {
            out.violations += 1;
        }
        out.max_ratio = out.max_ratio.max(exhaustive / bound);
        out.route_diff = out.route_diff.max(rel_diff(exhaustive, routed));
    }
    Ok(out)
}

pub fn verify_tree(s: &Settings) -> Result<ExperimentReport> {
    let cfg = &s.config.tree;
    let mut r = ExperimentReport::new("verify-tree");
    r.seed = Some(s.seed);
    r.param("trials", cfg.trials);
    r.param("depth", cfg.depth);
    r.param("max_atoms", cfg.max_atoms);
    r.param("capacitary_pairs", cfg.capacitary_pairs);
    r.param("x_points", cfg.x_points);
    r.param("slack", cfg.slack);

    let seeds = trial_seeds(s.seed, cfg.trials + cfg.capacitary_pairs);
    let trials: Vec<MeasureTrial> = seeds[..cfg.trials]
        .par_iter()
        .map(|&seed| measure_trial(seed, s))
        .collect::<Result<_>>()?;
    let pairs: Vec<PairTrial> = seeds[cfg.trials..]
        .par_iter()
        .map(|&seed| pair_trial(seed, s))
        .collect::<Result<_>>()?;

    let count = |f: fn(&MeasureTrial) -> bool| trials.iter().filter(|t| !f(t)).count() as f64;
    let fold = |f: fn(&MeasureTrial) -> f64| trials.iter().map(f).fold(0.0, f64::max);
    r.measure("max_principle.violations", count(|t| t.max_principle));
    r.measure("max_principle.max_potential", fold(|t| t.max_potential));
    r.measure("truncated_potential.violations", count(|t| t.truncated));
    r.measure("truncated_potential.max_ratio", fold(|t| t.truncated_ratio));
    r.measure("partial_energy.violations", count(|t| t.partial));
    r.measure("partial_energy.max_ratio", fold(|t| t.partial_ratio));
    r.measure("partial_energy.route_rel_diff", fold(|t| t.route_diff));
    r.measure(
        "level_set.violations",
        pairs.iter().map(|p| p.violations).sum::<usize>() as f64,
    );
    r.measure("level_set.max_ratio", pairs.iter().map(|p| p.max_ratio).fold(0.0, f64::max));
    r.measure("level_set.route_rel_diff", pairs.iter().map(|p| p.route_diff).fold(0.0, f64::max));

    for key in [
        "max_principle",
        "truncated_potential",
        "partial_energy",
        "level_set",
    ] {
        r.check(key, format!("{key}.violations"), Relation::Le, 1.0, 0.0);
    }
    r.check(
        "level_set_routes_agree",
        "level_set.route_rel_diff",
        Relation::Le,
        1.0,
        s.config.oracles.capacity_rel,
    );
    r.note("level_set ratios are C(x) / (4|nu|/x) for the equilibrium measure of a random E");
    Ok(r)
}

#[derive(Clone, Copy, Debug, Default)]
struct OracleTrial {
    energy_poset: f64,
    energy_potentials: f64,
    potential_dense: f64,
}

fn oracle_trial(seed: u64, s: &Settings) -> Result<OracleTrial> {
    let cfg = &s.config.oracles;
    let mut rng = generator(seed);
    let nu = random::measure(&mut rng, 2, cfg.depth, cfg.max_atoms);
    let poset = RelevantPoset::build_with(&nu, s.poset)?;
    let kernel = nu.energy();
    // the dense lattice is affordable only for shallow measures
    let potential_dense = if nu.max_depth() <= 4 {
        let v = DenseFunction::from_measure(&nu, 4)?.hardy_down_all().hardy_up_all();
        let mut worst: f64 = 0.0;
        for (alpha, value) in v.iter().step_by(7) {
            worst = worst.max(rel_diff(poset.potential(&alpha)?, value));
        }
        worst
    } else {
        0.0
    };
    Ok(OracleTrial {
        energy_poset: rel_diff(kernel, poset.energy()),
        energy_potentials: rel_diff(kernel, nu.energy_from_potentials()),
        potential_dense,
    })
}

fn adjoint_trial(seed: u64, dim: usize, depth: usize) -> Result<f64> {
    let mut rng = generator(seed);
    let f = DenseFunction::from_fn(dim, depth, |_| rng.gen::<f64>())?;
    let g = DenseFunction::from_fn(dim, depth, |_| rng.gen::<f64>())?;
    let lhs = f.hardy_up_all().inner(&g)?;
    let rhs = f.inner(&g.hardy_down_all())?;
    Ok(rel_diff(lhs, rhs))
}

fn capacity_trial(seed: u64, s: &Settings) -> Result<f64> {
    let cfg = &s.config.oracles;
    let mut rng = generator(seed);
    let e = random::box_set(&mut rng, 1, cfg.depth, s.config.tree.max_set_size);
    let exact = tree_capacity_exact(&e)?.cap_value;
    let dual = dual_capacity(&e, &s.solver)?.cap_value;
    Ok(rel_diff(exact, dual))
}

pub fn verify_oracles(s: &Settings) -> Result<ExperimentReport> {
    let cfg = &s.config.oracles;
    let mut r = ExperimentReport::new("verify-oracles");
    r.seed = Some(s.seed);
    r.param("trials", cfg.trials);
    r.param("depth", cfg.depth);
    r.param("max_atoms", cfg.max_atoms);
    r.param("adjoint_trials", cfg.adjoint_trials);
    r.param("capacity_sets", cfg.capacity_sets);

    let seeds = trial_seeds(s.seed, cfg.trials + 2 * cfg.adjoint_trials + cfg.capacity_sets);
    let (energy_seeds, rest) = seeds.split_at(cfg.trials);
    let (adjoint_seeds, capacity_seeds) = rest.split_at(2 * cfg.adjoint_trials);
    let oracles: Vec<OracleTrial> = energy_seeds
        .par_iter()
        .map(|&seed| oracle_trial(seed, s))
        .collect::<Result<_>>()?;
    let adjoint_tree: Vec<f64> = adjoint_seeds[..cfg.adjoint_trials]
        .par_iter()
        .map(|&seed| adjoint_trial(seed, 1, cfg.depth))
        .collect::<Result<_>>()?;
    let adjoint_bitree: Vec<f64> = adjoint_seeds[cfg.adjoint_trials..]
        .par_iter()
        .map(|&seed| adjoint_trial(seed, 2, 4))
        .collect::<Result<_>>()?;
    let capacity: Vec<f64> = capacity_seeds
        .par_iter()
        .map(|&seed| capacity_trial(seed, s))
        .collect::<Result<_>>()?;

    let max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, f64::max);
    r.measure("energy.poset_rel_diff", max(&mut oracles.iter().map(|t| t.energy_poset)));
    r.measure("energy.potentials_rel_diff", max(&mut oracles.iter().map(|t| t.energy_potentials)));
    r.measure("potential.dense_rel_diff", max(&mut oracles.iter().map(|t| t.potential_dense)));
    r.measure("adjoint.tree_rel_diff", max(&mut adjoint_tree.iter().copied()));
    r.measure("adjoint.bitree_rel_diff", max(&mut adjoint_bitree.iter().copied()));
    r.measure("capacity.dual_vs_exact_rel_diff", max(&mut capacity.iter().copied()));

    r.check("energy_poset", "energy.poset_rel_diff", Relation::Le, 1.0, cfg.energy_rel);
    r.check("energy_potentials", "energy.potentials_rel_diff", Relation::Le, 1.0, cfg.energy_rel);
    r.check("potential_dense", "potential.dense_rel_diff", Relation::Le, 1.0, cfg.energy_rel);
    r.check("adjoint_tree", "adjoint.tree_rel_diff", Relation::Le, 1.0, cfg.adjoint_rel);
    r.check("adjoint_bitree", "adjoint.bitree_rel_diff", Relation::Le, 1.0, cfg.adjoint_rel);
    r.check("dual_capacity", "capacity.dual_vs_exact_rel_diff", Relation::Le, 1.0, cfg.capacity_rel);
    r.note("adjointness on T uses depth `depth`; on T^2 the dense lattice has depth 4 per axis");
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Settings {
        let mut s = Settings::default();
        s.config.tree.trials = 30;
        s.config.tree.capacitary_pairs = 8;
        s.config.oracles.trials = 20;
        s.config.oracles.adjoint_trials = 10;
        s.config.oracles.capacity_sets = 10;
        s
    }

    #[test]
    fn tree_suite_passes_and_is_deterministic() {
        let s = small();
        let a = verify_tree(&s).unwrap();
        assert!(a.passed(), "{:?}", a.failed().collect::<Vec<_>>());
        assert!(a.get("max_principle.max_potential").unwrap() <= 1.0 + 1e-12);
        assert!(a.is_consistent());
        let b = verify_tree(&s).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn oracle_suite_passes() {
        let r = verify_oracles(&small()).unwrap();
        assert!(r.passed(), "{:?}", r.failed().collect::<Vec<_>>());
        assert!(r.is_consistent());
    }

    #[test]
    fn root_measure_is_trivial() {
        // a single atom at the root: V ≡ |ν| everywhere
        let nu = bitree_core::AtomicMeasure::new(1, [("e".parse().unwrap(), 0.5)]).unwrap();
        let v = DenseFunction::from_measure(&nu, 3).unwrap().hardy_down_all().hardy_up_all();
        assert!(v.values().iter().all(|&x| x == 0.5));
    }
}
