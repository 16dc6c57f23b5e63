//! Capacity of level sets `D_x = {V^ν ≥ x}` on `T²` against the tree bound
//! `4|ν|/x`.
//!
//! Lower bounds come from the South-West corner boxes of the diagonal squares
//! lying in `D_x` (the frontier staircase, repeated in every square). The upper
//! bound uses `V^ν ≤ |ν|·#ancestors`, so `D_x` sits inside the set of boxes
//! with at least `⌈x/|ν|⌉` ancestors.

use anyhow::Result;
use bitree_core::capacity::{deep_box_capacity, level_set_capacity};
use bitree_core::constructions::{corner_box, symmetric_capacity, DiagonalMeasure, SemParams};
use bitree_core::lattice::BoxSet;
use rayon::prelude::*;

use super::partial_energy::projection;
use super::small_energy::lemma_constant;
use crate::report::{ExperimentReport, Relation};
use crate::{rel_diff, Settings};

/// Beyond this ancestor threshold the upper bound falls back to 1.
const MAX_ANCESTOR_THRESHOLD: f64 = (1u64 << 20) as f64;

/// Smallest relative `b ≤ n` with `V(a, b) ≥ x` for sampled `a`; the
/// potential is nondecreasing in both depths.
pub fn frontier(nu: &DiagonalMeasure, n: usize, x: f64, max_len: usize) -> Vec<(usize, usize)> {
    let samples: Vec<usize> = if n < max_len {
        (0..=n).collect()
    } else {
        let mut v: Vec<usize> = (0..max_len).map(|i| i * n / (max_len - 1)).collect();
        v.dedup();
        v
    };
    let mut out = Vec::new();
    for a in samples {
        if nu.potential(a, n) < x {
            continue;
        }
        let (mut lo, mut hi) = (0, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if nu.potential(a, mid) >= x {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        out.push((a, lo));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelPoint {
    pub lower: f64,
    pub upper: f64,
    pub benchmark: f64,
    pub witness: usize,
}

pub fn level_point(nu: &DiagonalMeasure, n: usize, x: f64, tree_factor: f64, s: &Settings) -> Result<LevelPoint> {
    let mass = nu.total_mass();
    let benchmark = tree_factor * mass / x;
    if x <= mass {
        return Ok(LevelPoint {
            lower: 1.0,
            upper: 1.0,
            benchmark,
            witness: 1,
        });
    }
    let corners = frontier(nu, n, x, s.config.levelset.max_witness);
    let lower = if corners.is_empty() {
        0.0
    } else {
        symmetric_capacity(nu.levels(), &corners, &s.solver)?.value
    };
    let k = (x / mass).ceil();
    let upper = if k > MAX_ANCESTOR_THRESHOLD {
        1.0
    } else {
        deep_box_capacity(k as u64, &s.solver)?.1
    };
    Ok(LevelPoint {
        lower,
        upper,
        benchmark,
        witness: corners.len(),
    })
}

fn record(r: &mut ExperimentReport, prefix: &str, pt: LevelPoint) {
    r.measure(format!("{prefix}.lower_bound"), pt.lower);
    r.measure(format!("{prefix}.upper_bound"), pt.upper);
    r.measure(format!("{prefix}.benchmark"), pt.benchmark);
    r.measure(format!("{prefix}.ratio"), pt.lower / pt.benchmark);
    r.measure(format!("{prefix}.witness_corners"), pt.witness as f64);
}

fn run_scale(k: u32, c: f64, s: &Settings, primary: bool) -> Result<ExperimentReport> {
    let cfg = &s.config.levelset;
    let p = SemParams::new(k)?;
    let n = p.n as usize;
    let nu = p.nu();
    let xc = c / p.n_f64();
    let mut r = ExperimentReport::new("cell");
    r.measure("mass", nu.total_mass());
    r.measure("x_c", xc);
    r.measure("x_c_over_mass", xc / nu.total_mass());
    let at_xc = level_point(&nu, n, xc, cfg.tree_factor, s)?;
    record(&mut r, "x_c", at_xc);
    r.measure("x_c.required", cfg.margin * at_xc.benchmark);

    // the curve between |ν| and max V
    let top = nu.potential(n, n);
    let pts = cfg.x_points.max(2);
    for i in 0..pts {
        let x = nu.total_mass() * (top / nu.total_mass()).powf(i as f64 / (pts - 1) as f64);
        let pt = level_point(&nu, n, x, cfg.tree_factor, s)?;
        r.measure(format!("curve{i:02}.x"), x);
        record(&mut r, &format!("curve{i:02}"), pt);
    }

    // equilibrium measures as ν
    let omega = symmetric_capacity(p.mexp, &[p.omega_depths()], &s.solver)?.measure(p.mexp)?;
    record(&mut r, "eq_omega", level_point(&omega, n, xc, cfg.tree_factor, s)?);
    r.measure("eq_omega.mass", omega.total_mass());
    let eq_f = symmetric_capacity(p.mexp, &p.q_depths(), &s.solver)?.measure(p.mexp)?;
    record(&mut r, "eq_f", level_point(&eq_f, n, xc, cfg.tree_factor, s)?);
    r.measure("eq_f.mass", eq_f.total_mass());

    if k <= 3 {
        // the same level sets of the projected measure on T obey the tree bound
        let t = projection(&p)?;
        let mass = t.total_mass();
        let vmax = t.potentials_on_support().into_iter().fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for i in 0..pts {
            let x = mass * (vmax / mass).powf(i as f64 / (pts - 1) as f64);
            let cap = level_set_capacity(&t, x, None, &s.solver)?.value();
            worst = worst.max(cap / (cfg.tree_factor * mass / x));
        }
        r.measure("tree_control.max_ratio", worst);
        r.check("tree_control", "tree_control.max_ratio", Relation::Le, 1.0, 1.0 + 1e-12);
    }
    if k <= 2 {
        let corners = frontier(&nu, n, xc, cfg.max_witness);
        let mut boxes = Vec::new();
        for j in 0..p.copies() {
            for &(a, b) in &corners {
                boxes.push(corner_box(j, p.mexp, a, b)?);
            }
        }
        let generic = level_set_capacity(&p.build_nu()?, xc, Some(&BoxSet::new(2, boxes)?), &s.solver)?.value();
        r.measure("generic_rel_diff", rel_diff(generic, at_xc.lower));
        r.check("generic_agrees", "generic_rel_diff", Relation::Le, 1.0, cfg.cross_check_rel);
    }
    r.check("bounds_ordered", "x_c.lower_bound", Relation::Le, 1.0 + 1e-9, "x_c.upper_bound");
    if primary {
        r.check("tree_bound_violated", "x_c.lower_bound", Relation::Gt, cfg.margin, "x_c.benchmark");
    }
    Ok(r)
}

pub fn levelset(scales: &[u32], s: &Settings) -> Result<ExperimentReport> {
    let cfg = &s.config.levelset;
    let lemma = lemma_constant(&s.config.small_energy.lemma_scales)?;
    let mut r = ExperimentReport::new("levelset");
    r.param("s", scales);
    r.param("margin", cfg.margin);
    r.param("tree_factor", cfg.tree_factor);
    r.param("supplementary_scales", &cfg.supplementary_scales);
    r.measure("lemma.c", lemma.c);
    let mut cells: Vec<(u32, bool)> = scales.iter().map(|&k| (k, true)).collect();
    cells.extend(cfg.supplementary_scales.iter().filter(|k| !scales.contains(k)).map(|&k| (k, false)));
    let reports: Vec<(u32, ExperimentReport)> = cells
        .par_iter()
        .map(|&(k, primary)| Ok((k, run_scale(k, lemma.c, s, primary)?)))
        .collect::<Result<_>>()?;
    for (k, cell) in reports {
        r.absorb(&format!("s{k}"), cell);
    }
    r.note("nu is the small-energy measure (mass 1/n^2 at every omega_j, |nu| = 1/(n log n)) and x_c = c/n");
    r.note("lower bounds use the corner frontier of D_x in every diagonal square; upper bounds use V <= |nu| #ancestors");
    r.note("eq_omega and eq_f repeat x = c/n with the equilibrium measures of {omega_j} and of F");
    Ok(r)
}
