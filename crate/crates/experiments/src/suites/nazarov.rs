//! No function of `x` bounds the partial energy at threshold `Cx`.

use anyhow::{anyhow, Result};
use bitree_core::constructions::{nazarov_max_potential, nazarov_restricted_energy, NazarovParams};
use bitree_core::poset::RelevantPoset;
use rayon::prelude::*;

use crate::report::{ExperimentReport, Relation};
use crate::{rel_diff, Settings};

fn run_cell(x: u64, m: usize, s: &Settings) -> Result<ExperimentReport> {
    let cfg = &s.config.nazarov;
    let p = NazarovParams::from_x(x, m)?;
    let mut r = ExperimentReport::new("cell");
    let xf = p.x();
    let (vmax, j, i) = nazarov_max_potential(&p);
    let restricted = nazarov_restricted_energy(&p, vmax);
    r.measure("n", p.n as f64);
    r.measure("vmax", vmax);
    r.measure("vmax_at_j", j as f64);
    r.measure("vmax_at_i", i as f64);
    r.measure("c_meas", vmax / xf);
    r.measure("restricted_energy", restricted.energy);
    r.measure("family_boxes", restricted.boxes as f64);
    r.measure("qualifying_boxes", restricted.qualifying as f64);
    r.measure("family_max_potential", restricted.max_potential);
    r.measure("s_ratio", restricted.energy / (xf * (xf.log2() + m as f64)));

    let mut listed: f64 = 0.0;
    let mut other: f64 = 0.0;
    let mut large: f64 = 0.0;
    let mut main = f64::INFINITY;
    let mut class_rel: f64 = 0.0;
    for i in 0..p.logn {
        let side = p.side_rectangles(i)?;
        listed = listed.max(side.tall.contribution + side.long.contribution);
        other = other.max(side.tall_other.contribution + side.long_other.contribution);
        large = large.max(side.large_total().contribution);
        main = main.min(side.main.contribution);
        let (a, b) = p.q_depths()[i];
        let direct = p.corner_potential(bitree_core::constructions::off_diagonal_sum_at(0, m), a, b);
        class_rel = class_rel.max(rel_diff(side.total().contribution, direct));
    }
    r.measure("sides.listed_max", listed);
    r.measure("sides.unlisted_max", other);
    r.measure("sides.large_max", large);
    r.measure("sides.main_min", main);
    r.measure("sides.classes_rel_diff", class_rel);
    r.measure("sides.x_bound", xf.powf(cfg.side_exponent));
    r.check("listed_sides", "sides.listed_max", Relation::Le, 1.0, "sides.x_bound");
    r.check("large_rectangles", "sides.large_max", Relation::Le, 1.0, cfg.large_bound);
    r.check("classes_partition", "sides.classes_rel_diff", Relation::Le, 1.0, 1e-12);

    if m <= cfg.cross_check_max_m {
        let poset = RelevantPoset::build_with(&p.build_measure()?, s.poset)?;
        let lookup = |b: &bitree_core::DyadicBox| {
            poset
                .get(b)
                .copied()
                .ok_or_else(|| anyhow!("family box {b} outside the relevant poset"))
        };
        let mut generic_vmax: f64 = 0.0;
        for j in 0..p.copies() {
            for i in 0..p.logn {
                generic_vmax = generic_vmax.max(lookup(&p.q_box(j, i)?)?.potential);
            }
        }
        let mut generic = 0.0;
        for (_, _, b) in p.families() {
            let e = lookup(&b)?;
            if e.potential <= generic_vmax {
                generic += e.mass * e.mass;
            }
        }
        r.measure("generic.vmax_rel_diff", rel_diff(generic_vmax, vmax));
        r.measure("generic.restricted_rel_diff", rel_diff(generic, restricted.energy));
        r.check("generic_vmax", "generic.vmax_rel_diff", Relation::Le, 1.0, 1e-12);
        r.check("generic_restricted", "generic.restricted_rel_diff", Relation::Le, 1.0, 1e-12);
    }
    Ok(r)
}

pub fn nazarov(x: u64, ms: &[usize], s: &Settings) -> Result<ExperimentReport> {
    let cfg = &s.config.nazarov;
    let mut r = ExperimentReport::new("cex-nazarov");
    r.param("x", x);
    r.param("M", ms);
    r.param("stability", cfg.stability);
    r.param("large_bound", cfg.large_bound);
    r.param("side_exponent", cfg.side_exponent);

    let cells: Vec<(usize, ExperimentReport)> = ms
        .par_iter()
        .map(|&m| Ok((m, run_cell(x, m, s)?)))
        .collect::<Result<_>>()?;
    for (m, cell) in cells {
        r.absorb(&format!("M{m}"), cell);
    }
    let spread = |key: &str| {
        let vals: Vec<f64> = ms.iter().filter_map(|m| r.get(&format!("M{m}.{key}"))).collect();
        let hi = vals.iter().copied().fold(0.0, f64::max);
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        (hi / lo, lo)
    };
    let (c_spread, _) = spread("c_meas");
    let (s_spread, s_min) = spread("s_ratio");
    r.measure("c_meas_spread", c_spread);
    r.measure("s_ratio_spread", s_spread);
    r.measure("s_ratio_min", s_min);
    r.check("c_meas_stable", "c_meas_spread", Relation::Le, 1.0, cfg.stability);
    r.check("s_ratio_stable", "s_ratio_spread", Relation::Le, 1.0, cfg.stability);
    r.check("s_ratio_positive", "s_ratio_min", Relation::Gt, 1.0, 0.0);
    let mut sorted = ms.to_vec();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        r.check(
            format!("restricted_increasing_M{}_M{}", w[0], w[1]),
            format!("M{}.restricted_energy", w[1]),
            Relation::Gt,
            1.0,
            format!("M{}.restricted_energy", w[0]),
        );
    }
    r.note("F_ji takes relative x-depths in (n/2^(i+1), n/2^i] and y-depths in [0, 2^i]");
    r.note(
        "sides.listed_max covers the tall/long boxes at the listed depths; sides.unlisted_max is the remaining one-sided boxes",
    );
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cells_pass() {
        let r = nazarov(4, &[2, 3], &Settings::default()).unwrap();
        assert!(r.is_consistent());
        for key in ["generic_vmax", "generic_restricted", "classes_partition"] {
            for m in [2, 3] {
                let v = r.verdicts.iter().find(|v| v.name == format!("M{m}.{key}")).unwrap();
                assert!(v.passed, "{key} at M = {m}");
            }
        }
        assert!(r.get("M3.restricted_energy").unwrap() > r.get("M2.restricted_energy").unwrap());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(nazarov(3, &[4], &Settings::default()).is_err());
    }
}
