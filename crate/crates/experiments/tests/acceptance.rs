//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bitree_experiments::report::ExperimentReport;
use bitree_experiments::{suites, Settings};

struct Line {
    id: usize,
    title: &'static str,
    passed: bool,
    detail: String,
}

fn verdicts(r: &ExperimentReport, names: &[String]) -> (bool, Vec<String>) {
    let mut ok = true;
    let mut failed = Vec::new();
    for n in names {
        match r.verdicts.iter().find(|v| &v.name == n) {
            Some(v) if v.passed => {}
            Some(v) => {
                ok = false;
                failed.push(v.describe());
            }
            None => {
                ok = false;
                failed.push(format!("missing verdict {n}"));
            }
        }
    }
    (ok && r.is_consistent(), failed)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

fn all(r: &ExperimentReport) -> Vec<String> {
    r.verdicts.iter().map(|v| v.name.clone()).collect()
}

fn get(r: &ExperimentReport, key: &str) -> f64 {
    r.get(key).unwrap_or(f64::NAN)
}

fn main() -> ExitCode {
    let s = Settings::default();
    let mut lines = Vec::new();
    let mut push = |id, title, passed, detail: String| {
        let line = Line {
            id,
            title,
            passed,
            detail,
        };
        println!(
            "{} [{}] {}: {}",
            if line.passed { "PASS" } else { "FAIL" },
            line.id,
            line.title,
            line.detail
        );
        lines.push(line);
    };

    let (tree, t) = timed(|| suites::verify_tree(&s).expect("tree suite"));
    let (ok, failed) = verdicts(&tree, &all(&tree));
    push(
        1,
        "tree positive suite",
        ok && t < Duration::from_secs(60),
        format!(
            "violations mp/de/en/capT = {}/{}/{}/{}, max C(x)x/(4|nu|) = {:.4}, {:.1}s {failed:?}",
            get(&tree, "max_principle.violations"),
            get(&tree, "truncated_potential.violations"),
            get(&tree, "partial_energy.violations"),
            get(&tree, "level_set.violations"),
            get(&tree, "level_set.max_ratio"),
            t.as_secs_f64()
        ),
    );

    let (oracles, t) = timed(|| suites::verify_oracles(&s).expect("oracle suite"));
    let (ok, failed) = verdicts(&oracles, &all(&oracles));
    push(
        2,
        "oracle equivalence",
        ok && t < Duration::from_secs(60),
        format!(
            "energy {:.1e}/{:.1e}, adjoint {:.1e}/{:.1e}, dual vs exact {:.1e}, {:.1}s {failed:?}",
            get(&oracles, "energy.poset_rel_diff"),
            get(&oracles, "energy.potentials_rel_diff"),
            get(&oracles, "adjoint.tree_rel_diff"),
            get(&oracles, "adjoint.bitree_rel_diff"),
            get(&oracles, "capacity.dual_vs_exact_rel_diff"),
            t.as_secs_f64()
        ),
    );

    let (sem, t) = timed(|| suites::small_energy(&[2, 3], &s).expect("small-energy"));
    let names: Vec<String> = [2, 3]
        .iter()
        .flat_map(|k| {
            ["gap", "potential_on_f", "potential_on_support"]
                .iter()
                .map(move |n| format!("s{k}.{n}"))
        })
        .collect();
    let (ok, failed) = verdicts(&sem, &names);
    push(
        3,
        "capacity certificates",
        ok && t < Duration::from_secs(300),
        format!(
            "gap {:.1e}/{:.1e}, min V on F {:.9}/{:.9}, |V-1| on supp {:.1e}/{:.1e}, {:.1}s {failed:?}",
            get(&sem, "s2.gap"),
            get(&sem, "s3.gap"),
            get(&sem, "s2.min_potential_on_f"),
            get(&sem, "s3.min_potential_on_f"),
            get(&sem, "s2.support_potential_dev"),
            get(&sem, "s3.support_potential_dev"),
            t.as_secs_f64()
        ),
    );
    let names = vec![
        "cap_logn_nondecreasing_s2_s3".to_string(),
        "d2_ratio_growth_s2_s3".to_string(),
    ];
    let (ok, failed) = verdicts(&sem, &names);
    push(
        4,
        "small-energy majorization failure",
        ok,
        format!(
            "cap(F) = {:.5}/{:.5}, cap*logn = {:.4}/{:.4}, d2 ratio = {:.3}/{:.3} (x{:.3}, need x{}) {failed:?}",
            get(&sem, "s2.cap"),
            get(&sem, "s3.cap"),
            get(&sem, "s2.cap_times_logn"),
            get(&sem, "s3.cap_times_logn"),
            get(&sem, "s2.d2_ratio"),
            get(&sem, "s3.d2_ratio"),
            get(&sem, "s3.d2_ratio") / get(&sem, "s2.d2_ratio"),
            s.config.small_energy.growth
        ),
    );

    let (pe, t) = timed(|| suites::partial_energy(&[2, 3], &s).expect("partial-energy"));
    let names = vec![
        "ratio_growth_s2_s3".to_string(),
        "s2.tree_control".to_string(),
        "s3.tree_control".to_string(),
    ];
    let (ok, failed) = verdicts(&pe, &names);
    push(
        5,
        "first-power partial-energy failure",
        ok && t < Duration::from_secs(300),
        format!(
            "R = {:.4}/{:.4} (x{:.3}, need x{}), tree control max R = {:.4}/{:.4}, {:.1}s {failed:?}",
            get(&pe, "s2.ratio"),
            get(&pe, "s3.ratio"),
            get(&pe, "s3.ratio") / get(&pe, "s2.ratio"),
            s.config.partial_energy.growth,
            get(&pe, "s2.tree_control.max_ratio"),
            get(&pe, "s3.tree_control.max_ratio"),
            t.as_secs_f64()
        ),
    );

    let ms = [4usize, 6, 8];
    let (naz, t) = timed(|| suites::nazarov(4, &ms, &s).expect("nazarov"));
    let mut names = vec![
        "c_meas_stable".to_string(),
        "s_ratio_stable".to_string(),
        "s_ratio_positive".to_string(),
    ];
    names.extend(ms.windows(2).map(|w| format!("restricted_increasing_M{}_M{}", w[0], w[1])));
    let (ok, failed) = verdicts(&naz, &names);
    push(
        6,
        "unbounded partial energy",
        ok && t < Duration::from_secs(600),
        format!(
            "C_meas = {:.3}/{:.3}/{:.3}, S = {:.3}/{:.3}/{:.3}, S/(x(log x+M)) = {:.4}/{:.4}/{:.4}, {:.1}s {failed:?}",
            get(&naz, "M4.c_meas"),
            get(&naz, "M6.c_meas"),
            get(&naz, "M8.c_meas"),
            get(&naz, "M4.restricted_energy"),
            get(&naz, "M6.restricted_energy"),
            get(&naz, "M8.restricted_energy"),
            get(&naz, "M4.s_ratio"),
            get(&naz, "M6.s_ratio"),
            get(&naz, "M8.s_ratio"),
            t.as_secs_f64()
        ),
    );

    let (ls, _) = timed(|| suites::levelset(&[3], &s).expect("levelset"));
    let (ok, failed) = verdicts(&ls, &["s3.tree_bound_violated".to_string()]);
    push(
        7,
        "level-set anomaly",
        ok,
        format!(
            "x = c/n = {:.5}: certified cap(D_x) >= {:.4} but <= {:.4} (V <= |nu| #ancestors), \
             required > {:.4} = {} x 4|nu|/x; ratio lower/benchmark = {:.2} {failed:?}",
            get(&ls, "s3.x_c"),
            get(&ls, "s3.x_c.lower_bound"),
            get(&ls, "s3.x_c.upper_bound"),
            get(&ls, "s3.x_c.required"),
            s.config.levelset.margin,
            get(&ls, "s3.x_c.ratio"),
        ),
    );

    let (d1, _) = timed(|| suites::verify_d1(&s).expect("d1"));
    let (ok, failed) = verdicts(&d1, &all(&d1));
    let depths = &s.config.d1.depths;
    push(
        8,
        "small-energy majorization on T",
        ok,
        format!(
            "max C = {:.4} (depth {}) / {:.4} (depth {}), spread {:.3}; nonempty bands at depth {:?}: {:?} {failed:?}",
            get(&d1, &format!("depth{}.c_max", depths[0])),
            depths[0],
            get(&d1, &format!("depth{}.c_max", depths[1])),
            depths[1],
            get(&d1, "c_max_spread"),
            s.config.d1.shallow_depths,
            s.config
                .d1
                .shallow_depths
                .iter()
                .map(|d| get(&d1, &format!("shallow.depth{d}.nonempty_bands")))
                .collect::<Vec<_>>(),
        ),
    );

    let failed: Vec<usize> = lines.iter().filter(|l| !l.passed).map(|l| l.id).collect();
    println!(
        "acceptance: {} of {} criteria pass{}",
        lines.len() - failed.len(),
        lines.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(", failing {failed:?}")
        }
    );
    if lines.iter().any(|l| !l.passed) {
        for l in lines.iter().filter(|l| !l.passed) {
            eprintln!("FAILED [{}] {}", l.id, l.title);
        }
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
