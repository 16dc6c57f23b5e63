//! Implied constants of the sub-power partial-energy bounds. Diagnostic only.

use anyhow::Result;
use bitree_core::constructions::SemParams;
use bitree_core::poset::RelevantPoset;

use super::small_energy::lemma_constant;
use crate::report::ExperimentReport;
use crate::{rel_diff, Settings};

/// Implied `c₀` and `C_τ` for one `(ℰ_ε, ℰ, |ν|, ε)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Implied {
    pub hypothesis: bool,
    pub c0: f64,
    pub c_tau: Vec<f64>,
}

pub fn implied(partial: f64, energy: f64, mass: f64, eps: f64, taus: &[f64]) -> Implied {
    let base = eps * mass;
    let c0 = if partial > 0.0 && energy > base {
        (partial / base).ln() / (energy / base).ln().sqrt()
    } else {
        0.0
    };
    let c_tau = taus
        .iter()
        .map(|&t| partial / (eps.powf(1.0 - t) * energy.powf(t) * mass.powf(1.0 - t)))
        .collect();
    Implied {
        hypothesis: energy >= 2.0 * base,
        c0,
        c_tau,
    }
}

fn record(r: &mut ExperimentReport, prefix: &str, eps: f64, partial: f64, out: &Implied, taus: &[f64]) {
    r.measure(format!("{prefix}.eps"), eps);
    r.measure(format!("{prefix}.partial_energy"), partial);
    r.measure(format!("{prefix}.hypothesis"), if out.hypothesis { 1.0 } else { 0.0 });
    r.measure(format!("{prefix}.c0"), out.c0);
    for (t, c) in taus.iter().zip(&out.c_tau) {
        r.measure(format!("{prefix}.c_tau{:.2}", t), *c);
    }
}

pub fn smp_diagnostic(scales: &[u32], s: &Settings) -> Result<ExperimentReport> {
    let cfg = &s.config.smp;
    let c = lemma_constant(&s.config.small_energy.lemma_scales)?.c;
    let mut r = ExperimentReport::new("smp-diagnostic");
    r.param("s", scales);
    r.param("taus", &cfg.taus);
    r.param("eps_factors", &cfg.eps_factors);
    r.param("convention", "E_eps <= C_tau eps^(1-tau) E^tau |nu|^(1-tau)");
    r.measure("lemma.c", c);
    r.note(
        "two displays of the sub-power bound swap the roles of tau; this report uses eps^(1-tau) E^tau |nu|^(1-tau)",
    );
    for &k in scales {
        let p = SemParams::new(k)?;
        let nu = p.nu();
        let (mass, energy) = (nu.total_mass(), nu.energy());
        let poset = if k <= 3 {
            Some(RelevantPoset::build_with(&p.build_nu()?, s.poset)?)
        } else {
            None
        };
        let partial = |eps: f64| -> Result<f64> {
            Ok(match &poset {
                Some(ps) => ps.partial_energy(eps),
                None => p.partial_energy(eps)?,
            })
        };
        r.measure(format!("s{k}.mass"), mass);
        r.measure(format!("s{k}.energy"), energy);
        for (i, f) in cfg.eps_factors.iter().enumerate() {
            let eps = f * c / p.n_f64();
            let pe = partial(eps)?;
            let out = implied(pe, energy, mass, eps, &cfg.taus);
            record(&mut r, &format!("s{k}.eps{i}"), eps, pe, &out, &cfg.taus);
        }
        // below the smallest potential nothing is counted
        let eps = 0.5 * mass;
        let pe = partial(eps)?;
        record(&mut r, &format!("s{k}.empty"), eps, pe, &implied(pe, energy, mass, eps, &cfg.taus), &cfg.taus);
    }
    if let Some(&k) = scales.iter().find(|&&k| k <= 3) {
        // ν → tν, ε → tε leaves every implied constant unchanged
        let p = SemParams::new(k)?;
        let t = 2.0;
        let nu = p.build_nu()?;
        let scaled = nu.scaled(t)?;
        let eps = c / p.n_f64();
        let a = RelevantPoset::build_with(&nu, s.poset)?;
        let b = RelevantPoset::build_with(&scaled, s.poset)?;
        let x = implied(a.partial_energy(eps), a.energy(), nu.total_mass(), eps, &cfg.taus);
        let y = implied(b.partial_energy(t * eps), b.energy(), scaled.total_mass(), t * eps, &cfg.taus);
        let worst = std::iter::once(rel_diff(x.c0, y.c0))
            .chain(x.c_tau.iter().zip(&y.c_tau).map(|(u, v)| rel_diff(*u, *v)))
            .fold(0.0, f64::max);
        r.measure(format!("s{k}.scaling_rel_diff"), worst);
    }
    Ok(r)
}
