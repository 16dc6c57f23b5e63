use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use bitree_core::capacity::{dual_capacity, tree_capacity_exact, CertificateSummary};
use bitree_core::constructions::{NazarovParams, SemParams};
use bitree_core::lattice::{BoxSet, DyadicBox};
use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::report::ExperimentReport;
use crate::{suites, Config, Settings, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(name = "bitree", version, about = "Potential theory experiments on dyadic trees and bi-trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the JSON report (or construction dump) here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write the report as CSV.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Solver KKT tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_sweeps: Option<usize>,
    /// Recompute kernel rows instead of caching the Gram matrix.
    #[arg(long, global = true)]
    pub matrix_free: bool,
    /// Largest relevant poset to materialise.
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    /// Thresholds file replacing the bundled one.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Record wall-clock runtime in the report.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Randomized positive suites and oracle cross-checks.
    Verify {
        #[command(subcommand)]
        suite: Verify,
    },
    /// Counterexample reproductions on the bi-tree.
    Cex {
        #[command(subcommand)]
        which: Cex,
    },
    /// Capacity of potential level sets against the tree bound.
    Levelset {
        #[arg(long, value_delimiter = ',', default_values_t = [3u32])]
        s: Vec<u32>,
    },
    /// Implied constants of the sub-power partial-energy bounds.
    SmpDiagnostic {
        #[arg(long, value_delimiter = ',', default_values_t = [2u32, 3])]
        s: Vec<u32>,
    },
    /// Dump a construction in the measure/box text formats.
    Construct {
        #[command(subcommand)]
        what: Construct,
    },
    /// Capacity certificate of a box file (one box per line, `#` comments).
    Capacity { file: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum Verify {
    Tree,
    Oracles,
    D1,
}

#[derive(Debug, Subcommand)]
pub enum Cex {
    SmallEnergy {
        #[arg(long, value_delimiter = ',', default_values_t = [2u32, 3])]
        s: Vec<u32>,
    },
    PartialEnergy {
        #[arg(long, value_delimiter = ',', default_values_t = [2u32, 3])]
        s: Vec<u32>,
    },
    Nazarov {
        #[arg(long, default_value_t = 4)]
        x: u64,
        #[arg(long = "M", value_delimiter = ',', default_values_t = [4usize, 6, 8])]
        m: Vec<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum Construct {
    Nu {
        #[arg(long)]
        s: u32,
        /// Also list the boxes of F after the measure.
        #[arg(long)]
        dump_f: bool,
    },
    Nazarov {
        #[arg(long)]
        n: u64,
        #[arg(long = "M")]
        m: usize,
        #[arg(long)]
        dump_atoms: bool,
        #[arg(long)]
        dump_families: bool,
    },
}

impl Cli {
    pub fn settings(&self) -> Result<Settings> {
        let mut s = Settings {
            config: Config::load(self.config.as_deref())?,
            seed: self.seed,
            ..Settings::default()
        };
        if let Some(t) = self.tol {
            s.solver.tol = t;
        }
        if let Some(m) = self.max_sweeps {
            s.solver.max_sweeps = m;
        }
        s.solver.matrix_free = self.matrix_free;
        if let Some(b) = self.budget {
            s.poset.max_boxes = b;
        }
        Ok(s)
    }
}

#[derive(Serialize)]
struct CapacityOutput {
    dimension: usize,
    boxes: usize,
    certificate: CertificateSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<f64>,
}

pub fn read_boxes(path: &Path) -> Result<BoxSet> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut boxes = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let b: DyadicBox = line
            .parse()
            .with_context(|| format!("{}:{}: bad box {line:?}", path.display(), no + 1))?;
        boxes.push(b);
    }
    let Some(first) = boxes.first() else {
        bail!("{} holds no boxes", path.display());
    };
    Ok(BoxSet::new(first.dim(), boxes)?)
}

fn emit(cli: &Cli, stdout: &mut dyn Write, text: &str) -> Result<()> {
    match &cli.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn box_lines(boxes: impl Iterator<Item = DyadicBox>) -> String {
    let mut out = String::new();
    for b in boxes {
        out.push_str(&b.to_string());
        out.push('\n');
    }
    out
}

fn construct(cli: &Cli, what: &Construct, stdout: &mut dyn Write) -> Result<()> {
    let text = match what {
        Construct::Nu { s, dump_f } => {
            let p = SemParams::new(*s)?;
            let mut text = format!(
                "# small-energy measure: s = {s}, log n = {}, n = {}, {} squares\n",
                p.logn,
                p.n,
                p.copies()
            );
            text.push_str(&p.build_nu()?.to_text());
            if *dump_f {
                text.push_str("# F\n");
                text.push_str(&box_lines(p.build_f()?.iter().cloned()));
            }
            text
        }
        Construct::Nazarov {
            n,
            m,
            dump_atoms,
            dump_families,
        } => {
            let p = NazarovParams::new(*n, *m)?;
            let mut text = format!("# unbounded partial energy: n = {n}, M = {m}, x = {}\n", p.x());
            if *dump_atoms || !dump_families {
                text.push_str(&p.build_measure()?.to_text());
            }
            if *dump_families {
                let mut current = None;
                for (j, i, b) in p.families() {
                    if current != Some((j, i)) {
                        text.push_str(&format!("# F {j} {i}\n"));
                        current = Some((j, i));
                    }
                    text.push_str(&b.to_string());
                    text.push('\n');
                }
            }
            text
        }
    };
    emit(cli, stdout, &text)
}

/// Runs the command; `Ok(true)` iff every verdict passed.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<bool> {
    let s = cli.settings()?;
    let started = Instant::now();
    let mut report: ExperimentReport = match &cli.command {
        Command::Verify { suite } => match suite {
            Verify::Tree => suites::verify_tree(&s)?,
            Verify::Oracles => suites::verify_oracles(&s)?,
            Verify::D1 => suites::verify_d1(&s)?,
        },
        Command::Cex { which } => match which {
            Cex::SmallEnergy { s: scales } => suites::small_energy(scales, &s)?,
            Cex::PartialEnergy { s: scales } => suites::partial_energy(scales, &s)?,
            Cex::Nazarov { x, m } => suites::nazarov(*x, m, &s)?,
        },
        Command::Levelset { s: scales } => suites::levelset(scales, &s)?,
        Command::SmpDiagnostic { s: scales } => suites::smp_diagnostic(scales, &s)?,
        Command::Construct { what } => {
            construct(cli, what, stdout)?;
            return Ok(true);
        }
        Command::Capacity { file } => {
            let set = read_boxes(file)?;
            let cert = dual_capacity(&set, &s.solver)?;
            let exact = if set.dim() == 1 {
                Some(tree_capacity_exact(&set)?.cap_value)
            } else {
                None
            };
            let out = CapacityOutput {
                dimension: set.dim(),
                boxes: set.len(),
                certificate: cert.summary(),
                exact,
            };
            emit(cli, stdout, &(serde_json::to_string_pretty(&out)? + "\n"))?;
            return Ok(cert.converged);
        }
    };
    if cli.timing {
        report.runtime_seconds = Some(started.elapsed().as_secs_f64());
    }
    emit(cli, stdout, &(report.to_json() + "\n"))?;
    if let Some(p) = &cli.csv {
        let file = std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
        report.write_csv(file)?;
    }
    Ok(report.passed())
}
