//! Command implementations behind the `replisim` binary. Each command
//! returns its output as a string so it can be tested without a process.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use replisim_core::engine::{run, RunResult};
use replisim_core::model::{AdrwRule, Request, SystemConfig};
use replisim_core::policy::PolicyKind;
use replisim_core::report::{ComparisonRow, ComparisonTable, ProbabilityMean, TableLayout};
use replisim_core::cost::CostTariff;
use replisim_core::workload::{
    fixture_sequence, fixture_sequences, format_sequence, generate, load_sequence, WorkloadMode, WorkloadSpec,
};

/// Where requests come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Workload {
    File(PathBuf),
    /// A bundled sequence by name, or all of them.
    Fixture(Option<String>),
    Random,
    Fixed,
}

impl FromStr for Workload {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "random" => Workload::Random,
            "fixed" => Workload::Fixed,
            "fixture" | "fixture:all" => Workload::Fixture(None),
            _ => match s.strip_prefix("fixture:") {
                Some(name) if !name.is_empty() => Workload::Fixture(Some(name.to_owned())),
                Some(_) => bail!("empty fixture name"),
                None => Workload::File(PathBuf::from(s)),
            },
        })
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => bail!("unknown output format `{s}` (expected csv or json)"),
        }
    }
}

/// Parameters shared by `compare` and `sweep`.
#[derive(Clone, Debug)]
pub struct ExperimentOptions {
    pub workload: Workload,
    pub policies: Vec<PolicyKind>,
    pub seed: u64,
    pub seeds: usize,
    pub n: usize,
    pub probabilities: Vec<f64>,
    pub format: OutputFormat,
}

impl ExperimentOptions {
    pub fn new(workload: Workload) -> Self {
        Self {
            workload,
            policies: vec![PolicyKind::Orad, PolicyKind::Adrw],
            seed: 0,
            seeds: 1,
            n: 100,
            probabilities: vec![0.5],
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    policies: &'a [PolicyKind],
    base_seed: u64,
    seeds: usize,
    window_capacity: usize,
    tariff: CostTariff,
    adrw_rule: AdrwRule,
    requester_distribution: &'static str,
    object_distribution: &'static str,
}

#[derive(Serialize)]
struct Reference {
    label: String,
    cost_orad: u64,
    cost_adrw: u64,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    metadata: Metadata<'a>,
    rows: &'a [ComparisonRow],
    totals: BTreeMap<PolicyKind, u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    improvement_pct_vs_adrw: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    means_by_probability: Vec<ProbabilityMean>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    reference_totals: Vec<Reference>,
}

fn render(cfg: &SystemConfig, opts: &ExperimentOptions, table: &ComparisonTable, refs: Vec<Reference>) -> Result<String> {
    match opts.format {
        OutputFormat::Csv => Ok(table.to_csv()?),
        OutputFormat::Json => {
            let report = JsonReport {
                metadata: Metadata {
                    policies: &table.policies,
                    base_seed: opts.seed,
                    seeds: opts.seeds,
                    window_capacity: cfg.window_capacity,
                    tariff: cfg.tariff,
                    adrw_rule: cfg.adrw_rule,
                    requester_distribution: "uniform over regular processors",
                    object_distribution: "uniform",
                },
                rows: &table.rows,
                totals: table.policies.iter().map(|&p| (p, table.total(p).unwrap_or(0))).collect(),
                improvement_pct_vs_adrw: table.improvement_vs_adrw().transpose()?,
                means_by_probability: if table.layout == TableLayout::Sweep {
                    table.means_by_probability()
                } else {
                    Vec::new()
                },
                reference_totals: refs,
            };
            Ok(serde_json::to_string_pretty(&report)? + "\n")
        }
    }
}

fn run_policy(cfg: &SystemConfig, policy: PolicyKind, seq: &[Request], label: &str) -> Result<RunResult> {
    run(cfg, policy, seq).with_context(|| format!("{policy} run on {label} aborted"))
}

fn row_for(cfg: &SystemConfig, policies: &[PolicyKind], seq: &[Request], label: &str) -> Result<ComparisonRow> {
    let mut row = ComparisonRow::new(seq.len());
    for &p in policies {
        row.set_cost(p, run_policy(cfg, p, seq, label)?.total_cost);
    }
    Ok(row)
}

fn generated_table(cfg: &SystemConfig, opts: &ExperimentOptions, mode: WorkloadMode) -> Result<ComparisonTable> {
    for &p in &opts.probabilities {
        if !(0.0..=1.0).contains(&p) {
            bail!("read probability {p} is outside [0, 1]");
        }
    }
    if opts.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let cells: Vec<(f64, u64)> = opts
        .probabilities
        .iter()
        .flat_map(|&p| (0..opts.seeds as u64).map(move |i| (p, opts.seed.wrapping_add(i))))
        .collect();
    // collect() on an indexed parallel iterator keeps cell order
    let rows = cells
        .par_iter()
        .map(|&(p, seed)| {
            let spec = WorkloadSpec::new(cfg, mode, opts.n, p, seed);
            let seq = generate(&spec)?;
            let mut row = row_for(cfg, &opts.policies, &seq, &format!("p={p} seed={seed}"))?;
            row.read_probability = Some(p);
            row.seed = Some(seed);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = ComparisonTable::new(TableLayout::Sweep, &opts.policies);
    table.rows = rows;
    Ok(table)
}

/// Runs every selected policy on identical sequences and reports per-row
/// costs, totals and the improvement of ORAD over ADRW.
pub fn cmd_compare(cfg: &SystemConfig, opts: &ExperimentOptions) -> Result<String> {
    if opts.policies.is_empty() {
        bail!("no policies selected");
    }
    let mut refs = Vec::new();
    let table = match &opts.workload {
        Workload::Random => generated_table(cfg, opts, WorkloadMode::RandomSize)?,
        Workload::Fixed => generated_table(cfg, opts, WorkloadMode::FixedSize)?,
        Workload::File(path) => {
            let seq = load_sequence(cfg, path).with_context(|| format!("reading {}", path.display()))?;
            let label = path.display().to_string();
            let mut row = row_for(cfg, &opts.policies, &seq, &label)?;
            row.label = Some(label);
            let mut t = ComparisonTable::new(TableLayout::Labelled, &opts.policies);
            t.rows.push(row);
            t
        }
        Workload::Fixture(name) => {
            let fixtures = match name {
                None => fixture_sequences(cfg)?,
                Some(n) => vec![fixture_sequence(cfg, n)?.ok_or_else(|| anyhow!("no fixture named `{n}`"))?],
            };
            let mut t = ComparisonTable::new(TableLayout::Labelled, &opts.policies);
            for f in fixtures {
                let mut row = row_for(cfg, &opts.policies, &f.requests, &format!("fixture {}", f.name))?;
                row.label = Some(f.name.clone());
                t.rows.push(row);
                refs.push(Reference { label: f.name, cost_orad: f.reference_orad, cost_adrw: f.reference_adrw });
            }
            t
        }
    };
    render(cfg, opts, &table, refs)
}

/// One row per (probability, seed) cell over fixed-length workloads.
pub fn cmd_sweep(cfg: &SystemConfig, opts: &ExperimentOptions) -> Result<String> {
    if opts.policies.is_empty() {
        bail!("no policies selected");
    }
    let table = sweep_table(cfg, opts)?;
    render(cfg, opts, &table, Vec::new())
}

pub fn sweep_table(cfg: &SystemConfig, opts: &ExperimentOptions) -> Result<ComparisonTable> {
    generated_table(cfg, opts, WorkloadMode::FixedSize)
}

/// Per-request ledger dump of one policy over a sequence file.
pub fn cmd_replay(cfg: &SystemConfig, path: &PathBuf, policy: PolicyKind, trace: bool) -> Result<String> {
    let seq = load_sequence(cfg, path).with_context(|| format!("reading {}", path.display()))?;
    let result = run_policy(cfg, policy, &seq, &path.display().to_string())?;
    Ok(format_replay(cfg, &result, trace))
}

pub fn format_replay(cfg: &SystemConfig, result: &RunResult, trace: bool) -> String {
    let mut out = String::new();
    for r in &result.records {
        let charges: Vec<String> = r.charge.iter().map(ToString::to_string).collect();
        let _ = write!(
            out,
            "{} {} {} [{}] total {}",
            r.index,
            cfg.display_request(&r.request),
            r.locus,
            charges.join(", "),
            r.running_total
        );
        for t in &r.transitions {
            let _ = write!(out, " {}:{}", t.kind, cfg.node_name(t.node));
        }
        out.push('\n');
        if trace {
            for (subject, ev) in &r.emitted_events {
                let _ = writeln!(out, "    window {} += {}", cfg.node_name(*subject), ev);
            }
            for a in &r.actions {
                let _ = writeln!(out, "    {a:?}");
            }
        }
    }
    let _ = writeln!(
        out,
        "policy {} requests {} total {}",
        result.metadata.policy,
        result.records.len(),
        result.total_cost
    );
    for s in &result.final_states {
        let names = |it: &mut dyn Iterator<Item = &replisim_core::NodeId>| {
            it.map(|n| cfg.node_name(*n).to_owned()).collect::<Vec<_>>().join(",")
        };
        let _ = writeln!(
            out,
            "{} version {} replicas {{{}}} temporary {{{}}}",
            cfg.object_name(s.object),
            s.version,
            names(&mut s.server_set.iter().chain(&s.data_list)),
            names(&mut s.temp_holders.iter())
        );
    }
    out
}

/// Emits a generated sequence in the sequence file format.
pub fn cmd_gen(cfg: &SystemConfig, mode: WorkloadMode, n: usize, p: f64, seed: u64) -> Result<String> {
    let seq = generate(&WorkloadSpec::new(cfg, mode, n, p, seed))?;
    Ok(format_sequence(cfg, &seq))
}

pub fn parse_policies(s: &str) -> Result<Vec<PolicyKind>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.parse::<PolicyKind>().map_err(Into::into))
        .collect()
}

pub fn parse_probabilities(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let p: f64 = t.trim().parse().with_context(|| format!("bad probability `{t}`"))?;
            if !(0.0..=1.0).contains(&p) {
                bail!("read probability {p} is outside [0, 1]");
            }
            Ok(p)
        })
        .collect()
}
