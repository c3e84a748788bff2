//! Comparison tables, the improvement metric and CSV/JSON emission.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::PolicyKind;

pub const IMPROVEMENT_FOOTER: &str = "improvement_pct_vs_adrw";
pub const TOTAL_LABEL: &str = "total";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("improvement is undefined when the reference total is 0")]
    ZeroReference,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed report: {0}")]
    Malformed(String),
}

/// Percentage saved by `total_new` relative to `total_ref`, on aggregate totals.
pub fn improvement(total_ref: u64, total_new: u64) -> Result<f64, ReportError> {
    if total_ref == 0 {
        return Err(ReportError::ZeroReference);
    }
    Ok(100.0 * (total_ref as f64 - total_new as f64) / total_ref as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    /// Fixture or file name; sweeps leave it empty.
    pub label: Option<String>,
    pub read_probability: Option<f64>,
    pub n_requests: usize,
    pub seed: Option<u64>,
    pub cost_orad: Option<u64>,
    pub cost_adrw: Option<u64>,
    pub cost_sa: Option<u64>,
}

impl ComparisonRow {
    pub fn new(n_requests: usize) -> Self {
        Self {
            label: None,
            read_probability: None,
            n_requests,
            seed: None,
            cost_orad: None,
            cost_adrw: None,
            cost_sa: None,
        }
    }

    pub fn cost(&self, p: PolicyKind) -> Option<u64> {
        match p {
            PolicyKind::Orad => self.cost_orad,
            PolicyKind::Adrw => self.cost_adrw,
            PolicyKind::Sa => self.cost_sa,
        }
    }

    pub fn set_cost(&mut self, p: PolicyKind, cost: u64) {
        let slot = match p {
            PolicyKind::Orad => &mut self.cost_orad,
            PolicyKind::Adrw => &mut self.cost_adrw,
            PolicyKind::Sa => &mut self.cost_sa,
        };
        *slot = Some(cost);
    }
}

/// Which leading columns a table carries.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableLayout {
    /// `label,n,cost_*`
    Labelled,
    /// `read_prob,n,seed,cost_*`
    Sweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub layout: TableLayout,
    /// Policies in column order, deduplicated.
    pub policies: Vec<PolicyKind>,
    pub rows: Vec<ComparisonRow>,
}

/// Mean cost per policy over all seeds of one probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityMean {
    pub read_probability: f64,
    pub n_requests: usize,
    pub seeds: usize,
    pub mean_cost: BTreeMap<PolicyKind, f64>,
}

impl ComparisonTable {
    pub fn new(layout: TableLayout, policies: &[PolicyKind]) -> Self {
        let mut ps: Vec<PolicyKind> = Vec::new();
        for &p in policies {
            if !ps.contains(&p) {
                ps.push(p);
            }
        }
        Self { layout, policies: ps, rows: Vec::new() }
    }

    pub fn total(&self, p: PolicyKind) -> Option<u64> {
        if !self.policies.contains(&p) {
            return None;
        }
        Some(self.rows.iter().filter_map(|r| r.cost(p)).sum())
    }

    /// ORAD against ADRW on aggregate totals; `None` unless both were run.
    pub fn improvement_vs_adrw(&self) -> Option<Result<f64, ReportError>> {
        let adrw = self.total(PolicyKind::Adrw)?;
        let orad = self.total(PolicyKind::Orad)?;
        Some(improvement(adrw, orad))
    }

    /// Per-probability means, in ascending probability order. Rows without a
    /// probability are skipped.
    pub fn means_by_probability(&self) -> Vec<ProbabilityMean> {
        let mut groups: Vec<(f64, usize, Vec<&ComparisonRow>)> = Vec::new();
        for r in &self.rows {
            let Some(p) = r.read_probability else { continue };
            match groups.iter_mut().find(|g| g.0 == p && g.1 == r.n_requests) {
                Some(g) => g.2.push(r),
                None => groups.push((p, r.n_requests, vec![r])),
            }
        }
        groups.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        groups
            .into_iter()
            .map(|(p, n, rows)| ProbabilityMean {
                read_probability: p,
                n_requests: n,
                seeds: rows.len(),
                mean_cost: self
                    .policies
                    .iter()
                    .map(|&pol| {
                        let sum: u64 = rows.iter().filter_map(|r| r.cost(pol)).sum();
                        (pol, sum as f64 / rows.len() as f64)
                    })
                    .collect(),
            })
            .collect()
    }

    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = match self.layout {
            TableLayout::Labelled => vec!["label".into(), "n".into()],
            TableLayout::Sweep => vec!["read_prob".into(), "n".into(), "seed".into()],
        };
        h.extend(self.policies.iter().map(|p| format!("cost_{p}")));
        h
    }

    /// Rows, then (labelled layout) a totals row, then the improvement footer
    /// when both ORAD and ADRW are present.
    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        w.write_record(self.header())?;
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let mut rec: Vec<String> = match self.layout {
                TableLayout::Labelled => vec![r.label.clone().unwrap_or_default(), r.n_requests.to_string()],
                TableLayout::Sweep => vec![
                    r.read_probability.map(|p| p.to_string()).unwrap_or_default(),
                    r.n_requests.to_string(),
                    opt(r.seed),
                ],
            };
            rec.extend(self.policies.iter().map(|&p| opt(r.cost(p))));
            w.write_record(&rec)?;
        }
        if self.layout == TableLayout::Labelled {
            let n: usize = self.rows.iter().map(|r| r.n_requests).sum();
            let mut rec = vec![TOTAL_LABEL.to_string(), n.to_string()];
            rec.extend(self.policies.iter().map(|&p| opt(self.total(p))));
            w.write_record(&rec)?;
        }
        if let Some(imp) = self.improvement_vs_adrw() {
            w.write_record([IMPROVEMENT_FOOTER.to_string(), format!("{:.4}", imp?)])?;
        }
        let bytes = w.into_inner().map_err(|e| ReportError::Malformed(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| ReportError::Malformed(e.to_string()))
    }

    /// Inverse of [`to_csv`](Self::to_csv); totals and footer rows are skipped.
    pub fn from_csv(text: &str) -> Result<Self, ReportError> {
        let mut rd = csv::ReaderBuilder::new()
            .flexible(true)
            .has_headers(true)
            .from_reader(text.as_bytes());
        let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
        let (layout, lead) = match header.first().map(String::as_str) {
            Some("label") => (TableLayout::Labelled, 2),
            Some("read_prob") => (TableLayout::Sweep, 3),
            _ => return Err(ReportError::Malformed("unrecognised header".into())),
        };
        let policies = header[lead..]
            .iter()
            .map(|h| {
                h.strip_prefix("cost_")
                    .and_then(|p| p.parse::<PolicyKind>().ok())
                    .ok_or_else(|| ReportError::Malformed(format!("bad column `{h}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut table = Self::new(layout, &policies);
        let bad = |what: &str, v: &str| ReportError::Malformed(format!("bad {what} `{v}`"));
        let opt_u64 = |v: &str| -> Result<Option<u64>, ReportError> {
            if v.is_empty() {
                Ok(None)
            } else {
                v.parse().map(Some).map_err(|_| bad("number", v))
            }
        };
        for rec in rd.records() {
            let rec = rec?;
            let first = rec.get(0).unwrap_or("");
            if first == IMPROVEMENT_FOOTER || (layout == TableLayout::Labelled && first == TOTAL_LABEL) {
                continue;
            }
            if rec.len() != header.len() {
                return Err(ReportError::Malformed(format!("row has {} fields", rec.len())));
            }
            let n_requests = rec[1].parse().map_err(|_| bad("count", &rec[1]))?;
            let mut row = ComparisonRow::new(n_requests);
            match layout {
                TableLayout::Labelled => row.label = (!first.is_empty()).then(|| first.to_owned()),
                TableLayout::Sweep => {
                    if !first.is_empty() {
                        row.read_probability = Some(first.parse().map_err(|_| bad("probability", first))?);
                    }
                    row.seed = opt_u64(&rec[2])?;
                }
            }
            for (i, &p) in table.policies.iter().enumerate() {
                if let Some(c) = opt_u64(&rec[lead + i])? {
                    row.set_cost(p, c);
                }
            }
            table.rows.push(row);
        }
        Ok(table)
    }
}
