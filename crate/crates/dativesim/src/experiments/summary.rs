//! Descriptive group summaries: mean, seeded percentile-bootstrap 95%
//! interval, and group size. Model fitting is left to external statistical
//! software; these tables are companions to the exported CSV.

use rand::rngs::StdRng;
use rand::Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};

use super::TrialRecord;

/// Default resample count for bootstrap intervals.
pub const BOOTSTRAP_RESAMPLES: usize = 10_000;

#[derive(Debug, Clone, serde::Serialize)]
pub struct SummaryRow {
    pub group: Vec<(String, String)>,
    pub mean: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub n: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
    /// Values dropped from aggregation because they were non-finite.
    pub excluded_nonfinite: usize,
}

impl std::fmt::Display for SummaryTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for row in &self.rows {
            let group = row
                .group
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(" ");
            writeln!(
                f,
                "{group}: mean {:.4} [{:.4}, {:.4}] n={}",
                row.mean, row.ci_lower, row.ci_upper, row.n
            )?;
        }
        if self.excluded_nonfinite > 0 {
            writeln!(f, "(excluded {} non-finite values)", self.excluded_nonfinite)?;
        }
        Ok(())
    }
}

impl SummaryTable {
    pub fn to_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut out = String::from("group,mean,ci_lower,ci_upper,n\n");
        for row in &self.rows {
            let group = row
                .group
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(";");
            out.push_str(&format!(
                "{group},{},{},{},{}\n",
                row.mean, row.ci_lower, row.ci_upper, row.n
            ));
        }
        std::fs::write(path.as_ref(), out).map_err(|e| Error::io(path.as_ref(), e))
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let idx = (q * (sorted.len() - 1) as f64).round() as usize;
    sorted[idx]
}

/// Groups `(group key, value)` pairs and bootstraps a 95% interval of the
/// mean within each group.
pub fn summarize_values(
    values: &[(Vec<(String, String)>, f64)],
    resamples: usize,
    seed: u64,
) -> Result<SummaryTable> {
    if values.is_empty() {
        return Err(Error::Experiment("nothing to summarize".into()));
    }
    let mut excluded = 0usize;
    let mut groups: std::collections::BTreeMap<Vec<(String, String)>, Vec<f64>> =
        std::collections::BTreeMap::new();
    for (g, v) in values {
        if v.is_finite() {
            groups.entry(g.clone()).or_default().push(*v);
        } else {
            excluded += 1;
        }
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(groups.len());
    for (group, mut vals) in groups {
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = vals.len();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let mut boot_means = Vec::with_capacity(resamples);
        for _ in 0..resamples {
            let mut acc = 0.0;
            for _ in 0..n {
                acc += vals[rng.random_range(0..n)];
            }
            boot_means.push(acc / n as f64);
        }
        boot_means.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rows.push(SummaryRow {
            group,
            mean,
            ci_lower: percentile(&boot_means, 0.025),
            ci_upper: percentile(&boot_means, 0.975),
            n,
        });
    }
    Ok(SummaryTable {
        rows,
        excluded_nonfinite: excluded,
    })
}

/// Column names a [`TrialRecord`] row can be grouped by.
const GROUPABLE: [&str; 18] = [
    "seed",
    "trial_id",
    "experiment",
    "exposure_construction",
    "gen_construction",
    "gen_source",
    "pron_theme",
    "anim_theme",
    "def_theme",
    "len_theme",
    "pron_recip",
    "anim_recip",
    "def_recip",
    "len_recip",
    "givenness",
    "best_lr",
    "best_epoch",
    "verbhood_delta",
];

fn field_value(r: &TrialRecord, g_idx: usize, key: &str) -> String {
    let g = &r.gen_means[g_idx];
    let f = &r.features;
    match key {
        "seed" => r.seed.to_string(),
        "trial_id" => r.trial_id.clone(),
        "experiment" => r.experiment.clone(),
        "exposure_construction" => r.exposure_construction.to_string(),
        "gen_construction" => g.gen_construction.to_string(),
        "gen_source" => g.gen_source.to_string(),
        "pron_theme" => f.pron_theme.to_string(),
        "anim_theme" => f.anim_theme.to_string(),
        "def_theme" => f.def_theme.to_string(),
        "len_theme" => f.len_theme.to_string(),
        "pron_recip" => f.pron_recip.to_string(),
        "anim_recip" => f.anim_recip.to_string(),
        "def_recip" => f.def_recip.to_string(),
        "len_recip" => f.len_recip.to_string(),
        "givenness" => f.givenness.map_or("none".into(), |v| v.to_string()),
        "best_lr" => format!("{}", r.best_lr),
        "best_epoch" => r.best_epoch.to_string(),
        "verbhood_delta" => format!("{}", r.verbhood_delta),
        _ => unreachable!(),
    }
}

/// Summarizes `mean_logprob_per_token` grouped by the given record columns.
pub fn summarize_records(
    records: &[TrialRecord],
    group_keys: &[&str],
    resamples: usize,
    seed: u64,
) -> Result<SummaryTable> {
    for k in group_keys {
        if !GROUPABLE.contains(k) {
            return Err(Error::Experiment(format!("unknown grouping key {k:?}")));
        }
    }
    let mut values = Vec::new();
    for r in records {
        for (gi, g) in r.gen_means.iter().enumerate() {
            let group: Vec<(String, String)> = group_keys
                .iter()
                .map(|k| (k.to_string(), field_value(r, gi, k)))
                .collect();
            values.push((group, g.mean_logprob_per_token));
        }
    }
    summarize_values(&values, resamples, seed)
}
