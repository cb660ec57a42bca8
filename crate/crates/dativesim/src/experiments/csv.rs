//! Results CSV with a fixed column order and lossless float round-trips.

use std::path::Path;

use crate::dative::Construction;
use crate::error::{Error, Result};
use crate::stimuli::GenSource;

use super::{CodedFeatures, DeltaRecord, GenMean, TrialRecord};

pub const CSV_COLUMNS: [&str; 19] = [
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
    "mean_logprob_per_token",
];

fn fmt_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Experiment(format!("bad float {s:?} in results CSV")))
}

/// Writes one row per (trial, generalization subset). Byte-deterministic for
/// identical records.
pub fn export_csv(records: &[TrialRecord], path: impl AsRef<Path>) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Experiment("no records to export".into()));
    }
    let mut out = String::new();
    out.push_str(&CSV_COLUMNS.join(","));
    out.push('\n');
    for r in records {
        for g in &r.gen_means {
            let f = &r.features;
            let fields: [String; 19] = [
                r.seed.to_string(),
                r.trial_id.clone(),
                r.experiment.clone(),
                r.exposure_construction.to_string(),
                g.gen_construction.to_string(),
                g.gen_source.to_string(),
                f.pron_theme.to_string(),
                f.anim_theme.to_string(),
                f.def_theme.to_string(),
                f.len_theme.to_string(),
                f.pron_recip.to_string(),
                f.anim_recip.to_string(),
                f.def_recip.to_string(),
                f.len_recip.to_string(),
                f.givenness.map_or("none".into(), |g| g.to_string()),
                fmt_f64(r.best_lr),
                r.best_epoch.to_string(),
                fmt_f64(r.verbhood_delta),
                fmt_f64(g.mean_logprob_per_token),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
    }
    std::fs::write(path.as_ref(), out).map_err(|e| Error::io(path.as_ref(), e))
}

fn parse_construction(s: &str) -> Result<Construction> {
    match s {
        "do" => Ok(Construction::Do),
        "pp" => Ok(Construction::Pp),
        _ => Err(Error::Experiment(format!("bad construction {s:?}"))),
    }
}

fn parse_i8(s: &str) -> Result<i8> {
    s.parse()
        .map_err(|_| Error::Experiment(format!("bad coded feature {s:?}")))
}

/// Reads an exported CSV back into records, grouping consecutive rows that
/// share (seed, trial_id).
pub fn parse_csv(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    let text =
        std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Experiment("empty CSV".into()))?;
    if header != CSV_COLUMNS.join(",") {
        return Err(Error::Experiment(format!("unexpected CSV header {header:?}")));
    }
    let mut records: Vec<TrialRecord> = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != CSV_COLUMNS.len() {
            return Err(Error::Experiment(format!(
                "expected {} columns, got {}",
                CSV_COLUMNS.len(),
                cols.len()
            )));
        }
        let seed: u64 = cols[0]
            .parse()
            .map_err(|_| Error::Experiment(format!("bad seed {:?}", cols[0])))?;
        let trial_id = cols[1].to_string();
        let gen_mean = GenMean {
            gen_construction: parse_construction(cols[4])?,
            gen_source: match cols[5] {
                "natural" => GenSource::Natural,
                "synthetic" => GenSource::Synthetic,
                other => {
                    return Err(Error::Experiment(format!("bad gen_source {other:?}")))
                }
            },
            mean_logprob_per_token: parse_f64(cols[18])?,
        };
        if let Some(last) = records.last_mut() {
            if last.seed == seed && last.trial_id == trial_id {
                last.gen_means.push(gen_mean);
                continue;
            }
        }
        records.push(TrialRecord {
            seed,
            trial_id,
            experiment: cols[2].to_string(),
            exposure_construction: parse_construction(cols[3])?,
            features: CodedFeatures {
                pron_theme: parse_i8(cols[6])?,
                anim_theme: parse_i8(cols[7])?,
                def_theme: parse_i8(cols[8])?,
                len_theme: parse_i8(cols[9])?,
                pron_recip: parse_i8(cols[10])?,
                anim_recip: parse_i8(cols[11])?,
                def_recip: parse_i8(cols[12])?,
                len_recip: parse_i8(cols[13])?,
                givenness: match cols[14] {
                    "none" => None,
                    v => Some(parse_i8(v)?),
                },
            },
            best_lr: parse_f64(cols[15])?,
            best_epoch: cols[16]
                .parse()
                .map_err(|_| Error::Experiment(format!("bad epoch {:?}", cols[16])))?,
            verbhood_delta: parse_f64(cols[17])?,
            gen_means: vec![gen_mean],
        });
    }
    Ok(records)
}

/// Per-sentence Δ values for the known-verb study.
pub fn export_delta_csv(records: &[DeltaRecord], path: impl AsRef<Path>) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Experiment("no records to export".into()));
    }
    let mut out = String::from("lemma,class,observed_construction,seed,item_index,delta\n");
    for r in records {
        for (i, d) in r.deltas.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.lemma,
                r.class,
                r.observed,
                r.seed,
                i,
                fmt_f64(*d)
            ));
        }
    }
    std::fs::write(path.as_ref(), out).map_err(|e| Error::io(path.as_ref(), e))
}
