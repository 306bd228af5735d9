//! Bit-exact run-log serialisation: one CSV of episode records plus a JSON
//! sidecar with the summary and final datasets.
//!
//! CSV columns, in order:
//! `episode,inst_regret,cum_regret,switch_ds,switch_pi,zhat_mass,replan_ms`.
//! Floats use 17 significant digits (`{:.16e}`), flags are `0`/`1`.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{EpisodeRecord, RunLog, RunSummary};
use crate::function_class::SubsampledDataset;

pub const CSV_HEADER: [&str; 7] = [
    "episode",
    "inst_regret",
    "cum_regret",
    "switch_ds",
    "switch_pi",
    "zhat_mass",
    "replan_ms",
];

#[derive(Debug, Error)]
pub enum RunLogError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    config_hash: String,
    seed: u64,
    summary: RunSummary,
    datasets: Vec<SubsampledDataset>,
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write_csv<W: Write>(records: &[EpisodeRecord], out: W) -> Result<(), RunLogError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.episode.to_string(),
            float(r.inst_regret),
            float(r.cum_regret),
            flag(r.switch_ds).to_string(),
            flag(r.switch_pi).to_string(),
            r.zhat_mass.to_string(),
            float(r.replan_ms),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn csv_string(records: &[EpisodeRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv is utf-8")
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<EpisodeRecord>, RunLogError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(RunLogError::Parse {
            row: 0,
            message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let bad = |message: String| RunLogError::Parse { row, message };
        let field = |j: usize| {
            rec.get(j)
                .ok_or_else(|| bad(format!("missing column {}", CSV_HEADER[j])))
        };
        let f = |j: usize| -> Result<f64, RunLogError> {
            field(j)?.parse().map_err(|e| bad(format!("{}: {e}", CSV_HEADER[j])))
        };
        let b = |j: usize| -> Result<bool, RunLogError> {
            match field(j)? {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(bad(format!("{}: expected 0 or 1, got {other}", CSV_HEADER[j]))),
            }
        };
        out.push(EpisodeRecord {
            episode: field(0)?.parse().map_err(|e| bad(format!("episode: {e}")))?,
            inst_regret: f(1)?,
            cum_regret: f(2)?,
            switch_ds: b(3)?,
            switch_pi: b(4)?,
            zhat_mass: field(5)?.parse().map_err(|e| bad(format!("zhat_mass: {e}")))?,
            replan_ms: f(6)?,
        });
    }
    Ok(out)
}

/// File stem for a run: `<variant>_K<episodes>_seed<seed>`.
pub fn run_stem(log: &RunLog) -> String {
    format!("{}_K{}_seed{}", log.summary.variant, log.summary.episodes, log.seed)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunLogError + '_ {
    move |source| RunLogError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `<stem>.csv` and `<stem>.json` under `dir`; returns the CSV path.
pub fn write_run(dir: &Path, log: &RunLog) -> Result<PathBuf, RunLogError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let stem = run_stem(log);
    let csv_path = dir.join(format!("{stem}.csv"));
    let file = fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
    write_csv(&log.records, std::io::BufWriter::new(file))?;
    let json_path = dir.join(format!("{stem}.json"));
    let sidecar = Sidecar {
        config_hash: log.config_hash.clone(),
        seed: log.seed,
        summary: log.summary.clone(),
        datasets: log.datasets.clone(),
    };
    fs::write(&json_path, serde_json::to_string_pretty(&sidecar)?).map_err(io_err(&json_path))?;
    Ok(csv_path)
}

/// Reads a run back from its CSV path and the sibling JSON sidecar.
pub fn read_run(csv_path: &Path) -> Result<RunLog, RunLogError> {
    let file = fs::File::open(csv_path).map_err(io_err(csv_path))?;
    let records = read_csv(file)?;
    let json_path = csv_path.with_extension("json");
    let text = fs::read_to_string(&json_path).map_err(io_err(&json_path))?;
    let sidecar: Sidecar = serde_json::from_str(&text)?;
    Ok(RunLog {
        config_hash: sidecar.config_hash,
        seed: sidecar.seed,
        records,
        summary: sidecar.summary,
        datasets: sidecar.datasets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_bitwise() {
        let recs = vec![EpisodeRecord {
            episode: 1,
            inst_regret: 0.1 + 0.2,
            cum_regret: 1.0 / 3.0,
            switch_ds: true,
            switch_pi: false,
            zhat_mass: 7,
            replan_ms: 0.0,
        }];
        let text = csv_string(&recs);
        assert!(text.starts_with("episode,inst_regret,cum_regret,switch_ds,switch_pi,zhat_mass,replan_ms\n"));
        assert!(text.contains(",1,0,7,"));
        let back = read_csv(text.as_bytes()).unwrap();
        assert_eq!(back[0].inst_regret.to_bits(), (0.1f64 + 0.2).to_bits());
        assert_eq!(back, recs);
    }

    #[test]
    fn rejects_bad_flag() {
        let text = "episode,inst_regret,cum_regret,switch_ds,switch_pi,zhat_mass,replan_ms\n1,0,0,2,0,0,0\n";
        assert!(matches!(
            read_csv(text.as_bytes()),
            Err(RunLogError::Parse { row: 1, .. })
        ));
    }
}
