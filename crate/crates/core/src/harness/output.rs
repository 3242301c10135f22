use super::run::TrialRecord;
use crate::error::{Error, Result};
use std::io::Write;

pub const CSV_COLUMNS: [&str; 9] =
    ["config_digest", "seed", "algorithm", "estimate", "truth", "rel_error", "rounds", "messages", "max_congestion"];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One CSV row per record; failed trials leave the numeric fields blank.
pub fn write_csv<W: Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Io(e.into());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.config_digest.clone(),
            r.seed.to_string(),
            r.algorithm.clone(),
            opt(r.estimate),
            opt(r.truth),
            opt(r.rel_error),
            r.rounds.to_string(),
            r.messages.to_string(),
            r.max_congestion.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Full records, one JSON object per line.
pub fn write_jsonl<W: Write>(mut out: W, records: &[TrialRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Io(e.into()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn rec(seed: u64, err: bool) -> TrialRecord {
        TrialRecord {
            schema: 1,
            config_digest: "abcd".into(),
            seed,
            algorithm: "f0".into(),
            estimate: (!err).then_some(10.5),
            truth: Some(10.0),
            rel_error: (!err).then_some(0.05),
            rounds: 7,
            messages: 30,
            max_congestion: 1,
            wall_ms: 1.0,
            error: err.then(|| "boom".into()),
            detail: Value::Null,
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[rec(1, false), rec(2, true)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(lines[1], "abcd,1,f0,10.5,10,0.05,7,30,1");
        assert_eq!(lines[2], "abcd,2,f0,,10,,7,30,1");
    }

    #[test]
    fn jsonl_round_trips() {
        let mut buf = Vec::new();
        let recs = [rec(1, false), rec(2, true)];
        write_jsonl(&mut buf, &recs).unwrap();
        let back: Vec<TrialRecord> = String::from_utf8(buf).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(back, recs);
    }
}
