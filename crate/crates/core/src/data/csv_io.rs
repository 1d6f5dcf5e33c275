use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::{BetDecision, DataError, KeepDecision, ProbeRecord, ProspectiveChoice, Result, Track};
use crate::par::{map_slice, Execution};

pub const CSV_HEADER: [&str; 8] =
    ["model", "track", "item_id", "domain", "correct", "keep", "bet", "prospective_choice"];

/// Parse one probe CSV. Rows are reported by their line number in the file.
pub fn parse_probe_csv<R: Read>(source: R) -> Result<Vec<ProbeRecord>> {
    parse_named(source, "")
}

fn parse_named<R: Read>(source: R, file: &str) -> Result<Vec<ProbeRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::None).from_reader(source);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(DataError::Schema {
            file: file.to_string(),
            row: 1,
            message: format!(
                "header must be exactly `{}`, found `{}`",
                CSV_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let parse_err = |col: usize, message: String| DataError::Parse {
            file: file.to_string(),
            row: line,
            column: CSV_HEADER[col].to_string(),
            message,
        };
        if row.len() != CSV_HEADER.len() {
            return Err(DataError::Schema {
                file: file.to_string(),
                row: line,
                message: format!("expected {} fields, found {}", CSV_HEADER.len(), row.len()),
            });
        }
        let track: Track = row[1].parse().map_err(|m| parse_err(1, m))?;
        let correct = match &row[4] {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(4, format!("expected one of 0, 1, got `{other}`"))),
        };
        let keep = KeepDecision::parse_token(&row[5]).ok_or_else(|| {
            parse_err(5, format!("expected one of {}, got `{}`", KeepDecision::TOKENS.join(", "), &row[5]))
        })?;
        let bet = BetDecision::parse_token(&row[6]).ok_or_else(|| {
            parse_err(6, format!("expected one of {}, got `{}`", BetDecision::TOKENS.join(", "), &row[6]))
        })?;
        let prospective = match &row[7] {
            "" => None,
            tok => Some(ProspectiveChoice::parse_token(tok).ok_or_else(|| {
                parse_err(7, format!("expected one of {} or empty, got `{tok}`", ProspectiveChoice::TOKENS.join(", ")))
            })?),
        };
        match (track.is_prospective(), prospective.is_some()) {
            (true, false) => {
                return Err(DataError::Schema {
                    file: file.to_string(),
                    row: line,
                    message: "T6 record is missing its prospective_choice".into(),
                })
            }
            (false, true) => {
                return Err(DataError::Schema {
                    file: file.to_string(),
                    row: line,
                    message: format!("prospective_choice given on a {track} record"),
                })
            }
            _ => {}
        }
        if row[0].is_empty() || row[2].is_empty() {
            return Err(DataError::Schema {
                file: file.to_string(),
                row: line,
                message: "model and item_id must be non-empty".into(),
            });
        }
        out.push(ProbeRecord {
            model_id: row[0].to_string(),
            track,
            item_id: row[2].to_string(),
            domain: row[3].to_string(),
            correct,
            keep,
            bet,
            prospective,
        });
    }
    Ok(out)
}

pub fn write_probe_csv<W: Write>(records: &[ProbeRecord], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.model_id.as_str(),
            r.track.as_str(),
            r.item_id.as_str(),
            r.domain.as_str(),
            if r.correct { "1" } else { "0" },
            r.keep.as_str(),
            r.bet.as_str(),
            r.prospective.map_or("", |p| p.as_str()),
        ])?;
    }
    w.flush().map_err(|source| DataError::Io { path: "<writer>".into(), source })?;
    Ok(())
}

/// All `*.csv` files directly under `dir`, sorted by file name.
pub fn probe_csv_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let io_err = |source| DataError::Io { path: dir.display().to_string(), source };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    Ok(files)
}

/// Parse every CSV in a directory and merge, sorted by model then item.
pub fn load_dir(dir: &Path, exec: Execution) -> Result<Vec<ProbeRecord>> {
    let files = probe_csv_files(dir)?;
    if files.is_empty() {
        return Err(DataError::EmptyInput);
    }
    let parsed = map_slice(&files, exec, |path| {
        let file =
            std::fs::File::open(path).map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
        parse_named(std::io::BufReader::new(file), &format!("{}: ", path.display()))
    });
    let mut records = Vec::new();
    for batch in parsed {
        records.extend(batch?);
    }
    records.sort_by(|a, b| (&a.model_id, &a.item_id).cmp(&(&b.model_id, &b.item_id)));
    Ok(records)
}
