//! Versioned CSV files: a `# schema=<name>/<version>` line, then a header row.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub fn schema_line(name: &str) -> String {
    format!("# schema={name}/{SCHEMA_VERSION}")
}

pub fn write_csv<W: Write, T: Serialize>(mut out: W, schema: &str, rows: &[T]) -> Result<(), CliError> {
    writeln!(out, "{}", schema_line(schema))?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file<T: Serialize>(path: &Path, schema: &str, rows: &[T]) -> Result<(), CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))?;
    write_csv(std::io::BufWriter::new(file), schema, rows)
}

/// Reads a file written by [`write_csv`], checking the schema line. Errors
/// name the offending line.
pub fn read_csv<T: DeserializeOwned>(text: &str, schema: &str) -> Result<Vec<T>, CliError> {
    let expected = schema_line(schema);
    let (first, body) = text.split_once('\n').unwrap_or((text, ""));
    if first.trim_end_matches('\r') != expected {
        return Err(CliError::Config(format!("line 1: expected `{expected}`")));
    }
    let mut r = csv::Reader::from_reader(body.as_bytes());
    r.deserialize()
        .map(|row| {
            row.map_err(|e| {
                // The schema line shifts every CSV line by one.
                let line = e.position().map_or(0, |p| p.line() + 1);
                CliError::Config(format!("line {line}: {e}"))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Row {
        p: u64,
        err: f64,
    }

    #[test]
    fn round_trip_and_schema_check() {
        let rows = vec![Row { p: 4, err: 0.5 }, Row { p: 8, err: 0.125 }];
        let mut buf = Vec::new();
        write_csv(&mut buf, "demo", &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# schema=demo/1\np,err\n"));
        assert_eq!(read_csv::<Row>(&text, "demo").unwrap(), rows);
        assert!(read_csv::<Row>(&text, "other").is_err());
        let err = read_csv::<Row>("# schema=demo/1\np,err\n4,x\n", "demo").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }
}
