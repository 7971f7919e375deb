//! Sample ingestion from CSV (one value per line, optional `value` header)
//! or JSON (`{"n": .., "r": .., "values": [..]}`).

use std::path::Path;

use blup_core::CensoredSample;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    pub n: Option<usize>,
    pub r: Option<usize>,
    pub allow_unsorted: bool,
}

pub fn ingest(path: &Path, opts: IngestOptions) -> CliResult<CensoredSample> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let display = path.display().to_string();
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        || text.trim_start().starts_with('{');
    let (file_n, file_r, values) = if is_json {
        let doc: SampleFile = serde_json::from_str(&text).map_err(|e| CliError::Parse {
            path: display.clone(),
            line: e.line() as u64,
            message: e.to_string(),
        })?;
        (Some(doc.n), doc.r, doc.values)
    } else {
        (None, None, parse_csv(&text, &display)?)
    };
    build_sample(values, file_n, file_r, opts)
}

fn parse_csv(text: &str, path: &str) -> CliResult<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Parse {
            path: path.to_string(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() != 1 {
            return Err(CliError::Parse {
                path: path.to_string(),
                line,
                message: format!("expected one value per line, found {} fields", record.len()),
            });
        }
        let field = &record[0];
        if first && field.eq_ignore_ascii_case("value") {
            first = false;
            continue;
        }
        first = false;
        let v: f64 = field.parse().map_err(|_| CliError::Parse {
            path: path.to_string(),
            line,
            message: format!("not a number: {field:?}"),
        })?;
        values.push(v);
    }
    Ok(values)
}

fn build_sample(
    mut values: Vec<f64>,
    file_n: Option<usize>,
    file_r: Option<usize>,
    opts: IngestOptions,
) -> CliResult<CensoredSample> {
    if values.is_empty() {
        return Err(CliError::Input("no observations".into()));
    }
    let n = match (file_n, opts.n) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::Input(format!(
                "input file says n = {a}, --n says {b}"
            )))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(CliError::Usage("--n is required for CSV input".into())),
    };
    for r in [file_r, opts.r].into_iter().flatten() {
        if r != values.len() {
            return Err(CliError::Input(format!(
                "r = {r} does not match the {} observed values",
                values.len()
            )));
        }
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(CliError::Input(format!("non-finite value {bad}")));
    }
    let ascending = values.windows(2).all(|w| w[0] <= w[1]);
    if !ascending {
        if opts.allow_unsorted {
            values.sort_by(f64::total_cmp);
        } else {
            return Err(CliError::Input(
                "values are not in ascending order (pass --allow-unsorted to sort them)".into(),
            ));
        }
    }
    Ok(CensoredSample::new(n, values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(n: usize) -> IngestOptions {
        IngestOptions {
            n: Some(n),
            ..Default::default()
        }
    }

    #[test]
    fn csv_with_and_without_header() {
        let v = parse_csv("value\n1.5\n 2.0 \n\n3\n", "x").unwrap();
        assert_eq!(v, vec![1.5, 2.0, 3.0]);
        assert_eq!(parse_csv("1\n2\n", "x").unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn csv_error_names_the_line() {
        let err = parse_csv("value\n1.0\nabc\n", "data.csv").unwrap_err();
        match err {
            CliError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sample_rules() {
        assert!(build_sample(vec![], None, None, opts(5)).is_err());
        assert!(build_sample(vec![2.0, 1.0], None, None, opts(5)).is_err());
        let sorted = build_sample(
            vec![2.0, 1.0],
            None,
            None,
            IngestOptions {
                allow_unsorted: true,
                ..opts(5)
            },
        )
        .unwrap();
        assert_eq!(sorted.values, vec![1.0, 2.0]);
        assert!(build_sample(vec![1.0, 1.0], None, None, opts(5)).is_err());
        assert!(build_sample(vec![1.0, 2.0], Some(4), None, opts(5)).is_err());
        assert!(build_sample(vec![1.0, 2.0], None, Some(3), opts(5)).is_err());
        assert!(build_sample(vec![1.0, 2.0], None, None, IngestOptions::default()).is_err());
    }
}
