//! CSV layout: header `drug,risk,<predictors...>`, one row per observation,
//! risk tokens `low|intermediate|high`, `NA` or an empty cell for missing.

use std::collections::HashMap;
use std::io::{Read, Write};

use csv::{ReaderBuilder, StringRecord, Terminator, WriterBuilder};

use super::{check_cell, Dataset, Drug, Observation, Predictor, PredictorKind, PredictorSchema};
use crate::error::{Error, Result};

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "NA"
}

fn read_records<R: Read>(source: R) -> Result<Vec<(usize, StringRecord)>> {
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        // skip fully blank trailing lines
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        out.push((line, rec));
    }
    Ok(out)
}

fn check_header(line: usize, header: &StringRecord, schema: &PredictorSchema) -> Result<()> {
    let got: Vec<&str> = header.iter().collect();
    let mut want = vec!["drug", "risk"];
    want.extend(schema.names());
    if got != want {
        return Err(Error::Schema(format!(
            "line {line}: header `{}` does not match expected `{}`",
            got.join(","),
            want.join(",")
        )));
    }
    Ok(())
}

/// Parse a dataset against a known schema.
pub fn load_csv<R: Read>(source: R, schema: &PredictorSchema) -> Result<Dataset> {
    let records = read_records(source)?;
    let Some(((hline, header), rows)) = records.split_first() else {
        return Err(Error::Schema("empty input: header row missing".into()));
    };
    check_header(*hline, header, schema)?;

    let p = schema.len();
    let mut drugs: Vec<Drug> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut observations = Vec::with_capacity(rows.len());
    for (line, rec) in rows {
        let line = *line;
        if rec.len() != p + 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", p + 2, rec.len()),
            });
        }
        let id = &rec[0];
        if id.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty drug id".into(),
            });
        }
        let label = rec[1].parse().map_err(|_| Error::Parse {
            line,
            message: format!("unknown risk token `{}`", &rec[1]),
        })?;
        let drug = match index.get(id) {
            Some(&k) => {
                if drugs[k].label != label {
                    return Err(Error::ConflictingLabel {
                        drug: id.to_string(),
                        first: drugs[k].label,
                        second: label,
                    });
                }
                k
            }
            None => {
                index.insert(id.to_string(), drugs.len());
                drugs.push(Drug {
                    id: id.to_string(),
                    label,
                });
                drugs.len() - 1
            }
        };
        let mut values = Vec::with_capacity(p);
        for (j, cell) in rec.iter().skip(2).enumerate() {
            if is_missing(cell) {
                values.push(None);
                continue;
            }
            let predictor = schema.get(j);
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                message: format!("column `{}`: `{cell}` is not a number", predictor.name),
            })?;
            check_cell(predictor, v).map_err(|message| Error::Parse { line, message })?;
            values.push(Some(v));
        }
        observations.push(Observation { drug, values });
    }
    Dataset::new(schema.clone(), drugs, observations)
}

/// Derive a schema from the header. A column is binary when every observed
/// cell is exactly 0 or 1 (and at least one is observed); otherwise continuous.
pub fn infer_schema(source: &[u8]) -> Result<PredictorSchema> {
    let records = read_records(source)?;
    let Some(((hline, header), rows)) = records.split_first() else {
        return Err(Error::Schema("empty input: header row missing".into()));
    };
    if header.len() < 3 || &header[0] != "drug" || &header[1] != "risk" {
        return Err(Error::Schema(format!(
            "line {hline}: header must start with `drug,risk` followed by predictors"
        )));
    }
    let p = header.len() - 2;
    let mut binary = vec![true; p];
    let mut observed = vec![false; p];
    for (_, rec) in rows {
        for (j, cell) in rec.iter().skip(2).take(p).enumerate() {
            if is_missing(cell) {
                continue;
            }
            observed[j] = true;
            if cell.parse::<f64>().map_or(true, |v| v != 0.0 && v != 1.0) {
                binary[j] = false;
            }
        }
    }
    let predictors = header
        .iter()
        .skip(2)
        .enumerate()
        .map(|(j, name)| Predictor {
            name: name.to_string(),
            kind: if binary[j] && observed[j] {
                PredictorKind::Binary
            } else {
                PredictorKind::Continuous
            },
        })
        .collect();
    PredictorSchema::new(predictors)
}

/// Write in canonical form: shortest round-trip decimals, `NA` for missing, LF endings.
pub fn write_csv<W: Write>(dataset: &Dataset, sink: W) -> Result<()> {
    let mut writer = WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_writer(sink);
    let mut header = vec!["drug".to_string(), "risk".to_string()];
    header.extend(dataset.schema().names().map(str::to_string));
    writer.write_record(&header).map_err(csv_io)?;
    let mut record = Vec::with_capacity(header.len());
    for obs in dataset.observations() {
        record.clear();
        let drug = &dataset.drugs()[obs.drug];
        record.push(drug.id.clone());
        record.push(drug.label.token().to_string());
        record.extend(obs.values.iter().map(|v| match v {
            Some(v) => format!("{v}"),
            None => "NA".to_string(),
        }));
        writer.write_record(&record).map_err(csv_io)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Parse {
            line: 0,
            message: format!("{other:?}"),
        },
    }
}
