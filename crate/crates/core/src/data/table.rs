use std::io::{Read, Write};
use std::path::Path;

use crate::data::Schema;
use crate::error::{Error, Result};

/// String cells aligned to a schema's attribute order. Empty string = missing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Data(e.to_string()))
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<RawTable> {
    let file = std::fs::File::open(path)?;
    read_csv(file, schema)
}

/// Reads a headered CSV and reorders its columns into schema order.
///
/// Features and the target must be present in the header; other schema
/// attributes are filled with empty cells when absent. Extra columns are
/// ignored.
pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let mut mapping = Vec::with_capacity(schema.attributes.len());
    for attr in &schema.attributes {
        let pos = header.iter().position(|h| *h == attr.name);
        if pos.is_none() && (attr.is_feature || attr.name == schema.target) {
            return Err(Error::MissingColumn(attr.name.clone()));
        }
        mapping.push(pos);
    }

    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        if record.len() != header.len() {
            let line = record.position().map_or(0, |p| p.line());
            return Err(Error::RaggedRow {
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        rows.push(
            mapping
                .iter()
                .map(|pos| pos.map_or_else(String::new, |p| record[p].trim().to_string()))
                .collect(),
        );
    }
    Ok(RawTable {
        columns: schema.attributes.iter().map(|a| a.name.clone()).collect(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, SynthOptions};

    #[test]
    fn header_only_file_is_empty() {
        let schema = Schema::clinical();
        let header = schema
            .attributes
            .iter()
            .map(|a| a.name.as_str())
            .collect::<Vec<_>>()
            .join(",");
        let t = read_csv(header.as_bytes(), &schema).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.columns.len(), 36);
    }

    #[test]
    fn missing_column_is_reported() {
        let schema = Schema::clinical();
        let err = read_csv("AGE,SEX\n1,male\n".as_bytes(), &schema).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(_)));
    }

    #[test]
    fn ragged_row_reports_line() {
        let schema = Schema::clinical();
        let mut csv = synth_generate(&SynthOptions::new(1, 3), &schema)
            .unwrap()
            .to_csv_string()
            .unwrap();
        csv.push_str("a,b\n");
        match read_csv(csv.as_bytes(), &schema).unwrap_err() {
            Error::RaggedRow { line, found, .. } => {
                assert_eq!(line, 5);
                assert_eq!(found, 2);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn shuffled_columns_load_identically() {
        let schema = Schema::clinical();
        let table = synth_generate(&SynthOptions::new(4, 20), &schema).unwrap();
        let canonical = read_csv(table.to_csv_string().unwrap().as_bytes(), &schema).unwrap();

        // reverse the column order and write again
        let n = table.columns.len();
        let rev = RawTable {
            columns: (0..n).rev().map(|j| table.columns[j].clone()).collect(),
            rows: table
                .rows
                .iter()
                .map(|r| (0..n).rev().map(|j| r[j].clone()).collect())
                .collect(),
        };
        let shuffled = read_csv(rev.to_csv_string().unwrap().as_bytes(), &schema).unwrap();
        assert_eq!(canonical, shuffled);
        assert_eq!(canonical, table);
    }
}
