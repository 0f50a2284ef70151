use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use varclust::DataMatrix;

use crate::error::{BenchError, Result};

/// Name of the optional ground-truth column.
pub const LABEL_COLUMN: &str = "label";

/// A dataset read from CSV, with labels when a `label` column is present.
#[derive(Debug, Clone)]
pub struct CsvDataset {
    pub data: DataMatrix,
    /// Labels mapped to `0..K` in order of first appearance.
    pub labels: Option<Vec<usize>>,
}

pub fn load_csv(path: &Path) -> Result<CsvDataset> {
    let file = std::fs::File::open(path).map_err(|e| BenchError::Data(format!("{}: {e}", path.display())))?;
    read_csv(file).map_err(|e| match e {
        BenchError::Data(msg) => BenchError::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_csv<R: Read>(reader: R) -> Result<CsvDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> =
        rdr.headers().map_err(|e| BenchError::Data(e.to_string()))?.iter().map(str::to_string).collect();
    let label_col = header.iter().position(|h| h == LABEL_COLUMN);
    let names: Vec<String> =
        header.iter().enumerate().filter(|(i, _)| Some(*i) != label_col).map(|(_, h)| h.clone()).collect();
    if names.is_empty() {
        return Err(BenchError::Data("no numeric columns".into()));
    }
    let mut rows = Vec::new();
    let mut raw_labels = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| BenchError::Data(e.to_string()))?;
        let mut values = Vec::with_capacity(names.len());
        for (col, cell) in record.iter().enumerate() {
            if Some(col) == label_col {
                raw_labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| BenchError::Data(format!("row {}, column `{}`: `{cell}` is not a finite number", row + 2, header[col])))?;
            values.push(v);
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(BenchError::Data("no data rows".into()));
    }
    let data = DataMatrix::from_rows(&rows)
        .and_then(|d| d.with_col_names(names))
        .map_err(|e| BenchError::Data(e.to_string()))?;
    let labels = label_col.map(|_| {
        let mut ids = BTreeMap::new();
        let mut order = Vec::new();
        for l in &raw_labels {
            let next = ids.len();
            order.push(*ids.entry(l.clone()).or_insert(next));
        }
        order
    });
    Ok(CsvDataset { data, labels })
}

/// Writes a dataset as CSV, labels last under [`LABEL_COLUMN`].
pub fn write_csv<W: std::io::Write>(writer: W, data: &DataMatrix, labels: Option<&[usize]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..data.p()).map(|j| data.col_name(j)).collect();
    if labels.is_some() {
        header.push(LABEL_COLUMN.into());
    }
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut rec: Vec<String> = (0..data.p()).map(|j| data.values()[(i, j)].to_string()).collect();
        if let Some(l) = labels {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_column_is_split_off() {
        let text = "a,label,b\n1,x,2\n3,y,4\n5,x,6\n";
        let ds = read_csv(text.as_bytes()).unwrap();
        assert_eq!(ds.data.p(), 2);
        assert_eq!(ds.data.col_name(1), "b");
        assert_eq!(ds.labels, Some(vec![0, 1, 0]));
        assert_eq!(ds.data.values()[(2, 1)], 6.0);
    }

    #[test]
    fn non_numeric_cell_is_a_data_error() {
        let err = read_csv("a,b\n1,oops\n".as_bytes()).unwrap_err();
        assert!(matches!(err, BenchError::Data(ref m) if m.contains("oops")));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(matches!(read_csv("a,b\n1,2\n3\n".as_bytes()), Err(BenchError::Data(_))));
    }

    #[test]
    fn round_trip() {
        let data = DataMatrix::from_rows(&[vec![1.5, -2.0], vec![0.25, 3.0]]).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &data, Some(&[1, 0])).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.data.values(), data.values());
        assert_eq!(back.labels, Some(vec![0, 1]));
    }
}
