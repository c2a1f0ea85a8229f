use std::path::Path;

use super::dataset::{Dataset, RawTable};
use crate::error::{Error, Result};

pub const LABEL_COLUMN: &str = "label";
pub const USER_COLUMN: &str = "user_id";

/// Bucket for a numeric value: `floor((log2 x)^2)` when `x > 2`, else `1`.
pub fn discretize_numeric(x: f64) -> Result<i64> {
    if !x.is_finite() {
        return Err(Error::Data(format!("cannot discretize non-finite value {x}")));
    }
    if x > 2.0 {
        Ok(x.log2().powi(2).floor() as i64)
    } else {
        Ok(1)
    }
}

#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    /// Columns parsed as numbers and bucketed with [`discretize_numeric`].
    pub numeric_fields: Vec<String>,
    /// Feature column that also serves as the gAUC group key.
    pub user_field: Option<String>,
}

fn parse_label(raw: &str, line: usize) -> Result<f64> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| Error::Data(format!("line {line}: label `{raw}` is not a number")))?;
    if v == 0.0 || v == 1.0 {
        Ok(v)
    } else {
        Err(Error::Data(format!("line {line}: label {v} is not in {{0,1}}")))
    }
}

/// Reads a headered CSV. `label` is required; `user_id`, when present, is a
/// group key only and not a feature. Every other column is a categorical field.
pub fn read_csv(path: &Path, opts: &CsvOptions) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_col = headers
        .iter()
        .position(|h| h == LABEL_COLUMN)
        .ok_or_else(|| Error::Data(format!("{}: no `label` column", path.display())))?;
    let user_col = headers.iter().position(|h| h == USER_COLUMN);
    let field_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| c != label_col && Some(c) != user_col)
        .collect();
    let field_names: Vec<String> = field_cols.iter().map(|&c| headers[c].clone()).collect();

    for name in &opts.numeric_fields {
        if !field_names.contains(name) {
            return Err(Error::config("numeric_fields", format!("no column `{name}`")));
        }
    }
    let numeric: Vec<bool> = field_names.iter().map(|n| opts.numeric_fields.contains(n)).collect();
    let group_field = match &opts.user_field {
        Some(u) => Some(
            field_names
                .iter()
                .position(|n| n == u)
                .ok_or_else(|| Error::config("user_field", format!("no column `{u}`")))?,
        ),
        None => None,
    };

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut groups: Option<Vec<String>> = (user_col.is_some() || group_field.is_some()).then(Vec::new);
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        if rec.len() != headers.len() {
            return Err(Error::Data(format!(
                "line {line}: {} columns, header has {}",
                rec.len(),
                headers.len()
            )));
        }
        labels.push(parse_label(&rec[label_col], line)?);
        let mut row = Vec::with_capacity(field_cols.len());
        for (j, &c) in field_cols.iter().enumerate() {
            let raw = rec[c].trim();
            if numeric[j] && !raw.is_empty() {
                let x: f64 = raw
                    .parse()
                    .map_err(|_| Error::Data(format!("line {line}: `{raw}` in `{}` is not numeric", field_names[j])))?;
                row.push(discretize_numeric(x)?.to_string());
            } else {
                row.push(raw.to_string());
            }
        }
        if let Some(g) = groups.as_mut() {
            let key = match (group_field, user_col) {
                (Some(j), _) => row[j].clone(),
                (None, Some(c)) => rec[c].trim().to_string(),
                (None, None) => unreachable!(),
            };
            g.push(key);
        }
        rows.push(row);
    }
    Ok(RawTable {
        field_names,
        rows,
        labels,
        groups,
    })
}

/// Writes a dataset back out with its vocabulary tokens, `label` last.
pub fn write_csv(path: &Path, ds: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = ds.fields().iter().map(|v| v.name()).collect();
    header.push(LABEL_COLUMN);
    w.write_record(&header)?;
    let mut rec: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..ds.len() {
        rec.clear();
        for (id, v) in ds.row(i).iter().zip(ds.fields().iter()) {
            rec.push(v.token(*id).unwrap_or_default().to_string());
        }
        rec.push(format!("{}", ds.labels()[i] as u8));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn discretize_examples() {
        assert_eq!(discretize_numeric(1.5).unwrap(), 1);
        assert_eq!(discretize_numeric(2.0).unwrap(), 1);
        assert_eq!(discretize_numeric(8.0).unwrap(), 9);
        // (log2 5)^2 = 5.39
        assert_eq!(discretize_numeric(5.0).unwrap(), 5);
        assert!(discretize_numeric(f64::NAN).is_err());
    }

    #[test]
    fn reads_fields_label_and_user() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let mut f = std::fs::File::create(&p).unwrap();
        writeln!(f, "item,label,user_id,price").unwrap();
        writeln!(f, "a,1,u1,8").unwrap();
        writeln!(f, "b,0,u2,1.5").unwrap();
        drop(f);
        let t = read_csv(
            &p,
            &CsvOptions {
                numeric_fields: vec!["price".into()],
                user_field: None,
            },
        )
        .unwrap();
        assert_eq!(t.field_names, vec!["item", "price"]);
        assert_eq!(t.rows[0], vec!["a", "9"]);
        assert_eq!(t.rows[1], vec!["b", "1"]);
        assert_eq!(t.labels, vec![1.0, 0.0]);
        assert_eq!(t.groups.unwrap(), vec!["u1", "u2"]);
    }

    #[test]
    fn rejects_non_binary_label() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "x,label\na,2\n").unwrap();
        assert!(matches!(read_csv(&p, &CsvOptions::default()), Err(Error::Data(_))));
    }

    #[test]
    fn missing_label_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "x,y\na,b\n").unwrap();
        assert!(read_csv(&p, &CsvOptions::default()).is_err());
    }
}
