use std::path::Path;

use spectraforge_core::{Error, Matrix};

use crate::error::{AppError, Result};
use crate::spb;

/// Parses headerless comma-separated numbers into a matrix.
pub fn parse_csv(text: &str, path: &Path) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| AppError::format(path, e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| AppError::format(path, format!("line {}: {f:?} is not a number", line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(AppError::format(
                    path,
                    format!("line {} has {} fields, expected {}", line + 1, row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(AppError::format(path, "no data rows"));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Data(format!("{} holds non-finite values", path.display())).into());
    }
    Ok(Matrix::from_rows(&rows)?)
}

/// Reads `.csv` files as text and everything else as SPB.
pub fn load_matrix(path: &Path) -> Result<Matrix> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        parse_csv(&text, path)
    } else {
        spb::read_matrix(path)
    }
}

pub fn save_matrix(path: &Path, m: &Matrix) -> Result<()> {
    spb::write_matrix(path, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_values() {
        let m = parse_csv("1.5,2.5\n3.5,4.5\n", Path::new("a.csv")).unwrap();
        assert_eq!(m, Matrix::from_rows(&[[1.5, 2.5], [3.5, 4.5]]).unwrap());
    }

    #[test]
    fn csv_errors() {
        let p = Path::new("a.csv");
        assert_eq!(parse_csv("1,2\n3\n", p).unwrap_err().class(), "FormatError");
        assert_eq!(parse_csv("1,x\n", p).unwrap_err().class(), "FormatError");
        assert_eq!(parse_csv("", p).unwrap_err().class(), "FormatError");
        assert_eq!(parse_csv("1,NaN\n", p).unwrap_err().class(), "DataError");
    }
}
