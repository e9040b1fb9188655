use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::emission::WeightedSample;
use crate::error::{Error, Result};

/// Unit of the `value` column of an empirical table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    /// Micrometres.
    Um,
    /// Metres.
    M,
}

impl Unit {
    pub fn to_si(self, v: f64) -> f64 {
        match self {
            Unit::Um => v / 1e6,
            Unit::M => v,
        }
    }
}

/// Reads a `value,count` table and converts values to SI units.
pub fn load_empirical_csv(path: &Path, unit: Unit) -> Result<WeightedSample> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    parse_empirical_csv(file, path, unit)
}

/// [`load_empirical_csv`] over any reader; `path` only labels errors.
pub fn parse_empirical_csv(reader: impl Read, path: &Path, unit: Unit) -> Result<WeightedSample> {
    let malformed = |line: u64, message: String| Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| malformed(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != ["value", "count"] {
        return Err(malformed(
            1,
            format!(
                "expected header `value,count`, got `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut values = Vec::new();
    let mut weights = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| -> Result<f64> {
            let raw = record.get(i).unwrap_or_default();
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| malformed(line, format!("{name} `{raw}` is not a finite number")))
        };
        let value = field(0, "value")?;
        let count = field(1, "count")?;
        if count < 0.0 {
            return Err(malformed(line, format!("negative count {count}")));
        }
        values.push(unit.to_si(value));
        weights.push(count);
    }
    let sample = WeightedSample::new(values, weights)?;
    if !(sample.total_weight() > 0.0) {
        return Err(Error::ZeroWeight(path.to_path_buf()));
    }
    Ok(sample)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn parse(text: &str, unit: Unit) -> Result<WeightedSample> {
        parse_empirical_csv(text.as_bytes(), Path::new("t.csv"), unit)
    }

    #[test]
    fn micrometres_are_converted() {
        let s = parse("value,count\n25,10\n85,2\n", Unit::Um).unwrap();
        assert_relative_eq!(s.values[0], 2.5e-5, max_relative = 1e-15);
        assert_relative_eq!(s.values[1], 8.5e-5, max_relative = 1e-15);
        assert_eq!(s.weights, vec![10.0, 2.0]);
        let m = parse("value,count\n0.5,3\n", Unit::M).unwrap();
        assert_eq!(m.values, vec![0.5]);
    }

    #[test]
    fn header_only_has_zero_weight() {
        assert!(matches!(
            parse("value,count\n", Unit::Um),
            Err(Error::ZeroWeight(_))
        ));
        assert!(matches!(
            parse("value,count\n5,0\n", Unit::Um),
            Err(Error::ZeroWeight(_))
        ));
    }

    #[test]
    fn negative_count_reports_line() {
        match parse("value,count\n25,10\n85,-2\n", Unit::Um) {
            Err(Error::MalformedRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_are_rejected() {
        for text in [
            "value,count\n25,x\n",
            "value,count\n25\n",
            "value,count\n25,1,2\n",
            "value,count\nnan,1\n",
            "size,count\n25,1\n",
        ] {
            let err = parse(text, Unit::Um).unwrap_err();
            assert!(
                matches!(err, Error::MalformedRow { .. }),
                "{text:?}: {err:?}"
            );
        }
    }
}
