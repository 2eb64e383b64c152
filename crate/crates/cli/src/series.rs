//! Daily series files: `date,value` with a header, or bare values one per line.

use chrono::{Days, NaiveDate};
use infostream::corpus::parse_day;

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFile {
    /// First day, when the file carries dates.
    pub start: Option<NaiveDate>,
    pub values: Vec<f64>,
}

pub fn parse_series(src: &str) -> Result<SeriesFile, String> {
    let mut start = None;
    let mut prev: Option<NaiveDate> = None;
    let mut columns = None;
    let mut values = Vec::new();
    let mut first = true;
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() > 2 {
            return Err(format!("line {line}: expected `date,value` or a single value, got {} fields", fields.len()));
        }
        let value_field = fields[fields.len() - 1];
        let value = value_field.parse::<f64>();
        if first {
            first = false;
            if value.is_err() {
                // header
                continue;
            }
        }
        if *columns.get_or_insert(fields.len()) != fields.len() {
            return Err(format!("line {line}: inconsistent number of fields"));
        }
        let value = value.map_err(|_| format!("line {line}: invalid value {value_field:?}"))?;
        if fields.len() == 2 {
            let day = parse_day(fields[0]).ok_or_else(|| format!("line {line}: invalid date {:?}", fields[0]))?;
            match prev {
                None => start = Some(day),
                Some(p) if p + Days::new(1) == day => {}
                Some(p) => return Err(format!("line {line}: {day} does not follow {p} (daily series must be contiguous)")),
            }
            prev = Some(day);
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err("no values".to_string());
    }
    Ok(SeriesFile { start, values })
}

pub fn format_dated<T: std::fmt::Display>(start: NaiveDate, values: &[T]) -> String {
    let mut out = String::from("date,value\n");
    for (t, v) in values.iter().enumerate() {
        out.push_str(&format!("{},{v}\n", start + Days::new(t as u64)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dated_with_header() {
        let s = parse_series("date,value\n2016-05-01,1.5\n2016-05-02,2\n").unwrap();
        assert_eq!(s.start, NaiveDate::from_ymd_opt(2016, 5, 1));
        assert_eq!(s.values, vec![1.5, 2.0]);
    }

    #[test]
    fn bare_values() {
        let s = parse_series("1\n\n2e-3\n-4\n").unwrap();
        assert_eq!(s.start, None);
        assert_eq!(s.values, vec![1.0, 0.002, -4.0]);
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse_series("date,value\n2016-05-01,1\n2016-05-03,2\n").unwrap_err();
        assert!(e.starts_with("line 3:"), "{e}");
        let e = parse_series("1\nx\n").unwrap_err();
        assert!(e.starts_with("line 2:"), "{e}");
        let e = parse_series("2016-05-01,1\n2\n").unwrap_err();
        assert!(e.starts_with("line 2:"), "{e}");
        assert!(parse_series("value\n").is_err());
    }

    #[test]
    fn round_trip() {
        let day = NaiveDate::from_ymd_opt(2020, 2, 28).unwrap();
        let text = format_dated(day, &[0.1, 1e-9, 3.0]);
        assert_eq!(text, "date,value\n2020-02-28,0.1\n2020-02-29,0.000000001\n2020-03-01,3\n");
        assert_eq!(parse_series(&text).unwrap().values, vec![0.1, 1e-9, 3.0]);
    }
}
