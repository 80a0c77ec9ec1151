//! Count tables on disk: comment lines with the format version and job
//! configuration, then a CSV table with a mandatory header.

use crate::enumeration::{CountRow, FitResult};
use crate::error::{Error, Result};

use super::JobEcho;

pub const FORMAT_VERSION: u32 = 1;

const HEADER: [&str; 8] =
    ["B", "N_integral", "N_rational", "predicted_a", "predicted_b", "fitted_a", "fitted_b", "fitted_c"];

#[derive(Debug, Clone, PartialEq)]
pub struct CountTable {
    pub echo: JobEcho,
    pub rows: Vec<CountRow>,
    pub predicted: Option<(f64, f64)>,
    /// Written on the last row only.
    pub fitted: Option<FitResult>,
}

pub(crate) fn echo_json(echo: &JobEcho) -> Result<String> {
    serde_json::to_string(echo).map_err(|e| Error::Io(e.to_string()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| ".".into())
}

pub fn write_count_csv(t: &CountTable) -> Result<String> {
    let mut out = format!("# format_version={FORMAT_VERSION}\n# config={}\n", echo_json(&t.echo)?);
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(HEADER).map_err(io)?;
    for (i, r) in t.rows.iter().enumerate() {
        let fit = if i + 1 == t.rows.len() { t.fitted } else { None };
        w.write_record([
            r.b.to_string(),
            r.integral.to_string(),
            r.rational.to_string(),
            opt(t.predicted.map(|p| p.0)),
            opt(t.predicted.map(|p| p.1)),
            opt(fit.map(|f| f.a)),
            opt(fit.map(|f| f.b)),
            opt(fit.map(|f| f.c)),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))?);
    Ok(out)
}

fn field(s: &str) -> Result<Option<f64>> {
    if s == "." {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::Parse(format!("bad numeric field {s:?}")))
}

pub fn read_count_csv(text: &str) -> Result<CountTable> {
    let mut version = None;
    let mut echo = None;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(v) = line.strip_prefix("# format_version=") {
            version = v.trim().parse::<u32>().ok();
        } else if let Some(c) = line.strip_prefix("# config=") {
            echo = Some(serde_json::from_str::<JobEcho>(c).map_err(|e| Error::Parse(format!("config line: {e}")))?);
        }
    }
    if version != Some(FORMAT_VERSION) {
        return Err(Error::Parse(format!("unsupported or missing format version {version:?}")));
    }
    let echo = echo.ok_or_else(|| Error::Parse("missing config line".into()))?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    let (mut predicted, mut fitted) = (None, None);
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let num = |i: usize| -> Result<Option<f64>> { field(&rec[i]) };
        let int = |i: usize| -> Result<u64> {
            rec[i].parse().map_err(|_| Error::Parse(format!("bad count {:?}", &rec[i])))
        };
        rows.push(CountRow {
            b: num(0)?.ok_or_else(|| Error::Parse("missing B".into()))?,
            integral: int(1)?,
            rational: int(2)?,
        });
        if let (Some(a), Some(b)) = (num(3)?, num(4)?) {
            predicted = Some((a, b));
        }
        if let (Some(a), Some(b), Some(c)) = (num(5)?, num(6)?, num(7)?) {
            fitted = Some(FitResult { a, b, c });
        }
    }
    Ok(CountTable { echo, rows, predicted, fitted })
}
