//! CSV schemas: probability curves (`snr_db,p_fa,p_md,p_err,ci`, optionally
//! led by a `curve` column) and generic series (`curve,x,y`).

use crate::error::{CliError, CliResult};
use cogsense::montecarlo::CurveResult;
use std::io::{Read, Write};

pub const CURVE_HEADER: [&str; 5] = ["snr_db", "p_fa", "p_md", "p_err", "ci"];
pub const SERIES_HEADER: [&str; 3] = ["curve", "x", "y"];

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub curve: Option<String>,
    pub snr_db: f64,
    pub p_fa: f64,
    pub p_md: Option<f64>,
    pub p_err: f64,
    pub ci: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub curve: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Curves(Vec<CurveRow>),
    Series(Vec<SeriesRow>),
}

/// Six significant digits in scientific notation.
pub fn sci(x: f64) -> String {
    format!("{x:.5e}")
}

pub fn round6(x: f64) -> f64 {
    sci(x).parse().expect("formatted float parses")
}

/// Rows of `curve` as they appear after a write/read cycle.
pub fn curve_rows(label: Option<&str>, curve: &CurveResult) -> Vec<CurveRow> {
    curve
        .points
        .iter()
        .map(|p| CurveRow {
            curve: label.map(str::to_owned),
            snr_db: p.snr_db,
            p_fa: round6(p.p_fa_hat),
            p_md: p.p_md_hat.map(round6),
            p_err: round6(p.p_err_hat),
            ci: round6(p.ci_halfwidth),
        })
        .collect()
}

fn csv_err(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io("<csv stream>", io),
        other => CliError::Validation(format!("CSV: {other:?}")),
    }
}

impl Table {
    pub fn is_empty(&self) -> bool {
        match self {
            Table::Curves(r) => r.is_empty(),
            Table::Series(r) => r.is_empty(),
        }
    }

    pub fn write<W: Write>(&self, out: W) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(out);
        match self {
            Table::Curves(rows) => {
                let labelled = rows.iter().any(|r| r.curve.is_some());
                if labelled {
                    w.write_field("curve").map_err(csv_err)?;
                }
                w.write_record(CURVE_HEADER).map_err(csv_err)?;
                for r in rows {
                    if labelled {
                        w.write_field(r.curve.as_deref().unwrap_or("")).map_err(csv_err)?;
                    }
                    w.write_record([
                        r.snr_db.to_string(),
                        sci(r.p_fa),
                        r.p_md.map(sci).unwrap_or_default(),
                        sci(r.p_err),
                        sci(r.ci),
                    ])
                    .map_err(csv_err)?;
                }
            }
            Table::Series(rows) => {
                w.write_record(SERIES_HEADER).map_err(csv_err)?;
                for r in rows {
                    w.write_record([r.curve.clone(), r.x.to_string(), sci(r.y)]).map_err(csv_err)?;
                }
            }
        }
        w.flush().map_err(|e| CliError::io("<csv stream>", e))
    }

    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(buf)
    }

    /// Parses either schema, chosen by the header row.
    pub fn read<R: Read>(input: R) -> CliResult<Table> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
        let h: Vec<&str> = header.iter().map(String::as_str).collect();
        let labelled = h.first() == Some(&"curve");
        let table = if h == SERIES_HEADER {
            let mut rows = Vec::new();
            for (i, rec) in r.records().enumerate() {
                let rec = rec.map_err(csv_err)?;
                rows.push(SeriesRow {
                    curve: rec[0].to_owned(),
                    x: num(&rec[1], i, "x")?,
                    y: num(&rec[2], i, "y")?,
                });
            }
            Table::Series(rows)
        } else if h[usize::from(labelled)..] == CURVE_HEADER {
            let off = usize::from(labelled);
            let mut rows = Vec::new();
            for (i, rec) in r.records().enumerate() {
                let rec = rec.map_err(csv_err)?;
                let md = &rec[off + 2];
                rows.push(CurveRow {
                    curve: labelled.then(|| rec[0].to_owned()),
                    snr_db: num(&rec[off], i, "snr_db")?,
                    p_fa: num(&rec[off + 1], i, "p_fa")?,
                    p_md: if md.is_empty() { None } else { Some(num(md, i, "p_md")?) },
                    p_err: num(&rec[off + 3], i, "p_err")?,
                    ci: num(&rec[off + 4], i, "ci")?,
                });
            }
            Table::Curves(rows)
        } else {
            return Err(CliError::Validation(format!("unrecognised CSV header: {}", header.join(","))));
        };
        if table.is_empty() {
            return Err(CliError::Validation("CSV has a header but no data rows".into()));
        }
        Ok(table)
    }
}

fn num(s: &str, row: usize, col: &str) -> CliResult<f64> {
    s.parse()
        .map_err(|_| CliError::Validation(format!("row {}: column {col}: `{s}` is not a number", row + 2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use cogsense::montecarlo::CurvePoint;
    use proptest::prelude::*;

    fn point(snr_db: f64, p: f64, md: Option<f64>) -> CurvePoint {
        CurvePoint {
            snr_db,
            lambda: 1.0,
            p_fa_hat: p,
            p_md_hat: md,
            p_err_hat: p / 3.0,
            ci_halfwidth: p / 7.0,
            trials_used: 10,
        }
    }

    #[test]
    fn header_and_format() {
        let c = CurveResult { points: vec![point(-2.5, 0.05, Some(0.123456789)), point(0.0, 1.0, None)] };
        let bytes = Table::Curves(curve_rows(None, &c)).to_bytes().unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "snr_db,p_fa,p_md,p_err,ci");
        assert_eq!(lines[1], "-2.5,5.00000e-2,1.23457e-1,1.66667e-2,7.14286e-3");
        assert_eq!(lines[2], "0,1.00000e0,,3.33333e-1,1.42857e-1");
    }

    #[test]
    fn empty_body_is_rejected() {
        let e = Table::read("snr_db,p_fa,p_md,p_err,ci\n".as_bytes()).unwrap_err();
        assert!(matches!(e, CliError::Validation(_)));
        assert!(Table::read("a,b\n1,2\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn curves_round_trip(
            pts in prop::collection::vec((-50i32..50, 0.0f64..1.0, prop::option::of(1e-300f64..1.0)), 1..20),
            labelled in any::<bool>(),
        ) {
            let c = CurveResult { points: pts.iter().map(|&(s, p, md)| point(s as f64 / 2.0, p, md)).collect() };
            let label = labelled.then_some("a,b");
            let rows = curve_rows(label, &c);
            let t = Table::Curves(rows.clone());
            let back = Table::read(t.to_bytes().unwrap().as_slice()).unwrap();
            prop_assert_eq!(back, Table::Curves(rows));
        }

        #[test]
        fn series_round_trip(ys in prop::collection::vec(-1e6f64..1e6, 1..20)) {
            let rows: Vec<SeriesRow> = ys
                .iter()
                .enumerate()
                .map(|(i, &y)| SeriesRow { curve: format!("c{}", i % 3), x: i as f64 / 20.0, y: round6(y) })
                .collect();
            let t = Table::Series(rows);
            let back = Table::read(t.to_bytes().unwrap().as_slice()).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
