use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::BlerReport;

pub const CSV_COLUMNS: [&str; 17] = [
    "scheme",
    "K1",
    "K2",
    "N",
    "rate",
    "snr_f_db",
    "snr_fb_db_or_inf",
    "trials",
    "bler_u1",
    "ci_u1_lo",
    "ci_u1_hi",
    "bler_u2",
    "ci_u2_lo",
    "ci_u2_hi",
    "bler_joint",
    "seed",
    "wall_time_s",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::invalid(format!("unknown output format `{other}`"))),
        }
    }
}

/// Feedback SNR cell: a number, or `"inf"` for noiseless feedback.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SnrFb {
    Db(f64),
    Inf(InfTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfTag {
    #[serde(rename = "inf")]
    Inf,
}

impl SnrFb {
    pub fn from_option(db: Option<f64>) -> Self {
        db.map_or(SnrFb::Inf(InfTag::Inf), SnrFb::Db)
    }

    pub fn db(self) -> Option<f64> {
        match self {
            SnrFb::Db(v) => Some(v),
            SnrFb::Inf(_) => None,
        }
    }
}

/// Flat output record; one CSV line or one JSON object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportRow {
    pub scheme: String,
    #[serde(rename = "K1")]
    pub k1: u32,
    #[serde(rename = "K2")]
    pub k2: u32,
    #[serde(rename = "N")]
    pub n: usize,
    pub rate: f64,
    pub snr_f_db: f64,
    pub snr_fb_db_or_inf: SnrFb,
    pub trials: u64,
    pub bler_u1: f64,
    pub ci_u1_lo: f64,
    pub ci_u1_hi: f64,
    pub bler_u2: f64,
    pub ci_u2_lo: f64,
    pub ci_u2_hi: f64,
    pub bler_joint: f64,
    pub seed: u64,
    pub wall_time_s: Option<f64>,
}

impl From<&BlerReport> for ReportRow {
    fn from(r: &BlerReport) -> Self {
        let (l1, h1) = r.ci95(0);
        let (l2, h2) = r.ci95(1);
        Self {
            scheme: r.scheme.label().to_string(),
            k1: r.k[0],
            k2: r.k[1],
            n: r.n,
            rate: r.rate(),
            snr_f_db: r.snr_f_db,
            snr_fb_db_or_inf: SnrFb::from_option(r.snr_fb_db),
            trials: r.trials,
            bler_u1: r.bler(0),
            ci_u1_lo: l1,
            ci_u1_hi: h1,
            bler_u2: r.bler(1),
            ci_u2_lo: l2,
            ci_u2_hi: h2,
            bler_joint: r.joint_bler(),
            seed: r.seed,
            wall_time_s: r.wall_time_s,
        }
    }
}

impl ReportRow {
    fn cells(&self) -> Vec<String> {
        let fb = match self.snr_fb_db_or_inf {
            SnrFb::Db(v) => v.to_string(),
            SnrFb::Inf(_) => "inf".to_string(),
        };
        vec![
            self.scheme.clone(),
            self.k1.to_string(),
            self.k2.to_string(),
            self.n.to_string(),
            self.rate.to_string(),
            self.snr_f_db.to_string(),
            fb,
            self.trials.to_string(),
            self.bler_u1.to_string(),
            self.ci_u1_lo.to_string(),
            self.ci_u1_hi.to_string(),
            self.bler_u2.to_string(),
            self.ci_u2_lo.to_string(),
            self.ci_u2_hi.to_string(),
            self.bler_joint.to_string(),
            self.seed.to_string(),
            self.wall_time_s.map(|t| t.to_string()).unwrap_or_default(),
        ]
    }

    fn from_cells(rec: &csv::StringRecord) -> std::result::Result<Self, String> {
        if rec.len() != CSV_COLUMNS.len() {
            return Err(format!(
                "expected {} fields, got {}",
                CSV_COLUMNS.len(),
                rec.len()
            ));
        }
        fn num<V: FromStr>(rec: &csv::StringRecord, i: usize) -> std::result::Result<V, String> {
            rec[i]
                .parse()
                .map_err(|_| format!("bad {} value `{}`", CSV_COLUMNS[i], &rec[i]))
        }
        let fb = match &rec[6] {
            "inf" => SnrFb::Inf(InfTag::Inf),
            _ => SnrFb::Db(num(rec, 6)?),
        };
        let wall = match &rec[16] {
            "" => None,
            _ => Some(num(rec, 16)?),
        };
        Ok(Self {
            scheme: rec[0].to_string(),
            k1: num(rec, 1)?,
            k2: num(rec, 2)?,
            n: num(rec, 3)?,
            rate: num(rec, 4)?,
            snr_f_db: num(rec, 5)?,
            snr_fb_db_or_inf: fb,
            trials: num(rec, 7)?,
            bler_u1: num(rec, 8)?,
            ci_u1_lo: num(rec, 9)?,
            ci_u1_hi: num(rec, 10)?,
            bler_u2: num(rec, 11)?,
            ci_u2_lo: num(rec, 12)?,
            ci_u2_hi: num(rec, 13)?,
            bler_joint: num(rec, 14)?,
            seed: num(rec, 15)?,
            wall_time_s: wall,
        })
    }
}

/// Writes reports as CSV, header first (header only for an empty list).
pub fn write_csv<W: Write>(reports: &[BlerReport], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in reports {
        w.write_record(ReportRow::from(r).cells())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes reports as a JSON array of objects keyed like the CSV columns.
pub fn write_json<W: Write>(reports: &[BlerReport], mut out: W) -> serde_json::Result<()> {
    let rows: Vec<ReportRow> = reports.iter().map(ReportRow::from).collect();
    serde_json::to_writer_pretty(&mut out, &rows)?;
    out.write_all(b"\n").map_err(serde_json::Error::io)
}

/// Writes reports to `path` in `format`.
pub fn emit(reports: &[BlerReport], path: &Path, format: OutputFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_csv(reports, &mut buf).map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?,
        OutputFormat::Json => write_json(reports, &mut buf).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?,
    }
    buf.flush().map_err(|e| Error::io(path, e))
}

fn read_all(path: &Path) -> Result<String> {
    let mut s = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|e| Error::io(path, e))?;
    Ok(s)
}

/// Parses a CSV written by [`emit`].
pub fn read_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let text = read_all(path)?;
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let wrap = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    let header = rd.headers().map_err(wrap)?;
    if header.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(Error::Mismatch(format!(
            "{}: unexpected CSV header",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(wrap)?;
        rows.push(
            ReportRow::from_cells(&rec)
                .map_err(|m| Error::Mismatch(format!("{}: {m}", path.display())))?,
        );
    }
    Ok(rows)
}

/// Parses a JSON file written by [`emit`].
pub fn read_json(path: &Path) -> Result<Vec<ReportRow>> {
    let text = read_all(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}
