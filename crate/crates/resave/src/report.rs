//! Comma-separated reports. Floats are written with 17 significant digits
//! so that parsing a report back gives the same `f64` values.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use resave_core::models::Model;

use crate::error::{Error, Result};
use crate::harness::{Estimator, ReplicationReport, TimingRow};
use crate::ingestion::HoldoutReport;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str, column: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Schema(format!("column `{column}`: cannot parse `{s}` as a number")))
}

fn parse_int<T: std::str::FromStr>(s: &str, column: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Schema(format!("column `{column}`: cannot parse `{s}` as an integer")))
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn reader<R: Read>(r: R, expected: &[&str]) -> Result<csv::Reader<R>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(r);
    let header = rdr.headers()?;
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Schema(format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    Ok(rdr)
}

/// Writes a report file through `write`.
pub fn write_file(path: impl AsRef<Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write(&mut out)?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// One row of the accuracy table.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub model: Model,
    pub estimator: Estimator,
    pub p: usize,
    pub r2_mean: f64,
    pub r2_std: f64,
    pub reps: usize,
    pub seed: u64,
}

impl From<&ReplicationReport> for AccuracyRow {
    fn from(r: &ReplicationReport) -> Self {
        Self {
            model: r.model,
            estimator: r.estimator,
            p: r.p,
            r2_mean: r.r2.mean,
            r2_std: r.r2.std,
            reps: r.records.len(),
            seed: r.seed,
        }
    }
}

pub const ACCURACY_HEADER: [&str; 7] = ["model", "estimator", "p", "r2_mean", "r2_std", "reps", "seed"];

fn model_id(model: Model) -> &'static str {
    match model {
        Model::One => "1",
        Model::Two => "2",
    }
}

pub fn write_accuracy(out: impl Write, rows: &[AccuracyRow]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(ACCURACY_HEADER)?;
    for r in rows {
        w.write_record([
            model_id(r.model).to_string(),
            r.estimator.to_string(),
            r.p.to_string(),
            fmt_f64(r.r2_mean),
            fmt_f64(r.r2_std),
            r.reps.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_accuracy(input: impl Read) -> Result<Vec<AccuracyRow>> {
    let mut rdr = reader(input, &ACCURACY_HEADER)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(AccuracyRow {
            model: rec[0].parse()?,
            estimator: rec[1].parse()?,
            p: parse_int(&rec[2], "p")?,
            r2_mean: parse_f64(&rec[3], "r2_mean")?,
            r2_std: parse_f64(&rec[4], "r2_std")?,
            reps: parse_int(&rec[5], "reps")?,
            seed: parse_int(&rec[6], "seed")?,
        });
    }
    Ok(rows)
}

/// One replication, for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRow {
    pub model: Model,
    pub estimator: Estimator,
    pub p: usize,
    pub rep: u64,
    pub r2: f64,
    pub wall_seconds: f64,
    pub direction: Vec<f64>,
}

pub fn replication_rows(report: &ReplicationReport) -> Vec<ReplicationRow> {
    report
        .records
        .iter()
        .map(|r| ReplicationRow {
            model: report.model,
            estimator: report.estimator,
            p: report.p,
            rep: r.rep,
            r2: r.r2,
            wall_seconds: r.wall_seconds,
            direction: r.direction.clone(),
        })
        .collect()
}

/// Writes per-replication rows: `model,estimator,p,rep,r2,wall_s,beta_1..beta_d`.
pub fn write_replications(out: impl Write, rows: &[ReplicationRow]) -> Result<()> {
    let d = rows.first().map_or(0, |r| r.direction.len());
    if rows.iter().any(|r| r.direction.len() != d) {
        return Err(Error::Schema("replications have different dimensions".into()));
    }
    let mut w = writer(out);
    let mut header: Vec<String> = ["model", "estimator", "p", "rep", "r2", "wall_s"].map(String::from).to_vec();
    header.extend((1..=d).map(|j| format!("beta_{j}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            model_id(r.model).to_string(),
            r.estimator.to_string(),
            r.p.to_string(),
            r.rep.to_string(),
            fmt_f64(r.r2),
            fmt_f64(r.wall_seconds),
        ];
        rec.extend(r.direction.iter().map(|v| fmt_f64(*v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_replications(input: impl Read) -> Result<Vec<ReplicationRow>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(input);
    let header = rdr.headers()?.clone();
    let fixed = ["model", "estimator", "p", "rep", "r2", "wall_s"];
    if header.len() < fixed.len() || header.iter().take(fixed.len()).ne(fixed) {
        return Err(Error::Schema("not a replication report".into()));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let direction = rec.iter().skip(fixed.len()).map(|s| parse_f64(s, "beta")).collect::<Result<Vec<_>>>()?;
        rows.push(ReplicationRow {
            model: rec[0].parse()?,
            estimator: rec[1].parse()?,
            p: parse_int(&rec[2], "p")?,
            rep: parse_int(&rec[3], "rep")?,
            r2: parse_f64(&rec[4], "r2")?,
            wall_seconds: parse_f64(&rec[5], "wall_s")?,
            direction,
        });
    }
    Ok(rows)
}

/// One row of the timing table. `ratio` is Save-R over Save-NR mean time and
/// is repeated on both rows of a `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub estimator: Estimator,
    pub p: usize,
    pub mean_s: f64,
    pub std_s: f64,
    pub ratio: f64,
}

pub const BENCH_HEADER: [&str; 5] = ["estimator", "p", "mean_s", "std_s", "ratio"];

pub fn bench_rows(rows: &[TimingRow]) -> Vec<BenchRow> {
    rows.iter()
        .flat_map(|t| {
            let ratio = t.ratio();
            [(Estimator::SaveR, t.save_r), (Estimator::SaveNr, t.save_nr)].map(|(estimator, s)| BenchRow {
                estimator,
                p: t.p,
                mean_s: s.mean,
                std_s: s.std,
                ratio,
            })
        })
        .collect()
}

pub fn write_bench(out: impl Write, rows: &[BenchRow]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(BENCH_HEADER)?;
    for r in rows {
        w.write_record([
            r.estimator.to_string(),
            r.p.to_string(),
            fmt_f64(r.mean_s),
            fmt_f64(r.std_s),
            fmt_f64(r.ratio),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_bench(input: impl Read) -> Result<Vec<BenchRow>> {
    let mut rdr = reader(input, &BENCH_HEADER)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(BenchRow {
            estimator: rec[0].parse()?,
            p: parse_int(&rec[1], "p")?,
            mean_s: parse_f64(&rec[2], "mean_s")?,
            std_s: parse_f64(&rec[3], "std_s")?,
            ratio: parse_f64(&rec[4], "ratio")?,
        });
    }
    Ok(rows)
}

/// Held-out evaluation rows: `estimator,n0,p,r2_mean,r2_std,evaluated,skipped,beta_1..`.
pub fn write_holdout(out: impl Write, reports: &[HoldoutReport]) -> Result<()> {
    let d = reports.first().map_or(0, |r| r.beta_hat.len());
    let mut w = writer(out);
    let mut header: Vec<String> =
        ["estimator", "n0", "p", "r2_mean", "r2_std", "evaluated", "skipped"].map(String::from).to_vec();
    header.extend((1..=d).map(|j| format!("beta_{j}")));
    w.write_record(&header)?;
    for r in reports {
        let mut rec = vec![
            r.estimator.to_string(),
            r.n0.to_string(),
            r.p.to_string(),
            fmt_f64(r.r2.mean),
            fmt_f64(r.r2.std),
            r.r2.count.to_string(),
            r.skipped.to_string(),
        ];
        rec.extend(r.beta_hat.iter().map(|v| fmt_f64(*v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Human-readable accuracy table.
pub fn accuracy_table(rows: &[AccuracyRow]) -> String {
    let mut s = format!("{:<6} {:<8} {:>5} {:>12} {:>12} {:>5}\n", "model", "est", "p", "r2_mean", "r2_std", "reps");
    for r in rows {
        s.push_str(&format!(
            "{:<6} {:<8} {:>5} {:>12.5} {:>12.5} {:>5}\n",
            model_id(r.model),
            r.estimator,
            r.p,
            r.r2_mean,
            r.r2_std,
            r.reps
        ));
    }
    s
}

/// Human-readable timing table.
pub fn bench_table(rows: &[BenchRow]) -> String {
    let mut s = format!("{:<8} {:>5} {:>12} {:>12} {:>8}\n", "est", "p", "mean_s", "std_s", "ratio");
    for r in rows {
        s.push_str(&format!("{:<8} {:>5} {:>12.6} {:>12.6} {:>8.4}\n", r.estimator, r.p, r.mean_s, r.std_s, r.ratio));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn awkward() -> Vec<f64> {
        vec![0.1, 1.0 / 3.0, f64::MIN_POSITIVE, 1e300, -2.5e-17, 0.999_999_999_999_999_9, std::f64::consts::PI]
    }

    #[test]
    fn float_format_round_trips() {
        for v in awkward() {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn accuracy_round_trip() {
        let rows: Vec<AccuracyRow> = awkward()
            .into_iter()
            .enumerate()
            .map(|(i, v)| AccuracyRow {
                model: if i % 2 == 0 { Model::One } else { Model::Two },
                estimator: Estimator::ALL[i % 2],
                p: 100 * i,
                r2_mean: v,
                r2_std: v / 7.0,
                reps: 200,
                seed: u64::MAX - i as u64,
            })
            .collect();
        let mut buf = Vec::new();
        write_accuracy(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("model,estimator,p,r2_mean,r2_std,reps,seed\n"));
        assert!(!text.contains('\r'));
        assert_eq!(read_accuracy(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn replication_round_trip() {
        let rows = vec![
            ReplicationRow {
                model: Model::Two,
                estimator: Estimator::SaveR,
                p: 400,
                rep: 3,
                r2: 0.987654321,
                wall_seconds: 1.5e-3,
                direction: awkward()[..5].to_vec(),
            };
            3
        ];
        let mut buf = Vec::new();
        write_replications(&mut buf, &rows).unwrap();
        assert_eq!(read_replications(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn bench_round_trip() {
        let rows = vec![
            BenchRow { estimator: Estimator::SaveR, p: 100, mean_s: 0.123, std_s: 1e-5, ratio: 1.0 / 3.0 },
            BenchRow { estimator: Estimator::SaveNr, p: 100, mean_s: 0.369, std_s: 2e-5, ratio: 1.0 / 3.0 },
        ];
        let mut buf = Vec::new();
        write_bench(&mut buf, &rows).unwrap();
        assert_eq!(read_bench(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(read_bench("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_accuracy("estimator,p,mean_s,std_s,ratio\n".as_bytes()).is_err());
    }
}
