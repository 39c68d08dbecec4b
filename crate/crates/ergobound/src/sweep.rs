//! SNR sweeps and their CSV artifact.
//!
//! A sweep evaluates the requested bounds at every grid point, converting
//! per-user rates to sum rates (factor K, standard errors scaled alike).
//! One channel batch per grid point is shared by every Monte-Carlo bound,
//! so the table is deterministic in (spec, seed) and independent of the
//! worker count. The CSV schema is fixed and byte-reproducible:
//!
//! `snr_db,precoder,csi,bound,method,sum_rate_bits,stderr,samples,seed`

use crate::bounds::{
    lb1_closed, lb1_from_moments, lb2_closed, lb2_from_ub, lb3_closed_zf, lb3_monte_carlo,
    ub_closed_zf, ub_monte_carlo, BoundId, BoundResult, Method,
};
use crate::channel::SystemConfig;
use crate::config::SweepSpec;
use crate::error::{Error, Result};
use crate::moments::{ConditionalMomentCurve, BinnedCurve, DEFAULT_BINS};
use crate::montecarlo::simulate;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Fixed CSV header.
pub const CSV_HEADER: &str =
    "snr_db,precoder,csi,bound,method,sum_rate_bits,stderr,samples,seed";

/// One CSV row: a bound evaluated at one grid point, as a sum rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub precoder: String,
    pub csi: String,
    pub bound: BoundId,
    pub method: Method,
    pub sum_rate_bits: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

/// The full table produced by one sweep, sorted by (snr_db, bound).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Rows of one bound in grid order.
    pub fn series(&self, bound: BoundId) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.bound == bound).collect()
    }

    /// Distinct bounds present, in canonical order.
    pub fn bounds(&self) -> Vec<BoundId> {
        let mut out: Vec<BoundId> = self.rows.iter().map(|r| r.bound).collect();
        out.sort();
        out.dedup();
        out
    }
}

/// Noise level realizing `snr_db` at transmit energy `etx`.
pub fn noise_for_snr_db(etx: f64, snr_db: f64) -> f64 {
    etx / 10f64.powf(snr_db / 10.0)
}

/// Evaluate every requested bound at every grid point.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let k = spec.base.k as f64;
    let mut rows = Vec::with_capacity(spec.snr_grid_db.len() * spec.bounds.len());
    for &snr_db in &spec.snr_grid_db {
        let cfg = SystemConfig {
            n0: noise_for_snr_db(spec.base.etx, snr_db),
            ..spec.base.clone()
        };
        let results = if spec.closed_form {
            closed_point(&cfg, &spec.bounds)?
        } else {
            sampled_point(&cfg, &spec.bounds)?
        };
        for r in results {
            rows.push(SweepRow {
                snr_db,
                precoder: cfg.precoder.token().to_string(),
                csi: cfg.csi.token().to_string(),
                bound: r.bound,
                method: r.method,
                sum_rate_bits: k * r.rate,
                stderr: k * r.stderr,
                samples: cfg.samples,
                seed: cfg.seed,
            });
        }
    }
    rows.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db).then(a.bound.cmp(&b.bound)));
    Ok(SweepResult { rows })
}

fn closed_point(cfg: &SystemConfig, bounds: &[BoundId]) -> Result<Vec<BoundResult>> {
    bounds
        .iter()
        .map(|&b| match b {
            BoundId::Ub => ub_closed_zf(cfg),
            BoundId::Lb1 => lb1_closed(cfg),
            BoundId::Lb2 => lb2_closed(cfg),
            BoundId::Lb3 => lb3_closed_zf(cfg),
        })
        .collect()
}

fn sampled_point(cfg: &SystemConfig, bounds: &[BoundId]) -> Result<Vec<BoundResult>> {
    let batch = simulate(cfg)?;
    let moments = batch.accumulator.finalize()?;
    let mut out = Vec::with_capacity(bounds.len());
    // The upper bound estimate is shared with LB2 so their gap is exactly
    // the coherence penalty.
    let need_ub = bounds.contains(&BoundId::Ub) || bounds.contains(&BoundId::Lb2);
    let ub = if need_ub {
        Some(ub_monte_carlo(&batch.records, cfg.n0)?)
    } else {
        None
    };
    for &b in bounds {
        let r = match b {
            BoundId::Ub => ub.clone().expect("computed above"),
            BoundId::Lb1 => lb1_from_moments(&moments, cfg.n0),
            BoundId::Lb2 => lb2_from_ub(ub.as_ref().expect("computed above"), &moments, cfg.t, cfg.n0),
            BoundId::Lb3 => {
                let curve = match ConditionalMomentCurve::analytic(cfg) {
                    Ok(c) => c,
                    Err(_) => ConditionalMomentCurve::Binned(BinnedCurve::from_pairs(
                        &batch.pairs(),
                        DEFAULT_BINS,
                    )?),
                };
                lb3_monte_carlo(&batch.records, &curve, &moments, cfg.t, cfg.n0)?.0
            }
        };
        out.push(r);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Format a float with 9 significant digits, reproducibly.
fn fmt_float(v: f64) -> String {
    format!("{v:.8e}")
}

/// Serialize one row.
fn format_row(r: &SweepRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        fmt_float(r.snr_db),
        r.precoder,
        r.csi,
        r.bound.token(),
        r.method.token(),
        fmt_float(r.sum_rate_bits),
        fmt_float(r.stderr),
        r.samples,
        r.seed
    )
}

/// Write the table; an empty result produces a header-only file.
pub fn write_csv(result: &SweepResult, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(file, "{CSV_HEADER}")?;
    for row in &result.rows {
        writeln!(file, "{}", format_row(row))?;
    }
    file.flush()?;
    Ok(())
}

/// Read a table back; inverse of [`write_csv`] at the printed precision.
pub fn read_csv(path: &Path) -> Result<SweepResult> {
    let file = BufReader::new(std::fs::File::open(path)?);
    let mut lines = file.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty CSV file".into()))??;
    if header != CSV_HEADER {
        return Err(Error::Config(format!(
            "unexpected CSV header `{header}`"
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Config(format!(
                "CSV row {}: expected 9 fields, got {}",
                i + 2,
                fields.len()
            )));
        }
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Config(format!("CSV row {}: bad {what} `{s}`", i + 2)))
        };
        let parse_u = |s: &str, what: &str| -> Result<u64> {
            s.parse()
                .map_err(|_| Error::Config(format!("CSV row {}: bad {what} `{s}`", i + 2)))
        };
        rows.push(SweepRow {
            snr_db: parse_f(fields[0], "snr_db")?,
            precoder: fields[1].to_string(),
            csi: fields[2].to_string(),
            bound: BoundId::parse(fields[3])?,
            method: parse_method(fields[4])?,
            sum_rate_bits: parse_f(fields[5], "sum_rate_bits")?,
            stderr: parse_f(fields[6], "stderr")?,
            samples: parse_u(fields[7], "samples")?,
            seed: parse_u(fields[8], "seed")?,
        });
    }
    Ok(SweepResult { rows })
}

fn parse_method(s: &str) -> Result<Method> {
    match s {
        "closed_form" => Ok(Method::ClosedForm),
        "monte_carlo" => Ok(Method::MonteCarlo),
        _ => Err(Error::Config(format!("unknown method token `{s}`"))),
    }
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SweepSpec;

    fn spec(text: &str) -> SweepSpec {
        SweepSpec::parse_str(text).unwrap()
    }

    #[test]
    fn single_point_closed_form_sweep_is_deterministic() {
        let s = spec(
            "m=6\nk=3\nt=100\nprecoder=zfbf\ncsi=perfect\nsnr_grid_db=10\n\
             bounds=ub\nclosed_form=true\n",
        );
        let result = run_sweep(&s).unwrap();
        assert_eq!(result.rows.len(), 1);
        let row = &result.rows[0];
        assert_eq!(row.bound, BoundId::Ub);
        assert_eq!(row.method, Method::ClosedForm);
        assert_eq!(row.stderr, 0.0);
        assert!(row.sum_rate_bits > 0.0);
        // sum rate is K times the per-user closed form
        let cfg = SystemConfig {
            n0: noise_for_snr_db(1.0, 10.0),
            ..s.base.clone()
        };
        let per_user = crate::bounds::ub_closed_zf(&cfg).unwrap().rate;
        assert!((row.sum_rate_bits - 3.0 * per_user).abs() < 1e-12);
    }

    #[test]
    fn sampled_sweep_orders_rows_and_scales_errors() {
        let s = spec(
            "m=4\nk=2\nt=100\nprecoder=conjbf\ncsi=pilot_mmse\nsamples=2000\n\
             snr_grid_db=0,10\n",
        );
        let result = run_sweep(&s).unwrap();
        assert_eq!(result.rows.len(), 8);
        let keys: Vec<(f64, BoundId)> = result.rows.iter().map(|r| (r.snr_db, r.bound)).collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        assert_eq!(keys, sorted);
        let ub = &result.rows[0];
        assert_eq!(ub.bound, BoundId::Ub);
        assert!(ub.stderr > 0.0);
        // LB2 minus UB is exactly the (deterministic) penalty, so the two
        // rows carry the same standard error.
        let lb2 = result.rows.iter().find(|r| r.bound == BoundId::Lb2).unwrap();
        assert_eq!(lb2.stderr, ub.stderr);
    }

    #[test]
    fn csv_round_trip_is_lossless_and_reruns_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let s = spec(
            "m=4\nk=2\nt=100\nprecoder=zfbf\ncsi=pilot_mmse\nsamples=1500\n\
             snr_grid_db=-5,5\n",
        );
        let result = run_sweep(&s).unwrap();
        write_csv(&result, &path).unwrap();
        let bytes1 = std::fs::read(&path).unwrap();

        let back = read_csv(&path).unwrap();
        write_csv(&back, &path).unwrap();
        let bytes2 = std::fs::read(&path).unwrap();
        assert_eq!(bytes1, bytes2, "round trip must be lossless");

        let rerun = run_sweep(&s).unwrap();
        write_csv(&rerun, &path).unwrap();
        let bytes3 = std::fs::read(&path).unwrap();
        assert_eq!(bytes1, bytes3, "same spec and seed must be byte-identical");
    }

    #[test]
    fn empty_result_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_csv(&SweepResult::default(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{CSV_HEADER}\n"));
        assert!(read_csv(&path).unwrap().rows.is_empty());
    }

    #[test]
    fn worker_count_does_not_change_the_table() {
        let s = spec(
            "m=4\nk=2\nt=100\nprecoder=conjbf\ncsi=perfect\nsamples=3000\n\
             snr_grid_db=0,10\n",
        );
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let r1 = pool1.install(|| run_sweep(&s)).unwrap();
        let r4 = pool4.install(|| run_sweep(&s)).unwrap();
        assert_eq!(r1, r4);
    }

    #[test]
    fn malformed_csv_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "snr,wrong,header\n").unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Config(_))));
        std::fs::write(&path, format!("{CSV_HEADER}\n1,2,3\n")).unwrap();
        assert!(matches!(read_csv(&path), Err(Error::Config(_))));
    }
}
