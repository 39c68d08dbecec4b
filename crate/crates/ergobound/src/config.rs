//! Scenario configuration: flat `key = value` text files.
//!
//! The format is deliberately minimal for reproducibility: every key maps
//! one-to-one onto a sweep field, unknown or duplicate keys are hard errors,
//! and `#` starts a comment. A parsed [`SweepSpec`] is validated before any
//! sampling happens.

use crate::bounds::{closed_form_available, BoundId};
use crate::channel::{CsiModel, PrecoderKind, SystemConfig};
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Default SNR grid in dB: -10 to 30 in steps of 2.
pub const DEFAULT_GRID: (f64, f64, f64) = (-10.0, 2.0, 30.0);
/// Default Monte-Carlo sample count per grid point.
pub const DEFAULT_SAMPLES: u64 = 100_000;

/// A full sweep scenario: the system, the SNR grid, which bounds to
/// evaluate, and where the artifacts go.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// System parameters; `n0` is a placeholder here and is set per grid
    /// point from the SNR value.
    pub base: SystemConfig,
    pub snr_grid_db: Vec<f64>,
    pub bounds: Vec<BoundId>,
    /// Evaluate via closed forms (must be available for every requested
    /// bound under the configured precoder/CSI pair).
    pub closed_form: bool,
    pub output_path: PathBuf,
    pub plot: bool,
}

impl SweepSpec {
    /// Parse a configuration file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text)
    }

    /// Parse configuration text. See the module docs for the format.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut seen: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "line {}: unknown key `{key}` (known keys: {})",
                    lineno + 1,
                    KNOWN_KEYS.join(", ")
                )));
            }
            if seen.insert(key.clone(), value).is_some() {
                return Err(Error::Config(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
        }
        Self::from_pairs(&seen)
    }

    fn from_pairs(map: &BTreeMap<String, String>) -> Result<Self> {
        let get = |key: &str| map.get(key).map(String::as_str);
        let base = SystemConfig {
            m: parse_num(get("m").ok_or_else(|| missing("m"))?, "m")?,
            k: parse_num(get("k").ok_or_else(|| missing("k"))?, "k")?,
            t: parse_num(get("t").ok_or_else(|| missing("t"))?, "t")?,
            etx: match get("etx") {
                Some(v) => parse_num(v, "etx")?,
                None => 1.0,
            },
            // Placeholder; each grid point derives its own noise level.
            n0: 1.0,
            precoder: parse_precoder(get("precoder").ok_or_else(|| missing("precoder"))?)?,
            csi: parse_csi(get("csi").ok_or_else(|| missing("csi"))?)?,
            seed: match get("seed") {
                Some(v) => parse_num(v, "seed")?,
                None => 0,
            },
            samples: match get("samples") {
                Some(v) => parse_num(v, "samples")?,
                None => DEFAULT_SAMPLES,
            },
        };
        let spec = Self {
            base,
            snr_grid_db: match get("snr_grid_db") {
                Some(v) => parse_grid(v)?,
                None => default_grid(),
            },
            bounds: match get("bounds") {
                Some(v) => parse_bounds(v)?,
                None => BoundId::ALL.to_vec(),
            },
            closed_form: match get("closed_form") {
                Some(v) => parse_bool(v, "closed_form")?,
                None => false,
            },
            output_path: PathBuf::from(get("output_path").unwrap_or("sweep.csv")),
            plot: match get("plot") {
                Some(v) => parse_bool(v, "plot")?,
                None => false,
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Check every invariant that can be checked without sampling.
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.snr_grid_db.is_empty() {
            return Err(Error::Config("snr grid is empty".into()));
        }
        if !self.snr_grid_db.iter().all(|v| v.is_finite()) {
            return Err(Error::Config("snr grid contains non-finite values".into()));
        }
        if self.snr_grid_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "snr grid must be strictly increasing".into(),
            ));
        }
        if self.bounds.is_empty() {
            return Err(Error::Config("no bounds requested".into()));
        }
        if self.closed_form {
            let unavailable: Vec<&str> = self
                .bounds
                .iter()
                .filter(|&&b| !closed_form_available(&self.base, b))
                .map(|b| b.token())
                .collect();
            if !unavailable.is_empty() {
                return Err(Error::Config(format!(
                    "no closed form for {} under {}/{}; closed forms exist for \
                     zfbf/perfect: ub, lb1, lb2, lb3 and for conjbf/perfect: lb1, lb2",
                    unavailable.join(", "),
                    self.base.precoder.token(),
                    self.base.csi.token()
                )));
            }
        }
        Ok(())
    }

    /// The SVG path paired with `output_path` (extension swapped to .svg).
    pub fn plot_path(&self) -> PathBuf {
        self.output_path.with_extension("svg")
    }
}

const KNOWN_KEYS: [&str; 13] = [
    "m",
    "k",
    "t",
    "etx",
    "precoder",
    "csi",
    "seed",
    "samples",
    "snr_grid_db",
    "bounds",
    "closed_form",
    "output_path",
    "plot",
];

fn missing(key: &str) -> Error {
    Error::Config(format!("missing required key `{key}`"))
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(value: &str, key: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!(
            "invalid value `{value}` for `{key}` (expected true or false)"
        ))),
    }
}

fn parse_precoder(value: &str) -> Result<PrecoderKind> {
    match value {
        "conjbf" => Ok(PrecoderKind::ConjBf),
        "zfbf" => Ok(PrecoderKind::Zfbf),
        _ => Err(Error::Config(format!(
            "invalid precoder `{value}` (expected conjbf or zfbf)"
        ))),
    }
}

fn parse_csi(value: &str) -> Result<CsiModel> {
    match value {
        "perfect" => Ok(CsiModel::Perfect),
        "pilot_mmse" => Ok(CsiModel::PilotMmse),
        _ => Err(Error::Config(format!(
            "invalid csi `{value}` (expected perfect or pilot_mmse)"
        ))),
    }
}

fn default_grid() -> Vec<f64> {
    let (start, step, stop) = DEFAULT_GRID;
    range_grid(start, step, stop)
}

fn range_grid(start: f64, step: f64, stop: f64) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut i = 0u32;
    loop {
        let v = start + f64::from(i) * step;
        if v > stop + 1e-9 {
            break;
        }
        grid.push(v);
        i += 1;
    }
    grid
}

/// Grids are written either as `start:step:stop` or as a comma-separated
/// list of dB values.
pub fn parse_grid(value: &str) -> Result<Vec<f64>> {
    let grid = if value.contains(':') {
        let parts: Vec<&str> = value.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "invalid grid `{value}` (expected start:step:stop)"
            )));
        }
        let start: f64 = parse_num(parts[0].trim(), "snr_grid_db")?;
        let step: f64 = parse_num(parts[1].trim(), "snr_grid_db")?;
        let stop: f64 = parse_num(parts[2].trim(), "snr_grid_db")?;
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(Error::Config(format!(
                "invalid grid `{value}` (need finite start <= stop and step > 0)"
            )));
        }
        range_grid(start, step, stop)
    } else {
        value
            .split(',')
            .map(|s| parse_num(s.trim(), "snr_grid_db"))
            .collect::<Result<Vec<f64>>>()?
    };
    if grid.is_empty() {
        return Err(Error::Config(format!("grid `{value}` is empty")));
    }
    Ok(grid)
}

fn parse_bounds(value: &str) -> Result<Vec<BoundId>> {
    let mut bounds = value
        .split(',')
        .map(|s| BoundId::parse(s.trim()))
        .collect::<Result<Vec<BoundId>>>()?;
    bounds.sort();
    bounds.dedup();
    Ok(bounds)
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "\
# scenario
m = 10
k = 5
t = 168
etx = 1.0
precoder = zfbf
csi = perfect
seed = 42
samples = 1000
snr_grid_db = -10:2:30
bounds = ub, lb1, lb3
closed_form = true
output_path = out/run.csv
plot = true
";

    #[test]
    fn parses_full_config() {
        let spec = SweepSpec::parse_str(FULL).unwrap();
        assert_eq!(spec.base.m, 10);
        assert_eq!(spec.base.k, 5);
        assert_eq!(spec.base.t, 168);
        assert_eq!(spec.base.seed, 42);
        assert_eq!(spec.base.samples, 1000);
        assert_eq!(spec.snr_grid_db.len(), 21);
        assert_eq!(spec.snr_grid_db[0], -10.0);
        assert_eq!(*spec.snr_grid_db.last().unwrap(), 30.0);
        assert_eq!(spec.bounds, vec![BoundId::Ub, BoundId::Lb1, BoundId::Lb3]);
        assert!(spec.closed_form);
        assert!(spec.plot);
        assert_eq!(spec.output_path, PathBuf::from("out/run.csv"));
        assert_eq!(spec.plot_path(), PathBuf::from("out/run.svg"));
    }

    #[test]
    fn defaults_fill_optional_keys() {
        let spec =
            SweepSpec::parse_str("m=4\nk=2\nt=100\nprecoder=conjbf\ncsi=pilot_mmse\n").unwrap();
        assert_eq!(spec.base.etx, 1.0);
        assert_eq!(spec.base.seed, 0);
        assert_eq!(spec.base.samples, DEFAULT_SAMPLES);
        assert_eq!(spec.snr_grid_db.len(), 21);
        assert_eq!(spec.bounds, BoundId::ALL.to_vec());
        assert!(!spec.closed_form);
        assert!(!spec.plot);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let base = "m=4\nk=2\nt=100\nprecoder=conjbf\ncsi=perfect\n";
        let unknown = format!("{base}mystery=1\n");
        assert!(matches!(
            SweepSpec::parse_str(&unknown),
            Err(Error::Config(msg)) if msg.contains("unknown key `mystery`")
        ));
        let duplicate = format!("{base}m=5\n");
        assert!(matches!(
            SweepSpec::parse_str(&duplicate),
            Err(Error::Config(msg)) if msg.contains("duplicate key `m`")
        ));
    }

    #[test]
    fn rejects_bad_grids() {
        for grid in ["", "5:0:10", "3:1", "1,2,2", "5,4", "nan"] {
            let cfg = format!(
                "m=4\nk=2\nt=100\nprecoder=conjbf\ncsi=perfect\nsnr_grid_db={grid}\n"
            );
            assert!(SweepSpec::parse_str(&cfg).is_err(), "grid `{grid}` accepted");
        }
        let comma = SweepSpec::parse_str(
            "m=4\nk=2\nt=100\nprecoder=conjbf\ncsi=perfect\nsnr_grid_db=-5, 0, 2.5\n",
        )
        .unwrap();
        assert_eq!(comma.snr_grid_db, vec![-5.0, 0.0, 2.5]);
    }

    #[test]
    fn closed_form_availability_fails_fast() {
        // Pilot CSI has no closed forms at all.
        let err = SweepSpec::parse_str(
            "m=4\nk=2\nt=100\nprecoder=zfbf\ncsi=pilot_mmse\nclosed_form=true\n",
        )
        .unwrap_err();
        assert!(matches!(&err, Error::Config(msg) if msg.contains("zfbf/perfect")));
        // Conjugate beamforming has no closed-form upper bound.
        let err = SweepSpec::parse_str(
            "m=4\nk=2\nt=100\nprecoder=conjbf\ncsi=perfect\nclosed_form=true\nbounds=ub\n",
        )
        .unwrap_err();
        assert!(matches!(&err, Error::Config(msg) if msg.contains("no closed form for ub")));
        // The supported subset passes.
        assert!(SweepSpec::parse_str(
            "m=4\nk=2\nt=100\nprecoder=conjbf\ncsi=perfect\nclosed_form=true\nbounds=lb1,lb2\n"
        )
        .is_ok());
    }

    #[test]
    fn zf_with_more_users_than_antennas_is_rejected_before_sampling() {
        let err =
            SweepSpec::parse_str("m=2\nk=4\nt=100\nprecoder=zfbf\ncsi=perfect\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
