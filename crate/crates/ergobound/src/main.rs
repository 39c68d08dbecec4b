//! Command-line front end: SNR sweeps from scenario files, plus a built-in
//! self-test battery.

use clap::{Parser, Subcommand};
use ergobound::bounds::{lb1_closed, lb1_from_moments, ub_closed_zf, ub_monte_carlo};
use ergobound::channel::{CsiModel, PrecoderKind, SystemConfig};
use ergobound::config::SweepSpec;
use ergobound::montecarlo::simulate;
use ergobound::special::{exp_int, exp_int_scaled, log_moment_gamma};
use ergobound::sweep::{run_sweep, write_csv};
use ergobound::svg::render_svg;
use ergobound::{Error, Result};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ergobound",
    about = "Ergodic-rate bounds for linearly precoded multiuser MIMO downlinks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an SNR sweep described by a scenario file and write CSV (and
    /// optionally SVG) artifacts.
    Sweep {
        /// Scenario file (flat key = value text).
        #[arg(long)]
        config: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the per-point Monte-Carlo sample count.
        #[arg(long)]
        samples: Option<u64>,
        /// Redirect artifacts into this directory (file names kept).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also render an SVG plot next to the CSV.
        #[arg(long)]
        plot: bool,
        /// Draw negative LB2 values as zero in the plot.
        #[arg(long)]
        clamp_lb2: bool,
        /// Worker threads (wall time only; results are identical).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the built-in self-test battery (closed forms versus sampling).
    Check,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep {
            config,
            seed,
            samples,
            out,
            plot,
            clamp_lb2,
            threads,
        } => {
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            }
            let mut spec = SweepSpec::from_file(&config)?;
            if let Some(s) = seed {
                spec.base.seed = s;
            }
            if let Some(n) = samples {
                spec.base.samples = n;
            }
            if plot {
                spec.plot = true;
            }
            if let Some(dir) = out {
                let name = spec
                    .output_path
                    .file_name()
                    .ok_or_else(|| Error::Config("output_path has no file name".into()))?
                    .to_owned();
                spec.output_path = dir.join(name);
            }
            spec.validate()?;
            let result = run_sweep(&spec)?;
            write_csv(&result, &spec.output_path)?;
            println!(
                "wrote {} rows to {}",
                result.rows.len(),
                spec.output_path.display()
            );
            if spec.plot {
                let svg_path = spec.plot_path();
                render_svg(&result, &svg_path, clamp_lb2)?;
                println!("wrote plot to {}", svg_path.display());
            }
            Ok(())
        }
        Command::Check => check(),
    }
}

// ---------------------------------------------------------------------------
// self tests
// ---------------------------------------------------------------------------

struct Battery {
    failures: u32,
}

impl Battery {
    fn assert(&mut self, name: &str, ok: bool, detail: String) {
        if ok {
            println!("PASS  {name}");
        } else {
            println!("FAIL  {name}: {detail}");
            self.failures += 1;
        }
    }
}

/// A fast closed-form-versus-sampling battery; exits nonzero on any failure.
fn check() -> Result<()> {
    let mut b = Battery { failures: 0 };

    // Special-function spot values against their defining identities.
    let e1 = exp_int(1, 1.0)?;
    b.assert(
        "exp_int(1, 1) reference value",
        (e1 - 0.219_383_934_395_520_3).abs() < 1e-14,
        format!("got {e1}"),
    );
    let mut recurrence_worst = 0f64;
    for n in 1..=32u32 {
        for &x in &[0.05, 0.5, 2.0, 20.0, 200.0] {
            let a = exp_int_scaled(n, x)?;
            let c = exp_int_scaled(n + 1, x)?;
            recurrence_worst = recurrence_worst.max((f64::from(n) * c + x * a - 1.0).abs());
        }
    }
    b.assert(
        "exp_int three-term recurrence",
        recurrence_worst < 1e-12,
        format!("worst residual {recurrence_worst:.3e}"),
    );
    let jensen_ok = (1..=16u32).all(|n| {
        [0.01, 1.0, 100.0].iter().all(|&mu| {
            log_moment_gamma(n, mu)
                .map(|v| v <= (mu * f64::from(n)).ln_1p() + 1e-12)
                .unwrap_or(false)
        })
    });
    b.assert(
        "log-moment upper bound (concavity)",
        jensen_ok,
        "a value exceeded ln(1 + mu n)".into(),
    );

    // Closed forms versus sampling on small systems.
    let zf = SystemConfig {
        m: 6,
        k: 3,
        t: 168,
        etx: 1.0,
        n0: 0.1,
        precoder: PrecoderKind::Zfbf,
        csi: CsiModel::Perfect,
        seed: 7,
        samples: 20_000,
    };
    let batch = simulate(&zf)?;
    let mc = ub_monte_carlo(&batch.records, zf.n0)?;
    let cf = ub_closed_zf(&zf)?;
    b.assert(
        "zero-forcing upper bound: closed form vs sampling",
        (mc.rate - cf.rate).abs() < 4.0 * mc.stderr + 1e-3,
        format!("mc {} vs closed {} (se {})", mc.rate, cf.rate, mc.stderr),
    );
    let moments = batch.accumulator.finalize()?;
    let lb1_mc = lb1_from_moments(&moments, zf.n0);
    let lb1_cf = lb1_closed(&zf)?;
    b.assert(
        "zero-forcing LB1: closed form vs sampled moments",
        (lb1_mc.rate - lb1_cf.rate).abs() < 0.02,
        format!("mc {} vs closed {}", lb1_mc.rate, lb1_cf.rate),
    );

    // Determinism: the same seed must reproduce the batch bit for bit.
    let again = simulate(&zf)?;
    b.assert(
        "simulation determinism",
        again.records == batch.records,
        "re-run produced different samples".into(),
    );

    // Bound ordering on a noisy-CSI system.
    let conj = SystemConfig {
        m: 8,
        k: 4,
        precoder: PrecoderKind::ConjBf,
        csi: CsiModel::PilotMmse,
        ..zf.clone()
    };
    let batch = simulate(&conj)?;
    let moments = batch.accumulator.finalize()?;
    let ub = ub_monte_carlo(&batch.records, conj.n0)?;
    let lb1 = lb1_from_moments(&moments, conj.n0);
    b.assert(
        "bound ordering LB1 <= UB",
        lb1.rate <= ub.rate + 3.0 * ub.stderr,
        format!("lb1 {} vs ub {}", lb1.rate, ub.rate),
    );

    if b.failures > 0 {
        Err(Error::Numerical(format!(
            "{} self-test(s) failed",
            b.failures
        )))
    } else {
        println!("all self-tests passed");
        Ok(())
    }
}
