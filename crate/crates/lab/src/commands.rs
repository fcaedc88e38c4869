use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::ValueEnum;
use serde::Serialize;

use levy_credit::experiments::{
    density_path, kde as estimate_density, padded_grid, run_price_distribution, summarize, sweep,
};
use levy_credit::levy_field::FieldDraw;
use levy_credit::pide::{KernelSolver, Terminal};
use levy_credit::pricing::{price_defaultable_zcb, CurveSnapshot, DefaultStatus, Regime};
use levy_credit::rates::evolve_rate;
use levy_credit::rng::PathStreams;
use levy_credit::term_structure::{evolve_intensity, ForwardCurveState};
use levy_credit::verification::run_suite;

use crate::config::{LabConfig, RatesKind, RecoveryKind, TerminalKind};
use crate::manifest::{unix_now, RunManifest};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

/// One invocation: the effective configuration and where its files go.
pub struct Run {
    pub config: LabConfig,
    pub out: PathBuf,
    pub format: Format,
    started: u64,
}

impl Run {
    pub fn new(config: LabConfig, out: PathBuf, format: Format) -> anyhow::Result<Self> {
        config.validate()?;
        std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Self {
            config,
            out,
            format,
            started: unix_now(),
        })
    }

    /// Writes `rows` to `<stem>.<format>` and returns the file name.
    fn emit<T: Serialize>(&self, stem: &str, rows: &[T]) -> anyhow::Result<String> {
        let name = format!("{stem}.{}", self.format.extension());
        let path = self.out.join(&name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(file);
                for row in rows {
                    w.serialize(row)?;
                }
                w.flush()?;
            }
            Format::Json => {
                let mut w = BufWriter::new(file);
                serde_json::to_writer_pretty(&mut w, rows)?;
                writeln!(w)?;
            }
        }
        Ok(name)
    }

    fn finish(&self, command: &str, outputs: Vec<String>) -> anyhow::Result<()> {
        RunManifest::new(&self.config, command, self.started, outputs).write(&self.out)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct AlphaRow {
    path: u64,
    theta: f64,
    alpha: f64,
    survival: f64,
    intensity: f64,
}

pub fn simulate(run: &Run) -> anyhow::Result<()> {
    let cfg = run.config.path_config()?;
    let stride = run.config.pricing.theta_stride;
    let mut rows = Vec::new();
    for path in 0..run.config.pricing.paths as u64 {
        let st = density_path(&cfg, path)?;
        let from = st.grid.index_of(cfg.t);
        for i in (from..st.grid.len()).step_by(stride) {
            rows.push(AlphaRow {
                path,
                theta: st.grid.theta(i),
                alpha: st.alpha[i],
                survival: st.survival[i],
                intensity: st.intensity[i],
            });
        }
    }
    let out = run.emit("alpha", &rows)?;
    run.finish("simulate", vec![out])
}

#[derive(Serialize)]
struct PriceRow {
    path: u64,
    price: Option<f64>,
    flagged: bool,
}

#[derive(Serialize)]
struct CorrelatedPriceRow {
    path: u64,
    short_rate: f64,
    price: f64,
    survival_leg: f64,
    recovery_leg: f64,
}

/// Rates independent of default with a constant recovery go through the density
/// route; anything else needs the pricing kernels.
pub fn price(run: &Run) -> anyhow::Result<()> {
    let c = &run.config;
    let independent = c.rates.mode == RatesKind::Constant && c.pricing.recovery_model == RecoveryKind::Constant;
    let out = if independent {
        let cfg = levy_credit::experiments::ExperimentConfig {
            n_paths: c.pricing.paths,
            ..c.experiment_config()?
        };
        let dist = run_price_distribution(&cfg)?;
        let s = summarize(&dist.prices());
        println!(
            "mean {:.8}  se {:.2e}  flagged {:.4}  rejected {}",
            s.mean,
            s.se,
            dist.flagged_fraction(),
            dist.rejected()
        );
        let rows: Vec<PriceRow> = dist
            .outcomes
            .iter()
            .map(|o| PriceRow {
                path: o.path,
                price: o.price,
                flagged: o.flagged,
            })
            .collect();
        run.emit("prices", &rows)?
    } else {
        let rows = correlated_prices(c)?;
        let s = summarize(&rows.iter().map(|r| r.price).collect::<Vec<_>>());
        println!("mean {:.8}  se {:.2e}", s.mean, s.se);
        run.emit("prices", &rows)?
    };
    run.finish("price", vec![out])
}

fn correlated_prices(c: &LabConfig) -> anyhow::Result<Vec<CorrelatedPriceRow>> {
    let cfg = c.path_config()?;
    let model = c.intensity_model()?;
    let rates = c.rate_model()?;
    let recovery = c.recovery()?;
    let solver = KernelSolver::new(c.pide_model()?, c.kernel_config());
    let regime = Regime::Correlated {
        kernels: &solver,
        theta_stride: c.pricing.theta_stride,
    };
    let grid = cfg.grid()?;
    let dt = cfg.delta_t;
    (0..c.pricing.paths as u64)
        .map(|path| {
            let mut streams = PathStreams::new(cfg.seed, path);
            let mut state = ForwardCurveState::initial(&model, grid.clone(), path);
            let mut r = rates.initial_rate();
            for k in 0..cfg.n_steps() {
                let draw = FieldDraw::sample(&model.plan, &model.measure, k as f64 * dt, dt, &mut streams)?;
                r = evolve_rate(r, &rates, &draw, &mut streams)?;
                state = evolve_intensity(state, &model, &draw);
            }
            let snap = CurveSnapshot::from_intensity(&state, r)?;
            let p = price_defaultable_zcb(&snap, cfg.maturity, DefaultStatus::Alive, &recovery, regime)?;
            Ok(CorrelatedPriceRow {
                path,
                short_rate: r,
                price: p.price,
                survival_leg: p.survival_leg,
                recovery_leg: p.recovery_leg,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct KernelRow {
    x: f64,
    y: f64,
    value: f64,
}

pub fn pide(run: &Run) -> anyhow::Result<()> {
    let c = &run.config;
    let solver = KernelSolver::new(c.pide_model()?, c.kernel_config());
    let terminal = match c.pide.terminal {
        TerminalKind::One => Terminal::One,
        TerminalKind::Intensity => Terminal::Intensity,
        TerminalKind::DampedIntensity => Terminal::DampedIntensity(c.damping()),
    };
    let sol = solver.solve(&terminal, c.pricing.t, c.pricing.maturity, c.pide.theta)?;
    let g = sol.grid;
    let rows: Vec<KernelRow> = (0..g.nx)
        .flat_map(|i| (0..g.ny).map(move |j| (i, j)))
        .map(|(i, j)| KernelRow {
            x: g.x(i),
            y: g.y(j),
            value: sol.at(i, j),
        })
        .collect();
    let out = run.emit("kernel", &rows)?;
    run.finish("pide", vec![out])
}

#[derive(Serialize)]
struct SamplePrice {
    path: u64,
    price: f64,
}

#[derive(Serialize)]
struct DensityRow {
    x: f64,
    f: f64,
}

#[derive(Serialize)]
struct SweepCsvRow {
    value: f64,
    mean: f64,
    se: f64,
    flagged_fraction: f64,
}

fn density_rows(samples: &[f64], points: usize) -> anyhow::Result<Vec<DensityRow>> {
    let xs = padded_grid(samples, 3.0, points)?;
    let fs = estimate_density(samples, &xs)?;
    Ok(xs.into_iter().zip(fs).map(|(x, f)| DensityRow { x, f }).collect())
}

pub fn experiment(run: &Run) -> anyhow::Result<()> {
    let c = &run.config;
    let cfg = c.experiment_config()?;
    let dist = run_price_distribution(&cfg)?;
    let prices: Vec<SamplePrice> = dist
        .outcomes
        .iter()
        .filter_map(|o| o.price.map(|price| SamplePrice { path: o.path, price }))
        .collect();
    let s = summarize(&dist.prices());
    println!(
        "paths {}  mean {:.8}  se {:.2e}  skewness {:.4}  flagged {:.4}  rejected {}",
        dist.outcomes.len(),
        s.mean,
        s.se,
        s.skewness,
        dist.flagged_fraction(),
        dist.rejected()
    );
    let mut outputs = vec![run.emit("prices", &prices)?];
    match density_rows(&dist.prices(), c.experiment.kde_points) {
        Ok(rows) => outputs.push(run.emit("kde", &rows)?),
        Err(e) => eprintln!("kde skipped: {e}"),
    }
    for (axis, values) in c.experiment.sweep.axes() {
        let rows: Vec<SweepCsvRow> = sweep(&cfg, axis, values)?
            .into_iter()
            .map(|r| SweepCsvRow {
                value: r.value,
                mean: r.mean,
                se: r.se,
                flagged_fraction: r.flagged_fraction,
            })
            .collect();
        outputs.push(run.emit(&format!("sweep_{axis}"), &rows)?);
    }
    run.finish("experiment section7", outputs)
}

/// Reads one numeric column, by header name or the last column.
fn read_column(path: &Path, column: Option<&str>) -> anyhow::Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let idx = match column {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("no column `{name}` in {}", path.display()))?,
        None => headers.len().saturating_sub(1),
    };
    let mut xs = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = rec.get(idx).unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        let x: f64 = field
            .parse()
            .with_context(|| format!("line {}: `{field}` is not a number", line + 2))?;
        xs.push(x);
    }
    Ok(xs)
}

pub fn kde(run: &Run, input: &Path, column: Option<&str>) -> anyhow::Result<()> {
    let samples = read_column(input, column)?;
    if samples.len() < 2 {
        bail!("{} holds fewer than two values", input.display());
    }
    let rows = density_rows(&samples, run.config.experiment.kde_points)?;
    let out = run.emit("kde", &rows)?;
    run.finish("kde", vec![out])
}

#[derive(Serialize)]
struct CheckRow<'a> {
    check: &'a str,
    passed: bool,
    detail: &'a str,
}

/// Failed checks are report entries, not errors.
pub fn verify(run: &Run) -> anyhow::Result<()> {
    let report = run_suite(&run.config.suite_settings()?);
    print!("{report}");
    let rows: Vec<CheckRow> = report
        .checks
        .iter()
        .map(|c| CheckRow {
            check: &c.name,
            passed: c.passed,
            detail: &c.detail,
        })
        .collect();
    let out = run.emit("report", &rows)?;
    run.finish("verify", vec![out])
}
