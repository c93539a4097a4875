//! Seeded Monte-Carlo sweeps comparing the multi-scale estimator with the
//! single-scale comparator over a grid of `(beta, p)` scenarios.
//!
//! Replications run in parallel but are reduced in replication order, and
//! each replication draws from its own keyed streams, so results do not
//! depend on the number of threads.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aj::{aj_estimate, AjConfig};
use crate::error::{check_domain, Error, Result};
use crate::estimator::{estimate, EstimatorConfig};
use crate::simulate::{simulate_path, Scaling, SimulationModel, DEFAULT_N, DEFAULT_NOISE_SD};

pub const HIST_BINS: usize = 60;
pub const ESTIMATE_RANGE: (f64, f64) = (0.0, 2.0);
pub const STANDARDIZED_RANGE: (f64, f64) = (-4.0, 4.0);
pub const QUICK_REPS: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// The multi-scale smoothed estimator.
    Multiscale,
    /// The single-scale hard-threshold comparator.
    Aj,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Multiscale => "multiscale",
            Method::Aj => "aj",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multiscale" => Ok(Method::Multiscale),
            "aj" => Ok(Method::Aj),
            other => Err(Error::Csv(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub betas: Vec<f64>,
    pub ps: Vec<f64>,
    pub reps: usize,
    pub gamma: f64,
    pub n: usize,
    pub noise_sd: f64,
    pub scaling: Scaling,
    pub estimator: EstimatorConfig,
    pub aj: AjConfig,
    pub base_seed: u64,
    /// Abort on the first failed replication instead of excluding it.
    pub strict: bool,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            betas: vec![0.4, 0.8, 1.2, 1.6],
            ps: vec![0.005, 0.01, 0.02],
            reps: 10_000,
            gamma: 0.95,
            n: DEFAULT_N,
            noise_sd: DEFAULT_NOISE_SD,
            scaling: Scaling::default(),
            estimator: EstimatorConfig::default(),
            aj: AjConfig::default(),
            base_seed: 0,
            strict: true,
        }
    }
}

impl ExperimentGrid {
    pub fn quick() -> Self {
        Self {
            reps: QUICK_REPS,
            ..Self::default()
        }
    }

    pub fn model(&self, beta: f64, p: f64) -> Result<SimulationModel> {
        let mut model = SimulationModel::new(beta, p, self.n, self.noise_sd, self.base_seed)?;
        model.scaling = self.scaling;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        check_domain("reps", self.reps as f64, self.reps >= 1, "reps >= 1")?;
        check_domain(
            "betas",
            self.betas.len() as f64,
            !self.betas.is_empty(),
            "non-empty grid",
        )?;
        check_domain(
            "ps",
            self.ps.len() as f64,
            !self.ps.is_empty(),
            "non-empty grid",
        )?;
        check_domain(
            "gamma",
            self.gamma,
            self.gamma > 0.0 && self.gamma < 1.0,
            "0 < gamma < 1",
        )?;
        self.estimator.validate()?;
        self.aj.validate()?;
        for &beta in &self.betas {
            for &p in &self.ps {
                self.model(beta, p)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        Self {
            lo,
            hi,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        }
    }

    pub fn from_values(lo: f64, hi: f64, bins: usize, values: &[f64]) -> Self {
        let mut h = Self::new(lo, hi, bins);
        values.iter().for_each(|&v| h.add(v));
        h
    }

    /// Bins are half-open `[edge_i, edge_{i+1})` except the last, which
    /// includes `hi`.
    pub fn add(&mut self, v: f64) {
        if v < self.lo {
            self.underflow += 1;
        } else if v > self.hi {
            self.overflow += 1;
        } else {
            let bins = self.counts.len();
            let i = ((v - self.lo) / (self.hi - self.lo) * bins as f64) as usize;
            self.counts[i.min(bins - 1)] += 1;
        }
    }

    pub fn edges(&self) -> Vec<f64> {
        let bins = self.counts.len();
        (0..=bins)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / bins as f64)
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub beta_true: f64,
    pub p: f64,
    pub method: Method,
    pub mean: f64,
    pub std_dev: f64,
    pub rmse: f64,
    /// Share of replications whose interval contains `beta_true`; empty
    /// intervals count as misses.
    pub coverage: f64,
    pub reps_effective: usize,
    pub reps_failed: usize,
    /// Clipped estimates in replication order.
    pub estimates: Vec<f64>,
    /// Finite standardized errors at `beta_true`, in replication order.
    pub standardized_errors: Vec<f64>,
    pub hist_estimate: Histogram,
    pub hist_standardized: Histogram,
}

/// What one method produced on one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub estimate: f64,
    pub covered: bool,
    pub standardized_error: Option<f64>,
}

impl CellSummary {
    pub fn from_draws(
        beta_true: f64,
        p: f64,
        method: Method,
        draws: &[Draw],
        failed: usize,
    ) -> Self {
        let reps = draws.len();
        let estimates: Vec<f64> = draws.iter().map(|d| d.estimate).collect();
        let standardized_errors: Vec<f64> = draws
            .iter()
            .filter_map(|d| d.standardized_error)
            .filter(|u| u.is_finite())
            .collect();
        let (mean, std_dev, rmse, coverage) = if reps == 0 {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        } else {
            let nr = reps as f64;
            let mean = estimates.iter().sum::<f64>() / nr;
            let ss: f64 = estimates.iter().map(|x| (x - mean) * (x - mean)).sum();
            let std_dev = if reps > 1 {
                (ss / (nr - 1.0)).sqrt()
            } else {
                0.0
            };
            let mse = estimates
                .iter()
                .map(|x| (x - beta_true) * (x - beta_true))
                .sum::<f64>()
                / nr;
            let hits = draws.iter().filter(|d| d.covered).count();
            (mean, std_dev, mse.sqrt(), hits as f64 / nr)
        };
        Self {
            beta_true,
            p,
            method,
            mean,
            std_dev,
            rmse,
            coverage,
            reps_effective: reps,
            reps_failed: failed,
            hist_estimate: Histogram::from_values(
                ESTIMATE_RANGE.0,
                ESTIMATE_RANGE.1,
                HIST_BINS,
                &estimates,
            ),
            hist_standardized: Histogram::from_values(
                STANDARDIZED_RANGE.0,
                STANDARDIZED_RANGE.1,
                HIST_BINS,
                &standardized_errors,
            ),
            estimates,
            standardized_errors,
        }
    }
}

/// Both methods on one replication of `model`, estimated from the noisy
/// observations as if they were noiseless.
pub fn run_replication(
    model: &SimulationModel,
    replication: u64,
    grid: &ExperimentGrid,
) -> Result<[Draw; 2]> {
    let sim = simulate_path(model, replication)?;
    let beta = model.beta;

    let hat = estimate(&sim.observed, &grid.estimator)?;
    let ci = hat.confidence_interval(grid.gamma)?;
    let multiscale = Draw {
        estimate: hat.beta_hat,
        covered: ci.contains(beta),
        standardized_error: hat.standardized_error(beta),
    };

    let tilde = aj_estimate(&sim.observed, &grid.aj)?;
    let ci = tilde.confidence_interval(grid.gamma)?;
    let aj = Draw {
        estimate: tilde.beta_tilde,
        covered: ci.contains(beta),
        standardized_error: tilde.standardized_error(beta),
    };
    Ok([multiscale, aj])
}

fn with_threads<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Replication {
            replication: 0,
            message: format!("cannot build thread pool: {e}"),
        })?;
    Ok(pool.install(job))
}

/// Run `grid.reps` replications at `(beta, p)`. `threads = 0` uses the
/// ambient rayon pool.
pub fn run_cell(
    grid: &ExperimentGrid,
    beta: f64,
    p: f64,
    threads: usize,
) -> Result<[CellSummary; 2]> {
    let model = grid.model(beta, p)?;
    let outcomes: Vec<Result<[Draw; 2]>> = with_threads(threads, || {
        (0..grid.reps as u64)
            .into_par_iter()
            .map(|r| run_replication(&model, r, grid))
            .collect()
    })?;

    let mut multiscale = Vec::with_capacity(grid.reps);
    let mut aj = Vec::with_capacity(grid.reps);
    let mut failed = 0;
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok([a, b]) => {
                multiscale.push(a);
                aj.push(b);
            }
            Err(e) if grid.strict => {
                return Err(Error::Replication {
                    replication: r as u64,
                    message: e.to_string(),
                })
            }
            Err(_) => failed += 1,
        }
    }
    Ok([
        CellSummary::from_draws(beta, p, Method::Multiscale, &multiscale, failed),
        CellSummary::from_draws(beta, p, Method::Aj, &aj, failed),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    pub grid: ExperimentGrid,
    /// Ordered by beta, then p, then method (multiscale first).
    pub cells: Vec<CellSummary>,
}

impl ExperimentTable {
    pub fn cell(&self, beta: f64, p: f64, method: Method) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.beta_true == beta && c.p == p && c.method == method)
    }
}

pub fn run_grid(grid: &ExperimentGrid, threads: usize) -> Result<ExperimentTable> {
    grid.validate()?;
    let mut cells = Vec::with_capacity(2 * grid.betas.len() * grid.ps.len());
    for &beta in &grid.betas {
        for &p in &grid.ps {
            cells.extend(run_cell(grid, beta, p, threads)?);
        }
    }
    Ok(ExperimentTable {
        grid: grid.clone(),
        cells,
    })
}

/// One line of `table.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub beta: f64,
    pub p: f64,
    pub method: Method,
    pub mean: f64,
    pub std: f64,
    pub coverage: f64,
    pub rmse: f64,
    pub reps: usize,
}

impl From<&CellSummary> for TableRow {
    fn from(c: &CellSummary) -> Self {
        Self {
            beta: c.beta_true,
            p: c.p,
            method: c.method,
            mean: c.mean,
            std: c.std_dev,
            coverage: c.coverage,
            rmse: c.rmse,
            reps: c.reps_effective,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_rows<S: Serialize>(path: &Path, rows: impl IntoIterator<Item = S>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Serialize)]
struct BinRow {
    bin_lo: f64,
    bin_hi: f64,
    count: u64,
}

fn histogram_rows(h: &Histogram) -> Vec<BinRow> {
    let edges = h.edges();
    let mut rows = vec![BinRow {
        bin_lo: f64::NEG_INFINITY,
        bin_hi: h.lo,
        count: h.underflow,
    }];
    rows.extend(h.counts.iter().enumerate().map(|(i, &count)| BinRow {
        bin_lo: edges[i],
        bin_hi: edges[i + 1],
        count,
    }));
    rows.push(BinRow {
        bin_lo: h.hi,
        bin_hi: f64::INFINITY,
        count: h.overflow,
    });
    rows
}

#[derive(Serialize)]
struct RmseRow {
    method: Method,
    beta: f64,
    p: f64,
    rmse: f64,
}

pub fn cell_file_stem(c: &CellSummary) -> String {
    format!("{}_beta{}_p{}", c.method, c.beta_true, c.p)
}

/// Write `table.csv`, `rmse.csv`, `hist_beta_*.csv`, `hist_u_*.csv` and
/// `metadata.csv` into `dir`, creating it if needed.
pub fn emit(table: &ExperimentTable, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_rows(
        &dir.join("table.csv"),
        table.cells.iter().map(TableRow::from),
    )?;

    let mut rmse: Vec<RmseRow> = table
        .cells
        .iter()
        .map(|c| RmseRow {
            method: c.method,
            beta: c.beta_true,
            p: c.p,
            rmse: c.rmse,
        })
        .collect();
    rmse.sort_by(|a, b| {
        a.method
            .tag()
            .cmp(b.method.tag())
            .then(a.p.total_cmp(&b.p))
            .then(a.beta.total_cmp(&b.beta))
    });
    write_rows(&dir.join("rmse.csv"), rmse)?;

    for c in &table.cells {
        let stem = cell_file_stem(c);
        write_rows(
            &dir.join(format!("hist_beta_{stem}.csv")),
            histogram_rows(&c.hist_estimate),
        )?;
        write_rows(
            &dir.join(format!("hist_u_{stem}.csv")),
            histogram_rows(&c.hist_standardized),
        )?;
    }

    let g = &table.grid;
    let meta = [
        ("reps", g.reps.to_string()),
        ("base_seed", g.base_seed.to_string()),
        ("n", g.n.to_string()),
        ("noise_sd", g.noise_sd.to_string()),
        ("scaling", format!("{:?}", g.scaling).to_lowercase()),
        ("gamma", g.gamma.to_string()),
        ("multiscale_m", g.estimator.m.to_string()),
        ("multiscale_c", g.estimator.c.to_string()),
        ("multiscale_rho", g.estimator.rho.to_string()),
        ("multiscale_alpha", g.estimator.alpha.to_string()),
        ("aj_c", g.aj.c.to_string()),
        ("aj_rho", g.aj.rho.to_string()),
        ("aj_alpha", g.aj.alpha.to_string()),
        (
            "hist_beta_bins",
            format!(
                "{HIST_BINS} uniform on [{}, {}]",
                ESTIMATE_RANGE.0, ESTIMATE_RANGE.1
            ),
        ),
        (
            "hist_u_bins",
            format!(
                "{HIST_BINS} uniform on [{}, {}]",
                STANDARDIZED_RANGE.0, STANDARDIZED_RANGE.1
            ),
        ),
        ("empty_interval", "miss".to_string()),
        ("aj_zero_count_at_tau", "interval spans (0, 2)".to_string()),
    ];
    let mut w = csv::Writer::from_path(dir.join("metadata.csv"))?;
    w.write_record(["key", "value"])?;
    for (k, v) in meta {
        w.write_record([k, v.as_str()])?;
    }
    w.flush().map_err(io_err(dir))
}

pub fn read_table(path: &Path) -> Result<Vec<TableRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draw(x: f64, covered: bool, u: Option<f64>) -> Draw {
        Draw {
            estimate: x,
            covered,
            standardized_error: u,
        }
    }

    #[test]
    fn summary_statistics() {
        let draws = [
            draw(0.7, true, Some(-0.5)),
            draw(0.9, true, Some(0.5)),
            draw(0.0, false, Some(f64::NEG_INFINITY)),
            draw(1.1, false, None),
        ];
        let s = CellSummary::from_draws(0.8, 0.01, Method::Multiscale, &draws, 1);
        assert!((s.mean - 0.675).abs() < 1e-15);
        assert_eq!(s.coverage, 0.5);
        assert_eq!(s.reps_effective, 4);
        assert_eq!(s.reps_failed, 1);
        assert_eq!(s.standardized_errors, vec![-0.5, 0.5]);
        let n = 4.0;
        let lhs = s.rmse * s.rmse;
        let rhs = (s.mean - 0.8).powi(2) + s.std_dev.powi(2) * (n - 1.0) / n;
        assert!((lhs - rhs).abs() < 1e-14);
        assert_eq!(s.hist_estimate.total(), 4);
    }

    #[test]
    fn single_draw_summary() {
        let s = CellSummary::from_draws(1.2, 0.01, Method::Aj, &[draw(1.0, true, Some(0.3))], 0);
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.std_dev, 0.0);
        assert!((s.rmse - 0.2).abs() < 1e-15);
        assert_eq!(s.coverage, 1.0);
    }

    #[test]
    fn histogram_edges_and_overflow() {
        let h = Histogram::from_values(0.0, 2.0, 4, &[-0.1, 0.0, 0.49, 0.5, 2.0, 2.5]);
        assert_eq!(h.counts, vec![2, 1, 0, 1]);
        assert_eq!((h.underflow, h.overflow), (1, 1));
        assert_eq!(h.edges(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn method_tags_round_trip() {
        for m in [Method::Multiscale, Method::Aj] {
            assert_eq!(m.tag().parse::<Method>().unwrap(), m);
        }
        assert!("other".parse::<Method>().is_err());
    }

    #[test]
    fn grid_validation() {
        let mut g = ExperimentGrid::quick();
        assert_eq!(g.reps, 2000);
        g.betas.clear();
        assert!(g.validate().is_err());
        let g = ExperimentGrid {
            betas: vec![0.1],
            ..ExperimentGrid::default()
        };
        assert!(g.validate().is_err());
    }
}
