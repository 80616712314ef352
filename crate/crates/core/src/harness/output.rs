//! CSV result tables and plot-ready `(x, series, y)` files.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};

use super::campaign::ResultRow;
use crate::error::{Error, Result};
use crate::metrics::{count_lr_tmmse, count_mmse, SolveTail};

/// Formats a float with 6 significant digits, `%g` style.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        let s = format!("{x:.5e}");
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        format!("{}e{e}", trim(mantissa.to_string()))
    }
}

fn sig6<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_sig6(*x))
}

/// On-disk form of [`ResultRow`]; identical field names, floats rounded.
#[derive(Serialize)]
struct CsvRow<'a> {
    sweep: &'a str,
    #[serde(serialize_with = "sig6")]
    sweep_value: f64,
    equalizer: &'a str,
    #[serde(serialize_with = "sig6")]
    sinr_db: f64,
    #[serde(serialize_with = "sig6")]
    sinr_linear: f64,
    #[serde(serialize_with = "sig6")]
    sinr_db_trial_mean: f64,
    #[serde(serialize_with = "sig6")]
    sinr_db_std: f64,
    #[serde(serialize_with = "sig6")]
    mse: f64,
    formula_products: u64,
    instrumented_products: u64,
    #[serde(serialize_with = "sig6")]
    iterations: f64,
    #[serde(serialize_with = "sig6")]
    convergence_rate: f64,
    seed: u64,
}

impl<'a> From<&'a ResultRow> for CsvRow<'a> {
    fn from(r: &'a ResultRow) -> Self {
        Self {
            sweep: &r.sweep,
            sweep_value: r.sweep_value,
            equalizer: &r.equalizer,
            sinr_db: r.sinr_db,
            sinr_linear: r.sinr_linear,
            sinr_db_trial_mean: r.sinr_db_trial_mean,
            sinr_db_std: r.sinr_db_std,
            mse: r.mse,
            formula_products: r.formula_products,
            instrumented_products: r.instrumented_products,
            iterations: r.iterations,
            convergence_rate: r.convergence_rate,
            seed: r.seed,
        }
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Serializes rows to CSV text.
pub fn results_to_csv(rows: &[ResultRow]) -> Result<Vec<u8>> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no result rows to write".into()));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(CsvRow::from(r))
            .map_err(csv_err(Path::new("<memory>")))?;
    }
    w.into_inner()
        .map_err(|e| Error::InvalidArgument(format!("flushing CSV buffer: {e}")))
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let bytes = results_to_csv(rows)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(path))?;
    }
    File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(io_err(path))
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()
        .map_err(csv_err(path))
}

/// Writes `x,series,y` triples: one per result row, with `y` the SINR in dB.
pub fn emit_plot_data(rows: &[ResultRow], path: &Path) -> Result<()> {
    let triples: Vec<(f64, String, f64)> = rows
        .iter()
        .map(|r| (r.sweep_value, r.equalizer.clone(), r.sinr_db))
        .collect();
    write_triples(&triples, path)
}

fn write_triples(triples: &[(f64, String, f64)], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["x", "series", "y"])
        .map_err(csv_err(path))?;
    for (x, series, y) in triples {
        w.write_record([format_sig6(*x), series.clone(), format_sig6(*y)])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// One point of the closed-form complexity comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexityConfig {
    pub frame_len: u64,
    pub dims: Vec<u64>,
    pub rank: u64,
    pub iterations: u64,
}

impl ComplexityConfig {
    pub fn antennas(&self) -> u64 {
        self.dims.iter().product()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub antennas: u64,
    pub frame_len: u64,
    pub order: u64,
    /// Filter dimensions joined with `x`, e.g. `8x8x8`.
    pub dims: String,
    pub rank: u64,
    pub iterations: u64,
    pub mmse_products: u64,
    pub lr_tmmse_products: u64,
}

/// Evaluates both product counts for every configuration.
pub fn emit_complexity_table(
    configs: &[ComplexityConfig],
    tail: SolveTail,
) -> Result<Vec<ComplexityRow>> {
    configs
        .iter()
        .map(|c| {
            if c.dims.is_empty() || c.dims.contains(&0) || c.rank == 0 || c.frame_len == 0 {
                return Err(Error::Config(format!("invalid complexity point {c:?}")));
            }
            let n = c.antennas();
            let to_u64 = |v: u128| {
                u64::try_from(v).map_err(|_| Error::Config(format!("count overflows for {c:?}")))
            };
            Ok(ComplexityRow {
                antennas: n,
                frame_len: c.frame_len,
                order: c.dims.len() as u64,
                dims: c
                    .dims
                    .iter()
                    .map(u64::to_string)
                    .collect::<Vec<_>>()
                    .join("x"),
                rank: c.rank,
                iterations: c.iterations,
                mmse_products: to_u64(count_mmse(n, c.frame_len))?,
                lr_tmmse_products: to_u64(count_lr_tmmse(
                    &c.dims,
                    c.rank,
                    c.iterations,
                    c.frame_len,
                    tail,
                ))?,
            })
        })
        .collect()
}

/// Default tables: a frame-length sweep at `N = 512` over orders 2..=5 and
/// ranks 1..=4, and an array-size sweep at `K = 600`, order 3, ranks 1..=4.
/// Two iterations throughout.
pub fn default_complexity_configs() -> Vec<ComplexityConfig> {
    let factor = |n: usize, d: usize| -> Vec<u64> {
        super::config::balanced_factorization(n, d)
            .expect("powers of two factor for these orders")
            .into_iter()
            .map(|x| x as u64)
            .collect()
    };
    let mut out = Vec::new();
    for order in 2..=5 {
        for rank in 1..=4 {
            for k in (100..=1000).step_by(100) {
                out.push(ComplexityConfig {
                    frame_len: k,
                    dims: factor(512, order),
                    rank,
                    iterations: 2,
                });
            }
        }
    }
    for rank in 1..=4 {
        for log_n in 6..=12 {
            out.push(ComplexityConfig {
                frame_len: 600,
                dims: factor(1 << log_n, 3),
                rank,
                iterations: 2,
            });
        }
    }
    out
}

pub fn emit_complexity_csv(rows: &[ComplexityRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no complexity rows to write".into()));
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}
