//! Photon-number sweeps: bounds per point, CSV output and a text report.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dpsolver::{solve_dp_prime, DpMode, DualSolution};
use crate::ensemble::CoherentEnsemble;
use crate::error::{Error, Result};
use crate::mem::{quantum_limit, Povm};
use crate::primal::{default_library, optimize_alice};
use crate::qregion::{build_sampled, HalfspaceCache, QPolytope, SamplingScheme};
use crate::tol::TOL;
use crate::vertexenum::enumerate_vertices;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Symmetric,
    General,
    /// Reports the symmetric bound and checks it against the general one.
    Both,
}

impl FromStr for SweepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(SweepMode::Symmetric),
            "general" => Ok(SweepMode::General),
            "both" => Ok(SweepMode::Both),
            _ => Err(Error::Parse(format!("unknown mode '{s}' (expected symmetric, general or both)"))),
        }
    }
}

impl fmt::Display for SweepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepMode::Symmetric => "symmetric",
            SweepMode::General => "general",
            SweepMode::Both => "both",
        })
    }
}

/// Grid priors per edge for the primal library.
pub const PRIMAL_LIBRARY_PRIORS: usize = 66;
/// Random Bob measurements checked against the polytope at every point.
pub const SOUNDNESS_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub nbar_min: f64,
    pub nbar_max: f64,
    pub nbar_step: f64,
    pub planes_per_edge: usize,
    pub mode: SweepMode,
    pub primal: bool,
    pub seed: u64,
    pub output_path: PathBuf,
    pub cache_dir: Option<PathBuf>,
    /// Concurrent sweep points; `None` uses every core.
    pub workers: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            nbar_min: 0.1,
            nbar_max: 2.0,
            nbar_step: 0.1,
            planes_per_edge: 141,
            mode: SweepMode::Symmetric,
            primal: false,
            seed: 0,
            output_path: PathBuf::from("bounds.csv"),
            cache_dir: None,
            workers: None,
        }
    }
}

fn parse_bool(v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Parse(format!("expected a boolean, got '{v}'"))),
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse().map_err(|e| Error::Parse(format!("{key}: {e}")))
}

impl SweepConfig {
    /// Sets one option by its command-line name (without the leading dashes).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "nbar-min" => self.nbar_min = parse_num(key, v)?,
            "nbar-max" => self.nbar_max = parse_num(key, v)?,
            "nbar-step" => self.nbar_step = parse_num(key, v)?,
            "planes" => self.planes_per_edge = parse_num(key, v)?,
            "mode" => self.mode = v.parse()?,
            "primal" => self.primal = parse_bool(v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "out" => self.output_path = PathBuf::from(v),
            "cache-dir" => self.cache_dir = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "workers" => {
                let n: usize = parse_num(key, v)?;
                self.workers = if n == 0 { None } else { Some(n) };
            }
            other => return Err(Error::Parse(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_kv_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", i + 1)))?;
            self.set(k, v).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_kv_file(&mut self, path: &Path) -> Result<()> {
        self.apply_kv_text(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Validation(m.into()));
        if !(self.nbar_min >= 0.0) || !(self.nbar_max >= self.nbar_min) || !self.nbar_max.is_finite() {
            return bad("need 0 <= nbar-min <= nbar-max");
        }
        if !(self.nbar_step > 0.0) {
            return bad("nbar-step must be positive");
        }
        if self.planes_per_edge < 1 {
            return bad("planes must be at least 1");
        }
        if self.workers == Some(0) {
            return bad("workers must be positive");
        }
        Ok(())
    }

    /// Mean photon numbers on the grid, rounded to 12 significant digits.
    pub fn grid(&self) -> Vec<f64> {
        let n = ((self.nbar_max - self.nbar_min) / self.nbar_step + 1e-9).floor() as usize;
        (0..=n).map(|i| round12(self.nbar_min + i as f64 * self.nbar_step)).collect()
    }
}

/// Rounds to 12 significant decimal digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap()
}

pub const CSV_HEADER: &str = "mean_photon,p_mem_success,dual_upper_success,error_lower,quantum_limit_error,ratio,primal_lower_success,n_halfspaces,n_vertices,solver_iterations,status,wall_time_ms";

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRecord {
    pub mean_photon: f64,
    /// Success of the optimal joint measurement (the quantum limit).
    pub p_mem_success: f64,
    pub dual_upper_success: f64,
    pub error_lower: f64,
    pub quantum_limit_error: f64,
    /// `error_lower / quantum_limit_error`
    pub ratio: f64,
    pub primal_lower_success: Option<f64>,
    pub n_halfspaces: usize,
    pub n_vertices: usize,
    pub solver_iterations: usize,
    /// `ok`, or a failure tag.
    pub status: String,
    pub wall_time_ms: u64,
}

impl BoundRecord {
    /// Fills the derived columns; every real is rounded to 12 significant digits.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mean_photon: f64,
        p_mem_success: f64,
        dual_upper_success: f64,
        primal_lower_success: Option<f64>,
        n_halfspaces: usize,
        n_vertices: usize,
        solver_iterations: usize,
        status: &str,
        wall_time_ms: u64,
    ) -> Self {
        let error_lower = 1.0 - dual_upper_success;
        let quantum_limit_error = 1.0 - p_mem_success;
        BoundRecord {
            mean_photon: round12(mean_photon),
            p_mem_success: round12(p_mem_success),
            dual_upper_success: round12(dual_upper_success),
            error_lower: round12(error_lower),
            quantum_limit_error: round12(quantum_limit_error),
            ratio: round12(error_lower / quantum_limit_error),
            primal_lower_success: primal_lower_success.map(round12),
            n_halfspaces,
            n_vertices,
            solver_iterations,
            status: status.replace([',', '\n', '\r'], ";"),
            wall_time_ms,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    /// `p_mem_success - dual_upper_success`; positive means the sequential bound sits below the quantum limit.
    pub fn gap(&self) -> f64 {
        self.p_mem_success - self.dual_upper_success
    }

    pub fn to_csv_row(&self) -> String {
        let primal = self.primal_lower_success.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.mean_photon,
            self.p_mem_success,
            self.dual_upper_success,
            self.error_lower,
            self.quantum_limit_error,
            self.ratio,
            primal,
            self.n_halfspaces,
            self.n_vertices,
            self.solver_iterations,
            self.status,
            self.wall_time_ms
        )
    }

    pub fn from_csv_row(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(Error::Parse(format!("expected 12 fields, found {}", f.len())));
        }
        let real = |i: usize| parse_num::<f64>(CSV_HEADER.split(',').nth(i).unwrap(), f[i]);
        let int = |i: usize| parse_num::<usize>(CSV_HEADER.split(',').nth(i).unwrap(), f[i]);
        Ok(BoundRecord {
            mean_photon: real(0)?,
            p_mem_success: real(1)?,
            dual_upper_success: real(2)?,
            error_lower: real(3)?,
            quantum_limit_error: real(4)?,
            ratio: real(5)?,
            primal_lower_success: if f[6].is_empty() { None } else { Some(real(6)?) },
            n_halfspaces: int(7)?,
            n_vertices: int(8)?,
            solver_iterations: int(9)?,
            status: f[10].to_string(),
            wall_time_ms: parse_num("wall_time_ms", f[11])?,
        })
    }
}

pub fn to_csv(records: &[BoundRecord]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.to_csv_row());
        s.push('\n');
    }
    s
}

pub fn parse_csv(text: &str) -> Result<Vec<BoundRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Parse("missing or unexpected CSV header".into())),
    }
    lines.filter(|l| !l.trim().is_empty()).map(BoundRecord::from_csv_row).collect()
}

pub fn write_csv(path: &Path, records: &[BoundRecord]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, to_csv(records))?;
    Ok(())
}

/// Everything computed at one photon number.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub record: BoundRecord,
    pub polytope: QPolytope,
    pub dual: Option<DualSolution>,
}

fn dual_bound(e: &CoherentEnsemble, vs: &crate::vertexenum::VertexSet, mode: DpMode) -> Result<(f64, usize, Option<DualSolution>, &'static str)> {
    match solve_dp_prime(e, vs, mode) {
        Ok(s) => Ok((s.certified_upper, s.iterations, Some(s), "ok")),
        Err(Error::Stall { rounds, certified, .. }) => Ok((certified, rounds, None, "stalled")),
        Err(err) => Err(err),
    }
}

/// Runs the full pipeline at one photon number; `index` separates the random streams of points.
pub fn run_point(cfg: &SweepConfig, nbar: f64, index: usize) -> PointOutcome {
    let start = Instant::now();
    let failed = |status: String, poly: QPolytope, n_v: usize| PointOutcome {
        record: BoundRecord::new(nbar, f64::NAN, f64::NAN, None, poly.halfspaces.len(), n_v, 0, &status, start.elapsed().as_millis() as u64),
        polytope: poly,
        dual: None,
    };
    let e = match CoherentEnsemble::equiprobable(nbar) {
        Ok(e) => e,
        Err(err) => return failed(format!("error: {err}"), QPolytope::default(), 0),
    };
    let cache = cfg.cache_dir.as_ref().map(HalfspaceCache::new);
    let mut poly = match build_sampled(&e, cfg.planes_per_edge, SamplingScheme::Grid, cache.as_ref()) {
        Ok(p) => p,
        Err(err) => return failed(format!("error: polytope: {err}"), QPolytope::default(), 0),
    };
    let vs = match enumerate_vertices(&mut poly) {
        Ok(v) => v,
        Err(err) => return failed(format!("error: vertices: {err}"), poly, 0),
    };
    let n_v = vs.len();

    let mode = if cfg.mode == SweepMode::General { DpMode::General } else { DpMode::Symmetric };
    let (dual_value, iterations, dual, mut status) = match dual_bound(&e, &vs, mode) {
        Ok((v, it, d, s)) => (v, it, d, s.to_string()),
        Err(err) => return failed(format!("error: dual: {err}"), poly, n_v),
    };
    if cfg.mode == SweepMode::Both {
        match dual_bound(&e, &vs, DpMode::General) {
            Ok((g, _, _, _)) if (g - dual_value).abs() > TOL.mode_agreement && status == "ok" => {
                status = "mode_mismatch".into();
            }
            Ok(_) => {}
            Err(err) => status = format!("error: general dual: {err}"),
        }
    }

    let ql = quantum_limit(&e).unwrap_or(f64::NAN);
    let mut primal = None;
    if cfg.primal {
        match default_library(&e, PRIMAL_LIBRARY_PRIORS).and_then(|lib| optimize_alice(&e, &lib)) {
            Ok(r) => primal = Some(r.success_value),
            Err(Error::Convergence { lower, .. }) => primal = Some(lower),
            Err(err) if status == "ok" => status = format!("error: primal: {err}"),
            Err(_) => {}
        }
        if let Some(p) = primal {
            if p > dual_value + 1e-7 && status == "ok" {
                status = "sandwich_violation".into();
            }
        }
    }

    // random Bob measurements must land inside the outer polytope
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    for _ in 0..SOUNDNESS_SAMPLES {
        let q = match Povm::random(&mut rng, 3, 3) {
            Ok(b) => std::array::from_fn(|m| b.elements[m].quad_form(&e.state_vectors()[m])),
            Err(_) => continue,
        };
        if !poly.contains(q, 1e-9) && status == "ok" {
            status = "unsound_sample".into();
        }
    }

    let record = BoundRecord::new(
        nbar,
        ql,
        dual_value,
        primal,
        poly.halfspaces.len(),
        n_v,
        iterations,
        &status,
        start.elapsed().as_millis() as u64,
    );
    PointOutcome { record, polytope: poly, dual }
}

/// One record per grid point, ordered by photon number.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<BoundRecord>> {
    cfg.validate()?;
    let grid = cfg.grid();
    let work = || -> Vec<BoundRecord> {
        grid.par_iter()
            .enumerate()
            .map(|(i, &nbar)| run_point(cfg, nbar, i).record)
            .collect()
    };
    let mut records = match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Validation(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    records.sort_by(|a, b| a.mean_photon.total_cmp(&b.mean_photon));
    Ok(records)
}

/// Threshold on `P_MEM - dual` counted as a strict gap.
pub const STRICT_GAP: f64 = 1e-5;

fn opt(x: Option<f64>, width: usize, prec: usize) -> String {
    match x {
        Some(v) => format!("{v:>width$.prec$}"),
        None => format!("{:>width$}", "—"),
    }
}

/// Fixed-width table and summary lines.
pub fn report(records: &[BoundRecord]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>8} {:>12} {:>12} {:>12} {:>12} {:>9} {:>12} {:>7} {:>7} {:>8}  status",
        "nbar", "P_MEM", "dual_upper", "err_lower", "err_QL", "ratio", "primal", "below", "planes", "vertices"
    );
    for r in records {
        let below = if r.dual_upper_success < r.p_mem_success { "yes" } else { "no" };
        let _ = writeln!(
            s,
            "{:>8.4} {:>12.9} {:>12.9} {:>12.6e} {:>12.6e} {:>9.5} {} {:>7} {:>7} {:>8}  {}",
            r.mean_photon,
            r.p_mem_success,
            r.dual_upper_success,
            r.error_lower,
            r.quantum_limit_error,
            r.ratio,
            opt(r.primal_lower_success, 12, 9),
            below,
            r.n_halfspaces,
            r.n_vertices,
            r.status
        );
    }
    let ok: Vec<&BoundRecord> = records.iter().filter(|r| r.ratio.is_finite()).collect();
    match ok.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio)) {
        Some(best) => {
            let _ = writeln!(s, "max ratio: {:.6} at nbar {}", best.ratio, best.mean_photon);
        }
        None => {
            let _ = writeln!(s, "max ratio: —");
        }
    }
    let strict: Vec<f64> = ok.iter().filter(|r| r.gap() > STRICT_GAP).map(|r| r.mean_photon).collect();
    if strict.is_empty() {
        let _ = writeln!(s, "no strict gap detected");
    } else {
        let lo = strict.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = strict.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(
            s,
            "strict gap (P_MEM - dual > {STRICT_GAP:e}) at {} of {} points, nbar in [{lo}, {hi}]",
            strict.len(),
            records.len()
        );
    }
    let failures = records.iter().filter(|r| !r.is_ok()).count();
    if failures > 0 {
        let _ = writeln!(s, "{failures} point(s) failed");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg(min: f64, max: f64) -> SweepConfig {
        SweepConfig {
            nbar_min: min,
            nbar_max: max,
            nbar_step: 0.5,
            planes_per_edge: 5,
            primal: true,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn default_grid() {
        let g = SweepConfig::default().grid();
        assert_eq!(g.len(), 20);
        assert_eq!(g[2], 0.3);
        assert_eq!(*g.last().unwrap(), 2.0);
    }

    #[test]
    fn vacuum_point() {
        let recs = run_sweep(&tiny_cfg(0.0, 0.0)).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert!(r.is_ok(), "{}", r.status);
        assert!((r.ratio - 1.0).abs() < 1e-6);
        assert!((r.dual_upper_success - 1.0 / 3.0).abs() < 1e-6);
        assert!((r.primal_lower_success.unwrap() - 1.0 / 3.0).abs() < 1e-6);
        let text = report(&recs);
        assert!(text.contains("no strict gap detected"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn csv_round_trip() {
        let recs = run_sweep(&tiny_cfg(0.5, 1.5)).unwrap();
        assert_eq!(recs.len(), 3);
        let text = to_csv(&recs);
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(parse_csv(&text).unwrap(), recs);
        for r in &recs {
            assert!(r.ratio >= 0.0);
            assert!(r.primal_lower_success.unwrap() <= r.dual_upper_success + 1e-7);
        }
        let mut missing = recs[0].clone();
        missing.primal_lower_success = None;
        assert_eq!(BoundRecord::from_csv_row(&missing.to_csv_row()).unwrap(), missing);
        assert!(report(&[missing]).contains('—'));
    }

    #[test]
    fn config_text_and_validation() {
        let mut c = SweepConfig::default();
        c.apply_kv_text("# sweep\nnbar-min = 0.5\nplanes=21\nmode = both\nprimal = true\ncache-dir=/tmp/x\n")
            .unwrap();
        assert_eq!((c.nbar_min, c.planes_per_edge, c.mode, c.primal), (0.5, 21, SweepMode::Both, true));
        assert_eq!(c.cache_dir, Some(PathBuf::from("/tmp/x")));
        assert!(c.apply_kv_text("bogus = 1").is_err());
        assert!(c.apply_kv_text("planes").is_err());
        let bad = SweepConfig { nbar_step: 0.0, ..SweepConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SweepConfig { nbar_min: 2.0, nbar_max: 1.0, ..SweepConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn rounding_is_stable() {
        for x in [0.1 + 0.2, 1.0 / 3.0, 0.998_772_536_912_345_6, 1e-13] {
            let r = round12(x);
            assert_eq!(r.to_string().parse::<f64>().unwrap(), r);
            assert_eq!(round12(r), r);
        }
    }
}
