//! Baseline-residual resonance detection.
//!
//! A low-order polynomial is fit to the sweep and subtracted. The window
//! around the largest excursion is then excluded and the baseline refit, so
//! a narrow resonance is not partly absorbed by the polynomial. Peaks are
//! strict local maxima of the residual at or above the threshold.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::defaults;
use crate::error::{domain, Result};
use crate::synth::Sweep;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    /// Polynomial degree of the baseline.
    pub baseline_order: usize,
    /// Minimum residual height of a reported peak (dB).
    pub peak_threshold: f64,
    /// Minimum spacing between reported peaks (Hz).
    pub min_peak_separation: f64,
    /// When false, a [`Detector`] keeps the first baseline it fits.
    pub refit_every_sweep: bool,
    /// Half-width of the window excluded around a peak during refits (Hz).
    pub mask_half_width: f64,
    /// Maximum number of excluded windows.
    pub mask_passes: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            baseline_order: defaults::BASELINE_ORDER,
            peak_threshold: defaults::PEAK_THRESHOLD_DB,
            min_peak_separation: defaults::MIN_PEAK_SEPARATION,
            refit_every_sweep: true,
            mask_half_width: defaults::PEAK_MASK_HALF_WIDTH,
            mask_passes: defaults::PEAK_MASK_PASSES,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.baseline_order < 1 {
            return Err(domain("baseline_order must be >= 1"));
        }
        if !(self.peak_threshold.is_finite() && self.peak_threshold > 0.0) {
            return Err(domain(format!(
                "peak_threshold must be > 0, got {}",
                self.peak_threshold
            )));
        }
        if !(self.min_peak_separation.is_finite() && self.min_peak_separation >= 0.0) {
            return Err(domain("min_peak_separation must be >= 0"));
        }
        if !(self.mask_half_width.is_finite() && self.mask_half_width >= 0.0) {
            return Err(domain("mask_half_width must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    #[serde(rename = "peak_frequency_hz")]
    pub peak_frequency: f64,
    /// Residual above the baseline (dB).
    #[serde(rename = "peak_height_db")]
    pub peak_height: f64,
    pub snr: f64,
    #[serde(rename = "baseline_residual_sigma_db")]
    pub baseline_residual_sigma: f64,
}

/// Fitted baseline together with the residual it leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineFit {
    pub baseline: Vec<f64>,
    pub residual: Vec<f64>,
    /// Points that took part in the final fit.
    pub used: Vec<bool>,
    /// Population standard deviation of the residual over `used` points.
    pub sigma: f64,
}

fn normalized(freqs: &[f64]) -> Result<Vec<f64>> {
    if freqs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain(
            "frequency grid must be strictly increasing (duplicate or unordered frequencies)",
        ));
    }
    let lo = freqs[0];
    let hi = freqs[freqs.len() - 1];
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    Ok(freqs.iter().map(|f| (f - mid) / half).collect())
}

fn polyfit(u: &[f64], y: &[f64], used: &[bool], order: usize) -> Result<Vec<f64>> {
    let rows: Vec<usize> = (0..u.len()).filter(|&i| used[i]).collect();
    if rows.len() < order + 2 {
        return Err(domain(format!(
            "{} points cannot support a degree-{order} fit",
            rows.len()
        )));
    }
    let a = DMatrix::from_fn(rows.len(), order + 1, |r, c| u[rows[r]].powi(c as i32));
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|&i| y[i]));
    let coeffs = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| domain(format!("baseline fit failed: {e}")))?;
    Ok(u.iter()
        .map(|&x| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c))
        .collect())
}

/// Least-squares polynomial of degree `order` over the whole sweep.
pub fn fit_baseline(sweep: &Sweep, order: usize) -> Result<Vec<f64>> {
    if sweep.len() != sweep.magnitudes_db.len() {
        return Err(domain("frequency/magnitude length mismatch"));
    }
    if sweep.len() <= order + 1 {
        return Err(domain(format!(
            "{} points cannot support a degree-{order} fit",
            sweep.len()
        )));
    }
    let u = normalized(&sweep.frequencies)?;
    polyfit(&u, &sweep.magnitudes_db, &vec![true; u.len()], order)
}

fn population_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = values
        .clone()
        .fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    if n == 0 {
        return 0.0;
    }
    let mean = sum / n as f64;
    (values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt()
}

/// Baseline fit with peak windows excluded, as used by the detector.
pub fn fit_masked_baseline(sweep: &Sweep, cfg: &DetectorConfig) -> Result<BaselineFit> {
    cfg.validate()?;
    let order = cfg.baseline_order;
    if sweep.len() <= order + 1 || sweep.magnitudes_db.len() != sweep.len() {
        return Err(domain(format!(
            "{} points cannot support a degree-{order} fit",
            sweep.len()
        )));
    }
    let f = &sweep.frequencies;
    let y = &sweep.magnitudes_db;
    let u = normalized(f)?;
    let mut used = vec![true; u.len()];
    let mut baseline = polyfit(&u, y, &used, order)?;
    let mut residual: Vec<f64> = y.iter().zip(&baseline).map(|(a, b)| a - b).collect();

    let reach = cfg.mask_half_width * (1.0 + 1e-9);
    for pass in 0..cfg.mask_passes {
        let Some(j) = (0..u.len())
            .filter(|&i| used[i])
            .max_by(|&a, &b| residual[a].total_cmp(&residual[b]))
        else {
            break;
        };
        // The first window always goes around the top excursion; later ones
        // only around excursions that look like a second resonance.
        if pass > 0 && residual[j] < 0.5 * cfg.peak_threshold {
            break;
        }
        let next: Vec<bool> = used
            .iter()
            .zip(f)
            .map(|(&m, &x)| m && (x - f[j]).abs() > reach)
            .collect();
        if next.iter().filter(|&&m| m).count() < order + 2 {
            break;
        }
        used = next;
        baseline = polyfit(&u, y, &used, order)?;
        residual = y.iter().zip(&baseline).map(|(a, b)| a - b).collect();
    }
    let sigma = population_std(
        residual
            .iter()
            .zip(&used)
            .filter(|(_, &m)| m)
            .map(|(r, _)| *r),
    );
    Ok(BaselineFit {
        baseline,
        residual,
        used,
        sigma,
    })
}

/// Peaks of a residual, highest first.
pub fn pick_peaks(
    frequencies: &[f64],
    residual: &[f64],
    sigma: f64,
    cfg: &DetectorConfig,
) -> Vec<PeakReport> {
    let n = residual.len();
    let mut cands: Vec<usize> = (1..n.saturating_sub(1))
        .filter(|&i| {
            residual[i] > residual[i - 1]
                && residual[i] > residual[i + 1]
                && residual[i] >= cfg.peak_threshold
        })
        .collect();
    cands.sort_by(|&a, &b| residual[b].total_cmp(&residual[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in cands {
        if kept
            .iter()
            .all(|&k| (frequencies[k] - frequencies[i]).abs() >= cfg.min_peak_separation)
        {
            kept.push(i);
        }
    }
    kept.into_iter()
        .map(|i| PeakReport {
            peak_frequency: frequencies[i],
            peak_height: residual[i],
            // A perfectly clean residual has no noise floor to compare with.
            snr: if sigma > 0.0 {
                residual[i] / sigma
            } else {
                f64::MAX
            },
            baseline_residual_sigma: sigma,
        })
        .collect()
}

pub fn detect_peaks(sweep: &Sweep, cfg: &DetectorConfig) -> Result<Vec<PeakReport>> {
    let fit = fit_masked_baseline(sweep, cfg)?;
    Ok(pick_peaks(
        &sweep.frequencies,
        &fit.residual,
        fit.sigma,
        cfg,
    ))
}

/// Stateful detector for a stream of sweeps. With `refit_every_sweep` off it
/// keeps the first baseline for as long as the frequency grid is unchanged.
/// Not meant to be shared between threads; use one per stream.
#[derive(Debug, Clone)]
pub struct Detector {
    cfg: DetectorConfig,
    cached: Option<(Vec<f64>, BaselineFit)>,
}

impl Detector {
    pub fn new(cfg: DetectorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, cached: None })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    pub fn detect(&mut self, sweep: &Sweep) -> Result<Vec<PeakReport>> {
        if self.cfg.refit_every_sweep {
            return detect_peaks(sweep, &self.cfg);
        }
        let stale = !matches!(&self.cached, Some((grid, _)) if *grid == sweep.frequencies);
        if stale {
            self.cached = Some((
                sweep.frequencies.clone(),
                fit_masked_baseline(sweep, &self.cfg)?,
            ));
        }
        let (_, fit) = self.cached.as_ref().expect("cache filled above");
        let residual: Vec<f64> = sweep
            .magnitudes_db
            .iter()
            .zip(&fit.baseline)
            .map(|(a, b)| a - b)
            .collect();
        let sigma = population_std(
            residual
                .iter()
                .zip(&fit.used)
                .filter(|(_, &m)| m)
                .map(|(r, _)| *r),
        );
        Ok(pick_peaks(&sweep.frequencies, &residual, sigma, &self.cfg))
    }
}

/// (mean with sensor − mean without) / std without, at the grid point
/// nearest `at_frequency`. The standard deviation is the population one.
pub fn compute_snr(
    traces_with: &[Sweep],
    traces_without: &[Sweep],
    at_frequency: f64,
) -> Result<f64> {
    if traces_with.len() < 2 || traces_without.len() < 2 {
        return Err(domain("each trace set needs at least 2 sweeps"));
    }
    let grid = &traces_without[0].frequencies;
    if grid.is_empty() {
        return Err(domain("empty sweep"));
    }
    if traces_with
        .iter()
        .chain(traces_without)
        .any(|s| s.frequencies != *grid || s.magnitudes_db.len() != grid.len())
    {
        return Err(domain("all traces must share one frequency grid"));
    }
    let i = traces_without[0].nearest_index(at_frequency);
    let with: Vec<f64> = traces_with.iter().map(|s| s.magnitudes_db[i]).collect();
    let without: Vec<f64> = traces_without.iter().map(|s| s.magnitudes_db[i]).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let num = mean(&with) - mean(&without);
    if num == 0.0 {
        return Ok(0.0);
    }
    let sd = population_std(without.iter().copied());
    if sd == 0.0 {
        return Err(domain(
            "without-sensor traces have zero spread; SNR is undefined",
        ));
    }
    Ok(num / sd)
}
