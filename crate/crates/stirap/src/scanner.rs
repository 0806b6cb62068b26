//! Parameter-landscape engine for the twin identical-Gaussian control scheme
//! on the reduced three-level system, plus derivative-free optimization of
//! few-parameter transfer problems.
//!
//! A scan point prepares `cos(alpha)|1> + sin(alpha)|3>`, drives it with two
//! same-shape Gaussian pulses (pump on the 1-2 transition, Stokes on 2-3),
//! and records the final populations. Negative delay means the pump precedes
//! the Stokes pulse. Twin carriers are referenced to the grid origin rather
//! than to the envelope centers: a delay change then moves only the envelope,
//! not the carrier phase underneath it, which keeps the relative phase `phi`
//! an independent scan coordinate. Center-referenced carriers would fold a
//! delay-dependent phase into every column of a phase scan.
//!
//! Points propagate with the full carrier by default; the rotating-frame
//! mode drops counter-rotating terms for speed and is the right basis for
//! cross-checking analytic landscapes. Scans contain no randomness, and each
//! grid point is written to its own slot, so parallel and sequential runs
//! produce bit-identical landscapes.

use nalgebra::{DVector, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::levels::GROUND_SPLITTING_EV;
use crate::propagator::{Coupling, DriveField, PropError, Propagator, TimeGrid};
use crate::pulses::CompositeEnvelope;
use crate::rwa;
use crate::units;

/// Intermediate-level energy of the reduced three-level system, eV: the
/// s-hole state the twin carriers drive through.
pub const INTERMEDIATE_EV: f64 = 11.267;

/// Default per-pulse peak intensity for landscape scans, TW/cm^2.
pub const DEFAULT_SCAN_INTENSITY_TW: f64 = 3.38;

/// Default 1/e field half-width of the twin pulses, fs.
pub const DEFAULT_SCAN_GAMMA_FS: f64 = 50.0;

/// Default fixed pump-Stokes delay of a phase scan, fs.
pub const DEFAULT_PHASE_SCAN_DELAY_FS: f64 = -12.75;

/// Default propagation window, fs: long enough that 50 fs twins with delays
/// up to +-80 fs enter and leave with tails below the envelope floor.
pub const DEFAULT_SCAN_WINDOW_FS: f64 = 410.0;

/// Default scan time step, as.
pub const DEFAULT_SCAN_DT_AS: f64 = 13.0;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("{axis} axis needs at least 2 points, got {n}")]
    TooFewPoints { axis: &'static str, n: usize },
    #[error("{what} must be finite, got {value}")]
    NonFinite { what: &'static str, value: f64 },
    #[error("mixing angle {0} outside [0, pi/2]")]
    MixingAngle(f64),
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("optimizer takes 1 to 3 free parameters, got {0}")]
    FreeParamCount(usize),
    #[error("free parameter {name:?}: bounds [{lo}, {hi}] empty or not finite")]
    BadBounds { name: &'static str, lo: f64, hi: f64 },
    #[error("free parameter {name:?}: coarse stage needs at least 2 points, got {n}")]
    BadCoarse { name: &'static str, n: usize },
    #[error("baseline has {got} values for {expected} free parameters")]
    BaselineMismatch { expected: usize, got: usize },
    #[error("unknown free parameter {0:?}; transfer setup exposes dtau_fs, phi, intensity_tw")]
    UnknownParam(String),
    #[error(transparent)]
    Prop(#[from] PropError),
}

/// Inclusive evenly spaced grid from `a` to `b`; `n >= 2` gives both ends.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![a];
    }
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

/// The twin pulse pair: two Gaussians of the same peak intensity and width,
/// distinguished only by carrier frequency, delay, and relative phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwinPulses {
    /// Peak intensity of each pulse, TW/cm^2.
    pub intensity_tw: f64,
    /// 1/e half-width of the field envelope, fs.
    pub gamma_fs: f64,
    /// Pump carrier photon energy, eV; drives the 1-2 transition.
    pub pump_carrier_ev: f64,
    /// Stokes carrier photon energy, eV; drives the 2-3 transition.
    pub stokes_carrier_ev: f64,
}

impl Default for TwinPulses {
    fn default() -> Self {
        Self::resonant(DEFAULT_SCAN_INTENSITY_TW, DEFAULT_SCAN_GAMMA_FS)
    }
}

impl TwinPulses {
    /// Both carriers resonant with the model levels.
    pub fn resonant(intensity_tw: f64, gamma_fs: f64) -> Self {
        Self {
            intensity_tw,
            gamma_fs,
            pump_carrier_ev: INTERMEDIATE_EV,
            stokes_carrier_ev: INTERMEDIATE_EV - GROUND_SPLITTING_EV,
        }
    }

    /// Pump carrier moved off the intermediate level, Stokes moved in
    /// lockstep so the pair stays two-photon resonant.
    pub fn retuned(pump_carrier_ev: f64, intensity_tw: f64, gamma_fs: f64) -> Self {
        Self {
            intensity_tw,
            gamma_fs,
            pump_carrier_ev,
            stokes_carrier_ev: pump_carrier_ev - GROUND_SPLITTING_EV,
        }
    }

    /// Common single-photon detuning from the intermediate level, a.u.
    pub fn detuning_au(&self) -> f64 {
        units::ev_to_au(self.pump_carrier_ev - INTERMEDIATE_EV)
    }
}

/// Which pulse parameter the column axis sweeps; the other stays fixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ScanAxis {
    /// Columns sweep the pump-Stokes delay, fs, at fixed relative phase.
    Delay { phi: f64 },
    /// Columns sweep the relative carrier phase, rad, at fixed delay.
    Phase { dtau_fs: f64 },
}

impl ScanAxis {
    /// CSV column header for the swept coordinate.
    pub fn column_name(&self) -> &'static str {
        match self {
            ScanAxis::Delay { .. } => "dtau_fs",
            ScanAxis::Phase { .. } => "phi",
        }
    }
}

/// How scan points are propagated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub enum ScanMode {
    /// Full-carrier split-operator integration; the default.
    #[default]
    FullCarrier,
    /// Rotating-frame model: much faster, no counter-rotating terms.
    Rwa,
}

/// A validated scan specification: rows are initial mixing angles, columns
/// the swept pulse coordinate, and every point shares the same pulse pair,
/// window, and step.
#[derive(Clone, Debug, Serialize)]
pub struct ScanGrid {
    /// Row coordinates: initial mixing angles in [0, pi/2], rad.
    pub alphas: Vec<f64>,
    /// Column coordinates: delays in fs or phases in rad, per `axis`.
    pub coords: Vec<f64>,
    pub axis: ScanAxis,
    pub pulses: TwinPulses,
    /// Propagation window [0, window_fs]; envelope centers straddle the
    /// window midpoint by half the delay each way.
    pub window_fs: f64,
    pub dt_as: f64,
    pub mode: ScanMode,
}

impl ScanGrid {
    /// Grid with the default window, step, and full-carrier mode.
    pub fn new(
        alphas: Vec<f64>,
        coords: Vec<f64>,
        axis: ScanAxis,
        pulses: TwinPulses,
    ) -> Result<Self, ScanError> {
        let grid = Self {
            alphas,
            coords,
            axis,
            pulses,
            window_fs: DEFAULT_SCAN_WINDOW_FS,
            dt_as: DEFAULT_SCAN_DT_AS,
            mode: ScanMode::default(),
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn with_window(mut self, window_fs: f64, dt_as: f64) -> Result<Self, ScanError> {
        self.window_fs = window_fs;
        self.dt_as = dt_as;
        self.validate()?;
        Ok(self)
    }

    pub fn with_mode(mut self, mode: ScanMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), ScanError> {
        for (axis, v) in [("alpha", &self.alphas), ("column", &self.coords)] {
            if v.len() < 2 {
                return Err(ScanError::TooFewPoints { axis, n: v.len() });
            }
            if let Some(&bad) = v.iter().find(|x| !x.is_finite()) {
                return Err(ScanError::NonFinite {
                    what: "grid coordinate",
                    value: bad,
                });
            }
        }
        for &a in &self.alphas {
            if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&a) {
                return Err(ScanError::MixingAngle(a));
            }
        }
        let fixed = match self.axis {
            ScanAxis::Delay { phi } => ("fixed phase", phi),
            ScanAxis::Phase { dtau_fs } => ("fixed delay", dtau_fs),
        };
        for (what, value) in [
            ("pulse intensity", self.pulses.intensity_tw),
            ("pump carrier", self.pulses.pump_carrier_ev),
            ("Stokes carrier", self.pulses.stokes_carrier_ev),
            fixed,
        ] {
            if !value.is_finite() {
                return Err(ScanError::NonFinite { what, value });
            }
        }
        if self.pulses.intensity_tw < 0.0 {
            return Err(ScanError::NonPositive {
                what: "pulse intensity",
                value: self.pulses.intensity_tw,
            });
        }
        for (what, value) in [
            ("pulse width", self.pulses.gamma_fs),
            ("window", self.window_fs),
            ("time step", self.dt_as),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ScanError::NonPositive { what, value });
            }
        }
        Ok(())
    }
}

/// Final rotating-frame state of one twin-pulse run from
/// `cos(alpha)|1> + sin(alpha)|3>`. The rotating frame strips the
/// carrier-locked diagonal phases, so superposition targets with real
/// coefficients are meaningful overlap references.
pub fn twin_final_state(
    pulses: &TwinPulses,
    alpha: f64,
    dtau_fs: f64,
    phi: f64,
    window_fs: f64,
    dt_as: f64,
    mode: ScanMode,
) -> Result<Vector3<Complex64>, ScanError> {
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&alpha) {
        return Err(ScanError::MixingAngle(alpha));
    }
    let e0 = units::field_from_tw(pulses.intensity_tw);
    let g = units::fs_to_au(pulses.gamma_fs);
    let mid = window_fs / 2.0;
    let t_p = units::fs_to_au(mid + dtau_fs / 2.0);
    let t_s = units::fs_to_au(mid - dtau_fs / 2.0);
    let grid = TimeGrid {
        t_start_fs: 0.0,
        t_end_fs: window_fs,
        dt_as,
    };
    match mode {
        ScanMode::FullCarrier => {
            let envelope = |center: f64| CompositeEnvelope {
                e0_au: e0,
                weight_l: 1.0,
                weight_r: 0.0,
                center_l_au: center,
                center_r_au: center,
                gamma_l_au: g,
                gamma_r_au: g,
            };
            let w_p = units::ev_to_au(pulses.pump_carrier_ev);
            let w_s = units::ev_to_au(pulses.stokes_carrier_ev);
            let mut pump = DriveField::new();
            pump.push_composite(envelope(t_p), w_p, 0.0);
            let mut stokes = DriveField::new();
            stokes.push_composite(envelope(t_s), w_s, phi);
            let prop = Propagator {
                energies_au: vec![
                    0.0,
                    units::ev_to_au(INTERMEDIATE_EV),
                    units::ev_to_au(GROUND_SPLITTING_EV),
                ],
                coupling: Coupling::Structured {
                    pump,
                    stokes,
                    mu12: 1.0,
                    mu23: 1.0,
                },
            };
            let initial = DVector::from_vec(vec![
                Complex64::new(alpha.cos(), 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(alpha.sin(), 0.0),
            ]);
            let traj = prop.propagate(&initial, &grid, usize::MAX)?;
            let fin = traj.final_state();
            let lab = Vector3::new(fin[0], fin[1], fin[2]);
            Ok(rwa::to_rotating_frame(
                &lab,
                grid.t_au(grid.n_steps()),
                w_p,
                w_s,
                units::ev_to_au(INTERMEDIATE_EV),
            ))
        }
        ScanMode::Rwa => {
            let omega_p = move |t: f64| e0 * (-((t - t_p) / g).powi(2)).exp();
            let omega_s = move |t: f64| e0 * (-((t - t_s) / g).powi(2)).exp();
            let initial = Vector3::new(
                Complex64::new(alpha.cos(), 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(alpha.sin(), 0.0),
            );
            if grid.n_steps() == 0 {
                return Err(ScanError::Prop(PropError::EmptyGrid));
            }
            let (fin, _) = rwa::propagate_rwa(
                pulses.detuning_au(),
                phi,
                omega_p,
                omega_s,
                &initial,
                &grid,
                usize::MAX,
            );
            Ok(fin)
        }
    }
}

/// Final populations for one twin-pulse run; see [`twin_final_state`].
pub fn twin_final_populations(
    pulses: &TwinPulses,
    alpha: f64,
    dtau_fs: f64,
    phi: f64,
    window_fs: f64,
    dt_as: f64,
    mode: ScanMode,
) -> Result<[f64; 3], ScanError> {
    let psi = twin_final_state(pulses, alpha, dtau_fs, phi, window_fs, dt_as, mode)?;
    Ok([psi[0].norm_sqr(), psi[1].norm_sqr(), psi[2].norm_sqr()])
}

/// Final populations at one grid point.
pub fn eval_point(grid: &ScanGrid, alpha: f64, coord: f64) -> Result<[f64; 3], ScanError> {
    let (dtau_fs, phi) = match grid.axis {
        ScanAxis::Delay { phi } => (coord, phi),
        ScanAxis::Phase { dtau_fs } => (dtau_fs, coord),
    };
    twin_final_populations(
        &grid.pulses,
        alpha,
        dtau_fs,
        phi,
        grid.window_fs,
        grid.dt_as,
        grid.mode,
    )
}

/// Final-population maps over a scan grid. Row-major storage at index
/// `row * n_cols + col`; rows follow `grid.alphas`, columns `grid.coords`.
/// Points whose propagation failed hold NaN in all three maps and are listed
/// in `missing`.
#[derive(Clone, Debug)]
pub struct Landscape {
    pub grid: ScanGrid,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub p3: Vec<f64>,
    pub missing: Vec<(usize, usize)>,
}

impl Landscape {
    pub fn n_rows(&self) -> usize {
        self.grid.alphas.len()
    }

    pub fn n_cols(&self) -> usize {
        self.grid.coords.len()
    }

    pub fn at(&self, row: usize, col: usize) -> [f64; 3] {
        let i = row * self.n_cols() + col;
        [self.p1[i], self.p2[i], self.p3[i]]
    }

    fn component(&self, comp: usize) -> &[f64] {
        match comp {
            0 => &self.p1,
            1 => &self.p2,
            2 => &self.p3,
            _ => panic!("population component index {comp} out of range"),
        }
    }

    /// Largest |P1+P2+P3 - 1| over completed points; 0 if none completed.
    pub fn closure_max(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.p1.len() {
            let s = self.p1[i] + self.p2[i] + self.p3[i];
            if s.is_finite() {
                worst = worst.max((s - 1.0).abs());
            }
        }
        worst
    }

    /// Fraction of completed points with P1 + P3 above `thresh`; 0 if no
    /// point completed.
    pub fn frac_p13_above(&self, thresh: f64) -> f64 {
        let mut hits = 0usize;
        let mut done = 0usize;
        for i in 0..self.p1.len() {
            let s = self.p1[i] + self.p3[i];
            if s.is_finite() {
                done += 1;
                if s > thresh {
                    hits += 1;
                }
            }
        }
        if done == 0 {
            0.0
        } else {
            hits as f64 / done as f64
        }
    }

    /// Per-row maximum of one population component (0, 1, or 2), skipping
    /// missing points; rows with no completed point give -inf.
    pub fn row_max(&self, comp: usize) -> Vec<f64> {
        let vals = self.component(comp);
        let nc = self.n_cols();
        (0..self.n_rows())
            .map(|r| {
                vals[r * nc..(r + 1) * nc]
                    .iter()
                    .filter(|v| v.is_finite())
                    .fold(f64::NEG_INFINITY, |m, &v| m.max(v))
            })
            .collect()
    }

    /// Largest |difference| of one component between grid neighbors (along
    /// rows and columns), the smoothness diagnostic. Pairs touching a
    /// missing point are skipped.
    pub fn neighbor_jump_max(&self, comp: usize) -> f64 {
        let vals = self.component(comp);
        let (nr, nc) = (self.n_rows(), self.n_cols());
        let mut worst = 0.0f64;
        for r in 0..nr {
            for c in 0..nc {
                let v = vals[r * nc + c];
                if !v.is_finite() {
                    continue;
                }
                if c + 1 < nc {
                    let w = vals[r * nc + c + 1];
                    if w.is_finite() {
                        worst = worst.max((v - w).abs());
                    }
                }
                if r + 1 < nr {
                    let w = vals[(r + 1) * nc + c];
                    if w.is_finite() {
                        worst = worst.max((v - w).abs());
                    }
                }
            }
        }
        worst
    }

    /// As [`neighbor_jump_max`](Self::neighbor_jump_max) but only along the
    /// column direction: continuity of each alpha row in the swept
    /// coordinate, independent of the alpha spacing.
    pub fn row_jump_max(&self, comp: usize) -> f64 {
        let vals = self.component(comp);
        let nc = self.n_cols();
        let mut worst = 0.0f64;
        for r in 0..self.n_rows() {
            for c in 0..nc - 1 {
                let (v, w) = (vals[r * nc + c], vals[r * nc + c + 1]);
                if v.is_finite() && w.is_finite() {
                    worst = worst.max((v - w).abs());
                }
            }
        }
        worst
    }

    /// Long-format CSV: one row per grid point with axis headers,
    /// `alpha,<dtau_fs|phi>,P1,P2,P3`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["alpha", self.grid.axis.column_name(), "P1", "P2", "P3"])
            .map_err(std::io::Error::other)?;
        let nc = self.n_cols();
        for (r, &a) in self.grid.alphas.iter().enumerate() {
            for (c, &x) in self.grid.coords.iter().enumerate() {
                let i = r * nc + c;
                wtr.write_record([
                    format!("{a:.9}"),
                    format!("{x:.9}"),
                    format!("{:.12e}", self.p1[i]),
                    format!("{:.12e}", self.p2[i]),
                    format!("{:.12e}", self.p3[i]),
                ])
                .map_err(std::io::Error::other)?;
            }
        }
        wtr.flush()
    }

    /// JSON summary of the landscape optima and diagnostics.
    pub fn summary(&self) -> serde_json::Value {
        let best = |comp: usize| {
            let vals = self.component(comp);
            let mut arg = None;
            let mut top = f64::NEG_INFINITY;
            for (i, &v) in vals.iter().enumerate() {
                if v.is_finite() && v > top {
                    top = v;
                    arg = Some(i);
                }
            }
            match arg {
                Some(i) => serde_json::json!({
                    "value": top,
                    "alpha": self.grid.alphas[i / self.n_cols()],
                    self.grid.axis.column_name(): self.grid.coords[i % self.n_cols()],
                }),
                None => serde_json::Value::Null,
            }
        };
        serde_json::json!({
            "axis": self.grid.axis.column_name(),
            "n_rows": self.n_rows(),
            "n_cols": self.n_cols(),
            "missing": self.missing.len(),
            "closure_max": self.closure_max(),
            "frac_p13_above_0.95": self.frac_p13_above(0.95),
            "neighbor_jump_max_p1": self.neighbor_jump_max(0),
            "best_p1": best(0),
            "best_p3": best(2),
        })
    }
}

/// Run a scan with work-stealing parallelism over grid points.
pub fn scan(grid: &ScanGrid) -> Result<Landscape, ScanError> {
    scan_with(grid, true)
}

/// Run a scan sequentially (`parallel = false`) or in parallel. Each point
/// is an independent computation written to its own slot, so the two paths
/// agree bit for bit.
pub fn scan_with(grid: &ScanGrid, parallel: bool) -> Result<Landscape, ScanError> {
    grid.validate()?;
    let nc = grid.coords.len();
    let total = grid.alphas.len() * nc;
    let eval = |i: &usize| -> Option<[f64; 3]> {
        eval_point(grid, grid.alphas[i / nc], grid.coords[i % nc]).ok()
    };
    let indices: Vec<usize> = (0..total).collect();
    let results: Vec<Option<[f64; 3]>> = if parallel {
        indices.par_iter().map(eval).collect()
    } else {
        indices.iter().map(eval).collect()
    };
    let mut land = Landscape {
        grid: grid.clone(),
        p1: vec![f64::NAN; total],
        p2: vec![f64::NAN; total],
        p3: vec![f64::NAN; total],
        missing: Vec::new(),
    };
    for (i, res) in results.into_iter().enumerate() {
        match res {
            Some([a, b, c]) => {
                land.p1[i] = a;
                land.p2[i] = b;
                land.p3[i] = c;
            }
            None => land.missing.push((i / nc, i % nc)),
        }
    }
    Ok(land)
}

/// Landscape over (alpha, delay) at fixed relative phase. Ranges are
/// `(start, stop, n)` inclusive.
pub fn scan_delay(
    alpha_range: (f64, f64, usize),
    dtau_range_fs: (f64, f64, usize),
    phi: f64,
    pulses: TwinPulses,
) -> Result<Landscape, ScanError> {
    let grid = ScanGrid::new(
        linspace(alpha_range.0, alpha_range.1, alpha_range.2),
        linspace(dtau_range_fs.0, dtau_range_fs.1, dtau_range_fs.2),
        ScanAxis::Delay { phi },
        pulses,
    )?;
    scan(&grid)
}

/// Landscape over (alpha, phase) at fixed delay; see [`scan_delay`].
pub fn scan_phase(
    alpha_range: (f64, f64, usize),
    phi_range: (f64, f64, usize),
    dtau_fs: f64,
    pulses: TwinPulses,
) -> Result<Landscape, ScanError> {
    let grid = ScanGrid::new(
        linspace(alpha_range.0, alpha_range.1, alpha_range.2),
        linspace(phi_range.0, phi_range.1, phi_range.2),
        ScanAxis::Phase { dtau_fs },
        pulses,
    )?;
    scan(&grid)
}

/// One free scalar of a derivative-free search.
#[derive(Clone, Copy, Debug)]
pub struct FreeParam {
    pub name: &'static str,
    pub lo: f64,
    pub hi: f64,
    /// Points along this axis in the coarse stage, >= 2.
    pub coarse: usize,
}

/// Outcome of [`optimize_scalar`] or [`optimize_transfer`].
#[derive(Clone, Debug, Serialize)]
pub struct Optimum {
    /// Free-parameter names with their best values, in input order.
    pub params: Vec<(String, f64)>,
    /// Objective at `params`.
    pub objective: f64,
    /// Objective at the caller's baseline point.
    pub baseline: f64,
    /// False when no probed point beat the baseline; `params` then echo the
    /// baseline values.
    pub improved: bool,
    pub evaluations: usize,
}

/// Maximize `objective` over 1 to 3 bounded parameters: exhaustive coarse
/// grid, then compass refinement from the best point with step halving down
/// to 1e-6 of each range. Deterministic by construction: fixed probe order,
/// no randomness, and ties keep the earlier point. A `NaN` objective value
/// never wins, so per-point failures mapped to NaN or -inf are skipped.
pub fn optimize_scalar<F>(
    objective: F,
    free: &[FreeParam],
    baseline: &[f64],
) -> Result<Optimum, ScanError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if free.is_empty() || free.len() > 3 {
        return Err(ScanError::FreeParamCount(free.len()));
    }
    for p in free {
        if !(p.lo.is_finite() && p.hi.is_finite() && p.lo < p.hi) {
            return Err(ScanError::BadBounds {
                name: p.name,
                lo: p.lo,
                hi: p.hi,
            });
        }
        if p.coarse < 2 {
            return Err(ScanError::BadCoarse {
                name: p.name,
                n: p.coarse,
            });
        }
    }
    if baseline.len() != free.len() {
        return Err(ScanError::BaselineMismatch {
            expected: free.len(),
            got: baseline.len(),
        });
    }

    let base_val = objective(baseline);
    let mut evaluations = 1usize;
    let mut best_x = baseline.to_vec();
    let mut best_v = base_val;
    let better = |v: f64, cur: f64| v > cur || (cur.is_nan() && !v.is_nan());

    // Coarse stage: full cartesian grid, row-major over the free parameters.
    let axes: Vec<Vec<f64>> = free.iter().map(|p| linspace(p.lo, p.hi, p.coarse)).collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let point = |mut i: usize| -> Vec<f64> {
        let mut x = vec![0.0; axes.len()];
        for d in (0..axes.len()).rev() {
            x[d] = axes[d][i % axes[d].len()];
            i /= axes[d].len();
        }
        x
    };
    let coarse: Vec<(Vec<f64>, f64)> = (0..total)
        .into_par_iter()
        .map(|i| {
            let x = point(i);
            let v = objective(&x);
            (x, v)
        })
        .collect();
    evaluations += total;
    for (x, v) in coarse {
        if better(v, best_v) {
            best_v = v;
            best_x = x;
        }
    }

    // Refinement: compass probes +-h along each axis, halving h on stall.
    let mut h: Vec<f64> = free
        .iter()
        .map(|p| (p.hi - p.lo) / (p.coarse - 1) as f64 / 2.0)
        .collect();
    let tol: Vec<f64> = free.iter().map(|p| (p.hi - p.lo) * 1e-6).collect();
    for _round in 0..500 {
        if h.iter().zip(&tol).all(|(s, t)| s < t) {
            break;
        }
        let mut probes = Vec::with_capacity(2 * free.len());
        for d in 0..free.len() {
            for sign in [-1.0, 1.0] {
                let mut x = best_x.clone();
                x[d] = (x[d] + sign * h[d]).clamp(free[d].lo, free[d].hi);
                if x[d] != best_x[d] {
                    probes.push(x);
                }
            }
        }
        let vals: Vec<f64> = probes.par_iter().map(|x| objective(x)).collect();
        evaluations += vals.len();
        let mut moved = false;
        for (x, v) in probes.into_iter().zip(vals) {
            if better(v, best_v) {
                best_v = v;
                best_x = x;
                moved = true;
            }
        }
        if !moved {
            for s in &mut h {
                *s *= 0.5;
            }
        }
    }

    let improved = better(best_v, base_val) && best_x != baseline;
    let (x, v) = if improved {
        (best_x, best_v)
    } else {
        (baseline.to_vec(), base_val)
    };
    Ok(Optimum {
        params: free.iter().map(|p| p.name.to_string()).zip(x).map(|(n, v)| (n, v)).collect(),
        objective: v,
        baseline: base_val,
        improved,
        evaluations,
    })
}

/// Baseline configuration for [`optimize_transfer`]: the pulse pair plus the
/// delay and phase values that freed parameters override.
#[derive(Clone, Copy, Debug)]
pub struct TransferSetup {
    pub pulses: TwinPulses,
    pub dtau_fs: f64,
    pub phi: f64,
    pub window_fs: f64,
    pub dt_as: f64,
    pub mode: ScanMode,
}

impl Default for TransferSetup {
    fn default() -> Self {
        Self {
            pulses: TwinPulses::default(),
            dtau_fs: DEFAULT_PHASE_SCAN_DELAY_FS,
            phi: 0.0,
            window_fs: DEFAULT_SCAN_WINDOW_FS,
            dt_as: DEFAULT_SCAN_DT_AS,
            mode: ScanMode::default(),
        }
    }
}

impl TransferSetup {
    fn apply(&self, free: &[FreeParam], x: &[f64]) -> (TwinPulses, f64, f64) {
        let mut pulses = self.pulses;
        let mut dtau = self.dtau_fs;
        let mut phi = self.phi;
        for (p, &v) in free.iter().zip(x) {
            match p.name {
                "dtau_fs" => dtau = v,
                "phi" => phi = v,
                "intensity_tw" => pulses.intensity_tw = v,
                _ => unreachable!("names validated before the search"),
            }
        }
        (pulses, dtau, phi)
    }

    fn baseline_of(&self, p: &FreeParam) -> f64 {
        match p.name {
            "dtau_fs" => self.dtau_fs,
            "phi" => self.phi,
            "intensity_tw" => self.pulses.intensity_tw,
            _ => unreachable!("names validated before the search"),
        }
    }
}

/// Maximize the rotating-frame overlap with `cos(beta)|1> + sin(beta)|3>`
/// for a start in `cos(alpha)|1> + sin(alpha)|3>`, freeing up to three of
/// {`dtau_fs`, `phi`, `intensity_tw`} within bounds. The baseline is the
/// setup's own value of each freed parameter; when nothing beats it the
/// baseline comes back with `improved = false`. Points whose propagation
/// fails score NaN and are skipped.
pub fn optimize_transfer(
    initial_alpha: f64,
    target_beta: f64,
    free: &[FreeParam],
    setup: &TransferSetup,
) -> Result<Optimum, ScanError> {
    for ang in [initial_alpha, target_beta] {
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&ang) {
            return Err(ScanError::MixingAngle(ang));
        }
    }
    for p in free {
        if !matches!(p.name, "dtau_fs" | "phi" | "intensity_tw") {
            return Err(ScanError::UnknownParam(p.name.to_string()));
        }
    }
    let target = (target_beta.cos(), target_beta.sin());
    let objective = |x: &[f64]| -> f64 {
        let (pulses, dtau, phi) = setup.apply(free, x);
        match twin_final_state(
            &pulses,
            initial_alpha,
            dtau,
            phi,
            setup.window_fs,
            setup.dt_as,
            setup.mode,
        ) {
            Ok(psi) => (psi[0].scale(target.0) + psi[2].scale(target.1)).norm_sqr(),
            Err(_) => f64::NAN,
        }
    };
    let baseline: Vec<f64> = free.iter().map(|p| setup.baseline_of(p)).collect();
    optimize_scalar(objective, free, &baseline)
}
