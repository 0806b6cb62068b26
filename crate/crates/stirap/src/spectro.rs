//! Transient-absorption probe of the ion: a weak two-color attosecond-train
//! surrogate (two Gaussian XUV components) interrogates the state at a chosen
//! delay, the induced dipole is recorded through a decay window, and the
//! single-atom absorption cross-section follows from the ratio of dipole and
//! probe spectra. Scanning the probe delay turns ground-manifold coherence
//! into line-intensity beats; a control pulse that empties one ground state
//! freezes them.
//!
//! Conventions are fixed throughout: forward transforms carry e^{-i omega t},
//! absorption is sigma(omega) = -(4 pi omega / c) Im[d(omega)/E(omega)], and
//! the probe spectrum is the analytic transform of its Gaussian components,
//! so the probe never contributes discretization error of its own.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dipoles::DipoleOp;
use crate::propagator::{dipole_expectation, Coupling, DriveField, Propagator, TimeGrid};
use crate::pulses::GaussianParams;
use crate::units;

/// Zero-padded transform length; 13 as sampling gives 2.4 meV bins.
pub const FFT_LEN: usize = 1 << 17;

/// Band bins where the probe magnitude falls below this fraction of its
/// peak have no defined response.
pub const PROBE_FLOOR_REL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SpectroError {
    #[error("time and dipole series must share a length of at least 16, got {ts} and {ds}")]
    BadSeries { ts: usize, ds: usize },
    #[error("series of {n} samples exceeds the {max}-point transform")]
    SeriesTooLong { n: usize, max: usize },
    #[error("decay window must be positive, got {tau_fs} fs")]
    BadWindow { tau_fs: f64 },
    #[error(
        "probe spectrum at {omega_ev:.3} eV is below {floor:.0e} of its peak; \
         the response there is undefined"
    )]
    UndefinedResponse { omega_ev: f64, floor: f64 },
    #[error("probe delay {t0_fs} fs opens the window before the state is prepared at {t_start_fs} fs")]
    DelayBeforeStart { t0_fs: f64, t_start_fs: f64 },
    #[error("cross-section non-finite at delay {t0_fs} fs")]
    NonFinite { t0_fs: f64 },
    #[error(transparent)]
    Prop(#[from] crate::propagator::PropError),
}

/// Two weak Gaussian probe components sharing one center and duration.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ProbePair {
    pub intensity_tw: f64,
    pub centers_ev: [f64; 2],
    pub gamma_fs: f64,
}

impl Default for ProbePair {
    /// Probe harmonics bracketing the ground doublet, 1 fs duration, weak
    /// enough that the response stays linear.
    fn default() -> Self {
        ProbePair {
            intensity_tw: 8e-3,
            centers_ev: [16.325, 17.631],
            gamma_fs: 1.0,
        }
    }
}

impl ProbePair {
    pub fn amplitude_au(&self) -> f64 {
        units::field_from_tw(self.intensity_tw)
    }

    /// The two probe pulses centered at `t0_fs`, cosine carriers, zero phase.
    pub fn pulses(&self, t0_fs: f64) -> Vec<GaussianParams> {
        self.centers_ev
            .iter()
            .map(|&c| GaussianParams {
                peak_intensity_tw: self.intensity_tw,
                center_fs: t0_fs,
                width_fs: self.gamma_fs,
                carrier_ev: c,
                phase: 0.0,
            })
            .collect()
    }

    /// |E(omega)| of the pair at `w_au` from the analytic Gaussian transform
    /// (rotating term only; the counter-rotating image is 30 eV away).
    pub fn spectrum_mag_au(&self, w_au: f64) -> f64 {
        let g = units::fs_to_au(self.gamma_fs);
        let pref = self.amplitude_au() * g * PI.sqrt() / 2.0;
        pref
            * self
                .centers_ev
                .iter()
                .map(|&c| {
                    let x = (w_au - units::ev_to_au(c)) * g / 2.0;
                    (-x * x).exp()
                })
                .sum::<f64>()
    }

    /// Largest spectral magnitude, the reference for the response floor.
    pub fn peak_mag_au(&self) -> f64 {
        self.centers_ev
            .iter()
            .map(|&c| self.spectrum_mag_au(units::ev_to_au(c)))
            .fold(0.0, f64::max)
    }
}

/// Windowing and resolution knobs for one absorption computation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AtasConfig {
    /// Decoherence proxy: recorded dipole decays with this constant after
    /// the probe.
    pub tau_fs: f64,
    /// Lead retained before the probe center.
    pub pre_fs: f64,
    /// Tail recorded after the probe center; sets the usable resolution
    /// together with `tau_fs`.
    pub post_fs: f64,
    pub dt_as: f64,
    /// Requested energy band (eV); response is reported only here.
    pub band_ev: (f64, f64),
}

impl Default for AtasConfig {
    fn default() -> Self {
        AtasConfig {
            tau_fs: 10.0,
            pre_fs: 5.0,
            post_fs: 80.0,
            dt_as: 13.0,
            band_ev: (15.9, 18.6),
        }
    }
}

/// Multiplies the post-probe part of `series` by e^{-(t - t_probe)/tau},
/// leaving earlier samples untouched. `tau_au` must be positive; infinity
/// gives the identity.
pub fn apply_window(ts_au: &[f64], series: &[f64], t_probe_au: f64, tau_au: f64) -> Vec<f64> {
    assert!(tau_au > 0.0, "decay window must be positive");
    ts_au
        .iter()
        .zip(series)
        .map(|(&t, &d)| d * (-((t - t_probe_au).max(0.0) / tau_au)).exp())
        .collect()
}

/// Forward transform D(omega_k) = dt sum_n x_n e^{-i omega_k (t_first + n dt)}
/// of a real series, zero-padded to [`FFT_LEN`]; returns the nonnegative
/// frequency bins (omega axis in a.u., complex spectrum).
pub fn forward_spectrum(
    series: &[f64],
    dt_au: f64,
    t_first_au: f64,
) -> Result<(Vec<f64>, Vec<Complex64>), SpectroError> {
    let n = series.len();
    if n > FFT_LEN {
        return Err(SpectroError::SeriesTooLong { n, max: FFT_LEN });
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); FFT_LEN];
    for (b, &x) in buf.iter_mut().zip(series) {
        *b = Complex64::new(x, 0.0);
    }
    FftPlanner::new().plan_fft_forward(FFT_LEN).process(&mut buf);
    let half = FFT_LEN / 2;
    let dw = 2.0 * PI / (FFT_LEN as f64 * dt_au);
    let mut omega = Vec::with_capacity(half + 1);
    let mut spec = Vec::with_capacity(half + 1);
    for (k, b) in buf.iter().enumerate().take(half + 1) {
        let w = k as f64 * dw;
        omega.push(w);
        spec.push(b * dt_au * Complex64::from_polar(1.0, -w * t_first_au));
    }
    Ok((omega, spec))
}

/// Absorption cross-section over one energy band.
#[derive(Clone, Debug)]
pub struct CrossSection {
    pub energies_ev: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl CrossSection {
    /// Nearest band bin to `energy_ev`.
    pub fn bin_of(&self, energy_ev: f64) -> usize {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (k, &e) in self.energies_ev.iter().enumerate() {
            let d = (e - energy_ev).abs();
            if d < dist {
                dist = d;
                best = k;
            }
        }
        best
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["energy_eV", "sigma_au"])?;
        for (e, s) in self.energies_ev.iter().zip(&self.sigma) {
            w.write_record([format!("{e:.6}"), format!("{s:.8e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// sigma(omega) = -(4 pi omega / c) Im[d(omega)/E(omega)] over `band_ev`,
/// from a dipole series sampled uniformly at `ts_au` with the probe centered
/// at `t0_au`. The recorded dipole is decayed with `tau_fs` past the probe
/// before transforming.
pub fn cross_section(
    ts_au: &[f64],
    d_au: &[f64],
    t0_au: f64,
    probe: &ProbePair,
    tau_fs: f64,
    band_ev: (f64, f64),
) -> Result<CrossSection, SpectroError> {
    if ts_au.len() != d_au.len() || ts_au.len() < 16 {
        return Err(SpectroError::BadSeries {
            ts: ts_au.len(),
            ds: d_au.len(),
        });
    }
    if !(tau_fs > 0.0) {
        return Err(SpectroError::BadWindow { tau_fs });
    }
    let dt = ts_au[1] - ts_au[0];
    let sig = apply_window(ts_au, d_au, t0_au, units::fs_to_au(tau_fs));
    let (omega, spec) = forward_spectrum(&sig, dt, ts_au[0])?;

    let (lo, hi) = (units::ev_to_au(band_ev.0), units::ev_to_au(band_ev.1));
    let floor = PROBE_FLOOR_REL * probe.peak_mag_au();
    let mut energies_ev = Vec::new();
    let mut sigma = Vec::new();
    for (w, d) in omega.iter().zip(&spec) {
        if *w <= lo || *w >= hi {
            continue;
        }
        let mag = probe.spectrum_mag_au(*w);
        if mag < floor {
            return Err(SpectroError::UndefinedResponse {
                omega_ev: units::au_to_ev(*w),
                floor: PROBE_FLOOR_REL,
            });
        }
        // E carries the probe-center phase e^{-i w t0}; dividing by it
        // re-references the dipole spectrum to the probe arrival.
        let resp = d * Complex64::from_polar(1.0, w * t0_au);
        sigma.push(-4.0 * PI * w / units::C_AU * (resp.im / mag));
        energies_ev.push(units::au_to_ev(*w));
    }
    Ok(CrossSection { energies_ev, sigma })
}

/// One absorption line: a local maximum above a relative threshold, refined
/// by parabolic interpolation through the three surrounding bins.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Peak {
    pub energy_ev: f64,
    pub height: f64,
}

pub fn find_peaks(energies_ev: &[f64], sigma: &[f64], thresh_rel: f64) -> Vec<Peak> {
    let mut out = Vec::new();
    if sigma.len() < 3 {
        return out;
    }
    let smax = sigma.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let de = energies_ev[1] - energies_ev[0];
    for k in 1..sigma.len() - 1 {
        if sigma[k] > sigma[k - 1] && sigma[k] > sigma[k + 1] && sigma[k] > thresh_rel * smax {
            // Strict maximum makes the curvature denominator negative.
            let d = 0.5 * (sigma[k - 1] - sigma[k + 1])
                / (sigma[k - 1] - 2.0 * sigma[k] + sigma[k + 1]);
            out.push(Peak {
                energy_ev: energies_ev[k] + d * de,
                height: sigma[k],
            });
        }
    }
    out
}

/// A dipole-allowed transition out of a fixed lower state.
#[derive(Clone, Debug, Serialize)]
pub struct BrightLine {
    pub label: String,
    pub lower: usize,
    pub upper: usize,
    pub energy_ev: f64,
}

/// Allowed absorption lines from `lower` with transition energies inside
/// `band_ev`, ascending, labeled `{series}_1` upward.
pub fn bright_lines(
    energies_ev: &[f64],
    dip: &DipoleOp,
    lower: usize,
    band_ev: (f64, f64),
    series: &str,
) -> Vec<BrightLine> {
    let mut found: Vec<(f64, usize)> = (0..dip.dim())
        .filter(|&j| j != lower && dip.mat[(lower, j)] != 0.0)
        .map(|j| (energies_ev[j] - energies_ev[lower], j))
        .filter(|(e, _)| *e > band_ev.0 && *e < band_ev.1)
        .collect();
    found.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    found
        .into_iter()
        .enumerate()
        .map(|(k, (e, j))| BrightLine {
            label: format!("{}_{}", series, k + 1),
            lower,
            upper: j,
            energy_ev: e,
        })
        .collect()
}

/// Dipole expectation sampled through one probe window.
#[derive(Clone, Debug)]
pub struct DipoleTrace {
    pub ts_au: Vec<f64>,
    pub d_au: Vec<f64>,
    pub t0_au: f64,
}

/// One pump-probe experiment: a prepared state, optional control fields and
/// the probe pair, evaluated at chosen probe delays.
pub struct ProbeScene<'a> {
    pub energies_au: &'a [f64],
    pub dip: &'a DipoleOp,
    pub psi_start: DVector<Complex64>,
    pub t_start_fs: f64,
    pub control: DriveField,
    pub probe: ProbePair,
    pub cfg: AtasConfig,
}

impl ProbeScene<'_> {
    /// d(t) through the probe window at delay `t0_fs`: the prepared state is
    /// carried to the window start (analytically when no control field is
    /// present, by split steps otherwise), then stepped through
    /// [t0 - pre, t0 + post] under control plus probe, recording the dipole
    /// expectation after every step.
    pub fn dipole_trace(&self, t0_fs: f64) -> Result<DipoleTrace, SpectroError> {
        self.trace_from(&self.psi_start, units::fs_to_au(self.t_start_fs), t0_fs)
    }

    /// sigma(omega) at one delay.
    pub fn cross_section_at(&self, t0_fs: f64) -> Result<CrossSection, SpectroError> {
        let tr = self.dipole_trace(t0_fs)?;
        cross_section(
            &tr.ts_au,
            &tr.d_au,
            tr.t0_au,
            &self.probe,
            self.cfg.tau_fs,
            self.cfg.band_ev,
        )
    }

    fn field_with_probe(&self, t0_fs: f64) -> DriveField {
        let mut field = self.control.clone();
        for p in self.probe.pulses(t0_fs) {
            field.push_pulse(p);
        }
        field
    }

    fn trace_from(
        &self,
        psi0: &DVector<Complex64>,
        t_at_au: f64,
        t0_fs: f64,
    ) -> Result<DipoleTrace, SpectroError> {
        let cfg = &self.cfg;
        assert!(cfg.dt_as > 0.0 && cfg.pre_fs + cfg.post_fs > 0.0);
        let dt = units::as_to_au(cfg.dt_as);
        let t0 = units::fs_to_au(t0_fs);
        let ta = units::fs_to_au(t0_fs - cfg.pre_fs);
        let tb = units::fs_to_au(t0_fs + cfg.post_fs);
        if ta < t_at_au - 1e-6 {
            return Err(SpectroError::DelayBeforeStart {
                t0_fs,
                t_start_fs: units::au_to_fs(t_at_au),
            });
        }

        let mut psi = psi0.clone();
        let mut t = t_at_au;
        if self.control.is_empty() {
            // Only the ignorable probe tail lives before the window, so the
            // diagonal free evolution to the window start is exact.
            for (c, &e) in psi.iter_mut().zip(self.energies_au) {
                *c *= Complex64::from_polar(1.0, -e * (ta - t));
            }
            t = ta;
        } else if ta > t {
            let n_lead = ((ta - t) / dt).ceil().max(0.0) as usize;
            if n_lead > 0 {
                let prop = Propagator {
                    energies_au: self.energies_au.to_vec(),
                    coupling: Coupling::Full {
                        field: self.field_with_probe(t0_fs),
                        dip: self.dip.clone(),
                    },
                };
                let grid = TimeGrid {
                    t_start_fs: units::au_to_fs(t),
                    t_end_fs: units::au_to_fs(t + n_lead as f64 * dt),
                    dt_as: cfg.dt_as,
                };
                psi = prop.propagate(&psi, &grid, usize::MAX)?.final_state().clone();
                t += n_lead as f64 * dt;
            }
        }

        let n_win = ((tb - t) / dt).ceil() as usize;
        let prop = Propagator {
            energies_au: self.energies_au.to_vec(),
            coupling: Coupling::Full {
                field: self.field_with_probe(t0_fs),
                dip: self.dip.clone(),
            },
        };
        let grid = TimeGrid {
            t_start_fs: units::au_to_fs(t),
            t_end_fs: units::au_to_fs(t + n_win as f64 * dt),
            dt_as: cfg.dt_as,
        };
        let mut ts_au = Vec::with_capacity(n_win);
        let mut d_au = Vec::with_capacity(n_win);
        prop.propagate_observed(&psi, &grid, usize::MAX, |k, t_au, state| {
            if k > 0 {
                ts_au.push(t_au);
                d_au.push(dipole_expectation(state, self.dip));
            }
        })?;
        Ok(DipoleTrace { ts_au, d_au, t0_au: t0 })
    }

    /// Absorption spectrogram over `delays_fs`: one independent propagation
    /// per delay, run in parallel. With control fields present, the shared
    /// history up to the earliest probe window is propagated once and
    /// reused (the probe tail there is below 1e-10 of its peak).
    pub fn scan(
        &self,
        delays_fs: &[f64],
        lines: &[BrightLine],
    ) -> Result<Spectrogram, SpectroError> {
        assert!(!delays_fs.is_empty());
        let dt = units::as_to_au(self.cfg.dt_as);
        let t_start_au = units::fs_to_au(self.t_start_fs);
        let ta_min = units::fs_to_au(
            delays_fs.iter().cloned().fold(f64::INFINITY, f64::min) - self.cfg.pre_fs,
        );

        let prefix = if !self.control.is_empty() && ta_min > t_start_au {
            let n_pre = ((ta_min - t_start_au) / dt).floor().max(0.0) as usize;
            if n_pre > 0 {
                let prop = Propagator {
                    energies_au: self.energies_au.to_vec(),
                    coupling: Coupling::Full {
                        field: self.control.clone(),
                        dip: self.dip.clone(),
                    },
                };
                let grid = TimeGrid {
                    t_start_fs: self.t_start_fs,
                    t_end_fs: units::au_to_fs(t_start_au + n_pre as f64 * dt),
                    dt_as: self.cfg.dt_as,
                };
                let psi = prop
                    .propagate(&self.psi_start, &grid, usize::MAX)?
                    .final_state()
                    .clone();
                Some((psi, t_start_au + n_pre as f64 * dt))
            } else {
                None
            }
        } else {
            None
        };
        let (psi_ref, t_ref) = match &prefix {
            Some((p, t)) => (p, *t),
            None => (&self.psi_start, t_start_au),
        };

        let columns: Vec<CrossSection> = delays_fs
            .par_iter()
            .map(|&t0_fs| {
                let tr = self.trace_from(psi_ref, t_ref, t0_fs)?;
                cross_section(
                    &tr.ts_au,
                    &tr.d_au,
                    tr.t0_au,
                    &self.probe,
                    self.cfg.tau_fs,
                    self.cfg.band_ev,
                )
            })
            .collect::<Result<_, _>>()?;

        for (col, &t0_fs) in columns.iter().zip(delays_fs) {
            if col.sigma.iter().any(|s| !s.is_finite()) {
                return Err(SpectroError::NonFinite { t0_fs });
            }
        }

        let energies_ev = columns[0].energies_ev.clone();
        let traces = lines
            .iter()
            .map(|l| {
                let bin = columns[0].bin_of(l.energy_ev);
                LineTrace {
                    label: l.label.clone(),
                    energy_ev: l.energy_ev,
                    delay_trace: columns.iter().map(|c| c.sigma[bin]).collect(),
                }
            })
            .collect();
        Ok(Spectrogram {
            delays_fs: delays_fs.to_vec(),
            energies_ev,
            sigma: columns.into_iter().map(|c| c.sigma).collect(),
            lines: traces,
        })
    }
}

/// Cross-section of one line followed over the delay grid.
#[derive(Clone, Debug, Serialize)]
pub struct LineTrace {
    pub label: String,
    #[serde(rename = "energy_eV")]
    pub energy_ev: f64,
    pub delay_trace: Vec<f64>,
}

/// Delay-resolved absorption: one cross-section column per probe delay plus
/// the traces of the identified lines.
#[derive(Clone, Debug)]
pub struct Spectrogram {
    pub delays_fs: Vec<f64>,
    pub energies_ev: Vec<f64>,
    /// `sigma[d][k]`: cross-section at delay `d`, energy bin `k`.
    pub sigma: Vec<Vec<f64>>,
    pub lines: Vec<LineTrace>,
}

impl Spectrogram {
    pub fn line(&self, label: &str) -> Option<&LineTrace> {
        self.lines.iter().find(|l| l.label == label)
    }

    /// CSV matrix: rows are energy bins, first column the energy, then one
    /// column per delay.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut head = vec!["energy_eV".to_string()];
        head.extend(self.delays_fs.iter().map(|t| format!("t0_{t:.4}_fs")));
        w.write_record(&head)?;
        for (k, e) in self.energies_ev.iter().enumerate() {
            let mut row = vec![format!("{e:.6}")];
            row.extend(self.sigma.iter().map(|col| format!("{:.8e}", col[k])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// JSON list of `{label, energy_eV, delay_trace}` per identified line.
    pub fn write_lines_json<W: Write>(&self, out: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(out, &self.lines)
    }
}

/// Half the peak-to-peak excursion of a line trace.
pub fn oscillation_amplitude(trace: &[f64]) -> f64 {
    let max = trace.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = trace.iter().cloned().fold(f64::INFINITY, f64::min);
    (max - min) / 2.0
}

/// Dominant oscillation period of a uniformly sampled trace: mean removed,
/// Hann windowed, zero-padded to 4096 bins; the two lowest nonzero bins are
/// excluded so grid-length leakage cannot win.
pub fn extract_period_fs(trace: &[f64], step_fs: f64) -> f64 {
    const NF: usize = 4096;
    let n = trace.len();
    assert!((8..=NF).contains(&n), "need 8..={NF} samples, got {n}");
    let mean = trace.iter().sum::<f64>() / n as f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); NF];
    for (k, &y) in trace.iter().enumerate() {
        let hann = 0.5 - 0.5 * (2.0 * PI * k as f64 / (n as f64 - 1.0)).cos();
        buf[k] = Complex64::new((y - mean) * hann, 0.0);
    }
    FftPlanner::new().plan_fft_forward(NF).process(&mut buf);
    let kbest = (3..=NF / 2)
        .max_by(|&a, &b| {
            buf[a]
                .norm_sqr()
                .partial_cmp(&buf[b].norm_sqr())
                .expect("spectral magnitudes are finite")
        })
        .expect("range nonempty");
    NF as f64 * step_fs / kbest as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dipoles::DipoleBuilder;
    use crate::half::Half;
    use crate::levels::{bundled_xe, XE_STRONG_LINES_12_EV, XE_STRONG_LINES_32_EV};

    #[test]
    fn infinite_tau_window_is_identity() {
        let ts: Vec<f64> = (0..50).map(|k| k as f64 * 0.7).collect();
        let ys: Vec<f64> = ts.iter().map(|t| (0.3 * t).sin() + 0.2).collect();
        let out = apply_window(&ts, &ys, 10.0, f64::INFINITY);
        assert_eq!(out, ys);
    }

    #[test]
    fn window_damps_only_the_post_probe_tail() {
        let ts: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let ys = vec![1.0; 100];
        let out = apply_window(&ts, &ys, 20.0, 10.0);
        for (k, (&t, &v)) in ts.iter().zip(&out).enumerate() {
            let expect = if t <= 20.0 { 1.0 } else { (-(t - 20.0) / 10.0).exp() };
            assert!((v - expect).abs() < 1e-15, "sample {k}: {v} vs {expect}");
        }
    }

    #[test]
    fn parabolic_peak_refinement_recovers_centers() {
        let de = 0.0024;
        let energies: Vec<f64> = (0..1100).map(|k| 16.0 + k as f64 * de).collect();
        let g = |e: f64, c: f64| (-((e - c) / 0.05) * ((e - c) / 0.05)).exp();
        let sigma: Vec<f64> = energies
            .iter()
            .map(|&e| g(e, 16.7) + 0.5 * g(e, 17.9) + 0.01 * g(e, 17.3))
            .collect();
        let peaks = find_peaks(&energies, &sigma, 0.02);
        // The 1% bump sits below the 2% threshold.
        assert_eq!(peaks.len(), 2);
        assert!((peaks[0].energy_ev - 16.7).abs() < 1e-3);
        assert!((peaks[1].energy_ev - 17.9).abs() < 1e-3);
        assert!(peaks[0].height > peaks[1].height);
    }

    #[test]
    fn period_extraction_recovers_synthetic_beat() {
        let step = 16.0 / 39.0;
        let trace: Vec<f64> = (0..40)
            .map(|k| 3.0 + (2.0 * PI * k as f64 * step / 3.17).cos())
            .collect();
        let per = extract_period_fs(&trace, step);
        assert!((per - 3.17).abs() < 0.02, "period {per}");
    }

    #[test]
    fn bundled_lines_cover_the_strong_series() {
        let table = bundled_xe();
        let built = DipoleBuilder::new(2.0).build(&table, Half(1)).unwrap();
        let dip = DipoleOp::new(built.mat.clone());
        let evs = built.table.energies_ev();
        let i1 = built.table.index_of("5s2.5p5 2P*3/2").unwrap();
        let i3 = built.table.index_of("5s2.5p5 2P*1/2").unwrap();
        let from32 = bright_lines(&evs, &dip, i1, (15.9, 18.6), "line32");
        let from12 = bright_lines(&evs, &dip, i3, (15.9, 18.6), "line12");
        // Every strong line is among the allowed ones; spectators add more.
        for nu in XE_STRONG_LINES_32_EV {
            assert!(
                from32.iter().any(|l| (l.energy_ev - nu).abs() < 1e-9),
                "missing line at {nu} eV"
            );
        }
        for nu in XE_STRONG_LINES_12_EV {
            assert!(
                from12.iter().any(|l| (l.energy_ev - nu).abs() < 1e-9),
                "missing line at {nu} eV"
            );
        }
        assert!(from32.len() >= XE_STRONG_LINES_32_EV.len());
        assert_eq!(from32[0].label, "line32_1");
        // Ascending and strictly inside the band.
        for w in from32.windows(2) {
            assert!(w[0].energy_ev < w[1].energy_ev);
        }
        // The shared upper level ties one line of each series together.
        let shared32 = from32.iter().find(|l| (l.energy_ev - 18.005323).abs() < 1e-9);
        let shared12 = from12.iter().find(|l| (l.energy_ev - 16.698900).abs() < 1e-9);
        let (a, b) = (shared32.expect("line"), shared12.expect("line"));
        assert_eq!(a.upper, b.upper);
    }

    #[test]
    fn out_of_band_request_is_rejected() {
        let probe = ProbePair::default();
        let ts: Vec<f64> = (0..200).map(|k| (k + 1) as f64 * 0.5).collect();
        let ds = vec![0.0; 200];
        let err = cross_section(&ts, &ds, 0.0, &probe, 10.0, (25.0, 25.5)).unwrap_err();
        assert!(matches!(err, SpectroError::UndefinedResponse { .. }));
        let err = cross_section(&ts, &ds, 0.0, &probe, -1.0, (15.9, 18.6)).unwrap_err();
        assert!(matches!(err, SpectroError::BadWindow { .. }));
    }
}
