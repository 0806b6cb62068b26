//! Split-operator solver for the lab-frame time-dependent Schroedinger
//! equation over a level set driven by z-polarized carrier fields.
//!
//! Each step is a Strang splitting around the step midpoint,
//! `psi <- exp(-i D dt/2) U_int(f(t_mid)) exp(-i D dt/2) psi`, with D the
//! field-free energies. The interaction `H_int = -f(t) mu` exponentiates
//! exactly: through the cached eigendecomposition of the full dipole matrix,
//! `U_int = V exp(+i f Lambda dt) V^T`, or as analytic 2x2 rotations when the
//! pump and Stokes fields couple disjoint level pairs. Every substep is
//! unitary, so norm deviation measures only eigendecomposition and roundoff
//! error and is monitored rather than corrected.

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use crate::dipoles::DipoleOp;
use crate::pulses::{CompositeEnvelope, GaussianParams};
use crate::units;

#[derive(Debug, Error)]
pub enum PropError {
    #[error("initial state norm {0} is not 1 within 1e-8")]
    BadInitial(f64),
    #[error("structured coupling requires exactly 3 levels, got {0}")]
    BadDimensions(usize),
    #[error("dimension mismatch: state has {state}, operator has {op}")]
    DimensionMismatch { state: usize, op: usize },
    #[error("empty time grid")]
    EmptyGrid,
    #[error("norm drifted to 1{dev:+e} at step {step}; dt too large or operator corrupt")]
    NormDrift { step: usize, dev: f64 },
}

/// Uniform time grid; endpoints in fs, step in attoseconds.
#[derive(Clone, Copy, Debug)]
pub struct TimeGrid {
    pub t_start_fs: f64,
    pub t_end_fs: f64,
    pub dt_as: f64,
}

impl TimeGrid {
    pub fn n_steps(&self) -> usize {
        ((self.t_end_fs - self.t_start_fs) / (self.dt_as * 1e-3)).round().max(0.0) as usize
    }

    pub fn dt_au(&self) -> f64 {
        units::as_to_au(self.dt_as)
    }

    pub fn t_start_au(&self) -> f64 {
        units::fs_to_au(self.t_start_fs)
    }

    /// Time at step boundary `k`, in a.u.
    pub fn t_au(&self, k: usize) -> f64 {
        self.t_start_au() + k as f64 * self.dt_au()
    }
}

/// Scalar driving field: a sum of Gaussian carrier pulses and composite
/// envelopes with their own carriers.
#[derive(Clone, Debug, Default)]
pub struct DriveField {
    pulses: Vec<GaussianParams>,
    composites: Vec<(CompositeEnvelope, f64, f64)>,
}

impl DriveField {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_pulse(&mut self, p: GaussianParams) -> &mut Self {
        self.pulses.push(p);
        self
    }

    /// Composite envelope with carrier `env(t) cos(w t + phi)`, `w` in a.u.
    pub fn push_composite(&mut self, env: CompositeEnvelope, w_au: f64, phi: f64) -> &mut Self {
        self.composites.push((env, w_au, phi));
        self
    }

    /// Oscillating field value in a.u.
    pub fn eval(&self, t_au: f64) -> f64 {
        let mut f = 0.0;
        for p in &self.pulses {
            f += p.field_au(t_au);
        }
        for (env, w, phi) in &self.composites {
            f += env.eval(t_au) * (w * t_au + phi).cos();
        }
        f
    }

    /// Sum of envelope magnitudes in a.u. (carriers stripped).
    pub fn envelope(&self, t_au: f64) -> f64 {
        let mut f = 0.0;
        for p in &self.pulses {
            f += p.envelope_au(t_au);
        }
        for (env, _, _) in &self.composites {
            f += env.eval(t_au);
        }
        f
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty() && self.composites.is_empty()
    }
}

/// How the fields couple the levels.
pub enum Coupling {
    /// Pump drives levels (0,1) and Stokes drives (1,2) with fixed scalar
    /// dipoles; the three-level model with role-assigned fields.
    Structured {
        pump: DriveField,
        stokes: DriveField,
        mu12: f64,
        mu23: f64,
    },
    /// One total scalar field through the full dipole operator.
    Full { field: DriveField, dip: DipoleOp },
}

/// Split-operator propagator over fixed level energies (a.u.).
pub struct Propagator {
    pub energies_au: Vec<f64>,
    pub coupling: Coupling,
}

/// Stored snapshots of a propagation. Step 0 and the final step are always
/// present; interior steps appear every `stride` steps.
pub struct Trajectory {
    pub grid: TimeGrid,
    pub stride: usize,
    /// Stored step indices.
    pub steps: Vec<usize>,
    pub states: Vec<DVector<Complex64>>,
    /// Norm deviation |norm - 1| at each stored step.
    pub norm_dev: Vec<f64>,
    pub norm_dev_max: f64,
}

impl Trajectory {
    pub fn ts_fs(&self) -> Vec<f64> {
        self.steps
            .iter()
            .map(|&k| units::au_to_fs(self.grid.t_au(k)))
            .collect()
    }

    pub fn final_state(&self) -> &DVector<Complex64> {
        self.states.last().expect("trajectory stores the final step")
    }

    /// Population of one level over the stored steps.
    pub fn populations(&self, level: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[level].norm_sqr()).collect()
    }

    pub fn final_populations(&self) -> Vec<f64> {
        self.final_state().iter().map(|z| z.norm_sqr()).collect()
    }

    /// CSV export `t_fs,P_<label>...` for the selected levels.
    pub fn write_populations_csv<W: std::io::Write>(
        &self,
        out: W,
        levels: &[(usize, &str)],
    ) -> std::io::Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut head = vec!["t_fs".to_string()];
        head.extend(levels.iter().map(|(_, l)| format!("P_{l}")));
        wtr.write_record(&head).map_err(std::io::Error::other)?;
        for (row, s) in self.states.iter().enumerate() {
            let mut rec = vec![format!("{:.6}", self.ts_fs()[row])];
            rec.extend(levels.iter().map(|&(i, _)| format!("{:.12e}", s[i].norm_sqr())));
            wtr.write_record(&rec).map_err(std::io::Error::other)?;
        }
        wtr.flush()
    }
}

/// Expectation value of the dipole operator, real by Hermiticity.
pub fn dipole_expectation(state: &DVector<Complex64>, dip: &DipoleOp) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..dip.dim() {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..dip.dim() {
            let m = dip.mat[(i, j)];
            if m != 0.0 {
                row += m * state[j];
            }
        }
        acc += state[i].conj() * row;
    }
    acc.re
}

/// Exact pair rotation by `exp(+i theta sigma_x)` on components (i, j):
/// the step map of `H_int = -f mu` on an isolated two-level pair.
#[inline]
fn rotate_pair(psi: &mut DVector<Complex64>, i: usize, j: usize, theta: f64) {
    let (s, c) = theta.sin_cos();
    let is = Complex64::new(0.0, s);
    let a = psi[i];
    let b = psi[j];
    psi[i] = c * a + is * b;
    psi[j] = is * a + c * b;
}

impl Propagator {
    fn check_dims(&self, initial: &DVector<Complex64>) -> Result<(), PropError> {
        let n = self.energies_au.len();
        if initial.len() != n {
            return Err(PropError::DimensionMismatch {
                state: initial.len(),
                op: n,
            });
        }
        match &self.coupling {
            Coupling::Structured { .. } if n != 3 => Err(PropError::BadDimensions(n)),
            Coupling::Full { dip, .. } if dip.dim() != n => Err(PropError::DimensionMismatch {
                state: n,
                op: dip.dim(),
            }),
            _ => Ok(()),
        }
    }

    /// Propagate and store every `stride`-th state (plus first and last).
    pub fn propagate(
        &self,
        initial: &DVector<Complex64>,
        grid: &TimeGrid,
        stride: usize,
    ) -> Result<Trajectory, PropError> {
        self.propagate_observed(initial, grid, stride, |_, _, _| {})
    }

    /// As [`propagate`](Self::propagate), additionally invoking `observe`
    /// with `(step, t_au, state)` after every step (and at step 0), for
    /// observables that need unstrided resolution.
    pub fn propagate_observed(
        &self,
        initial: &DVector<Complex64>,
        grid: &TimeGrid,
        stride: usize,
        mut observe: impl FnMut(usize, f64, &DVector<Complex64>),
    ) -> Result<Trajectory, PropError> {
        let n_steps = grid.n_steps();
        if n_steps == 0 {
            return Err(PropError::EmptyGrid);
        }
        let norm0 = initial.norm();
        if (norm0 - 1.0).abs() > 1e-8 {
            return Err(PropError::BadInitial(norm0));
        }
        self.check_dims(initial)?;
        let stride = stride.max(1);
        let dt = grid.dt_au();
        let half_d: Vec<Complex64> = self
            .energies_au
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -e * dt / 2.0))
            .collect();

        let mut psi = initial.clone();
        let mut traj = Trajectory {
            grid: *grid,
            stride,
            steps: Vec::new(),
            states: Vec::new(),
            norm_dev: Vec::new(),
            norm_dev_max: 0.0,
        };
        let store = |k: usize, psi: &DVector<Complex64>, dev: f64, traj: &mut Trajectory| {
            traj.steps.push(k);
            traj.states.push(psi.clone());
            traj.norm_dev.push(dev);
        };
        observe(0, grid.t_au(0), &psi);
        store(0, &psi, (norm0 - 1.0).abs(), &mut traj);

        // Scratch for the full-dipole route, reused across steps.
        let mut scratch = match &self.coupling {
            Coupling::Full { dip, .. } => Some(DVector::<Complex64>::zeros(dip.dim())),
            _ => None,
        };

        for k in 0..n_steps {
            let t_mid = grid.t_au(k) + dt / 2.0;
            for (p, ph) in psi.iter_mut().zip(&half_d) {
                *p *= ph;
            }
            match &self.coupling {
                Coupling::Structured {
                    pump,
                    stokes,
                    mu12,
                    mu23,
                } => {
                    let fp = pump.eval(t_mid) * mu12;
                    let fs = stokes.eval(t_mid) * mu23;
                    rotate_pair(&mut psi, 0, 1, fp * dt / 2.0);
                    rotate_pair(&mut psi, 1, 2, fs * dt);
                    rotate_pair(&mut psi, 0, 1, fp * dt / 2.0);
                }
                Coupling::Full { field, dip } => {
                    let f = field.eval(t_mid);
                    let tmp = scratch.as_mut().expect("allocated for full coupling");
                    // psi <- V exp(+i f Lambda dt) V^T psi
                    tmp.fill(Complex64::new(0.0, 0.0));
                    for c in 0..dip.dim() {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for r in 0..dip.dim() {
                            acc += dip.vecs[(r, c)] * psi[r];
                        }
                        tmp[c] = acc * Complex64::from_polar(1.0, f * dip.vals[c] * dt);
                    }
                    for r in 0..dip.dim() {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for c in 0..dip.dim() {
                            acc += dip.vecs[(r, c)] * tmp[c];
                        }
                        psi[r] = acc;
                    }
                }
            }
            for (p, ph) in psi.iter_mut().zip(&half_d) {
                *p *= ph;
            }

            let dev = (psi.norm() - 1.0).abs();
            traj.norm_dev_max = traj.norm_dev_max.max(dev);
            if dev > 1e-8 {
                return Err(PropError::NormDrift { step: k + 1, dev });
            }
            observe(k + 1, grid.t_au(k + 1), &psi);
            if (k + 1) % stride == 0 || k + 1 == n_steps {
                store(k + 1, &psi, dev, &mut traj);
            }
        }
        Ok(traj)
    }

    /// Propagate forward, conjugate the final state, run the same step
    /// sequence in reverse, and return `1 - |<psi_rev(0)|conj(psi(0))>|`.
    ///
    /// Every substep is the exponential of a real symmetric generator, so the
    /// reversed conjugated sequence inverts the forward one exactly; the
    /// deficit measures accumulated roundoff, not truncation error.
    pub fn reverse_check(
        &self,
        initial: &DVector<Complex64>,
        grid: &TimeGrid,
    ) -> Result<f64, PropError> {
        let forward = self.propagate(initial, grid, usize::MAX)?;
        let mut psi = forward.final_state().map(|z| z.conj());
        let n_steps = grid.n_steps();
        let dt = grid.dt_au();
        let half_d: Vec<Complex64> = self
            .energies_au
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -e * dt / 2.0))
            .collect();
        let mut scratch = match &self.coupling {
            Coupling::Full { dip, .. } => Some(DVector::<Complex64>::zeros(dip.dim())),
            _ => None,
        };
        for k in (0..n_steps).rev() {
            let t_mid = grid.t_au(k) + dt / 2.0;
            for (p, ph) in psi.iter_mut().zip(&half_d) {
                *p *= ph;
            }
            match &self.coupling {
                Coupling::Structured {
                    pump,
                    stokes,
                    mu12,
                    mu23,
                } => {
                    let fp = pump.eval(t_mid) * mu12;
                    let fs = stokes.eval(t_mid) * mu23;
                    rotate_pair(&mut psi, 0, 1, fp * dt / 2.0);
                    rotate_pair(&mut psi, 1, 2, fs * dt);
                    rotate_pair(&mut psi, 0, 1, fp * dt / 2.0);
                }
                Coupling::Full { field, dip } => {
                    let f = field.eval(t_mid);
                    let tmp = scratch.as_mut().expect("allocated for full coupling");
                    tmp.fill(Complex64::new(0.0, 0.0));
                    for c in 0..dip.dim() {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for r in 0..dip.dim() {
                            acc += dip.vecs[(r, c)] * psi[r];
                        }
                        tmp[c] = acc * Complex64::from_polar(1.0, f * dip.vals[c] * dt);
                    }
                    for r in 0..dip.dim() {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for c in 0..dip.dim() {
                            acc += dip.vecs[(r, c)] * tmp[c];
                        }
                        psi[r] = acc;
                    }
                }
            }
            for (p, ph) in psi.iter_mut().zip(&half_d) {
                *p *= ph;
            }
        }
        let overlap: Complex64 = psi
            .iter()
            .zip(initial.iter())
            .map(|(a, b)| a.conj() * b.conj())
            .sum();
        Ok(1.0 - overlap.norm())
    }
}
