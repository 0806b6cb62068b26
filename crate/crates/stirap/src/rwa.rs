//! Three-level rotating-frame model: effective Hamiltonian under the
//! rotating-wave approximation, its adiabatic eigensystem (dark and bright
//! states, mixing angles), adiabatic-population diagnostics, and the diagonal
//! transform between lab and rotating frames.
//!
//! Frame convention, fixed crate-wide: rotating-frame amplitudes are lab
//! amplitudes scaled by `e^{+i theta_j(t)}` with
//! `theta = ((E2-wP) t, E2 t, (E2-wS) t)`. With lab carriers
//! `env(t) cos(w t + phi)` and interaction `-field * mu`, the surviving
//! co-rotating coupling is `H'_23 = -(1/2) Omega_S e^{-i phi}`, and the dark
//! state is `cos(Theta)|1> - e^{+i phi} sin(Theta)|3>`. A trajectory launched
//! in that superposition and driven adiabatically holds near-unit dark
//! population in this frame; the conjugate frame would report the bright
//! projection instead and is not used anywhere.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::pulses::ENVELOPE_FLOOR_AU;

/// Two-photon-resonant rotating-frame parameters. Detunings in a.u. follow
/// `delta12 = E1 - E2 + wP`, `delta23 = E3 - E2 + wS`.
#[derive(Clone, Copy, Debug)]
pub struct RwaParams {
    pub delta12: f64,
    pub delta23: f64,
    /// Relative carrier phase of the Stokes field, radians.
    pub phi: f64,
}

/// Effective rotating-frame Hamiltonian at given Rabi frequencies (a.u.):
/// `-(1/2) [[-2 d12, Op, 0], [Op, 0, Os e^{-i phi}], [0, Os e^{i phi}, -2 d23]]`.
pub fn rwa_hamiltonian(p: &RwaParams, omega_p: f64, omega_s: f64) -> Matrix3<Complex64> {
    let re = |x: f64| Complex64::new(x, 0.0);
    let off = Complex64::from_polar(-0.5 * omega_s, -p.phi);
    Matrix3::new(
        re(p.delta12),
        re(-0.5 * omega_p),
        re(0.0),
        re(-0.5 * omega_p),
        re(0.0),
        off,
        re(0.0),
        off.conj(),
        re(p.delta23),
    )
}

/// Instantaneous adiabatic eigensystem at one time.
#[derive(Clone, Debug)]
pub struct AdiabaticPoint {
    /// Mixing angle arctan(Omega_P/Omega_S), radians.
    pub theta: f64,
    /// Bright-state tilt -arctan2(Omega, delta)/2, in (-pi/2, 0].
    pub phi_mix: f64,
    /// Root-sum-square Rabi frequency, a.u.
    pub omega: f64,
    /// Eigenenergies (E0, E+, E-), a.u.
    pub energies: [f64; 3],
    /// Eigenstates (psi0, psi+, psi-), orthonormal.
    pub states: [Vector3<Complex64>; 3],
}

/// Walks the adiabatic eigensystem along a pulse sequence under two-photon
/// resonance (single detuning `delta`). The mixing angle is a diagnostic, so
/// when both Rabi frequencies drop below the numerical floor it is held at
/// its last well-defined value instead of jumping to arctan(0/0).
#[derive(Clone, Debug)]
pub struct AdiabaticFrame {
    pub delta: f64,
    pub phi: f64,
    last_theta: f64,
}

impl AdiabaticFrame {
    pub fn new(delta: f64, phi: f64) -> Self {
        Self {
            delta,
            phi,
            last_theta: 0.0,
        }
    }

    /// Seed the held mixing angle for the leading tail (e.g. tan(alpha) for a
    /// composite pair entering with that boundary ratio).
    pub fn with_initial_theta(mut self, theta: f64) -> Self {
        self.last_theta = theta;
        self
    }

    /// Eigensystem at the given Rabi frequencies (a.u., non-negative).
    pub fn at(&mut self, omega_p: f64, omega_s: f64) -> AdiabaticPoint {
        let omega = omega_p.hypot(omega_s);
        let theta = if omega_p.abs() < ENVELOPE_FLOOR_AU && omega_s.abs() < ENVELOPE_FLOOR_AU {
            self.last_theta
        } else {
            f64::atan2(omega_p, omega_s)
        };
        self.last_theta = theta;
        let phi_mix = -f64::atan2(omega, self.delta) / 2.0;
        let root = self.delta.hypot(omega);
        let energies = [
            self.delta,
            0.5 * (self.delta + root),
            0.5 * (self.delta - root),
        ];
        let (st, ct) = theta.sin_cos();
        let (sf, cf) = phi_mix.sin_cos();
        let ep = Complex64::from_polar(1.0, self.phi);
        let em = ep.conj();
        let z = Complex64::new(0.0, 0.0);
        let dark = Vector3::new(Complex64::new(ct, 0.0), z, -ep * st);
        let upper = Vector3::new(em * (cf * st), em * sf, Complex64::new(cf * ct, 0.0));
        let lower = Vector3::new(em * (sf * st), -em * cf, Complex64::new(sf * ct, 0.0));
        AdiabaticPoint {
            theta,
            phi_mix,
            omega,
            energies,
            states: [dark, upper, lower],
        }
    }
}

/// Projections |<psi_k|state>|^2 onto (dark, upper, lower); sums to the
/// squared norm of `state` by completeness.
pub fn adiabatic_populations(state: &Vector3<Complex64>, point: &AdiabaticPoint) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (k, basis) in point.states.iter().enumerate() {
        out[k] = basis.dotc(state).norm_sqr();
    }
    out
}

fn frame_phases(t_au: f64, omega_p: f64, omega_s: f64, e2: f64) -> [Complex64; 3] {
    [
        Complex64::from_polar(1.0, (e2 - omega_p) * t_au),
        Complex64::from_polar(1.0, e2 * t_au),
        Complex64::from_polar(1.0, (e2 - omega_s) * t_au),
    ]
}

/// Lab-frame to rotating-frame map (diagonal phases; populations invariant).
/// Frequencies and `e2` in a.u.
pub fn to_rotating_frame(
    lab: &Vector3<Complex64>,
    t_au: f64,
    omega_p: f64,
    omega_s: f64,
    e2: f64,
) -> Vector3<Complex64> {
    let ph = frame_phases(t_au, omega_p, omega_s, e2);
    Vector3::new(lab[0] * ph[0], lab[1] * ph[1], lab[2] * ph[2])
}

/// Inverse of [`to_rotating_frame`].
pub fn to_lab_frame(
    rot: &Vector3<Complex64>,
    t_au: f64,
    omega_p: f64,
    omega_s: f64,
    e2: f64,
) -> Vector3<Complex64> {
    let ph = frame_phases(t_au, omega_p, omega_s, e2);
    Vector3::new(
        rot[0] * ph[0].conj(),
        rot[1] * ph[1].conj(),
        rot[2] * ph[2].conj(),
    )
}

/// Propagate the three-level rotating-frame model itself, stepping with the
/// exact exponential of the midpoint Hamiltonian through its closed-form
/// eigensystem. Envelope closures give the Rabi frequencies in a.u. at a
/// time in a.u.; `stride` controls how often `(t_au, populations)` rows are
/// recorded (first and last steps always are).
pub fn propagate_rwa(
    delta: f64,
    phi: f64,
    omega_p: impl Fn(f64) -> f64,
    omega_s: impl Fn(f64) -> f64,
    initial: &Vector3<Complex64>,
    grid: &crate::propagator::TimeGrid,
    stride: usize,
) -> (Vector3<Complex64>, Vec<(f64, [f64; 3])>) {
    let stride = stride.max(1);
    let n = grid.n_steps();
    let dt = grid.dt_au();
    let mut frame = AdiabaticFrame::new(delta, phi);
    let mut psi = *initial;
    let mut rows = vec![(grid.t_au(0), [psi[0].norm_sqr(), psi[1].norm_sqr(), psi[2].norm_sqr()])];
    for k in 0..n {
        let tm = grid.t_au(k) + dt / 2.0;
        let pt = frame.at(omega_p(tm), omega_s(tm));
        let mut next = Vector3::from_element(Complex64::new(0.0, 0.0));
        for (j, basis) in pt.states.iter().enumerate() {
            let coef = basis.dotc(&psi) * Complex64::from_polar(1.0, -pt.energies[j] * dt);
            next += basis.scale(1.0) * coef;
        }
        psi = next;
        if (k + 1) % stride == 0 || k + 1 == n {
            rows.push((
                grid.t_au(k + 1),
                [psi[0].norm_sqr(), psi[1].norm_sqr(), psi[2].norm_sqr()],
            ));
        }
    }
    (psi, rows)
}

/// CSV export of the adiabatic diagnostics: one row per time with the mixing
/// angles, eigenenergies, and adiabatic populations.
pub fn write_adiabatic_csv<W: std::io::Write>(
    out: W,
    ts_fs: &[f64],
    points: &[AdiabaticPoint],
    populations: &[[f64; 3]],
) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record([
        "t_fs", "theta", "phi_mix", "E0_au", "Ep_au", "Em_au", "P0", "Pp", "Pm",
    ])
    .map_err(std::io::Error::other)?;
    for ((&t, pt), pop) in ts_fs.iter().zip(points).zip(populations) {
        wtr.write_record([
            format!("{t:.6}"),
            format!("{:.9}", pt.theta),
            format!("{:.9}", pt.phi_mix),
            format!("{:.9e}", pt.energies[0]),
            format!("{:.9e}", pt.energies[1]),
            format!("{:.9e}", pt.energies[2]),
            format!("{:.9}", pop[0]),
            format!("{:.9}", pop[1]),
            format!("{:.9}", pop[2]),
        ])
        .map_err(std::io::Error::other)?;
    }
    wtr.flush()
}
