//! Unit conversions between atomic units and the lab units used throughout
//! (eV for energies, fs for times, W/cm^2 for intensities).

/// Hartree energy in eV.
pub const HARTREE_EV: f64 = 27.211386245988;

/// Atomic unit of time in fs.
pub const AU_TIME_FS: f64 = 0.024188843265857;

/// Speed of light in atomic units.
pub const C_AU: f64 = 137.036;

/// Intensity (W/cm^2) corresponding to unit field amplitude.
pub const FIELD_INTENSITY_W_CM2: f64 = 3.50945e16;

pub fn ev_to_au(e: f64) -> f64 {
    e / HARTREE_EV
}

pub fn au_to_ev(e: f64) -> f64 {
    e * HARTREE_EV
}

pub fn fs_to_au(t: f64) -> f64 {
    t / AU_TIME_FS
}

pub fn au_to_fs(t: f64) -> f64 {
    t * AU_TIME_FS
}

/// Peak field amplitude in a.u. for a given intensity in W/cm^2.
pub fn field_from_intensity(w_cm2: f64) -> f64 {
    (w_cm2 / FIELD_INTENSITY_W_CM2).sqrt()
}

/// Peak field amplitude in a.u. for a given intensity in TW/cm^2.
pub fn field_from_tw(tw_cm2: f64) -> f64 {
    field_from_intensity(tw_cm2 * 1e12)
}

/// Attoseconds to a.u.; time steps are usually quoted in as.
pub fn as_to_au(t: f64) -> f64 {
    fs_to_au(t * 1e-3)
}
