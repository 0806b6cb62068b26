//! Electric-dipole couplings for the level tables: hydrogen-like radial
//! integrals, reduced matrix elements in LS and JK coupling, and the full
//! m-resolved dipole matrix that drives the propagator.
//!
//! The active electron is treated hydrogenically with an effective core
//! charge (Z = 2 for a singly charged ion), and the angular part follows
//! the coupling scheme of each level:
//!
//! - ground P term <-> s-hole S states: the bare 5p <-> ns jump;
//! - ground P term <-> JK Rydberg states: the 5p <-> n'l' jump carried
//!   through the Wigner-Eckart theorem with each state's total J, with core
//!   recoupling deliberately neglected;
//! - JK <-> JK pairs: full pair-coupling recoupling with two 6j symbols,
//!   nonzero only when parent term and outer-electron spin match.
//!
//! Matrix elements are of the operator r Y_10 (spherical-tensor
//! normalization); the overall scale relative to r cos(theta) is a uniform
//! sqrt(3/4pi) absorbed into quoted field intensities. Elements are filled
//! for table-ordered pairs i < j and mirrored, so the basis order of the
//! input table fixes every relative sign.

use crate::angular::{six_j, three_j, wigner_eckart_q0};
use crate::half::{phase_from_doubled, Half};
use crate::levels::{Level, LevelTable, Scheme};
use dashmap::DashMap;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DipoleError {
    #[error("override label {0:?} not present in the selected table")]
    UnknownLabel(String),
}

/// Generalized Laguerre polynomial L_k^alpha by the three-term recurrence.
fn laguerre(k: i32, alpha: i32, x: f64) -> f64 {
    let a = alpha as f64;
    if k == 0 {
        return 1.0;
    }
    let mut lm1 = 1.0;
    let mut l = 1.0 + a - x;
    for i in 1..k {
        let i = i as f64;
        let next = ((2.0 * i + 1.0 + a - x) * l - (i + a) * lm1) / (i + 1.0);
        lm1 = l;
        l = next;
    }
    l
}

/// Radial factor R_nl(r) of a hydrogen-like orbital with charge z, in the
/// convention that R is positive as r -> 0.
pub fn hydrogenic_r(n: i32, l: i32, z: f64) -> impl Fn(f64) -> f64 {
    let mut fac_ratio = 1.0; // (n-l-1)! / (n+l)!
    for k in (n - l)..=(n + l) {
        fac_ratio /= k as f64;
    }
    let norm = ((2.0 * z / n as f64).powi(3) * fac_ratio / (2.0 * n as f64)).sqrt();
    let (n, l) = (n as f64, l);
    move |r: f64| {
        let x = 2.0 * z * r / n;
        norm * x.powi(l) * (-x / 2.0).exp() * laguerre(n as i32 - l - 1, 2 * l + 1, x)
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adapt(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + adapt(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    // Seed with a modest uniform split so narrow structure near the origin
    // is seen before adaptivity takes over.
    let panels = 16;
    let mut total = 0.0;
    for i in 0..panels {
        let x0 = a + (b - a) * i as f64 / panels as f64;
        let x1 = a + (b - a) * (i + 1) as f64 / panels as f64;
        let m = 0.5 * (x0 + x1);
        let (f0, fm, f1) = (f(x0), f(m), f(x1));
        let whole = simpson(x0, x1, f0, fm, f1);
        total += adapt(&f, x0, x1, f0, fm, f1, whole, tol / panels as f64, 40);
    }
    total
}

/// Memoized <n1 l1| r |n2 l2> radial integrals for one effective charge.
pub struct Radials {
    pub z: f64,
    cache: DashMap<(i32, i32, i32, i32), f64>,
}

impl Radials {
    pub fn new(z: f64) -> Self {
        Radials {
            z,
            cache: DashMap::new(),
        }
    }

    /// integral of R_{n1 l1}(r) r R_{n2 l2}(r) r^2 dr.
    pub fn get(&self, n1: i32, l1: i32, n2: i32, l2: i32) -> f64 {
        *self
            .cache
            .entry((n1, l1, n2, l2))
            .or_insert_with(|| {
                let r1 = hydrogenic_r(n1, l1, self.z);
                let r2 = hydrogenic_r(n2, l2, self.z);
                integrate(|r| r1(r) * r2(r) * r * r * r, 0.0, 400.0, 1e-12)
            })
    }
}

/// One-electron reduced element <n_l l_l || r Y_1 || n_r l_r>, left state
/// primed.
pub fn reduced_r_y1(rad: &Radials, nl: i32, ll: i32, nr: i32, lr: i32) -> f64 {
    let tj = three_j(2 * ll, 2, 2 * lr, 0, 0, 0);
    if tj == 0.0 {
        return 0.0;
    }
    phase_from_doubled(2 * ll)
        * (((2 * ll + 1) * (2 * lr + 1)) as f64).sqrt()
        * (3.0 / (4.0 * PI)).sqrt()
        * tj
        * rad.get(nl, ll, nr, lr)
}

/// Reduced element between two JK-coupled levels (a is the bra). The core
/// is a spectator: parent term and outer-electron spin must match, and the
/// jump recouples through K and J with two 6j symbols.
pub fn jk_jk_reduced(rad: &Radials, a: &Level, b: &Level) -> f64 {
    if a.parent != b.parent || a.s_e != b.s_e {
        return 0.0;
    }
    let (pa, pb) = (a.parent.expect("JK parent"), b.parent.expect("JK parent"));
    debug_assert_eq!(pa, pb);
    let jp2 = pa.jp.0;
    let (la2, lb2) = (2 * a.l_e, 2 * b.l_e);
    let (ka2, kb2) = (a.k.expect("JK K").0, b.k.expect("JK K").0);
    let (ja2, jb2) = (a.j.0, b.j.0);
    let se2 = a.s_e.0;
    let dl2 = 2; // rank of the dipole
    // Spectator-core reduction phase, (-1)^(Jp+l_B+K_A+1) for the orbital
    // layer times (-1)^(K_A+S+J_B+1) for the spin layer; the convention is
    // pinned by the product-state expansion test.
    let ph = phase_from_doubled(jp2 + lb2 + ka2 + dl2 + ka2 + se2 + jb2 + dl2);
    let dims = (((ka2 + 1) * (kb2 + 1) * (ja2 + 1) * (jb2 + 1)) as f64).sqrt();
    let s1 = six_j(la2, ka2, jp2, kb2, lb2, dl2);
    let s2 = six_j(ka2, ja2, se2, jb2, kb2, dl2);
    ph * dims * s1 * s2 * reduced_r_y1(rad, a.n, a.l_e, b.n, b.l_e)
}

/// Reduced element <a || r Y_1 || b> dispatched on the coupling schemes.
pub fn reduced_elem(rad: &Radials, a: &Level, b: &Level) -> f64 {
    if a.parity == b.parity {
        return 0.0;
    }
    let (ha, hb) = (a.is_s_hole(), b.is_s_hole());
    let (ga, gb) = (a.is_ground_p(), b.is_ground_p());
    if ha || hb {
        // An s-hole doublet reaches only the ground P pair, via the jump
        // of the active electron between its ns vacancy and 5p.
        if ha && gb {
            return reduced_r_y1(rad, a.shells[0].n, 0, 5, 1);
        }
        if hb && ga {
            return reduced_r_y1(rad, 5, 1, b.shells[0].n, 0);
        }
        return 0.0;
    }
    if ga && gb {
        return 0.0;
    }
    if ga && b.scheme == Scheme::Jk {
        return reduced_r_y1(rad, 5, 1, b.n, b.l_e);
    }
    if gb && a.scheme == Scheme::Jk {
        return reduced_r_y1(rad, a.n, a.l_e, 5, 1);
    }
    if a.scheme == Scheme::Jk && b.scheme == Scheme::Jk {
        return jk_jk_reduced(rad, a, b);
    }
    0.0
}

/// Dipole matrix on one m subspace together with the selected levels.
pub struct DipoleMatrix {
    pub table: LevelTable,
    pub mat: DMatrix<f64>,
}

/// Builds dipole matrices for a level table; overrides replace individual
/// elements by label pair after the physical construction, which is how the
/// three-level model systems pin mu12 = mu23 = 1.
pub struct DipoleBuilder {
    pub z: f64,
    overrides: Vec<(String, String, f64)>,
}

impl DipoleBuilder {
    pub fn new(z: f64) -> Self {
        DipoleBuilder {
            z,
            overrides: Vec::new(),
        }
    }

    pub fn with_override(mut self, a: &str, b: &str, value: f64) -> Self {
        self.overrides.push((a.to_string(), b.to_string(), value));
        self
    }

    /// Select the m subspace of `table` and fill the symmetric z-dipole
    /// matrix over it in table order.
    pub fn build(&self, table: &LevelTable, m: Half) -> Result<DipoleMatrix, DipoleError> {
        let sel = table.select_m(m);
        let rad = Radials::new(self.z);
        let n = sel.len();
        let mut mat = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (&sel.levels[i], &sel.levels[j]);
                if (a.j.0 - b.j.0).abs() > 2 {
                    continue;
                }
                let red = reduced_elem(&rad, a, b);
                if red == 0.0 {
                    continue;
                }
                let v = wigner_eckart_q0(a.j.0, b.j.0, m.0) * red;
                mat[(i, j)] = v;
                mat[(j, i)] = v;
            }
        }
        for (la, lb, v) in &self.overrides {
            let i = sel
                .index_of(la)
                .ok_or_else(|| DipoleError::UnknownLabel(la.clone()))?;
            let j = sel
                .index_of(lb)
                .ok_or_else(|| DipoleError::UnknownLabel(lb.clone()))?;
            mat[(i, j)] = *v;
            mat[(j, i)] = *v;
        }
        Ok(DipoleMatrix { table: sel, mat })
    }
}

/// Indices reachable from the seeds through nonzero couplings; pruning a
/// table to this set removes levels that can never acquire population.
pub fn connected_indices(mat: &DMatrix<f64>, seeds: &[usize]) -> Vec<usize> {
    let n = mat.nrows();
    let mut seen = vec![false; n];
    let mut queue: Vec<usize> = seeds.to_vec();
    for &s in seeds {
        seen[s] = true;
    }
    while let Some(i) = queue.pop() {
        for j in 0..n {
            if !seen[j] && mat[(i, j)] != 0.0 {
                seen[j] = true;
                queue.push(j);
            }
        }
    }
    (0..n).filter(|&i| seen[i]).collect()
}

/// Dipole operator with its symmetric eigendecomposition cached, so a
/// split-operator step can apply exp(i f mu dt) exactly as V exp(i f w dt)
/// V^T at any field value f.
#[derive(Clone)]
pub struct DipoleOp {
    pub mat: DMatrix<f64>,
    pub vecs: DMatrix<f64>,
    pub vals: DVector<f64>,
}

impl DipoleOp {
    pub fn new(mat: DMatrix<f64>) -> Self {
        let eig = mat.clone().symmetric_eigen();
        DipoleOp {
            mat,
            vecs: eig.eigenvectors,
            vals: eig.eigenvalues,
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levels::bundled_xe;
    use approx::assert_relative_eq;

    #[test]
    fn radial_closed_forms() {
        // <1s| r |2p> for hydrogen: 128 sqrt(6) / 243, scaling as 1/Z.
        let h = Radials::new(1.0);
        let expect = 128.0 * 6f64.sqrt() / 243.0;
        assert_relative_eq!(h.get(1, 0, 2, 1), expect, max_relative = 1e-10);
        let he = Radials::new(2.0);
        assert_relative_eq!(he.get(1, 0, 2, 1), expect / 2.0, max_relative = 1e-10);
        // Same-n elements: <n l-1| r |n l> = -(3/2) n sqrt(n^2-l^2) / Z.
        let z = 2.0;
        assert_relative_eq!(
            he.get(5, 1, 5, 0),
            -1.5 * 5.0 * (25.0f64 - 1.0).sqrt() / z,
            max_relative = 1e-10
        );
        assert_relative_eq!(
            he.get(5, 1, 5, 2),
            -1.5 * 5.0 * (25.0f64 - 4.0).sqrt() / z,
            max_relative = 1e-10
        );
    }

    #[test]
    fn radial_frozen_values() {
        // The off-diagonal-n elements entering the bundled table, frozen
        // from an independent quadrature.
        let rad = Radials::new(2.0);
        assert_relative_eq!(rad.get(5, 1, 4, 0), 4.2589, max_relative = 1e-4);
        assert_relative_eq!(rad.get(5, 1, 6, 0), 3.7043, max_relative = 1e-4);
        assert_relative_eq!(rad.get(5, 1, 6, 2), 7.5827, max_relative = 1e-4);
    }

    #[test]
    fn bundled_mu_frozen_elements() {
        let dm = DipoleBuilder::new(2.0)
            .build(&bundled_xe(), Half(1))
            .unwrap();
        assert_eq!(dm.mat.nrows(), 58);
        let i1 = dm.table.index_of("5s2.5p5 2P*3/2").unwrap();
        let i3 = dm.table.index_of("5s2.5p5 2P*1/2").unwrap();
        let i2 = dm.table.index_of("5s.5p6 2S1/2").unwrap();
        let i2p = dm.table.index_of("4s.5s2.5p6 2S1/2").unwrap();
        // Raman pair through the 5s hole: equal legs, positive product.
        assert_relative_eq!(
            dm.mat[(i1, i2)],
            -3.6645188392719006,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            dm.mat[(i2, i3)],
            -3.6645188392719006,
            max_relative = 1e-9
        );
        // Raman pair through the 4s hole.
        assert_relative_eq!(
            dm.mat[(i1, i2p)],
            0.8495302887157702,
            max_relative = 1e-9
        );
        assert_relative_eq!(
            dm.mat[(i2p, i3)],
            0.8495302887157702,
            max_relative = 1e-9
        );
    }

    #[test]
    fn mu_matrix_symmetry_and_selection() {
        let dm = DipoleBuilder::new(2.0)
            .build(&bundled_xe(), Half(1))
            .unwrap();
        let n = dm.mat.nrows();
        for i in 0..n {
            assert_eq!(dm.mat[(i, i)], 0.0);
            for j in 0..n {
                assert_eq!(dm.mat[(i, j)], dm.mat[(j, i)]);
                let (a, b) = (&dm.table.levels[i], &dm.table.levels[j]);
                if a.parity == b.parity || (a.j.0 - b.j.0).abs() > 2 {
                    assert_eq!(dm.mat[(i, j)], 0.0, "selection rule at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn overrides_pin_elements() {
        let table = crate::levels::LevelTable::from_rows(
            [
                ("5s2.5p5 2P*3/2".to_string(), 0.0),
                ("5s.5p6 2S1/2".to_string(), 11.267),
                ("5s2.5p5 2P*1/2".to_string(), 1.306423),
            ]
            .into_iter(),
        )
        .unwrap();
        let dm = DipoleBuilder::new(2.0)
            .with_override("5s2.5p5 2P*3/2", "5s.5p6 2S1/2", 1.0)
            .with_override("5s.5p6 2S1/2", "5s2.5p5 2P*1/2", 1.0)
            .build(&table, Half(1))
            .unwrap();
        assert_eq!(dm.mat[(0, 1)], 1.0);
        assert_eq!(dm.mat[(1, 2)], 1.0);
        assert_eq!(dm.mat[(0, 2)], 0.0);
    }

    #[test]
    fn connectivity_reaches_bright_states_only() {
        let dm = DipoleBuilder::new(2.0)
            .build(&bundled_xe(), Half(1))
            .unwrap();
        let i1 = dm.table.index_of("5s2.5p5 2P*3/2").unwrap();
        let reach = connected_indices(&dm.mat, &[i1]);
        // With q = 0 at m = 1/2 the ground pair (J <= 3/2) reaches J <= 5/2
        // directly and nothing beyond: the ten J >= 7/2 spectators stay
        // dark, since JK <-> JK elements vanish by parity in this table.
        assert_eq!(reach.len(), 48);
        for i in 0..dm.mat.nrows() {
            if !reach.contains(&i) {
                assert!(dm.table.levels[i].j.0 >= 7, "unexpectedly dark: {}", dm.table.levels[i].label);
            }
        }
    }
}
