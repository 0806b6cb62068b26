//! Independent checks of the dipole machinery.
//!
//! Radial integrals from adaptive quadrature are compared against the
//! closed-form expression for hydrogenic (n l) -> (n' l-1) elements built
//! from terminating hypergeometric series, which shares no code with the
//! quadrature path. The JK recoupling (two 6j symbols and a phase) is
//! compared against a brute-force expansion of each pair-coupled state into
//! |J_p m_p>|l m_l>|s m_s> product states with Clebsch-Gordan coefficients,
//! summing the one-electron q = 0 spherical-harmonic element directly.

use stirap::angular::clebsch_gordan;
use stirap::dipoles::{
    jk_jk_reduced, reduced_elem, DipoleBuilder, Radials,
};
use stirap::half::Half;
use stirap::levels::{bundled_xe, parse_level, Level};

/// Terminating 2F1(a, b; c; x) for nonpositive integer a.
fn hyp2f1_terminating(a: i32, b: i32, c: i32, x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    let mut k = 0;
    loop {
        sum += term;
        if a + k == 0 || b + k == 0 || k > 200 {
            return sum;
        }
        term *= (a + k) as f64 * (b + k) as f64 / ((c + k) as f64 * (k + 1) as f64) * x;
        k += 1;
    }
}

fn factorial(n: i32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Closed-form <n' l-1 | r | n l> for a hydrogen-like atom with charge z,
/// n' != n, in the convention that R_nl is positive at the origin.
fn gordon_radial(n_prime: i32, n: i32, l: i32, z: f64) -> f64 {
    assert!(n_prime != n && l >= 1);
    let nr = n - l - 1;
    let nrp = n_prime - l;
    let sign = if (n_prime - l) % 2 == 0 { 1.0 } else { -1.0 };
    let pref = sign / (4.0 * factorial(2 * l - 1));
    let root = (factorial(n + l) * factorial(n_prime + l - 1)
        / (factorial(nr) * factorial(nrp)))
    .sqrt();
    let nn = (n * n_prime) as f64;
    let diff = (n - n_prime) as f64;
    let sum = (n + n_prime) as f64;
    let body = (4.0 * nn).powi(l + 1) * diff.powi(n + n_prime - 2 * l - 2) / sum.powi(n + n_prime);
    let x = -4.0 * nn / (diff * diff);
    let brack = hyp2f1_terminating(-nr, -nrp, 2 * l, x)
        - (diff / sum).powi(2) * hyp2f1_terminating(-nr - 2, -nrp, 2 * l, x);
    pref * root * body * brack / z
}

#[test]
fn quadrature_matches_closed_form_radials() {
    for &z in &[1.0, 2.0] {
        let rad = Radials::new(z);
        for n in 2..=7 {
            for l in 1..=2.min(n - 1) {
                for n_prime in l..=7 {
                    if n_prime == n || n_prime < l {
                        continue;
                    }
                    let want = gordon_radial(n_prime, n, l, z);
                    let got = rad.get(n_prime, l - 1, n, l);
                    assert!(
                        (got - want).abs() <= 1e-9 * want.abs().max(1.0),
                        "radial ({n_prime},{}) <- ({n},{l}) at z={z}: {got} vs {want}",
                        l - 1
                    );
                }
            }
        }
    }
}

#[test]
fn bundled_radials_match_closed_form() {
    // The exact off-diagonal-n elements behind the bundled dipole matrix.
    let rad = Radials::new(2.0);
    for (got, want) in [
        (rad.get(4, 0, 5, 1), gordon_radial(4, 5, 1, 2.0)),
        (rad.get(6, 0, 5, 1), gordon_radial(6, 5, 1, 2.0)),
        (rad.get(5, 1, 6, 2), gordon_radial(5, 6, 2, 2.0)),
    ] {
        assert!((got - want).abs() <= 1e-9 * want.abs());
    }
}

/// <l' m | Y_10 | l m> from the closed-form cos(theta) matrix elements,
/// avoiding the Wigner-Eckart route entirely. Doubled m.
fn y10_elem(l_bra: i32, l_ket: i32, dm: i32) -> f64 {
    let m = dm as f64 / 2.0;
    let l = l_ket as f64;
    let c = if l_bra == l_ket + 1 {
        (((l + 1.0) * (l + 1.0) - m * m) / ((2.0 * l + 1.0) * (2.0 * l + 3.0))).sqrt()
    } else if l_bra == l_ket - 1 {
        ((l * l - m * m) / ((2.0 * l - 1.0) * (2.0 * l + 1.0))).sqrt()
    } else {
        return 0.0;
    };
    (3.0 / (4.0 * std::f64::consts::PI)).sqrt() * c
}

/// Brute-force <a, M | r Y_10 | b, M> for two JK levels: expand both into
/// product states and sum the one-electron element over the projections.
fn brute_force_jk_elem(rad: &Radials, a: &Level, b: &Level, dm_total: i32) -> f64 {
    let (pa, pb) = (a.parent.unwrap(), b.parent.unwrap());
    if pa != pb || a.s_e != b.s_e {
        return 0.0;
    }
    let jp2 = pa.jp.0;
    let (la2, lb2) = (2 * a.l_e, 2 * b.l_e);
    let (ka2, kb2) = (a.k.unwrap().0, b.k.unwrap().0);
    let (ja2, jb2) = (a.j.0, b.j.0);
    let radial = rad.get(a.n, a.l_e, b.n, b.l_e);
    let mut acc = 0.0;
    for dmp in (-jp2..=jp2).step_by(2) {
        for dms in [-1i32, 1] {
            let dml = dm_total - dmp - dms;
            if dml.abs() > la2.max(lb2) {
                continue;
            }
            let dmk = dmp + dml;
            let bra = clebsch_gordan(jp2, dmp, la2, dml, ka2, dmk)
                * clebsch_gordan(ka2, dmk, 1, dms, ja2, dm_total);
            let ket = clebsch_gordan(jp2, dmp, lb2, dml, kb2, dmk)
                * clebsch_gordan(kb2, dmk, 1, dms, jb2, dm_total);
            acc += bra * ket * y10_elem(a.l_e, b.l_e, dml);
        }
    }
    acc * radial
}

/// Wigner-Eckart factor recomputed from first principles is what the main
/// path multiplies the reduced element by; dividing it out of the brute
/// force would reintroduce the code under test, so compare full elements.
fn main_path_jk_elem(rad: &Radials, a: &Level, b: &Level, dm: i32) -> f64 {
    stirap::angular::wigner_eckart_q0(a.j.0, b.j.0, dm) * jk_jk_reduced(rad, a, b)
}

fn jk(label: &str) -> Level {
    parse_level(label).unwrap()
}

#[test]
fn jk_recoupling_matches_product_state_expansion() {
    // Twenty JK levels over three parents, including odd-parity p and f
    // Rydbergs that the bundled table does not carry, so the recoupling is
    // exercised on pairs with a nonzero dipole between them.
    let set: Vec<Level> = [
        "5s2.5p4.(3P2).6p 2[1]1/2",
        "5s2.5p4.(3P2).6p 2[1]3/2",
        "5s2.5p4.(3P2).6p 2[2]3/2",
        "5s2.5p4.(3P2).6p 2[2]5/2",
        "5s2.5p4.(3P2).6p 2[3]5/2",
        "5s2.5p4.(3P2).6p 2[3]7/2",
        "5s2.5p4.(3P2).5d 2[0]1/2",
        "5s2.5p4.(3P2).5d 2[1]1/2",
        "5s2.5p4.(3P2).5d 2[1]3/2",
        "5s2.5p4.(3P2).5d 2[2]3/2",
        "5s2.5p4.(3P2).5d 2[2]5/2",
        "5s2.5p4.(3P2).5d 2[3]5/2",
        "5s2.5p4.(3P1).6p 2[1]1/2",
        "5s2.5p4.(3P1).6p 2[1]3/2",
        "5s2.5p4.(3P1).6p 2[2]3/2",
        "5s2.5p4.(3P1).6p 2[2]5/2",
        "5s2.5p4.(3P1).6s 2[1]1/2",
        "5s2.5p4.(3P1).6s 2[1]3/2",
        "5s2.5p4.(1D2).4f 2[3]5/2",
        "5s2.5p4.(1D2).5d 2[2]5/2",
    ]
    .iter()
    .map(|l| jk(l))
    .collect();
    assert_eq!(set.len(), 20);
    let rad = Radials::new(2.0);
    let mut nonzero = 0;
    for i in 0..set.len() {
        for j in 0..set.len() {
            if i == j {
                continue;
            }
            let (a, b) = (&set[i], &set[j]);
            for dm in [1i32, 3] {
                if a.j.0 < dm || b.j.0 < dm {
                    continue;
                }
                let want = brute_force_jk_elem(&rad, a, b, dm);
                let got = main_path_jk_elem(&rad, a, b, dm);
                if want.abs() > 1e-12 {
                    nonzero += 1;
                    assert!(
                        ((got - want) / want).abs() < 1e-9,
                        "{} <- {} at m={dm}/2: {got} vs {want}",
                        a.label,
                        b.label
                    );
                } else {
                    assert!(
                        got.abs() < 1e-12,
                        "{} <- {} at m={dm}/2: expected 0, got {got}",
                        a.label,
                        b.label
                    );
                }
            }
        }
    }
    assert!(nonzero > 100, "too few coupled pairs exercised: {nonzero}");
}

#[test]
fn ground_couples_to_every_nearby_rydberg() {
    // The ground P term must reach every s or d JK state allowed by the
    // total-J selection rule; the stated approximation carries the bare
    // 5p -> n'l' element through Wigner-Eckart with the total J.
    let table = bundled_xe();
    let rad = Radials::new(2.0);
    let ground = &table.levels[0];
    let mut count = 0;
    for lv in &table.levels {
        if lv.scheme != stirap::levels::Scheme::Jk {
            continue;
        }
        if (lv.j.0 - ground.j.0).abs() > 2 {
            continue;
        }
        let red = reduced_elem(&rad, ground, lv);
        assert!(
            red.abs() > 1e-6,
            "ground uncoupled from {} though J allows it",
            lv.label
        );
        count += 1;
    }
    assert!(count >= 30, "selection swept too few states: {count}");
}

#[test]
fn wigner_eckart_m_dependence_of_full_elements() {
    // Between fixed J = 3/2 and J = 5/2 levels the ratio of the m = 1/2
    // and m = 3/2 elements is a pure geometry factor, sqrt(3/2), whatever
    // the radial physics does.
    let table = bundled_xe();
    let b = DipoleBuilder::new(2.0);
    let m12 = b.build(&table, Half(1)).unwrap();
    let m32 = b.build(&table, Half(3)).unwrap();
    let g = "5s2.5p5 2P*3/2";
    let up = "5s2.5p4.(3P2).5d 2[2]5/2";
    let e12 = m12.mat[(m12.table.index_of(g).unwrap(), m12.table.index_of(up).unwrap())];
    let e32 = m32.mat[(m32.table.index_of(g).unwrap(), m32.table.index_of(up).unwrap())];
    let ratio = e12 / e32;
    assert!(
        (ratio - 1.5f64.sqrt()).abs() < 1e-12,
        "m-ratio {ratio} vs sqrt(3/2)"
    );
}
