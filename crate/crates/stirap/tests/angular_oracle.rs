//! Cross-checks the prime-factorized Wigner symbol engine against a
//! deliberately naive reference: factorials held as exact big rationals,
//! the Racah series summed term by term, and a single square root taken at
//! the end. The two paths share no arithmetic code, so agreement to 1e-12
//! over a dense small-j sweep plus random draws up to j = 10 pins both the
//! series bookkeeping and the float conversion. Orthogonality sums add a
//! formula-level check that does not go through the Racah series at all.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use stirap::angular::{six_j, three_j};

fn fact(n: i32) -> BigRational {
    assert!(n >= 0);
    let mut f = BigInt::one();
    for k in 2..=n {
        f *= k;
    }
    BigRational::from_integer(f)
}

fn delta(da: i32, db: i32, dc: i32) -> BigRational {
    fact((da + db - dc) / 2) * fact((da - db + dc) / 2) * fact((-da + db + dc) / 2)
        / fact((da + db + dc) / 2 + 1)
}

fn triangle(da: i32, db: i32, dc: i32) -> bool {
    dc >= (da - db).abs() && dc <= da + db && (da + db + dc) % 2 == 0
}

/// Reference 3j in doubled arguments via the textbook factorial series.
fn oracle_three_j(dj1: i32, dj2: i32, dj3: i32, dm1: i32, dm2: i32, dm3: i32) -> f64 {
    if dm1 + dm2 + dm3 != 0
        || !triangle(dj1, dj2, dj3)
        || dm1.abs() > dj1
        || dm2.abs() > dj2
        || dm3.abs() > dj3
        || (dj1 - dm1) % 2 != 0
        || (dj2 - dm2) % 2 != 0
        || (dj3 - dm3) % 2 != 0
    {
        return 0.0;
    }
    let pref = delta(dj1, dj2, dj3)
        * fact((dj1 + dm1) / 2)
        * fact((dj1 - dm1) / 2)
        * fact((dj2 + dm2) / 2)
        * fact((dj2 - dm2) / 2)
        * fact((dj3 + dm3) / 2)
        * fact((dj3 - dm3) / 2);
    let a = (dj1 + dj2 - dj3) / 2;
    let b = (dj1 - dm1) / 2;
    let c = (dj2 + dm2) / 2;
    let d = (dj3 - dj2 + dm1) / 2;
    let e = (dj3 - dj1 - dm2) / 2;
    let mut sum = BigRational::zero();
    for k in (-d).max(-e).max(0)..=a.min(b).min(c) {
        let term = (fact(k) * fact(a - k) * fact(b - k) * fact(c - k) * fact(d + k) * fact(e + k))
            .recip();
        sum += if k % 2 == 0 { term } else { -term };
    }
    if (dj1 - dj2 - dm3) / 2 % 2 != 0 {
        sum = -sum;
    }
    let mag2 = &pref * &sum * &sum;
    let mag = mag2.to_f64().expect("oracle magnitude").sqrt();
    if sum.is_negative() {
        -mag
    } else {
        mag
    }
}

/// Reference 6j in doubled arguments via the textbook factorial series.
fn oracle_six_j(da: i32, db: i32, dc: i32, dd: i32, de: i32, df: i32) -> f64 {
    if !triangle(da, db, dc)
        || !triangle(da, de, df)
        || !triangle(dd, db, df)
        || !triangle(dd, de, dc)
    {
        return 0.0;
    }
    let pref = delta(da, db, dc) * delta(da, de, df) * delta(dd, db, df) * delta(dd, de, dc);
    let t1 = (da + db + dc) / 2;
    let t2 = (da + de + df) / 2;
    let t3 = (dd + db + df) / 2;
    let t4 = (dd + de + dc) / 2;
    let q1 = (da + db + dd + de) / 2;
    let q2 = (db + dc + de + df) / 2;
    let q3 = (da + dc + dd + df) / 2;
    let mut sum = BigRational::zero();
    for k in t1.max(t2).max(t3).max(t4)..=q1.min(q2).min(q3) {
        let term = fact(k + 1)
            / (fact(k - t1)
                * fact(k - t2)
                * fact(k - t3)
                * fact(k - t4)
                * fact(q1 - k)
                * fact(q2 - k)
                * fact(q3 - k));
        sum += if k % 2 == 0 { term } else { -term };
    }
    let mag2 = &pref * &sum * &sum;
    let mag = mag2.to_f64().expect("oracle magnitude").sqrt();
    if sum.is_negative() {
        -mag
    } else {
        mag
    }
}

#[test]
fn three_j_matches_oracle_small_j_exhaustive() {
    let mut checked = 0usize;
    for dj1 in 0..=8 {
        for dj2 in 0..=8 {
            for dj3 in 0..=8 {
                if !triangle(dj1, dj2, dj3) {
                    continue;
                }
                for dm1 in (-dj1..=dj1).step_by(2) {
                    for dm2 in (-dj2..=dj2).step_by(2) {
                        let dm3 = -(dm1 + dm2);
                        if dm3.abs() > dj3 {
                            continue;
                        }
                        let got = three_j(dj1, dj2, dj3, dm1, dm2, dm3);
                        let want = oracle_three_j(dj1, dj2, dj3, dm1, dm2, dm3);
                        assert!(
                            (got - want).abs() <= 1e-12,
                            "3j({dj1},{dj2},{dj3};{dm1},{dm2},{dm3})/2: {got} vs {want}"
                        );
                        checked += 1;
                    }
                }
            }
        }
    }
    assert!(checked > 1000, "sweep unexpectedly small: {checked}");
}

#[test]
fn six_j_matches_oracle_small_j_exhaustive() {
    let mut checked = 0usize;
    for da in 0..=6 {
        for db in 0..=6 {
            for dc in 0..=6 {
                for dd in 0..=6 {
                    for de in 0..=6 {
                        for df in 0..=6 {
                            let got = six_j(da, db, dc, dd, de, df);
                            let want = oracle_six_j(da, db, dc, dd, de, df);
                            assert!(
                                (got - want).abs() <= 1e-12,
                                "6j({da},{db},{dc};{dd},{de},{df})/2: {got} vs {want}"
                            );
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    assert!(checked > 10_000);
}

#[test]
fn three_j_orthogonality() {
    // Sum over m1, m2 of (2j3+1) (j1 j2 j3; m1 m2 m3)(j1 j2 j3'; m1 m2 m3')
    // collapses to delta(j3,j3') delta(m3,m3'). Integer and half-integer.
    for &(dj1, dj2) in &[(4, 6), (3, 5), (2, 2), (5, 5)] {
        for dj3 in ((dj1 - dj2).abs()..=dj1 + dj2).step_by(2) {
            for dj3p in ((dj1 - dj2).abs()..=dj1 + dj2).step_by(2) {
                for dm3 in (-dj3..=dj3).step_by(2) {
                    for dm3p in (-dj3p..=dj3p).step_by(2) {
                        let mut acc = 0.0;
                        for dm1 in (-dj1..=dj1).step_by(2) {
                            for dm2 in (-dj2..=dj2).step_by(2) {
                                acc += three_j(dj1, dj2, dj3, dm1, dm2, dm3)
                                    * three_j(dj1, dj2, dj3p, dm1, dm2, dm3p);
                            }
                        }
                        let want = if dj3 == dj3p && dm3 == dm3p {
                            1.0 / (dj3 + 1) as f64
                        } else {
                            0.0
                        };
                        assert!(
                            (acc - want).abs() < 1e-13,
                            "orthogonality ({dj1},{dj2}) j3 {dj3}/{dj3p} m3 {dm3}/{dm3p}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn six_j_orthogonality() {
    // Sum over x of (2x+1) {a b x; c d p}{a b x; c d q} = delta(p,q)/(2p+1).
    let (da, db, dc, dd) = (3, 5, 3, 5);
    for dp in 0..=10 {
        for dq in 0..=10 {
            let mut acc = 0.0;
            for dx in 0..=12 {
                acc += (dx + 1) as f64
                    * six_j(da, db, dx, dc, dd, dp)
                    * six_j(da, db, dx, dc, dd, dq);
            }
            let want = if dp == dq && triangle(da, dd, dp) && triangle(db, dc, dp) {
                1.0 / (dp + 1) as f64
            } else {
                0.0
            };
            assert!((acc - want).abs() < 1e-13, "6j orthogonality p={dp} q={dq}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    /// Random draws up to j = 10 stay within 1e-12 of the naive reference,
    /// including the cache's canonicalization phases.
    #[test]
    fn wigner_symbols_match_oracle_random(
        dj1 in 0i32..=20,
        dj2 in 0i32..=20,
        k3 in 0u32..=40,
        s1 in 0u32..=40,
        s2 in 0u32..=40,
        d6 in prop::array::uniform4(0i32..=20),
    ) {
        // 3j: force a valid triad and projections from the raw draws.
        let lo = (dj1 - dj2).abs();
        let hi = dj1 + dj2;
        let dj3 = lo + (k3 as i32 * 2) % (hi - lo + 2);
        let dm1 = -dj1 + 2 * (s1 as i32 % (dj1 + 1));
        let dm2 = -dj2 + 2 * (s2 as i32 % (dj2 + 1));
        let dm3 = -(dm1 + dm2);
        if dm3.abs() <= dj3 {
            let got = three_j(dj1, dj2, dj3, dm1, dm2, dm3);
            let want = oracle_three_j(dj1, dj2, dj3, dm1, dm2, dm3);
            prop_assert!((got - want).abs() <= 1e-12);
        }
        // 6j: two free triads sharing the drawn momenta.
        let [a, b, c, d] = d6;
        let got = six_j(a, b, (a - b).abs(), d, c, (b - d).abs().max((a - c).abs()));
        let want = oracle_six_j(a, b, (a - b).abs(), d, c, (b - d).abs().max((a - c).abs()));
        prop_assert!((got - want).abs() <= 1e-12);
    }
}
