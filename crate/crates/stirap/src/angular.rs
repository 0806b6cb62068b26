//! Exact Wigner 3j and 6j symbols for angular momentum recoupling.
//!
//! All angular momenta use the doubled-integer convention of [`crate::half`],
//! so `three_j` takes six doubled arguments and half-integer momenta are
//! first-class. Values are computed exactly: the square-root prefactor is
//! assembled as a prime-exponent vector over factorials, the alternating
//! Racah sum as a big-integer rational, and only the final result is rounded
//! to `f64`. Relative error is a few ulps independent of magnitude
//! cancellation in the sum, which matters because dipole chains multiply
//! several symbols together and the intermediate symbols here are not tiny.
//!
//! Results are memoized behind canonicalization: the 12 classical symmetries
//! of the 3j symbol (column permutations and simultaneous m negation) and the
//! 24 of the 6j symbol (column permutations and row flips in pairs of
//! columns) map each request onto a lexicographically minimal key, so a table
//! fill for a multi-level system hits each distinct value once.

use crate::half::{phase_from_doubled, triangle_ok, Half};
use dashmap::DashMap;
use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::sync::OnceLock;

/// Largest factorial argument supported by the prime tables. j up to ~60
/// stays inside this; the level tables used here never exceed j = 9/2.
const MAX_FACT: usize = 256;

fn primes() -> &'static Vec<u32> {
    static P: OnceLock<Vec<u32>> = OnceLock::new();
    P.get_or_init(|| {
        let mut sieve = vec![true; MAX_FACT + 1];
        let mut out = Vec::new();
        for n in 2..=MAX_FACT {
            if sieve[n] {
                out.push(n as u32);
                let mut m = n * n;
                while m <= MAX_FACT {
                    sieve[m] = false;
                    m += n;
                }
            }
        }
        out
    })
}

/// Exponent of each prime in n! (Legendre's formula), cached per n.
fn fact_exponents(n: usize) -> Vec<i64> {
    assert!(n <= MAX_FACT, "factorial argument {n} exceeds table");
    let ps = primes();
    let mut out = vec![0i64; ps.len()];
    for (i, &p) in ps.iter().enumerate() {
        let p = p as usize;
        if p > n {
            break;
        }
        let mut q = p;
        while q <= n {
            out[i] += (n / q) as i64;
            q = match q.checked_mul(p) {
                Some(v) => v,
                None => break,
            };
        }
    }
    out
}

/// Product of factorials held as a prime-exponent vector, supporting exact
/// multiplication and division without ever forming the huge integers.
#[derive(Clone)]
struct FactProduct {
    exps: Vec<i64>,
}

impl FactProduct {
    fn one() -> Self {
        FactProduct {
            exps: vec![0; primes().len()],
        }
    }

    fn mul_fact(&mut self, n: i32) {
        debug_assert!(n >= 0);
        for (e, d) in self.exps.iter_mut().zip(fact_exponents(n as usize)) {
            *e += d;
        }
    }

    fn div_fact(&mut self, n: i32) {
        debug_assert!(n >= 0);
        for (e, d) in self.exps.iter_mut().zip(fact_exponents(n as usize)) {
            *e -= d;
        }
    }

    /// Split into numerator and denominator big integers.
    fn to_ratio(&self) -> (BigUint, BigUint) {
        let ps = primes();
        let mut num = BigUint::one();
        let mut den = BigUint::one();
        for (i, &e) in self.exps.iter().enumerate() {
            if e > 0 {
                num *= BigUint::from(ps[i]).pow(e as u32);
            } else if e < 0 {
                den *= BigUint::from(ps[i]).pow((-e) as u32);
            }
        }
        (num, den)
    }
}

/// Minimal exact rational on BigInt, reduced after each addition. Only the
/// operations the Racah sums need.
#[derive(Clone)]
struct Rat {
    num: BigInt,
    den: BigInt,
}

impl Rat {
    fn zero() -> Self {
        Rat {
            num: BigInt::zero(),
            den: BigInt::one(),
        }
    }

    /// 1/d with sign attached to the numerator.
    fn inv_of(d: BigUint, negative: bool) -> Self {
        let num = if negative {
            BigInt::from(-1)
        } else {
            BigInt::one()
        };
        Rat {
            num,
            den: BigInt::from_biguint(Sign::Plus, d),
        }
    }

    fn scale(&mut self, k: &BigUint) {
        self.num *= BigInt::from_biguint(Sign::Plus, k.clone());
        self.reduce();
    }

    fn add(&mut self, other: &Rat) {
        self.num = &self.num * &other.den + &other.num * &self.den;
        self.den = &self.den * &other.den;
        self.reduce();
    }

    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.den = BigInt::one();
            return;
        }
        let g = self.num.gcd(&self.den);
        self.num /= &g;
        self.den /= &g;
    }
}

/// √(n) for a BigUint, via bit-length scaling so arbitrarily large values
/// convert without overflow: n = m·4^s with m in f64 range, √n = √m·2^s.
fn big_sqrt(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 900 {
        return n.to_f64().expect("BigUint to f64").sqrt();
    }
    let shift = (bits - 64) & !1u64; // even shift keeps the power a square
    let m = (n >> shift).to_f64().expect("scaled BigUint to f64");
    m.sqrt() * (2f64).powi((shift / 2) as i32)
}

/// sign · √(pref) · |sum| rounded once to f64, with pref = n/d exact and the
/// sum entering squared under the root so only two sqrt roundings occur.
fn assemble(pref: &FactProduct, sum: &Rat) -> f64 {
    if sum.num.is_zero() {
        return 0.0;
    }
    let (pn, pd) = pref.to_ratio();
    let sn = sum.num.magnitude();
    let sd = sum.den.magnitude();
    let num = pn * sn * sn;
    let den = pd * sd * sd;
    let mag = big_sqrt(&num) / big_sqrt(&den);
    if sum.num.is_negative() {
        -mag
    } else {
        mag
    }
}

/// Selection rules for a 3j symbol with doubled arguments.
fn three_j_allowed(dj: [i32; 3], dm: [i32; 3]) -> bool {
    if dm[0] + dm[1] + dm[2] != 0 {
        return false;
    }
    for k in 0..3 {
        if dj[k] < 0 || dm[k].abs() > dj[k] || (dj[k] - dm[k]) % 2 != 0 {
            return false;
        }
    }
    triangle_ok(Half(dj[0]), Half(dj[1]), Half(dj[2]))
}

/// Raw Racah evaluation of a 3j symbol; caller has checked selection rules.
fn three_j_exact(dj: [i32; 3], dm: [i32; 3]) -> f64 {
    let [dj1, dj2, dj3] = dj;
    let [dm1, dm2, dm3] = dm;
    // Delta(j1 j2 j3) and the six (j ± m)! factors, all exact exponents.
    let mut pref = FactProduct::one();
    pref.mul_fact((dj1 + dj2 - dj3) / 2);
    pref.mul_fact((dj1 - dj2 + dj3) / 2);
    pref.mul_fact((-dj1 + dj2 + dj3) / 2);
    pref.div_fact((dj1 + dj2 + dj3) / 2 + 1);
    pref.mul_fact((dj1 + dm1) / 2);
    pref.mul_fact((dj1 - dm1) / 2);
    pref.mul_fact((dj2 + dm2) / 2);
    pref.mul_fact((dj2 - dm2) / 2);
    pref.mul_fact((dj3 + dm3) / 2);
    pref.mul_fact((dj3 - dm3) / 2);

    // Sum over k of (-1)^k / [k! (j1+j2-j3-k)! (j1-m1-k)! (j2+m2-k)!
    //                         (j3-j2+m1+k)! (j3-j1-m2+k)!]
    let a = (dj1 + dj2 - dj3) / 2;
    let b = (dj1 - dm1) / 2;
    let c = (dj2 + dm2) / 2;
    let d = (dj3 - dj2 + dm1) / 2;
    let e = (dj3 - dj1 - dm2) / 2;
    let k_min = (-d).max(-e).max(0);
    let k_max = a.min(b).min(c);
    let mut sum = Rat::zero();
    for k in k_min..=k_max {
        let mut den = FactProduct::one();
        den.mul_fact(k);
        den.mul_fact(a - k);
        den.mul_fact(b - k);
        den.mul_fact(c - k);
        den.mul_fact(d + k);
        den.mul_fact(e + k);
        let (dn, dd) = den.to_ratio();
        debug_assert!(dd.is_one());
        sum.add(&Rat::inv_of(dn, k % 2 != 0));
    }
    // Overall phase (-1)^(j1 - j2 - m3).
    if (dj1 - dj2 - dm3) / 2 % 2 != 0 {
        sum.num = -sum.num;
    }
    assemble(&pref, &sum)
}

/// Canonical cache key for a 3j symbol: minimum over column permutations and
/// m negation, with the residual phase (-1)^(j1+j2+j3) tracked per variant.
fn canon3(dj: [i32; 3], dm: [i32; 3]) -> ([i32; 6], f64) {
    const PERMS: [([usize; 3], bool); 6] = [
        ([0, 1, 2], false),
        ([1, 2, 0], false),
        ([2, 0, 1], false),
        ([0, 2, 1], true),
        ([1, 0, 2], true),
        ([2, 1, 0], true),
    ];
    let odd_phase = (dj[0] + dj[1] + dj[2]) / 2 % 2 != 0;
    let mut best: Option<([i32; 6], f64)> = None;
    for &(p, odd) in &PERMS {
        for negate in [false, true] {
            let s = if negate { -1 } else { 1 };
            let key = [
                dj[p[0]],
                dj[p[1]],
                dj[p[2]],
                s * dm[p[0]],
                s * dm[p[1]],
                s * dm[p[2]],
            ];
            let flip = (odd ^ negate) && odd_phase;
            let phase = if flip { -1.0 } else { 1.0 };
            if best.as_ref().map_or(true, |(bk, _)| key < *bk) {
                best = Some((key, phase));
            }
        }
    }
    best.unwrap()
}

fn cache3() -> &'static DashMap<[i32; 6], f64> {
    static C: OnceLock<DashMap<[i32; 6], f64>> = OnceLock::new();
    C.get_or_init(DashMap::new)
}

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3) with doubled arguments.
pub fn three_j(dj1: i32, dj2: i32, dj3: i32, dm1: i32, dm2: i32, dm3: i32) -> f64 {
    let dj = [dj1, dj2, dj3];
    let dm = [dm1, dm2, dm3];
    if !three_j_allowed(dj, dm) {
        return 0.0;
    }
    let (key, phase) = canon3(dj, dm);
    if let Some(v) = cache3().get(&key) {
        return phase * *v;
    }
    let v = three_j_exact(
        [key[0], key[1], key[2]],
        [key[3], key[4], key[5]],
    );
    cache3().insert(key, v);
    phase * v
}

/// Triangle conditions of all four 6j triads.
fn six_j_allowed(d: [i32; 6]) -> bool {
    let [a, b, c, dd, e, f] = d.map(Half);
    triangle_ok(a, b, c)
        && triangle_ok(a, e, f)
        && triangle_ok(dd, b, f)
        && triangle_ok(dd, e, c)
}

/// Delta(a b c) contribution as exact factorial exponents.
fn mul_delta(pref: &mut FactProduct, da: i32, db: i32, dc: i32) {
    pref.mul_fact((da + db - dc) / 2);
    pref.mul_fact((da - db + dc) / 2);
    pref.mul_fact((-da + db + dc) / 2);
    pref.div_fact((da + db + dc) / 2 + 1);
}

/// Raw Racah evaluation of a 6j symbol; caller has checked the triads.
fn six_j_exact(d: [i32; 6]) -> f64 {
    let [da, db, dc, dd, de, df] = d;
    let mut pref = FactProduct::one();
    mul_delta(&mut pref, da, db, dc);
    mul_delta(&mut pref, da, de, df);
    mul_delta(&mut pref, dd, db, df);
    mul_delta(&mut pref, dd, de, dc);

    // Sum over k of (-1)^k (k+1)! / [(k-t1)! (k-t2)! (k-t3)! (k-t4)!
    //                                (q1-k)! (q2-k)! (q3-k)!]
    let t1 = (da + db + dc) / 2;
    let t2 = (da + de + df) / 2;
    let t3 = (dd + db + df) / 2;
    let t4 = (dd + de + dc) / 2;
    let q1 = (da + db + dd + de) / 2;
    let q2 = (db + dc + de + df) / 2;
    let q3 = (da + dc + dd + df) / 2;
    let k_min = t1.max(t2).max(t3).max(t4);
    let k_max = q1.min(q2).min(q3);
    let mut sum = Rat::zero();
    for k in k_min..=k_max {
        let mut den = FactProduct::one();
        den.mul_fact(k - t1);
        den.mul_fact(k - t2);
        den.mul_fact(k - t3);
        den.mul_fact(k - t4);
        den.mul_fact(q1 - k);
        den.mul_fact(q2 - k);
        den.mul_fact(q3 - k);
        let (dn, dd2) = den.to_ratio();
        debug_assert!(dd2.is_one());
        let mut term = Rat::inv_of(dn, k % 2 != 0);
        // (k+1)! numerator.
        let mut kf = FactProduct::one();
        kf.mul_fact(k + 1);
        let (kn, kdd) = kf.to_ratio();
        debug_assert!(kdd.is_one());
        term.scale(&kn);
        sum.add(&term);
    }
    assemble(&pref, &sum)
}

/// Canonical cache key for a 6j symbol: minimum over the 24 symmetries
/// (column permutations and upper/lower flips of two columns at a time),
/// all of which leave the value unchanged.
fn canon6(d: [i32; 6]) -> [i32; 6] {
    const COLPERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    // Flip masks with an even number of flipped columns.
    const FLIPS: [[bool; 3]; 4] = [
        [false, false, false],
        [true, true, false],
        [true, false, true],
        [false, true, true],
    ];
    let top = [d[0], d[1], d[2]];
    let bot = [d[3], d[4], d[5]];
    let mut best = [i32::MAX; 6];
    for p in &COLPERMS {
        for f in &FLIPS {
            let mut key = [0i32; 6];
            for c in 0..3 {
                let (u, l) = if f[c] {
                    (bot[p[c]], top[p[c]])
                } else {
                    (top[p[c]], bot[p[c]])
                };
                key[c] = u;
                key[c + 3] = l;
            }
            if key < best {
                best = key;
            }
        }
    }
    best
}

fn cache6() -> &'static DashMap<[i32; 6], f64> {
    static C: OnceLock<DashMap<[i32; 6], f64>> = OnceLock::new();
    C.get_or_init(DashMap::new)
}

/// Wigner 6j symbol {a b c; d e f} with doubled arguments.
pub fn six_j(da: i32, db: i32, dc: i32, dd: i32, de: i32, df: i32) -> f64 {
    let d = [da, db, dc, dd, de, df];
    if d.iter().any(|&x| x < 0) || !six_j_allowed(d) {
        return 0.0;
    }
    let key = canon6(d);
    if let Some(v) = cache6().get(&key) {
        return *v;
    }
    let v = six_j_exact(key);
    cache6().insert(key, v);
    v
}

/// Clebsch-Gordan coefficient <j1 m1 j2 m2 | J M> with doubled arguments.
pub fn clebsch_gordan(dj1: i32, dm1: i32, dj2: i32, dm2: i32, dj: i32, dm: i32) -> f64 {
    if dm1 + dm2 != dm {
        return 0.0;
    }
    let phase = phase_from_doubled(dj1 - dj2 + dm);
    let dim = ((dj + 1) as f64).sqrt();
    phase * dim * three_j(dj1, dj2, dj, dm1, dm2, -dm)
}

/// Wigner-Eckart projection for a rank-1, q = 0 operator: the m-dependent
/// factor multiplying the reduced matrix element, (-1)^(J'-m) (J' 1 J; -m 0 m).
pub fn wigner_eckart_q0(dj_to: i32, dj_from: i32, dm: i32) -> f64 {
    let phase = phase_from_doubled(dj_to - dm);
    phase * three_j(dj_to, 2, dj_from, -dm, 0, dm)
}
