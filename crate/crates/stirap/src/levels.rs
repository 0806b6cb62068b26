//! Atomic level tables: spectroscopic label parsing, energies, and the
//! quantum numbers needed to build dipole couplings.
//!
//! Two coupling schemes appear. Low-lying states carry LS term labels such
//! as `5s2.5p5 2P*3/2` (the `*` marks odd parity). Core-excited Rydberg
//! states use JK (pair) coupling, written `5s2.5p4.(3P2).6d 2[0]1/2`: the
//! 5p4 core couples to a parent term with angular momentum J_p, the outer
//! electron's orbital momentum couples to J_p giving K, and its spin then
//! couples to K giving the total J. Labels are parsed from either plain
//! ASCII or typeset variants with unicode super/subscripts and degree-sign
//! parity marks.
//!
//! The bundled xenon-ion table holds 58 levels: the spin-orbit split ground
//! pair, the 5s and 4s hole states, the nine core-excited states behind the
//! strong absorption lines near 17 eV plus five satellites sharing their
//! upper levels, and the 6s/5d/6d manifolds that act as spectators. Every
//! level has J >= 1/2, so the m = 1/2 projection keeps all 58.

use crate::half::Half;
use serde::Deserialize;
use std::fmt;
use std::io::Read;
use std::path::Path;
use thiserror::Error;

/// One occupied shell of a configuration string, e.g. `5p4` -> n=5, l=1,
/// occ=4.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shell {
    pub n: i32,
    pub l: i32,
    pub occ: i32,
}

/// Core parent term of a JK-coupled state: total J_p with its LS character.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Parent {
    pub jp: Half,
    pub lp: i32,
    pub sp: Half,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Whole-atom LS term (ground pair and hole states).
    Ls,
    /// Pair coupling of an outer electron to a core parent term.
    Jk,
}

/// One atomic eigenstate: energy, parsed quantum numbers, and optionally a
/// magnetic projection once an m subspace has been selected.
#[derive(Clone, Debug)]
pub struct Level {
    pub id: usize,
    pub label: String,
    pub energy_ev: f64,
    pub scheme: Scheme,
    /// Principal quantum number of the outer (or active) electron.
    pub n: i32,
    /// Orbital momentum of the outer electron; for LS terms, the total L.
    pub l_e: i32,
    /// Spin of the outer electron; for LS terms, the total S.
    pub s_e: Half,
    /// Pair momentum K of a JK state.
    pub k: Option<Half>,
    pub j: Half,
    pub parent: Option<Parent>,
    /// +1 even, -1 odd.
    pub parity: i32,
    pub shells: Vec<Shell>,
    /// Projection of J, set by [`LevelTable::select_m`].
    pub m: Option<Half>,
}

impl Level {
    /// LS doublet S state created by promoting a single s electron into a
    /// closed p shell; these couple to the ground term only through the
    /// s <-> 5p jump of the active electron.
    pub fn is_s_hole(&self) -> bool {
        self.scheme == Scheme::Ls
            && self.l_e == 0
            && self.s_e == Half(1)
            && self.j == Half(1)
            && self.shells.first().map(|s| s.occ == 1).unwrap_or(false)
    }

    /// Member of the odd-parity ground P term.
    pub fn is_ground_p(&self) -> bool {
        self.scheme == Scheme::Ls && self.l_e == 1 && self.parity == -1
    }
}

#[derive(Debug, Error)]
pub enum LevelError {
    #[error("level label {0:?}: {1}")]
    Parse(String, String),
    #[error("rows failed to parse:\n{}", format_rows(.0))]
    Rows(Vec<(usize, String)>),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn format_rows(rows: &[(usize, String)]) -> String {
    rows.iter()
        .map(|(n, e)| format!("  line {n}: {e}"))
        .collect::<Vec<_>>()
        .join("\n")
}

const L_LETTERS: &str = "SPDFGH";
const L_LOWER: &str = "spdfgh";

/// Map typeset label variants onto the canonical ASCII grammar: superscript
/// and subscript digits become plain digits, the degree sign becomes `*`,
/// and the fraction slash becomes `/`.
fn normalize_label(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    for c in label.chars() {
        let mapped = match c {
            '\u{2070}' => '0',
            '\u{00b9}' => '1',
            '\u{00b2}' => '2',
            '\u{00b3}' => '3',
            '\u{2074}'..='\u{2079}' => {
                char::from_digit(c as u32 - 0x2070, 10).unwrap()
            }
            '\u{2080}'..='\u{2089}' => {
                char::from_digit(c as u32 - 0x2080, 10).unwrap()
            }
            '\u{00b0}' | '\u{2218}' => '*', // degree / ring parity marks
            '\u{2044}' => '/',              // fraction slash
            _ => c,
        };
        out.push(mapped);
    }
    out
}

/// "3/2" -> Half(3), "2" -> Half(4).
fn parse_half(s: &str) -> Result<Half, String> {
    if let Some((num, den)) = s.split_once('/') {
        if den.trim() != "2" {
            return Err(format!("fraction {s:?} must have denominator 2"));
        }
        let n: i32 = num
            .trim()
            .parse()
            .map_err(|_| format!("bad numerator in {s:?}"))?;
        Ok(Half(n))
    } else {
        let n: i32 = s.trim().parse().map_err(|_| format!("bad integer {s:?}"))?;
        Ok(Half(2 * n))
    }
}

/// Parse a spectroscopic label. The energy and id are attached by the
/// caller; `m` starts unset.
pub fn parse_level(label: &str) -> Result<Level, LevelError> {
    let norm = normalize_label(label);
    let err = |msg: &str| LevelError::Parse(label.to_string(), msg.to_string());
    let (config, term) = norm
        .rsplit_once(' ')
        .ok_or_else(|| err("expected 'config term'"))?;

    let mut shells = Vec::new();
    let mut parent = None;
    for tok in config.split('.') {
        if let Some(t) = tok.strip_prefix('(') {
            let t = t.strip_suffix(')').ok_or_else(|| err("unclosed parent"))?;
            let mut ch = t.chars();
            let mult = ch
                .next()
                .and_then(|c| c.to_digit(10))
                .ok_or_else(|| err("parent multiplicity"))? as i32;
            let lp = ch
                .next()
                .and_then(|c| L_LETTERS.find(c))
                .ok_or_else(|| err("parent L letter"))? as i32;
            let jp = parse_half(ch.as_str()).map_err(|e| err(&e))?;
            parent = Some(Parent {
                jp,
                lp,
                sp: Half(mult - 1),
            });
        } else {
            let mut ch = tok.chars();
            let n = ch
                .next()
                .and_then(|c| c.to_digit(10))
                .ok_or_else(|| err("shell n"))? as i32;
            let l = ch
                .next()
                .and_then(|c| L_LOWER.find(c))
                .ok_or_else(|| err("shell letter"))? as i32;
            let rest = ch.as_str();
            let occ = if rest.is_empty() {
                1
            } else {
                rest.parse().map_err(|_| err("shell occupancy"))?
            };
            shells.push(Shell { n, l, occ });
        }
    }
    let outer = *shells.last().ok_or_else(|| err("no shells"))?;
    let config_parity = if shells.iter().map(|s| s.l * s.occ).sum::<i32>() % 2 == 0 {
        1
    } else {
        -1
    };

    if let Some(open) = term.find('[') {
        // JK term: 2[K]J.
        let close = term.find(']').ok_or_else(|| err("unclosed [K]"))?;
        let mult: i32 = term[..open].parse().map_err(|_| err("JK multiplicity"))?;
        let k = parse_half(&term[open + 1..close]).map_err(|e| err(&e))?;
        let j = parse_half(&term[close + 1..]).map_err(|e| err(&e))?;
        Ok(Level {
            id: 0,
            label: label.to_string(),
            energy_ev: 0.0,
            scheme: Scheme::Jk,
            n: outer.n,
            l_e: outer.l,
            s_e: Half(mult - 1),
            k: Some(k),
            j,
            parent,
            parity: config_parity,
            shells,
            m: None,
        })
    } else {
        // LS term: 2S+1, L letter, optional * for odd parity, J.
        let mut ch = term.chars();
        let mult = ch
            .next()
            .and_then(|c| c.to_digit(10))
            .ok_or_else(|| err("LS multiplicity"))? as i32;
        let l = ch
            .next()
            .and_then(|c| L_LETTERS.find(c))
            .ok_or_else(|| err("LS L letter"))? as i32;
        let mut rest = ch.as_str();
        let odd = rest.starts_with('*');
        if odd {
            rest = &rest[1..];
        }
        let j = parse_half(rest).map_err(|e| err(&e))?;
        Ok(Level {
            id: 0,
            label: label.to_string(),
            energy_ev: 0.0,
            scheme: Scheme::Ls,
            n: outer.n,
            l_e: l,
            s_e: Half(mult - 1),
            k: None,
            j,
            parent: None,
            parity: if odd { -1 } else { config_parity },
            shells,
            m: None,
        })
    }
}

/// Ordered collection of levels; the order fixes the basis of every matrix
/// built from it.
#[derive(Clone, Debug, Default)]
pub struct LevelTable {
    pub levels: Vec<Level>,
}

#[derive(Deserialize)]
struct Row {
    label: String,
    #[serde(rename = "energy_eV")]
    energy_ev: f64,
}

impl LevelTable {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Build from (label, energy) pairs, failing with every bad row listed.
    pub fn from_rows<I>(rows: I) -> Result<Self, LevelError>
    where
        I: IntoIterator<Item = (String, f64)>,
    {
        let mut levels = Vec::new();
        let mut bad = Vec::new();
        for (line, (label, energy)) in rows.into_iter().enumerate() {
            match parse_level(&label) {
                Ok(mut lv) => {
                    lv.id = levels.len();
                    lv.energy_ev = energy;
                    levels.push(lv);
                }
                Err(e) => bad.push((line + 1, e.to_string())),
            }
        }
        if bad.is_empty() {
            Ok(LevelTable { levels })
        } else {
            Err(LevelError::Rows(bad))
        }
    }

    /// CSV with header `label,energy_eV`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, LevelError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<Row>() {
            let row = rec?;
            rows.push((row.label, row.energy_ev));
        }
        Self::from_rows(rows)
    }

    /// JSON array of {label, energy_eV}.
    pub fn from_json(text: &str) -> Result<Self, LevelError> {
        let rows: Vec<Row> = serde_json::from_str(text)?;
        Self::from_rows(rows.into_iter().map(|r| (r.label, r.energy_ev)))
    }

    /// Load by extension: `.json` or anything else treated as CSV.
    pub fn from_path(path: &Path) -> Result<Self, LevelError> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().map(|e| e == "json").unwrap_or(false) {
            Self::from_json(&text)
        } else {
            Self::from_csv(text.as_bytes())
        }
    }

    /// Retain the levels that support projection m, stamping it on each.
    pub fn select_m(&self, m: Half) -> LevelTable {
        let mut out = Vec::new();
        for lv in &self.levels {
            if lv.j.0 >= m.0.abs() {
                let mut lv = lv.clone();
                lv.m = Some(m);
                out.push(lv);
            }
        }
        LevelTable { levels: out }
    }

    /// Keep the given indices, preserving order.
    pub fn subset(&self, keep: &[usize]) -> LevelTable {
        LevelTable {
            levels: keep.iter().map(|&i| self.levels[i].clone()).collect(),
        }
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.levels.iter().position(|lv| lv.label == label)
    }

    /// Energies in eV in table order.
    pub fn energies_ev(&self) -> Vec<f64> {
        self.levels.iter().map(|lv| lv.energy_ev).collect()
    }
}

impl fmt::Display for LevelTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for lv in &self.levels {
            writeln!(f, "{:3}  {:>10.6} eV  J={}  {}", lv.id, lv.energy_ev, lv.j, lv.label)?;
        }
        Ok(())
    }
}

/// Fine-structure splitting of the ground term, eV.
pub const GROUND_SPLITTING_EV: f64 = 1.306423;

/// Strong absorption lines of the bundled model out of the J=3/2 ground
/// component (transition energies, eV). The weaker spectator lines in the
/// same window are real transitions of the model but are not tracked by
/// name.
pub const XE_STRONG_LINES_32_EV: [f64; 9] = [
    16.745426, 16.932476, 17.11758, 17.199905, 17.245493, 17.901446, 18.005323, 18.139575,
    18.216733,
];

/// Strong absorption lines out of the J=1/2 ground component (transition
/// energies, eV). The 16.698900 entry shares its upper level with the
/// 18.005323 line of the other list, which is what couples the two series.
pub const XE_STRONG_LINES_12_EV: [f64; 6] = [
    16.564679, 16.698900, 16.787873, 17.053801, 17.735577, 17.862535,
];

/// The bundled xenon-ion table. Energies are eV above the J=3/2 ground
/// state; the strong-line upper levels sit at their absorption energies
/// from whichever ground component they share a line with.
pub fn bundled_xe() -> LevelTable {
    const E3: f64 = GROUND_SPLITTING_EV;
    let rows: &[(&str, f64)] = &[
        ("5s2.5p5 2P*3/2", 0.0),
        ("5s2.5p5 2P*1/2", E3),
        ("5s.5p6 2S1/2", 11.267),
        ("4s.5s2.5p6 2S1/2", 201.7),
        // Strong-line upper levels reached from the J=3/2 ground state.
        ("5s2.5p4.(1D2).5d 2[0]1/2", 16.745426),
        ("5s2.5p4.(1S0).5d 2[2]5/2", 16.932476),
        ("5s2.5p4.(1S0).5d 2[2]3/2", 17.11758),
        ("5s2.5p4.(3P2).6d 2[0]1/2", 17.199905),
        ("5s2.5p4.(3P2).6d 2[3]5/2", 17.245493),
        ("5s2.5p4.(3P0).6d 2[2]5/2", 17.901446),
        ("5s2.5p4.(3P1).6d 2[1]1/2", 18.005323),
        ("5s2.5p4.(3P1).6d 2[2]5/2", 18.139575),
        ("5s2.5p4.(3P1).6d 2[3]5/2", 18.216733),
        // Upper levels seen only from the J=1/2 component.
        ("5s2.5p4.(3P0).6d 2[2]3/2", 16.564679 + E3),
        ("5s2.5p4.(3P1).6d 2[2]3/2", 16.787873 + E3),
        ("5s2.5p4.(3P1).6d 2[1]3/2", 17.053801 + E3),
        ("5s2.5p4.(1D2).6d 2[1]3/2", 17.735577 + E3),
        ("5s2.5p4.(1D2).6d 2[2]3/2", 17.862535 + E3),
        // 6s manifold.
        ("5s2.5p4.(3P2).6s 2[2]5/2", 11.539),
        ("5s2.5p4.(3P2).6s 2[2]3/2", 11.827),
        ("5s2.5p4.(3P1).6s 2[1]3/2", 13.066),
        ("5s2.5p4.(3P1).6s 2[1]1/2", 13.426),
        ("5s2.5p4.(3P0).6s 2[0]1/2", 13.700),
        ("5s2.5p4.(1D2).6s 2[2]5/2", 13.581),
        ("5s2.5p4.(1D2).6s 2[2]3/2", 13.886),
        ("5s2.5p4.(1S0).6s 2[0]1/2", 16.110),
        // 5d manifold.
        ("5s2.5p4.(3P2).5d 2[0]1/2", 11.983),
        ("5s2.5p4.(3P2).5d 2[1]3/2", 12.128),
        ("5s2.5p4.(3P2).5d 2[1]1/2", 12.042),
        ("5s2.5p4.(3P2).5d 2[2]5/2", 12.301),
        ("5s2.5p4.(3P2).5d 2[2]3/2", 12.695),
        ("5s2.5p4.(3P2).5d 2[3]7/2", 12.553),
        ("5s2.5p4.(3P2).5d 2[3]5/2", 12.601),
        ("5s2.5p4.(3P2).5d 2[4]9/2", 12.803),
        ("5s2.5p4.(3P2).5d 2[4]7/2", 12.870),
        ("5s2.5p4.(3P1).5d 2[1]1/2", 13.803),
        ("5s2.5p4.(3P1).5d 2[2]5/2", 13.872),
        ("5s2.5p4.(3P1).5d 2[2]3/2", 13.932),
        ("5s2.5p4.(3P1).5d 2[3]7/2", 13.997),
        ("5s2.5p4.(3P1).5d 2[3]5/2", 14.063),
        ("5s2.5p4.(3P1).5d 2[1]3/2", 14.153),
        ("5s2.5p4.(3P0).5d 2[2]5/2", 14.194),
        ("5s2.5p4.(3P0).5d 2[2]3/2", 14.245),
        ("5s2.5p4.(1D2).5d 2[2]3/2", 14.713),
        ("5s2.5p4.(1D2).5d 2[3]5/2", 14.790),
        ("5s2.5p4.(1D2).5d 2[2]5/2", 14.852),
        ("5s2.5p4.(1D2).5d 2[3]7/2", 14.907),
        ("5s2.5p4.(1D2).5d 2[4]9/2", 14.580),
        ("5s2.5p4.(1D2).5d 2[4]7/2", 14.607),
        ("5s2.5p4.(1D2).5d 2[1]3/2", 15.000),
        ("5s2.5p4.(1D2).5d 2[1]1/2", 15.056),
        // 6d companions sharing the (3P2) parent.
        ("5s2.5p4.(3P2).6d 2[2]5/2", 16.205),
        ("5s2.5p4.(3P2).6d 2[2]3/2", 16.285),
        ("5s2.5p4.(3P2).6d 2[1]1/2", 16.430),
        ("5s2.5p4.(3P2).6d 2[1]3/2", 16.515),
        ("5s2.5p4.(3P2).6d 2[4]9/2", 16.998),
        ("5s2.5p4.(3P2).6d 2[4]7/2", 17.060),
        ("5s2.5p4.(3P2).6d 2[3]7/2", 17.158),
    ];
    LevelTable::from_rows(rows.iter().map(|&(l, e)| (l.to_string(), e)))
        .expect("bundled table parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ls_ground() {
        let lv = parse_level("5s2.5p5 2P*3/2").unwrap();
        assert_eq!(lv.scheme, Scheme::Ls);
        assert_eq!(lv.j, Half(3));
        assert_eq!(lv.l_e, 1);
        assert_eq!(lv.s_e, Half(1));
        assert_eq!(lv.parity, -1);
        assert!(lv.is_ground_p());
        assert!(!lv.is_s_hole());
    }

    #[test]
    fn parses_hole_states() {
        let lv = parse_level("5s.5p6 2S1/2").unwrap();
        assert!(lv.is_s_hole());
        assert_eq!(lv.shells[0], Shell { n: 5, l: 0, occ: 1 });
        assert_eq!(lv.parity, 1);
        let lv = parse_level("4s.5s2.5p6 2S1/2").unwrap();
        assert!(lv.is_s_hole());
        assert_eq!(lv.shells[0].n, 4);
    }

    #[test]
    fn parses_jk_state() {
        let lv = parse_level("5s2.5p4.(3P2).6d 2[0]1/2").unwrap();
        assert_eq!(lv.scheme, Scheme::Jk);
        assert_eq!(lv.n, 6);
        assert_eq!(lv.l_e, 2);
        assert_eq!(lv.k, Some(Half(0)));
        assert_eq!(lv.j, Half(1));
        assert_eq!(
            lv.parent,
            Some(Parent {
                jp: Half(4),
                lp: 1,
                sp: Half(2)
            })
        );
        assert_eq!(lv.parity, 1);
    }

    #[test]
    fn parses_typeset_variant() {
        // Same state written with unicode superscripts, a degree-sign
        // parity mark, and subscript J.
        let a = parse_level("5s\u{00b2}.5p\u{2075} \u{00b2}P\u{00b0}\u{2083}/\u{2082}").unwrap();
        let b = parse_level("5s2.5p5 2P*3/2").unwrap();
        assert_eq!(a.j, b.j);
        assert_eq!(a.parity, b.parity);
        assert_eq!(a.l_e, b.l_e);
    }

    #[test]
    fn bad_rows_reported_with_line_numbers() {
        let rows = vec![
            ("5s2.5p5 2P*3/2".to_string(), 0.0),
            ("not a label".to_string(), 1.0),
            ("5s2.5p4.(3P2.6d 2[0]1/2".to_string(), 2.0),
        ];
        match LevelTable::from_rows(rows) {
            Err(LevelError::Rows(bad)) => {
                assert_eq!(bad.len(), 2);
                assert_eq!(bad[0].0, 2);
                assert_eq!(bad[1].0, 3);
            }
            other => panic!("expected row errors, got {other:?}"),
        }
    }

    #[test]
    fn bundled_table_shape() {
        let t = bundled_xe();
        assert_eq!(t.len(), 58);
        // Every level supports m = 1/2; J = 1/2 levels drop out at m = 3/2.
        assert_eq!(t.select_m(Half(1)).len(), 58);
        let m32 = t.select_m(Half(3));
        assert!(m32.len() < 58);
        assert!(m32.levels.iter().all(|lv| lv.j.0 >= 3));
        // Ground pair first, energies as bundled.
        assert_eq!(t.levels[0].energy_ev, 0.0);
        assert_eq!(t.levels[1].energy_ev, GROUND_SPLITTING_EV);
        assert_eq!(t.index_of("4s.5s2.5p6 2S1/2"), Some(3));
    }

    #[test]
    fn strong_lines_point_at_bundled_levels() {
        let t = bundled_xe();
        let energies = t.energies_ev();
        let has_level_at = |e: f64| energies.iter().any(|&x| (x - e).abs() < 1e-9);
        for nu in XE_STRONG_LINES_32_EV {
            assert!(has_level_at(nu), "no upper level at {nu} eV");
        }
        for nu in XE_STRONG_LINES_12_EV {
            assert!(
                has_level_at(nu + GROUND_SPLITTING_EV),
                "no upper level at {nu} + splitting eV"
            );
        }
    }

    #[test]
    fn csv_json_round_trip() {
        let csv_text = "label,energy_eV\n5s2.5p5 2P*3/2,0.0\n5s.5p6 2S1/2,11.267\n";
        let t = LevelTable::from_csv(csv_text.as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.levels[1].energy_ev, 11.267);
        let json_text =
            r#"[{"label":"5s2.5p5 2P*3/2","energy_eV":0.0},{"label":"5s2.5p5 2P*1/2","energy_eV":1.306423}]"#;
        let t = LevelTable::from_json(json_text).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.levels[1].j, Half(1));
    }
}
