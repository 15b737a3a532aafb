//! Multiplication rules for the complex numbers, quaternions and octonions,
//! stored as signed associative basis triplets.
//!
//! A triplet `(a, b, c, s)` means `i_a i_b = s i_c`. Cyclic rotations of the
//! triplet reuse the sign and transpositions negate it, so a triplet stands
//! for the six products among its three imaginary units. `i_k i_k = -1` and
//! the unit `1` are implicit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The seven associative triplets of the reference octonion algebra, in the
/// fixed positional order used by parity vectors and automorphism masks.
pub const REFERENCE_TRIPLETS: [[u8; 3]; 7] = [
    [1, 2, 3],
    [7, 6, 1],
    [5, 7, 2],
    [6, 5, 3],
    [1, 4, 5],
    [2, 4, 6],
    [3, 4, 7],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triplet {
    pub idx: [u8; 3],
    /// +1 or -1.
    pub sign: i8,
}

impl Triplet {
    pub const fn new(a: u8, b: u8, c: u8, sign: i8) -> Self {
        Self { idx: [a, b, c], sign }
    }

    pub fn flipped(self) -> Self {
        Self { sign: -self.sign, ..self }
    }

    /// The six signed products `(left, right, sign, result)` this triplet defines.
    fn products(self) -> [(usize, usize, i8, usize); 6] {
        let [a, b, c] = self.idx.map(usize::from);
        let s = self.sign;
        [
            (a, b, s, c),
            (b, c, s, a),
            (c, a, s, b),
            (b, a, -s, c),
            (c, b, -s, a),
            (a, c, -s, b),
        ]
    }
}

/// Product of two basis elements: `e_i e_j = sign * e_index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct BasisProduct {
    pub sign: i8,
    pub index: u8,
}

#[derive(Clone)]
pub struct StructureTable {
    dim: usize,
    id: String,
    triplets: Vec<Triplet>,
    rule: [[BasisProduct; 8]; 8],
}

impl StructureTable {
    pub fn new(dim: usize, id: impl Into<String>, triplets: Vec<Triplet>) -> Result<Self> {
        let expected = match dim {
            2 => 0,
            4 => 1,
            8 => 7,
            _ => return Err(Error::InvalidTable(format!("dim must be 2, 4 or 8, got {dim}"))),
        };
        if triplets.len() != expected {
            return Err(Error::InvalidTable(format!(
                "dim {dim} needs exactly {expected} triplets, got {}",
                triplets.len()
            )));
        }

        let unset = BasisProduct { sign: 0, index: 0 };
        let mut rule = [[unset; 8]; 8];
        for i in 0..dim {
            rule[0][i] = BasisProduct { sign: 1, index: i as u8 };
            rule[i][0] = BasisProduct { sign: 1, index: i as u8 };
        }
        for i in 1..dim {
            rule[i][i] = BasisProduct { sign: -1, index: 0 };
        }

        for t in &triplets {
            if t.sign != 1 && t.sign != -1 {
                return Err(Error::InvalidTable(format!("sign must be +1 or -1 in {:?}", t.idx)));
            }
            let [a, b, c] = t.idx;
            if [a, b, c].iter().any(|&k| k == 0 || usize::from(k) >= dim) {
                return Err(Error::InvalidTable(format!(
                    "triplet {:?} references an index outside 1..{}",
                    t.idx,
                    dim - 1
                )));
            }
            if a == b || b == c || a == c {
                return Err(Error::InvalidTable(format!("triplet {:?} repeats an index", t.idx)));
            }
            for (l, r, s, k) in t.products() {
                if rule[l][r].sign != 0 {
                    return Err(Error::InvalidTable(format!(
                        "pair ({l},{r}) appears in more than one triplet"
                    )));
                }
                rule[l][r] = BasisProduct { sign: s, index: k as u8 };
            }
        }

        for (l, row) in rule.iter().enumerate().take(dim) {
            if let Some(r) = row.iter().take(dim).position(|p| p.sign == 0) {
                return Err(Error::InvalidTable(format!("pair ({l},{r}) is not covered by any triplet")));
            }
        }

        Ok(Self { dim, id: id.into(), triplets, rule })
    }

    /// The complex numbers, basis `{1, i_1}`.
    pub fn complex() -> Self {
        Self::new(2, "C", Vec::new()).expect("complex table")
    }

    /// The quaternions with `i_1 i_2 = i_3`.
    pub fn quaternion() -> Self {
        Self::new(4, "H", vec![Triplet::new(1, 2, 3, 1)]).expect("quaternion table")
    }

    /// The reference octonion algebra, index 0 of the equivalence class.
    pub fn octonion_reference() -> Self {
        let triplets = REFERENCE_TRIPLETS
            .iter()
            .map(|&[a, b, c]| Triplet::new(a, b, c, 1))
            .collect();
        Self::new(8, "O[0]", triplets).expect("reference octonion table")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    #[inline]
    pub(crate) fn product(&self, i: usize, j: usize) -> BasisProduct {
        self.rule[i][j]
    }

    /// Sign `s` with `e_i e_j = s e_k` and the index `k`.
    pub fn basis_product(&self, i: usize, j: usize) -> (i8, usize) {
        let p = self.rule[i][j];
        (p.sign, usize::from(p.index))
    }

    /// Same multiplication rule, regardless of label or triplet spelling.
    pub fn same_rule(&self, other: &StructureTable) -> bool {
        self.dim == other.dim && self.rule == other.rule
    }

    /// Serialize to the plain-text codec: a `dim=<d> id=<label>` header followed
    /// by one `a b c s` line per triplet.
    pub fn to_text(&self) -> String {
        let mut out = format!("dim={} id={}\n", self.dim, self.id);
        for t in &self.triplets {
            let [a, b, c] = t.idx;
            let s = if t.sign > 0 { "+1" } else { "-1" };
            out.push_str(&format!("{a} {b} {c} {s}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (hline, header) = lines.next().ok_or(Error::Codec { line: 1, msg: "missing header".into() })?;
        let mut dim = None;
        let mut id = None;
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("dim", v)) => {
                    dim = Some(v.parse::<usize>().map_err(|e| Error::Codec {
                        line: hline,
                        msg: format!("bad dim `{v}`: {e}"),
                    })?)
                }
                Some(("id", v)) => id = Some(v.to_string()),
                _ => {
                    return Err(Error::Codec { line: hline, msg: format!("unexpected header field `{field}`") })
                }
            }
        }
        let dim = dim.ok_or(Error::Codec { line: hline, msg: "header lacks dim=".into() })?;
        let id = id.ok_or(Error::Codec { line: hline, msg: "header lacks id=".into() })?;

        let mut triplets = Vec::new();
        for (line, l) in lines {
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(Error::Codec { line, msg: format!("expected `a b c s`, got `{l}`") });
            }
            let mut idx = [0u8; 3];
            for (slot, p) in idx.iter_mut().zip(&parts[..3]) {
                *slot = p
                    .parse()
                    .map_err(|_| Error::Codec { line, msg: format!("bad index `{p}`") })?;
            }
            let sign = match parts[3] {
                "+1" | "1" => 1,
                "-1" => -1,
                s => return Err(Error::Codec { line, msg: format!("bad sign `{s}`") }),
            };
            triplets.push(Triplet { idx, sign });
        }
        Self::new(dim, id, triplets)
    }
}

impl PartialEq for StructureTable {
    fn eq(&self, other: &Self) -> bool {
        self.same_rule(other)
    }
}

impl fmt::Debug for StructureTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StructureTable")
            .field("dim", &self.dim)
            .field("id", &self.id)
            .field("triplets", &self.triplets)
            .finish()
    }
}

impl fmt::Display for StructureTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for StructureTable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_text(s)
    }
}
