//! The equivalence class of octonion algebras: every parity assignment on the
//! seven reference triplets, the sixteen that are alternative composition
//! algebras, and the duality automorphisms `T0..T3` permuting them.
//!
//! Canonical order of the sixteen is ascending [`ParityVector`] value, so
//! index 0 is the reference table. Table ids are `O[N]` for the valid
//! algebras and `cand[n]` for raw candidates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{alternativity_defect, Element, StructureTable, Triplet, REFERENCE_TRIPLETS};
use crate::error::{Error, Result};
use crate::report::VerificationReport;

pub const CANDIDATE_COUNT: usize = 128;
pub const EQUIVALENT_COUNT: usize = 16;

/// Seed for the norm-composition spot check inside [`valid_algebras`].
const SPOT_CHECK_SEED: u64 = 0x5eed_0c7a;
const SPOT_CHECK_PAIRS: usize = 100;
const SPOT_CHECK_TOL: f64 = 1e-12;

/// Bit `k` set means triplet `k` of [`REFERENCE_TRIPLETS`] has swapped parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ParityVector(u8);

impl ParityVector {
    pub const IDENTITY: ParityVector = ParityVector(0);

    pub fn from_value(value: u8) -> Result<Self> {
        if usize::from(value) >= CANDIDATE_COUNT {
            return Err(Error::IndexOutOfRange(format!("parity vector {value} exceeds 7 bits")));
        }
        Ok(Self(value))
    }

    pub fn from_bits(bits: [bool; 7]) -> Self {
        Self(bits.iter().enumerate().fold(0, |acc, (k, &b)| acc | (u8::from(b) << k)))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn bits(self) -> [bool; 7] {
        std::array::from_fn(|k| self.0 >> k & 1 == 1)
    }

    pub fn xor(self, other: ParityVector) -> ParityVector {
        ParityVector(self.0 ^ other.0)
    }

    pub fn table(self) -> StructureTable {
        let triplets = REFERENCE_TRIPLETS
            .iter()
            .zip(self.bits())
            .map(|(&[a, b, c], swapped)| Triplet::new(a, b, c, if swapped { -1 } else { 1 }))
            .collect();
        StructureTable::new(8, format!("cand[{}]", self.0), triplets).expect("parity tables are well formed")
    }

    /// Recover the parity vector of a table whose triplets share the reference axes.
    pub fn of_table(table: &StructureTable) -> Option<ParityVector> {
        if table.dim() != 8 {
            return None;
        }
        let mut bits = [false; 7];
        for (bit, &[a, b, c]) in bits.iter_mut().zip(REFERENCE_TRIPLETS.iter()) {
            let (sign, k) = table.basis_product(a.into(), b.into());
            if k != usize::from(c) {
                return None;
            }
            *bit = sign < 0;
        }
        Some(ParityVector::from_bits(bits))
    }
}

impl fmt::Display for ParityVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Positional (id)/(sw) patterns of the four duality automorphisms.
const AUTOMORPHISM_PATTERNS: [[bool; 7]; 4] = [
    [false, false, false, false, true, true, true],
    [true, true, true, true, false, false, false],
    [false, true, false, true, true, false, true],
    [false, false, true, true, false, true, true],
];

/// A composition of the duality automorphisms; bit `n` set means `T_n` is included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct AutomorphismLabel(u8);

impl AutomorphismLabel {
    pub const IDENTITY: AutomorphismLabel = AutomorphismLabel(0);
    pub const T0: AutomorphismLabel = AutomorphismLabel(1);
    pub const T1: AutomorphismLabel = AutomorphismLabel(2);
    pub const T2: AutomorphismLabel = AutomorphismLabel(4);
    pub const T3: AutomorphismLabel = AutomorphismLabel(8);

    pub fn from_flags(flags: [bool; 4]) -> Self {
        Self(flags.iter().enumerate().fold(0, |acc, (n, &b)| acc | (u8::from(b) << n)))
    }

    pub fn flags(self) -> [bool; 4] {
        std::array::from_fn(|n| self.0 >> n & 1 == 1)
    }

    /// All sixteen labels in ascending flag order.
    pub fn all() -> impl Iterator<Item = AutomorphismLabel> {
        (0..16).map(AutomorphismLabel)
    }

    pub fn compose(self, other: AutomorphismLabel) -> AutomorphismLabel {
        AutomorphismLabel(self.0 ^ other.0)
    }

    pub fn contains_t0(self) -> bool {
        self.0 & 1 == 1
    }

    /// Combined parity mask: XOR of the included patterns.
    pub fn mask(self) -> ParityVector {
        AUTOMORPHISM_PATTERNS
            .iter()
            .zip(self.flags())
            .filter(|(_, on)| *on)
            .fold(ParityVector::IDENTITY, |acc, (p, _)| acc.xor(ParityVector::from_bits(*p)))
    }

    pub fn name(self) -> String {
        if self.0 == 0 {
            return "id".to_string();
        }
        self.flags().iter().enumerate().filter(|(_, on)| **on).map(|(n, _)| format!("T{n}")).collect()
    }
}

impl fmt::Display for AutomorphismLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// All 128 parity assignments applied to the reference table, in binary-counter order.
pub fn enumerate_candidates() -> Vec<StructureTable> {
    (0..CANDIDATE_COUNT as u8).map(|v| ParityVector(v).table()).collect()
}

/// Exhaustive linearized associator check; see [`alternativity_defect`].
pub fn is_alternative(table: &StructureTable) -> bool {
    alternativity_defect(&Arc::new(table.clone())) == 0.0
}

/// Largest `||ab| - |a||b||` over `pairs` random coefficient pairs.
pub fn norm_composition_defect(table: &Arc<StructureTable>, pairs: usize, rng: &mut impl rand::Rng) -> f64 {
    let dim = table.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let a: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = Element::new(table, &a).expect("dim");
        let b = Element::new(table, &b).expect("dim");
        worst = worst.max(((&a * &b).norm() - a.norm() * b.norm()).abs());
    }
    worst
}

fn compute_valid() -> Vec<(ParityVector, Arc<StructureTable>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SPOT_CHECK_SEED);
    let mut out = Vec::with_capacity(EQUIVALENT_COUNT);
    for v in 0..CANDIDATE_COUNT as u8 {
        let pv = ParityVector(v);
        let table = Arc::new(pv.table());
        if alternativity_defect(&table) != 0.0 {
            continue;
        }
        if norm_composition_defect(&table, SPOT_CHECK_PAIRS, &mut rng) > SPOT_CHECK_TOL {
            continue;
        }
        let n = out.len();
        let table = Arc::new(Arc::unwrap_or_clone(table).with_id(format!("O[{n}]")));
        out.push((pv, table));
    }
    out
}

fn valid_cache() -> &'static [(ParityVector, Arc<StructureTable>)] {
    static CACHE: OnceLock<Vec<(ParityVector, Arc<StructureTable>)>> = OnceLock::new();
    CACHE.get_or_init(compute_valid)
}

/// The alternative composition algebras among the candidates, canonically ordered.
pub fn valid_algebras() -> Vec<StructureTable> {
    valid_cache().iter().map(|(_, t)| (**t).clone()).collect()
}

/// Shared handles to the canonical sixteen, indexed by `N`.
pub fn equivalent_tables() -> Vec<Arc<StructureTable>> {
    valid_cache().iter().map(|(_, t)| t.clone()).collect()
}

pub fn canonical_parities() -> Vec<ParityVector> {
    valid_cache().iter().map(|(p, _)| *p).collect()
}

pub fn table_by_index(n: usize) -> Result<Arc<StructureTable>> {
    valid_cache()
        .get(n)
        .map(|(_, t)| t.clone())
        .ok_or_else(|| Error::IndexOutOfRange(format!("algebra index {n} (expected 0..{EQUIVALENT_COUNT})")))
}

/// Canonical index of a table among the sixteen, by multiplication rule.
pub fn index_of(table: &StructureTable) -> Option<usize> {
    let pv = ParityVector::of_table(table)?;
    valid_cache().iter().position(|(p, _)| *p == pv)
}

/// Resolve `O[N]`, `N`, `H`, `C`.
pub fn table_by_id(id: &str) -> Result<Arc<StructureTable>> {
    match id {
        "C" => return Ok(Arc::new(StructureTable::complex())),
        "H" => return Ok(Arc::new(StructureTable::quaternion())),
        _ => {}
    }
    let inner = id.strip_prefix("O[").and_then(|s| s.strip_suffix(']')).unwrap_or(id);
    let n: usize = inner.parse().map_err(|_| Error::Config(format!("unknown table id `{id}`")))?;
    table_by_index(n)
}

pub fn apply_automorphism(label: AutomorphismLabel, table: &StructureTable) -> Result<StructureTable> {
    let n = index_of(table).ok_or_else(|| Error::NotEquivalentAlgebra(table.id().to_string()))?;
    Ok((*apply_to_index(label, n)).clone())
}

/// The index reached from `O[n]` under `label`.
pub fn apply_to_index(label: AutomorphismLabel, n: usize) -> Arc<StructureTable> {
    let cache = valid_cache();
    let target = cache[n].0.xor(label.mask());
    cache
        .iter()
        .find(|(p, _)| *p == target)
        .map(|(_, t)| t.clone())
        .expect("the sixteen are closed under the duality automorphisms")
}

fn permutation_of(label: AutomorphismLabel) -> Vec<usize> {
    (0..valid_cache().len())
        .map(|n| index_of(&apply_to_index(label, n)).expect("closed"))
        .collect()
}

/// Orbits of the chirality-preserving subgroup generated by `T1, T2, T3`.
pub fn chirality_classes() -> Vec<Vec<usize>> {
    let subgroup: Vec<AutomorphismLabel> = AutomorphismLabel::all().filter(|l| !l.contains_t0()).collect();
    let mut seen = BTreeSet::new();
    let mut classes = Vec::new();
    for n in 0..valid_cache().len() {
        if seen.contains(&n) {
            continue;
        }
        let orbit: BTreeSet<usize> = subgroup.iter().map(|&l| index_of(&apply_to_index(l, n)).expect("closed")).collect();
        seen.extend(orbit.iter().copied());
        classes.push(orbit.into_iter().collect());
    }
    classes
}

/// Verifies the Fano-plane and `Z2^3`/`Z2^4` structure of the duality automorphisms
/// as permutations of the sixteen algebras.
pub fn automorphism_group_check() -> VerificationReport {
    let mut report = VerificationReport::new("automorphism-group", 0.0);
    let count = valid_cache().len();
    report.check_bool(&[count as i64], count == EQUIVALENT_COUNT, format!("{count} equivalent algebras"));

    let perms: BTreeMap<AutomorphismLabel, Vec<usize>> =
        AutomorphismLabel::all().map(|l| (l, permutation_of(l))).collect();
    let identity: Vec<usize> = (0..count).collect();

    for n in 0..4u8 {
        let t = AutomorphismLabel(1 << n);
        let twice: Vec<usize> = perms[&t].iter().map(|&k| perms[&t][k]).collect();
        report.check_bool(&[i64::from(n)], twice == identity, format!("T{n}T{n} = id"));
    }

    // (a) the seven nonidentity elements of <T1,T2,T3> are distinct maps, and any
    // two on a Fano line compose to the third
    let fano: Vec<AutomorphismLabel> = AutomorphismLabel::all().filter(|l| !l.contains_t0() && l.0 != 0).collect();
    let distinct: BTreeSet<&Vec<usize>> = fano.iter().map(|l| &perms[l]).collect();
    report.check_bool(&[7], distinct.len() == 7 && !distinct.contains(&identity), "seven distinct Fano points");
    let mut lines = BTreeSet::new();
    for &x in &fano {
        for &y in &fano {
            if x == y {
                continue;
            }
            let composed: Vec<usize> = perms[&y].iter().map(|&k| perms[&x][k]).collect();
            let third = x.compose(y);
            let ok = fano.contains(&third) && composed == perms[&third];
            report.check_bool(&[i64::from(x.0), i64::from(y.0)], ok, format!("{x}∘{y} = {third}"));
            let mut line = [x.0, y.0, third.0];
            line.sort_unstable();
            lines.insert(line);
        }
    }
    report.check_bool(&[lines.len() as i64], lines.len() == 7, "seven Fano lines");

    // (b) with identity: closed group of order 8
    let z2_3: Vec<AutomorphismLabel> = AutomorphismLabel::all().filter(|l| !l.contains_t0()).collect();
    let closed = z2_3.iter().all(|&x| z2_3.iter().all(|&y| z2_3.contains(&x.compose(y))));
    report.check_bool(&[8], closed && z2_3.len() == 8, "Z2^3 closure");

    // (c) all sixteen: composition of maps agrees with XOR of labels, the action
    // is free and transitive
    let mut group_table = Vec::new();
    for x in AutomorphismLabel::all() {
        let mut row = Vec::new();
        for y in AutomorphismLabel::all() {
            let composed: Vec<usize> = perms[&y].iter().map(|&k| perms[&x][k]).collect();
            report.check_bool(&[i64::from(x.0), i64::from(y.0)], composed == perms[&x.compose(y)], "composition is XOR");
            row.push(x.compose(y).name());
        }
        group_table.push(row);
    }
    let all_maps: BTreeSet<&Vec<usize>> = perms.values().collect();
    report.check_bool(&[16], all_maps.len() == 16, "sixteen distinct automorphisms");
    for n in 0..count {
        let orbit: BTreeSet<usize> = perms.values().map(|p| p[n]).collect();
        report.check_bool(&[n as i64], orbit.len() == count, format!("transitive and free from O[{n}]"));
    }

    // (d) chirality
    let classes = chirality_classes();
    let split = classes.len() == 2 && classes.iter().all(|c| c.len() == 8);
    report.check_bool(&[classes.len() as i64], split, "two chirality classes of eight");
    if split {
        let swapped = classes[0].iter().all(|&n| classes[1].contains(&perms[&AutomorphismLabel::T0][n]));
        report.check_bool(&[0], swapped, "T0 exchanges the chirality classes");
    }

    report.detail("group_order", perms.len());
    report.detail("chirality_classes", &classes);
    report.detail("group_table", &group_table);
    report
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogSummary {
    pub count: usize,
    pub parity_vectors: Vec<String>,
    pub chirality_classes: Vec<Vec<usize>>,
    pub group_table: Vec<Vec<String>>,
}

pub fn summary() -> CatalogSummary {
    let group_table = AutomorphismLabel::all()
        .map(|x| AutomorphismLabel::all().map(|y| x.compose(y).name()).collect())
        .collect();
    CatalogSummary {
        count: valid_cache().len(),
        parity_vectors: canonical_parities().iter().map(|p| p.to_string()).collect(),
        chirality_classes: chirality_classes(),
        group_table,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidate_enumeration() {
        let c = enumerate_candidates();
        assert_eq!(c.len(), 128);
        assert_eq!(c[0], StructureTable::octonion_reference());
        let flipped = &c[1];
        assert_eq!(flipped.basis_product(1, 2), (-1, 3));
        for (&[a, b, cc], t) in REFERENCE_TRIPLETS.iter().zip(flipped.triplets()).skip(1) {
            assert_eq!(t.idx, [a, b, cc]);
            assert_eq!(t.sign, 1);
        }
    }

    #[test]
    fn alternative_examples() {
        assert!(is_alternative(&StructureTable::octonion_reference()));
        assert!(!is_alternative(&ParityVector::from_bits([true, false, false, false, false, false, false]).table()));
        assert!(is_alternative(&ParityVector::from_bits([true; 7]).table()));
    }

    #[test]
    fn sixteen_with_frozen_parities() {
        let v = valid_algebras();
        assert_eq!(v.len(), 16);
        assert_eq!(v[0], StructureTable::octonion_reference());
        assert_eq!(v[0].id(), "O[0]");
        // frozen from an independent brute-force enumeration
        let expected = [0u8, 15, 19, 28, 37, 42, 54, 57, 70, 73, 85, 90, 99, 108, 112, 127];
        let got: Vec<u8> = canonical_parities().iter().map(|p| p.value()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn automorphism_masks() {
        assert_eq!(AutomorphismLabel::T0.mask().value(), 0b111_0000);
        assert_eq!(AutomorphismLabel::T1.mask().value(), 0b000_1111);
        assert_eq!(AutomorphismLabel::T2.mask().value(), 90);
        assert_eq!(AutomorphismLabel::T3.mask().value(), 108);
        assert_eq!(AutomorphismLabel::T0.compose(AutomorphismLabel::T1).mask().value(), 127);
        assert_eq!(AutomorphismLabel::from_flags([false, true, true, false]).name(), "T1T2");
    }

    #[test]
    fn t0_swaps_last_three() {
        let t = apply_automorphism(AutomorphismLabel::T0, &StructureTable::octonion_reference()).unwrap();
        let signs: Vec<i8> = t.triplets().iter().map(|t| t.sign).collect();
        assert_eq!(signs, vec![1, 1, 1, 1, -1, -1, -1]);
    }

    #[test]
    fn t0t1_is_conjugation() {
        let o0 = StructureTable::octonion_reference();
        let t = apply_automorphism(AutomorphismLabel::T0.compose(AutomorphismLabel::T1), &o0).unwrap();
        // rebuild O[0] in the basis j_k = -i_k: j_a j_b = i_a i_b = s i_c = -s j_c
        let negated: Vec<Triplet> = o0.triplets().iter().map(|t| t.flipped()).collect();
        let conj = StructureTable::new(8, "conj", negated).unwrap();
        assert_eq!(t, conj);
    }

    #[test]
    fn rejects_non_member() {
        let bad = ParityVector::from_bits([true, false, false, false, false, false, false]).table();
        assert!(matches!(
            apply_automorphism(AutomorphismLabel::T1, &bad),
            Err(Error::NotEquivalentAlgebra(_))
        ));
    }

    #[test]
    fn group_check_passes() {
        let r = automorphism_group_check();
        assert!(r.failures.is_empty(), "{:?}", r.failures);
        assert_eq!(r.details["group_order"], 16);
        assert_eq!(chirality_classes(), vec![vec![0, 1, 6, 7, 10, 11, 12, 13], vec![2, 3, 4, 5, 8, 9, 14, 15]]);
    }

    #[test]
    fn label_ids() {
        assert_eq!(table_by_id("O[3]").unwrap().id(), "O[3]");
        assert_eq!(table_by_id("5").unwrap().id(), "O[5]");
        assert_eq!(table_by_id("H").unwrap().dim(), 4);
        assert!(table_by_id("O[16]").is_err());
        assert!(table_by_id("Q").is_err());
    }
}
