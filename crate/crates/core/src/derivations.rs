//! Derivations of the octonions, `D_{u,v}(a) = [[u,v],a] - 3((uv)a - u(va))`,
//! as 8x8 matrices acting on coefficient vectors.
//!
//! Ranks and null spaces use singular values with a cutoff of `1e-9` relative
//! to the largest one.

use std::sync::Arc;

use nalgebra::{DMatrix, SMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{Element, StructureTable};
use crate::error::{Error, Result};
use crate::report::VerificationReport;

pub type Matrix8 = SMatrix<f64, 8, 8>;

pub const RANK_CUTOFF: f64 = 1e-9;
pub const LEIBNIZ_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct DerivationMap {
    table: Arc<StructureTable>,
    /// Column `c` holds the image of `e_c`.
    matrix: Matrix8,
    generators: Option<(Element, Element)>,
}

impl DerivationMap {
    /// Wrap an arbitrary linear map, e.g. to test whether it is a derivation.
    pub fn from_matrix(table: &Arc<StructureTable>, matrix: Matrix8) -> Result<Self> {
        if table.dim() != 8 {
            return Err(Error::NotOctonion(table.dim()));
        }
        Ok(Self { table: table.clone(), matrix, generators: None })
    }

    /// `a ↦ x a`.
    pub fn left_multiplication(x: &Element) -> Result<Self> {
        let t = x.table();
        let mut m = Matrix8::zeros();
        for c in 0..8 {
            let img = x.try_mul(&Element::basis(t, c)?)?;
            m.set_column(c, &nalgebra::SVector::<f64, 8>::from_column_slice(&padded(&img)));
        }
        Self::from_matrix(t, m)
    }

    pub fn matrix(&self) -> &Matrix8 {
        &self.matrix
    }

    pub fn table(&self) -> &Arc<StructureTable> {
        &self.table
    }

    pub fn generators(&self) -> Option<&(Element, Element)> {
        self.generators.as_ref()
    }

    pub fn apply(&self, a: &Element) -> Result<Element> {
        check_table(&self.table, a.table())?;
        let v = nalgebra::SVector::<f64, 8>::from_column_slice(&padded(a));
        Element::new(&self.table, (self.matrix * v).as_slice())
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|&x| x == 0.0)
    }

    /// `D(e_k) = 0` within `tol`.
    pub fn annihilates(&self, k: usize, tol: f64) -> bool {
        self.matrix.column(k).amax() <= tol
    }

    /// Largest entry of `M + Mᵀ` on the imaginary block.
    pub fn skew_defect(&self) -> f64 {
        let m = self.matrix.fixed_view::<7, 7>(1, 1);
        (m + m.transpose()).amax()
    }

    /// Whether `x` lies in the image of the map, by least squares.
    pub fn image_contains(&self, x: &Element, tol: f64) -> bool {
        let m = DMatrix::from_iterator(8, 8, self.matrix.iter().copied());
        let b = DMatrix::from_column_slice(8, 1, &padded(x));
        let svd = m.clone().svd(true, true);
        let smax = svd.singular_values.max();
        match svd.solve(&b, RANK_CUTOFF * smax.max(f64::MIN_POSITIVE)) {
            Ok(sol) => (&m * sol - b).norm() <= tol,
            Err(_) => false,
        }
    }
}

fn padded(e: &Element) -> [f64; 8] {
    let mut out = [0.0; 8];
    out[..e.dim()].copy_from_slice(e.coeffs());
    out
}

fn check_table(a: &Arc<StructureTable>, b: &Arc<StructureTable>) -> Result<()> {
    if a.same_rule(b) {
        Ok(())
    } else {
        Err(Error::TableMismatch { left: a.id().into(), right: b.id().into() })
    }
}

/// `D_{u,v}(a)` evaluated directly from the defining formula.
pub fn derivation_formula(u: &Element, v: &Element, a: &Element) -> Result<Element> {
    let uv = u.commutator(v)?;
    let first = uv.commutator(a)?;
    let assoc = u.associator(v, a)?;
    Ok(&first - &assoc.scale(3.0))
}

pub fn derivation(u: &Element, v: &Element) -> Result<DerivationMap> {
    u.same_table(v)?;
    let t = u.table();
    if t.dim() != 8 {
        return Err(Error::NotOctonion(t.dim()));
    }
    let mut m = Matrix8::zeros();
    for c in 0..8 {
        let img = derivation_formula(u, v, &Element::basis(t, c)?)?;
        for r in 0..8 {
            m[(r, c)] = img.coeff(r);
        }
    }
    Ok(DerivationMap { table: t.clone(), matrix: m, generators: Some((u.clone(), v.clone())) })
}

/// Leibniz rule `D(ab) = D(a)b + aD(b)` on `samples` seeded random pairs.
pub fn verify_leibniz(d: &DerivationMap, samples: usize, seed: u64, tol: f64) -> VerificationReport {
    let t = &d.table;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerificationReport::new("leibniz", tol).for_table(t.id());
    report.seed = Some(seed);
    for s in 0..samples {
        let a: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = Element::new(t, &a).expect("dim 8");
        let b = Element::new(t, &b).expect("dim 8");
        let lhs = d.apply(&(&a * &b)).expect("same table");
        let rhs = &(&d.apply(&a).expect("same table") * &b) + &(&a * &d.apply(&b).expect("same table"));
        report.check(&[s as i64], (&lhs - &rhs).max_abs(), &lhs, &rhs);
    }
    report
}

/// The 21 maps `D_{e_i, e_j}`, `1 <= i < j <= 7`.
pub fn basis_generators(table: &Arc<StructureTable>) -> Result<Vec<DerivationMap>> {
    if table.dim() != 8 {
        return Err(Error::NotOctonion(table.dim()));
    }
    let mut out = Vec::with_capacity(21);
    for i in 1..8 {
        for j in i + 1..8 {
            out.push(derivation(&Element::basis(table, i)?, &Element::basis(table, j)?)?);
        }
    }
    Ok(out)
}

fn rank(m: &DMatrix<f64>) -> usize {
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_CUTOFF * smax).count()
}

/// Orthonormal basis (rows, as 64-vectors in column-major order) of the span
/// of the basis generators.
pub fn derivation_span_basis(table: &Arc<StructureTable>) -> Result<Vec<Matrix8>> {
    let gens = basis_generators(table)?;
    let stacked = DMatrix::from_fn(gens.len(), 64, |r, c| gens[r].matrix.as_slice()[c]);
    let svd = stacked.svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let smax = svd.singular_values.max();
    Ok(svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > RANK_CUTOFF * smax)
        .map(|(i, _)| Matrix8::from_iterator(v_t.row(i).iter().copied()))
        .collect())
}

pub fn derivation_space_dimension(table: &Arc<StructureTable>) -> Result<usize> {
    Ok(derivation_span_basis(table)?.len())
}

/// Dimension of `{D in span : D(e_k) = 0}`.
pub fn stabilizer_dimension(table: &Arc<StructureTable>, k: usize) -> Result<usize> {
    if !(1..8).contains(&k) {
        return Err(Error::IndexOutOfRange(format!("imaginary unit {k} (expected 1..=7)")));
    }
    let basis = derivation_span_basis(table)?;
    let images = DMatrix::from_fn(8, basis.len(), |r, c| basis[c][(r, k)]);
    Ok(basis.len() - rank(&images))
}

/// Largest distance of a generator commutator `[D_a, D_b]` from the span.
pub fn lie_closure_residual(table: &Arc<StructureTable>) -> Result<f64> {
    let gens = basis_generators(table)?;
    let basis = derivation_span_basis(table)?;
    let mut worst: f64 = 0.0;
    for a in &gens {
        for b in &gens {
            let c = a.matrix * b.matrix - b.matrix * a.matrix;
            let proj = basis.iter().fold(Matrix8::zeros(), |acc, q| acc + q * c.dot(q));
            worst = worst.max((c - proj).norm());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivationReport {
    pub table_id: String,
    pub der_dim: usize,
    pub stabilizer_dims: Vec<usize>,
    pub closure_residual: f64,
}

pub fn derivation_report(table: &Arc<StructureTable>) -> Result<DerivationReport> {
    Ok(DerivationReport {
        table_id: table.id().to_string(),
        der_dim: derivation_space_dimension(table)?,
        stabilizer_dims: (1..8).map(|k| stabilizer_dimension(table, k)).collect::<Result<_>>()?,
        closure_residual: lie_closure_residual(table)?,
    })
}
