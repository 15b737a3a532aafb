//! Composition algebras given by structure-constant tables, with real and
//! complexified coefficients.

mod element;
mod table;

pub use element::{CElement, Element};
pub use table::{StructureTable, Triplet, REFERENCE_TRIPLETS};

use std::sync::Arc;

/// Maximum coefficient of `(e_i, e_j, e_k) + (e_j, e_i, e_k)` and
/// `(e_i, e_j, e_k) + (e_i, e_k, e_j)` over all basis triples.
///
/// The associator is trilinear, so it alternates on every argument pair iff
/// these symmetrized basis associators vanish. Zero means the algebra is
/// alternative. Restricting to repeated basis arguments such as
/// `(e_i, e_i, e_j)` is not enough: those vanish for every sign choice.
pub fn alternativity_defect(table: &Arc<StructureTable>) -> f64 {
    let dim = table.dim();
    let basis: Vec<Element> = (0..dim).map(|k| Element::basis(table, k).expect("in range")).collect();
    let mut worst: f64 = 0.0;
    let assoc = |i: usize, j: usize, k: usize| basis[i].associator(&basis[j], &basis[k]).expect("same table");
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                let a = assoc(i, j, k);
                worst = worst.max((&a + &assoc(j, i, k)).max_abs());
                worst = worst.max((&a + &assoc(i, k, j)).max_abs());
            }
        }
    }
    worst
}
