use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use super::table::StructureTable;
use crate::error::{Error, Result};

/// Imaginary parts shorter than this are treated as zero in `exp`/`log`.
const ZERO_IMAG: f64 = 1e-300;
/// Allowed distance of `|q|` from 1 for `log`.
const UNIT_TOL: f64 = 1e-10;

/// A real-coefficient element over a structure table. Index 0 holds the
/// coefficient of `1`; only the first `dim` slots are ever nonzero.
#[derive(Clone)]
pub struct Element {
    coeffs: [f64; 8],
    table: Arc<StructureTable>,
}

fn check_same(a: &Arc<StructureTable>, b: &Arc<StructureTable>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a.same_rule(b) {
        Ok(())
    } else {
        Err(Error::TableMismatch { left: a.id().to_string(), right: b.id().to_string() })
    }
}

impl Element {
    pub fn new(table: &Arc<StructureTable>, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() != table.dim() {
            return Err(Error::Length { expected: table.dim(), got: coeffs.len() });
        }
        let mut c = [0.0; 8];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Ok(Self { coeffs: c, table: table.clone() })
    }

    pub fn zero(table: &Arc<StructureTable>) -> Self {
        Self { coeffs: [0.0; 8], table: table.clone() }
    }

    pub fn scalar(table: &Arc<StructureTable>, s: f64) -> Self {
        let mut e = Self::zero(table);
        e.coeffs[0] = s;
        e
    }

    pub fn one(table: &Arc<StructureTable>) -> Self {
        Self::scalar(table, 1.0)
    }

    /// Basis element `e_k` (`e_0 = 1`).
    pub fn basis(table: &Arc<StructureTable>, k: usize) -> Result<Self> {
        if k >= table.dim() {
            return Err(Error::IndexOutOfRange(format!("basis index {k} for dim {}", table.dim())));
        }
        let mut e = Self::zero(table);
        e.coeffs[k] = 1.0;
        Ok(e)
    }

    pub fn table(&self) -> &Arc<StructureTable> {
        &self.table
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs[..self.dim()]
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs[k]
    }

    pub fn real(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn imag(&self) -> Element {
        let mut e = self.clone();
        e.coeffs[0] = 0.0;
        e
    }

    /// Same coefficients bound to another table of equal dimension.
    pub fn rebind(&self, table: &Arc<StructureTable>) -> Result<Self> {
        Self::new(table, self.coeffs())
    }

    pub fn same_table(&self, other: &Element) -> Result<()> {
        check_same(&self.table, &other.table)
    }

    fn zip(&self, other: &Element, f: impl Fn(f64, f64) -> f64) -> Result<Element> {
        self.same_table(other)?;
        let mut c = [0.0; 8];
        for (k, slot) in c.iter_mut().enumerate() {
            *slot = f(self.coeffs[k], other.coeffs[k]);
        }
        Ok(Element { coeffs: c, table: self.table.clone() })
    }

    pub fn try_add(&self, other: &Element) -> Result<Element> {
        self.zip(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Element) -> Result<Element> {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Element {
        Element { coeffs: self.coeffs.map(|c| c * s), table: self.table.clone() }
    }

    /// Bilinear product through the structure constants.
    pub fn try_mul(&self, other: &Element) -> Result<Element> {
        self.same_table(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Element) -> Element {
        let dim = self.dim();
        let mut out = [0.0; 8];
        for i in 0..dim {
            let a = self.coeffs[i];
            if a == 0.0 {
                continue;
            }
            for j in 0..dim {
                let b = other.coeffs[j];
                if b == 0.0 {
                    continue;
                }
                let p = self.table.product(i, j);
                out[usize::from(p.index)] += f64::from(p.sign) * a * b;
            }
        }
        Element { coeffs: out, table: self.table.clone() }
    }

    pub fn conjugate(&self) -> Element {
        let mut e = self.scale(-1.0);
        e.coeffs[0] = self.coeffs[0];
        e
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn dot(&self, other: &Element) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn inverse(&self) -> Result<Element> {
        let n2 = self.norm_sqr();
        if n2 == 0.0 {
            return Err(Error::ZeroElement);
        }
        Ok(self.conjugate().scale(1.0 / n2))
    }

    /// `ab - ba`
    pub fn commutator(&self, other: &Element) -> Result<Element> {
        self.same_table(other)?;
        Ok(&self.mul_unchecked(other) - &other.mul_unchecked(self))
    }

    /// `(ab)c - a(bc)`
    pub fn associator(&self, b: &Element, c: &Element) -> Result<Element> {
        self.same_table(b)?;
        self.same_table(c)?;
        let left = self.mul_unchecked(b).mul_unchecked(c);
        let right = self.mul_unchecked(&b.mul_unchecked(c));
        Ok(&left - &right)
    }

    /// `exp(s + v) = e^s (cos|v| + v/|v| sin|v|)`.
    pub fn exp(&self) -> Element {
        let s = self.real();
        let v = self.imag();
        let r = v.norm();
        let es = s.exp();
        if r < ZERO_IMAG {
            return Element::scalar(&self.table, es);
        }
        let mut out = v.scale(es * r.sin() / r);
        out.coeffs[0] = es * r.cos();
        out
    }

    /// Principal logarithm of a unit element: `(v/|v|) atan2(|v|, s)`.
    pub fn log(&self) -> Result<Element> {
        let n = self.norm();
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::NonUnit(n));
        }
        let s = self.real();
        let v = self.imag();
        let r = v.norm();
        if r < ZERO_IMAG {
            return if s > 0.0 { Ok(Element::zero(&self.table)) } else { Err(Error::BranchSingularity) };
        }
        Ok(v.scale(r.atan2(s) / r))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Euclidean distance between coefficient vectors.
    pub fn distance(&self, other: &Element) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn is_imaginary_unit(&self, tol: f64) -> bool {
        self.real().abs() <= tol && (self.norm() - 1.0).abs() <= tol
    }
}

impl PartialEq for Element {
    fn eq(&self, other: &Self) -> bool {
        self.table.same_rule(&other.table) && self.coeffs == other.coeffs
    }
}

fn write_terms(f: &mut fmt::Formatter<'_>, coeffs: &[f64], unit: &str) -> fmt::Result {
    let mut first = true;
    for (k, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let sign = if c < 0.0 { "-" } else if first { "" } else { "+" };
        let mag = c.abs();
        let basis = if k == 0 { String::new() } else { format!("i{k}") };
        let body = match (k, mag == 1.0) {
            (0, _) => format!("{mag}"),
            (_, true) => basis,
            (_, false) => format!("{mag}*{basis}"),
        };
        write!(f, "{sign}{unit}{body}")?;
        first = false;
    }
    Ok(())
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.iter().all(|&c| c == 0.0) {
            return f.write_str("0");
        }
        write_terms(f, self.coeffs(), "")
    }
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Element[{}]({:?})", self.table.id(), self.coeffs())
    }
}

// Operator sugar. Mixing tables here is a programming error and panics;
// the `try_*` methods report it instead.

impl Add for &Element {
    type Output = Element;
    fn add(self, rhs: &Element) -> Element {
        self.try_add(rhs).expect("element addition")
    }
}

impl Sub for &Element {
    type Output = Element;
    fn sub(self, rhs: &Element) -> Element {
        self.try_sub(rhs).expect("element subtraction")
    }
}

impl Mul for &Element {
    type Output = Element;
    fn mul(self, rhs: &Element) -> Element {
        self.try_mul(rhs).expect("element product")
    }
}

impl Mul<f64> for &Element {
    type Output = Element;
    fn mul(self, rhs: f64) -> Element {
        self.scale(rhs)
    }
}

impl Neg for &Element {
    type Output = Element;
    fn neg(self) -> Element {
        self.scale(-1.0)
    }
}

/// Element of the complexified algebra: `re + ı im`, with `ı` central and `ı² = -1`.
#[derive(Clone, PartialEq)]
pub struct CElement {
    pub re: Element,
    pub im: Element,
}

impl CElement {
    pub fn new(re: Element, im: Element) -> Result<Self> {
        re.same_table(&im)?;
        Ok(Self { re, im })
    }

    pub fn from_real(re: Element) -> Self {
        let im = Element::zero(re.table());
        Self { re, im }
    }

    pub fn zero(table: &Arc<StructureTable>) -> Self {
        Self { re: Element::zero(table), im: Element::zero(table) }
    }

    /// `z * 1` for a complex scalar `z`.
    pub fn complex_scalar(table: &Arc<StructureTable>, z: Complex64) -> Self {
        Self { re: Element::scalar(table, z.re), im: Element::scalar(table, z.im) }
    }

    pub fn table(&self) -> &Arc<StructureTable> {
        self.re.table()
    }

    pub fn try_mul(&self, other: &CElement) -> Result<CElement> {
        self.re.same_table(&other.re)?;
        let re = &(&self.re * &other.re) - &(&self.im * &other.im);
        let im = &(&self.re * &other.im) + &(&self.im * &other.re);
        Ok(CElement { re, im })
    }

    pub fn try_add(&self, other: &CElement) -> Result<CElement> {
        Ok(CElement { re: self.re.try_add(&other.re)?, im: self.im.try_add(&other.im)? })
    }

    pub fn try_sub(&self, other: &CElement) -> Result<CElement> {
        Ok(CElement { re: self.re.try_sub(&other.re)?, im: self.im.try_sub(&other.im)? })
    }

    pub fn scale(&self, s: f64) -> CElement {
        CElement { re: self.re.scale(s), im: self.im.scale(s) }
    }

    /// Multiply by a complex scalar; `ı` commutes with everything.
    pub fn scale_complex(&self, z: Complex64) -> CElement {
        let re = &self.re.scale(z.re) - &self.im.scale(z.im);
        let im = &self.re.scale(z.im) + &self.im.scale(z.re);
        CElement { re, im }
    }

    pub fn commutator(&self, other: &CElement) -> Result<CElement> {
        self.try_mul(other)?.try_sub(&other.try_mul(self)?)
    }

    pub fn associator(&self, b: &CElement, c: &CElement) -> Result<CElement> {
        let left = self.try_mul(b)?.try_mul(c)?;
        let right = self.try_mul(&b.try_mul(c)?)?;
        left.try_sub(&right)
    }

    pub fn norm(&self) -> f64 {
        (self.re.norm_sqr() + self.im.norm_sqr()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.re.max_abs().max(self.im.max_abs())
    }

    /// Coefficient of `e_k` as a complex number.
    pub fn component(&self, k: usize) -> Complex64 {
        Complex64::new(self.re.coeff(k), self.im.coeff(k))
    }

    /// Hermitian inner product `<self, other>` over the complex coefficient vectors,
    /// conjugate-linear in `self`.
    pub fn inner(&self, other: &CElement) -> Complex64 {
        (0..self.re.dim()).map(|k| self.component(k).conj() * other.component(k)).sum()
    }
}

impl fmt::Display for CElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let re_zero = self.re.coeffs().iter().all(|&c| c == 0.0);
        let im_zero = self.im.coeffs().iter().all(|&c| c == 0.0);
        match (re_zero, im_zero) {
            (true, true) => f.write_str("0"),
            (false, true) => write!(f, "{}", self.re),
            (true, false) => write_terms(f, self.im.coeffs(), "ı"),
            (false, false) => {
                write!(f, "{}", self.re)?;
                let s = format!("{}", CElement::from_imag(self.im.clone()));
                if s.starts_with('-') {
                    f.write_str(&s)
                } else {
                    write!(f, "+{s}")
                }
            }
        }
    }
}

impl CElement {
    fn from_imag(im: Element) -> Self {
        let re = Element::zero(im.table());
        Self { re, im }
    }
}

impl fmt::Debug for CElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CElement[{}]({:?} + ı{:?})", self.table().id(), self.re.coeffs(), self.im.coeffs())
    }
}
