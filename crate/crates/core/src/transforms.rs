//! Active and passive transformations onto the unit sphere, their duality, and
//! eigenvalue solutions over the complex numbers, quaternions and octonions.
//!
//! ```text
//! active:  T(x) = exp(θ t ln|x - a|)
//! passive: T(x) = exp(θ t (x - a)(π/2 + 2πN))
//! ```
//!
//! Every solution carries two residuals: one from the analytic derivative and
//! one from a central finite difference on a grid of 101 points spanning
//! `[c - ½, c + ½]`, skipping points within `1e-2` of a pole.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize, Serializer};

use crate::algebra::{Element, StructureTable};
use crate::derivations::{self, DerivationMap};
use crate::error::{Error, Result};

/// Tolerance on `|θ| = 1` and `Re θ = 0`.
pub const UNIT_TOL: f64 = 1e-12;
/// Imaginary parts below this make a merged product count as real.
pub const MERGE_TOL: f64 = 1e-12;
pub const DEFAULT_H: f64 = 1e-5;
pub const GRID_POINTS: usize = 101;
pub const POLE_EXCLUSION: f64 = 1e-2;
/// `|exp(θ̃ d̃) - product|` bound for merged solutions.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

/// `π/2 + 2πN`
pub fn branch_phase(n: i64) -> f64 {
    PI / 2.0 + 2.0 * PI * n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Active,
    Passive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformSpec {
    pub kind: TransformKind,
    pub theta: Element,
    pub t: f64,
    pub a: f64,
    /// Branch index; only meaningful for passive transformations.
    pub n: i64,
}

fn check_unit_imaginary(theta: &Element) -> Result<()> {
    if theta.is_imaginary_unit(UNIT_TOL) {
        Ok(())
    } else {
        Err(Error::InvalidTransform(format!(
            "θ must be a unit imaginary element, got {theta} (norm {})",
            theta.norm()
        )))
    }
}

impl TransformSpec {
    pub fn new(kind: TransformKind, theta: Element, t: f64, a: f64, n: i64) -> Result<Self> {
        check_unit_imaginary(&theta)?;
        Ok(Self { kind, theta, t, a, n })
    }

    pub fn active(theta: Element, t: f64, a: f64) -> Result<Self> {
        Self::new(TransformKind::Active, theta, t, a, 0)
    }

    pub fn passive(theta: Element, t: f64, a: f64, n: i64) -> Result<Self> {
        Self::new(TransformKind::Passive, theta, t, a, n)
    }

    /// Real multiplier of `θ` in the exponent at `x`.
    pub fn exponent(&self, x: f64) -> Result<f64> {
        match self.kind {
            TransformKind::Active => {
                if x == self.a {
                    return Err(Error::Pole(x));
                }
                Ok(self.t * (x - self.a).abs().ln())
            }
            TransformKind::Passive => Ok(self.t * (x - self.a) * branch_phase(self.n)),
        }
    }

    /// Derivative of [`Self::exponent`] in `x`.
    pub fn exponent_rate(&self, x: f64) -> f64 {
        match self.kind {
            TransformKind::Active => self.t / (x - self.a),
            TransformKind::Passive => self.t * branch_phase(self.n),
        }
    }

    pub fn pole(&self) -> Option<f64> {
        (self.kind == TransformKind::Active).then_some(self.a)
    }
}

/// Evaluate a transformation; active ones use the real logarithm of `|x - a|`.
pub fn eval_transform(spec: &TransformSpec, x: f64) -> Result<Element> {
    Ok(spec.theta.scale(spec.exponent(x)?).exp())
}

/// Active strength that makes the active transformation equal the passive one at `x`:
/// `t_A = t_P (x - a) / ln|x - a| · (π/2 + 2πN)`.
pub fn duality_match(t_p: f64, x: f64, a: f64, n: i64) -> Result<f64> {
    if x == a {
        return Err(Error::Pole(x));
    }
    let ln = (x - a).abs().ln();
    if ln == 0.0 {
        return Err(Error::LogarithmZero);
    }
    Ok(t_p * (x - a) / ln * branch_phase(n))
}

/// Explicit parenthesization of a product of factors. Serialized as nested
/// two-element lists of factor indices, e.g. `[[0, 1], 2]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bracketing {
    Leaf(usize),
    Node(Box<Bracketing>, Box<Bracketing>),
}

impl Bracketing {
    /// `((0 1) 2) ...`
    pub fn left_fold(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("bracketing needs at least one factor".into()));
        }
        Ok((1..n).fold(Bracketing::Leaf(0), |acc, k| {
            Bracketing::Node(Box::new(acc), Box::new(Bracketing::Leaf(k)))
        }))
    }

    pub fn leaves(&self) -> Vec<usize> {
        match self {
            Bracketing::Leaf(k) => vec![*k],
            Bracketing::Node(l, r) => {
                let mut v = l.leaves();
                v.extend(r.leaves());
                v
            }
        }
    }

    /// Exactly one leaf per factor `0..n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut leaves = self.leaves();
        leaves.sort_unstable();
        if leaves != (0..n).collect::<Vec<_>>() {
            return Err(Error::Config(format!(
                "bracketing must contain each factor index 0..{n} exactly once, got {leaves:?}"
            )));
        }
        Ok(())
    }

    pub fn fold<T>(&self, leaf: &mut impl FnMut(usize) -> Result<T>, node: &mut impl FnMut(T, T) -> Result<T>) -> Result<T> {
        match self {
            Bracketing::Leaf(k) => leaf(*k),
            Bracketing::Node(l, r) => {
                let a = l.fold(leaf, node)?;
                let b = r.fold(leaf, node)?;
                node(a, b)
            }
        }
    }

    /// Multiply elements in this bracketing.
    pub fn product(&self, elems: &[Element]) -> Result<Element> {
        self.fold(&mut |k| Ok(elems[k].clone()), &mut |a, b| a.try_mul(&b))
    }
}

/// A product of transformations over one table.
#[derive(Debug, Clone)]
pub struct WaveSpec {
    pub table: Arc<StructureTable>,
    pub factors: Vec<TransformSpec>,
    pub bracketing: Bracketing,
}

impl WaveSpec {
    pub fn new(table: Arc<StructureTable>, factors: Vec<TransformSpec>, bracketing: Option<Bracketing>) -> Result<Self> {
        for f in &factors {
            f.theta.rebind(&table)?;
            if !f.theta.table().same_rule(&table) {
                return Err(Error::TableMismatch { left: table.id().into(), right: f.theta.table().id().into() });
            }
        }
        let bracketing = match bracketing {
            Some(b) => b,
            None => Bracketing::left_fold(factors.len())?,
        };
        bracketing.validate(factors.len())?;
        Ok(Self { table, factors, bracketing })
    }

    pub fn eval(&self, x: f64) -> Result<Element> {
        let values = self.factors.iter().map(|f| eval_transform(f, x)).collect::<Result<Vec<_>>>()?;
        self.bracketing.product(&values)
    }

    /// Whether every sampled value lies in one complex subalgebra `span{1, w}`.
    pub fn is_complex_confined(&self, xs: &[f64]) -> Result<bool> {
        let values = xs.iter().map(|&x| self.eval(x)).collect::<Result<Vec<_>>>()?;
        Ok(imaginary_span_dim(&values.iter().map(Element::imag).collect::<Vec<_>>(), 1e-10) <= 1)
    }
}

/// Dimension of the span of the given vectors (Gram-Schmidt with an absolute cutoff).
pub fn imaginary_span_dim(vectors: &[Element], tol: f64) -> usize {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w: Vec<f64> = v.coeffs().to_vec();
        for b in &basis {
            let d: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > tol {
            basis.push(w.into_iter().map(|x| x / n).collect());
        }
    }
    basis.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryClass {
    U1,
    SU2,
    SU3,
    #[serde(rename = "G2-type")]
    G2,
}

/// U1 when the axes are parallel, SU2 when the axes and their pairwise
/// products stay in a 3-dimensional imaginary subspace (one associative
/// triple), G2-type otherwise.
pub fn classify_axes(axes: &[Element]) -> SymmetryClass {
    let tol = 1e-9;
    let units: Vec<Element> = axes.iter().filter(|a| a.norm() > tol).map(|a| a.scale(1.0 / a.norm())).collect();
    if imaginary_span_dim(&units, tol) <= 1 {
        return SymmetryClass::U1;
    }
    let mut closure = units.clone();
    for a in &units {
        for b in &units {
            closure.push((a * b).imag());
        }
    }
    if imaginary_span_dim(&closure, tol) <= 3 {
        SymmetryClass::SU2
    } else {
        SymmetryClass::G2
    }
}

fn serialize_element<S: Serializer>(e: &Element, s: S) -> std::result::Result<S::Ok, S::Error> {
    e.coeffs().serialize(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    #[serde(serialize_with = "serialize_element")]
    pub theta_tilde: Element,
    pub d_tilde: f64,
    pub residual_analytic: f64,
    pub residual_fd: f64,
    pub symmetry_class: SymmetryClass,
    /// `|exp(θ̃ d̃) - product|`; zero when no merge happens.
    pub reconstruction_residual: f64,
    /// Merged product was 1, so `θ̃` is arbitrary.
    pub degenerate: bool,
    pub axis_in_derivation_image: Option<bool>,
    /// `|((e1 e2) e3) - (e1 (e2 e3))|` of the first three exponentials, octonion case only.
    pub bracketing_gap: Option<f64>,
    pub h: f64,
    pub grid_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdGrid {
    pub center: f64,
    pub half_width: f64,
    pub points: usize,
    pub h: f64,
    pub pole_exclusion: f64,
}

impl FdGrid {
    pub fn around(center: f64) -> Self {
        Self { center, half_width: 0.5, points: GRID_POINTS, h: DEFAULT_H, pole_exclusion: POLE_EXCLUSION }
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    /// Grid nodes away from the poles. A pole sitting exactly on a node is an error.
    pub fn nodes(&self, poles: &[f64]) -> Result<Vec<f64>> {
        let lo = self.center - self.half_width;
        let step = 2.0 * self.half_width / (self.points.max(2) - 1) as f64;
        let mut out = Vec::with_capacity(self.points);
        for i in 0..self.points {
            let x = lo + step * i as f64;
            if let Some(&p) = poles.iter().find(|&&p| p == x) {
                return Err(Error::PoleOnGrid(p));
            }
            if poles.iter().all(|&p| (x - p).abs() >= self.pole_exclusion) {
                out.push(x);
            }
        }
        if out.is_empty() {
            return Err(Error::Config("every grid point lies within the pole exclusion radius".into()));
        }
        Ok(out)
    }
}

fn central_diff(f: &impl Fn(f64) -> Result<Element>, x: f64, h: f64) -> Result<Element> {
    Ok((&f(x + h)? - &f(x - h)?).scale(1.0 / (2.0 * h)))
}

// ---------------------------------------------------------------------------
// Complex numbers

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

/// The passive factor: eigenvalue `m = π t_n (½ ± 2M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub t_n: f64,
    #[serde(rename = "M")]
    pub m_index: u32,
    pub sign: Sign,
}

impl Particle {
    pub fn eigenvalue(&self) -> f64 {
        let s = match self.sign {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        };
        PI * self.t_n * (0.5 + s * 2.0 * f64::from(self.m_index))
    }
}

/// `ψ = exp(ı m x) Π exp(ı t_i ln|x - a_i|) · exp(ı α)` with
/// `D̂ = -ı ∂ₓ - Σ t_i/(x - a_i)`.
#[derive(Debug, Clone)]
pub struct ComplexSolution {
    pub fields: Vec<(f64, f64)>,
    pub particle: Particle,
    pub phase: f64,
    pub grid: FdGrid,
    pub result: EigenResult,
}

fn complex_table() -> Arc<StructureTable> {
    Arc::new(StructureTable::complex())
}

struct ComplexWave<'a> {
    table: Arc<StructureTable>,
    fields: &'a [(f64, f64)],
    m: f64,
    phase: f64,
}

impl ComplexWave<'_> {
    fn iota(&self) -> Element {
        Element::basis(&self.table, 1).expect("dim 2")
    }

    fn psi(&self, x: f64) -> Result<Element> {
        let i = self.iota();
        let mut p = i.scale(self.m * x).exp();
        for &(t, a) in self.fields {
            if x == a {
                return Err(Error::Pole(x));
            }
            p = &p * &i.scale(t * (x - a).abs().ln()).exp();
        }
        Ok(&p * &i.scale(self.phase).exp())
    }

    fn potential(&self, x: f64) -> f64 {
        self.fields.iter().map(|&(t, a)| t / (x - a)).sum()
    }

    /// Sum of the per-factor phase rates; the constant phase contributes nothing.
    fn log_rate(&self, x: f64) -> f64 {
        self.m + self.fields.iter().map(|&(t, a)| t / (x - a)).sum::<f64>()
    }

    /// `D̂ψ` from a given derivative of ψ.
    fn apply_operator(&self, x: f64, psi: &Element, dpsi: &Element) -> Element {
        &(&(-&self.iota()) * dpsi) - &psi.scale(self.potential(x))
    }

    fn residuals(&self, grid: &FdGrid) -> Result<(f64, f64)> {
        let poles: Vec<f64> = self.fields.iter().map(|f| f.1).collect();
        let mut analytic: f64 = 0.0;
        let mut fd: f64 = 0.0;
        for x in grid.nodes(&poles)? {
            let psi = self.psi(x)?;
            let exact = &self.iota().scale(self.log_rate(x)) * &psi;
            let target = psi.scale(self.m);
            analytic = analytic.max(self.apply_operator(x, &psi, &exact).distance(&target));
            let approx = central_diff(&|y| self.psi(y), x, grid.h)?;
            fd = fd.max(self.apply_operator(x, &psi, &approx).distance(&target));
        }
        Ok((analytic, fd))
    }

    /// Eigenvalue read off the log-derivative: `-ı(ψ'/ψ) - Σ t_i/(x - a_i)`.
    fn eigenvalue_at(&self, x: f64) -> f64 {
        self.log_rate(x) - self.potential(x)
    }
}

pub fn complex_solution(fields: &[(f64, f64)], particle: Particle) -> Result<ComplexSolution> {
    complex_solution_on(fields, particle, 0.0, FdGrid::around(0.0))
}

/// As [`complex_solution`] with an explicit global phase and grid.
pub fn complex_solution_on(fields: &[(f64, f64)], particle: Particle, phase: f64, grid: FdGrid) -> Result<ComplexSolution> {
    let table = complex_table();
    let m = particle.eigenvalue();
    let wave = ComplexWave { table: table.clone(), fields, m, phase };
    let (residual_analytic, residual_fd) = wave.residuals(&grid)?;
    let result = EigenResult {
        theta_tilde: wave.iota(),
        d_tilde: m,
        residual_analytic,
        residual_fd,
        symmetry_class: SymmetryClass::U1,
        reconstruction_residual: 0.0,
        degenerate: false,
        axis_in_derivation_image: None,
        bracketing_gap: None,
        h: grid.h,
        grid_points: grid.nodes(&fields.iter().map(|f| f.1).collect::<Vec<_>>())?.len(),
    };
    Ok(ComplexSolution { fields: fields.to_vec(), particle, phase, grid, result })
}

impl ComplexSolution {
    fn wave(&self) -> ComplexWave<'_> {
        ComplexWave { table: complex_table(), fields: &self.fields, m: self.particle.eigenvalue(), phase: self.phase }
    }

    /// Eigenvalue extracted at every grid node from the log-derivative.
    pub fn extracted_eigenvalues(&self) -> Result<Vec<f64>> {
        let w = self.wave();
        let poles: Vec<f64> = self.fields.iter().map(|f| f.1).collect();
        Ok(self.grid.nodes(&poles)?.into_iter().map(|x| w.eigenvalue_at(x)).collect())
    }

    /// `log2` of the ratio of finite-difference residuals at `h` and `h/2`.
    pub fn observed_order(&self, h: f64) -> Result<f64> {
        let w = self.wave();
        let (_, coarse) = w.residuals(&self.grid.with_h(h))?;
        let (_, fine) = w.residuals(&self.grid.with_h(h / 2.0))?;
        Ok((coarse / fine).log2())
    }
}

/// Multiplying ψ by `exp(ıα)` leaves the operator, the extracted eigenvalue and
/// the residuals unchanged. Eigenvalues must agree bitwise; finite-difference
/// residuals agree up to the stencil's roundoff floor `16ε/h`.
pub fn global_phase_check(solution: &ComplexSolution, alpha: f64) -> Result<bool> {
    let shifted = complex_solution_on(&solution.fields, solution.particle, solution.phase + alpha, solution.grid)?;
    let same_lambda = solution.extracted_eigenvalues()? == shifted.extracted_eigenvalues()?
        && shifted.result.d_tilde == solution.result.d_tilde;
    let floor = (16.0 * f64::EPSILON / solution.grid.h).max(1e-12);
    let same_fd = (shifted.result.residual_fd - solution.result.residual_fd).abs() <= floor;
    let same_analytic = (shifted.result.residual_analytic - solution.result.residual_analytic).abs() <= 1e-12;
    Ok(same_lambda && same_fd && same_analytic)
}

// ---------------------------------------------------------------------------
// Quaternions: merging exponentials

#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    pub theta: Element,
    pub d: f64,
    /// The product was 1; `theta` is then only a placeholder.
    pub degenerate: bool,
    pub reconstruction_residual: f64,
}

/// `θ̃ d̃` with `exp(θ̃ d̃) = p` for a unit product `p`, principal branch.
fn merge_product(p: &Element, fallback_axis: &Element) -> Result<Merge> {
    let v = p.imag();
    if v.norm() <= MERGE_TOL {
        if p.real() > 0.0 {
            return Ok(Merge {
                theta: fallback_axis.clone(),
                d: 0.0,
                degenerate: true,
                reconstruction_residual: (p - &Element::one(p.table())).norm(),
            });
        }
        return Err(Error::BranchSingularity);
    }
    let l = p.log()?;
    let d = l.norm();
    let theta = l.scale(1.0 / d);
    let reconstruction_residual = theta.scale(d).exp().distance(p);
    Ok(Merge { theta, d, degenerate: false, reconstruction_residual })
}

/// `exp(θ̃ d̃) = exp(θ1 d1) exp(θ2 d2)` via product and principal logarithm.
pub fn quaternion_merge(s1: (&Element, f64), s2: (&Element, f64)) -> Result<Merge> {
    check_unit_imaginary(s1.0)?;
    check_unit_imaginary(s2.0)?;
    let p = s1.0.scale(s1.1).exp().try_mul(&s2.0.scale(s2.1).exp())?;
    merge_product(&p, s1.0)
}

fn eigen_residuals(theta: &Element, d: f64, a: f64, grid: &FdGrid) -> Result<(f64, f64, usize)> {
    let psi = |x: f64| -> Result<Element> { Ok(theta.scale(d * (x - a)).exp()) };
    let neg_theta = -theta;
    let mut analytic: f64 = 0.0;
    let mut fd: f64 = 0.0;
    let nodes = grid.nodes(&[])?;
    for &x in &nodes {
        let p = psi(x)?;
        let target = p.scale(d);
        let exact = &theta.scale(d) * &p;
        analytic = analytic.max((&neg_theta * &exact).distance(&target));
        let approx = central_diff(&psi, x, grid.h)?;
        fd = fd.max((&neg_theta * &approx).distance(&target));
    }
    Ok((analytic, fd, nodes.len()))
}

/// Particles at a common position `a`: `ψ = exp(θ̃ d̃ (x - a))`, `D̂ = -θ̃ ∂ₓ`.
pub fn local_solution(specs: &[(Element, f64)], a: f64) -> Result<EigenResult> {
    let bracketing = Bracketing::left_fold(specs.len())?;
    local_solution_bracketed(specs, a, &bracketing, FdGrid::around(a))
}

/// Merge in an explicit bracketing; each internal node merges its two children.
pub fn local_solution_bracketed(specs: &[(Element, f64)], a: f64, bracketing: &Bracketing, grid: FdGrid) -> Result<EigenResult> {
    bracketing.validate(specs.len())?;
    for (theta, _) in specs {
        check_unit_imaginary(theta)?;
        theta.same_table(&specs[0].0)?;
    }
    let leaf_merge = |k: usize| Merge {
        theta: specs[k].0.clone(),
        d: specs[k].1,
        degenerate: false,
        reconstruction_residual: 0.0,
    };
    let merged = bracketing.fold(&mut |k| Ok(leaf_merge(k)), &mut |l: Merge, r: Merge| {
        let p = l.theta.scale(l.d).exp().try_mul(&r.theta.scale(r.d).exp())?;
        merge_product(&p, &l.theta)
    })?;

    let exps: Vec<Element> = specs.iter().map(|(t, d)| t.scale(*d).exp()).collect();
    let product = bracketing.product(&exps)?;
    let reconstruction_residual = merged.theta.scale(merged.d).exp().distance(&product);
    let (residual_analytic, residual_fd, grid_points) = eigen_residuals(&merged.theta, merged.d, a, &grid)?;
    let axes: Vec<Element> = specs.iter().map(|(t, _)| t.clone()).collect();
    Ok(EigenResult {
        theta_tilde: merged.theta,
        d_tilde: merged.d,
        residual_analytic,
        residual_fd,
        symmetry_class: classify_axes(&axes),
        reconstruction_residual,
        degenerate: merged.degenerate,
        axis_in_derivation_image: None,
        bracketing_gap: None,
        h: grid.h,
        grid_points,
    })
}

// ---------------------------------------------------------------------------
// Octonions through derivations

/// `((exp(D(θ1)d1) exp(D(θ2)d2)) exp(D(θ3)d3)) = exp(θ̃ d̃)` with `D = D_{u,v}`,
/// left-bracketed for more than three factors.
pub fn octonion_solution(u: &Element, v: &Element, specs: &[(Element, f64)], a: f64) -> Result<EigenResult> {
    let bracketing = Bracketing::left_fold(specs.len())?;
    octonion_solution_bracketed(u, v, specs, a, &bracketing, FdGrid::around(a))
}

pub fn octonion_solution_bracketed(
    u: &Element,
    v: &Element,
    specs: &[(Element, f64)],
    a: f64,
    bracketing: &Bracketing,
    grid: FdGrid,
) -> Result<EigenResult> {
    if specs.len() < 3 {
        return Err(Error::InvalidTransform(format!(
            "octonion solutions need at least three factors, got {}",
            specs.len()
        )));
    }
    bracketing.validate(specs.len())?;
    let d_map = derivations::derivation(u, v)?;
    let mut images = Vec::with_capacity(specs.len());
    let mut kernel_hit = false;
    for (theta, _) in specs {
        check_unit_imaginary(theta)?;
        let g = d_map.apply(theta)?;
        kernel_hit |= g.norm() <= UNIT_TOL;
        images.push(g);
    }
    let exps: Vec<Element> = images.iter().zip(specs).map(|(g, (_, d))| g.scale(*d).exp()).collect();
    let product = bracketing.product(&exps)?;
    let fallback = specs[0].0.clone();
    let merged = merge_product(&product, &fallback)?;
    let (residual_analytic, residual_fd, grid_points) = eigen_residuals(&merged.theta, merged.d, a, &grid)?;

    let gap = exps[0].associator(&exps[1], &exps[2])?.norm();
    let mut class = classify_axes(&images);
    if class == SymmetryClass::G2 && stabilizes_basis_unit(&d_map) {
        class = SymmetryClass::SU3;
    }
    Ok(EigenResult {
        axis_in_derivation_image: Some(!merged.degenerate && d_map.image_contains(&merged.theta, 1e-9)),
        theta_tilde: merged.theta,
        d_tilde: merged.d,
        residual_analytic,
        residual_fd,
        symmetry_class: class,
        reconstruction_residual: merged.reconstruction_residual,
        degenerate: merged.degenerate || kernel_hit,
        bracketing_gap: Some(gap),
        h: grid.h,
        grid_points,
    })
}

/// The derivation fixes one of `i_1..i_7`, i.e. lies in the stabilizer subalgebra.
fn stabilizes_basis_unit(d: &DerivationMap) -> bool {
    !d.is_zero() && (1..8).any(|k| d.annihilates(k, UNIT_TOL))
}

// ---------------------------------------------------------------------------
// Config files

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum TableConfig {
    Id(String),
    Inline { dim: usize, id: Option<String>, triplets: Vec<[i64; 4]> },
}

impl TableConfig {
    pub fn resolve(&self) -> Result<Arc<StructureTable>> {
        match self {
            TableConfig::Id(id) => crate::catalog::table_by_id(id),
            TableConfig::Inline { dim, id, triplets } => {
                let trips = triplets
                    .iter()
                    .map(|&[a, b, c, s]| {
                        let idx = |v: i64| u8::try_from(v).map_err(|_| Error::Config(format!("bad triplet index {v}")));
                        let sign = i8::try_from(s).map_err(|_| Error::Config(format!("bad sign {s}")))?;
                        Ok(crate::algebra::Triplet { idx: [idx(a)?, idx(b)?, idx(c)?], sign })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Arc::new(StructureTable::new(*dim, id.clone().unwrap_or_else(|| "inline".into()), trips)?))
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorConfig {
    pub kind: TransformKind,
    pub theta: Vec<f64>,
    pub t: f64,
    #[serde(default)]
    pub a: f64,
    #[serde(default, rename = "N")]
    pub n: i64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivationConfig {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// JSON wave description accepted by `solve`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    pub table: TableConfig,
    pub factors: Vec<FactorConfig>,
    #[serde(default)]
    pub bracketing: Option<Bracketing>,
    #[serde(default)]
    pub derivation: Option<DerivationConfig>,
    #[serde(default)]
    pub h: Option<f64>,
}

impl WaveConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))
    }

    pub fn wave_spec(&self) -> Result<WaveSpec> {
        let table = self.table.resolve()?;
        let factors = self
            .factors
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let theta = Element::new(&table, &f.theta).map_err(|e| Error::Config(format!("factors[{k}].theta: {e}")))?;
                TransformSpec::new(f.kind, theta, f.t, f.a, f.n).map_err(|e| Error::Config(format!("factors[{k}]: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        WaveSpec::new(table, factors, self.bracketing.clone())
    }

    /// Pick the solver from the table dimension and the presence of a derivation.
    pub fn solve(&self) -> Result<EigenResult> {
        let wave = self.wave_spec()?;
        let h = self.h.unwrap_or(DEFAULT_H);
        if wave.table.dim() == 2 {
            return solve_complex(&wave, h);
        }
        if wave.factors.iter().any(|f| f.kind == TransformKind::Active) {
            return Err(Error::Config(
                "active factors are only solvable over the complex numbers; use passive factors at a common position".into(),
            ));
        }
        let a = wave.factors.first().map(|f| f.a).ok_or_else(|| Error::Config("no factors".into()))?;
        if wave.factors.iter().any(|f| f.a != a) {
            return Err(Error::Config("local solutions need every factor at the same position a".into()));
        }
        let specs: Vec<(Element, f64)> =
            wave.factors.iter().map(|f| (f.theta.clone(), f.t * branch_phase(f.n))).collect();
        let grid = FdGrid::around(a).with_h(h);
        match &self.derivation {
            None => local_solution_bracketed(&specs, a, &wave.bracketing, grid),
            Some(dc) => {
                let u = Element::new(&wave.table, &dc.u).map_err(|e| Error::Config(format!("derivation.u: {e}")))?;
                let v = Element::new(&wave.table, &dc.v).map_err(|e| Error::Config(format!("derivation.v: {e}")))?;
                octonion_solution_bracketed(&u, &v, &specs, a, &wave.bracketing, grid)
            }
        }
    }
}

fn solve_complex(wave: &WaveSpec, h: f64) -> Result<EigenResult> {
    let orientation = |f: &TransformSpec| f.theta.coeff(1).signum();
    let fields: Vec<(f64, f64)> = wave
        .factors
        .iter()
        .filter(|f| f.kind == TransformKind::Active)
        .map(|f| (orientation(f) * f.t, f.a))
        .collect();
    let passive: Vec<&TransformSpec> = wave.factors.iter().filter(|f| f.kind == TransformKind::Passive).collect();
    let [p] = passive.as_slice() else {
        return Err(Error::Config(format!(
            "the complex solver needs exactly one passive factor, got {}",
            passive.len()
        )));
    };
    let particle = Particle {
        t_n: orientation(p) * p.t,
        m_index: p.n.unsigned_abs() as u32,
        sign: if p.n < 0 { Sign::Minus } else { Sign::Plus },
    };
    // exp(ı m (x - a)) = exp(ı m x) exp(-ı m a)
    let phase = -particle.eigenvalue() * p.a;
    Ok(complex_solution_on(&fields, particle, phase, FdGrid::around(0.0).with_h(h))?.result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    fn e(t: &Arc<StructureTable>, k: usize) -> Element {
        Element::basis(t, k).unwrap()
    }

    fn quat() -> Arc<StructureTable> {
        Arc::new(StructureTable::quaternion())
    }

    #[test]
    fn transform_examples() {
        let t = quat();
        let p = TransformSpec::passive(e(&t, 1), 1.0, 0.0, 0).unwrap();
        assert!(eval_transform(&p, 1.0).unwrap().distance(&e(&t, 1)) < 1e-15);
        let act = TransformSpec::active(e(&t, 1), 3.7, 2.0).unwrap();
        assert_eq!(eval_transform(&act, 3.0).unwrap(), Element::one(&t));
        assert_eq!(eval_transform(&act, 2.0).unwrap_err(), Error::Pole(2.0));
        assert!(TransformSpec::active(e(&t, 1).scale(2.0), 1.0, 0.0).is_err());
        assert!(TransformSpec::active(&Element::one(&t) + &e(&t, 1), 1.0, 0.0).is_err());
    }

    #[test]
    fn duality_examples() {
        let e1 = std::f64::consts::E;
        let ta = duality_match(1.0, e1, 0.0, 0).unwrap();
        assert!((ta - e1 * PI / 2.0).abs() < 1e-15);
        let ratio = duality_match(1.0, 2.5, 0.3, 1).unwrap() / duality_match(1.0, 2.5, 0.3, 0).unwrap();
        assert!((ratio - 5.0).abs() < 1e-14);
        assert_eq!(duality_match(1.0, 1.5, 0.5, 0).unwrap_err(), Error::LogarithmZero);
        assert_eq!(duality_match(1.0, 0.5, 0.5, 0).unwrap_err(), Error::Pole(0.5));

        let o = catalog::table_by_index(0).unwrap();
        let theta = Element::new(&o, &[0.0, 0.0, 0.6, 0.0, 0.0, 0.8, 0.0, 0.0]).unwrap();
        for &(x, a, n) in &[(2.5, 0.3, 0), (-1.7, 0.2, 2), (0.1, -3.0, -1)] {
            let ta = duality_match(0.7, x, a, n).unwrap();
            let act = TransformSpec::active(theta.clone(), ta, a).unwrap();
            let pas = TransformSpec::passive(theta.clone(), 0.7, a, n).unwrap();
            let d = eval_transform(&act, x).unwrap().distance(&eval_transform(&pas, x).unwrap());
            assert!(d < 1e-10, "({x}, {a}, {n}): {d}");
        }
    }

    #[test]
    fn bracketing_parse_and_validate() {
        let b: Bracketing = serde_json::from_str("[[0, 1], 2]").unwrap();
        assert_eq!(b, Bracketing::left_fold(3).unwrap());
        assert!(b.validate(3).is_ok());
        assert!(b.validate(4).is_err());
        let dup: Bracketing = serde_json::from_str("[[0, 0], 2]").unwrap();
        assert!(dup.validate(3).is_err());
        assert_eq!(serde_json::to_string(&b).unwrap(), "[[0,1],2]");
    }

    #[test]
    fn complex_examples() {
        let plus = |t_n, m| Particle { t_n, m_index: m, sign: Sign::Plus };
        let s = complex_solution(&[], plus(1.0, 0)).unwrap();
        assert_eq!(s.result.d_tilde, PI / 2.0);
        assert_eq!(s.result.symmetry_class, SymmetryClass::U1);
        assert!(s.result.residual_fd < 1e-8);

        let grid = FdGrid::around(0.0).with_h(1e-4);
        let two = complex_solution_on(&[(1.0, -1.0), (2.0, 1.0)], plus(1.0, 1), 0.0, grid).unwrap();
        assert!((two.result.d_tilde - 5.0 * PI / 2.0).abs() < 1e-15);
        assert!(two.result.residual_analytic < 1e-12);
        // frozen from an independent NumPy evaluation of the same stencil and grid:
        // 1.0277e-6, dominated by the x = -0.5 endpoint
        assert!((two.result.residual_fd - 1.0277e-6).abs() < 2e-9, "{}", two.result.residual_fd);

        let minus = Particle { t_n: 1.0, m_index: 1, sign: Sign::Minus };
        assert!((minus.eigenvalue() + 1.5 * PI).abs() < 1e-15);

        assert_eq!(complex_solution(&[(1.0, 0.0)], plus(1.0, 0)).unwrap_err(), Error::PoleOnGrid(0.0));
    }

    #[test]
    fn global_phase() {
        let s = complex_solution(&[(0.5, 2.0), (-1.0, -1.5)], Particle { t_n: 0.8, m_index: 1, sign: Sign::Minus })
            .unwrap();
        assert!(global_phase_check(&s, 0.0).unwrap());
        assert!(global_phase_check(&s, PI / 3.0).unwrap());
        for k in 0..8 {
            assert!(global_phase_check(&s, k as f64 * 0.9 - 3.0).unwrap());
        }
    }

    #[test]
    fn finite_difference_order_is_two() {
        let s = complex_solution(&[(1.0, -1.0), (2.0, 1.0)], Particle { t_n: 1.0, m_index: 1, sign: Sign::Plus }).unwrap();
        let order = s.observed_order(1e-3).unwrap();
        assert!((order - 2.0).abs() < 0.05, "{order}");
    }

    #[test]
    fn merge_examples() {
        let t = quat();
        let m = quaternion_merge((&e(&t, 1), PI / 6.0), (&e(&t, 1), PI / 6.0)).unwrap();
        assert!(m.theta.distance(&e(&t, 1)) < 1e-15);
        assert!((m.d - PI / 3.0).abs() < 1e-15);

        let m = quaternion_merge((&e(&t, 1), PI / 2.0), (&e(&t, 2), PI / 2.0)).unwrap();
        assert!(m.theta.distance(&e(&t, 3)) < 1e-15);
        assert!((m.d - PI / 2.0).abs() < 1e-15);
        assert!(m.reconstruction_residual <= 1e-12);

        let one = quaternion_merge((&e(&t, 2), 0.4), (&(-&e(&t, 2)), 0.4)).unwrap();
        assert!(one.degenerate);
        assert_eq!(one.d, 0.0);
        assert_eq!(quaternion_merge((&e(&t, 2), PI / 2.0), (&e(&t, 2), PI / 2.0)).unwrap_err(), Error::BranchSingularity);
    }

    #[test]
    fn local_examples() {
        let t = quat();
        let r = local_solution(&[(e(&t, 1), PI / 2.0), (e(&t, 2), PI / 2.0)], 0.3).unwrap();
        assert!((r.d_tilde - PI / 2.0).abs() < 1e-15);
        assert!(r.residual_fd <= 1e-8);
        assert_eq!(r.symmetry_class, SymmetryClass::SU2);

        let single = local_solution(&[(e(&t, 2), 0.7)], 0.0).unwrap();
        assert_eq!(single.theta_tilde, e(&t, 2));
        assert_eq!(single.d_tilde, 0.7);
        assert_eq!(single.symmetry_class, SymmetryClass::U1);

        let collapse = local_solution(&[(e(&t, 3), 1.1), (-&e(&t, 3), 1.1)], 0.0).unwrap();
        assert!(collapse.degenerate);
        assert_eq!(collapse.d_tilde, 0.0);
    }

    #[test]
    fn classification() {
        let o = catalog::table_by_index(0).unwrap();
        assert_eq!(classify_axes(&[e(&o, 4), -&e(&o, 4)]), SymmetryClass::U1);
        assert_eq!(classify_axes(&[e(&o, 1), e(&o, 2), e(&o, 3)]), SymmetryClass::SU2);
        assert_eq!(classify_axes(&[e(&o, 1), e(&o, 4), e(&o, 5)]), SymmetryClass::SU2);
        assert_eq!(classify_axes(&[e(&o, 1), e(&o, 2), e(&o, 4)]), SymmetryClass::G2);
    }

    #[test]
    fn confinement_one_active_one_passive() {
        let o = catalog::table_by_index(0).unwrap();
        let xs: Vec<f64> = (0..12).map(|k| -2.0 + 0.37 * k as f64).collect();
        let mk = |t1: &Element, t2: &Element| {
            WaveSpec::new(
                o.clone(),
                vec![
                    TransformSpec::active(t1.clone(), 0.8, -3.0).unwrap(),
                    TransformSpec::passive(t2.clone(), 0.6, 0.5, 0).unwrap(),
                ],
                None,
            )
            .unwrap()
        };
        assert!(mk(&e(&o, 2), &e(&o, 2)).is_complex_confined(&xs).unwrap());
        assert!(mk(&e(&o, 2), &(-&e(&o, 2))).is_complex_confined(&xs).unwrap());
        assert!(!mk(&e(&o, 2), &e(&o, 5)).is_complex_confined(&xs).unwrap());
    }

    #[test]
    fn octonion_examples() {
        let o = catalog::table_by_index(0).unwrap();
        let u = Element::new(&o, &[0.0, 0.3, -0.2, 0.5, 0.1, 0.4, -0.6, 0.2]).unwrap();
        let v = Element::new(&o, &[0.0, -0.1, 0.7, 0.2, -0.5, 0.3, 0.1, -0.4]).unwrap();

        // equal axes collapse to one exponential
        let th = e(&o, 6);
        let g = derivations::derivation(&u, &v).unwrap().apply(&th).unwrap();
        let ds = [0.05, 0.1, 0.07];
        let r = octonion_solution(&u, &v, &ds.map(|d| (th.clone(), d)), 0.0).unwrap();
        assert!((r.d_tilde - g.norm() * ds.iter().sum::<f64>()).abs() < 1e-12);
        assert!(r.theta_tilde.distance(&g.scale(1.0 / g.norm())) < 1e-12);
        assert_eq!(r.symmetry_class, SymmetryClass::U1);

        let specs = [(e(&o, 1), 0.3), (e(&o, 2), -0.2), (e(&o, 4), 0.25)];
        let r = octonion_solution(&u, &v, &specs, 0.1).unwrap();
        assert!(r.reconstruction_residual <= 1e-10);
        assert!(r.residual_fd <= 1e-8);
        assert_eq!(r.symmetry_class, SymmetryClass::G2);
        assert!(r.bracketing_gap.unwrap() > 1e-6);

        assert!(octonion_solution(&u, &v, &specs[..2], 0.0).is_err());
    }

    #[test]
    fn octonion_quaternionic_subcase_matches_merge_chain() {
        let o = catalog::table_by_index(0).unwrap();
        // D_{i2,i3} acts on span{i1,i2,i3} as ad(i1)-type rotation
        let u = e(&o, 2);
        let v = e(&o, 3);
        let specs = [(e(&o, 2), 0.05), (e(&o, 3), 0.04), (e(&o, 2), -0.03)];
        let r = octonion_solution(&u, &v, &specs, 0.0).unwrap();
        let d = derivations::derivation(&u, &v).unwrap();
        let chain: Vec<(Element, f64)> = specs
            .iter()
            .map(|(t, dd)| {
                let g = d.apply(t).unwrap();
                (g.scale(1.0 / g.norm()), g.norm() * dd)
            })
            .collect();
        let q = local_solution(&chain, 0.0).unwrap();
        assert!((q.d_tilde - r.d_tilde).abs() < 1e-12);
        assert!(q.theta_tilde.distance(&r.theta_tilde) < 1e-12);
        assert_eq!(r.symmetry_class, SymmetryClass::SU2);
    }

    #[test]
    fn config_dispatch() {
        let complex = r#"{"table":"C","factors":[{"kind":"passive","theta":[0,1],"t":1,"a":0,"N":0}]}"#;
        let r = WaveConfig::from_json(complex).unwrap().solve().unwrap();
        assert!((r.d_tilde - PI / 2.0).abs() < 1e-10);

        let bad = r#"{"table":"C","factors":[{"kind":"passive","theta":[0,1],"t":1,"oops":0}]}"#;
        let err = WaveConfig::from_json(bad).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("line 1")), "{err}");

        let unit = r#"{"table":"H","factors":[{"kind":"passive","theta":[0,2,0,0],"t":1}]}"#;
        let err = WaveConfig::from_json(unit).unwrap().solve().unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("factors[0]")), "{err}");

        let inline = r#"{"table":{"dim":4,"triplets":[[1,2,3,-1]]},
            "factors":[{"kind":"passive","theta":[0,1,0,0],"t":1},{"kind":"passive","theta":[0,0,1,0],"t":1}]}"#;
        let r = WaveConfig::from_json(inline).unwrap().solve().unwrap();
        // i1 i2 = -i3 in this table
        assert!(r.theta_tilde.distance(&Element::new(&r.theta_tilde.table().clone(), &[0.0, 0.0, 0.0, -1.0]).unwrap()) < 1e-12);
    }
}
