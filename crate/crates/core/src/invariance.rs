//! Real-eigenvalue invariance across the sixteen equivalent algebras.
//!
//! A [`PolySpec`] is an expression in basis symbols that never names a table.
//! [`instantiate`] binds it to `O[N]`; [`invariance_check`] extracts
//! `λ[N] = mean_x ⟨D̂ψ, ψ⟩ / |ψ|²` per algebra with
//! `D̂ = -A ∂ₓ - Σ t_i/(x - a_i)` and compares the sixteen values.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{Element, StructureTable};
use crate::catalog;
use crate::error::{Error, Result};
use crate::transforms::{branch_phase, Bracketing, FdGrid, TransformKind, WaveSpec};

pub const INVARIANCE_TOL: f64 = 1e-9;
pub const FD_TOL: f64 = 1e-6;
pub const EXTENSION_TOL: f64 = 1e-8;
pub const BRACKET_TOL: f64 = 1e-10;
pub const EXTENSION_GRID: usize = 11;

/// Real exponent of an `exp` node, as a function of one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Scalar {
    Const(f64),
    /// `coef · var + offset`
    Linear {
        var: String,
        coef: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `coef · ln|var - pole|`
    Log { var: String, coef: f64, pole: f64 },
}

impl Scalar {
    fn var(&self) -> Option<&str> {
        match self {
            Scalar::Const(_) => None,
            Scalar::Linear { var, .. } | Scalar::Log { var, .. } => Some(var),
        }
    }

    /// Value and derivative in `wrt`.
    fn eval(&self, vars: &Vars, wrt: Option<&str>) -> Result<(f64, f64)> {
        let lookup = |v: &str| vars.get(v).copied().ok_or_else(|| Error::Config(format!("unbound variable `{v}`")));
        Ok(match self {
            Scalar::Const(c) => (*c, 0.0),
            Scalar::Linear { var, coef, offset } => {
                let d = if wrt == Some(var.as_str()) { *coef } else { 0.0 };
                (coef * lookup(var)? + offset, d)
            }
            Scalar::Log { var, coef, pole } => {
                let x = lookup(var)?;
                if x == *pole {
                    return Err(Error::Pole(x));
                }
                let d = if wrt == Some(var.as_str()) { coef / (x - pole) } else { 0.0 };
                (coef * (x - pole).abs().ln(), d)
            }
        })
    }
}

/// Expression in basis symbols; `Basis(0)` is the unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Expr {
    Basis(usize),
    /// Coefficients in the basis `1, i1, ...`; shorter lists are zero-padded.
    Const(Vec<f64>),
    Mul(Box<Expr>, Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    /// `exp(axis · scalar)`; the axis may not depend on any variable.
    Exp { axis: Box<Expr>, scalar: Scalar },
}

pub type Vars = BTreeMap<String, f64>;

impl Expr {
    pub fn product_of(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn exp(axis: Expr, scalar: Scalar) -> Expr {
        Expr::Exp { axis: Box::new(axis), scalar }
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Basis(_) | Expr::Const(_) => {}
            Expr::Mul(a, b) | Expr::Add(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Exp { axis, scalar } => {
                axis.collect_vars(out);
                if let Some(v) = scalar.var() {
                    out.push(v.to_string());
                }
            }
        }
    }

    pub fn variables(&self) -> Vec<String> {
        let mut v = Vec::new();
        self.collect_vars(&mut v);
        v.sort();
        v.dedup();
        v
    }

    /// Log poles in `var`.
    pub fn poles(&self, var: &str) -> Vec<f64> {
        match self {
            Expr::Basis(_) | Expr::Const(_) => vec![],
            Expr::Mul(a, b) | Expr::Add(a, b) => {
                let mut p = a.poles(var);
                p.extend(b.poles(var));
                p
            }
            Expr::Exp { axis, scalar } => {
                let mut p = axis.poles(var);
                if let Scalar::Log { var: v, pole, .. } = scalar {
                    if v == var {
                        p.push(*pole);
                    }
                }
                p
            }
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Expr::Basis(k) if *k >= dim => Err(Error::IndexOutOfRange(format!("basis i{k} for dim {dim}"))),
            Expr::Const(c) if c.len() > dim => Err(Error::Length { expected: dim, got: c.len() }),
            Expr::Basis(_) | Expr::Const(_) => Ok(()),
            Expr::Mul(a, b) | Expr::Add(a, b) => {
                a.validate(dim)?;
                b.validate(dim)
            }
            Expr::Exp { axis, .. } => {
                if !axis.variables().is_empty() {
                    return Err(Error::Config("exp axis must not depend on a variable".into()));
                }
                axis.validate(dim)
            }
        }
    }

    /// Value and forward-mode derivative in `wrt` (zero when `wrt` is `None`).
    pub fn eval_with_derivative(&self, table: &Arc<StructureTable>, vars: &Vars, wrt: Option<&str>) -> Result<(Element, Element)> {
        let zero = Element::zero(table);
        Ok(match self {
            Expr::Basis(k) => (Element::basis(table, *k)?, zero),
            Expr::Const(c) => {
                let mut v = vec![0.0; table.dim()];
                v.get_mut(..c.len())
                    .ok_or(Error::Length { expected: table.dim(), got: c.len() })?
                    .copy_from_slice(c);
                (Element::new(table, &v)?, zero)
            }
            Expr::Mul(a, b) => {
                let (av, ad) = a.eval_with_derivative(table, vars, wrt)?;
                let (bv, bd) = b.eval_with_derivative(table, vars, wrt)?;
                (av.try_mul(&bv)?, &ad.try_mul(&bv)? + &av.try_mul(&bd)?)
            }
            Expr::Add(a, b) => {
                let (av, ad) = a.eval_with_derivative(table, vars, wrt)?;
                let (bv, bd) = b.eval_with_derivative(table, vars, wrt)?;
                (&av + &bv, &ad + &bd)
            }
            Expr::Exp { axis, scalar } => {
                let (a, _) = axis.eval_with_derivative(table, vars, None)?;
                let (s, ds) = scalar.eval(vars, wrt)?;
                let v = a.scale(s).exp();
                // a commutes with every power of a
                let d = a.scale(ds).try_mul(&v)?;
                (v, d)
            }
        })
    }

    pub fn eval(&self, table: &Arc<StructureTable>, vars: &Vars) -> Result<Element> {
        Ok(self.eval_with_derivative(table, vars, None)?.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolySpec {
    pub variables: Vec<String>,
    pub expr: Expr,
}

impl PolySpec {
    pub fn new(variables: &[&str], expr: Expr) -> Result<Self> {
        let p = Self { variables: variables.iter().map(|s| s.to_string()).collect(), expr };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for v in self.expr.variables() {
            if !self.variables.contains(&v) {
                return Err(Error::Config(format!("expression uses undeclared variable `{v}`")));
            }
        }
        self.expr.validate(8)
    }

    /// Same product of exponentials with the table forgotten.
    pub fn from_wave(wave: &WaveSpec, var: &str) -> Result<Self> {
        let leaf = |k: usize| -> Result<Expr> {
            let f = &wave.factors[k];
            let axis = Expr::Const(f.theta.coeffs().to_vec());
            let scalar = match f.kind {
                TransformKind::Active => Scalar::Log { var: var.into(), coef: f.t, pole: f.a },
                TransformKind::Passive => {
                    let coef = f.t * branch_phase(f.n);
                    Scalar::Linear { var: var.into(), coef, offset: -coef * f.a }
                }
            };
            Ok(Expr::exp(axis, scalar))
        };
        let expr = wave.bracketing.fold(&mut |k| leaf(k), &mut |a, b| Ok(Expr::product_of(a, b)))?;
        Self::new(&[var], expr)
    }

    /// Product of exponentials `exp(axis_k · scalar_k)` in the given bracketing.
    pub fn product(variables: &[&str], factors: Vec<(Expr, Scalar)>, bracketing: Option<Bracketing>) -> Result<Self> {
        let b = match bracketing {
            Some(b) => b,
            None => Bracketing::left_fold(factors.len())?,
        };
        b.validate(factors.len())?;
        let expr = b.fold(&mut |k| Ok(Expr::exp(factors[k].0.clone(), factors[k].1.clone())), &mut |a, b| Ok(Expr::product_of(a, b)))?;
        Self::new(variables, expr)
    }
}

/// A [`PolySpec`] bound to one table.
#[derive(Debug, Clone)]
pub struct Instance {
    pub expr: Expr,
    pub table: Arc<StructureTable>,
}

impl Instance {
    pub fn eval(&self, vars: &Vars) -> Result<Element> {
        self.expr.eval(&self.table, vars)
    }

    pub fn eval_with_derivative(&self, vars: &Vars, wrt: &str) -> Result<(Element, Element)> {
        self.expr.eval_with_derivative(&self.table, vars, Some(wrt))
    }
}

pub fn instantiate(p: &PolySpec, n: usize) -> Result<Instance> {
    Ok(Instance { expr: p.expr.clone(), table: catalog::table_by_index(n)? })
}

/// `D̂ = -A ∂_var - Σ t_i/(var - a_i)` on a grid around `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub axis: Expr,
    #[serde(default = "default_var")]
    pub variable: String,
    /// `(t_i, a_i)` pairs.
    #[serde(default)]
    pub potentials: Vec<(f64, f64)>,
    #[serde(default)]
    pub center: f64,
    #[serde(default = "default_h")]
    pub h: f64,
}

fn default_var() -> String {
    "x".into()
}

fn default_h() -> f64 {
    crate::transforms::DEFAULT_H
}

impl OperatorSpec {
    pub fn new(axis: Expr) -> Self {
        Self { axis, variable: default_var(), potentials: vec![], center: 0.0, h: default_h() }
    }

    fn potential(&self, x: f64) -> f64 {
        self.potentials.iter().map(|&(t, a)| t / (x - a)).sum()
    }

    fn grid(&self) -> FdGrid {
        FdGrid::around(self.center).with_h(self.h)
    }

    fn apply(&self, axis: &Element, x: f64, psi: &Element, dpsi: &Element) -> Result<Element> {
        Ok(&(-&axis.try_mul(dpsi)?) - &psi.scale(self.potential(x)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub poly: PolySpec,
    pub operator: OperatorSpec,
    pub reference: usize,
    pub lambdas: Vec<f64>,
    pub residuals_analytic: Vec<f64>,
    pub residuals_fd: Vec<f64>,
    pub spread: f64,
    pub tolerance: f64,
    pub invariant: bool,
    pub witness: Option<usize>,
    pub grid_points: usize,
    /// Only for the orthogonal extension: largest `|(D̂ψ)φ - λψφ|` and bracketing gap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extension: Option<ExtensionResidual>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtensionResidual {
    pub product_residual: f64,
    pub bracketing_gap: f64,
}

struct PerAlgebra {
    lambda: f64,
    analytic: f64,
    fd: f64,
}

fn single_var(x: f64, name: &str) -> Vars {
    Vars::from([(name.to_string(), x)])
}

fn eigen_on(inst: &Instance, op: &OperatorSpec, nodes: &[f64], extra: &Vars) -> Result<PerAlgebra> {
    let axis = op.axis.eval(&inst.table, &Vars::new())?;
    let var = op.variable.as_str();
    let at = |x: f64| {
        let mut v = extra.clone();
        v.insert(var.to_string(), x);
        v
    };
    let mut samples = Vec::with_capacity(nodes.len());
    for &x in nodes {
        let (psi, dpsi) = inst.eval_with_derivative(&at(x), var)?;
        let d = op.apply(&axis, x, &psi, &dpsi)?;
        samples.push((x, psi.clone(), d.dot(&psi) / psi.norm_sqr(), d));
    }
    let lambda = samples.iter().map(|s| s.2).sum::<f64>() / samples.len() as f64;
    let mut analytic: f64 = 0.0;
    let mut fd: f64 = 0.0;
    for (x, psi, _, d) in &samples {
        let target = psi.scale(lambda);
        analytic = analytic.max(d.distance(&target));
        let fwd = inst.eval(&at(x + op.h))?;
        let bwd = inst.eval(&at(x - op.h))?;
        let approx = (&fwd - &bwd).scale(1.0 / (2.0 * op.h));
        fd = fd.max(op.apply(&axis, *x, psi, &approx)?.distance(&target));
    }
    Ok(PerAlgebra { lambda, analytic, fd })
}

fn grid_nodes(p: &PolySpec, op: &OperatorSpec) -> Result<Vec<f64>> {
    let mut poles = p.expr.poles(&op.variable);
    poles.extend(op.potentials.iter().map(|&(_, a)| a));
    op.grid().nodes(&poles)
}

pub fn invariance_check(p: &PolySpec, op: &OperatorSpec) -> Result<InvarianceReport> {
    invariance_check_from(p, op, 0)
}

/// As [`invariance_check`] with `λ[reference]` as the comparison point.
pub fn invariance_check_from(p: &PolySpec, op: &OperatorSpec, reference: usize) -> Result<InvarianceReport> {
    p.validate()?;
    op.axis.validate(8)?;
    if reference >= catalog::EQUIVALENT_COUNT {
        return Err(Error::IndexOutOfRange(format!("reference algebra {reference}")));
    }
    let nodes = grid_nodes(p, op)?;
    let per = (0..catalog::EQUIVALENT_COUNT)
        .map(|n| eigen_on(&instantiate(p, n)?, op, &nodes, &Vars::new()))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(p, op, reference, per, nodes.len(), None))
}

fn assemble(
    p: &PolySpec,
    op: &OperatorSpec,
    reference: usize,
    per: Vec<PerAlgebra>,
    grid_points: usize,
    extension: Option<(Vec<bool>, ExtensionResidual)>,
) -> InvarianceReport {
    let lambdas: Vec<f64> = per.iter().map(|r| r.lambda).collect();
    let base = lambdas[reference];
    let spread = lambdas.iter().map(|l| (l - base).abs()).fold(0.0, f64::max);
    let ext_ok = extension.as_ref().map(|e| e.0.clone()).unwrap_or_else(|| vec![true; per.len()]);
    let residual_ok: Vec<bool> = per
        .iter()
        .zip(&ext_ok)
        .map(|(r, ok)| r.analytic <= INVARIANCE_TOL && r.fd <= FD_TOL && *ok)
        .collect();
    let witness = lambdas
        .iter()
        .position(|l| (l - base).abs().is_nan() || (l - base).abs() > INVARIANCE_TOL)
        .or_else(|| residual_ok.iter().position(|ok| !ok));
    InvarianceReport {
        poly: p.clone(),
        operator: op.clone(),
        reference,
        residuals_analytic: per.iter().map(|r| r.analytic).collect(),
        residuals_fd: per.iter().map(|r| r.fd).collect(),
        lambdas,
        spread,
        tolerance: INVARIANCE_TOL,
        invariant: witness.is_none(),
        witness,
        grid_points,
        extension: extension.map(|e| e.1),
    }
}

/// `D̂ₓ ψ(x) φ(y) = λ ψ(x) φ(y)` on an 11×11 grid, with `D̂ₓ` acting on the
/// `x` factor, plus the gap between `A(ψ'φ)` and `(Aψ')φ`.
pub fn orthogonal_extension_check(psi: &PolySpec, phi: &PolySpec, op: &OperatorSpec) -> Result<InvarianceReport> {
    psi.validate()?;
    phi.validate()?;
    op.axis.validate(8)?;
    if phi.expr.variables().contains(&op.variable) {
        return Err(Error::Config(format!("φ must not depend on the operator variable `{}`", op.variable)));
    }
    let ys_var = phi.variables.first().cloned().unwrap_or_else(|| "y".into());
    let nodes = grid_nodes(psi, op)?;
    let mut poles = psi.expr.poles(&op.variable);
    poles.extend(op.potentials.iter().map(|&(_, a)| a));
    let xs = FdGrid { points: EXTENSION_GRID, ..op.grid() }.nodes(&poles)?;
    let ys = FdGrid { points: EXTENSION_GRID, ..FdGrid::around(0.0) }.nodes(&phi.expr.poles(&ys_var))?;

    let mut per = Vec::new();
    let mut flags = Vec::new();
    let mut product_residual: f64 = 0.0;
    let mut bracketing_gap: f64 = 0.0;
    for n in 0..catalog::EQUIVALENT_COUNT {
        let ip = instantiate(psi, n)?;
        let iphi = instantiate(phi, n)?;
        let base = eigen_on(&ip, op, &nodes, &Vars::new())?;
        let axis = op.axis.eval(&ip.table, &Vars::new())?;
        let mut worst: f64 = 0.0;
        let mut gap: f64 = 0.0;
        for &x in &xs {
            let vx = single_var(x, &op.variable);
            let (p, dp) = ip.eval_with_derivative(&vx, &op.variable)?;
            let fwd = ip.eval(&single_var(x + op.h, &op.variable))?;
            let bwd = ip.eval(&single_var(x - op.h, &op.variable))?;
            let dp_fd = (&fwd - &bwd).scale(1.0 / (2.0 * op.h));
            let dpsi = op.apply(&axis, x, &p, &dp_fd)?;
            for &y in &ys {
                let f = iphi.eval(&single_var(y, &ys_var))?;
                let lhs = dpsi.try_mul(&f)?;
                let rhs = p.try_mul(&f)?.scale(base.lambda);
                worst = worst.max(lhs.distance(&rhs));
                let left = axis.try_mul(&dp)?.try_mul(&f)?;
                let right = axis.try_mul(&dp.try_mul(&f)?)?;
                gap = gap.max(left.distance(&right));
            }
        }
        product_residual = product_residual.max(worst);
        bracketing_gap = bracketing_gap.max(gap);
        flags.push(worst <= EXTENSION_TOL && gap <= BRACKET_TOL);
        per.push(base);
    }
    let ext = ExtensionResidual { product_residual, bracketing_gap };
    Ok(assemble(psi, op, 0, per, xs.len() * ys.len(), Some((flags, ext))))
}

/// `exp(i_k · (m x + Σ t_i ln|x - a_i|))` and its operator with axis `i_k`.
pub fn complex_confined_case(k: usize, m: f64, fields: &[(f64, f64)]) -> Result<(PolySpec, OperatorSpec)> {
    let mut factors = vec![(Expr::Basis(k), Scalar::Linear { var: "x".into(), coef: m, offset: 0.0 })];
    for &(t, a) in fields {
        factors.push((Expr::Basis(k), Scalar::Log { var: "x".into(), coef: t, pole: a }));
    }
    let p = PolySpec::product(&["x"], factors, None)?;
    let mut op = OperatorSpec::new(Expr::Basis(k));
    op.potentials = fields.to_vec();
    Ok((p, op))
}

/// Operator axis `i1 i2` against `ψ = exp(i3 d x)`: the axis flips with the
/// parity of triplet 123, so `λ = ±d`.
pub fn negative_control_axis(d: f64) -> Result<(PolySpec, OperatorSpec)> {
    let p = PolySpec::new(&["x"], Expr::exp(Expr::Basis(3), Scalar::Linear { var: "x".into(), coef: d, offset: 0.0 }))?;
    Ok((p, OperatorSpec::new(Expr::product_of(Expr::Basis(1), Expr::Basis(2)))))
}

/// `ψ = exp(i1 x) exp(i4 x)`, whose axis moves with `x`: no real eigenvalue.
pub fn negative_control_mixed() -> Result<(PolySpec, OperatorSpec)> {
    let lin = || Scalar::Linear { var: "x".into(), coef: 1.0, offset: 0.0 };
    let p = PolySpec::product(&["x"], vec![(Expr::Basis(1), lin()), (Expr::Basis(4), lin())], None)?;
    Ok((p, OperatorSpec::new(Expr::Basis(1))))
}

/// JSON accepted by `invariance`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceConfig {
    pub poly: PolySpec,
    pub operator: OperatorSpec,
    #[serde(default)]
    pub phi: Option<PolySpec>,
    #[serde(default)]
    pub reference: usize,
}

impl InvarianceConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {} column {}: {e}", e.line(), e.column())))
    }

    pub fn run(&self) -> Result<InvarianceReport> {
        match &self.phi {
            None => invariance_check_from(&self.poly, &self.operator, self.reference),
            Some(phi) => orthogonal_extension_check(&self.poly, phi, &self.operator),
        }
    }
}
