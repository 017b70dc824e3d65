//! Poisson brackets, left-nested Lie monomials and the functional `Q_N`.
//!
//! Conventions:
//!
//! * torus, `ω = dq∧dp`: `{A,H} = A_q H_p − A_p H_q`;
//! * sphere with area normalized to 1: `{A,H}(x) = 4π · x·(∇A × ∇H)` for
//!   any ambient extensions of `A`, `H`.
//!
//! With these signs `d/dt (A∘φ_H^t) = {A,H}∘φ_H^t`.
//!
//! `𝒫_N` is read as the `2^{N−1}` left-nested monomials
//! `{…{{F,G},w₁},…,w_{N−1}}` with letters `wᵢ ∈ {F,G}`, and
//! `Q_N(F,G) = Σ_{p∈𝒫_{N−1}} ‖p(F,G)‖`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expression, Polynomial};
use crate::manifold::{Mesh, MeshKind, NormKind, Point, ScalarField};

/// Deepest nesting for which sample-only brackets are computed without an
/// explicit opt-in: every nesting level differentiates numerically once more.
pub const MAX_NUMERIC_DEPTH: usize = 2;

/// Largest `N` accepted by [`enumerate_monomials`].
pub const MAX_MONOMIAL_ORDER: usize = 8;

/// Options shared by every bracket computation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BracketOptions {
    /// Permit nesting numeric brackets deeper than [`MAX_NUMERIC_DEPTH`].
    pub allow_numeric: bool,
}

/// A symbolic field in whichever representation keeps brackets compact.
#[derive(Debug, Clone)]
enum Symbolic {
    Poly(Polynomial),
    Expr(Expression),
}

impl Symbolic {
    fn of(e: &Expression) -> Self {
        match e.to_polynomial() {
            Some(p) => Symbolic::Poly(p),
            None => Symbolic::Expr(e.clone()),
        }
    }

    fn to_expression(&self, mesh: &Mesh) -> Expression {
        match self {
            Symbolic::Poly(p) => p.to_expression(mesh.coords().iter().map(|s| s.to_string()).collect()),
            Symbolic::Expr(e) => e.clone(),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Symbolic::Poly(p) => p.is_zero(),
            Symbolic::Expr(e) => e.const_value() == Some(0.0),
        }
    }
}

fn poly_bracket(kind: MeshKind, a: &Polynomial, h: &Polynomial) -> Polynomial {
    let d = |p: &Polynomial, i| p.derivative(i);
    match kind {
        MeshKind::Torus { .. } => &(&d(a, 0) * &d(h, 1)) - &(&d(a, 1) * &d(h, 0)),
        MeshKind::Sphere { .. } => {
            let mut sum = Polynomial::zero(3);
            for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
                let cross = &(&d(a, j) * &d(h, k)) - &(&d(a, k) * &d(h, j));
                sum = &sum + &(&Polynomial::var(i, 3) * &cross);
            }
            sum.scale(4.0 * PI)
        }
    }
}

fn expr_bracket(kind: MeshKind, a: &Expression, h: &Expression) -> Result<Expression> {
    let coords = kind.coords();
    let da: Vec<Expression> = coords.iter().map(|c| a.diff(c)).collect::<Result<_, _>>()?;
    let dh: Vec<Expression> = coords.iter().map(|c| h.diff(c)).collect::<Result<_, _>>()?;
    Ok(match kind {
        MeshKind::Torus { .. } => da[0].mul(&dh[1]).sub(&da[1].mul(&dh[0])),
        MeshKind::Sphere { .. } => {
            let mut sum = Expression::constant(0.0, coords);
            for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
                let cross = da[j].mul(&dh[k]).sub(&da[k].mul(&dh[j]));
                sum = sum.add(&Expression::variable(coords[i], coords)?.mul(&cross));
            }
            sum.scale(4.0 * PI)
        }
    })
}

fn symbolic_bracket(kind: MeshKind, a: &Symbolic, h: &Symbolic) -> Result<Symbolic> {
    Ok(match (a, h) {
        (Symbolic::Poly(p), Symbolic::Poly(q)) => Symbolic::Poly(poly_bracket(kind, p, q)),
        _ => {
            let ea = match a {
                Symbolic::Poly(p) => p.to_expression(kind.coords().iter().map(|s| s.to_string()).collect()),
                Symbolic::Expr(e) => e.clone(),
            };
            let eh = match h {
                Symbolic::Poly(p) => p.to_expression(kind.coords().iter().map(|s| s.to_string()).collect()),
                Symbolic::Expr(e) => e.clone(),
            };
            Symbolic::Expr(expr_bracket(kind, &ea, &eh)?)
        }
    })
}

fn sample_symbolic(mesh: &Arc<Mesh>, s: &Symbolic) -> Result<ScalarField> {
    let expr = s.to_expression(mesh);
    match s {
        Symbolic::Poly(p) => {
            let kind = mesh.kind();
            let values =
                mesh.points().par_iter().map(|pt| p.eval(&crate::manifold::coordinates_of(kind, pt))).collect();
            Ok(ScalarField::from_parts(mesh, values, Some(expr)))
        }
        Symbolic::Expr(e) => ScalarField::sample(mesh, e),
    }
}

fn numeric_bracket(a: &ScalarField, h: &ScalarField) -> ScalarField {
    let mesh = a.mesh();
    let ga = a.numeric_gradient();
    let gh = h.numeric_gradient();
    let values = match mesh.kind() {
        MeshKind::Torus { .. } => ga.iter().zip(&gh).map(|(u, v)| u.x * v.y - u.y * v.x).collect(),
        MeshKind::Sphere { .. } => {
            mesh.points().iter().zip(ga.iter().zip(&gh)).map(|(x, (u, v))| 4.0 * PI * x.dot(&u.cross(v))).collect()
        }
    };
    ScalarField::from_parts(mesh, values, None)
}

/// A field together with its symbolic form, if any; carried through nested
/// brackets so that polynomial forms are not rebuilt at every level.
#[derive(Debug, Clone)]
struct Tracked {
    field: ScalarField,
    symbolic: Option<Symbolic>,
}

impl Tracked {
    fn new(field: &ScalarField) -> Self {
        Self { field: field.clone(), symbolic: field.expr().map(Symbolic::of) }
    }

    fn bracket(&self, other: &Tracked) -> Result<Tracked> {
        let mesh = self.field.mesh();
        match (&self.symbolic, &other.symbolic) {
            (Some(a), Some(h)) => {
                if a.is_zero() || h.is_zero() {
                    let zero = Symbolic::Poly(Polynomial::zero(mesh.coords().len()));
                    let field = sample_symbolic(mesh, &zero)?;
                    return Ok(Tracked { field, symbolic: Some(zero) });
                }
                let s = symbolic_bracket(mesh.kind(), a, h)?;
                Ok(Tracked { field: sample_symbolic(mesh, &s)?, symbolic: Some(s) })
            }
            _ => Ok(Tracked { field: numeric_bracket(&self.field, &other.field), symbolic: None }),
        }
    }
}

fn check_pair(f: &ScalarField, g: &ScalarField) -> Result<()> {
    if **f.mesh() == **g.mesh() {
        Ok(())
    } else {
        Err(Error::MeshMismatch)
    }
}

fn check_numeric_depth(f: &ScalarField, g: &ScalarField, depth: usize, opts: BracketOptions) -> Result<()> {
    let symbolic = f.expr().is_some() && g.expr().is_some();
    if !symbolic && depth > MAX_NUMERIC_DEPTH && !opts.allow_numeric {
        return Err(Error::NumericDepth { depth });
    }
    Ok(())
}

/// `{f, g}`: exact when both fields carry closed forms (the result then
/// carries one too), otherwise from numeric gradients.
pub fn poisson(f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
    check_pair(f, g)?;
    Ok(Tracked::new(f).bracket(&Tracked::new(g))?.field)
}

/// A letter of a monomial word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Letter {
    F,
    G,
}

/// The left-nested monomial `{…{{F,G},w₁},…,w_k}`, stored as the tail word
/// `w₁…w_k`; it lies in `𝒫_{k+1}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LieMonomial {
    tail: Vec<Letter>,
}

impl LieMonomial {
    pub fn new(tail: Vec<Letter>) -> Self {
        Self { tail }
    }

    pub fn tail(&self) -> &[Letter] {
        &self.tail
    }

    /// Number of brackets, i.e. the `N` with `self ∈ 𝒫_N`.
    pub fn order(&self) -> usize {
        self.tail.len() + 1
    }

    /// Total number of `G` letters, counting the one in the innermost `{F,G}`.
    pub fn g_count(&self) -> usize {
        1 + self.tail.iter().filter(|&&l| l == Letter::G).count()
    }
}

impl fmt::Display for LieMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for _ in 0..self.tail.len() {
            f.write_str("{")?;
        }
        f.write_str("{F,G}")?;
        for l in &self.tail {
            write!(f, ",{l:?}}}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for LieMonomial {
    type Err = Error;
    /// Parses the display form, e.g. `{{F,G},G}`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("malformed monomial `{s}`"));
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let opens = text.bytes().take_while(|&b| b == b'{').count();
        let mut rest = text[opens..].strip_prefix("F,G}").ok_or_else(bad)?;
        let mut tail = Vec::new();
        for _ in 1..opens {
            let (letter, r) = if let Some(r) = rest.strip_prefix(",F}") {
                (Letter::F, r)
            } else if let Some(r) = rest.strip_prefix(",G}") {
                (Letter::G, r)
            } else {
                return Err(bad());
            };
            tail.push(letter);
            rest = r;
        }
        if opens == 0 || !rest.is_empty() {
            return Err(bad());
        }
        Ok(Self { tail })
    }
}

/// All `2^{N−1}` monomials of `𝒫_N`, in lexicographic order of their words.
pub fn enumerate_monomials(n: usize) -> Result<Vec<LieMonomial>> {
    if !(1..=MAX_MONOMIAL_ORDER).contains(&n) {
        return Err(Error::OutOfRange { what: "N", value: n as i64, min: 1, max: MAX_MONOMIAL_ORDER as i64 });
    }
    Ok((0..1usize << (n - 1))
        .map(|bits| {
            let tail = (0..n - 1).map(|i| if bits >> (n - 2 - i) & 1 == 1 { Letter::G } else { Letter::F }).collect();
            LieMonomial { tail }
        })
        .collect())
}

/// `m(F, G)`, folding brackets left to right over the word.
pub fn eval_monomial(m: &LieMonomial, f: &ScalarField, g: &ScalarField, opts: BracketOptions) -> Result<ScalarField> {
    check_pair(f, g)?;
    check_numeric_depth(f, g, m.order(), opts)?;
    let tf = Tracked::new(f);
    let tg = Tracked::new(g);
    let mut acc = tf.bracket(&tg)?;
    for l in &m.tail {
        acc = acc.bracket(match l {
            Letter::F => &tf,
            Letter::G => &tg,
        })?;
    }
    Ok(acc.field)
}

/// One evaluated monomial of `𝒫_N`.
#[derive(Debug, Clone)]
pub struct MonomialNorm {
    pub monomial: LieMonomial,
    pub g_count: usize,
    pub norm: f64,
}

/// Norms of every monomial of `𝒫_n`, lexicographic order. Shared prefixes are
/// evaluated once, walking the prefix trie; sibling subtrees run in parallel.
pub fn monomial_norms(
    n: usize,
    f: &ScalarField,
    g: &ScalarField,
    norm: NormKind,
    opts: BracketOptions,
) -> Result<Vec<MonomialNorm>> {
    enumerate_monomials(n)?;
    check_pair(f, g)?;
    check_numeric_depth(f, g, n, opts)?;
    let tf = Tracked::new(f);
    let tg = Tracked::new(g);
    let root = tf.bracket(&tg)?;
    let mut out = Vec::with_capacity(1 << (n - 1));
    walk(&root, &mut Vec::new(), n - 1, &tf, &tg, norm, &mut out)?;
    Ok(out)
}

fn walk(
    node: &Tracked,
    prefix: &mut Vec<Letter>,
    remaining: usize,
    tf: &Tracked,
    tg: &Tracked,
    norm: NormKind,
    out: &mut Vec<MonomialNorm>,
) -> Result<()> {
    if remaining == 0 {
        let monomial = LieMonomial::new(prefix.clone());
        out.push(MonomialNorm { g_count: monomial.g_count(), monomial, norm: node.field.norm(norm) });
        return Ok(());
    }
    let (left, right) = rayon::join(|| node.bracket(tf), || node.bracket(tg));
    let (left, right) = (left?, right?);
    let mut right_prefix = prefix.clone();
    prefix.push(Letter::F);
    right_prefix.push(Letter::G);
    let mut right_out = Vec::new();
    let (a, b) = rayon::join(
        || walk(&left, prefix, remaining - 1, tf, tg, norm, out),
        || walk(&right, &mut right_prefix, remaining - 1, tf, tg, norm, &mut right_out),
    );
    a?;
    b?;
    prefix.pop();
    out.extend(right_out);
    Ok(())
}

/// `Q_N(F,G) = Σ_{p∈𝒫_{N−1}} ‖p(F,G)‖`, summed in lexicographic order.
pub fn q_norm(n: usize, f: &ScalarField, g: &ScalarField, norm: NormKind, opts: BracketOptions) -> Result<f64> {
    if n < 2 {
        return Err(Error::OutOfRange { what: "N", value: n as i64, min: 2, max: MAX_MONOMIAL_ORDER as i64 + 1 });
    }
    Ok(monomial_norms(n - 1, f, g, norm, opts)?.iter().map(|m| m.norm).sum())
}

/// `Q_N(F, cG) = Σ_p c^{k_G(p)} ‖p(F,G)‖` from precomputed monomial norms.
pub fn q_norm_scaled(norms: &[MonomialNorm], c: f64) -> f64 {
    norms.iter().map(|m| c.powi(m.g_count as i32) * m.norm).sum()
}

/// `‖{F,G}‖ / (min(‖F‖,‖G‖)^{(N−2)/(N−1)} · Q_N^{1/(N−1)})`, uniform norms.
pub fn khl_ratio(n: usize, f: &ScalarField, g: &ScalarField, opts: BracketOptions) -> Result<f64> {
    let q = q_norm(n, f, g, NormKind::Uniform, opts)?;
    let bracket = poisson(f, g)?.uniform_norm();
    let m = f.uniform_norm().min(g.uniform_norm());
    let k = (n - 1) as f64;
    let denominator = m.powf((n as f64 - 2.0) / k) * q.powf(1.0 / k);
    if denominator == 0.0 || !denominator.is_finite() {
        return Err(Error::DegenerateInput(format!("KHL denominator vanishes (Q_{n} = {q}, min norm = {m})")));
    }
    Ok(bracket / denominator)
}

/// Derivative of `A` along the flow of `H` at time 0, by finite differences
/// of `A∘φ` against a supplied flow map; used to pin the sign convention.
pub fn flow_derivative(a: &ScalarField, phi: impl Fn(&Point) -> Point, t: f64) -> Result<Vec<f64>> {
    let mesh = a.mesh();
    mesh.points().iter().enumerate().map(|(i, p)| Ok((a.value_at(&phi(p))? - a.values()[i]) / t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Mesh;

    fn sphere(level: u32) -> Arc<Mesh> {
        Arc::new(Mesh::sphere(level).unwrap())
    }

    fn torus(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::torus(n, n).unwrap())
    }

    fn close(a: &ScalarField, b: &ScalarField, tol: f64) -> bool {
        a.values().iter().zip(b.values()).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
    }

    #[test]
    fn torus_pair_bracket() {
        let m = torus(64);
        let f = ScalarField::parse(&m, "sin(2*pi*q)").unwrap();
        let g = ScalarField::parse(&m, "sin(2*pi*p)").unwrap();
        let b = poisson(&f, &g).unwrap();
        let want = ScalarField::parse(&m, "4*pi^2*cos(2*pi*q)*cos(2*pi*p)").unwrap();
        assert!(close(&b, &want, 1e-12));
        assert!((b.uniform_norm() - 4.0 * PI * PI).abs() < 1e-9);
        assert!(b.expr().is_some());
    }

    #[test]
    fn self_bracket_vanishes() {
        let m = sphere(3);
        let f = ScalarField::parse(&m, "x*y + sin(z)").unwrap();
        assert!(poisson(&f, &f).unwrap().values().iter().all(|&v| v == 0.0));
        let n = f.without_expr();
        assert!(poisson(&n, &n).unwrap().uniform_norm() <= 1e-10);
    }

    #[test]
    fn sphere_coordinate_brackets() {
        let m = sphere(3);
        let x = ScalarField::parse(&m, "x").unwrap();
        let y = ScalarField::parse(&m, "y").unwrap();
        let z4 = ScalarField::parse(&m, "4*pi*z").unwrap();
        assert!(close(&poisson(&x, &y).unwrap(), &z4, 1e-12));
        // the transcendental path agrees with the polynomial path
        let ex = ScalarField::parse(&m, "x + 0*exp(y)").unwrap();
        assert!(close(&poisson(&ex, &y).unwrap(), &z4, 1e-12));
    }

    #[test]
    fn sign_matches_flow_of_height() {
        // the flow of H = z rotates counterclockwise about the z axis at speed 4π
        let m = sphere(4);
        let a = ScalarField::parse(&m, "x").unwrap();
        let h = ScalarField::parse(&m, "z").unwrap();
        let exact = poisson(&a, &h).unwrap();
        let mut errs = Vec::new();
        let ts = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
        for &t in &ts {
            let th = 4.0 * PI * t;
            let rot = |p: &Point| Point::new(p.x * th.cos() - p.y * th.sin(), p.x * th.sin() + p.y * th.cos(), p.z);
            let d = flow_derivative(&a, rot, t).unwrap();
            errs.push(d.iter().zip(exact.values()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max));
        }
        let fit = crate::fit::loglog_fit(&ts, &errs, &[0.0; 4]).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.1, "{fit:?}");
    }

    #[test]
    fn jacobi_and_leibniz() {
        let m = sphere(3);
        let f = ScalarField::parse(&m, "x*y - z^2").unwrap();
        let g = ScalarField::parse(&m, "exp(0.3*x) + y").unwrap();
        let h = ScalarField::parse(&m, "sin(z) * x").unwrap();
        let b = |a: &ScalarField, c: &ScalarField| poisson(a, c).unwrap();
        let jac = b(&b(&f, &g), &h).add(&b(&b(&g, &h), &f)).unwrap().add(&b(&b(&h, &f), &g)).unwrap();
        assert!(jac.uniform_norm() < 1e-8, "{}", jac.uniform_norm());
        let lhs = b(&f.mul(&g).unwrap(), &h);
        let rhs = f.mul(&b(&g, &h)).unwrap().add(&g.mul(&b(&f, &h)).unwrap()).unwrap();
        assert!(lhs.sub(&rhs).unwrap().uniform_norm() < 1e-8);
        let t = torus(16);
        let f = ScalarField::parse(&t, "sin(2*pi*q)*cos(2*pi*p)").unwrap();
        let g = ScalarField::parse(&t, "cos(4*pi*q) + p^2").unwrap();
        let h = ScalarField::parse(&t, "q*p").unwrap();
        let jac = b(&b(&f, &g), &h).add(&b(&b(&g, &h), &f)).unwrap().add(&b(&b(&h, &f), &g)).unwrap();
        assert!(jac.uniform_norm() < 1e-8);
    }

    #[test]
    fn antisymmetry() {
        let m = sphere(3);
        let f = ScalarField::parse(&m, "x^3 - y*z").unwrap();
        let g = ScalarField::parse(&m, "cos(x) + z").unwrap();
        let s = poisson(&f, &g).unwrap().add(&poisson(&g, &f).unwrap()).unwrap();
        assert!(s.uniform_norm() < 1e-12);
        let s = poisson(&f.without_expr(), &g.without_expr())
            .unwrap()
            .add(&poisson(&g.without_expr(), &f.without_expr()).unwrap())
            .unwrap();
        assert!(s.uniform_norm() < 1e-10);
    }

    #[test]
    fn monomial_counts_and_display() {
        for n in 1..=8 {
            let ms = enumerate_monomials(n).unwrap();
            assert_eq!(ms.len(), 1 << (n - 1));
            let mut sorted = ms.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted, ms);
        }
        let shown: Vec<String> = enumerate_monomials(2).unwrap().iter().map(|m| m.to_string()).collect();
        assert_eq!(shown, ["{{F,G},F}", "{{F,G},G}"]);
        assert_eq!(enumerate_monomials(1).unwrap()[0].to_string(), "{F,G}");
        assert!(enumerate_monomials(0).is_err());
        assert!(enumerate_monomials(9).is_err());
        for m in enumerate_monomials(4).unwrap() {
            assert_eq!(m.to_string().parse::<LieMonomial>().unwrap(), m);
        }
    }

    #[test]
    fn monomial_evaluation() {
        let m = torus(32);
        let f = ScalarField::parse(&m, "sin(2*pi*q)").unwrap();
        let g = ScalarField::parse(&m, "sin(2*pi*p)").unwrap();
        let fg = LieMonomial::new(vec![]);
        assert!(close(&eval_monomial(&fg, &f, &g, BracketOptions::default()).unwrap(), &poisson(&f, &g).unwrap(), 0.0));
        // {{F,G},F} = 16π⁴ cos²(2πq) sin(2πp)
        let fgf = LieMonomial::new(vec![Letter::F]);
        let want = ScalarField::parse(&m, "16*pi^4*cos(2*pi*q)^2*sin(2*pi*p)").unwrap();
        assert!(close(&eval_monomial(&fgf, &f, &g, BracketOptions::default()).unwrap(), &want, 1e-12));
        let c = ScalarField::constant(&m, 3.0);
        for mono in enumerate_monomials(3).unwrap() {
            assert_eq!(eval_monomial(&mono, &f, &c, BracketOptions::default()).unwrap().uniform_norm(), 0.0);
        }
    }

    #[test]
    fn q_norm_values_and_homogeneity() {
        let m = torus(64);
        let f = ScalarField::parse(&m, "sin(2*pi*q)").unwrap();
        let g = ScalarField::parse(&m, "sin(2*pi*p)").unwrap();
        let o = BracketOptions::default();
        assert!((q_norm(2, &f, &g, NormKind::Uniform, o).unwrap() - 4.0 * PI * PI).abs() < 1e-6);
        let zero = ScalarField::constant(&m, 0.0);
        for n in 2..=5 {
            assert_eq!(q_norm(n, &f, &zero, NormKind::Uniform, o).unwrap(), 0.0);
        }
        let s = sphere(3);
        let f = ScalarField::parse(&s, "1 - 2*x^2").unwrap();
        let g = ScalarField::parse(&s, "1 - 2*y^2 + 0.1*x*z").unwrap();
        for n in 2..=4 {
            let q = q_norm(n, &f, &g, NormKind::Uniform, o).unwrap();
            let q2 = q_norm(n, &f.scale(2.0), &g.scale(2.0), NormKind::Uniform, o).unwrap();
            assert!((q2 / q / 2f64.powi(n as i32) - 1.0).abs() < 1e-9);
            let norms = monomial_norms(n - 1, &f, &g, NormKind::Uniform, o).unwrap();
            let qc = q_norm(n, &f, &g.scale(0.5), NormKind::Uniform, o).unwrap();
            assert!((q_norm_scaled(&norms, 0.5) / qc - 1.0).abs() < 1e-12);
            let l1 = q_norm(n, &f, &g, NormKind::L1, o).unwrap();
            assert!(l1 <= q);
        }
    }

    #[test]
    fn numeric_path_is_refused_when_deep() {
        let m = sphere(3);
        let f = ScalarField::parse(&m, "x").unwrap().without_expr();
        let g = ScalarField::parse(&m, "y").unwrap();
        let o = BracketOptions::default();
        assert!(q_norm(3, &f, &g, NormKind::Uniform, o).is_ok());
        assert!(matches!(q_norm(4, &f, &g, NormKind::Uniform, o), Err(Error::NumericDepth { .. })));
        assert!(q_norm(4, &f, &g, NormKind::Uniform, BracketOptions { allow_numeric: true }).is_ok());
    }

    #[test]
    fn khl() {
        let m = torus(32);
        let f = ScalarField::parse(&m, "sin(2*pi*q)").unwrap();
        let g = ScalarField::parse(&m, "sin(2*pi*p) + 0.3*cos(2*pi*q)").unwrap();
        let o = BracketOptions::default();
        assert!((khl_ratio(2, &f, &g, o).unwrap() - 1.0).abs() < 1e-12);
        let r = khl_ratio(3, &f, &g, o).unwrap();
        assert!(r.is_finite() && r > 0.0);
        let r4 = khl_ratio(3, &f.scale(4.0), &g.scale(4.0), o).unwrap();
        assert!((r4 / r - 1.0).abs() < 1e-9);
        let c = ScalarField::parse(&m, "cos(2*pi*q)").unwrap();
        assert!(matches!(khl_ratio(3, &f, &c, o), Err(Error::DegenerateInput(_))));
    }
}
