//! Splitting schemes `φ_{α₁F}^t φ_{β₁G}^t ⋯ φ_{α_mF}^t φ_{β_mG}^t`.
//!
//! Products are written left to right and act right to left: the rightmost
//! factor `φ_{β_mG}^t` is applied first. A scheme of order `N` agrees with
//! `φ_{F+G}^t` up to `O(t^{N+1})` per step.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bracket::Letter;
use crate::error::{Error, Result};
use crate::fit::{estimate_order, OrderEstimate, SweepPoint, NOISE_FLOOR, REFERENCE_MARGIN};
use crate::flow::{compose_scheme, distance, exact_flow, reference_endpoints, ReferenceOptions, TimeField};
use crate::manifold::{Point, ScalarField};

/// Largest number of mesh vertices used as probes by [`validate_order`].
pub const MAX_PROBES: usize = 256;

/// Highest order built by [`yoshida`].
pub const MAX_YOSHIDA_ORDER: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingScheme {
    pub label: String,
    #[serde(rename = "order")]
    pub nominal_order: u32,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl SplittingScheme {
    /// Builds a scheme from explicit coefficients, checking the sum rules.
    pub fn new(label: impl Into<String>, nominal_order: u32, alphas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() || alphas.len() != betas.len() {
            return Err(Error::Config(format!(
                "coefficient lists must be non-empty and equally long ({} vs {})",
                alphas.len(),
                betas.len()
            )));
        }
        let s = Self { label: label.into(), nominal_order, alphas, betas };
        let (a, b) = s.sums();
        if (a - 1.0).abs() > 1e-12 || (b - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("coefficient sums must be 1, got {a} and {b}")));
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn sums(&self) -> (f64, f64) {
        (self.alphas.iter().sum(), self.betas.iter().sum())
    }

    /// The factors of the product in written order, `(F, α₁), (G, β₁), …`,
    /// with zero coefficients dropped.
    pub fn steps(&self) -> Vec<(Letter, f64)> {
        self.alphas
            .iter()
            .zip(&self.betas)
            .flat_map(|(&a, &b)| [(Letter::F, a), (Letter::G, b)])
            .filter(|&(_, c)| c != 0.0)
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schemes serialize")
    }
}

impl fmt::Display for SplittingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} (order {}, {} stages)", self.label, self.nominal_order, self.len())?;
        for (i, (a, b)) in self.alphas.iter().zip(&self.betas).enumerate() {
            writeln!(f, "  alpha[{}] = {a:+.17e}  beta[{}] = {b:+.17e}", i + 1, i + 1)?;
        }
        let (a, b) = self.sums();
        write!(f, "  sums: {a:.17} {b:.17}")
    }
}

/// `φ_F^t φ_G^t`, order 1.
pub fn lie_trotter() -> SplittingScheme {
    SplittingScheme { label: "lie_trotter".into(), nominal_order: 1, alphas: vec![1.0], betas: vec![1.0] }
}

/// `φ_{F/2}^t φ_G^t φ_{F/2}^t`, order 2.
pub fn strang() -> SplittingScheme {
    SplittingScheme { label: "strang".into(), nominal_order: 2, alphas: vec![0.5, 0.5], betas: vec![1.0, 0.0] }
}

/// Triple-jump composition `S_{2k+2}(t) = S_{2k}(w₁t) S_{2k}(w₀t) S_{2k}(w₁t)`
/// with `w₁ = 1/(2 − 2^{1/(2k+1)})`, `w₀ = 1 − 2w₁`, starting from Strang;
/// adjacent factors of the same letter are merged.
pub fn yoshida(order: u32) -> Result<SplittingScheme> {
    if order % 2 == 1 {
        return Err(Error::OddOrder(order));
    }
    if !(2..=MAX_YOSHIDA_ORDER).contains(&order) {
        return Err(Error::OutOfRange { what: "order", value: order as i64, min: 2, max: MAX_YOSHIDA_ORDER as i64 });
    }
    let mut steps = vec![(Letter::F, 0.5), (Letter::G, 1.0), (Letter::F, 0.5)];
    let mut k = 1;
    while 2 * k < order {
        let (w1, w0) = triple_jump_weights(k);
        let scaled = |w: f64| steps.iter().map(move |&(l, c)| (l, c * w));
        steps = merge(scaled(w1).chain(scaled(w0)).chain(scaled(w1)));
        k += 1;
    }
    let (alphas, betas) = alternate(&steps);
    Ok(SplittingScheme { label: format!("yoshida{order}"), nominal_order: order, alphas, betas })
}

/// `(w₁, w₀)` lifting order `2k` to `2k + 2`.
pub fn triple_jump_weights(k: u32) -> (f64, f64) {
    let w1 = 1.0 / (2.0 - 2f64.powf(1.0 / (2 * k + 1) as f64));
    (w1, 1.0 - 2.0 * w1)
}

/// Scheme by name: `lie_trotter`, `strang`, or `yoshidaN`/`yoshida(N)`.
pub fn by_name(name: &str) -> Result<SplittingScheme> {
    let key: String = name.chars().filter(|c| !"()_- ".contains(*c)).collect::<String>().to_lowercase();
    match key.as_str() {
        "lietrotter" => Ok(lie_trotter()),
        "strang" => Ok(strang()),
        _ => match key.strip_prefix("yoshida").and_then(|n| n.parse::<u32>().ok()) {
            Some(order) => yoshida(order),
            None => Err(Error::Config(format!("unknown scheme `{name}`"))),
        },
    }
}

/// Scheme of a given order: 1 is Lie–Trotter, 2 is Strang, even orders above
/// are Yoshida compositions.
pub fn by_order(order: u32) -> Result<SplittingScheme> {
    match order {
        1 => Ok(lie_trotter()),
        2 => Ok(strang()),
        _ => yoshida(order),
    }
}

/// Measured convergence of `Ψ^t` towards `φ_{F+G}^t`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderReport {
    pub scheme: String,
    /// Slope a scheme of the nominal order should show: `order + 1`.
    pub expected_slope: f64,
    pub points: Vec<SweepPoint>,
    pub estimate: OrderEstimate,
}

/// Evenly strided subset of at most [`MAX_PROBES`] mesh vertices.
pub fn probe_points(field: &ScalarField) -> Vec<Point> {
    let points = field.mesh().points();
    let stride = points.len().div_ceil(MAX_PROBES).max(1);
    points.iter().step_by(stride).copied().collect()
}

/// Measures `max_x ‖Ψ^t(x) − φ_{F+G}^t(x)‖` over probe vertices for every
/// `t` in `ts` and fits its order. The exact flow of `F + G` is used when it
/// is known in closed form, a reference integration otherwise.
pub fn validate_order(
    scheme: &SplittingScheme,
    f: &ScalarField,
    g: &ScalarField,
    ts: &[f64],
    opts: ReferenceOptions,
) -> Result<OrderReport> {
    let sum = f.add(g)?;
    let kind = f.mesh().kind();
    let probes = probe_points(f);
    let reference = TimeField::autonomous(&sum)?;
    let mut points = Vec::with_capacity(ts.len());
    for &t in ts {
        let psi = compose_scheme(scheme, f, g, t)?;
        let (ends, error_estimate) = match exact_flow(&sum, t, 1.0) {
            Ok(phi) => (probes.iter().map(|p| phi.apply(p)).collect::<Result<Vec<_>>>()?, 0.0),
            Err(Error::NotRecognized(_)) => {
                let (ends, gap, _) = reference_endpoints(&reference, t, &probes, opts)?;
                (ends, gap)
            }
            Err(e) => return Err(e),
        };
        let mut value: f64 = 0.0;
        for (p, e) in probes.iter().zip(&ends) {
            value = value.max(distance(kind, &psi.apply(p)?, e));
        }
        points.push(SweepPoint { t, value, error_estimate });
    }
    let usable =
        points.iter().filter(|p| p.value >= NOISE_FLOOR && p.value >= REFERENCE_MARGIN * p.error_estimate).count();
    if usable < 3 {
        if let Some(p) = points.iter().find(|p| p.value >= NOISE_FLOOR && p.value < REFERENCE_MARGIN * p.error_estimate)
        {
            return Err(Error::ReferenceToleranceExceeded { t: p.t, measured: p.value, reference: p.error_estimate });
        }
    }
    Ok(OrderReport {
        scheme: scheme.label.clone(),
        expected_slope: scheme.nominal_order as f64 + 1.0,
        estimate: estimate_order(&points)?,
        points,
    })
}

fn merge(steps: impl Iterator<Item = (Letter, f64)>) -> Vec<(Letter, f64)> {
    let mut out: Vec<(Letter, f64)> = Vec::new();
    for (l, c) in steps {
        match out.last_mut() {
            Some((last, acc)) if *last == l => *acc += c,
            _ => out.push((l, c)),
        }
    }
    out
}

/// Splits an alternating step list starting with `F` into `α`, `β` lists,
/// padding the last `β` with 0 when the list ends on `F`.
fn alternate(steps: &[(Letter, f64)]) -> (Vec<f64>, Vec<f64>) {
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    for &(l, c) in steps {
        match l {
            Letter::F => alphas.push(c),
            Letter::G => betas.push(c),
        }
    }
    if betas.len() < alphas.len() {
        betas.push(0.0);
    }
    (alphas, betas)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_schemes() {
        assert_eq!(strang().sums(), (1.0, 1.0));
        assert_eq!(lie_trotter().sums(), (1.0, 1.0));
        assert_eq!(yoshida(2).unwrap().alphas, strang().alphas);
        assert_eq!(yoshida(2).unwrap().betas, strang().betas);
    }

    #[test]
    fn fourth_order_weights() {
        let (w1, w0) = triple_jump_weights(1);
        assert!((w1 - 1.3512071919596578).abs() < 1e-15);
        assert!((w0 + 1.7024143839193155).abs() < 1e-15);
        let s = yoshida(4).unwrap();
        assert_eq!(s.len(), 4);
        let want_a = [w1 / 2.0, (w1 + w0) / 2.0, (w0 + w1) / 2.0, w1 / 2.0];
        let want_b = [w1, w0, w1, 0.0];
        for i in 0..4 {
            assert!((s.alphas[i] - want_a[i]).abs() < 1e-15);
            assert!((s.betas[i] - want_b[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn sums_and_palindromes() {
        for order in [2, 4, 6, 8] {
            let s = yoshida(order).unwrap();
            let (a, b) = s.sums();
            assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12, "{order}: {a} {b}");
            let steps = s.steps();
            let reversed: Vec<_> = steps.iter().rev().copied().collect();
            for (x, y) in steps.iter().zip(&reversed) {
                assert_eq!(x.0, y.0);
                assert!((x.1 - y.1).abs() < 1e-14);
            }
        }
        // 3^{k} Strang stages merge into 3^{k} + 1 F-factors
        assert_eq!(yoshida(6).unwrap().len(), 10);
        assert_eq!(yoshida(8).unwrap().len(), 28);
    }

    #[test]
    fn order_errors() {
        assert_eq!(yoshida(3), Err(Error::OddOrder(3)));
        assert!(matches!(yoshida(10), Err(Error::OutOfRange { .. })));
        assert!(matches!(yoshida(0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn json_dump_and_lookup() {
        let json = yoshida(4).unwrap().to_json();
        let back: SplittingScheme = serde_json::from_str(&json).unwrap();
        assert_eq!(back, yoshida(4).unwrap());
        assert!(json.contains("\"order\": 4"));
        assert_eq!(by_name("yoshida(6)").unwrap(), yoshida(6).unwrap());
        assert_eq!(by_name("lie_trotter").unwrap(), lie_trotter());
        assert!(by_name("euler").is_err());
        assert_eq!(by_order(1).unwrap(), lie_trotter());
        assert!(SplittingScheme::new("bad", 1, vec![0.5], vec![1.0]).is_err());
    }
}
