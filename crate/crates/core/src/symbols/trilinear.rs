use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::expr::Expression;
use crate::error::{Error, Result};
use crate::spectral::Grid;

type ScalarFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;
type TripleFn = Arc<dyn Fn(f64, f64, f64) -> Complex64 + Send + Sync>;

/// One-variable factor of a separable symbol.
#[derive(Clone)]
pub struct Factor {
    label: String,
    f: ScalarFn,
}

impl Factor {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn real(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(label, move |x| Complex64::new(f(x), 0.0))
    }

    pub fn one() -> Self {
        Self::real("1", |_| 1.0)
    }

    pub fn expression(source: &str) -> Result<Self> {
        let e = Expression::parse(source, &["x"])?;
        let label = e.source().to_string();
        Ok(Self::real(label, move |x| e.eval(&[x])))
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        (self.f)(x)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Factor({})", self.label)
    }
}

/// `coefficient * f1(xi1) * f2(xi2) * f3(xi3)`
#[derive(Debug, Clone)]
pub struct RankOneTerm {
    pub coefficient: Complex64,
    pub factors: [Factor; 3],
}

impl RankOneTerm {
    pub fn eval(&self, x1: f64, x2: f64, x3: f64) -> Complex64 {
        self.coefficient
            * self.factors[0].eval(x1)
            * self.factors[1].eval(x2)
            * self.factors[2].eval(x3)
    }
}

/// Declared rank structure of a symbol.
#[derive(Clone)]
pub enum Structure {
    Constant(Complex64),
    Separable(Vec<RankOneTerm>),
    BlackBox(TripleFn),
}

impl fmt::Debug for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Structure::Constant(mu) => write!(f, "Constant({mu})"),
            Structure::Separable(terms) => f.debug_tuple("Separable").field(terms).finish(),
            Structure::BlackBox(_) => write!(f, "BlackBox"),
        }
    }
}

/// Symbol `c(xi1, xi2, xi3)` of the trilinear form `C(u, conj(u), u)`.
#[derive(Debug, Clone)]
pub struct TrilinearSymbol {
    label: String,
    structure: Structure,
}

impl TrilinearSymbol {
    pub fn constant(mu: Complex64) -> Self {
        Self {
            label: if mu.im == 0.0 {
                format!("const:{}", mu.re)
            } else {
                format!("const:{},{}", mu.re, mu.im)
            },
            structure: Structure::Constant(mu),
        }
    }

    pub fn real_constant(mu: f64) -> Self {
        Self::constant(Complex64::new(mu, 0.0))
    }

    pub fn separable(label: impl Into<String>, terms: Vec<RankOneTerm>) -> Self {
        Self {
            label: label.into(),
            structure: Structure::Separable(terms),
        }
    }

    pub fn black_box(
        label: impl Into<String>,
        f: impl Fn(f64, f64, f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            structure: Structure::BlackBox(Arc::new(f)),
        }
    }

    /// Parse a symbol specification:
    ///
    /// * `const:<re>[,<im>]`
    /// * `separable:<coef>|<f1>|<f2>|<f3>[;<coef>|<f1>|<f2>|<f3>...]` with
    ///   `coef` either `re` or `re,im` and each `fi` an expression in `x`;
    /// * `expr:<re>[;<im>]` with expressions in `x1, x2, x3`.
    pub fn parse(spec: &str) -> Result<Self> {
        let err = |reason: &str| Error::SymbolSpec {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let (kind, body) = spec
            .split_once(':')
            .ok_or_else(|| err("expected `<kind>:<body>`"))?;
        match kind.trim() {
            "const" => Ok(Self {
                label: spec.trim().to_string(),
                structure: Structure::Constant(parse_complex(body).ok_or_else(|| err("bad constant"))?),
            }),
            "separable" => {
                let mut terms = Vec::new();
                for term in body.split(';') {
                    let parts: Vec<&str> = term.split('|').collect();
                    if parts.len() != 4 {
                        return Err(err("each separable term needs `coef|f1|f2|f3`"));
                    }
                    let coefficient = parse_complex(parts[0]).ok_or_else(|| err("bad coefficient"))?;
                    terms.push(RankOneTerm {
                        coefficient,
                        factors: [
                            Factor::expression(parts[1])?,
                            Factor::expression(parts[2])?,
                            Factor::expression(parts[3])?,
                        ],
                    });
                }
                Ok(Self::separable(spec.trim(), terms))
            }
            "expr" => {
                const VARS: &[&str] = &["x1", "x2", "x3"];
                let (re, im) = match body.split_once(';') {
                    Some((re, im)) => (re, Some(im)),
                    None => (body, None),
                };
                let re = Expression::parse(re, VARS)?;
                let im = im.map(|s| Expression::parse(s, VARS)).transpose()?;
                Ok(Self::black_box(spec.trim(), move |x1, x2, x3| {
                    let v = [x1, x2, x3];
                    Complex64::new(re.eval(&v), im.as_ref().map_or(0.0, |e| e.eval(&v)))
                }))
            }
            _ => Err(err("unknown kind (expected const, separable or expr)")),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn as_constant(&self) -> Option<Complex64> {
        match self.structure {
            Structure::Constant(mu) => Some(mu),
            _ => None,
        }
    }

    pub fn structure_name(&self) -> &'static str {
        match self.structure {
            Structure::Constant(_) => "constant",
            Structure::Separable(_) => "separable",
            Structure::BlackBox(_) => "black-box",
        }
    }

    pub fn eval(&self, x1: f64, x2: f64, x3: f64) -> Complex64 {
        match &self.structure {
            Structure::Constant(mu) => *mu,
            Structure::Separable(terms) => terms.iter().map(|t| t.eval(x1, x2, x3)).sum(),
            Structure::BlackBox(f) => f(x1, x2, x3),
        }
    }

    /// `sup |c|` over a coarse sample of the grid's frequency cube.
    pub fn sup_on_grid(&self, grid: &Grid) -> f64 {
        if let Some(mu) = self.as_constant() {
            return mu.norm();
        }
        let freqs = grid.frequencies();
        let stride = (freqs.len() / 24).max(1);
        let sample: Vec<f64> = freqs.iter().step_by(stride).copied().collect();
        let mut sup: f64 = 0.0;
        for &a in &sample {
            for &b in &sample {
                for &c in &sample {
                    sup = sup.max(self.eval(a, b, c).norm());
                }
            }
        }
        sup
    }
}

fn parse_complex(s: &str) -> Option<Complex64> {
    let mut it = s.split(',').map(|p| p.trim().parse::<f64>());
    let re = it.next()?.ok()?;
    let im = match it.next() {
        Some(v) => v.ok()?,
        None => 0.0,
    };
    if it.next().is_some() || !re.is_finite() || !im.is_finite() {
        return None;
    }
    Some(Complex64::new(re, im))
}

/// Test-point lattice for the hypothesis checks: `points` equally spaced
/// frequencies on `[-range, range]`, difference step `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleSpec {
    pub range: f64,
    pub points: usize,
    pub h: f64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            range: 16.0,
            points: 33,
            h: 1e-3,
        }
    }
}

impl SampleSpec {
    fn lattice(&self) -> Vec<f64> {
        if self.points <= 1 {
            return vec![0.0];
        }
        let step = 2.0 * self.range / (self.points - 1) as f64;
        (0..self.points).map(|i| -self.range + i as f64 * step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Focusing,
    Defocusing,
    Indefinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisRecord {
    /// `sup |c|` on the sample (H1, boundedness).
    pub sup_abs: f64,
    /// Largest first-difference quotient in any slot (H1, regularity).
    pub difference_bound: f64,
    /// `sup |Im c(xi, xi, eta)|` (H2).
    pub h2_violation: f64,
    /// `sup |c(xi1, xi2, xi3) - c(xi3, xi2, xi1)|`.
    pub symmetry_defect: f64,
    pub diagonal_min: f64,
    pub diagonal_max: f64,
    /// `sup |Im c(xi, xi, xi)|`; the diagonal sign test uses the real part.
    pub diagonal_imag: f64,
    pub classification: Classification,
}

pub fn check_hypotheses(c: &TrilinearSymbol, sample: &SampleSpec) -> Result<HypothesisRecord> {
    let pts = sample.lattice();
    let h = sample.h;
    let bad = |what: &str, x: [f64; 3]| Error::SymbolEval(format!("{what} at {x:?} for `{}`", c.label()));
    let mut rec = HypothesisRecord {
        sup_abs: 0.0,
        difference_bound: 0.0,
        h2_violation: 0.0,
        symmetry_defect: 0.0,
        diagonal_min: f64::INFINITY,
        diagonal_max: f64::NEG_INFINITY,
        diagonal_imag: 0.0,
        classification: Classification::Indefinite,
    };
    for &a in &pts {
        for &b in &pts {
            for &d in &pts {
                let v = c.eval(a, b, d);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(bad("non-finite value", [a, b, d]));
                }
                rec.sup_abs = rec.sup_abs.max(v.norm());
                rec.symmetry_defect = rec.symmetry_defect.max((v - c.eval(d, b, a)).norm());
                let dq = [
                    c.eval(a + h, b, d),
                    c.eval(a, b + h, d),
                    c.eval(a, b, d + h),
                ]
                .iter()
                .map(|w| (w - v).norm() / h)
                .fold(0.0, f64::max);
                rec.difference_bound = rec.difference_bound.max(dq);
            }
            rec.h2_violation = rec.h2_violation.max(c.eval(a, a, b).im.abs());
        }
        let diag = c.eval(a, a, a);
        rec.diagonal_min = rec.diagonal_min.min(diag.re);
        rec.diagonal_max = rec.diagonal_max.max(diag.re);
        rec.diagonal_imag = rec.diagonal_imag.max(diag.im.abs());
    }
    rec.classification = if rec.diagonal_max < 0.0 {
        Classification::Focusing
    } else if rec.diagonal_min > 0.0 {
        Classification::Defocusing
    } else {
        Classification::Indefinite
    };
    Ok(rec)
}
