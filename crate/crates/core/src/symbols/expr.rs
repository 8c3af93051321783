use std::f64::consts::{E, PI};
use std::fmt;

use meval::{ContextProvider, Expr, FuncEvalError};

use crate::error::{Error, Result};

/// A parsed arithmetic expression over a fixed list of real variables.
///
/// Grammar is that of `meval` (`+ - * / ^`, parentheses, unary minus).
/// Recognised constants: `pi`, `e`. Functions: `sqrt exp ln log10 abs
/// sign sin cos tan asin acos atan sinh cosh tanh sech csch coth floor
/// ceil` (one argument) and `atan2 min max hypot pow` (two arguments).
#[derive(Clone)]
pub struct Expression {
    source: String,
    expr: Expr,
    vars: &'static [&'static str],
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Expression")
            .field("source", &self.source)
            .field("vars", &self.vars)
            .finish()
    }
}

struct Scope<'a> {
    names: &'a [&'static str],
    values: &'a [f64],
}

fn unary(name: &str) -> Option<fn(f64) -> f64> {
    Some(match name {
        "sqrt" => f64::sqrt,
        "exp" => f64::exp,
        "ln" => f64::ln,
        "log10" => f64::log10,
        "abs" => f64::abs,
        "sign" => |x: f64| if x == 0.0 { 0.0 } else { x.signum() },
        "sin" => f64::sin,
        "cos" => f64::cos,
        "tan" => f64::tan,
        "asin" => f64::asin,
        "acos" => f64::acos,
        "atan" => f64::atan,
        "sinh" => f64::sinh,
        "cosh" => f64::cosh,
        "tanh" => f64::tanh,
        "sech" => |x: f64| 1.0 / x.cosh(),
        "csch" => |x: f64| 1.0 / x.sinh(),
        "coth" => |x: f64| 1.0 / x.tanh(),
        "floor" => f64::floor,
        "ceil" => f64::ceil,
        _ => return None,
    })
}

fn binary(name: &str) -> Option<fn(f64, f64) -> f64> {
    Some(match name {
        "atan2" => f64::atan2,
        "min" => f64::min,
        "max" => f64::max,
        "hypot" => f64::hypot,
        "pow" => f64::powf,
        _ => return None,
    })
}

impl ContextProvider for Scope<'_> {
    fn get_var(&self, name: &str) -> Option<f64> {
        if let Some(i) = self.names.iter().position(|n| *n == name) {
            return Some(self.values[i]);
        }
        match name {
            "pi" => Some(PI),
            "e" => Some(E),
            _ => None,
        }
    }

    fn eval_func(&self, name: &str, args: &[f64]) -> std::result::Result<f64, FuncEvalError> {
        if let Some(f) = unary(name) {
            return match args {
                [x] => Ok(f(*x)),
                _ => Err(FuncEvalError::NumberArgs(1)),
            };
        }
        if let Some(f) = binary(name) {
            return match args {
                [x, y] => Ok(f(*x, *y)),
                _ => Err(FuncEvalError::NumberArgs(2)),
            };
        }
        Err(FuncEvalError::UnknownFunction)
    }
}

impl Expression {
    pub fn parse(source: &str, vars: &'static [&'static str]) -> Result<Self> {
        let spec_err = |reason: String| Error::SymbolSpec {
            spec: source.to_string(),
            reason,
        };
        let expr: Expr = source.parse().map_err(|e| spec_err(format!("{e}")))?;
        let out = Self {
            source: source.trim().to_string(),
            expr,
            vars,
        };
        // Unknown names only surface at evaluation time.
        let probe = vec![0.25; vars.len()];
        out.expr
            .eval_with_context(Scope {
                names: vars,
                values: &probe,
            })
            .map_err(|e| spec_err(format!("{e}")))?;
        Ok(out)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Evaluate at `values` (same order as the variable list). Domain
    /// errors yield NaN, which downstream finiteness checks reject.
    pub fn eval(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.vars.len());
        self.expr
            .eval_with_context(Scope {
                names: self.vars,
                values,
            })
            .unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_with_custom_functions() {
        let e = Expression::parse("-1 - 0.5*sech(x1-x2)*sech(x3-x2)", &["x1", "x2", "x3"]).unwrap();
        let v = e.eval(&[1.0, 0.0, -1.0]);
        let s = 1.0 / 1.0f64.cosh();
        assert!((v - (-1.0 - 0.5 * s * s)).abs() < 1e-15);
    }

    #[test]
    fn constants_and_binary() {
        let e = Expression::parse("max(x, pi) + 2^3", &["x"]).unwrap();
        assert!((e.eval(&[0.0]) - (PI + 8.0)).abs() < 1e-15);
    }

    #[test]
    fn unknown_names_rejected() {
        assert!(Expression::parse("y + 1", &["x"]).is_err());
        assert!(Expression::parse("foo(x)", &["x"]).is_err());
        assert!(Expression::parse("sech(x, x)", &["x"]).is_err());
        assert!(Expression::parse("x +* 1", &["x"]).is_err());
    }
}
