//! Text forms for priors and slabs, as used on the command line and in
//! config files.
//!
//! Priors: `beta:K,L` (spike-and-slab), `beta-binomial:K,L`, `binomial:P`,
//! `poisson:R`, `polytail:E`, `subexp:E`, `weights:W0,W1,...`. Parameters
//! may be arithmetic in `n`, e.g. `beta:1,n+1` or `beta:1,sqrt(n)`.
//!
//! Slabs: `laplace:A`, `gaussian:V`, `cauchy:G`, `uniform:LO,HI`.

use crate::error::{Error, Result};
use crate::posterior::Prior;
use crate::priors::{MixingPrior, ModelSelectionPrior, PriorFamily};
use crate::slabs::{CustomSlab, SlabModel};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Evaluate an arithmetic expression in the variable `n`.
///
/// Supports `+ - * / ^`, parentheses, unary minus, `sqrt(..)`, `ln(..)`
/// and `log(..)` (natural log).
pub fn eval(expr: &str, n: f64) -> Result<f64> {
    let toks = tokenize(expr)?;
    let mut p = Parser { toks: &toks, pos: 0, n };
    let v = p.sum()?;
    if p.pos != toks.len() {
        return Err(Error::Parse(format!("trailing input in {expr:?}")));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < cs.len() && (cs[i].is_ascii_digit() || cs[i] == '.' || cs[i] == 'e' || cs[i] == 'E'
                || ((cs[i] == '-' || cs[i] == '+') && matches!(cs[i - 1], 'e' | 'E')))
            {
                i += 1;
            }
            let text: String = cs[start..i].iter().collect();
            out.push(Tok::Num(text.parse().map_err(|_| Error::Parse(format!("bad number {text:?}")))?));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < cs.len() && cs[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Tok::Ident(cs[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected {c:?} in {s:?}")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: &'a [Tok],
    pos: usize,
    n: f64,
}

impl Parser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.toks.get(self.pos) {
            Some(Tok::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse(format!("expected {c:?}")))
        }
    }

    fn sum(&mut self) -> Result<f64> {
        let mut v = self.product()?;
        while let Some(c @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let r = self.product()?;
            v = if c == '+' { v + r } else { v - r };
        }
        Ok(v)
    }

    fn product(&mut self) -> Result<f64> {
        let mut v = self.power()?;
        while let Some(c @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let r = self.power()?;
            v = if c == '*' { v * r } else { v / r };
        }
        Ok(v)
    }

    fn power(&mut self) -> Result<f64> {
        let base = self.unary()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            return Ok(base.powf(self.power()?));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<f64> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<f64> {
        let tok = self.toks.get(self.pos).cloned().ok_or_else(|| Error::Parse("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(v),
            Tok::Ident(name) => match name.as_str() {
                "n" => Ok(self.n),
                "sqrt" | "ln" | "log" => {
                    self.expect('(')?;
                    let v = self.sum()?;
                    self.expect(')')?;
                    Ok(if name == "sqrt" { v.sqrt() } else { v.ln() })
                }
                _ => Err(Error::Parse(format!("unknown name {name:?}"))),
            },
            Tok::Op('(') => {
                let v = self.sum()?;
                self.expect(')')?;
                Ok(v)
            }
            Tok::Op(c) => Err(Error::Parse(format!("unexpected {c:?}"))),
        }
    }
}

fn split(s: &str) -> (String, Vec<String>) {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let params = if rest.trim().is_empty() {
        Vec::new()
    } else {
        rest.split(',').map(|p| p.trim().to_string()).collect()
    };
    (kind.trim().to_ascii_lowercase(), params)
}

/// A prior whose parameters may still depend on `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PriorSpec {
    text: String,
}

impl PriorSpec {
    pub fn resolve(&self, n: usize) -> Result<Prior> {
        let (kind, params) = split(&self.text);
        let nf = n as f64;
        let vals = params.iter().map(|p| eval(p, nf)).collect::<Result<Vec<f64>>>()?;
        let want = |k: usize| -> Result<()> {
            if vals.len() == k {
                Ok(())
            } else {
                Err(Error::Parse(format!("prior {kind:?} takes {k} parameter(s), got {}", vals.len())))
            }
        };
        let ms = |family| ModelSelectionPrior::new(family, n).map(Prior::ModelSelection);
        match kind.as_str() {
            "beta" => {
                want(2)?;
                Ok(Prior::SpikeSlab(MixingPrior::beta(vals[0], vals[1])?))
            }
            "beta-binomial" | "betabinomial" => {
                want(2)?;
                ms(PriorFamily::BetaBinomial { kappa: vals[0], lambda: vals[1] })
            }
            "binomial" => {
                want(1)?;
                ms(PriorFamily::Binomial { p: vals[0] })
            }
            "poisson" => {
                want(1)?;
                ms(PriorFamily::PoissonTrunc { rate: vals[0] })
            }
            "polytail" => {
                want(1)?;
                ms(PriorFamily::PolyTail { exponent: vals[0] })
            }
            "subexp" => {
                want(1)?;
                ms(PriorFamily::SubExp { exponent: vals[0] })
            }
            "weights" => {
                if vals.len() != n + 1 {
                    return Err(Error::DimensionMismatch { expected: n + 1, found: vals.len() });
                }
                Ok(Prior::ModelSelection(ModelSelectionPrior::from_weights(&vals)?))
            }
            _ => Err(Error::Parse(format!("unknown prior {kind:?}"))),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

impl FromStr for PriorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spec = PriorSpec { text: s.trim().to_string() };
        let (kind, params) = split(&spec.text);
        // weights fix n themselves; everything else is checked at a sample n
        let n = if kind == "weights" { params.len().saturating_sub(1).max(1) } else { 10 };
        spec.resolve(n)?;
        Ok(spec)
    }
}

impl TryFrom<String> for PriorSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PriorSpec> for String {
    fn from(p: PriorSpec) -> String {
        p.text
    }
}

impl fmt::Display for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

pub fn parse_prior(s: &str, n: usize) -> Result<Prior> {
    s.parse::<PriorSpec>()?.resolve(n)
}

pub fn parse_slab(s: &str) -> Result<SlabModel> {
    let (kind, params) = split(s);
    let vals = params.iter().map(|p| eval(p, f64::NAN)).collect::<Result<Vec<f64>>>()?;
    let one = || -> Result<f64> {
        match vals.as_slice() {
            [v] => Ok(*v),
            _ => Err(Error::Parse(format!("slab {kind:?} takes one parameter"))),
        }
    };
    match kind.as_str() {
        "laplace" => SlabModel::laplace(one()?),
        "gaussian" | "normal" => SlabModel::gaussian(one()?),
        "cauchy" => SlabModel::cauchy(one()?),
        "uniform" => match vals.as_slice() {
            [lo, hi] => Ok(SlabModel::Custom(CustomSlab::uniform(*lo, *hi)?)),
            _ => Err(Error::Parse("uniform slab takes lo,hi".into())),
        },
        _ => Err(Error::Parse(format!("unknown slab {kind:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expressions() {
        assert_eq!(eval("n+1", 1000.0).unwrap(), 1001.0);
        assert_eq!(eval("sqrt(n)", 100.0).unwrap(), 10.0);
        assert_eq!(eval("n^2", 30.0).unwrap(), 900.0);
        assert_eq!(eval("2*(n-1)/4", 5.0).unwrap(), 2.0);
        assert_eq!(eval("-1e-3 + 1", 0.0).unwrap(), 0.999);
        assert_eq!(eval("2^3^2", 0.0).unwrap(), 512.0);
        assert!(eval("n+", 1.0).is_err());
        assert!(eval("m", 1.0).is_err());
        assert!(eval("(1", 1.0).is_err());
    }

    #[test]
    fn priors() {
        match parse_prior("beta:1,n+1", 50).unwrap() {
            Prior::SpikeSlab(MixingPrior::Beta { kappa, lambda }) => assert_eq!((kappa, lambda), (1.0, 51.0)),
            other => panic!("{other:?}"),
        }
        match parse_prior("beta-binomial:1, 1", 4).unwrap() {
            Prior::ModelSelection(p) => assert_eq!(p.n(), 4),
            other => panic!("{other:?}"),
        }
        assert!(parse_prior("weights:1,2,3", 2).is_ok());
        assert!(parse_prior("weights:1,2,3", 3).is_err());
        assert!(parse_prior("beta:1", 3).is_err());
        assert!(parse_prior("binomial:2", 3).is_err());
        assert!(parse_prior("gamma:1,2", 3).is_err());
        let spec: PriorSpec = "subexp:2".parse().unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, "\"subexp:2\"");
        assert_eq!(serde_json::from_str::<PriorSpec>(&json).unwrap(), spec);
        assert!(serde_json::from_str::<PriorSpec>("\"nope\"").is_err());
    }

    #[test]
    fn slabs() {
        assert_eq!(parse_slab("laplace:0.5").unwrap().name(), SlabModel::laplace(0.5).unwrap().name());
        assert!(parse_slab("gaussian:1").is_ok());
        assert!(parse_slab("uniform:-3,3").is_ok());
        assert!(parse_slab("laplace:-1").is_err());
        assert!(parse_slab("laplace").is_err());
        assert!(parse_slab("laplace:n").is_err());
    }
}
