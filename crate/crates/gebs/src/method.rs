//! Method specifications: `rb`, `wb[:multiplier]` and `gbs-<scheme>`.
//!
//! A scheme is any weight-law string the core parser accepts (`multinomial`,
//! `uniform:0.5,1.5`, `exp:1`, `jackknife:d=2`, …). The delete-d and
//! down-weight jackknives also take `d=sqrt`, and m-out-of-n takes `m=sqrt`,
//! meaning `⌈√n⌉` at each sample size.
//!
//! A bare scheme name picks up its arguments from `--scheme-args`, so
//! `--methods gbs-uniform --scheme-args uniform:0.2,1.8` runs Uniform(0.2, 1.8)
//! weights.

use std::fmt;

use gebs_core::baselines::Multiplier;
use gebs_core::weights::{WeightKind, WeightScheme};

use crate::error::{BenchError, Result};

/// A weight law whose parameters may depend on `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeFamily {
    Fixed(WeightKind),
    /// Delete-d jackknife with `d = ⌈√n⌉`.
    DeleteSqrt,
    /// Down-weight jackknife with `d = ⌈√n⌉`.
    DownweightSqrt,
    /// m-out-of-n bootstrap with `m = ⌈√n⌉`.
    MOutOfNSqrt,
}

fn ceil_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt().floor() as usize;
    while r * r < n {
        r += 1;
    }
    r
}

impl SchemeFamily {
    pub fn kind(&self, n: usize) -> WeightKind {
        match *self {
            SchemeFamily::Fixed(k) => k,
            SchemeFamily::DeleteSqrt => WeightKind::DeleteDJackknife { d: ceil_sqrt(n) },
            SchemeFamily::DownweightSqrt => WeightKind::DownweightDJackknife { d: ceil_sqrt(n) },
            SchemeFamily::MOutOfNSqrt => WeightKind::MOutOfN { m: ceil_sqrt(n) },
        }
    }

    pub fn scheme(&self, n: usize) -> Result<WeightScheme> {
        Ok(WeightScheme::new(self.kind(n), n)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        Ok(match compact.to_ascii_lowercase().as_str() {
            "jackknife:d=sqrt" => SchemeFamily::DeleteSqrt,
            "downweight:d=sqrt" => SchemeFamily::DownweightSqrt,
            "moon:m=sqrt" => SchemeFamily::MOutOfNSqrt,
            _ => SchemeFamily::Fixed(
                compact
                    .parse()
                    .map_err(|e: gebs_core::Error| BenchError::Config(e.to_string()))?,
            ),
        })
    }
}

impl fmt::Display for SchemeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeFamily::Fixed(k) => write!(f, "{k}"),
            SchemeFamily::DeleteSqrt => f.write_str("jackknife:d=sqrt"),
            SchemeFamily::DownweightSqrt => f.write_str("downweight:d=sqrt"),
            SchemeFamily::MOutOfNSqrt => f.write_str("moon:m=sqrt"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodKind {
    Residual,
    Wild(Multiplier),
    Gbs(SchemeFamily),
}

/// A configured method and the label it is reported under.
#[derive(Debug, Clone, PartialEq)]
pub struct Method {
    pub label: String,
    pub kind: MethodKind,
}

impl Method {
    /// Canonical form with every argument spelled out.
    pub fn spec(&self) -> String {
        match self.kind {
            MethodKind::Residual => "rb".to_string(),
            MethodKind::Wild(m) => format!("wb:{m}"),
            MethodKind::Gbs(s) => format!("gbs-{s}"),
        }
    }
}

/// Parses a method list, filling bare scheme names from `scheme_args`.
pub fn parse_methods(methods: &[String], scheme_args: &[String]) -> Result<Vec<Method>> {
    let mut args: Vec<(String, String, bool)> = Vec::new();
    for a in scheme_args {
        let (name, _) = a.split_once(':').ok_or_else(|| {
            BenchError::Config(format!("scheme argument {a:?} must look like `name:args`"))
        })?;
        args.push((
            name.trim().to_ascii_lowercase(),
            a.trim().to_string(),
            false,
        ));
    }
    if methods.is_empty() {
        return Err(BenchError::Config("no methods given".into()));
    }
    let mut out = Vec::with_capacity(methods.len());
    for m in methods {
        let label = m.trim().to_string();
        let lower = label.to_ascii_lowercase();
        let kind = if lower == "rb" {
            MethodKind::Residual
        } else if lower == "wb" {
            MethodKind::Wild(Multiplier::StandardNormal)
        } else if let Some(mult) = lower.strip_prefix("wb:") {
            MethodKind::Wild(
                mult.parse()
                    .map_err(|e: gebs_core::Error| BenchError::Config(e.to_string()))?,
            )
        } else if let Some(scheme) = lower
            .strip_prefix("gbs-")
            .or_else(|| lower.strip_prefix("gbs:"))
        {
            let text = if scheme.contains(':') {
                scheme.to_string()
            } else {
                match args.iter_mut().find(|(name, _, _)| name == scheme) {
                    Some(entry) => {
                        entry.2 = true;
                        entry.1.clone()
                    }
                    None => scheme.to_string(),
                }
            };
            MethodKind::Gbs(SchemeFamily::parse(&text)?)
        } else {
            return Err(BenchError::Config(format!(
                "unknown method {label:?}; expected rb, wb[:multiplier] or gbs-<scheme>"
            )));
        };
        if out.iter().any(|o: &Method| o.label == label) {
            return Err(BenchError::Config(format!("method {label:?} listed twice")));
        }
        out.push(Method { label, kind });
    }
    if let Some((_, unused, _)) = args.iter().find(|a| !a.2) {
        return Err(BenchError::Config(format!(
            "scheme argument {unused:?} matches no bare gbs method"
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_the_table_one_methods() {
        let m = parse_methods(
            &strings(&["rb", "wb", "gbs-multinomial", "gbs-uniform"]),
            &[],
        )
        .unwrap();
        assert_eq!(m[0].kind, MethodKind::Residual);
        assert_eq!(m[1].kind, MethodKind::Wild(Multiplier::StandardNormal));
        assert_eq!(m[2].spec(), "gbs-multinomial");
        assert_eq!(m[3].spec(), "gbs-uniform:0.5,1.5");
    }

    #[test]
    fn scheme_args_fill_bare_names() {
        let m = parse_methods(&strings(&["gbs-uniform"]), &strings(&["uniform:0.2,1.8"])).unwrap();
        assert_eq!(
            m[0].kind,
            MethodKind::Gbs(SchemeFamily::Fixed(WeightKind::IidUniform {
                lo: 0.2,
                hi: 1.8
            }))
        );
        assert_eq!(m[0].label, "gbs-uniform");
        assert!(parse_methods(&strings(&["gbs-exp"]), &strings(&["uniform:0.2,1.8"])).is_err());
    }

    #[test]
    fn sqrt_families() {
        let f = SchemeFamily::parse("jackknife:d=sqrt").unwrap();
        assert_eq!(f.kind(10), WeightKind::DeleteDJackknife { d: 4 });
        assert_eq!(f.kind(16), WeightKind::DeleteDJackknife { d: 4 });
        assert_eq!(f.kind(17), WeightKind::DeleteDJackknife { d: 5 });
    }

    #[test]
    fn rejects_unknown_methods() {
        assert!(parse_methods(&strings(&["bogus"]), &[]).is_err());
        assert!(parse_methods(&strings(&["gbs-bogus"]), &[]).is_err());
        assert!(parse_methods(&strings(&["rb", "rb"]), &[]).is_err());
        assert!(parse_methods(&[], &[]).is_err());
    }
}
