//! Benchmark threshold files.
//!
//! ```text
//! # metric classifier[@preset] op value
//! ber   lsvm-cmi  <=  0.01
//! dfr   qda@neutral <  0.2
//! # ratio metric numerator denominator op value
//! ratio ber lsvm-cmi lsvm <= 0.95
//! ```
//!
//! Metrics are `ber`, `dfr`, `frames_mean` and `ppf`; the preset defaults
//! to `all`.

use hiq::pipeline::BenchRow;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
enum Op {
    Le,
    Lt,
    Ge,
    Gt,
}

impl Op {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "<=" => Ok(Op::Le),
            "<" => Ok(Op::Lt),
            ">=" => Ok(Op::Ge),
            ">" => Ok(Op::Gt),
            _ => Err(CliError::Usage(format!("unknown comparison `{s}`"))),
        }
    }

    fn holds(&self, a: f64, b: f64) -> bool {
        match self {
            Op::Le => a <= b,
            Op::Lt => a < b,
            Op::Ge => a >= b,
            Op::Gt => a > b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Check {
    Value { metric: String, target: String, op: Op, bound: f64 },
    Ratio { metric: String, num: String, den: String, op: Op, bound: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assertions {
    checks: Vec<(usize, Check)>,
}

fn bound(s: &str) -> Result<f64, CliError> {
    s.parse().map_err(|_| CliError::Usage(format!("bad threshold `{s}`")))
}

impl Assertions {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut checks = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tok: Vec<&str> = line.split_whitespace().collect();
            let check = match tok.as_slice() {
                ["ratio", m, a, b, op, v] => Check::Ratio {
                    metric: m.to_string(),
                    num: a.to_string(),
                    den: b.to_string(),
                    op: Op::parse(op)?,
                    bound: bound(v)?,
                },
                [m, t, op, v] => {
                    Check::Value { metric: m.to_string(), target: t.to_string(), op: Op::parse(op)?, bound: bound(v)? }
                }
                _ => return Err(CliError::Usage(format!("assert line {}: cannot parse `{line}`", i + 1))),
            };
            checks.push((i + 1, check));
        }
        Ok(Self { checks })
    }

    /// One line per check; `Ok(true)` iff all hold.
    pub fn evaluate(&self, rows: &[BenchRow]) -> Result<(bool, Vec<String>), CliError> {
        let mut ok = true;
        let mut lines = Vec::new();
        for (n, c) in &self.checks {
            let (value, op, bnd, label) = match c {
                Check::Value { metric, target, op, bound } => {
                    (lookup(rows, metric, target)?, op, *bound, format!("{metric} {target}"))
                }
                Check::Ratio { metric, num, den, op, bound } => {
                    let v = lookup(rows, metric, num)? / lookup(rows, metric, den)?;
                    (v, op, *bound, format!("{metric} {num}/{den}"))
                }
            };
            let pass = op.holds(value, bnd);
            ok &= pass;
            lines.push(format!("{} line {n}: {label} = {value:.6} ({op:?} {bnd})", if pass { "PASS" } else { "FAIL" }));
        }
        Ok((ok, lines))
    }
}

fn lookup(rows: &[BenchRow], metric: &str, target: &str) -> Result<f64, CliError> {
    let (classifier, preset) = target.split_once('@').unwrap_or((target, "all"));
    let row = rows
        .iter()
        .find(|r| r.classifier == classifier && r.preset == preset)
        .ok_or_else(|| CliError::Usage(format!("no benchmark row for {classifier}@{preset}")))?;
    let m = &row.metrics;
    let v = match metric {
        "ber" => m.ber,
        "dfr" => m.dfr,
        "frames_mean" => m.frames_mean(),
        "ppf" => m.predictions_per_frame,
        other => return Err(CliError::Usage(format!("unknown metric `{other}`"))),
    };
    // An undefined rate cannot satisfy any bound.
    Ok(v.unwrap_or(f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hiq::pipeline::Metrics;

    fn row(classifier: &str, ber: f64) -> BenchRow {
        BenchRow {
            classifier: classifier.into(),
            preset: "all".into(),
            metrics: Metrics { ber: Some(ber), dfr: Some(0.0), ..Default::default() },
            sessions: 1,
            sessions_failed: 0,
        }
    }

    #[test]
    fn value_and_ratio_checks() {
        let rows = [row("lsvm", 0.02), row("lsvm-cmi", 0.01)];
        let a = Assertions::parse("ber lsvm-cmi <= 0.01\nratio ber lsvm-cmi lsvm <= 0.95 # cmi helps\n").unwrap();
        assert!(a.evaluate(&rows).unwrap().0);
        let b = Assertions::parse("ratio ber lsvm lsvm-cmi <= 0.95").unwrap();
        assert!(!b.evaluate(&rows).unwrap().0);
    }

    #[test]
    fn unknown_rows_and_syntax_are_errors() {
        assert!(Assertions::parse("ber qda").is_err());
        let a = Assertions::parse("ber qda <= 1").unwrap();
        assert!(a.evaluate(&[row("lsvm", 0.0)]).is_err());
    }
}
