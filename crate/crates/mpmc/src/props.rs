//! Property files.
//!
//! One formula per line. `label NAME = formula` defines a name usable in
//! later lines. `{x}` placeholders are filled in from a sweep.

use anyhow::{anyhow, bail, Context, Result};
use mpmc_core::csl::{parse_formula_with_labels, StateFormula};

/// A formula ready to run, with the sweep values that produced it.
#[derive(Clone, Debug)]
pub struct Property {
    pub text: String,
    pub formula: StateFormula,
    pub bindings: Vec<(String, String)>,
}

/// `name=v1,v2,...`
#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub name: String,
    pub values: Vec<String>,
}

impl std::str::FromStr for Sweep {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Sweep> {
        let (name, values) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("expected name=v1,v2,..., got `{s}`"))?;
        let name = name.trim().to_string();
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
        if name.is_empty() || values.iter().any(String::is_empty) {
            bail!("malformed sweep `{s}`");
        }
        Ok(Sweep { name, values })
    }
}

/// Every combination of sweep values, first sweep outermost.
fn combinations(sweeps: &[Sweep]) -> Vec<Vec<(String, String)>> {
    let mut out = vec![Vec::new()];
    for s in sweeps {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                s.values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((s.name.clone(), v.clone()));
                    p
                })
            })
            .collect();
    }
    out
}

fn substitute(line: &str, bindings: &[(String, String)]) -> Result<String> {
    let mut out = line.to_string();
    for (k, v) in bindings {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    if let Some(i) = out.find('{') {
        let end = out[i..].find('}').map_or(out.len(), |j| i + j + 1);
        bail!("no value for placeholder `{}`; pass --sweep", &out[i..end]);
    }
    Ok(out)
}

pub fn parse_properties(text: &str, populations: &[String], sweeps: &[Sweep]) -> Result<Vec<Property>> {
    let mut out = Vec::new();
    let mut label_lines: Vec<(usize, &str)> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with("label ") {
            label_lines.push((no, line));
            continue;
        }
        let mentions = |s: &Sweep| {
            let p = format!("{{{}}}", s.name);
            line.contains(&p) || label_lines.iter().any(|(_, l)| l.contains(&p))
        };
        let used: Vec<Sweep> = sweeps.iter().filter(|s| mentions(s)).cloned().collect();
        for bindings in combinations(&used) {
            let labels = parse_labels(&label_lines, populations, &bindings)?;
            let line = substitute(line, &bindings).with_context(|| format!("line {}", no + 1))?;
            let formula = parse_formula_with_labels(&line, populations, &labels)
                .with_context(|| format!("line {}: `{line}`", no + 1))?;
            out.push(Property {
                text: line,
                formula,
                bindings,
            });
        }
    }
    if out.is_empty() {
        bail!("property file contains no formula");
    }
    Ok(out)
}

fn parse_labels(
    lines: &[(usize, &str)],
    populations: &[String],
    bindings: &[(String, String)],
) -> Result<Vec<(String, StateFormula)>> {
    let mut labels: Vec<(String, StateFormula)> = Vec::new();
    for &(no, line) in lines {
        let line = substitute(line, bindings).with_context(|| format!("line {}", no + 1))?;
        let (name, body) = line["label ".len()..]
            .split_once('=')
            .filter(|(_, b)| !b.starts_with('='))
            .ok_or_else(|| anyhow!("line {}: expected `label NAME = formula`", no + 1))?;
        let name = name.trim();
        let f = parse_formula_with_labels(body, populations, &labels)
            .with_context(|| format!("line {}: label `{name}`", no + 1))?;
        labels.push((name.to_string(), f));
    }
    Ok(labels)
}
