//! Plain-text experiment configuration.
//!
//! ```text
//! # comment
//! seed = 20240611
//! replications = 1000
//! methods = BM, ExtraM-I
//!
//! [pareto_n2000]
//! dist = pareto
//! gamma = 1/3
//! n = 2000
//! k = 58
//! pairs = 2.4:1.8, 2.4:2.0
//! ```
//!
//! Keys before the first `[section]` are defaults inherited by every section.
//! A file without sections describes a single experiment.

use std::collections::BTreeMap;
use std::path::Path;

use crate::distributions::{DistKind, HeavyTailDist};
use crate::error::{Error, Result};
use crate::sim_harness::{ExperimentConfig, Method};
use crate::trelt::OrderPair;

const KEYS: [&str; 11] = [
    "dist",
    "gamma",
    "n",
    "k",
    "pairs",
    "replications",
    "eps_prime",
    "tau0",
    "seed",
    "methods",
    "name",
];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

type Block = BTreeMap<String, Entry>;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Reads a real, accepting simple fractions such as `1/3`.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: f64 = a.trim().parse().ok()?;
        let b: f64 = b.trim().parse().ok()?;
        if b == 0.0 {
            return None;
        }
        return Some(a / b);
    }
    s.parse().ok()
}

fn real(e: &Entry, key: &str) -> Result<f64> {
    parse_real(&e.value)
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_err(e.line, format!("`{key}` expects a number, got `{}`", e.value)))
}

fn count(e: &Entry, key: &str) -> Result<usize> {
    e.value
        .trim()
        .parse()
        .map_err(|_| parse_err(e.line, format!("`{key}` expects a count, got `{}`", e.value)))
}

fn get<'a>(own: &'a Block, globals: &'a Block, key: &str) -> Option<&'a Entry> {
    own.get(key).or_else(|| globals.get(key))
}

fn required<'a>(own: &'a Block, globals: &'a Block, key: &str, name: &str, line: usize) -> Result<&'a Entry> {
    get(own, globals, key)
        .ok_or_else(|| parse_err(line, format!("experiment `{name}` is missing `{key}`")))
}

fn parse_pairs(e: &Entry) -> Result<Vec<(f64, f64)>> {
    e.value
        .split(',')
        .map(|item| {
            let (p, q) = item.split_once(':').ok_or_else(|| {
                parse_err(e.line, format!("pair `{}` must be written p:q", item.trim()))
            })?;
            match (parse_real(p), parse_real(q)) {
                (Some(p), Some(q)) => Ok((p, q)),
                _ => Err(parse_err(e.line, format!("pair `{}` is not numeric", item.trim()))),
            }
        })
        .collect()
}

fn parse_methods(e: &Entry) -> Result<Vec<Method>> {
    if e.value.trim().is_empty() {
        return Ok(Vec::new());
    }
    if e.value.trim().eq_ignore_ascii_case("all") {
        return Ok(Method::ALL.to_vec());
    }
    e.value
        .split(',')
        .map(|m| m.trim().parse().map_err(|err: Error| parse_err(e.line, err.to_string())))
        .collect()
}

fn build(name: &str, header_line: usize, own: &Block, globals: &Block) -> Result<ExperimentConfig> {
    let kind_entry = required(own, globals, "dist", name, header_line)?;
    let kind: DistKind = kind_entry
        .value
        .parse()
        .map_err(|err: Error| parse_err(kind_entry.line, err.to_string()))?;
    let dist = if kind == DistKind::KoenkerBassett {
        HeavyTailDist::koenker_bassett()
    } else {
        let g = required(own, globals, "gamma", name, header_line)?;
        HeavyTailDist::new(kind, real(g, "gamma")?)
            .map_err(|err| parse_err(g.line, err.to_string()))?
    };
    let n = count(required(own, globals, "n", name, header_line)?, "n")?;
    let k = count(required(own, globals, "k", name, header_line)?, "k")?;
    let pairs_entry = required(own, globals, "pairs", name, header_line)?;
    let mut pairs = Vec::new();
    for (p, q) in parse_pairs(pairs_entry)? {
        let pair = OrderPair::new(p, q, dist.gamma())
            .map_err(|err| parse_err(pairs_entry.line, err.to_string()))?;
        pairs.push(pair);
    }
    let replications = match get(own, globals, "replications") {
        Some(e) => count(e, "replications")?,
        None => 1000,
    };
    let eps_prime = match get(own, globals, "eps_prime") {
        Some(e) => real(e, "eps_prime")?,
        None => 0.005,
    };
    let tau0 = match get(own, globals, "tau0") {
        Some(e) => real(e, "tau0")?,
        None => ExperimentConfig::default_tau0(kind),
    };
    let base_seed = match get(own, globals, "seed") {
        Some(e) => e
            .value
            .trim()
            .parse()
            .map_err(|_| parse_err(e.line, format!("`seed` expects a 64-bit integer, got `{}`", e.value)))?,
        None => 0,
    };
    let methods = match get(own, globals, "methods") {
        Some(e) => parse_methods(e)?,
        None => Method::ALL.to_vec(),
    };
    let cfg = ExperimentConfig {
        name: name.to_string(),
        dist,
        pairs,
        n,
        replications,
        k,
        eps_prime,
        tau0,
        base_seed,
        methods,
    };
    cfg.validate().map_err(|err| parse_err(header_line, err.to_string()))?;
    Ok(cfg)
}

/// Parses every experiment described by `text`.
pub fn parse_config(text: &str) -> Result<Vec<ExperimentConfig>> {
    let mut globals = Block::new();
    let mut sections: Vec<(String, usize, Block)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| parse_err(line_no, format!("malformed section header `{line}`")))?;
            if sections.iter().any(|(n, _, _)| n == name) {
                return Err(parse_err(line_no, format!("duplicate section `{name}`")));
            }
            sections.push((name.to_string(), line_no, Block::new()));
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim().to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return Err(parse_err(line_no, format!("unknown key `{key}`")));
        }
        let block = match sections.last_mut() {
            Some((_, _, b)) => b,
            None => &mut globals,
        };
        if block.contains_key(&key) {
            return Err(parse_err(line_no, format!("duplicate key `{key}`")));
        }
        block.insert(
            key,
            Entry {
                value: value.trim().to_string(),
                line: line_no,
            },
        );
    }
    if sections.is_empty() {
        let name = globals
            .get("name")
            .map(|e| e.value.clone())
            .unwrap_or_else(|| "experiment".to_string());
        return Ok(vec![build(&name, 1, &Block::new(), &globals)?]);
    }
    sections
        .iter()
        .map(|(name, line, block)| build(name, *line, block, &globals))
        .collect()
}

pub fn load_config(path: &Path) -> Result<Vec<ExperimentConfig>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "\
# shared
seed = 7
replications = 10
methods = BM, ExtraM-III

[a]
dist = pareto
gamma = 1/3
n = 2000
k = 58
pairs = 2.4:1.8, 2.4:2.0

[b]
dist = student-t
gamma = 0.45
n = 5000
k = 55
pairs = 2.0:1.5
replications = 3
";

    #[test]
    fn sections_inherit_globals() {
        let cfgs = parse_config(TEXT).unwrap();
        assert_eq!(cfgs.len(), 2);
        assert_eq!(cfgs[0].name, "a");
        assert_eq!(cfgs[0].pairs.len(), 2);
        assert_eq!(cfgs[0].replications, 10);
        assert_eq!(cfgs[0].tau0, 0.0);
        assert!((cfgs[0].dist.gamma() - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(cfgs[1].replications, 3);
        assert_eq!(cfgs[1].tau0, 0.5);
        assert_eq!(cfgs[1].base_seed, 7);
        assert_eq!(cfgs[1].methods, vec![Method::Bm, Method::ExtraM3]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "dist = pareto\ngamma = 0.3\nn = 100\nk = 10\npairs = 2.4;1.8\n";
        match parse_config(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        match parse_config("colour = blue\n") {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 1);
                assert!(msg.contains("colour"));
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_config("[x\n").is_err());
    }

    #[test]
    fn strict_regime_is_enforced() {
        let bad = "dist = pareto\ngamma = 0.45\nn = 100\nk = 10\npairs = 2.4:1.8\n";
        assert!(matches!(parse_config(bad), Err(Error::Parse { line: 5, .. })));
    }

    #[test]
    fn fractions() {
        assert_eq!(parse_real("1/4"), Some(0.25));
        assert_eq!(parse_real(" 0.45 "), Some(0.45));
        assert_eq!(parse_real("1/0"), None);
    }
}
