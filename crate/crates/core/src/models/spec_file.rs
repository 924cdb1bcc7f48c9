//! Plain-text metric spec files. See `docs/spec-format.md` for the grammar.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{MetricSpec, Potential, Tag};
use crate::error::{Error, Result};
use crate::expr::{parse_with_params, Bindings, ExprNode};

const SECTIONS: [&str; 6] = ["manifold", "params", "metric", "potential", "domain", "tags"];

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::SpecFormat { line, msg: msg.into() }
}

struct Entry {
    line: usize,
    key: String,
    value: String,
}

fn is_ident(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch.is_ascii_alphabetic() || ch == '_')
        && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
}

/// `g_12`, `g_1_2` (1-based) → zero-based `(i, j)`.
fn metric_index(key: &str) -> Option<(usize, usize)> {
    let rest = key.strip_prefix("g_")?;
    let (a, b) = match rest.split_once('_') {
        Some((a, b)) => (a.parse::<usize>().ok()?, b.parse::<usize>().ok()?),
        None if rest.len() == 2 && rest.bytes().all(|c| c.is_ascii_digit()) => {
            ((rest.as_bytes()[0] - b'0') as usize, (rest.as_bytes()[1] - b'0') as usize)
        }
        None => return None,
    };
    (a >= 1 && b >= 1).then(|| (a - 1, b - 1))
}

fn parse_number(line: usize, what: &str, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| err(line, format!("{what}: expected a number, found \"{}\"", s.trim())))?;
    if !v.is_finite() {
        return Err(err(line, format!("{what}: value must be finite")));
    }
    Ok(v)
}

/// Parse spec-file text into a validated [`MetricSpec`].
pub fn parse_spec(text: &str) -> Result<MetricSpec> {
    let mut sections: BTreeMap<&str, Vec<Entry>> = BTreeMap::new();
    let mut current: Option<&str> = None;
    let mut tag_lines: Vec<(usize, String)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line, "unterminated section header"))?
                .trim();
            let known = SECTIONS
                .iter()
                .find(|s| **s == name)
                .ok_or_else(|| err(line, format!("unknown section [{name}]")))?;
            if sections.contains_key(known) {
                return Err(err(line, format!("duplicate section [{name}]")));
            }
            sections.insert(known, Vec::new());
            current = Some(known);
            continue;
        }
        let sec = current.ok_or_else(|| err(line, "content before the first section header"))?;
        if sec == "tags" {
            tag_lines.push((line, content.to_string()));
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value` in [{sec}]")))?;
        let key = key.trim().to_string();
        let entries = sections.get_mut(sec).unwrap();
        if entries.iter().any(|e| e.key == key) {
            return Err(err(line, format!("duplicate key {key} in [{sec}]")));
        }
        entries.push(Entry {
            line,
            key,
            value: value.trim().to_string(),
        });
    }

    let empty = Vec::new();
    let get = |s: &str| sections.get(s).unwrap_or(&empty);

    // [manifold]
    let mut name = "unnamed".to_string();
    let mut dim: Option<(usize, usize)> = None;
    let mut coords: Option<(usize, Vec<String>)> = None;
    for e in get("manifold") {
        match e.key.as_str() {
            "name" => name = e.value.clone(),
            "dim" => {
                let n: usize = e
                    .value
                    .parse()
                    .map_err(|_| err(e.line, format!("dim: expected a positive integer, found \"{}\"", e.value)))?;
                if n == 0 || n > crate::jet::MAX_DIM {
                    return Err(err(e.line, format!("dim must be in 1..={}", crate::jet::MAX_DIM)));
                }
                dim = Some((e.line, n));
            }
            "coords" => {
                let names: Vec<String> = e.value.split(',').map(|s| s.trim().to_string()).collect();
                if let Some(bad) = names.iter().find(|c| !is_ident(c)) {
                    return Err(err(e.line, format!("invalid coordinate name \"{bad}\"")));
                }
                coords = Some((e.line, names));
            }
            other => return Err(err(e.line, format!("unknown key {other} in [manifold]"))),
        }
    }
    let coords = match (dim, coords) {
        (Some((line, n)), Some((_, c))) if c.len() != n => {
            return Err(err(line, format!("dim = {n} but {} coordinates listed", c.len())))
        }
        (_, Some((_, c))) => c,
        (Some((_, n)), None) => (1..=n).map(|i| format!("x{i}")).collect(),
        (None, None) => return Err(err(0, "[manifold] must give dim or coords")),
    };
    let n = coords.len();
    let mut seen = BTreeSet::new();
    for c in &coords {
        if !seen.insert(c) {
            return Err(err(0, format!("coordinate {c} listed twice")));
        }
    }
    let coord_refs: Vec<&str> = coords.iter().map(String::as_str).collect();

    // [params]
    let mut params = Bindings::new();
    for e in get("params") {
        if !is_ident(&e.key) || coords.contains(&e.key) || e.key == "pi" {
            return Err(err(e.line, format!("invalid parameter name \"{}\"", e.key)));
        }
        params.insert(e.key.clone(), parse_number(e.line, &e.key, &e.value)?);
    }
    let param_refs: Vec<&str> = params.keys().map(String::as_str).collect();
    let parse_expr = |e: &Entry| -> Result<ExprNode> {
        parse_with_params(&e.value, &coord_refs, &param_refs).map_err(|x| err(e.line, format!("{}: {x}", e.key)))
    };

    // [metric]
    let mut given: Vec<Option<(usize, ExprNode)>> = vec![None; n * n];
    for e in get("metric") {
        let (i, j) = metric_index(&e.key)
            .ok_or_else(|| err(e.line, format!("metric keys look like g_12 or g_1_2, found {}", e.key)))?;
        if i >= n || j >= n {
            return Err(err(e.line, format!("{} out of range for dimension {n}", e.key)));
        }
        given[i * n + j] = Some((e.line, parse_expr(e)?));
    }
    let mut metric = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let here = &given[i * n + j];
            let mirror = &given[j * n + i];
            let expr = match (here, mirror) {
                (Some((line, a)), Some((_, b))) if a != b => {
                    return Err(err(*line, format!("g_{}{} and g_{}{} differ", i + 1, j + 1, j + 1, i + 1)))
                }
                (Some((_, a)), _) | (None, Some((_, a))) => a.clone(),
                (None, None) if i == j => return Err(err(0, format!("missing diagonal entry g_{}{}", i + 1, i + 1))),
                (None, None) => ExprNode::Const(0.0),
            };
            metric.push(expr);
        }
    }

    // [potential]
    let mut potential = None;
    for e in get("potential") {
        if potential.is_some() {
            return Err(err(e.line, "at most one potential"));
        }
        if e.key != "f" && e.key != "h" {
            return Err(err(e.line, format!("potential must be named f or h, found {}", e.key)));
        }
        potential = Some(Potential {
            symbol: e.key.clone(),
            expr: parse_expr(e)?,
        });
    }

    // [domain]
    let mut domain = vec![(-1.0, 1.0); n];
    for e in get("domain") {
        let idx = coords
            .iter()
            .position(|c| *c == e.key)
            .ok_or_else(|| err(e.line, format!("unknown coordinate {} in [domain]", e.key)))?;
        let (lo, hi) = e
            .value
            .split_once(',')
            .ok_or_else(|| err(e.line, "domain entries look like `x = lo, hi`"))?;
        let lo = parse_number(e.line, &e.key, lo)?;
        let hi = parse_number(e.line, &e.key, hi)?;
        if lo >= hi {
            return Err(err(e.line, format!("empty interval for {}", e.key)));
        }
        domain[idx] = (lo, hi);
    }

    // [tags]
    let mut tags = BTreeSet::new();
    for (line, content) in &tag_lines {
        for t in content.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
            tags.insert(Tag::from_name(t).ok_or_else(|| err(*line, format!("unknown tag {t}")))?);
        }
    }
    if tags.is_empty() {
        tags.insert(Tag::Generic);
    }

    let spec = MetricSpec {
        name,
        coords,
        params,
        metric,
        potential,
        domain,
        tags,
    };
    spec.validate()?;
    Ok(spec)
}

impl MetricSpec {
    /// Serialize in the spec-file format; `parse_spec` reads it back to an equal spec.
    pub fn to_spec_text(&self) -> String {
        let n = self.dim();
        let mut s = String::new();
        let _ = writeln!(s, "[manifold]\nname = {}\ndim = {n}\ncoords = {}", self.name, self.coords.join(", "));
        if !self.params.is_empty() {
            s.push_str("\n[params]\n");
            for (k, v) in &self.params {
                let _ = writeln!(s, "{k} = {v:?}");
            }
        }
        s.push_str("\n[metric]\n");
        for i in 0..n {
            for j in 0..=i {
                let e = self.component(i, j);
                if i != j && *e == ExprNode::Const(0.0) {
                    continue;
                }
                let _ = writeln!(s, "g_{}_{} = {e}", i + 1, j + 1);
            }
        }
        if let Some(p) = &self.potential {
            let _ = writeln!(s, "\n[potential]\n{} = {}", p.symbol, p.expr);
        }
        s.push_str("\n[domain]\n");
        for (c, (lo, hi)) in self.coords.iter().zip(&self.domain) {
            let _ = writeln!(s, "{c} = {lo:?}, {hi:?}");
        }
        let tags: Vec<&str> = self.tags.iter().map(|t| t.name()).collect();
        let _ = writeln!(s, "\n[tags]\n{}", tags.join(", "));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DISK: &str = "\
# hyperbolic disk
[manifold]
name = disk
dim = 2
coords = u, v

[params]
k = 1

[metric]
g_11 = 4/(k*(1-u^2-v^2)^2)
g_22 = 4/(k*(1-u^2-v^2)^2)

[potential]
f = (1+u^2+v^2)/(1-u^2-v^2)

[domain]
u = -0.5, 0.5
v = -0.5, 0.5

[tags]
einstein, vacuum-static
";

    #[test]
    fn parses_full_spec() {
        let s = parse_spec(DISK).unwrap();
        assert_eq!(s.name, "disk");
        assert_eq!(s.coords, vec!["u", "v"]);
        assert_eq!(s.params["k"], 1.0);
        assert_eq!(*s.component(0, 1), ExprNode::Const(0.0));
        assert!(s.has_tag(Tag::VacuumStatic));
        assert_eq!(s.domain[1], (-0.5, 0.5));
    }

    #[test]
    fn serialization_reparses_to_equal_spec() {
        let s = parse_spec(DISK).unwrap();
        assert_eq!(parse_spec(&s.to_spec_text()).unwrap(), s);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = DISK.replace("g_22 = 4/(k*(1-u^2-v^2)^2)", "g_22 = 4/(k*(1-u^2-v^2)^2");
        match parse_spec(&bad) {
            Err(Error::SpecFormat { line, msg }) => {
                assert_eq!(line, 12);
                assert!(msg.contains("g_22"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
        let unknown = DISK.replace("f = (1+u^2", "f = (1+w^2");
        assert!(matches!(parse_spec(&unknown), Err(Error::SpecFormat { line: 15, .. })));
        let tag = DISK.replace("einstein,", "einsteinian,");
        assert!(matches!(parse_spec(&tag), Err(Error::SpecFormat { line: 22, .. })));
    }

    #[test]
    fn asymmetric_and_missing_entries_rejected() {
        let asym = DISK.replace("[potential]", "g_12 = u\ng_21 = v\n\n[potential]");
        assert!(parse_spec(&asym).is_err());
        let missing = DISK.replace("g_22 = 4/(k*(1-u^2-v^2)^2)\n", "");
        assert!(parse_spec(&missing).is_err());
    }

    #[test]
    fn static_tags_need_potential() {
        let s = DISK.replace("f = (1+u^2+v^2)/(1-u^2-v^2)", "");
        assert!(parse_spec(&s).is_err());
    }

    #[test]
    fn indefinite_metric_rejected_at_validation() {
        let s = "[manifold]\ndim = 2\n[metric]\ng_11 = 1\ng_22 = -1\n";
        assert!(matches!(parse_spec(s), Err(Error::NotPositiveDefinite { .. })));
    }
}
