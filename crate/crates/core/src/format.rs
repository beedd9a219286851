//! Plain-text interchange format.
//!
//! A document is a sequence of blocks. A block starts with a header line
//! `name:` (optionally followed by an inline argument) and continues with
//! whitespace-separated entry lines. `#` starts a comment.
//!
//! ```text
//! units:            # or `units: unnormalized`
//!   x0 1/2
//!   x1 1/2
//! arrows:           # id src tgt
//!   e00 x0 x0
//!   ...
//! compose:          # g h gh, for every composable pair
//! inverse:          # g g^-1
//! unit_arrows:      # x e_x
//! cocycle:          # g h re im  |  g h p/q  (= e^{2 pi i p/q}); omitted pairs are 1
//! ```
//!
//! Partial actions use `group: <spec>` (or `elements:` plus a `table:` of
//! `a b ab` rows), `units:` and `maps:` with rows `g x σ_g(x)`.
//! Deaconu–Renault systems use `units:`, `sigma:` with rows `x σ(x)` and `bound: N`.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use num_rational::Ratio;
use thiserror::Error;

use crate::cocycle::{validate_cocycle_with, Cocycle, CocycleError, IDENTITY_TOLERANCE, MODULUS_TOLERANCE};
use crate::constructors::{ActionError, DeaconuRenaultSystem, FiniteGroupTable, PartialActionSystem};
use crate::groupoid::{Arrow, GroupoidError, Mass, MeasuredGroupoid, RawGroupoid, UnitSpace};
use crate::phase::Phase;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing block {0:?}")]
    MissingBlock(&'static str),
    #[error("validation failed: {0}")]
    Groupoid(#[from] GroupoidError),
    #[error("{}{err}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Cocycle { line: Option<usize>, err: CocycleError },
    #[error("{0}")]
    Action(#[from] ActionError),
    #[error("{0}")]
    Dr(String),
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, message: message.into() }
}

#[derive(Debug, Clone)]
struct Block {
    name: String,
    arg: Option<String>,
    line: usize,
    rows: Vec<(usize, Vec<String>)>,
}

fn blocks(text: &str) -> Result<Vec<Block>, FormatError> {
    let mut out: Vec<Block> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let first = content.split_whitespace().next().unwrap_or("");
        if let Some(name) = first.strip_suffix(':') {
            if out.iter().any(|b| b.name == name) {
                return Err(syntax(line, format!("block {name:?} appears twice")));
            }
            let rest = content[first.len()..].trim();
            out.push(Block {
                name: name.to_string(),
                arg: (!rest.is_empty()).then(|| rest.to_string()),
                line,
                rows: Vec::new(),
            });
            continue;
        }
        match out.last_mut() {
            Some(b) => b.rows.push((line, content.split_whitespace().map(String::from).collect())),
            None => return Err(syntax(line, "entry outside of any block")),
        }
    }
    Ok(out)
}

fn find<'a>(bs: &'a [Block], name: &str) -> Option<&'a Block> {
    bs.iter().find(|b| b.name == name)
}

fn require<'a>(bs: &'a [Block], name: &'static str) -> Result<&'a Block, FormatError> {
    find(bs, name).ok_or(FormatError::MissingBlock(name))
}

fn check_blocks(bs: &[Block], allowed: &[&str]) -> Result<(), FormatError> {
    for b in bs {
        if !allowed.contains(&b.name.as_str()) {
            return Err(syntax(b.line, format!("unknown block {:?}", b.name)));
        }
    }
    Ok(())
}

fn arity(line: usize, row: &[String], n: &[usize], what: &str) -> Result<(), FormatError> {
    if n.contains(&row.len()) {
        Ok(())
    } else {
        Err(syntax(line, format!("{what} entry needs {n:?} fields, got {}", row.len())))
    }
}

struct Names {
    index: HashMap<String, usize>,
    kind: &'static str,
}

impl Names {
    fn new(names: &[String], kind: &'static str) -> Self {
        Names { index: names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect(), kind }
    }

    fn get(&self, line: usize, name: &str) -> Result<usize, FormatError> {
        self.index.get(name).copied().ok_or_else(|| syntax(line, format!("unknown {} {name:?}", self.kind)))
    }
}

fn parse_units(b: &Block) -> Result<UnitSpace, FormatError> {
    let unnormalized = match b.arg.as_deref() {
        None => false,
        Some("unnormalized") => true,
        Some(other) => return Err(syntax(b.line, format!("unknown units option {other:?}"))),
    };
    let mut names = Vec::new();
    let mut masses = Vec::new();
    for (line, row) in &b.rows {
        arity(*line, row, &[2], "units")?;
        let m: Mass = row[1].parse().map_err(|e: GroupoidError| syntax(*line, e.to_string()))?;
        names.push(row[0].clone());
        masses.push(m);
    }
    Ok(UnitSpace { names, masses, unnormalized })
}

fn write_units(out: &mut String, u: &UnitSpace) {
    out.push_str(if u.unnormalized { "units: unnormalized\n" } else { "units:\n" });
    for (n, m) in u.names.iter().zip(&u.masses) {
        let _ = writeln!(out, "  {n} {m}");
    }
}

fn parse_phase(line: usize, fields: &[String]) -> Result<Phase, FormatError> {
    let bad = |s: &str| syntax(line, format!("cannot parse phase {s:?}"));
    match fields {
        [t] => {
            let (p, q) = t.split_once('/').ok_or_else(|| bad(t))?;
            let p: i64 = p.parse().map_err(|_| bad(t))?;
            let q: i64 = q.parse().map_err(|_| bad(t))?;
            if q <= 0 {
                return Err(bad(t));
            }
            Ok(Phase::root(p, q))
        }
        [re, im] => {
            let re: f64 = re.parse().map_err(|_| bad(re))?;
            let im: f64 = im.parse().map_err(|_| bad(im))?;
            Ok(Phase::from_complex(Complex64::new(re, im)))
        }
        _ => Err(syntax(line, "phase needs `re im` or `p/q`")),
    }
}

fn write_phase(p: Phase) -> String {
    match p {
        Phase::Root(t) => format!("{}/{}", t.numer(), t.denom()),
        Phase::Float(z) => format!("{:?} {:?}", z.re, z.im),
    }
}

/// A groupoid file, optionally with a cocycle.
#[derive(Debug, Clone)]
pub struct GroupoidDocument {
    pub groupoid: MeasuredGroupoid,
    pub cocycle: Option<Cocycle>,
}

/// Parse a groupoid file. Cocycle values are checked at the given tolerances.
pub fn parse_groupoid_with(text: &str, modulus_tol: f64, identity_tol: f64) -> Result<GroupoidDocument, FormatError> {
    let bs = blocks(text)?;
    check_blocks(&bs, &["units", "arrows", "compose", "inverse", "unit_arrows", "cocycle"])?;
    let units = parse_units(require(&bs, "units")?)?;
    let unit_names = Names::new(&units.names, "unit");

    let mut arrows = Vec::new();
    for (line, row) in &require(&bs, "arrows")?.rows {
        arity(*line, row, &[3], "arrows")?;
        arrows.push(Arrow {
            name: row[0].clone(),
            src: unit_names.get(*line, &row[1])?,
            tgt: unit_names.get(*line, &row[2])?,
        });
    }
    let names: Vec<String> = arrows.iter().map(|a| a.name.clone()).collect();
    let arrow_names = Names::new(&names, "arrow");

    let mut compose = Vec::new();
    for (line, row) in &require(&bs, "compose")?.rows {
        arity(*line, row, &[3], "compose")?;
        compose.push((
            arrow_names.get(*line, &row[0])?,
            arrow_names.get(*line, &row[1])?,
            arrow_names.get(*line, &row[2])?,
        ));
    }
    let mut inverse = Vec::new();
    for (line, row) in &require(&bs, "inverse")?.rows {
        arity(*line, row, &[2], "inverse")?;
        inverse.push((arrow_names.get(*line, &row[0])?, arrow_names.get(*line, &row[1])?));
    }
    let mut unit_arrows = Vec::new();
    for (line, row) in &require(&bs, "unit_arrows")?.rows {
        arity(*line, row, &[2], "unit_arrows")?;
        unit_arrows.push((unit_names.get(*line, &row[0])?, arrow_names.get(*line, &row[1])?));
    }
    let groupoid = RawGroupoid { units, arrows, compose, inverse, unit_arrows }.validate()?;

    let cocycle = match find(&bs, "cocycle") {
        None => None,
        Some(b) => {
            let mut raw = Vec::new();
            let mut lines = HashMap::new();
            for (line, row) in &b.rows {
                arity(*line, row, &[3, 4], "cocycle")?;
                let g = arrow_names.get(*line, &row[0])?;
                let h = arrow_names.get(*line, &row[1])?;
                raw.push((g, h, parse_phase(*line, &row[2..])?));
                lines.insert((row[0].clone(), row[1].clone()), *line);
            }
            let c = validate_cocycle_with(&groupoid, &raw, modulus_tol, identity_tol).map_err(|err| {
                let line = match &err {
                    CocycleError::NotComposable(a, b) | CocycleError::NotUnitModulus(a, b, _) => {
                        lines.get(&(a.clone(), b.clone())).copied()
                    }
                    _ => None,
                };
                FormatError::Cocycle { line, err }
            })?;
            Some(c)
        }
    };
    Ok(GroupoidDocument { groupoid, cocycle })
}

pub fn parse_groupoid(text: &str) -> Result<GroupoidDocument, FormatError> {
    parse_groupoid_with(text, MODULUS_TOLERANCE, IDENTITY_TOLERANCE)
}

/// Serialize a groupoid; the cocycle block lists only values different from `1`.
pub fn write_groupoid(g: &MeasuredGroupoid, cocycle: Option<&Cocycle>) -> String {
    let raw = g.to_raw();
    let name = |a: usize| raw.arrows[a].name.as_str();
    let mut out = String::new();
    write_units(&mut out, &raw.units);
    out.push_str("arrows:\n");
    for a in &raw.arrows {
        let _ = writeln!(out, "  {} {} {}", a.name, raw.units.names[a.src], raw.units.names[a.tgt]);
    }
    out.push_str("compose:\n");
    for &(a, b, c) in &raw.compose {
        let _ = writeln!(out, "  {} {} {}", name(a), name(b), name(c));
    }
    out.push_str("inverse:\n");
    for &(a, b) in &raw.inverse {
        let _ = writeln!(out, "  {} {}", name(a), name(b));
    }
    out.push_str("unit_arrows:\n");
    for &(x, a) in &raw.unit_arrows {
        let _ = writeln!(out, "  {} {}", raw.units.names[x], name(a));
    }
    if let Some(c) = cocycle {
        out.push_str("cocycle:\n");
        for (a, b, p) in c.entries(g) {
            if !matches!(p, Phase::Root(t) if t == Ratio::from_integer(0)) {
                let _ = writeln!(out, "  {} {} {}", name(a), name(b), write_phase(p));
            }
        }
    }
    out
}

/// Parse a partial action file.
pub fn parse_partial_action(text: &str) -> Result<PartialActionSystem, FormatError> {
    let bs = blocks(text)?;
    check_blocks(&bs, &["group", "elements", "table", "units", "maps"])?;
    let group = match (find(&bs, "group"), find(&bs, "elements"), find(&bs, "table")) {
        (Some(b), None, None) => {
            let spec = b.arg.as_deref().ok_or_else(|| syntax(b.line, "group needs a spec such as `cyclic 3`"))?;
            FiniteGroupTable::from_spec(spec).map_err(|e| syntax(b.line, e.to_string()))?
        }
        (None, Some(e), Some(t)) => {
            let names: Vec<String> = e
                .arg
                .as_deref()
                .unwrap_or("")
                .split_whitespace()
                .map(String::from)
                .chain(e.rows.iter().flat_map(|(_, r)| r.iter().cloned()))
                .collect();
            let idx = Names::new(&names, "group element");
            if idx.index.len() != names.len() {
                return Err(syntax(e.line, "duplicate group element"));
            }
            let n = names.len();
            let mut mul = vec![vec![usize::MAX; n]; n];
            for (line, row) in &t.rows {
                arity(*line, row, &[3], "table")?;
                let (a, b, c) = (idx.get(*line, &row[0])?, idx.get(*line, &row[1])?, idx.get(*line, &row[2])?);
                mul[a][b] = c;
            }
            if mul.iter().flatten().any(|&v| v == usize::MAX) {
                return Err(syntax(t.line, "multiplication table is incomplete"));
            }
            FiniteGroupTable::new(names, mul).map_err(|e| syntax(t.line, e.to_string()))?
        }
        _ => return Err(FormatError::MissingBlock("group")),
    };
    let space = parse_units(require(&bs, "units")?)?;
    let unit_names = Names::new(&space.names, "unit");
    let elements = Names::new(&group.names, "group element");
    let mut maps = vec![std::collections::BTreeMap::new(); group.order()];
    for (line, row) in &require(&bs, "maps")?.rows {
        arity(*line, row, &[3], "maps")?;
        let g = elements.get(*line, &row[0])?;
        let x = unit_names.get(*line, &row[1])?;
        let y = unit_names.get(*line, &row[2])?;
        if maps[g].insert(x, y).is_some() {
            return Err(syntax(*line, format!("σ_{} defined twice at {}", row[0], row[1])));
        }
    }
    let p = PartialActionSystem { group, space, maps };
    p.validate()?;
    Ok(p)
}

pub fn write_partial_action(p: &PartialActionSystem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "elements: {}", p.group.names.join(" "));
    out.push_str("table:\n");
    for a in 0..p.group.order() {
        for b in 0..p.group.order() {
            let _ = writeln!(out, "  {} {} {}", p.group.names[a], p.group.names[b], p.group.names[p.group.op(a, b)]);
        }
    }
    write_units(&mut out, &p.space);
    out.push_str("maps:\n");
    for (g, m) in p.maps.iter().enumerate() {
        for (&x, &y) in m {
            let _ = writeln!(out, "  {} {} {}", p.group.names[g], p.space.names[x], p.space.names[y]);
        }
    }
    out
}

/// Parse a Deaconu–Renault file.
pub fn parse_dr(text: &str) -> Result<DeaconuRenaultSystem, FormatError> {
    let bs = blocks(text)?;
    check_blocks(&bs, &["units", "sigma", "bound"])?;
    let space = parse_units(require(&bs, "units")?)?;
    let names = Names::new(&space.names, "unit");
    let mut sigma = vec![None; space.len()];
    let sb = require(&bs, "sigma")?;
    for (line, row) in &sb.rows {
        arity(*line, row, &[2], "sigma")?;
        let x = names.get(*line, &row[0])?;
        if sigma[x].replace(names.get(*line, &row[1])?).is_some() {
            return Err(syntax(*line, format!("sigma defined twice at {}", row[0])));
        }
    }
    let sigma = sigma
        .into_iter()
        .enumerate()
        .map(|(x, s)| s.ok_or_else(|| syntax(sb.line, format!("sigma undefined at {}", space.names[x]))))
        .collect::<Result<Vec<_>, _>>()?;
    let bb = require(&bs, "bound")?;
    let bound = bb
        .arg
        .as_deref()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| syntax(bb.line, "bound needs a positive integer"))?;
    let d = DeaconuRenaultSystem { space, sigma, bound };
    d.validate().map_err(FormatError::Dr)?;
    Ok(d)
}

pub fn write_dr(d: &DeaconuRenaultSystem) -> String {
    let mut out = String::new();
    write_units(&mut out, &d.space);
    out.push_str("sigma:\n");
    for (x, &y) in d.sigma.iter().enumerate() {
        let _ = writeln!(out, "  {} {}", d.space.names[x], d.space.names[y]);
    }
    let _ = writeln!(out, "bound: {}", d.bound);
    out
}

/// Basis as one line of arrow ids per block.
pub fn write_basis(g: &MeasuredGroupoid, basis: &crate::basis::Basis) -> String {
    let mut out = String::from("basis:\n");
    for b in &basis.blocks {
        let _ = writeln!(out, "  {}", b.arrows().names(g).join(" "));
    }
    out
}
