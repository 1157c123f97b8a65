//! Problem files: a versioned `key: value` header followed by fenced matrix blocks.
//!
//! ~~~text
//! phimod-problem: 1
//! mode: mixed
//! p: 2
//! residue-degree: 1
//! torsion: 1
//! precision: 32
//! poly: 2 + u^2
//! coeffs: field 1
//! body: phimod
//! height: 1
//! ```matrix phi
//! 1 ; 0
//! 0 ; 2 + u^2
//! ```
//! ~~~
//!
//! Entries are sums of monomials `c*u^i` or `c*u^i*t^j`, where c is an integer or a bracketed
//! coordinate vector `[c0,c1,...]` in the coefficient ring's basis, and t is the π₀ generator of
//! an equal-characteristic base. Serialization is canonical, so serialize∘parse is the identity on
//! canonical files and parse∘serialize is the identity on problems.

use std::fmt::Write as _;

use crate::base::{make_base, BaseSpec, CoeffKind, CoeffRing, FrobeniusBase, Mat, Mode, PolySpec, Series};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "phimod-problem";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Body {
    Phimod,
    TorsionEtale,
    Tangent,
    Fiber,
    Breuil,
}

impl Body {
    const ALL: [(Body, &'static str); 5] = [
        (Body::Phimod, "phimod"),
        (Body::TorsionEtale, "torsion-etale"),
        (Body::Tangent, "tangent"),
        (Body::Fiber, "fiber"),
        (Body::Breuil, "breuil"),
    ];

    pub fn name(self) -> &'static str {
        Body::ALL.iter().find(|(b, _)| *b == self).expect("listed").1
    }

    fn parse(s: &str) -> Option<Body> {
        Body::ALL.iter().find(|(_, n)| *n == s).map(|(b, _)| *b)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Options {
    pub bound: Option<i64>,
    pub seed: Option<u64>,
    pub cutoff: Option<i64>,
    pub extension: Option<usize>,
    pub pole: Option<i64>,
    pub degree: Option<i64>,
    pub lift_to: Option<CoeffKind>,
}

/// One series as its nonzero terms (u-degree, ring coordinates), ascending.
pub type Entry = Vec<(i64, Vec<u64>)>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixBlock {
    pub name: String,
    pub rows: Vec<Vec<Entry>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemFile {
    pub spec: BaseSpec,
    pub body: Body,
    pub height: u32,
    pub options: Options,
    pub matrices: Vec<MatrixBlock>,
}

impl ProblemFile {
    pub fn base(&self) -> Result<FrobeniusBase> {
        make_base(self.spec.clone())
    }

    pub fn block(&self, name: &str) -> Option<&MatrixBlock> {
        self.matrices.iter().find(|m| m.name == name)
    }

    pub fn matrix(&self, base: &FrobeniusBase, name: &str) -> Result<Mat> {
        let block = self.block(name).ok_or_else(|| Error::pre(format!("problem has no matrix named {name}")))?;
        Ok(block_to_mat(base, block))
    }

    pub fn matrix_opt(&self, base: &FrobeniusBase, name: &str) -> Option<Mat> {
        self.block(name).map(|b| block_to_mat(base, b))
    }

    /// Replaces (or appends) a matrix block from a matrix over the problem's base.
    pub fn set_matrix(&mut self, name: &str, m: &Mat) {
        let block = MatrixBlock { name: name.into(), rows: (0..m.rows()).map(|i| (0..m.cols()).map(|j| m.get(i, j).terms()).collect()).collect() };
        match self.matrices.iter_mut().find(|b| b.name == name) {
            Some(b) => *b = block,
            None => self.matrices.push(block),
        }
    }
}

fn block_to_mat(base: &FrobeniusBase, block: &MatrixBlock) -> Mat {
    Mat::from_rows(
        block
            .rows
            .iter()
            .map(|r| r.iter().map(|e| e.iter().fold(base.zero(), |acc, (d, c)| acc.add(&base.monomial(*d, c)))).collect())
            .collect(),
    )
}

fn perr(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, col, msg: msg.into() }
}

/// Splits at `sep` outside brackets, returning (byte offset, piece).
fn split_top(s: &str, sep: char) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push((start, &s[start..i]));
                start = i + ch.len_utf8();
            }
            _ => {}
        }
    }
    out.push((start, &s[start..]));
    out
}

fn trimmed(offset: usize, s: &str) -> (usize, &str) {
    let lead = s.len() - s.trim_start().len();
    (offset + lead, s.trim())
}

/// A parsed monomial: coefficient coordinates (as signed integers), u-degree, t-degree.
struct Mono {
    coeff: Vec<i64>,
    u: i64,
    t: usize,
}

fn parse_int<T: std::str::FromStr>(s: &str, line: usize, col: usize) -> Result<T> {
    s.trim().parse().map_err(|_| perr(line, col, format!("expected an integer, found `{}`", s.trim())))
}

fn parse_entry(text: &str, line: usize, col0: usize) -> Result<Vec<Mono>> {
    let mut out = Vec::new();
    let (c, t) = trimmed(col0, text);
    if t.is_empty() {
        return Err(perr(line, c, "empty entry"));
    }
    for (off, term) in split_top(text, '+') {
        let (tc, term) = trimmed(col0 + off, term);
        if term.is_empty() {
            return Err(perr(line, tc, "empty term"));
        }
        let mut mono = Mono { coeff: vec![1], u: 0, t: 0 };
        let mut sign = 1i64;
        let mut seen_coeff = false;
        for (foff, factor) in split_top(term, '*') {
            let (fc, mut f) = trimmed(tc + foff, factor);
            if let Some(rest) = f.strip_prefix('-') {
                sign = -sign;
                f = rest.trim_start();
            }
            if let Some(exp) = f.strip_prefix("u") {
                mono.u += match exp.strip_prefix('^') {
                    Some(k) => parse_int::<i64>(k, line, fc + 2)?,
                    None if exp.is_empty() => 1,
                    None => return Err(perr(line, fc, format!("bad factor `{f}`"))),
                };
            } else if let Some(exp) = f.strip_prefix("t") {
                mono.t += match exp.strip_prefix('^') {
                    Some(k) => parse_int::<usize>(k, line, fc + 2)?,
                    None if exp.is_empty() => 1,
                    None => return Err(perr(line, fc, format!("bad factor `{f}`"))),
                };
            } else if seen_coeff {
                return Err(perr(line, fc, "more than one coefficient in a term"));
            } else if let Some(inner) = f.strip_prefix('[') {
                let inner = inner.strip_suffix(']').ok_or_else(|| perr(line, fc, "unterminated coordinate vector"))?;
                mono.coeff = split_top(inner, ',').into_iter().map(|(o, x)| parse_int(x, line, fc + 1 + o)).collect::<Result<_>>()?;
                seen_coeff = true;
            } else {
                mono.coeff = vec![parse_int(f, line, fc)?];
                seen_coeff = true;
            }
        }
        mono.coeff.iter_mut().for_each(|c| *c *= sign);
        out.push(mono);
    }
    Ok(out)
}

fn entry_to_terms(base: &FrobeniusBase, monos: &[Mono], line: usize, col: usize) -> Result<Entry> {
    let ring = base.ring();
    let m = ring.modulus() as i64;
    let mut s = base.zero();
    for mono in monos {
        if mono.coeff.len() > ring.dim() {
            return Err(perr(line, col, format!("coordinate vector longer than the ring dimension {}", ring.dim())));
        }
        let mut c = ring.zero();
        for (k, &x) in mono.coeff.iter().enumerate() {
            c[k] = x.rem_euclid(m) as u64;
        }
        if mono.t > 0 {
            let v = ring.generator_named("t").ok_or_else(|| perr(line, col, "t appears but the base has no π₀ generator"))?;
            c = ring.mul(&c, &ring.pow(&ring.gen(v), mono.t as u64));
        }
        s = s.add(&base.monomial(mono.u, &c));
    }
    Ok(s.terms())
}

fn parse_poly(text: &str, line: usize, col: usize) -> Result<PolySpec> {
    let mut coeffs: Vec<Vec<i64>> = Vec::new();
    for mono in parse_entry(text, line, col)? {
        if mono.t > 0 || mono.u < 0 {
            return Err(perr(line, col, "polynomial terms must be c*u^i with i ≥ 0"));
        }
        let i = mono.u as usize;
        if coeffs.len() <= i {
            coeffs.resize(i + 1, vec![0]);
        }
        let slot = &mut coeffs[i];
        if slot.len() < mono.coeff.len() {
            slot.resize(mono.coeff.len(), 0);
        }
        for (k, x) in mono.coeff.iter().enumerate() {
            slot[k] += x;
        }
    }
    for c in &mut coeffs {
        while c.len() > 1 && c.last() == Some(&0) {
            c.pop();
        }
    }
    Ok(PolySpec(coeffs))
}

fn parse_coeffs(v: &str, line: usize, col: usize) -> Result<CoeffKind> {
    let parts: Vec<&str> = v.split_whitespace().collect();
    let num = |i: usize| -> Result<usize> { parts.get(i).ok_or_else(|| perr(line, col, "missing coefficient parameter"))?.parse().map_err(|_| perr(line, col, "bad coefficient parameter")) };
    let kind = match parts.first().copied() {
        Some("field") if parts.len() == 2 => CoeffKind::Field(num(1)?),
        Some("dual") if parts.len() == 2 => CoeffKind::Dual(num(1)?),
        Some("poly") if parts.len() == 3 => CoeffKind::Poly(num(1)?, num(2)?),
        _ => return Err(perr(line, col, format!("unknown coefficient kind `{v}` (field a | dual a | poly a bound)"))),
    };
    Ok(kind)
}

#[derive(Default)]
struct Header {
    mode: Option<Mode>,
    p_or_q: Option<u64>,
    residue_degree: Option<usize>,
    torsion: Option<u32>,
    precision: Option<i64>,
    poly: Option<PolySpec>,
    coeffs: Option<CoeffKind>,
    body: Option<Body>,
    height: Option<u32>,
    options: Options,
}

/// Command-line replacements for header values, applied before entries are normalized.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub precision: Option<i64>,
    pub torsion: Option<u32>,
}

pub fn parse(text: &str) -> Result<ProblemFile> {
    parse_with(text, &Overrides::default())
}

pub fn parse_with(text: &str, overrides: &Overrides) -> Result<ProblemFile> {
    let lines: Vec<&str> = text.lines().collect();
    let first = lines.first().ok_or_else(|| perr(1, 1, "empty problem file"))?;
    match first.split_once(':') {
        Some((k, v)) if k.trim() == MAGIC => {
            let version: u32 = parse_int(v, 1, k.len() + 2)?;
            if version != FORMAT_VERSION {
                return Err(perr(1, k.len() + 2, format!("unsupported format version {version}; this build reads version {FORMAT_VERSION}")));
            }
        }
        _ => return Err(perr(1, 1, format!("expected `{MAGIC}: {FORMAT_VERSION}` on the first line"))),
    }
    let mut h = Header::default();
    let mut seen: Vec<&str> = Vec::new();
    let mut poly_at = (0, 0);
    let mut raw_blocks: Vec<(String, usize, Vec<(usize, &str)>)> = Vec::new();
    let mut i = 1;
    while i < lines.len() {
        let ln = i + 1;
        let line = lines[i];
        i += 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if let Some(rest) = t.strip_prefix("```") {
            let mut words = rest.split_whitespace();
            if words.next() != Some("matrix") {
                return Err(perr(ln, 4, "expected a `matrix NAME` block"));
            }
            let name = words.next().ok_or_else(|| perr(ln, 11, "matrix block needs a name"))?.to_string();
            if words.next().is_some() {
                return Err(perr(ln, 1, "unexpected text after the matrix name"));
            }
            if raw_blocks.iter().any(|b| b.0 == name) {
                return Err(perr(ln, 11, format!("duplicate matrix `{name}`")));
            }
            let mut rows = Vec::new();
            loop {
                let Some(row) = lines.get(i) else {
                    return Err(perr(ln, 1, format!("matrix `{name}` is not closed")));
                };
                i += 1;
                if row.trim() == "```" {
                    break;
                }
                rows.push((i, *row));
            }
            raw_blocks.push((name, ln, rows));
            continue;
        }
        if !raw_blocks.is_empty() {
            return Err(perr(ln, 1, "header fields must precede matrix blocks"));
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(perr(ln, 1, "expected `key: value`"));
        };
        let k = key.trim();
        let kcol = key.len() - key.trim_start().len() + 1;
        let vcol = key.len() + 2 + (value.len() - value.trim_start().len());
        let v = value.trim();
        if seen.contains(&k) {
            return Err(perr(ln, kcol, format!("duplicate field `{k}`")));
        }
        match k {
            "mode" => {
                h.mode = Some(match v {
                    "mixed" => Mode::Mixed,
                    "equichar" => Mode::Equichar,
                    _ => return Err(perr(ln, vcol, format!("mode must be mixed or equichar, found `{v}`"))),
                })
            }
            "p" | "q" => {
                if seen.contains(&"p") || seen.contains(&"q") {
                    return Err(perr(ln, kcol, "give exactly one of p and q"));
                }
                h.p_or_q = Some(parse_int(v, ln, vcol)?)
            }
            "residue-degree" => h.residue_degree = Some(parse_int(v, ln, vcol)?),
            "torsion" => h.torsion = Some(parse_int(v, ln, vcol)?),
            "precision" => h.precision = Some(parse_int(v, ln, vcol)?),
            "poly" | "u0" => {
                if seen.contains(&"poly") || seen.contains(&"u0") {
                    return Err(perr(ln, kcol, "give exactly one of poly and u0"));
                }
                poly_at = (ln, kcol);
                h.poly = Some(parse_poly(v, ln, vcol)?)
            }
            "coeffs" => h.coeffs = Some(parse_coeffs(v, ln, vcol)?),
            "body" => h.body = Some(Body::parse(v).ok_or_else(|| perr(ln, vcol, format!("unknown body `{v}`")))?),
            "height" => h.height = Some(parse_int(v, ln, vcol)?),
            "bound" => h.options.bound = Some(parse_int(v, ln, vcol)?),
            "seed" => h.options.seed = Some(parse_int(v, ln, vcol)?),
            "cutoff" => h.options.cutoff = Some(parse_int(v, ln, vcol)?),
            "extension" => h.options.extension = Some(parse_int(v, ln, vcol)?),
            "pole" => h.options.pole = Some(parse_int(v, ln, vcol)?),
            "degree" => h.options.degree = Some(parse_int(v, ln, vcol)?),
            "lift-to" => h.options.lift_to = Some(parse_coeffs(v, ln, vcol)?),
            _ => return Err(perr(ln, kcol, format!("unknown field `{k}`"))),
        }
        seen.push(k);
    }
    let need = |name: &str| perr(lines.len(), 1, format!("missing field `{name}`"));
    let mode = h.mode.ok_or_else(|| need("mode"))?;
    let poly_key = if mode == Mode::Mixed { "poly" } else { "u0" };
    if poly_at.0 > 0 && !seen.contains(&poly_key) {
        return Err(perr(poly_at.0, poly_at.1, format!("{mode} bases take `{poly_key}`")));
    }
    let pq_key = if mode == Mode::Mixed { "p" } else { "q" };
    if (seen.contains(&"p") || seen.contains(&"q")) && !seen.contains(&pq_key) {
        return Err(need(pq_key));
    }
    let spec = BaseSpec {
        mode,
        p_or_q: h.p_or_q.ok_or_else(|| need(pq_key))?,
        residue_degree: h.residue_degree.ok_or_else(|| need("residue-degree"))?,
        torsion_level: overrides.torsion.or(h.torsion).ok_or_else(|| need("torsion"))?,
        precision: overrides.precision.or(h.precision).ok_or_else(|| need("precision"))?,
        poly: h.poly.ok_or_else(|| need(poly_key))?,
        coeffs: h.coeffs.ok_or_else(|| need("coeffs"))?,
    };
    let base = make_base(spec.clone())?;
    let mut matrices = Vec::new();
    for (name, ln, rows) in raw_blocks {
        let mut parsed = Vec::new();
        for (rl, row) in rows {
            let mut entries = Vec::new();
            for (off, e) in split_top(row, ';') {
                let monos = parse_entry(e, rl, off + 1)?;
                entries.push(entry_to_terms(&base, &monos, rl, off + 1)?);
            }
            if parsed.first().is_some_and(|r: &Vec<Entry>| r.len() != entries.len()) {
                return Err(perr(rl, 1, format!("row length differs in matrix `{name}`")));
            }
            parsed.push(entries);
        }
        if parsed.is_empty() {
            return Err(perr(ln, 1, format!("matrix `{name}` has no rows")));
        }
        matrices.push(MatrixBlock { name, rows: parsed });
    }
    Ok(ProblemFile {
        spec,
        body: h.body.ok_or_else(|| need("body"))?,
        height: h.height.ok_or_else(|| need("height"))?,
        options: h.options,
        matrices,
    })
}

fn write_coeff(out: &mut String, c: &[i64]) {
    if c.iter().skip(1).all(|&x| x == 0) {
        write!(out, "{}", c.first().copied().unwrap_or(0)).unwrap();
    } else {
        let parts: Vec<String> = c.iter().map(i64::to_string).collect();
        write!(out, "[{}]", parts.join(",")).unwrap();
    }
}

/// (stride, count) of the π₀ powers when t is the only nilpotent generator, so coordinate
/// vectors split into field coefficients of t^0, t^1, ...
fn t_style(ring: &CoeffRing) -> Option<(usize, usize)> {
    let v = ring.generator_named("t")?;
    if ring.generators().iter().any(|g| g.name == "eps" || g.name == "T") {
        return None;
    }
    let stride = ring.stride(v);
    Some((stride, ring.dim() / stride))
}

/// Terms (u-degree, coefficient, t-power), already in canonical order.
fn write_terms(out: &mut String, terms: &[(i64, Vec<i64>, usize)]) {
    if terms.is_empty() {
        out.push('0');
        return;
    }
    for (k, (deg, c, tp)) in terms.iter().enumerate() {
        if k > 0 {
            out.push_str(" + ");
        }
        let mut factors = Vec::new();
        let unit = c.first() == Some(&1) && c.iter().skip(1).all(|&x| x == 0);
        if !unit || (*deg == 0 && *tp == 0) {
            let mut cs = String::new();
            write_coeff(&mut cs, c);
            factors.push(cs);
        }
        match *deg {
            0 => {}
            1 => factors.push("u".into()),
            d => factors.push(format!("u^{d}")),
        }
        match *tp {
            0 => {}
            1 => factors.push("t".into()),
            j => factors.push(format!("t^{j}")),
        }
        out.push_str(&factors.join("*"));
    }
}

fn entry_terms(e: &Entry, style: Option<(usize, usize)>) -> Vec<(i64, Vec<i64>, usize)> {
    let mut out = Vec::new();
    for (d, c) in e {
        let c: Vec<i64> = c.iter().map(|&x| x as i64).collect();
        match style {
            Some((stride, count)) => {
                for j in 0..count {
                    let chunk = &c[j * stride..(j + 1) * stride];
                    if chunk.iter().any(|&x| x != 0) {
                        out.push((*d, chunk.to_vec(), j));
                    }
                }
            }
            None => out.push((*d, c, 0)),
        }
    }
    out
}

fn format_entry_styled(e: &Entry, style: Option<(usize, usize)>) -> String {
    let mut s = String::new();
    write_terms(&mut s, &entry_terms(e, style));
    s
}

pub fn format_series(s: &Series) -> String {
    format_entry_styled(&s.terms(), t_style(s.ring()))
}

/// Matrix rows as `a ; b` lines.
pub fn format_matrix(m: &Mat) -> Vec<String> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| format_series(m.get(i, j))).collect::<Vec<_>>().join(" ; ")).collect()
}

fn format_poly(p: &PolySpec) -> String {
    let terms: Vec<(i64, Vec<i64>, usize)> =
        p.0.iter().enumerate().filter(|(_, c)| c.iter().any(|&x| x != 0)).map(|(i, c)| (i as i64, c.clone(), 0)).collect();
    let mut s = String::new();
    write_terms(&mut s, &terms);
    s
}

pub fn serialize(pf: &ProblemFile) -> String {
    let style = make_base(pf.spec.clone()).ok().and_then(|b| t_style(b.ring()));
    let mut out = String::new();
    let s = &pf.spec;
    writeln!(out, "{MAGIC}: {FORMAT_VERSION}").unwrap();
    writeln!(out, "mode: {}", s.mode).unwrap();
    writeln!(out, "{}: {}", if s.mode == Mode::Mixed { "p" } else { "q" }, s.p_or_q).unwrap();
    writeln!(out, "residue-degree: {}", s.residue_degree).unwrap();
    writeln!(out, "torsion: {}", s.torsion_level).unwrap();
    writeln!(out, "precision: {}", s.precision).unwrap();
    writeln!(out, "{}: {}", if s.mode == Mode::Mixed { "poly" } else { "u0" }, format_poly(&s.poly)).unwrap();
    writeln!(out, "coeffs: {}", s.coeffs).unwrap();
    writeln!(out, "body: {}", pf.body.name()).unwrap();
    writeln!(out, "height: {}", pf.height).unwrap();
    let o = &pf.options;
    let opt = |out: &mut String, k: &str, v: Option<String>| {
        if let Some(v) = v {
            writeln!(out, "{k}: {v}").unwrap();
        }
    };
    opt(&mut out, "bound", o.bound.map(|x| x.to_string()));
    opt(&mut out, "seed", o.seed.map(|x| x.to_string()));
    opt(&mut out, "cutoff", o.cutoff.map(|x| x.to_string()));
    opt(&mut out, "extension", o.extension.map(|x| x.to_string()));
    opt(&mut out, "pole", o.pole.map(|x| x.to_string()));
    opt(&mut out, "degree", o.degree.map(|x| x.to_string()));
    opt(&mut out, "lift-to", o.lift_to.as_ref().map(|x| x.to_string()));
    for m in &pf.matrices {
        writeln!(out, "```matrix {}", m.name).unwrap();
        for row in &m.rows {
            writeln!(out, "{}", row.iter().map(|e| format_entry_styled(e, style)).collect::<Vec<_>>().join(" ; ")).unwrap();
        }
        writeln!(out, "```").unwrap();
    }
    out
}
