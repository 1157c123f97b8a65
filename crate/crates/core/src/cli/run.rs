//! Commands on problem files, producing ordered reports.

use std::fmt::Write as _;

use crate::base::EXACT;
use crate::base::{CoeffKind, Mat};
use crate::breuil::{build_breuil, check_breuil_axioms, describe, monodromy_n};
use crate::deform::{absorb, cokernel_length, lift_square_zero, tangent_index, TangentProblem};
use crate::error::{Error, Result};
use crate::moduli::{classify, enumerate_fiber, fiber_graph, FiberCondition, FiberGraph, MoveBounds};
use crate::phimod::{dual_height, height_le, is_isomorphic, Height, PhiModule};
use crate::prolong::EtaleTorsionModule;

use super::format::{format_matrix, ProblemFile};

pub const COMMANDS: [&str; 10] =
    ["check-height", "dual", "prolong", "tangent", "absorb-demo", "classify", "fiber", "fiber-graph", "breuil", "lift"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Kv,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Item {
    Field(String, String),
    Block(String, Vec<String>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    items: Vec<Item>,
    /// Node/edge list for fiber-graph.
    pub graph: Option<String>,
}

impl Report {
    fn field(&mut self, k: &str, v: impl ToString) {
        self.items.push(Item::Field(k.into(), v.to_string()));
    }

    fn block(&mut self, k: &str, lines: Vec<String>) {
        self.items.push(Item::Block(k.into(), lines));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.items.iter().find_map(|i| match i {
            Item::Field(k, v) if k == key => Some(v.as_str()),
            _ => None,
        })
    }

    pub fn render(&self, fmt: OutputFormat) -> String {
        let mut out = String::new();
        for item in &self.items {
            match (item, fmt) {
                (Item::Field(k, v), OutputFormat::Text) => writeln!(out, "{k}: {v}").unwrap(),
                (Item::Field(k, v), OutputFormat::Kv) => writeln!(out, "{k}={v}").unwrap(),
                (Item::Block(k, lines), OutputFormat::Text) => {
                    writeln!(out, "```{k}").unwrap();
                    lines.iter().for_each(|l| writeln!(out, "{l}").unwrap());
                    writeln!(out, "```").unwrap();
                }
                (Item::Block(k, lines), OutputFormat::Kv) => {
                    for (i, l) in lines.iter().enumerate() {
                        writeln!(out, "{k}[{i}]={l}").unwrap();
                    }
                }
            }
        }
        out
    }
}

fn precision_str(p: i64) -> String {
    if p >= EXACT {
        "exact".into()
    } else {
        p.to_string()
    }
}

/// 64-bit FNV-1a, stable across platforms and releases.
fn digest(lines: &[String]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in lines.join("\n").bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

fn phimod(pf: &ProblemFile) -> Result<PhiModule> {
    let base = pf.base()?;
    PhiModule::new(&base, pf.matrix(&base, "phi")?)
}

fn tangent_problem(pf: &ProblemFile) -> Result<TangentProblem> {
    let base = pf.base()?;
    let tp = TangentProblem::new(&base, &pf.matrix(&base, "alpha")?, pf.height)?;
    match pf.options.cutoff {
        Some(c) => tp.with_cutoff(c),
        None => Ok(tp),
    }
}

fn fiber_module(pf: &ProblemFile) -> Result<EtaleTorsionModule> {
    let base = pf.base()?;
    EtaleTorsionModule::new(&base, &pf.matrix(&base, "ambient")?, pf.height)
}

pub fn run(command: &str, pf: &ProblemFile) -> Result<Report> {
    let mut r = Report::default();
    r.field("command", command);
    r.field("body", pf.body.name());
    match command {
        "check-height" => {
            let m = phimod(pf)?;
            let h = pf.height;
            match height_le(&m, h)? {
                Height::Within { witness } => {
                    r.field(&format!("height<={h}"), true);
                    r.field("witness-digest", digest(&format_matrix(&witness)));
                    r.field("u-precision", precision_str(witness.precision().min(m.matrix().precision())));
                }
                Height::Exceeds { obstruction } => {
                    r.field(&format!("height<={h}"), false);
                    r.field("obstruction", obstruction);
                    r.field("u-precision", precision_str(m.matrix().precision()));
                }
            }
        }
        "dual" => {
            let m = phimod(pf)?;
            let d = dual_height(&m, pf.height)?;
            r.block("dual", format_matrix(d.matrix()));
            r.field("u-precision", precision_str(d.matrix().precision()));
            if let Some(bound) = pf.options.bound {
                let dd = dual_height(&d, pf.height)?;
                r.field("double-dual-conjugate", is_isomorphic(&dd, &m, bound)?.found());
            }
        }
        "classify" => {
            let m = phimod(pf)?;
            let flags = classify(&m)?;
            let names = flags.names();
            r.field("flags", if names.is_empty() { "none".to_string() } else { names.join(",") });
            r.field("u-precision", precision_str(m.matrix().precision()));
        }
        "prolong" => {
            let m = EtaleTorsionModule::new(&pf.base()?, &pf.matrix(&pf.base()?, "phi")?, pf.height)?;
            let set = m.enumerate_prolongations()?;
            r.field("lattices", set.lattices.len());
            r.field("quotient-dim", set.quotient_dim);
            r.field("closed-under-sum-and-intersection", set.closed);
            r.block("max", vec![set.max.format()]);
            r.block("min", vec![set.min.format()]);
            r.block("all", set.lattices.iter().map(|l| l.format()).collect());
            r.field("u-precision", precision_str(m.phi().precision()));
        }
        "tangent" => {
            let tp = tangent_problem(pf)?;
            let idx = tangent_index(&tp)?;
            r.field("r", idx.r);
            r.field("c", idx.c);
            r.field("classes", idx.count);
            r.field("dimension", idx.dim);
            r.field("space-dim", idx.space_dim);
            r.field("image-dim", idx.image_dim);
            r.field("u-precision", precision_str(idx.precision));
        }
        "absorb-demo" => {
            let tp = tangent_problem(pf)?;
            let base = &tp.base;
            let n = tp.rank();
            let beta = pf.matrix_opt(base, "beta").unwrap_or_else(|| base.zero_mat(n, n));
            let x = pf.matrix_opt(base, "x").unwrap_or_else(|| Mat::scalar(&base.u_pow(tp.c), n));
            let tr = absorb(&tp, &beta, &x)?;
            r.field("steps", tr.partials.len());
            r.field("guaranteed-orders", join(tr.orders.iter()));
            r.field("residual-valuations", join(tr.valuations.iter().map(|v| v.map_or("zero".to_string(), |x| x.to_string()))));
            r.block("y", format_matrix(&tr.y));
            r.field("u-precision", precision_str(tr.precision));
        }
        "fiber" => {
            let m = fiber_module(pf)?;
            let pts = enumerate_fiber(&m, FiberCondition::Lagrangian)?;
            r.field("lagrangian points", pts.len());
            r.field("ordinary points", pts.iter().filter(|p| p.flags.ordinary).count());
            r.field("supersingular points", pts.iter().filter(|p| p.flags.supersingular).count());
            r.block("points", pts.iter().map(|p| format!("{} | {}", p.lattice.format(), p.flags.names().join(","))).collect());
            r.field("u-precision", precision_str(m.phi().precision()));
        }
        "fiber-graph" => {
            let base = pf.base()?;
            let ambient = pf.matrix(&base, "ambient")?;
            let bounds = MoveBounds { pole: pf.options.pole.unwrap_or(1), degree: pf.options.degree.unwrap_or(4) };
            let g = fiber_graph(&base, &ambient, pf.options.extension.unwrap_or(1), bounds)?;
            r.field("field-degree", g.field_degree);
            r.field("points", g.points.len());
            r.field("edges", g.edges.len());
            r.field("components", g.components.len());
            let ss = g.supersingular_components().len();
            r.field("supersingular components", ss);
            r.field(
                "supersingular connectivity",
                match ss {
                    0 => "no supersingular points found",
                    1 => "connected under generated moves",
                    _ => "not connected under generated moves",
                },
            );
            r.field("move-bounds", format!("pole<={} degree<{}", bounds.pole, bounds.degree));
            r.field("u-precision", precision_str(base.precision()));
            r.graph = Some(graph_file(&g));
        }
        "breuil" => {
            let m = phimod(pf)?;
            let bm = build_breuil(&m)?;
            let n = monodromy_n(&bm, 20)?;
            let rep = check_breuil_axioms(&bm, &n, pf.options.seed.unwrap_or(0));
            r.field("split-index", bm.split_index);
            r.field("iterations", n.trace.len());
            r.field("residual-u-orders", join(n.trace.iter().map(|t| t.u_order.map_or("zero".to_string(), |o| o.to_string()))));
            for c in &rep.checks {
                r.field(
                    &format!("axiom {}", c.name),
                    format!("{} ({} samples, u-precision {}, p-precision {})", if c.passed { "pass" } else { "fail" }, c.samples, c.u_precision, c.p_precision),
                );
            }
            r.block("N", describe(&bm, &n.matrix).into_iter().map(|row| row.join(" ; ")).collect());
            r.field("u-precision", bm.ring.len());
            r.field("p-precision", bm.precision);
        }
        "lift" => {
            let m = phimod(pf)?;
            let base = m.base();
            let a = match base.coeffs() {
                CoeffKind::Field(a) => *a,
                other => return Err(Error::pre(format!("lift needs field coefficients, found {other}"))),
            };
            let target = base.with_coeffs(pf.options.lift_to.clone().unwrap_or(CoeffKind::Dual(a)))?;
            let delta = pf.matrix_opt(base, "delta");
            let lifted = lift_square_zero(&m, &target, delta.as_ref())?;
            r.field("target", target.coeffs());
            r.block("lift", format_matrix(lifted.matrix()));
            if base.ring().torsion_exponent() == 1 {
                r.field("cokernel-length", cokernel_length(&m, pf.height)?);
                r.field("lift-cokernel-length", cokernel_length(&lifted, pf.height)?);
            }
            r.field("u-precision", precision_str(lifted.matrix().precision()));
        }
        other => return Err(Error::pre(format!("unknown command `{other}`; expected one of {}", COMMANDS.join(", ")))),
    }
    Ok(r)
}

fn join<T: ToString>(it: impl Iterator<Item = T>) -> String {
    it.map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Node/edge list: a header, `node ID FLAGS` lines, then `edge FROM TO` lines.
pub fn graph_file(g: &FiberGraph) -> String {
    let mut out = String::new();
    writeln!(out, "# phimod fiber graph 1").unwrap();
    writeln!(out, "# node <id> <comma-separated flags>; edge <from> <to>").unwrap();
    writeln!(out, "nodes {} edges {}", g.points.len(), g.edges.len()).unwrap();
    for (i, p) in g.points.iter().enumerate() {
        let names = p.flags.names();
        writeln!(out, "node {i} {}", if names.is_empty() { "-".to_string() } else { names.join(",") }).unwrap();
    }
    for e in &g.edges {
        writeln!(out, "edge {} {}", e.from, e.to).unwrap();
    }
    out
}
