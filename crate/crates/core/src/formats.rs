//! Text formats for matrices, cognacy tables, trees and reports.
//!
//! * Matrix: first line the comma-separated labels, then one line per
//!   language with its label and `k` values, `-` on the diagonal. An optional
//!   `#list_size=N` line may precede the table; other `#` lines are comments.
//! * Cognacy: tab-separated `language, slot, class, borrowed (0/1)` with a
//!   header row.
//! * Tree description: TOML listing leaves, chains and the root link, with
//!   lengths written at full precision so the tree can be read back.
//! * Annotated tree: parenthesized text, each chain carrying its width and
//!   attach side in a `[&...]` comment.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dendrogram::{
    ChainNode, Dendrogram, Edge, FitReport, Leaf, NodeRef, Root, RootLink, RootVariant, Side,
};
use crate::error::{Error, Result};
use crate::lexstat::{CognacyRow, CognacyTable, CoincidenceMatrix, DistanceMatrix};

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn is_diagonal_mark(s: &str) -> bool {
    // hyphen, en dash or em dash
    matches!(s, "-" | "\u{2013}" | "\u{2014}" | "")
}

pub fn parse_matrix(text: &str) -> Result<CoincidenceMatrix> {
    let mut list_size = None;
    let mut labels: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut row_lines = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(directive) = line.strip_prefix('#') {
            if let Some(v) = directive.trim().strip_prefix("list_size=") {
                let v: u32 = v
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(line_no, 1, format!("bad list_size `{}`", v.trim())))?;
                if v == 0 {
                    return Err(parse_err(line_no, 1, "list_size must be positive"));
                }
                list_size = Some(v);
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let Some(header) = &labels else {
            if fields.iter().any(|f| f.is_empty()) {
                return Err(parse_err(line_no, 1, "empty language label"));
            }
            labels = Some(fields.iter().map(|s| s.to_string()).collect());
            continue;
        };
        let k = header.len();
        let i = rows.len();
        if i >= k {
            return Err(parse_err(line_no, 1, format!("more than {k} rows")));
        }
        if fields.len() != k + 1 {
            return Err(parse_err(
                line_no,
                fields.len().min(k + 1),
                format!(
                    "expected label and {k} values, found {} fields",
                    fields.len()
                ),
            ));
        }
        if fields[0] != header[i] {
            return Err(parse_err(
                line_no,
                1,
                format!(
                    "row label `{}` does not match column `{}`",
                    fields[0], header[i]
                ),
            ));
        }
        let mut row = Vec::with_capacity(k);
        for (j, f) in fields[1..].iter().enumerate() {
            if j == i {
                if !is_diagonal_mark(f) {
                    return Err(parse_err(
                        line_no,
                        j + 2,
                        format!("diagonal must be `-`, found `{f}`"),
                    ));
                }
                row.push(f64::NAN);
                continue;
            }
            let v: f64 = f
                .parse()
                .map_err(|_| parse_err(line_no, j + 2, format!("not a number: `{f}`")))?;
            if !(v > 0.0 && v <= 100.0) {
                return Err(parse_err(
                    line_no,
                    j + 2,
                    format!(
                        "coincidence {v} for ({}, {}) is outside (0, 100]",
                        header[i], header[j]
                    ),
                ));
            }
            row.push(v);
        }
        rows.push(row);
        row_lines.push(line_no);
    }
    let labels = labels.ok_or_else(|| parse_err(1, 1, "missing label line"))?;
    if rows.len() != labels.len() {
        return Err(parse_err(
            row_lines.last().copied().unwrap_or(1) + 1,
            1,
            format!("expected {} rows, found {}", labels.len(), rows.len()),
        ));
    }
    if labels.len() < 2 {
        return Err(Error::TooFewLanguages {
            required: 2,
            got: labels.len(),
        });
    }
    CoincidenceMatrix::from_square(labels, &rows, list_size)
}

pub fn write_matrix(m: &CoincidenceMatrix) -> String {
    let mut out = String::new();
    if let Some(n) = m.list_size() {
        let _ = writeln!(out, "#list_size={n}");
    }
    let _ = writeln!(out, "{}", m.labels().join(","));
    let k = m.len();
    for i in 0..k {
        out.push_str(&m.labels()[i]);
        for j in 0..k {
            if i == j {
                out.push_str(",-");
            } else {
                let _ = write!(out, ",{:.3}", m.get(i, j).value());
            }
        }
        out.push('\n');
    }
    out
}

const COGNACY_HEADER: [&str; 4] = ["language", "slot", "class", "borrowed"];

pub fn parse_cognacy(text: &str) -> Result<CognacyTable> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, 1, "missing header row"))?;
    let cols: Vec<String> = header
        .split('\t')
        .map(|c| c.trim().to_lowercase())
        .collect();
    if cols != COGNACY_HEADER {
        return Err(parse_err(
            1,
            1,
            format!("header must be `{}`", COGNACY_HEADER.join("\\t")),
        ));
    }
    let mut rows = Vec::new();
    for (n, line) in lines {
        let line_no = n + 1;
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        if f.len() != 4 {
            return Err(parse_err(
                line_no,
                f.len().min(4),
                format!("expected 4 columns, found {}", f.len()),
            ));
        }
        for (c, v) in f.iter().take(3).enumerate() {
            if v.is_empty() {
                return Err(parse_err(
                    line_no,
                    c + 1,
                    format!("empty {}", COGNACY_HEADER[c]),
                ));
            }
        }
        let borrowed = match f[3] {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_err(
                    line_no,
                    4,
                    format!("borrowed must be 0 or 1, found `{other}`"),
                ))
            }
        };
        rows.push(CognacyRow {
            language: f[0].to_string(),
            slot: f[1].to_string(),
            class: f[2].to_string(),
            borrowed,
        });
    }
    CognacyTable::from_rows(rows)
}

pub fn write_cognacy(t: &CognacyTable) -> String {
    let mut out = COGNACY_HEADER.join("\t");
    out.push('\n');
    for r in t.rows() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            r.language,
            r.slot,
            r.class,
            u8::from(r.borrowed)
        );
    }
    out
}

/// Pairwise distance table: `a, b, C, L` at three decimals.
pub fn write_distance_table(m: &CoincidenceMatrix, d: &DistanceMatrix) -> String {
    let mut out = String::from("a\tb\tC\tL\n");
    for (i, j, l) in d.pairs() {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.3}\t{:.3}",
            d.labels()[i],
            d.labels()[j],
            m.get(i, j).value(),
            l
        );
    }
    out
}

pub fn write_fit_report(r: &FitReport) -> String {
    let mut out = String::from(
        "a\tb\tmeasured_L\ttheoretical_L\tresidual_L\tmeasured_C\ttheoretical_C\tresidual_C\n",
    );
    for p in &r.pairs {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}",
            p.a,
            p.b,
            p.measured_l,
            p.theoretical_l,
            p.residual_l,
            p.measured_c,
            p.theoretical_c,
            p.residual_c
        );
    }
    let _ = writeln!(
        out,
        "# rms_L={:.3} max_abs_L={:.3} rms_C={:.3} max_abs_C={:.3}",
        r.rms_l, r.max_abs_l, r.rms_c, r.max_abs_c
    );
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct TreeDoc {
    format: String,
    root: RootDoc,
    #[serde(default, rename = "leaf")]
    leaves: Vec<LeafDoc>,
    #[serde(default, rename = "chain")]
    chains: Vec<ChainDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LeafDoc {
    id: String,
    label: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ChainDoc {
    id: String,
    width: f64,
    attach: String,
    left: String,
    left_length: f64,
    right: String,
    right_length: f64,
    /// Informational; recomputed on read.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depth: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RootDoc {
    /// `link` or `single`
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    node: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    variant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_chain: Option<GeometryDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    deep_point: Option<GeometryDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GeometryDoc {
    depth: f64,
    chain_width: f64,
    left_vertical: f64,
    right_vertical: f64,
}

const TREE_FORMAT: &str = "isolect-tree/1";

fn node_id(n: NodeRef) -> String {
    match n {
        NodeRef::Leaf(i) => format!("l{i}"),
        NodeRef::Chain(c) => format!("n{c}"),
    }
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Left => "left",
        Side::Right => "right",
    }
}

pub fn write_tree_description(t: &Dendrogram) -> String {
    let geometry = |v: RootVariant| {
        t.with_root_variant(v)
            .ok()
            .and_then(|x| x.root_geometry())
            .map(|g| GeometryDoc {
                depth: g.depth,
                chain_width: g.chain_width,
                left_vertical: g.left_vertical,
                right_vertical: g.right_vertical,
            })
    };
    let root = match t.root() {
        Root::Single(n) => RootDoc {
            kind: "single".into(),
            node: Some(node_id(*n)),
            left: None,
            right: None,
            length: None,
            variant: None,
            fraction: None,
            max_chain: None,
            deep_point: None,
        },
        Root::Link(l) => {
            let (variant, fraction) = match l.variant {
                RootVariant::Unresolved => ("unresolved", None),
                RootVariant::MaxChain => ("max_chain", None),
                RootVariant::DeepPoint => ("deep_point", None),
                RootVariant::Parametrized(f) => ("parametrized", Some(f)),
            };
            RootDoc {
                kind: "link".into(),
                node: None,
                left: Some(node_id(l.left)),
                right: Some(node_id(l.right)),
                length: Some(l.length),
                variant: Some(variant.into()),
                fraction,
                max_chain: geometry(RootVariant::MaxChain),
                deep_point: geometry(RootVariant::DeepPoint),
            }
        }
    };
    let doc = TreeDoc {
        format: TREE_FORMAT.into(),
        root,
        leaves: t
            .leaves()
            .iter()
            .enumerate()
            .map(|(i, l)| LeafDoc {
                id: node_id(NodeRef::Leaf(i)),
                label: l.label.clone(),
            })
            .collect(),
        chains: t
            .chains()
            .iter()
            .enumerate()
            .map(|(c, ch)| ChainDoc {
                id: node_id(NodeRef::Chain(c)),
                width: ch.width,
                attach: side_name(ch.attach).into(),
                left: node_id(ch.left.node),
                left_length: ch.left.length,
                right: node_id(ch.right.node),
                right_length: ch.right.length,
                depth: Some(t.depth(NodeRef::Chain(c))),
            })
            .collect(),
    };
    toml::to_string(&doc).expect("tree document serializes")
}

pub fn parse_tree_description(text: &str) -> Result<Dendrogram> {
    let doc: TreeDoc = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((1, 1));
        parse_err(line, column, e.message().to_string())
    })?;
    if doc.format != TREE_FORMAT {
        return Err(parse_err(
            1,
            1,
            format!("unsupported format `{}`", doc.format),
        ));
    }
    let mut ids = std::collections::HashMap::new();
    for (i, l) in doc.leaves.iter().enumerate() {
        ids.insert(l.id.clone(), NodeRef::Leaf(i));
    }
    for (c, ch) in doc.chains.iter().enumerate() {
        if ids.insert(ch.id.clone(), NodeRef::Chain(c)).is_some() {
            return Err(Error::InvalidTree(format!("duplicate id `{}`", ch.id)));
        }
    }
    let lookup = |id: &Option<String>, what: &str| -> Result<NodeRef> {
        let id = id
            .as_ref()
            .ok_or_else(|| Error::InvalidTree(format!("root is missing `{what}`")))?;
        ids.get(id)
            .copied()
            .ok_or_else(|| Error::InvalidTree(format!("unknown node id `{id}`")))
    };
    let side = |s: &str| match s {
        "left" => Ok(Side::Left),
        "right" => Ok(Side::Right),
        other => Err(Error::InvalidTree(format!(
            "attach must be left or right, found `{other}`"
        ))),
    };
    let chains = doc
        .chains
        .iter()
        .map(|ch| {
            Ok(ChainNode {
                width: ch.width,
                attach: side(&ch.attach)?,
                left: Edge {
                    node: lookup(&Some(ch.left.clone()), "left")?,
                    length: ch.left_length,
                },
                right: Edge {
                    node: lookup(&Some(ch.right.clone()), "right")?,
                    length: ch.right_length,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let root = match doc.root.kind.as_str() {
        "single" => Root::Single(lookup(&doc.root.node, "node")?),
        "link" => {
            let variant = match doc.root.variant.as_deref().unwrap_or("unresolved") {
                "unresolved" => RootVariant::Unresolved,
                "max_chain" => RootVariant::MaxChain,
                "deep_point" => RootVariant::DeepPoint,
                "parametrized" => {
                    RootVariant::Parametrized(doc.root.fraction.ok_or_else(|| {
                        Error::InvalidTree("parametrized root needs `fraction`".into())
                    })?)
                }
                other => {
                    return Err(Error::InvalidTree(format!(
                        "unknown root variant `{other}`"
                    )))
                }
            };
            Root::Link(RootLink {
                length: doc
                    .root
                    .length
                    .ok_or_else(|| Error::InvalidTree("root link needs `length`".into()))?,
                variant,
                left: lookup(&doc.root.left, "left")?,
                right: lookup(&doc.root.right, "right")?,
            })
        }
        other => return Err(Error::InvalidTree(format!("unknown root kind `{other}`"))),
    };
    let leaves = doc
        .leaves
        .into_iter()
        .map(|l| Leaf { label: l.label })
        .collect();
    Dendrogram::new(leaves, chains, root)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn quote_label(l: &str) -> String {
    if l.chars().any(|c| " ()[]:;,'\t".contains(c)) {
        format!("'{}'", l.replace('\'', "''"))
    } else {
        l.to_string()
    }
}

/// Parenthesized tree text with chain widths as `[&...]` annotations.
pub fn write_annotated_tree(t: &Dendrogram) -> String {
    fn node(t: &Dendrogram, n: NodeRef, out: &mut String) {
        match n {
            NodeRef::Leaf(i) => out.push_str(&quote_label(&t.leaves()[i].label)),
            NodeRef::Chain(c) => {
                let ch = &t.chains()[c];
                out.push('(');
                node(t, ch.left.node, out);
                let _ = write!(out, ":{:.3},", ch.left.length);
                node(t, ch.right.node, out);
                let _ = write!(
                    out,
                    ":{:.3})[&chain_width={:.3},attach={}]",
                    ch.right.length,
                    ch.width,
                    side_name(ch.attach)
                );
            }
        }
    }
    let mut out = String::new();
    match t.root() {
        Root::Single(n) => node(t, *n, &mut out),
        Root::Link(l) => {
            out.push('(');
            node(t, l.left, &mut out);
            out.push(',');
            node(t, l.right, &mut out);
            let _ = write!(out, ")[&root_link={:.3}]", l.length);
        }
    }
    out.push_str(";\n");
    out
}
