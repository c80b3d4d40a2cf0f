//! Scale-true drawing of a dendrogram.
//!
//! Depth below the present runs upwards from the baseline and chain widths
//! are drawn horizontally, both in the same swadesh-to-pixel scale.
//! Languages are rhombi, isolects are points. The root link is drawn as a
//! deep point with solid lines and, when it differs, as the widest chain
//! with dashed lines.

use std::fmt::Write as _;

use crate::dendrogram::{Dendrogram, NodeRef, Root, RootVariant, Side};

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 40.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 90.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Layout {
    /// x (swadesh units) of each node's attach endpoint
    attach_x: Vec<f64>,
    /// for chains: x of left and right endpoints
    ends: Vec<(f64, f64)>,
}

fn slot(t: &Dendrogram, n: NodeRef) -> usize {
    match n {
        NodeRef::Leaf(i) => i,
        NodeRef::Chain(c) => t.leaves().len() + c,
    }
}

fn place(t: &Dendrogram, n: NodeRef, gap: f64, next_leaf: &mut usize, lay: &mut Layout) -> f64 {
    match n {
        NodeRef::Leaf(_) => {
            let x = *next_leaf as f64 * gap;
            *next_leaf += 1;
            lay.attach_x[slot(t, n)] = x;
            x
        }
        NodeRef::Chain(c) => {
            let ch = &t.chains()[c];
            let xl = place(t, ch.left.node, gap, next_leaf, lay);
            let xr = place(t, ch.right.node, gap, next_leaf, lay);
            let mid = (xl + xr) / 2.0;
            let ends = (mid - ch.width / 2.0, mid + ch.width / 2.0);
            lay.ends[c] = ends;
            let x = match ch.attach {
                Side::Left => ends.0,
                Side::Right => ends.1,
            };
            lay.attach_x[slot(t, n)] = x;
            x
        }
    }
}

pub fn render_svg(t: &Dendrogram) -> String {
    let k = t.leaves().len();
    let max_width = t.chains().iter().map(|c| c.width).fold(0.0, f64::max);
    let gap = max_width.max(10.0);
    let mut lay = Layout {
        attach_x: vec![0.0; k + t.chains().len()],
        ends: vec![(0.0, 0.0); t.chains().len()],
    };
    let mut next = 0;
    let tops: Vec<NodeRef> = match t.root() {
        Root::Single(n) => vec![*n],
        Root::Link(l) => vec![l.left, l.right],
    };
    for &n in &tops {
        place(t, n, gap, &mut next, &mut lay);
    }

    let deep = t
        .with_root_variant(RootVariant::DeepPoint)
        .ok()
        .and_then(|d| d.root_geometry());
    let widest = t
        .with_root_variant(RootVariant::MaxChain)
        .ok()
        .and_then(|d| d.root_geometry());
    let max_depth = tops
        .iter()
        .map(|&n| t.depth(n))
        .chain(deep.map(|g| g.depth))
        .fold(0.0, f64::max)
        .max(1.0);
    let span = (k.saturating_sub(1)) as f64 * gap;
    let scale = (420.0 / max_depth).clamp(2.0, 24.0);
    let width = MARGIN_LEFT + MARGIN_RIGHT + span * scale;
    let height = MARGIN_TOP + MARGIN_BOTTOM + max_depth * scale;
    let px = |x: f64| MARGIN_LEFT + x * scale;
    let py = |depth: f64| MARGIN_TOP + (max_depth - depth) * scale;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    // depth axis
    let step = if max_depth > 60.0 { 10.0 } else { 5.0 };
    let _ = writeln!(
        s,
        r##"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{y1:.1}" stroke="#888"/>"##,
        x = MARGIN_LEFT - 30.0,
        y0 = py(0.0),
        y1 = py(max_depth)
    );
    let mut d = 0.0;
    while d <= max_depth + 1e-9 {
        let _ = writeln!(
            s,
            r##"<line x1="{x0:.1}" y1="{y:.1}" x2="{x1:.1}" y2="{y:.1}" stroke="#888"/><text x="{xt:.1}" y="{yt:.1}" text-anchor="end" fill="#555">{d}</text>"##,
            x0 = MARGIN_LEFT - 34.0,
            x1 = MARGIN_LEFT - 30.0,
            xt = MARGIN_LEFT - 38.0,
            y = py(d),
            yt = py(d) + 4.0,
        );
        d += step;
    }
    let _ = writeln!(
        s,
        r##"<text x="12" y="{y:.1}" transform="rotate(-90 12 {y:.1})" text-anchor="middle" fill="#555">swadesh before present</text>"##,
        y = py(max_depth / 2.0)
    );

    let line = |s: &mut String, x1: f64, d1: f64, x2: f64, d2: f64, extra: &str| {
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1.5"{extra}/>"#,
            px(x1),
            py(d1),
            px(x2),
            py(d2)
        );
    };
    let point = |s: &mut String, x: f64, depth: f64| {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="black"/>"#,
            px(x),
            py(depth)
        );
    };

    for (c, ch) in t.chains().iter().enumerate() {
        let h = t.depth(NodeRef::Chain(c));
        let (xl, xr) = lay.ends[c];
        if ch.width > 0.0 {
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black" stroke-width="3"><title>chain width {:.3}</title></line>"#,
                px(xl),
                px(xr),
                ch.width,
                y = py(h)
            );
        }
        for (side, x) in [(Side::Left, xl), (Side::Right, xr)] {
            let e = ch.edge(side);
            let child = e.node;
            line(
                &mut s,
                x,
                h,
                lay.attach_x[slot(t, child)],
                t.depth(child),
                "",
            );
            point(&mut s, x, h);
        }
    }

    if let (Root::Link(l), Some(g)) = (t.root(), deep) {
        let (xa, xb) = (
            lay.attach_x[slot(t, l.left)],
            lay.attach_x[slot(t, l.right)],
        );
        let (ha, hb) = (t.depth(l.left), t.depth(l.right));
        let xo = (xa + xb) / 2.0;
        line(&mut s, xo, g.depth, xa, ha, "");
        line(&mut s, xo, g.depth, xb, hb, "");
        point(&mut s, xo, g.depth);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">O</text>"#,
            px(xo),
            py(g.depth) - 8.0
        );
        if let Some(w) = widest.filter(|w| w.chain_width > 0.0) {
            let dash = r#" stroke-dasharray="5,4" stroke="gray""#;
            let (x0, x1) = (xo - w.chain_width / 2.0, xo + w.chain_width / 2.0);
            let (left_end, right_end) = if xa <= xb { (x0, x1) } else { (x1, x0) };
            line(&mut s, x0, w.depth, x1, w.depth, dash);
            line(&mut s, left_end, w.depth, xa, ha, dash);
            line(&mut s, right_end, w.depth, xb, hb, dash);
        }
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="start" fill="#555">root link {:.3}</text>"##,
            px(xo) + 8.0,
            py(g.depth) + 4.0,
            l.length
        );
    }

    for (i, leaf) in t.leaves().iter().enumerate() {
        let (x, y) = (px(lay.attach_x[i]), py(0.0));
        let r = 6.0;
        let _ = writeln!(
            s,
            r#"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="white" stroke="black" stroke-width="1.5"/>"#,
            x,
            y - r,
            x + r,
            y,
            x,
            y + r,
            x - r,
            y
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{ty:.2}" transform="rotate(45 {x:.2} {ty:.2})">{}</text>"#,
            escape(&leaf.label),
            ty = y + 16.0
        );
    }
    s.push_str("</svg>\n");
    s
}
