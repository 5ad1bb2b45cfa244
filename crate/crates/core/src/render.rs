//! Plain-text rendering of proof trees, premises above conclusions:
//!
//! ```text
//! {PM=2} |- (PM,1)
//! ---------------- [PM=2]
//! ---------------- [c4/MP]
//! {PM=2} |- (MP,2)
//! ```

use crate::csp::GlobalDomain;
use crate::explanations::ProofTree;

struct Block {
    lines: Vec<String>,
    width: usize,
}

fn width(s: &str) -> usize {
    s.chars().count()
}

fn pad(s: &str, w: usize) -> String {
    let mut out = s.to_string();
    out.extend(std::iter::repeat_n(' ', w.saturating_sub(width(s))));
    out
}

fn block(t: &ProofTree, dom: &GlobalDomain) -> Block {
    let conclusion = t.judgment.display(dom);
    let kids: Vec<Block> = t.children.iter().map(|c| block(c, dom)).collect();
    let height = kids.iter().map(|b| b.lines.len()).max().unwrap_or(0);
    let gap = "   ";
    let mut premises = vec![String::new(); height];
    let mut premise_width = 0;
    for (k, b) in kids.iter().enumerate() {
        let offset = height - b.lines.len();
        for (row, line) in premises.iter_mut().enumerate() {
            if k > 0 {
                line.push_str(gap);
            }
            let cell = if row >= offset {
                b.lines[row - offset].as_str()
            } else {
                ""
            };
            line.push_str(&pad(cell, b.width));
        }
        premise_width += b.width + if k > 0 { gap.len() } else { 0 };
    }
    let bar = premise_width.max(width(&conclusion));
    let label = format!(" [{}]", t.origin.id());
    let total = bar + width(&label);
    let mut lines: Vec<String> = premises.iter().map(|l| pad(l, total)).collect();
    lines.push(pad(&format!("{}{}", "-".repeat(bar), label), total));
    let indent = (bar - width(&conclusion)) / 2;
    lines.push(pad(&format!("{}{}", " ".repeat(indent), conclusion), total));
    Block { lines, width: total }
}

/// `context: ...` on the first line, then the tree.
pub fn render_proof_tree(t: &ProofTree, dom: &GlobalDomain) -> String {
    let mut s = format!("context: {}\n", t.context().display(dom));
    for line in block(t, dom).lines {
        s.push_str(line.trim_end());
        s.push('\n');
    }
    s
}

/// One line per node, indented by depth, conclusion first.
pub fn render_outline(t: &ProofTree, dom: &GlobalDomain) -> String {
    fn go(t: &ProofTree, dom: &GlobalDomain, depth: usize, out: &mut String) {
        out.push_str(&"  ".repeat(depth));
        out.push_str(&format!(
            "{}  [{} {}]\n",
            t.judgment.display(dom),
            t.kind.tag(),
            t.origin.id()
        ));
        for c in &t.children {
            go(c, dom, depth + 1, out);
        }
    }
    let mut out = String::new();
    go(t, dom, 0, &mut out);
    out
}
