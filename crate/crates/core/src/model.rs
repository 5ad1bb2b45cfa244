//! Text format for problems.
//!
//! ```text
//! # comment
//! var X in 1..3
//! var Y in {1, 2, 5}
//! constraint X < Y + 1
//! constraint table(X, Y) { (1, 2) (2, 5) }
//! label X enumerate
//! ```
//!
//! Statements are separated by keywords, so a table may span several lines.
//! Constraints are numbered `c1`, `c2`, ... in order of appearance.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::csp::{CmpOp, ConstraintKind, Csp, CspBuilder, Value};
use crate::error::{Error, Result};
use crate::search::{LabelDirective, Strategy};

/// A problem together with its labeling directives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub csp: Csp,
    pub labeling: Vec<LabelDirective>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(Value),
    Sym(&'static str),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

const SYMBOLS: [&str; 16] = [
    "..", "<=", ">=", "!=", "==", "<", ">", "=", "{", "}", "(", ")", ",", "+", "-", ";",
];

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let start = i;
            let tok = if c.is_ascii_alphabetic() || c == '_' {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            } else if c.is_ascii_digit() {
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let n = s.parse().map_err(|_| Error::Parse {
                    line: ln + 1,
                    column,
                    message: format!("integer `{s}` out of range"),
                })?;
                Tok::Int(n)
            } else {
                let rest: String = chars[i..].iter().take(2).collect();
                let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(**s)) else {
                    return Err(Error::Parse {
                        line: ln + 1,
                        column,
                        message: format!("unexpected character `{c}`"),
                    });
                };
                i += sym.len();
                Tok::Sym(sym)
            };
            out.push(Token {
                tok,
                line: ln + 1,
                column,
            });
        }
    }
    Ok(out)
}

const KEYWORDS: [&str; 4] = ["var", "constraint", "label", "in"];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map(|t| (t.line, t.column)).unwrap_or(self.end)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        let (line, column) = self.here();
        Err(Error::Parse {
            line,
            column,
            message: message.into(),
        })
    }

    fn describe_next(&self) -> String {
        match self.peek() {
            None => "end of input".to_string(),
            Some(Tok::Ident(s)) => format!("`{s}`"),
            Some(Tok::Int(n)) => format!("`{n}`"),
            Some(Tok::Sym(s)) => format!("`{s}`"),
        }
    }

    fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(s)) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<()> {
        if self.eat(sym) {
            Ok(())
        } else {
            self.error(format!("expected `{sym}`, found {}", self.describe_next()))
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn name(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.error(format!("expected a name, found {}", self.describe_next())),
        }
    }

    fn int(&mut self) -> Result<Value> {
        let neg = self.eat("-");
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(if neg { -n } else { n })
            }
            _ => self.error(format!("expected an integer, found {}", self.describe_next())),
        }
    }

    fn value_set(&mut self) -> Result<Vec<Value>> {
        if self.eat("{") {
            let mut vals = Vec::new();
            if !self.eat("}") {
                loop {
                    vals.push(self.int()?);
                    if self.eat("}") {
                        break;
                    }
                    self.expect(",")?;
                }
            }
            let set: BTreeSet<Value> = vals.into_iter().collect();
            Ok(set.into_iter().collect())
        } else {
            let lo = self.int()?;
            self.expect("..")?;
            let hi = self.int()?;
            Ok((lo..=hi).collect())
        }
    }

    fn cmp_op(&mut self) -> Result<CmpOp> {
        let op = match self.peek() {
            Some(Tok::Sym("==")) => Some(CmpOp::Eq),
            Some(Tok::Sym(s)) => CmpOp::from_symbol(s),
            _ => None,
        };
        match op {
            Some(op) => {
                self.pos += 1;
                Ok(op)
            }
            None => self.error(format!("expected a comparison, found {}", self.describe_next())),
        }
    }
}

pub fn parse_model(text: &str) -> Result<Model> {
    let toks = tokenize(text)?;
    let lines = text.lines().count().max(1);
    let last_len = text.lines().last().map(|l| l.chars().count()).unwrap_or(0);
    let mut p = Parser {
        toks,
        pos: 0,
        end: (lines, last_len + 1),
    };
    let mut builder = CspBuilder::default();
    let mut declared: Vec<(String, Vec<Value>)> = Vec::new();
    let mut labels: Vec<(String, Strategy)> = Vec::new();
    let check_var = |name: &str, declared: &[(String, Vec<Value>)]| -> Result<()> {
        if declared.iter().any(|(n, _)| n == name) {
            Ok(())
        } else {
            Err(Error::UnknownVariable(name.to_string()))
        }
    };
    while p.peek().is_some() {
        if p.eat(";") {
            continue;
        }
        if p.keyword("var") {
            let name = p.name()?;
            if !p.keyword("in") {
                return p.error(format!("expected `in`, found {}", p.describe_next()));
            }
            let values = p.value_set()?;
            if declared.iter().any(|(n, _)| *n == name) {
                return Err(Error::DuplicateVariable(name));
            }
            if values.is_empty() {
                return Err(Error::EmptyDomain(name));
            }
            builder = builder.var(&name, values.iter().copied());
            declared.push((name, values));
        } else if p.keyword("constraint") {
            if p.keyword("table") {
                p.expect("(")?;
                let mut scope = vec![p.name()?];
                while p.eat(",") {
                    scope.push(p.name()?);
                }
                p.expect(")")?;
                for v in &scope {
                    check_var(v, &declared)?;
                }
                p.expect("{")?;
                let mut tuples = Vec::new();
                while !p.eat("}") {
                    p.expect("(")?;
                    let mut t = vec![p.int()?];
                    while p.eat(",") {
                        t.push(p.int()?);
                    }
                    p.expect(")")?;
                    if t.len() != scope.len() {
                        return p.error(format!(
                            "tuple has {} values but the scope has {} variables",
                            t.len(),
                            scope.len()
                        ));
                    }
                    for (name, &x) in scope.iter().zip(&t) {
                        let (_, dom) = declared.iter().find(|(n, _)| n == name).expect("checked");
                        if !dom.contains(&x) {
                            return Err(Error::ValueOutsideDomain {
                                variable: name.clone(),
                                value: x,
                            });
                        }
                    }
                    tuples.push(t);
                    p.eat(",");
                }
                let names: Vec<&str> = scope.iter().map(String::as_str).collect();
                builder = builder.table(&names, tuples);
            } else {
                let x = p.name()?;
                check_var(&x, &declared)?;
                let op = p.cmp_op()?;
                let y = p.name()?;
                check_var(&y, &declared)?;
                if x == y {
                    return Err(Error::MalformedConstraint(format!("`{x}` compared with itself")));
                }
                let offset = if p.eat("+") {
                    p.int()?
                } else if p.eat("-") {
                    -p.int()?
                } else {
                    0
                };
                builder = builder.compare(&x, op, &y, offset);
            }
        } else if p.keyword("label") {
            let name = p.name()?;
            check_var(&name, &declared)?;
            let strategy = if p.keyword("enumerate") {
                Strategy::Enumerate
            } else if p.keyword("split") {
                Strategy::Split
            } else {
                Strategy::Enumerate
            };
            labels.push((name, strategy));
        } else {
            return p.error(format!(
                "expected `var`, `constraint` or `label`, found {}",
                p.describe_next()
            ));
        }
    }
    let csp = builder.build()?;
    let labeling = labels
        .into_iter()
        .map(|(n, s)| Ok(LabelDirective::new(csp.var(&n)?, s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Model { csp, labeling })
}

fn print_values(values: &[Value]) -> String {
    let contiguous = values.windows(2).all(|w| w[1] == w[0] + 1);
    if contiguous && values.len() > 1 {
        format!("{}..{}", values[0], values[values.len() - 1])
    } else {
        let vs: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        format!("{{{}}}", vs.join(", "))
    }
}

/// Canonical text of `model`; parsing it gives back an equal model as long
/// as constraint ids follow the `c1..cn` numbering.
pub fn print_model(model: &Model) -> String {
    let dom = model.csp.domain();
    let mut s = String::new();
    for v in dom.vars() {
        let _ = writeln!(s, "var {} in {}", dom.name(v), print_values(dom.values(v)));
    }
    for c in model.csp.constraints() {
        let names: Vec<&str> = c.scope.iter().map(|&v| dom.name(v)).collect();
        match &c.kind {
            ConstraintKind::Compare { .. } => {
                let _ = writeln!(s, "constraint {}", c.describe(dom));
            }
            ConstraintKind::Table { tuples } => {
                let ts: Vec<String> = tuples
                    .iter()
                    .map(|t| {
                        let vs: Vec<String> = t.iter().map(|v| v.to_string()).collect();
                        format!("({})", vs.join(", "))
                    })
                    .collect();
                let _ = writeln!(s, "constraint table({}) {{ {} }}", names.join(", "), ts.join(" "));
            }
        }
    }
    for l in &model.labeling {
        let _ = writeln!(s, "label {} {}", dom.name(l.var), l.strategy.keyword());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{conference_model, CONFERENCE_MODEL_TEXT};

    #[test]
    fn conference_text() {
        let m = parse_model(CONFERENCE_MODEL_TEXT).unwrap();
        assert_eq!(m, conference_model());
        assert_eq!(parse_model(&print_model(&m)).unwrap(), m);
    }

    #[test]
    fn tables_span_lines() {
        let m = parse_model(
            "var X in {1, 3}\nvar Y in -1..1\nconstraint table(X, Y) {\n  (1, -1)\n  (3, 0)\n}\nlabel Y split\n",
        )
        .unwrap();
        let c = &m.csp.constraints()[0];
        assert_eq!(c.id, "c1");
        assert_eq!(
            c.kind,
            ConstraintKind::Table {
                tuples: vec![vec![1, -1], vec![3, 0]]
            }
        );
        assert_eq!(m.labeling[0].strategy, Strategy::Split);
        assert_eq!(parse_model(&print_model(&m)).unwrap(), m);
    }

    #[test]
    fn offsets() {
        let m = parse_model("var X in 1..3 var Y in 1..3 constraint X < Y - 1 constraint X != Y + 2").unwrap();
        assert_eq!(
            m.csp.constraints()[0].kind,
            ConstraintKind::Compare {
                op: CmpOp::Lt,
                offset: -1
            }
        );
        assert_eq!(parse_model(&print_model(&m)).unwrap(), m);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_model("var X in 1..3\nconstraint X < \n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_model("var X in 1..3\nvar X in 1..2"),
            Err(Error::DuplicateVariable(_))
        ));
        assert!(matches!(parse_model("var X in 1..0"), Err(Error::EmptyDomain(_))));
        assert!(matches!(
            parse_model("var X in 1..3\nconstraint X < Z"),
            Err(Error::UnknownVariable(_))
        ));
        assert!(matches!(
            parse_model("var X in 1..3\nconstraint table(X) { (4) }"),
            Err(Error::ValueOutsideDomain { value: 4, .. })
        ));
        assert_eq!(
            parse_model("var X in 1..3\n  @").unwrap_err(),
            Error::Parse {
                line: 2,
                column: 3,
                message: "unexpected character `@`".into()
            }
        );
        assert!(matches!(parse_model("label X"), Err(Error::UnknownVariable(_))));
    }
}
