//! Constraint satisfaction problems over integer domains.
//!
//! The global domain is the finite set of all `(variable, value)` pairs of a
//! problem. Every pair gets a dense index so that environments (subsets of the
//! global domain) are plain bitsets, compared extensionally.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};

pub type Value = i64;

/// Default refusal threshold for [`solutions_bruteforce`].
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Position of a variable in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// A `(variable, value)` pair. Ordered by variable, then value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DomainElement {
    pub var: VarId,
    pub value: Value,
}

impl DomainElement {
    pub fn new(var: VarId, value: Value) -> Self {
        DomainElement { var, value }
    }
}

/// The per-variable value sets of a problem, with a dense element numbering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalDomain {
    names: Vec<String>,
    values: Vec<Vec<Value>>,
    offsets: Vec<usize>,
    len: usize,
}

impl GlobalDomain {
    pub fn new<I, S, V>(vars: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, V)>,
        S: Into<String>,
        V: IntoIterator<Item = Value>,
    {
        let mut names = Vec::new();
        let mut values = Vec::new();
        let mut offsets = Vec::new();
        let mut len = 0;
        for (name, vals) in vars {
            let name = name.into();
            if names.contains(&name) {
                return Err(Error::DuplicateVariable(name));
            }
            let set: BTreeSet<Value> = vals.into_iter().collect();
            if set.is_empty() {
                return Err(Error::EmptyDomain(name));
            }
            offsets.push(len);
            len += set.len();
            names.push(name);
            values.push(set.into_iter().collect());
        }
        Ok(GlobalDomain {
            names,
            values,
            offsets,
            len,
        })
    }

    pub fn var_count(&self) -> usize {
        self.names.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.names.len()).map(VarId)
    }

    pub fn name(&self, var: VarId) -> &str {
        &self.names[var.0]
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.names.iter().position(|n| n == name).map(VarId)
    }

    pub fn lookup(&self, name: &str) -> Result<VarId> {
        self.var(name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Ascending values of `D_x`.
    pub fn values(&self, var: VarId) -> &[Value] {
        &self.values[var.0]
    }

    /// Number of elements of the global domain.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, elem: DomainElement) -> bool {
        self.index_of(elem).is_some()
    }

    pub fn index_of(&self, elem: DomainElement) -> Option<usize> {
        let vals = self.values.get(elem.var.0)?;
        vals.binary_search(&elem.value)
            .ok()
            .map(|pos| self.offsets[elem.var.0] + pos)
    }

    pub fn element(&self, index: usize) -> DomainElement {
        let var = match self.offsets.binary_search(&index) {
            Ok(v) => v,
            Err(v) => v - 1,
        };
        DomainElement::new(VarId(var), self.values[var][index - self.offsets[var]])
    }

    pub(crate) fn var_range(&self, var: VarId) -> std::ops::Range<usize> {
        let start = self.offsets[var.0];
        start..start + self.values[var.0].len()
    }

    pub fn check_var(&self, var: VarId) -> Result<()> {
        if var.0 < self.names.len() {
            Ok(())
        } else {
            Err(Error::UnknownVariable(format!("#{}", var.0)))
        }
    }

    pub fn check_element(&self, elem: DomainElement) -> Result<()> {
        self.check_var(elem.var)?;
        if self.contains(elem) {
            Ok(())
        } else {
            Err(Error::ValueOutsideDomain {
                variable: self.name(elem.var).to_string(),
                value: elem.value,
            })
        }
    }

    pub fn display_element(&self, elem: DomainElement) -> String {
        format!("({},{})", self.name(elem.var), elem.value)
    }
}

/// A subset of the global domain.
#[derive(Clone)]
pub struct Environment {
    universe: Arc<GlobalDomain>,
    bits: FixedBitSet,
}

impl PartialEq for Environment {
    fn eq(&self, other: &Self) -> bool {
        self.bits == other.bits
    }
}

impl Eq for Environment {}

impl Environment {
    /// The whole global domain.
    pub fn full(universe: &Arc<GlobalDomain>) -> Self {
        let mut bits = FixedBitSet::with_capacity(universe.len());
        bits.insert_range(..);
        Environment {
            universe: Arc::clone(universe),
            bits,
        }
    }

    pub fn empty(universe: &Arc<GlobalDomain>) -> Self {
        Environment {
            universe: Arc::clone(universe),
            bits: FixedBitSet::with_capacity(universe.len()),
        }
    }

    pub fn from_elements<I>(universe: &Arc<GlobalDomain>, elems: I) -> Result<Self>
    where
        I: IntoIterator<Item = DomainElement>,
    {
        let mut env = Environment::empty(universe);
        for e in elems {
            universe.check_element(e)?;
            env.insert(e);
        }
        Ok(env)
    }

    /// Builds `index -> present` environments; used by exhaustive oracles.
    pub(crate) fn from_mask(universe: &Arc<GlobalDomain>, mask: &FixedBitSet) -> Self {
        Environment {
            universe: Arc::clone(universe),
            bits: mask.clone(),
        }
    }

    pub fn universe(&self) -> &Arc<GlobalDomain> {
        &self.universe
    }

    pub fn contains(&self, elem: DomainElement) -> bool {
        self.universe.index_of(elem).is_some_and(|i| self.bits.contains(i))
    }

    pub(crate) fn contains_index(&self, index: usize) -> bool {
        self.bits.contains(index)
    }

    /// Returns `true` if the element was newly inserted.
    pub fn insert(&mut self, elem: DomainElement) -> bool {
        match self.universe.index_of(elem) {
            Some(i) => !self.bits.put(i),
            None => false,
        }
    }

    /// Returns `true` if the element was present.
    pub fn remove(&mut self, elem: DomainElement) -> bool {
        match self.universe.index_of(elem) {
            Some(i) => {
                let was = self.bits.contains(i);
                self.bits.set(i, false);
                was
            }
            None => false,
        }
    }

    /// Ascending values of `d_x`.
    pub fn values(&self, var: VarId) -> impl Iterator<Item = Value> + '_ {
        let offset = self.universe.var_range(var).start;
        let vals = self.universe.values(var);
        self.universe
            .var_range(var)
            .filter(move |&i| self.bits.contains(i))
            .map(move |i| vals[i - offset])
    }

    pub fn value_set(&self, var: VarId) -> BTreeSet<Value> {
        self.values(var).collect()
    }

    pub fn var_len(&self, var: VarId) -> usize {
        self.universe.var_range(var).filter(|&i| self.bits.contains(i)).count()
    }

    /// Variables whose environment is empty, in declaration order.
    pub fn empty_vars(&self) -> Vec<VarId> {
        self.universe.vars().filter(|&v| self.var_len(v) == 0).collect()
    }

    pub fn has_empty_var(&self) -> bool {
        self.universe.vars().any(|v| self.var_len(v) == 0)
    }

    pub fn elements(&self) -> impl Iterator<Item = DomainElement> + '_ {
        self.bits.ones().map(|i| self.universe.element(i))
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn is_subset(&self, other: &Environment) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn intersection(&self, other: &Environment) -> Environment {
        let mut bits = self.bits.clone();
        bits.intersect_with(&other.bits);
        Environment {
            universe: Arc::clone(&self.universe),
            bits,
        }
    }

    pub fn union(&self, other: &Environment) -> Environment {
        let mut bits = self.bits.clone();
        bits.union_with(&other.bits);
        Environment {
            universe: Arc::clone(&self.universe),
            bits,
        }
    }

    pub fn difference(&self, other: &Environment) -> Environment {
        let mut bits = self.bits.clone();
        bits.difference_with(&other.bits);
        Environment {
            universe: Arc::clone(&self.universe),
            bits,
        }
    }

    /// `𝔻 ∖ d`.
    pub fn complement(&self) -> Environment {
        let mut bits = self.bits.clone();
        bits.toggle_range(..);
        Environment {
            universe: Arc::clone(&self.universe),
            bits,
        }
    }

    /// `d|_W = { (x,e) ∈ d | x ∈ W }`.
    pub fn restrict(&self, vars: &[VarId]) -> Result<Environment> {
        let mut bits = FixedBitSet::with_capacity(self.universe.len());
        for &v in vars {
            self.universe.check_var(v)?;
            for i in self.universe.var_range(v) {
                if self.bits.contains(i) {
                    bits.insert(i);
                }
            }
        }
        Ok(Environment {
            universe: Arc::clone(&self.universe),
            bits,
        })
    }

    /// Replaces `d_x` by `values ∩ D_x`.
    pub fn set_values<I: IntoIterator<Item = Value>>(&mut self, var: VarId, values: I) {
        for i in self.universe.var_range(var) {
            self.bits.set(i, false);
        }
        for v in values {
            self.insert(DomainElement::new(var, v));
        }
    }

    /// The assignment read off an environment where every variable is a singleton.
    pub fn as_assignment(&self) -> Option<Assignment> {
        let mut map = BTreeMap::new();
        for v in self.universe.vars() {
            let mut it = self.values(v);
            let first = it.next()?;
            if it.next().is_some() {
                return None;
            }
            map.insert(v, first);
        }
        Some(Assignment(map))
    }
}

impl fmt::Debug for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in self.universe.vars() {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            let vals: Vec<String> = self.values(v).map(|x| x.to_string()).collect();
            write!(f, "{}∈{{{}}}", self.universe.name(v), vals.join(","))?;
        }
        Ok(())
    }
}

/// A tuple on a set of variables: each scope variable bound exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Assignment(pub BTreeMap<VarId, Value>);

impl Assignment {
    pub fn get(&self, var: VarId) -> Option<Value> {
        self.0.get(&var).copied()
    }

    pub fn scope(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0.keys().copied()
    }

    pub fn elements(&self) -> impl Iterator<Item = DomainElement> + '_ {
        self.0.iter().map(|(&v, &x)| DomainElement::new(v, x))
    }

    /// The tuple seen as an environment.
    pub fn to_env(&self, universe: &Arc<GlobalDomain>) -> Result<Environment> {
        Environment::from_elements(universe, self.elements())
    }

    pub fn display(&self, dom: &GlobalDomain) -> String {
        self.0
            .iter()
            .map(|(&v, x)| format!("{}={}", dom.name(v), x))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn holds(self, a: Value, b: Value) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<CmpOp> {
        Some(match s {
            "=" => CmpOp::Eq,
            "!=" => CmpOp::Ne,
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            _ => return None,
        })
    }

    pub fn tag(self) -> &'static str {
        match self {
            CmpOp::Eq => "EQ",
            CmpOp::Ne => "NEQ",
            CmpOp::Lt => "LT",
            CmpOp::Le => "LE",
            CmpOp::Gt => "GT",
            CmpOp::Ge => "GE",
        }
    }

    pub fn from_tag(s: &str) -> Option<CmpOp> {
        [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge]
            .into_iter()
            .find(|op| op.tag() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    /// `scope[0] op scope[1] + offset`
    Compare { op: CmpOp, offset: Value },
    /// Allowed tuples, aligned with the scope.
    Table { tuples: Vec<Vec<Value>> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConstraintSpec {
    pub id: String,
    pub scope: Vec<VarId>,
    pub kind: ConstraintKind,
}

impl ConstraintSpec {
    pub fn compare(id: impl Into<String>, x: VarId, op: CmpOp, y: VarId, offset: Value) -> Self {
        ConstraintSpec {
            id: id.into(),
            scope: vec![x, y],
            kind: ConstraintKind::Compare { op, offset },
        }
    }

    pub fn table(id: impl Into<String>, scope: Vec<VarId>, tuples: Vec<Vec<Value>>) -> Self {
        ConstraintSpec {
            id: id.into(),
            scope,
            kind: ConstraintKind::Table { tuples },
        }
    }

    pub fn validate(&self, dom: &GlobalDomain) -> Result<()> {
        for &v in &self.scope {
            dom.check_var(v)?;
        }
        let distinct: BTreeSet<_> = self.scope.iter().collect();
        if distinct.len() != self.scope.len() {
            return Err(Error::MalformedConstraint(format!(
                "{}: a variable appears twice in the scope",
                self.id
            )));
        }
        match &self.kind {
            ConstraintKind::Compare { .. } => {
                if self.scope.len() != 2 {
                    return Err(Error::MalformedConstraint(format!(
                        "{}: comparisons take exactly two variables",
                        self.id
                    )));
                }
            }
            ConstraintKind::Table { tuples } => {
                if self.scope.is_empty() {
                    return Err(Error::MalformedConstraint(format!("{}: empty table scope", self.id)));
                }
                for t in tuples {
                    if t.len() != self.scope.len() {
                        return Err(Error::MalformedConstraint(format!(
                            "{}: tuple arity {} does not match scope arity {}",
                            self.id,
                            t.len(),
                            self.scope.len()
                        )));
                    }
                    for (&v, &x) in self.scope.iter().zip(t) {
                        dom.check_element(DomainElement::new(v, x))?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn allows(&self, values: &[Value]) -> bool {
        match &self.kind {
            ConstraintKind::Compare { op, offset } => op.holds(values[0], values[1] + offset),
            ConstraintKind::Table { tuples } => tuples.iter().any(|t| t.as_slice() == values),
        }
    }

    /// `T_c` as scope-aligned value vectors, ascending lexicographically.
    pub fn allowed_tuples(&self, dom: &GlobalDomain) -> Vec<Vec<Value>> {
        match &self.kind {
            ConstraintKind::Table { tuples } => {
                let set: BTreeSet<_> = tuples.iter().cloned().collect();
                set.into_iter().collect()
            }
            ConstraintKind::Compare { .. } => {
                let mut out = Vec::new();
                for &a in dom.values(self.scope[0]) {
                    for &b in dom.values(self.scope[1]) {
                        if self.allows(&[a, b]) {
                            out.push(vec![a, b]);
                        }
                    }
                }
                out
            }
        }
    }

    /// `T_c` as tuples on `var(c)`.
    pub fn semantics(&self, dom: &GlobalDomain) -> BTreeSet<Assignment> {
        self.allowed_tuples(dom)
            .into_iter()
            .map(|t| Assignment(self.scope.iter().copied().zip(t).collect()))
            .collect()
    }

    pub fn describe(&self, dom: &GlobalDomain) -> String {
        let names: Vec<&str> = self.scope.iter().map(|&v| dom.name(v)).collect();
        match &self.kind {
            ConstraintKind::Compare { op, offset } => {
                let mut s = format!("{} {} {}", names[0], op.symbol(), names[1]);
                if *offset > 0 {
                    s.push_str(&format!(" + {offset}"));
                } else if *offset < 0 {
                    s.push_str(&format!(" - {}", -offset));
                }
                s
            }
            ConstraintKind::Table { tuples } => {
                format!("table({}) [{} tuples]", names.join(","), tuples.len())
            }
        }
    }
}

/// Variables, their domains and an ordered list of constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Csp {
    domain: Arc<GlobalDomain>,
    constraints: Vec<ConstraintSpec>,
}

impl Csp {
    pub fn new(domain: GlobalDomain, constraints: Vec<ConstraintSpec>) -> Result<Self> {
        Csp::with_domain(Arc::new(domain), constraints)
    }

    pub fn with_domain(domain: Arc<GlobalDomain>, constraints: Vec<ConstraintSpec>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for c in &constraints {
            c.validate(&domain)?;
            if !ids.insert(c.id.clone()) {
                return Err(Error::MalformedConstraint(format!(
                    "duplicate constraint id `{}`",
                    c.id
                )));
            }
        }
        Ok(Csp { domain, constraints })
    }

    pub fn builder() -> CspBuilder {
        CspBuilder::default()
    }

    pub fn domain(&self) -> &Arc<GlobalDomain> {
        &self.domain
    }

    pub fn constraints(&self) -> &[ConstraintSpec] {
        &self.constraints
    }

    pub fn constraint(&self, id: &str) -> Result<&ConstraintSpec> {
        self.constraints
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| Error::UnknownConstraint(id.to_string()))
    }

    /// The same problem with constraint `id` dropped.
    pub fn without(&self, id: &str) -> Result<Csp> {
        self.constraint(id)?;
        Ok(Csp {
            domain: Arc::clone(&self.domain),
            constraints: self.constraints.iter().filter(|c| c.id != id).cloned().collect(),
        })
    }

    pub fn var(&self, name: &str) -> Result<VarId> {
        self.domain.lookup(name)
    }

    pub fn element(&self, name: &str, value: Value) -> Result<DomainElement> {
        let e = DomainElement::new(self.var(name)?, value);
        self.domain.check_element(e)?;
        Ok(e)
    }

    pub fn full_env(&self) -> Environment {
        Environment::full(&self.domain)
    }

    /// `t` is a solution iff every constraint accepts its projection.
    pub fn is_solution(&self, t: &Assignment) -> Result<bool> {
        for v in self.domain.vars() {
            match t.get(v) {
                None => {
                    return Err(Error::usage(format!(
                        "tuple does not bind variable `{}`",
                        self.domain.name(v)
                    )))
                }
                Some(x) => self.domain.check_element(DomainElement::new(v, x))?,
            }
        }
        if t.0.len() != self.domain.var_count() {
            return Err(Error::usage("tuple binds unknown variables"));
        }
        Ok(self.constraints.iter().all(|c| {
            let vals: Vec<Value> = c.scope.iter().map(|&v| t.0[&v]).collect();
            c.allows(&vals)
        }))
    }
}

/// Exhaustive enumeration of all tuples on `V`, filtered by [`Csp::is_solution`].
pub fn solutions_bruteforce(csp: &Csp, cap: u128) -> Result<BTreeSet<Assignment>> {
    let dom = csp.domain();
    let product = dom
        .vars()
        .map(|v| dom.values(v).len() as u128)
        .try_fold(1u128, |acc, n| acc.checked_mul(n))
        .unwrap_or(u128::MAX);
    if product > cap {
        return Err(Error::EnumerationCap { product, cap });
    }
    let n = dom.var_count();
    let mut out = BTreeSet::new();
    let mut idx = vec![0usize; n];
    loop {
        let t = Assignment(dom.vars().map(|v| (v, dom.values(v)[idx[v.0]])).collect());
        if csp.is_solution(&t)? {
            out.insert(t);
        }
        // odometer
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < dom.values(VarId(k)).len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Incremental construction of a [`Csp`] by variable name.
#[derive(Debug, Default)]
pub struct CspBuilder {
    vars: Vec<(String, Vec<Value>)>,
    constraints: Vec<PendingConstraint>,
}

#[derive(Debug)]
enum PendingConstraint {
    Compare(Option<String>, String, CmpOp, String, Value),
    Table(Option<String>, Vec<String>, Vec<Vec<Value>>),
}

impl CspBuilder {
    pub fn var<I: IntoIterator<Item = Value>>(mut self, name: &str, values: I) -> Self {
        self.vars.push((name.to_string(), values.into_iter().collect()));
        self
    }

    pub fn compare(mut self, x: &str, op: CmpOp, y: &str, offset: Value) -> Self {
        self.constraints.push(PendingConstraint::Compare(
            None,
            x.to_string(),
            op,
            y.to_string(),
            offset,
        ));
        self
    }

    pub fn compare_with_id(mut self, id: &str, x: &str, op: CmpOp, y: &str, offset: Value) -> Self {
        self.constraints.push(PendingConstraint::Compare(
            Some(id.to_string()),
            x.to_string(),
            op,
            y.to_string(),
            offset,
        ));
        self
    }

    pub fn table(mut self, scope: &[&str], tuples: Vec<Vec<Value>>) -> Self {
        self.constraints.push(PendingConstraint::Table(
            None,
            scope.iter().map(|s| s.to_string()).collect(),
            tuples,
        ));
        self
    }

    /// Constraints without an explicit id are numbered `c1`, `c2`, ... in order.
    pub fn build(self) -> Result<Csp> {
        let dom = GlobalDomain::new(self.vars)?;
        let mut constraints = Vec::new();
        for (i, pc) in self.constraints.into_iter().enumerate() {
            let auto = format!("c{}", i + 1);
            constraints.push(match pc {
                PendingConstraint::Compare(id, x, op, y, k) => {
                    ConstraintSpec::compare(id.unwrap_or(auto), dom.lookup(&x)?, op, dom.lookup(&y)?, k)
                }
                PendingConstraint::Table(id, scope, tuples) => ConstraintSpec::table(
                    id.unwrap_or(auto),
                    scope.iter().map(|s| dom.lookup(s)).collect::<Result<Vec<_>>>()?,
                    tuples,
                ),
            });
        }
        Csp::new(dom, constraints)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conference() -> Csp {
        crate::instances::conference()
    }

    #[test]
    fn restrict_identity_and_empty() {
        let csp = conference();
        let all: Vec<VarId> = csp.domain().vars().collect();
        let d = csp.full_env();
        assert_eq!(d.restrict(&all).unwrap(), d);
        assert!(d.restrict(&[]).unwrap().is_empty());
        let empty = Environment::empty(csp.domain());
        assert!(empty.restrict(&[csp.var("PM").unwrap()]).unwrap().is_empty());
    }

    #[test]
    fn restrict_to_pm() {
        let csp = conference();
        let pm = csp.var("PM").unwrap();
        let r = csp.full_env().restrict(&[pm]).unwrap();
        let expected: Vec<DomainElement> = (1..=3).map(|v| DomainElement::new(pm, v)).collect();
        assert_eq!(r.elements().collect::<Vec<_>>(), expected);
    }

    #[test]
    fn restrict_unknown_variable() {
        let csp = conference();
        assert!(matches!(
            csp.full_env().restrict(&[VarId(17)]),
            Err(Error::UnknownVariable(_))
        ));
    }

    #[test]
    fn semantics_by_enumeration() {
        let csp = conference();
        let dom = csp.domain();
        let am = csp.var("AM").unwrap();
        let pm = csp.var("PM").unwrap();
        let ma = csp.var("MA").unwrap();

        let ne = ConstraintSpec::compare("t", am, CmpOp::Ne, pm, 0);
        let mut expected = BTreeSet::new();
        for a in 1..=3 {
            for b in 1..=3 {
                if a != b {
                    expected.insert(Assignment([(am, a), (pm, b)].into_iter().collect()));
                }
            }
        }
        assert_eq!(ne.semantics(dom).len(), 6);
        assert_eq!(ne.semantics(dom), expected);

        let gt = ConstraintSpec::compare("t", ma, CmpOp::Gt, am, 0);
        assert_eq!(gt.allowed_tuples(dom), vec![vec![2, 1], vec![3, 1], vec![3, 2]]);

        let eq = ConstraintSpec::compare("t", ma, CmpOp::Eq, am, 0);
        assert_eq!(eq.allowed_tuples(dom), vec![vec![1, 1], vec![2, 2], vec![3, 3]]);
    }

    #[test]
    fn conference_solutions() {
        let csp = conference();
        let sols = solutions_bruteforce(&csp, DEFAULT_ENUMERATION_CAP).unwrap();
        let names: BTreeSet<String> = sols.iter().map(|t| t.display(csp.domain())).collect();
        let expected: BTreeSet<String> = ["AM=2 MP=3 PM=1 MA=3", "AM=1 MP=3 PM=2 MA=3"]
            .into_iter()
            .map(String::from)
            .collect();
        assert_eq!(names, expected);

        let bad = Assignment(csp.domain().vars().map(|v| (v, 1)).collect());
        assert!(!csp.is_solution(&bad).unwrap());
    }

    #[test]
    fn is_solution_requires_full_tuple() {
        let csp = conference();
        let partial = Assignment([(VarId(0), 1)].into_iter().collect());
        assert!(matches!(csp.is_solution(&partial), Err(Error::Usage(_))));
    }

    #[test]
    fn unconstrained_and_capped() {
        let csp = Csp::builder().var("X", 1..=3).build().unwrap();
        assert_eq!(solutions_bruteforce(&csp, 100).unwrap().len(), 3);
        let big = Csp::builder()
            .var("A", 1..=100)
            .var("B", 1..=100)
            .var("C", 1..=100)
            .build()
            .unwrap();
        assert_eq!(
            solutions_bruteforce(&big, 1000),
            Err(Error::EnumerationCap {
                product: 1_000_000,
                cap: 1000
            })
        );
    }

    #[test]
    fn repeated_scope_rejected() {
        let r = Csp::builder().var("X", 1..=2).compare("X", CmpOp::Gt, "X", 0).build();
        assert!(matches!(r, Err(Error::MalformedConstraint(_))));
    }

    #[test]
    fn table_values_checked() {
        let r = Csp::builder()
            .var("X", 1..=2)
            .var("Y", 1..=2)
            .table(&["X", "Y"], vec![vec![1, 5]])
            .build();
        assert!(matches!(r, Err(Error::ValueOutsideDomain { .. })));
    }

    #[test]
    fn element_numbering_round_trips() {
        let dom = GlobalDomain::new([("A", vec![3, 1]), ("B", vec![7]), ("C", vec![-1, 0, 4])]).unwrap();
        for i in 0..dom.len() {
            assert_eq!(dom.index_of(dom.element(i)), Some(i));
        }
        assert_eq!(dom.element(0), DomainElement::new(VarId(0), 1));
        assert_eq!(dom.element(2), DomainElement::new(VarId(1), 7));
    }
}
