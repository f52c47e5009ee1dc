use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::{DomainKind, Ident, KernelError, Universe, Value};

/// One row of a predicate table: a domain index per scope column.
type Row = Vec<u32>;

/// A binding of identifiers to values: one (partial or full) state.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Valuation(BTreeMap<Ident, Value>);

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, ident: Ident, value: Value) -> Self {
        self.0.insert(ident, value);
        self
    }

    pub fn insert(&mut self, ident: Ident, value: Value) -> Option<Value> {
        self.0.insert(ident, value)
    }

    pub fn get(&self, ident: &Ident) -> Option<&Value> {
        self.0.get(ident)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Ident, &Value)> {
        self.0.iter()
    }

    pub fn idents(&self) -> impl Iterator<Item = &Ident> {
        self.0.keys()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Keeps only the bindings whose identifier satisfies `keep`.
    pub fn restrict(&self, mut keep: impl FnMut(&Ident) -> bool) -> Valuation {
        Valuation(
            self.0
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        )
    }
}

impl FromIterator<(Ident, Value)> for Valuation {
    fn from_iter<T: IntoIterator<Item = (Ident, Value)>>(iter: T) -> Self {
        Valuation(iter.into_iter().collect())
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// A set of states, stored as a table of rows over a finite scope and read
/// cylindrically: a full state belongs to the predicate iff its restriction
/// to the scope is one of the rows.
///
/// The empty scope with one empty row is `true`; any scope with no rows is
/// `false`. Structural equality (`==`) compares tables; use
/// [`Predicate::equivalent`] for set equality.
#[derive(Debug, Clone)]
pub struct Predicate {
    universe: Arc<Universe>,
    scope: Vec<Ident>,
    rows: BTreeSet<Row>,
}

impl PartialEq for Predicate {
    fn eq(&self, other: &Self) -> bool {
        self.scope == other.scope
            && self.rows == other.rows
            && (Arc::ptr_eq(&self.universe, &other.universe) || self.universe == other.universe)
    }
}

impl Eq for Predicate {}

/// Calls `f` on every row over columns of the given sizes, in lexicographic
/// order. A zero-column scope has exactly one (empty) row.
fn for_each_row(sizes: &[u32], mut f: impl FnMut(&[u32])) {
    if sizes.contains(&0) {
        return;
    }
    let mut row = vec![0u32; sizes.len()];
    loop {
        f(&row);
        let mut col = sizes.len();
        loop {
            if col == 0 {
                return;
            }
            col -= 1;
            row[col] += 1;
            if row[col] < sizes[col] {
                break;
            }
            row[col] = 0;
        }
    }
}

impl Predicate {
    /// The predicate satisfied by every state.
    pub fn truth(universe: &Arc<Universe>) -> Self {
        Predicate {
            universe: universe.clone(),
            scope: Vec::new(),
            rows: BTreeSet::from([Vec::new()]),
        }
    }

    /// The predicate satisfied by no state.
    pub fn falsity(universe: &Arc<Universe>) -> Self {
        Predicate {
            universe: universe.clone(),
            scope: Vec::new(),
            rows: BTreeSet::new(),
        }
    }

    fn sorted_scope(universe: &Universe, scope: impl IntoIterator<Item = Ident>) -> Result<Vec<Ident>, KernelError> {
        let scope: BTreeSet<Ident> = scope.into_iter().collect();
        for ident in &scope {
            universe.domain(ident)?;
        }
        Ok(scope.into_iter().collect())
    }

    /// Number of valuations over `scope`; saturates instead of overflowing.
    pub fn cell_count<'a>(universe: &Universe, scope: impl IntoIterator<Item = &'a Ident>) -> Result<u64, KernelError> {
        scope.into_iter().try_fold(1u64, |acc, ident| {
            Ok(acc.saturating_mul(universe.domain(ident)?.len() as u64))
        })
    }

    /// Enumerates every valuation of `scope` and keeps those accepted by `f`.
    pub fn from_fn(
        universe: &Arc<Universe>,
        scope: impl IntoIterator<Item = Ident>,
        mut f: impl FnMut(&Valuation) -> bool,
    ) -> Result<Self, KernelError> {
        let scope = Self::sorted_scope(universe, scope)?;
        let domains = scope
            .iter()
            .map(|i| universe.domain(i))
            .collect::<Result<Vec<_>, _>>()?;
        let sizes: Vec<u32> = domains.iter().map(|d| d.len() as u32).collect();
        let mut rows = BTreeSet::new();
        for_each_row(&sizes, |row| {
            let valuation = scope
                .iter()
                .zip(row)
                .zip(&domains)
                .map(|((i, &x), d)| (i.clone(), d.value(x).clone()))
                .collect();
            if f(&valuation) {
                rows.insert(row.to_vec());
            }
        });
        Ok(Predicate {
            universe: universe.clone(),
            scope,
            rows,
        })
    }

    /// Builds a table from explicit rows, each binding exactly `scope`.
    pub fn from_valuations(
        universe: &Arc<Universe>,
        scope: impl IntoIterator<Item = Ident>,
        valuations: impl IntoIterator<Item = Valuation>,
    ) -> Result<Self, KernelError> {
        let scope = Self::sorted_scope(universe, scope)?;
        let mut rows = BTreeSet::new();
        for valuation in valuations {
            if valuation.len() != scope.len() {
                if let Some(extra) = valuation.idents().find(|i| !scope.contains(i)) {
                    return Err(KernelError::Unbound(extra.clone()));
                }
            }
            let row = scope
                .iter()
                .map(|ident| {
                    let value = valuation.get(ident).ok_or_else(|| KernelError::Unbound(ident.clone()))?;
                    universe
                        .domain(ident)?
                        .index_of(value)
                        .ok_or_else(|| KernelError::ValueOutOfDomain {
                            ident: ident.clone(),
                            value: value.clone(),
                        })
                })
                .collect::<Result<Row, _>>()?;
            rows.insert(row);
        }
        Ok(Predicate {
            universe: universe.clone(),
            scope,
            rows,
        })
    }

    /// The single-row predicate fixing every identifier bound in `state`.
    pub fn point(universe: &Arc<Universe>, state: &Valuation) -> Result<Self, KernelError> {
        Self::from_valuations(universe, state.idents().cloned(), [state.clone()])
    }

    /// `ident = value`.
    pub fn equals(universe: &Arc<Universe>, ident: Ident, value: Value) -> Result<Self, KernelError> {
        Self::point(universe, &Valuation::new().with(ident, value))
    }

    /// The stuttering relation `v' = v` for one variable.
    pub fn identity(universe: &Arc<Universe>, var: &Ident) -> Result<Self, KernelError> {
        let primed = var.prime()?;
        let n = universe.domain(var)?.len() as u32;
        Ok(Predicate {
            universe: universe.clone(),
            scope: vec![var.clone(), primed],
            rows: (0..n).map(|i| vec![i, i]).collect(),
        })
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    /// The syntactic scope; `free()` may be strictly smaller.
    pub fn scope(&self) -> &[Ident] {
        &self.scope
    }

    /// Number of rows in the table (not the number of full states).
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn is_unsatisfiable(&self) -> bool {
        self.rows.is_empty()
    }

    /// True iff every state satisfies the predicate.
    pub fn is_valid(&self) -> bool {
        !self.rows.is_empty() && self.free().is_empty()
    }

    fn decode(&self, row: &[u32]) -> Valuation {
        self.scope
            .iter()
            .zip(row)
            .map(|(ident, &x)| {
                let domain = self.universe.domain(ident).expect("scope idents are declared");
                (ident.clone(), domain.value(x).clone())
            })
            .collect()
    }

    /// The rows of the table in canonical order.
    pub fn valuations(&self) -> impl Iterator<Item = Valuation> + '_ {
        self.rows.iter().map(|r| self.decode(r))
    }

    /// Membership of a state that binds at least the scope.
    pub fn satisfied_by(&self, state: &Valuation) -> Result<bool, KernelError> {
        let row = self
            .scope
            .iter()
            .map(|ident| {
                let value = state.get(ident).ok_or_else(|| KernelError::Unbound(ident.clone()))?;
                Ok(self.universe.domain(ident)?.index_of(value))
            })
            .collect::<Result<Option<Row>, KernelError>>()?;
        Ok(row.is_some_and(|r| self.rows.contains(&r)))
    }

    fn sizes(&self) -> Vec<u32> {
        self.scope
            .iter()
            .map(|i| self.universe.domain(i).expect("scope idents are declared").len() as u32)
            .collect()
    }

    fn check_compatible(&self, other: &Predicate) -> Result<(), KernelError> {
        if Arc::ptr_eq(&self.universe, &other.universe) || self.universe == other.universe {
            return Ok(());
        }
        for ident in &other.scope {
            let theirs = other.universe.domain(ident)?;
            match self.universe.domain(ident) {
                Ok(ours) if ours == theirs => {}
                _ => return Err(KernelError::DomainMismatch { ident: ident.clone() }),
            }
        }
        Ok(())
    }

    /// Free: the identifiers on which membership actually depends.
    ///
    /// Column `c` is free iff some assignment of the other columns admits
    /// only part of `c`'s domain.
    pub fn free(&self) -> BTreeSet<Ident> {
        let sizes = self.sizes();
        let mut free = BTreeSet::new();
        for (col, ident) in self.scope.iter().enumerate() {
            let mut groups: HashMap<Row, u32> = HashMap::new();
            for row in &self.rows {
                let mut key = row.clone();
                key.remove(col);
                *groups.entry(key).or_default() += 1;
            }
            if groups.values().any(|&n| n < sizes[col]) {
                free.insert(ident.clone());
            }
        }
        free
    }

    /// Proj: existential quantification of every scope column not in `keep`.
    pub fn proj(&self, keep: &BTreeSet<Ident>) -> Predicate {
        let cols: Vec<usize> = (0..self.scope.len()).filter(|&c| keep.contains(&self.scope[c])).collect();
        self.project_columns(&cols)
    }

    fn project_columns(&self, cols: &[usize]) -> Predicate {
        Predicate {
            universe: self.universe.clone(),
            scope: cols.iter().map(|&c| self.scope[c].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| cols.iter().map(|&c| r[c]).collect())
                .collect(),
        }
    }

    /// The same set of states with the table cut down to its free columns.
    pub fn normalized(&self) -> Predicate {
        self.proj(&self.free())
    }

    /// Subst: renames free identifiers along the partial map `renaming`.
    ///
    /// Requires the map to be injective on `free(self)`, domain-preserving,
    /// and not to capture a free identifier left outside its domain.
    /// Non-free columns are dropped before renaming.
    pub fn subst(&self, renaming: &BTreeMap<Ident, Ident>) -> Result<Predicate, KernelError> {
        let base = self.normalized();
        let free: BTreeSet<&Ident> = base.scope.iter().collect();
        let mut targets: BTreeMap<&Ident, &Ident> = BTreeMap::new();
        for from in base.scope.iter().filter(|i| renaming.contains_key(*i)) {
            let to = &renaming[from];
            if self.universe.domain(to)? != self.universe.domain(from)? {
                return Err(KernelError::DomainMismatch { ident: to.clone() });
            }
            if let Some(prev) = targets.insert(to, from) {
                return Err(KernelError::NonInjective {
                    first: prev.clone(),
                    second: from.clone(),
                    target: to.clone(),
                });
            }
            if free.contains(to) && !renaming.contains_key(to) {
                return Err(KernelError::Capture {
                    from: from.clone(),
                    to: to.clone(),
                });
            }
        }
        let renamed: Vec<Ident> = base
            .scope
            .iter()
            .map(|i| renaming.get(i).unwrap_or(i).clone())
            .collect();
        let mut order: Vec<usize> = (0..renamed.len()).collect();
        order.sort_by(|&a, &b| renamed[a].cmp(&renamed[b]));
        Ok(Predicate {
            universe: self.universe.clone(),
            scope: order.iter().map(|&c| renamed[c].clone()).collect(),
            rows: base
                .rows
                .iter()
                .map(|r| order.iter().map(|&c| r[c]).collect())
                .collect(),
        })
    }

    /// Conjunction: the natural join of the two tables.
    pub fn intersect(&self, other: &Predicate) -> Result<Predicate, KernelError> {
        self.check_compatible(other)?;
        Ok(self.join(other))
    }

    /// Conjunction of any number of predicates; `true` when empty.
    pub fn intersect_all<'a>(
        universe: &Arc<Universe>,
        preds: impl IntoIterator<Item = &'a Predicate>,
    ) -> Result<Predicate, KernelError> {
        preds
            .into_iter()
            .try_fold(Predicate::truth(universe), |acc, p| acc.intersect(p))
    }

    fn join(&self, other: &Predicate) -> Predicate {
        let scope: Vec<Ident> = self
            .scope
            .iter()
            .chain(&other.scope)
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let pos = |i: &Ident| scope.binary_search(i).expect("ident is in merged scope");
        let left_pos: Vec<usize> = self.scope.iter().map(pos).collect();
        let right_pos: Vec<usize> = other.scope.iter().map(pos).collect();
        let shared: Vec<(usize, usize)> = self
            .scope
            .iter()
            .enumerate()
            .filter_map(|(l, i)| other.scope.binary_search(i).ok().map(|r| (l, r)))
            .collect();

        let mut index: HashMap<Row, Vec<&Row>> = HashMap::new();
        for r in &other.rows {
            let key = shared.iter().map(|&(_, c)| r[c]).collect();
            index.entry(key).or_default().push(r);
        }
        let mut rows = BTreeSet::new();
        for l in &self.rows {
            let key: Row = shared.iter().map(|&(c, _)| l[c]).collect();
            let Some(matches) = index.get(&key) else { continue };
            for r in matches {
                let mut row = vec![0u32; scope.len()];
                for (c, &x) in l.iter().enumerate() {
                    row[left_pos[c]] = x;
                }
                for (c, &x) in r.iter().enumerate() {
                    row[right_pos[c]] = x;
                }
                rows.insert(row);
            }
        }
        Predicate {
            universe: self.universe.clone(),
            scope,
            rows,
        }
    }

    /// The complement relative to the full valuation space of the scope.
    pub fn complement(&self) -> Predicate {
        let mut rows = BTreeSet::new();
        for_each_row(&self.sizes(), |row| {
            if !self.rows.contains(row) {
                rows.insert(row.to_vec());
            }
        });
        Predicate {
            universe: self.universe.clone(),
            scope: self.scope.clone(),
            rows,
        }
    }

    /// States of `self` outside `other`, over the union of both scopes.
    pub fn difference(&self, other: &Predicate) -> Result<Predicate, KernelError> {
        self.check_compatible(other)?;
        Ok(self.join(&other.complement()))
    }

    /// The same set of states, tabulated over `scope ∪ self.scope()`.
    pub fn extend_to(&self, scope: &BTreeSet<Ident>) -> Result<Predicate, KernelError> {
        let extra: Vec<Ident> = scope.iter().filter(|i| !self.scope.contains(i)).cloned().collect();
        let full = Predicate::from_fn(&self.universe, extra, |_| true)?;
        Ok(self.join(&full))
    }

    /// Set inclusion: every state satisfying `self` satisfies `other`.
    pub fn entails(&self, other: &Predicate) -> Result<bool, KernelError> {
        Ok(self.entailment_witness(other)?.is_none())
    }

    /// The smallest state (over both scopes) in `self` but not in `other`.
    pub fn entailment_witness(&self, other: &Predicate) -> Result<Option<Valuation>, KernelError> {
        let diff = self.difference(other)?;
        Ok(diff.rows.iter().next().map(|r| diff.decode(r)))
    }

    /// Set equality of the two cylinders.
    pub fn equivalent(&self, other: &Predicate) -> Result<bool, KernelError> {
        Ok(self.distinguishing_state(other)?.is_none())
    }

    /// The smallest state (over both scopes) in the symmetric difference.
    pub fn distinguishing_state(&self, other: &Predicate) -> Result<Option<Valuation>, KernelError> {
        let left = self.difference(other)?;
        let right = other.difference(self)?;
        debug_assert_eq!(left.scope, right.scope);
        let first = match (left.rows.first(), right.rows.first()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Ok(first.map(|r| left.decode(r)))
    }

    /// The finest partition of `free(self)` into blocks `B1..Bk` with
    /// `self ≡ proj(B1, self) ∩ … ∩ proj(Bk, self)`. Empty when nothing is free.
    ///
    /// Product decompositions of a non-empty relation are closed under
    /// intersection of their blocks, so the block holding the smallest
    /// remaining column is the smallest separable set containing it. Blocks
    /// come out ordered by their least identifier.
    pub fn conjunct_blocks(&self) -> Vec<BTreeSet<Ident>> {
        let base = self.normalized();
        if base.rows.is_empty() {
            return Vec::new();
        }
        let distinct = |cols: &[usize]| -> usize {
            base.rows
                .iter()
                .map(|r| cols.iter().map(|&c| r[c]).collect::<Row>())
                .collect::<HashSet<_>>()
                .len()
        };
        let mut remaining: Vec<usize> = (0..base.scope.len()).collect();
        let mut blocks = Vec::new();
        while !remaining.is_empty() {
            let total = distinct(&remaining);
            let (head, rest) = (remaining[0], &remaining[1..]);
            let mut chosen: Option<Vec<usize>> = None;
            'sizes: for k in 0..rest.len() {
                for combo in combinations(rest.len(), k) {
                    let mut block = vec![head];
                    block.extend(combo.iter().map(|&j| rest[j]));
                    let others: Vec<usize> = remaining.iter().copied().filter(|c| !block.contains(c)).collect();
                    if distinct(&block).checked_mul(distinct(&others)) == Some(total) {
                        chosen = Some(block);
                        break 'sizes;
                    }
                }
            }
            let block = chosen.unwrap_or_else(|| remaining.clone());
            remaining.retain(|c| !block.contains(c));
            blocks.push(block.iter().map(|&c| base.scope[c].clone()).collect());
        }
        blocks
    }

    /// Conjuncts: the projections of `self` on its finest blocks, or
    /// `{self}` when nothing is free.
    pub fn conjuncts(&self) -> Vec<Predicate> {
        let blocks = self.conjunct_blocks();
        if blocks.is_empty() {
            return vec![self.clone()];
        }
        blocks.iter().map(|b| self.proj(b)).collect()
    }

    /// Every finest block is a single identifier.
    pub fn is_decomposable(&self) -> bool {
        self.conjunct_blocks().iter().all(|b| b.len() == 1)
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut current: Option<Vec<usize>> = if k <= n { Some((0..k).collect()) } else { None };
    std::iter::from_fn(move || {
        let out = current.clone()?;
        let mut next = out.clone();
        let mut i = k;
        current = loop {
            if i == 0 {
                break None;
            }
            i -= 1;
            if next[i] < n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                break Some(next);
            }
        };
        Some(out)
    })
}

// ---------------------------------------------------------------------------
// Rendering

fn literal(ident: &Ident, value: &Value, negated: bool) -> String {
    format!("{ident} {} {value}", if negated { "!=" } else { "=" })
}

fn render_column(p: &Predicate) -> String {
    let ident = &p.scope[0];
    let domain = p.universe.domain(ident).expect("scope idents are declared");
    let present: Vec<u32> = p.rows.iter().map(|r| r[0]).collect();
    let n = domain.len() as u32;
    if present.len() == 1 {
        return literal(ident, domain.value(present[0]), false);
    }
    if present.len() as u32 + 1 == n {
        let missing = (0..n).find(|i| !present.contains(i)).expect("one value is missing");
        return literal(ident, domain.value(missing), true);
    }
    let contiguous = present.windows(2).all(|w| w[1] == w[0] + 1);
    if contiguous && matches!(domain.kind(), DomainKind::Range { .. }) {
        let (lo, hi) = (domain.value(present[0]), domain.value(*present.last().unwrap()));
        let first = present[0] == 0;
        let last = *present.last().unwrap() == n - 1;
        return match (first, last) {
            (true, _) => format!("{ident} <= {hi}"),
            (_, true) => format!("{ident} >= {lo}"),
            _ => format!("({lo} <= {ident} & {ident} <= {hi})"),
        };
    }
    let alts: Vec<String> = present.iter().map(|&x| literal(ident, domain.value(x), false)).collect();
    format!("({})", alts.join(" | "))
}

fn render_block(p: &Predicate) -> String {
    if p.scope.len() == 1 {
        return render_column(p);
    }
    let alts: Vec<String> = p
        .valuations()
        .map(|v| {
            v.iter()
                .map(|(i, x)| literal(i, x, false))
                .collect::<Vec<_>>()
                .join(" & ")
        })
        .collect();
    if alts.len() == 1 {
        alts.into_iter().next().unwrap()
    } else {
        format!("({})", alts.join(" | "))
    }
}

/// Renders the predicate as an ASCII expression: a conjunction over its
/// finest conjuncts, each written as a disjunction of its rows.
impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rows.is_empty() {
            return f.write_str("false");
        }
        let blocks = self.conjunct_blocks();
        if blocks.is_empty() {
            return f.write_str("true");
        }
        let parts: Vec<String> = blocks.iter().map(|b| render_block(&self.proj(b))).collect();
        f.write_str(&parts.join(" & "))
    }
}

impl Serialize for Predicate {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{Domain, IdentKind};

    fn universe() -> Arc<Universe> {
        Arc::new(
            Universe::new()
                .with_var("x", Domain::range(0, 3).unwrap())
                .unwrap()
                .with_var("y", Domain::range(0, 3).unwrap())
                .unwrap()
                .with_var("p", Domain::boolean())
                .unwrap()
                .with_var("v", Domain::range(0, 3).unwrap())
                .unwrap()
                .with_var("b", Domain::range(0, 1).unwrap())
                .unwrap()
                .with_var("c", Domain::range(0, 1).unwrap())
                .unwrap()
                .with_param("q", Domain::range(0, 3).unwrap())
                .unwrap()
                .with_var("z", Domain::range(0, 4).unwrap())
                .unwrap(),
        )
    }

    fn x() -> Ident {
        Ident::var("x")
    }
    fn y() -> Ident {
        Ident::var("y")
    }
    fn int(u: &Arc<Universe>, name: &str, v: i64) -> Predicate {
        Predicate::equals(u, u.ident(name).unwrap(), Value::Int(v)).unwrap()
    }
    fn set<const N: usize>(ids: [Ident; N]) -> BTreeSet<Ident> {
        ids.into()
    }

    #[test]
    fn truth_and_falsity() {
        let u = universe();
        let t = Predicate::truth(&u);
        assert!(t.is_valid());
        assert!(t.free().is_empty());
        assert!(Predicate::falsity(&u).is_unsatisfiable());
        assert_eq!(t.to_string(), "true");
        assert_eq!(Predicate::falsity(&u).to_string(), "false");
    }

    #[test]
    fn free_of_full_table_is_empty() {
        let u = universe();
        let p = Predicate::from_fn(&u, [x()], |_| true).unwrap();
        assert!(p.free().is_empty());
        assert_eq!(p.scope().len(), 1);
        assert!(p.equivalent(&Predicate::truth(&u)).unwrap());
    }

    #[test]
    fn free_of_single_column_restriction() {
        let u = universe();
        let v = Ident::var("v");
        assert_eq!(int(&u, "v", 2).free(), set([v]));
    }

    #[test]
    fn free_of_correlated_binary_columns() {
        let u = universe();
        let (b, c) = (Ident::var("b"), Ident::var("c"));
        let p = Predicate::from_fn(&u, [b.clone(), c.clone()], |s| s.get(&b) == s.get(&c)).unwrap();
        assert_eq!(p.free(), set([b, c]));
    }

    #[test]
    fn free_drops_irrelevant_scope() {
        let u = universe();
        let p = Predicate::from_fn(&u, [x(), y()], |s| s.get(&x()) == Some(&Value::Int(1))).unwrap();
        assert_eq!(p.scope().len(), 2);
        assert_eq!(p.free(), set([x()]));
    }

    #[test]
    fn subst_renames_to_primed() {
        let u = universe();
        let r = BTreeMap::from([(x(), x().prime().unwrap())]);
        let renamed = int(&u, "x", 1).subst(&r).unwrap();
        let expected = Predicate::equals(&u, x().prime().unwrap(), Value::Int(1)).unwrap();
        assert_eq!(renamed, expected);
    }

    #[test]
    fn subst_identity_is_noop() {
        let u = universe();
        let p = int(&u, "x", 1).intersect(&int(&u, "y", 2)).unwrap();
        let r = BTreeMap::from([(x(), x()), (y(), y())]);
        assert_eq!(p.subst(&r).unwrap(), p);
    }

    #[test]
    fn subst_unprime_over_two_columns() {
        let u = universe();
        let (xp, yp) = (x().prime().unwrap(), y().prime().unwrap());
        let p = Predicate::equals(&u, xp.clone(), Value::Int(0))
            .unwrap()
            .intersect(&Predicate::equals(&u, yp.clone(), Value::Int(1)).unwrap())
            .unwrap();
        let r = BTreeMap::from([(xp, x()), (yp, y())]);
        let q = p.subst(&r).unwrap();
        // Row-wise oracle: each row of p, keys unprimed.
        let expected: Vec<Valuation> = p
            .valuations()
            .map(|v| v.iter().map(|(i, val)| (i.unprime().unwrap(), val.clone())).collect())
            .collect();
        assert_eq!(q.valuations().collect::<Vec<_>>(), expected);
        assert!(q.equivalent(&int(&u, "x", 0).intersect(&int(&u, "y", 1)).unwrap()).unwrap());
    }

    #[test]
    fn subst_errors() {
        let u = universe();
        let p = Predicate::from_fn(&u, [x(), y()], |s| s.get(&x()) == s.get(&y())).unwrap();
        // x -> y while y stays free: capture
        let capture = BTreeMap::from([(x(), y())]);
        assert!(matches!(p.subst(&capture), Err(KernelError::Capture { .. })));
        // x, y -> v: not injective
        let v = Ident::var("v");
        let merge = BTreeMap::from([(x(), v.clone()), (y(), v)]);
        assert!(matches!(p.subst(&merge), Err(KernelError::NonInjective { .. })));
        // x -> p: different domain
        let mismatch = BTreeMap::from([(x(), Ident::var("p"))]);
        assert!(matches!(
            int(&u, "x", 1).subst(&mismatch),
            Err(KernelError::DomainMismatch { .. })
        ));
        // swapping x and y is fine
        let swap = BTreeMap::from([(x(), y()), (y(), x())]);
        assert!(p.subst(&swap).unwrap().equivalent(&p).unwrap());
    }

    #[test]
    fn proj_cases() {
        let u = universe();
        let p = int(&u, "x", 1).intersect(&int(&u, "y", 2)).unwrap();
        assert_eq!(p.proj(&set([x()])), int(&u, "x", 1));
        assert!(p.proj(&p.free()).equivalent(&p).unwrap());
        let t = p.proj(&BTreeSet::new());
        assert!(t.is_valid());
        assert_eq!(t, Predicate::truth(&u));
        // keep may mention idents outside the scope
        assert_eq!(p.proj(&set([x(), Ident::var("v")])), int(&u, "x", 1));
    }

    #[test]
    fn intersect_cases() {
        let u = universe();
        let p = int(&u, "x", 1);
        assert_eq!(p.intersect(&Predicate::truth(&u)).unwrap(), p);
        assert!(p.intersect(&int(&u, "x", 2)).unwrap().is_unsatisfiable());
        let j = p.intersect(&int(&u, "y", 0)).unwrap();
        let rows: Vec<_> = j.valuations().collect();
        assert_eq!(
            rows,
            vec![Valuation::new().with(x(), Value::Int(1)).with(y(), Value::Int(0))]
        );
    }

    #[test]
    fn intersect_across_universes() {
        let u = universe();
        let other = Arc::new(Universe::new().with_var("x", Domain::range(0, 5).unwrap()).unwrap());
        let q = Predicate::equals(&other, x(), Value::Int(1)).unwrap();
        assert!(matches!(
            int(&u, "x", 1).intersect(&q),
            Err(KernelError::DomainMismatch { .. })
        ));
        let same = Arc::new((*u).clone());
        let r = Predicate::equals(&same, x(), Value::Int(1)).unwrap();
        assert!(int(&u, "x", 1).intersect(&r).is_ok());
    }

    #[test]
    fn entails_cases() {
        let u = universe();
        assert!(Predicate::falsity(&u).entails(&int(&u, "x", 3)).unwrap());
        let xy = int(&u, "x", 1).intersect(&int(&u, "y", 2)).unwrap();
        assert!(xy.entails(&int(&u, "x", 1)).unwrap());
        let le1 = Predicate::from_fn(&u, [x()], |s| matches!(s.get(&x()), Some(Value::Int(i)) if *i <= 1)).unwrap();
        assert!(!le1.entails(&int(&u, "x", 1)).unwrap());
        assert_eq!(
            le1.entailment_witness(&int(&u, "x", 1)).unwrap(),
            Some(Valuation::new().with(x(), Value::Int(0)))
        );
    }

    #[test]
    fn small_conjuncts_examples() {
        let u = universe();
        let p_true = Predicate::equals(&u, Ident::var("p"), Value::Bool(true)).unwrap();
        let v2 = int(&u, "v", 2);
        let both = p_true.intersect(&v2).unwrap();
        let cs = both.conjuncts();
        assert_eq!(cs.len(), 2);
        assert!(cs[0].equivalent(&p_true).unwrap());
        assert!(cs[1].equivalent(&v2).unwrap());
        assert_eq!(p_true.conjuncts(), vec![p_true.clone()]);
    }

    #[test]
    fn correlated_predicate_is_one_conjunct() {
        let u = universe();
        let (b, c) = (Ident::var("b"), Ident::var("c"));
        let p = Predicate::from_fn(&u, [b.clone(), c.clone()], |s| s.get(&b) == s.get(&c)).unwrap();
        assert_eq!(p.conjunct_blocks(), vec![set([b, c])]);
        assert!(!p.is_decomposable());
    }

    #[test]
    fn finest_block_need_not_start_with_earliest_pair() {
        // b independent, c and x correlated: blocks {b}, {c, x}.
        let u = universe();
        let (b, c) = (Ident::var("b"), Ident::var("c"));
        let p = Predicate::from_fn(&u, [b.clone(), c.clone(), x()], |s| {
            s.get(&b) == Some(&Value::Int(0)) && matches!((s.get(&c), s.get(&x())), (Some(Value::Int(i)), Some(Value::Int(j))) if i == j)
        })
        .unwrap();
        assert_eq!(p.conjunct_blocks(), vec![set([b]), set([c, x()])]);
    }

    #[test]
    fn decomposable_cases() {
        let u = universe();
        assert!(int(&u, "x", 1).intersect(&int(&u, "y", 2)).unwrap().is_decomposable());
        assert!(Predicate::truth(&u).is_decomposable());
        assert!(Predicate::falsity(&u).is_decomposable());
    }

    #[test]
    fn distinguishing_state_is_smallest() {
        let u = universe();
        let a = int(&u, "x", 2);
        let b = int(&u, "x", 1);
        assert_eq!(
            a.distinguishing_state(&b).unwrap(),
            Some(Valuation::new().with(x(), Value::Int(1)))
        );
        assert_eq!(a.distinguishing_state(&a).unwrap(), None);
    }

    #[test]
    fn rendering() {
        let u = universe();
        let z = Ident::var("z");
        let mid = Predicate::from_fn(&u, [z.clone()], |s| matches!(s.get(&z), Some(Value::Int(i)) if (1..=3).contains(i))).unwrap();
        assert_eq!(mid.to_string(), "(1 <= z & z <= 3)");
        let le = Predicate::from_fn(&u, [x()], |s| matches!(s.get(&x()), Some(Value::Int(i)) if *i <= 2)).unwrap();
        assert_eq!(le.to_string(), "x != 3");
        let p = Predicate::equals(&u, Ident::var("p"), Value::Bool(true)).unwrap();
        assert_eq!(p.intersect(&int(&u, "v", 2)).unwrap().to_string(), "p = true & v = 2");
        let id = Predicate::identity(&u, &Ident::var("b")).unwrap();
        assert_eq!(id.to_string(), "(b = 0 & b' = 0 | b = 1 & b' = 1)");
        assert_eq!(
            Predicate::equals(&u, Ident::new("x", IdentKind::Prime), Value::Int(0)).unwrap().to_string(),
            "x' = 0"
        );
    }

    #[test]
    fn combinations_enumerate_lexicographically() {
        let all: Vec<_> = combinations(4, 2).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 1]);
        assert_eq!(all[5], vec![2, 3]);
        assert_eq!(combinations(3, 0).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(2, 3).count(), 0);
    }

    #[test]
    fn satisfied_by_requires_bindings() {
        let u = universe();
        let p = int(&u, "x", 1);
        assert!(p.satisfied_by(&Valuation::new().with(x(), Value::Int(1)).with(y(), Value::Int(3))).unwrap());
        assert!(!p.satisfied_by(&Valuation::new().with(x(), Value::Int(0))).unwrap());
        assert!(matches!(p.satisfied_by(&Valuation::new()), Err(KernelError::Unbound(_))));
    }
}
