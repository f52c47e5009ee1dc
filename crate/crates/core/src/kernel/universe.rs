use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::{Ident, IdentKind, KernelError};

/// A concrete value drawn from a finite domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Sym(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Sym(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DomainKind {
    Bool,
    Range { lo: i64, hi: i64 },
    Enum,
}

/// A finite, non-empty, ordered list of values. The declaration order is
/// the canonical order used everywhere rows are enumerated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    kind: DomainKind,
    values: Vec<Value>,
}

impl Domain {
    pub fn boolean() -> Self {
        Domain {
            kind: DomainKind::Bool,
            values: vec![Value::Bool(false), Value::Bool(true)],
        }
    }

    pub fn range(lo: i64, hi: i64) -> Result<Self, KernelError> {
        if lo > hi {
            return Err(KernelError::InvalidDomain(format!("empty range {lo}..{hi}")));
        }
        Ok(Domain {
            kind: DomainKind::Range { lo, hi },
            values: (lo..=hi).map(Value::Int).collect(),
        })
    }

    pub fn enumeration<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self, KernelError> {
        let mut values = Vec::new();
        for s in symbols {
            let v = Value::Sym(s.into());
            if values.contains(&v) {
                return Err(KernelError::InvalidDomain(format!("duplicate symbol {v}")));
            }
            values.push(v);
        }
        if values.is_empty() {
            return Err(KernelError::InvalidDomain("empty enumeration".into()));
        }
        Ok(Domain {
            kind: DomainKind::Enum,
            values,
        })
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index_of(&self, value: &Value) -> Option<u32> {
        match (&self.kind, value) {
            (DomainKind::Bool, Value::Bool(b)) => Some(*b as u32),
            (DomainKind::Range { lo, hi }, Value::Int(i)) if lo <= i && i <= hi => Some((i - lo) as u32),
            (DomainKind::Enum, Value::Sym(_)) => self.values.iter().position(|v| v == value).map(|i| i as u32),
            _ => None,
        }
    }

    pub fn value(&self, index: u32) -> &Value {
        &self.values[index as usize]
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DomainKind::Bool => f.write_str("BOOL"),
            DomainKind::Range { lo, hi } => write!(f, "{lo}..{hi}"),
            DomainKind::Enum => {
                f.write_str("enum { ")?;
                for (i, v) in self.values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(" }")
            }
        }
    }
}

/// Whether a declared base name denotes a state variable (and therefore
/// also its primed image) or an event parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Role {
    Var,
    Param,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declaration {
    pub role: Role,
    pub domain: Domain,
}

/// The finite value domain of every base name. A variable and its primed
/// image share one declaration, so they always share a domain.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Universe {
    decls: BTreeMap<String, Declaration>,
}

impl Universe {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: impl Into<String>, role: Role, domain: Domain) -> Result<(), KernelError> {
        let name = name.into();
        if self.decls.contains_key(&name) {
            return Err(KernelError::DuplicateName(name));
        }
        self.decls.insert(name, Declaration { role, domain });
        Ok(())
    }

    pub fn with_var(mut self, name: &str, domain: Domain) -> Result<Self, KernelError> {
        self.declare(name, Role::Var, domain)?;
        Ok(self)
    }

    pub fn with_param(mut self, name: &str, domain: Domain) -> Result<Self, KernelError> {
        self.declare(name, Role::Param, domain)?;
        Ok(self)
    }

    pub fn declarations(&self) -> impl Iterator<Item = (&str, &Declaration)> {
        self.decls.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn declaration(&self, name: &str) -> Option<&Declaration> {
        self.decls.get(name)
    }

    /// The identifier of kind `Var` or `Param` that `name` was declared as.
    pub fn ident(&self, name: &str) -> Result<Ident, KernelError> {
        let decl = self
            .decls
            .get(name)
            .ok_or_else(|| KernelError::UnknownName(name.to_string()))?;
        Ok(match decl.role {
            Role::Var => Ident::var(name),
            Role::Param => Ident::param(name),
        })
    }

    /// Domain of an identifier; checks that the identifier's kind agrees
    /// with the declared role of its base name.
    pub fn domain(&self, ident: &Ident) -> Result<&Domain, KernelError> {
        let decl = self
            .decls
            .get(ident.base())
            .ok_or_else(|| KernelError::UnknownName(ident.base().to_string()))?;
        let ok = matches!(
            (decl.role, ident.kind()),
            (Role::Var, IdentKind::Var) | (Role::Var, IdentKind::Prime) | (Role::Param, IdentKind::Param)
        );
        if !ok {
            return Err(KernelError::Kind {
                ident: ident.clone(),
                expected: match decl.role {
                    Role::Var => IdentKind::Var,
                    Role::Param => IdentKind::Param,
                },
            });
        }
        Ok(&decl.domain)
    }

    /// Smallest and largest integer over every integer domain, if any.
    pub fn int_hull(&self) -> Option<(i64, i64)> {
        self.decls
            .values()
            .filter_map(|d| match d.domain.kind {
                DomainKind::Range { lo, hi } => Some((lo, hi)),
                _ => None,
            })
            .reduce(|(a, b), (c, d)| (a.min(c), b.max(d)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domains_are_ordered_and_indexed() {
        let d = Domain::range(2, 5).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d.index_of(&Value::Int(4)), Some(2));
        assert_eq!(d.index_of(&Value::Int(6)), None);
        assert_eq!(d.index_of(&Value::Bool(true)), None);
        assert_eq!(Domain::boolean().index_of(&Value::Bool(true)), Some(1));
        let e = Domain::enumeration(["red", "green"]).unwrap();
        assert_eq!(e.index_of(&Value::Sym("green".into())), Some(1));
    }

    #[test]
    fn invalid_domains() {
        assert!(Domain::range(3, 2).is_err());
        assert!(Domain::enumeration(Vec::<String>::new()).is_err());
        assert!(Domain::enumeration(["a", "a"]).is_err());
    }

    #[test]
    fn roles_constrain_ident_kinds() {
        let u = Universe::new()
            .with_var("x", Domain::range(0, 3).unwrap())
            .unwrap()
            .with_param("q", Domain::boolean())
            .unwrap();
        let x = u.ident("x").unwrap();
        assert_eq!(u.domain(&x.prime().unwrap()).unwrap().len(), 4);
        assert!(u.domain(&Ident::param("x")).is_err());
        assert!(u.domain(&Ident::new("q", IdentKind::Prime)).is_err());
        assert!(matches!(u.ident("z"), Err(KernelError::UnknownName(_))));
        let mut u2 = u.clone();
        assert!(matches!(
            u2.declare("x", Role::Param, Domain::boolean()),
            Err(KernelError::DuplicateName(_))
        ));
        assert_eq!(u.int_hull(), Some((0, 3)));
    }
}
