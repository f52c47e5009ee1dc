use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};

use super::KernelError;

/// The three disjoint identifier classes of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IdentKind {
    Var,
    Prime,
    Param,
}

impl fmt::Display for IdentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IdentKind::Var => "variable",
            IdentKind::Prime => "primed variable",
            IdentKind::Param => "parameter",
        })
    }
}

/// A named identifier. Ordering is by base name first, so `x` sorts right
/// before `x'`, which fixes the column order of every predicate table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ident {
    base: String,
    kind: IdentKind,
}

impl Ident {
    pub fn new(base: impl Into<String>, kind: IdentKind) -> Self {
        Ident {
            base: base.into(),
            kind,
        }
    }

    pub fn var(base: impl Into<String>) -> Self {
        Self::new(base, IdentKind::Var)
    }

    pub fn param(base: impl Into<String>) -> Self {
        Self::new(base, IdentKind::Param)
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn kind(&self) -> IdentKind {
        self.kind
    }

    pub fn is_var(&self) -> bool {
        self.kind == IdentKind::Var
    }

    pub fn is_prime(&self) -> bool {
        self.kind == IdentKind::Prime
    }

    pub fn is_param(&self) -> bool {
        self.kind == IdentKind::Param
    }

    /// `Next`: maps a variable to its primed image.
    pub fn prime(&self) -> Result<Ident, KernelError> {
        match self.kind {
            IdentKind::Var => Ok(Ident::new(self.base.clone(), IdentKind::Prime)),
            _ => Err(KernelError::Kind {
                ident: self.clone(),
                expected: IdentKind::Var,
            }),
        }
    }

    /// Inverse of [`Ident::prime`].
    pub fn unprime(&self) -> Result<Ident, KernelError> {
        match self.kind {
            IdentKind::Prime => Ok(Ident::new(self.base.clone(), IdentKind::Var)),
            _ => Err(KernelError::Kind {
                ident: self.clone(),
                expected: IdentKind::Prime,
            }),
        }
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            IdentKind::Prime => write!(f, "{}'", self.base),
            _ => f.write_str(&self.base),
        }
    }
}

impl Serialize for Ident {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Image of a set of variables under `Next`.
pub fn prime_set<'a>(vars: impl IntoIterator<Item = &'a Ident>) -> Result<BTreeSet<Ident>, KernelError> {
    vars.into_iter().map(Ident::prime).collect()
}

/// Image of a set of primed variables under `Next∼`.
pub fn unprime_set<'a>(primes: impl IntoIterator<Item = &'a Ident>) -> Result<BTreeSet<Ident>, KernelError> {
    primes.into_iter().map(Ident::unprime).collect()
}

/// The renaming `x ↦ x'` restricted to `vars`.
pub fn next_renaming<'a>(
    vars: impl IntoIterator<Item = &'a Ident>,
) -> Result<std::collections::BTreeMap<Ident, Ident>, KernelError> {
    vars.into_iter().map(|v| Ok((v.clone(), v.prime()?))).collect()
}

/// The renaming `x' ↦ x` for every variable in `vars`.
pub fn unprime_renaming<'a>(
    vars: impl IntoIterator<Item = &'a Ident>,
) -> Result<std::collections::BTreeMap<Ident, Ident>, KernelError> {
    vars.into_iter().map(|v| Ok((v.prime()?, v.clone()))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_set_maps_each_var() {
        let vs: BTreeSet<_> = [Ident::var("x"), Ident::var("y")].into();
        let primed = prime_set(&vs).unwrap();
        let expected: BTreeSet<_> = [
            Ident::new("x", IdentKind::Prime),
            Ident::new("y", IdentKind::Prime),
        ]
        .into();
        assert_eq!(primed, expected);
        assert!(prime_set(&BTreeSet::new()).unwrap().is_empty());
    }

    #[test]
    fn unprime_inverts_prime() {
        let v = Ident::var("v");
        assert_eq!(v.prime().unwrap().unprime().unwrap(), v);
    }

    #[test]
    fn wrong_kinds_are_rejected() {
        assert!(matches!(
            Ident::param("q").prime(),
            Err(KernelError::Kind { .. })
        ));
        assert!(matches!(Ident::var("x").unprime(), Err(KernelError::Kind { .. })));
        let mixed: BTreeSet<_> = [Ident::var("x"), Ident::param("q")].into();
        assert!(prime_set(&mixed).is_err());
    }

    #[test]
    fn display_and_order() {
        let x = Ident::var("x");
        let xp = x.prime().unwrap();
        assert_eq!(xp.to_string(), "x'");
        assert!(x < xp);
        assert!(xp < Ident::var("y"));
    }
}
