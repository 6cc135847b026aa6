//! Telescopic typing contexts.

use crate::subst::shift;
use crate::term::{Name, Term};

/// An ordered list of bindings; the entry pushed last is de Bruijn index 0.
/// Each entry's type is expressed in the scope of the entries before it;
/// `lookup` shifts it into the current scope.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Context {
    entries: Vec<(Name, Term)>,
}

impl Context {
    pub fn new() -> Context {
        Context::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, name: Name, ty: Term) {
        self.entries.push((name, ty));
    }

    pub fn pop(&mut self) {
        self.entries.pop();
    }

    pub fn extended(&self, name: Name, ty: Term) -> Context {
        let mut c = self.clone();
        c.push(name, ty);
        c
    }

    /// The type of variable `i`, shifted into the current scope.
    pub fn lookup(&self, i: usize) -> Option<Term> {
        if i >= self.entries.len() {
            return None;
        }
        let (_, ty) = &self.entries[self.entries.len() - 1 - i];
        Some(shift(ty, (i + 1) as isize))
    }

    pub fn name_of(&self, i: usize) -> Option<&Name> {
        if i >= self.entries.len() {
            return None;
        }
        Some(&self.entries[self.entries.len() - 1 - i].0)
    }

    pub fn iter_names(&self) -> impl Iterator<Item = &Name> {
        self.entries.iter().map(|(n, _)| n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Term;

    #[test]
    fn lookup_shifts_into_scope() {
        let mut ctx = Context::new();
        ctx.push(Name::named("A"), Term::ty(0));
        // x : A  (A is Var 0 at push time)
        ctx.push(Name::named("x"), Term::var(0));
        // In the current scope, x's type must point at A through x itself.
        assert_eq!(ctx.lookup(0), Some(Term::var(1)));
        assert_eq!(ctx.lookup(1), Some(Term::ty(0)));
        assert_eq!(ctx.lookup(2), None);
    }
}
