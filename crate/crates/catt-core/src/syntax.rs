//! Object-language abstract syntax.
//!
//! Equality everywhere is plain structural equality (`==`): the theory has no
//! computation rules. Coherence heads ([`CohKey`]) are canonically renamed at
//! construction, so two coherences declared over α-equivalent pasting schemes
//! with the same type and kind compare equal no matter what the user called
//! them.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

/// A variable or declaration name.
///
/// Nonempty; starts with an ASCII letter; continues with letters, digits,
/// `_`, `'` or `-`. Cheap to clone.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ident(Arc<str>);

impl Ident {
    pub fn new(name: &str) -> Result<Self, InvalidIdent> {
        let mut chars = name.chars();
        let ok = match chars.next() {
            Some(c) if c.is_ascii_alphabetic() => {
                chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '-')
            }
            _ => false,
        };
        if ok {
            Ok(Ident(Arc::from(name)))
        } else {
            Err(InvalidIdent(name.to_owned()))
        }
    }

    /// The `i`-th canonical positional name, `v<i>`.
    pub fn positional(i: usize) -> Self {
        Ident(Arc::from(format!("v{i}").as_str()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}`", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvalidIdent(pub String);

impl fmt::Display for InvalidIdent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid identifier `{}`", self.0)
    }
}

impl core::error::Error for InvalidIdent {}

/// A raw type: the base type of objects, or a hom type between two terms.
///
/// `dim(Obj) = -1` and `dim(Arr) = dim(base) + 1`; see
/// [`calculus::dim_type`](crate::calculus::dim_type).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum RawType {
    Obj,
    Arr {
        base: Box<RawType>,
        src: RawTerm,
        tgt: RawTerm,
    },
}

impl RawType {
    pub fn arr(base: RawType, src: RawTerm, tgt: RawTerm) -> Self {
        RawType::Arr {
            base: Box::new(base),
            src,
            tgt,
        }
    }

    pub fn as_arr(&self) -> Option<(&RawType, &RawTerm, &RawTerm)> {
        match self {
            RawType::Obj => None,
            RawType::Arr { base, src, tgt } => Some((base, src, tgt)),
        }
    }
}

/// A raw term: a variable, or a coherence applied to a substitution.
///
/// The substitution of a `CohApp` has exactly one entry per variable of the
/// key's (canonical) context, in context order; the kernel maintains this.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum RawTerm {
    Var(Ident),
    CohApp { key: Arc<CohKey>, sub: Substitution },
}

impl RawTerm {
    pub fn var(name: &Ident) -> Self {
        RawTerm::Var(name.clone())
    }
}

/// Which of the two coherence rules a declaration uses: `Op` composes a
/// pasting scheme given full compositions of its source and target boundary,
/// `Coh` relates two full compositions of the whole scheme.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum CohKind {
    Op,
    Coh,
}

/// The head of a coherence application: a ps-context, a type over it, and the
/// rule kind. Stored canonically renamed, so `Eq` identifies coherences up to
/// renaming. User-facing names live in the environment, not here.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct CohKey {
    ctx: Context,
    ty: RawType,
    kind: CohKind,
}

impl CohKey {
    /// Builds a key, renaming `ctx` and `ty` to positional form.
    pub fn new(ctx: &Context, ty: &RawType, kind: CohKind) -> Result<Arc<CohKey>, ScopeError> {
        let (ctx, map) = ctx.canonicalize_with_map()?;
        let ty = rename_type(ty, &map)?;
        Ok(Arc::new(CohKey { ctx, ty, kind }))
    }

    pub fn ctx(&self) -> &Context {
        &self.ctx
    }

    pub fn ty(&self) -> &RawType {
        &self.ty
    }

    pub fn kind(&self) -> CohKind {
        self.kind
    }
}

/// An ordered telescope of typed variables.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct Context {
    entries: Vec<(Ident, RawType)>,
}

impl Context {
    pub fn empty() -> Self {
        Context::default()
    }

    pub fn from_entries(entries: Vec<(Ident, RawType)>) -> Self {
        Context { entries }
    }

    pub fn push(&mut self, x: Ident, a: RawType) {
        self.entries.push((x, a));
    }

    pub fn entries(&self) -> &[(Ident, RawType)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, x: &Ident) -> Option<&RawType> {
        self.entries
            .iter()
            .rev()
            .find(|(y, _)| y == x)
            .map(|(_, a)| a)
    }

    pub fn contains(&self, x: &Ident) -> bool {
        self.lookup(x).is_some()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Ident> {
        self.entries.iter().map(|(x, _)| x)
    }

    /// The set of declared names, `Var Γ`.
    pub fn var_set(&self) -> BTreeSet<Ident> {
        self.vars().cloned().collect()
    }

    /// Renames the `i`-th variable to the positional name `v<i>`.
    ///
    /// Idempotent, and constant on renaming classes: two contexts that differ
    /// only in variable names canonicalize identically. Fails if a type
    /// mentions an undeclared or later variable, or if a name repeats.
    pub fn canonicalize(&self) -> Result<Context, ScopeError> {
        self.canonicalize_with_map().map(|(ctx, _)| ctx)
    }

    pub(crate) fn canonicalize_with_map(
        &self,
    ) -> Result<(Context, BTreeMap<Ident, Ident>), ScopeError> {
        let mut seen = BTreeSet::new();
        for (x, _) in &self.entries {
            if !seen.insert(x.clone()) {
                return Err(ScopeError::Duplicate { var: x.clone() });
            }
        }
        let mut map = BTreeMap::new();
        let mut out = Vec::with_capacity(self.entries.len());
        for (i, (x, a)) in self.entries.iter().enumerate() {
            // `map` holds only earlier entries, so this doubles as the scope check.
            let a = rename_type(a, &map)?;
            let v = Ident::positional(i);
            out.push((v.clone(), a));
            map.insert(x.clone(), v);
        }
        Ok((Context { entries: out }, map))
    }
}

/// An ordered list of target variables paired with their image terms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct Substitution {
    entries: Vec<(Ident, RawTerm)>,
}

impl Substitution {
    pub fn empty() -> Self {
        Substitution::default()
    }

    pub fn from_entries(entries: Vec<(Ident, RawTerm)>) -> Self {
        Substitution { entries }
    }

    pub fn push(&mut self, x: Ident, t: RawTerm) {
        self.entries.push((x, t));
    }

    pub fn entries(&self) -> &[(Ident, RawTerm)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The image of `x`, rightmost entry winning (the kernel keeps domains
    /// distinct, so the choice is unobservable on checked substitutions).
    pub fn lookup(&self, x: &Ident) -> Option<&RawTerm> {
        self.entries
            .iter()
            .rev()
            .find(|(y, _)| y == x)
            .map(|(_, t)| t)
    }

    pub fn images(&self) -> impl Iterator<Item = &RawTerm> {
        self.entries.iter().map(|(_, t)| t)
    }
}

/// Scope violations surfaced by canonical renaming.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScopeError {
    /// a type mentions a variable that is undeclared or declared later
    Undeclared { var: Ident },
    Duplicate { var: Ident },
}

impl fmt::Display for ScopeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScopeError::Undeclared { var } => {
                write!(f, "variable `{var}` is not declared at this point")
            }
            ScopeError::Duplicate { var } => write!(f, "variable `{var}` is declared twice"),
        }
    }
}

impl core::error::Error for ScopeError {}

fn rename_term(t: &RawTerm, map: &BTreeMap<Ident, Ident>) -> Result<RawTerm, ScopeError> {
    match t {
        RawTerm::Var(x) => match map.get(x) {
            Some(y) => Ok(RawTerm::Var(y.clone())),
            None => Err(ScopeError::Undeclared { var: x.clone() }),
        },
        RawTerm::CohApp { key, sub } => {
            // Domain names address the key's own canonical context; only the
            // images live in the ambient context.
            let mut entries = Vec::with_capacity(sub.len());
            for (x, t) in sub.entries() {
                entries.push((x.clone(), rename_term(t, map)?));
            }
            Ok(RawTerm::CohApp {
                key: key.clone(),
                sub: Substitution::from_entries(entries),
            })
        }
    }
}

fn rename_type(a: &RawType, map: &BTreeMap<Ident, Ident>) -> Result<RawType, ScopeError> {
    match a {
        RawType::Obj => Ok(RawType::Obj),
        RawType::Arr { base, src, tgt } => Ok(RawType::arr(
            rename_type(base, map)?,
            rename_term(src, map)?,
            rename_term(tgt, map)?,
        )),
    }
}

/// Resolves a coherence key to its user-facing head name and the positions
/// (indices into the key's context) of the locally maximal variables — the
/// arguments shown in implicit style.
pub trait CohNames {
    fn resolve(&self, key: &CohKey) -> Option<CohHead>;
}

pub struct CohHead {
    pub name: Ident,
    pub implicit: Vec<usize>,
}

/// A resolver with no names; applications print in explicit form with a
/// placeholder head.
pub struct NoNames;

impl CohNames for NoNames {
    fn resolve(&self, _key: &CohKey) -> Option<CohHead> {
        None
    }
}

const ANON_HEAD: &str = "_coh";

/// Prints a term in the surface syntax, coherence applications shown with
/// locally maximal arguments only.
pub fn pretty_term(t: &RawTerm, names: &dyn CohNames) -> String {
    let mut s = String::new();
    write_term(&mut s, t, names, false, false);
    s
}

/// Like [`pretty_term`] but coherence applications list every argument.
pub fn pretty_term_explicit(t: &RawTerm, names: &dyn CohNames) -> String {
    let mut s = String::new();
    write_term(&mut s, t, names, false, true);
    s
}

pub fn pretty_type(a: &RawType, names: &dyn CohNames) -> String {
    let mut s = String::new();
    write_type(&mut s, a, names, false);
    s
}

pub fn pretty_type_explicit(a: &RawType, names: &dyn CohNames) -> String {
    let mut s = String::new();
    write_type(&mut s, a, names, true);
    s
}

/// Prints a context as a surface telescope, `(x : *) (f : x -> y)`.
pub fn pretty_ctx(ctx: &Context, names: &dyn CohNames) -> String {
    let mut s = String::new();
    for (i, (x, a)) in ctx.entries().iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push('(');
        s.push_str(x.as_str());
        s.push_str(" : ");
        write_type(&mut s, a, names, false);
        s.push(')');
    }
    s
}

/// Prints a substitution for diagnostics, `<x := t, y := u>`.
pub fn pretty_sub(sub: &Substitution, names: &dyn CohNames) -> String {
    let mut s = String::from("<");
    for (i, (x, t)) in sub.entries().iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        s.push_str(x.as_str());
        s.push_str(" := ");
        write_term(&mut s, t, names, false, false);
    }
    s.push('>');
    s
}

fn write_term(out: &mut String, t: &RawTerm, names: &dyn CohNames, atom: bool, explicit: bool) {
    match t {
        RawTerm::Var(x) => out.push_str(x.as_str()),
        RawTerm::CohApp { key, sub } => {
            if atom {
                out.push('(');
            }
            let resolved = names.resolve(key);
            match &resolved {
                Some(head) => out.push_str(head.name.as_str()),
                None => out.push_str(ANON_HEAD),
            }
            let all = sub.entries();
            let positions: Vec<usize> = match (&resolved, explicit) {
                (Some(head), false) => head.implicit.clone(),
                _ => (0..all.len()).collect(),
            };
            for i in positions {
                out.push(' ');
                write_term(out, &all[i].1, names, true, explicit);
            }
            if atom {
                out.push(')');
            }
        }
    }
}

fn write_type(out: &mut String, a: &RawType, names: &dyn CohNames, explicit: bool) {
    match a {
        RawType::Obj => out.push('*'),
        RawType::Arr { src, tgt, .. } => {
            write_term(out, src, names, false, explicit);
            out.push_str(" -> ");
            write_term(out, tgt, names, false, explicit);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(s: &str) -> Ident {
        Ident::new(s).unwrap()
    }

    fn obj_ctx(names: &[&str]) -> Context {
        Context::from_entries(names.iter().map(|n| (id(n), RawType::Obj)).collect())
    }

    fn arrow(a: &str, b: &str) -> RawType {
        RawType::arr(RawType::Obj, RawTerm::Var(id(a)), RawTerm::Var(id(b)))
    }

    #[test]
    fn ident_validation() {
        assert!(Ident::new("x").is_ok());
        assert!(Ident::new("unitl-").is_ok());
        assert!(Ident::new("f'").is_ok());
        assert!(Ident::new("v0").is_ok());
        assert!(Ident::new("").is_err());
        assert!(Ident::new("0x").is_err());
        assert!(Ident::new("-f").is_err());
        assert!(Ident::new("a b").is_err());
    }

    #[test]
    fn canonicalize_renames_positionally() {
        let mut ctx = obj_ctx(&["a", "b"]);
        ctx.push(id("h"), arrow("a", "b"));
        let mut want = obj_ctx(&["v0", "v1"]);
        want.push(id("v2"), arrow("v0", "v1"));
        assert_eq!(ctx.canonicalize().unwrap(), want);
    }

    #[test]
    fn canonicalize_idempotent() {
        let ctx = obj_ctx(&["v0"]);
        assert_eq!(ctx.canonicalize().unwrap(), ctx);
        let mut big = obj_ctx(&["x", "y"]);
        big.push(id("f"), arrow("x", "y"));
        let once = big.canonicalize().unwrap();
        assert_eq!(once.canonicalize().unwrap(), once);
    }

    #[test]
    fn canonicalize_identifies_renamings() {
        let mut c1 = obj_ctx(&["y", "x"]);
        c1.push(id("f"), arrow("y", "x"));
        let mut c2 = obj_ctx(&["x", "y"]);
        c2.push(id("f"), arrow("x", "y"));
        assert_eq!(c1.canonicalize().unwrap(), c2.canonicalize().unwrap());
    }

    #[test]
    fn canonicalize_swapped_names_is_simultaneous() {
        // (v1:*, v0:*, f: v0 -> v1) must swap the two points, not chain.
        let mut ctx = obj_ctx(&["v1", "v0"]);
        ctx.push(id("f"), arrow("v0", "v1"));
        let mut want = obj_ctx(&["v0", "v1"]);
        want.push(id("v2"), arrow("v1", "v0"));
        assert_eq!(ctx.canonicalize().unwrap(), want);
    }

    #[test]
    fn canonicalize_scope_errors() {
        let mut fwd = Context::empty();
        fwd.push(id("f"), arrow("x", "y"));
        fwd.push(id("x"), RawType::Obj);
        assert_eq!(
            fwd.canonicalize(),
            Err(ScopeError::Undeclared { var: id("x") })
        );
        let dup = obj_ctx(&["x", "x"]);
        assert_eq!(dup.canonicalize(), Err(ScopeError::Duplicate { var: id("x") }));
    }

    #[test]
    fn struct_eq_on_vars() {
        assert_eq!(RawTerm::Var(id("x")), RawTerm::Var(id("x")));
        assert_ne!(RawTerm::Var(id("x")), RawTerm::Var(id("y")));
    }

    #[test]
    fn coh_keys_identify_renamed_declarations() {
        // comp declared twice under different variable names.
        let mut c1 = obj_ctx(&["x", "y"]);
        c1.push(id("f"), arrow("x", "y"));
        c1.push(id("z"), RawType::Obj);
        c1.push(id("g"), arrow("y", "z"));
        let t1 = arrow("x", "z");

        let mut c2 = obj_ctx(&["a", "b"]);
        c2.push(id("p"), arrow("a", "b"));
        c2.push(id("c"), RawType::Obj);
        c2.push(id("q"), arrow("b", "c"));
        let t2 = arrow("a", "c");

        let k1 = CohKey::new(&c1, &t1, CohKind::Op).unwrap();
        let k2 = CohKey::new(&c2, &t2, CohKind::Op).unwrap();
        assert_eq!(k1, k2);
        let k3 = CohKey::new(&c1, &arrow("x", "x"), CohKind::Op).unwrap();
        assert_ne!(k1, k3);
    }

    #[test]
    fn substitution_lookup_rightmost_wins() {
        let sub = Substitution::from_entries(vec![
            (id("x"), RawTerm::Var(id("a"))),
            (id("x"), RawTerm::Var(id("b"))),
        ]);
        assert_eq!(sub.lookup(&id("x")), Some(&RawTerm::Var(id("b"))));
    }

    #[test]
    fn pretty_basics() {
        assert_eq!(pretty_type(&RawType::Obj, &NoNames), "*");
        assert_eq!(pretty_type(&arrow("x", "y"), &NoNames), "x -> y");
        let ctx = obj_ctx(&["x"]);
        assert_eq!(pretty_ctx(&ctx, &NoNames), "(x : *)");
    }
}
