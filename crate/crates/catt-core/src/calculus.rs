//! The raw substitution calculus.
//!
//! These operations are syntactic: they work on raw expressions without
//! consulting any judgment. On kernel-derivable data they satisfy the category
//! laws (`id ∘ γ = γ`, associativity) and the action is functorial
//! (`A[γ∘δ] = A[γ][δ]`); the test suites check both.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use crate::syntax::{Context, Ident, RawTerm, RawType, Substitution};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CalcError {
    /// the substitution has no entry for a free variable it was applied to
    Unbound { var: Ident },
    /// a dimension or coherence-depth query on a variable the context does
    /// not declare (coherence depth depends on the typing)
    Undeclared { var: Ident },
}

impl fmt::Display for CalcError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalcError::Unbound { var } => {
                write!(f, "substitution has no entry for variable `{var}`")
            }
            CalcError::Undeclared { var } => {
                write!(f, "variable `{var}` is not declared in the context")
            }
        }
    }
}

impl core::error::Error for CalcError {}

/// Free variables of a term: `Var x = {x}`, and a coherence application owns
/// the variables of its substitution.
pub fn free_vars_term(t: &RawTerm) -> BTreeSet<Ident> {
    let mut out = BTreeSet::new();
    collect_term(t, &mut out);
    out
}

pub fn free_vars_type(a: &RawType) -> BTreeSet<Ident> {
    let mut out = BTreeSet::new();
    collect_type(a, &mut out);
    out
}

/// `Var Γ` is the set of declared names.
pub fn free_vars_ctx(ctx: &Context) -> BTreeSet<Ident> {
    ctx.var_set()
}

pub fn free_vars_sub(sub: &Substitution) -> BTreeSet<Ident> {
    let mut out = BTreeSet::new();
    for t in sub.images() {
        collect_term(t, &mut out);
    }
    out
}

/// `Var{t : A} = Var t ∪ Var A`, the variables of a term together with its
/// type — the form the coherence side conditions are stated in.
pub fn var_union(t: &RawTerm, a: &RawType) -> BTreeSet<Ident> {
    let mut out = free_vars_term(t);
    collect_type(a, &mut out);
    out
}

fn collect_term(t: &RawTerm, out: &mut BTreeSet<Ident>) {
    match t {
        RawTerm::Var(x) => {
            out.insert(x.clone());
        }
        RawTerm::CohApp { sub, .. } => {
            for u in sub.images() {
                collect_term(u, out);
            }
        }
    }
}

fn collect_type(a: &RawType, out: &mut BTreeSet<Ident>) {
    if let RawType::Arr { base, src, tgt } = a {
        collect_type(base, out);
        collect_term(src, out);
        collect_term(tgt, out);
    }
}

/// `dim(Obj) = -1`, `dim(Arr) = dim(base) + 1`. Starting at −1 keeps the
/// disk/sphere indexing clean: types of dimension `n-1` correspond to
/// substitutions into the sphere `S^{n-1}`.
pub fn dim_type(a: &RawType) -> i64 {
    match a {
        RawType::Obj => -1,
        RawType::Arr { base, .. } => dim_type(base) + 1,
    }
}

/// Dimension of a context: the largest cell dimension, `max (dim A_i + 1)`;
/// −1 for the empty context.
pub fn dim_ctx(ctx: &Context) -> i64 {
    ctx.entries()
        .iter()
        .map(|(_, a)| dim_type(a) + 1)
        .max()
        .unwrap_or(-1)
}

/// Dimension of a term in a context, `dim(A) + 1` for `t : A`.
pub fn dim_term(ctx: &Context, t: &RawTerm) -> Result<i64, CalcError> {
    match t {
        RawTerm::Var(x) => match ctx.lookup(x) {
            Some(a) => Ok(dim_type(a) + 1),
            None => Err(CalcError::Undeclared { var: x.clone() }),
        },
        // Substitution preserves the type's dimension.
        RawTerm::CohApp { key, .. } => Ok(dim_type(key.ty()) + 1),
    }
}

/// Action of a substitution on a type, componentwise on hom types.
pub fn apply_type(a: &RawType, sub: &Substitution) -> Result<RawType, CalcError> {
    match a {
        RawType::Obj => Ok(RawType::Obj),
        RawType::Arr { base, src, tgt } => Ok(RawType::arr(
            apply_type(base, sub)?,
            apply_term(src, sub)?,
            apply_term(tgt, sub)?,
        )),
    }
}

/// Action of a substitution on a term; on coherence applications it composes
/// the substitutions.
pub fn apply_term(t: &RawTerm, sub: &Substitution) -> Result<RawTerm, CalcError> {
    match t {
        RawTerm::Var(x) => match sub.lookup(x) {
            Some(u) => Ok(u.clone()),
            None => Err(CalcError::Unbound { var: x.clone() }),
        },
        RawTerm::CohApp { key, sub: inner } => Ok(RawTerm::CohApp {
            key: key.clone(),
            sub: compose(inner, sub)?,
        }),
    }
}

/// Composition `δ ∘ γ`: applies `γ` to every image of `δ`. Length preserved.
pub fn compose(delta: &Substitution, gamma: &Substitution) -> Result<Substitution, CalcError> {
    let mut entries = Vec::with_capacity(delta.len());
    for (x, t) in delta.entries() {
        entries.push((x.clone(), apply_term(t, gamma)?));
    }
    Ok(Substitution::from_entries(entries))
}

/// The identity substitution of a context, mapping each variable to itself.
pub fn identity(ctx: &Context) -> Substitution {
    Substitution::from_entries(
        ctx.entries()
            .iter()
            .map(|(x, _)| (x.clone(), RawTerm::Var(x.clone())))
            .collect(),
    )
}

/// Nesting depth of term constructors: variables are 0, an application is one
/// more than its substitution.
pub fn depth_term(t: &RawTerm) -> u64 {
    match t {
        RawTerm::Var(_) => 0,
        RawTerm::CohApp { sub, .. } => 1 + depth_sub(sub),
    }
}

pub fn depth_sub(sub: &Substitution) -> u64 {
    sub.images().map(depth_term).max().unwrap_or(0)
}

/// Coherence depth of a type in a context.
pub fn cd_type(ctx: &Context, a: &RawType) -> Result<u64, CalcError> {
    match a {
        RawType::Obj => Ok(0),
        RawType::Arr { base, src, tgt } => {
            let b = cd_type(ctx, base)?;
            let s = cd_term(ctx, src)?;
            let t = cd_term(ctx, tgt)?;
            Ok(b.max(s).max(t))
        }
    }
}

/// Coherence depth of a term. A variable takes the coherence depth of its
/// declared type, so the context is required: bare variables without a typing
/// are rejected rather than defaulted.
pub fn cd_term(ctx: &Context, t: &RawTerm) -> Result<u64, CalcError> {
    match t {
        RawTerm::Var(x) => match ctx.lookup(x) {
            Some(a) => cd_type(ctx, a),
            None => Err(CalcError::Undeclared { var: x.clone() }),
        },
        RawTerm::CohApp { key, sub } => {
            // The head type lives over the coherence's own context.
            let head = cd_type(key.ctx(), key.ty())? + 1;
            Ok(head.max(cd_sub(ctx, sub)?))
        }
    }
}

pub fn cd_sub(ctx: &Context, sub: &Substitution) -> Result<u64, CalcError> {
    let mut out = 0;
    for t in sub.images() {
        out = out.max(cd_term(ctx, t)?);
    }
    Ok(out)
}
