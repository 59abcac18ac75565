//! The trusted checker for all CaTT judgments.
//!
//! Equality is syntactic throughout; there are no computation rules. The
//! kernel re-derives pasting data and side conditions whenever it meets a
//! coherence key that is not in the environment; keys stored by a declaration
//! skip re-derivation.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::calculus::{apply_term, apply_type, dim_type, var_union, CalcError};
use crate::pasting::{self, check_ps, PsContext, PsError};
use crate::syntax::{
    pretty_term, pretty_type, CohHead, CohKey, CohKind, CohNames, Context, Ident, RawTerm,
    RawType, Substitution,
};

/// An append-only store of checked declarations. Every stored coherence has
/// passed `check_coh_decl`; every let body checks at its stored type.
#[derive(Default)]
pub struct Environment {
    decls: Vec<(Ident, Declaration)>,
    by_name: BTreeMap<Ident, usize>,
    by_key: BTreeMap<Arc<CohKey>, usize>,
}

pub enum Declaration {
    Coherence {
        /// the ps-context as the user declared it
        ps: PsContext,
        /// the coherence type over the user-named context
        ty: RawType,
        /// canonical key used in terms
        key: Arc<CohKey>,
    },
    LetDef {
        ctx: Context,
        body: RawTerm,
        ty: RawType,
    },
}

impl Environment {
    pub fn new() -> Self {
        Environment::default()
    }

    pub fn len(&self) -> usize {
        self.decls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decls.is_empty()
    }

    pub fn get(&self, name: &Ident) -> Option<&Declaration> {
        self.by_name.get(name).map(|&i| &self.decls[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Ident, &Declaration)> {
        self.decls.iter().map(|(n, d)| (n, d))
    }

    pub fn coherences(&self) -> impl Iterator<Item = (&Ident, &PsContext, &RawType, &Arc<CohKey>)> {
        self.decls.iter().filter_map(|(n, d)| match d {
            Declaration::Coherence { ps, ty, key } => Some((n, ps, ty, key)),
            Declaration::LetDef { .. } => None,
        })
    }

    pub fn knows_key(&self, key: &CohKey) -> bool {
        self.by_key.contains_key(key)
    }

    pub fn name_of_key(&self, key: &CohKey) -> Option<&Ident> {
        self.by_key.get(key).map(|&i| &self.decls[i].0)
    }

    /// Checks and stores a coherence declaration; returns its kind.
    pub fn declare_coherence(
        &mut self,
        name: Ident,
        ctx: Context,
        ty: RawType,
    ) -> Result<CohKind, KernelError> {
        if self.by_name.contains_key(&name) {
            return Err(KernelError::new(Kind::DuplicateName { name }));
        }
        let (kind, ps) = check_coh_decl(self, &ctx, &ty)
            .map_err(|e| e.frame(format!("in the declaration of `{name}`")))?;
        let key = CohKey::new(&ctx, &ty, kind).map_err(|e| {
            KernelError::new(Kind::Unbound {
                var: match e {
                    crate::syntax::ScopeError::Undeclared { var } => var,
                    crate::syntax::ScopeError::Duplicate { var } => var,
                },
            })
        })?;
        let idx = self.decls.len();
        self.by_key.entry(key.clone()).or_insert(idx);
        self.by_name.insert(name.clone(), idx);
        self.decls
            .push((name, Declaration::Coherence { ps, ty, key }));
        Ok(kind)
    }

    /// Checks and stores a let definition; returns the inferred type.
    pub fn declare_let(
        &mut self,
        name: Ident,
        ctx: Context,
        body: RawTerm,
    ) -> Result<RawType, KernelError> {
        if self.by_name.contains_key(&name) {
            return Err(KernelError::new(Kind::DuplicateName { name }));
        }
        check_ctx(self, &ctx).map_err(|e| e.frame(format!("in the context of `{name}`")))?;
        let ty = infer_term(self, &ctx, &body)
            .map_err(|e| e.frame(format!("in the body of `{name}`")))?;
        let idx = self.decls.len();
        self.by_name.insert(name.clone(), idx);
        self.decls.push((
            name,
            Declaration::LetDef {
                ctx,
                body,
                ty: ty.clone(),
            },
        ));
        Ok(ty)
    }
}

impl CohNames for Environment {
    fn resolve(&self, key: &CohKey) -> Option<CohHead> {
        let &idx = self.by_key.get(key)?;
        match &self.decls[idx].1 {
            Declaration::Coherence { ps, .. } => Some(CohHead {
                name: self.decls[idx].0.clone(),
                implicit: ps.implicit_positions(),
            }),
            Declaration::LetDef { .. } => None,
        }
    }
}

/// Kernel errors carry the judgment stack they were raised under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelError {
    pub kind: Kind,
    pub trail: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Kind {
    DuplicateName { name: Ident },
    Unbound { var: Ident },
    TypeMismatch { expected: String, found: String },
    /// the context of a coherence is not a pasting scheme
    NotPs(PsError),
    /// a coherence type must be a hom type
    CohTypeIsObj,
    /// neither variable side condition holds
    SideCondition(Box<SideReport>),
    ArityMismatch { expected: usize, found: usize },
    DomainMismatch { expected: Ident, found: Ident },
    /// raw-calculus failure while instantiating (unbound variable)
    Calc(CalcError),
    /// encode/decode target has the wrong disk or sphere shape
    BadShape { detail: String },
    /// a coherence key claims a kind its data does not derive
    KindMismatch { claimed: CohKind, derived: CohKind },
}

/// Missing/extra variables per side condition. `op` is absent for
/// 0-dimensional schemes, where only the coh rule can apply.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VarDiff {
    pub missing: Vec<Ident>,
    pub extra: Vec<Ident>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideReport {
    pub coh_src: VarDiff,
    pub coh_tgt: VarDiff,
    pub op: Option<(VarDiff, VarDiff)>,
}

impl KernelError {
    pub fn new(kind: Kind) -> Self {
        KernelError { kind, trail: Vec::new() }
    }

    pub fn frame(mut self, frame: String) -> Self {
        self.trail.push(frame);
        self
    }
}

impl From<CalcError> for KernelError {
    fn from(e: CalcError) -> Self {
        KernelError::new(Kind::Calc(e))
    }
}

fn fmt_vars(vars: &[Ident]) -> String {
    let mut s = String::from("{");
    for (i, v) in vars.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        s.push_str(v.as_str());
    }
    s.push('}');
    s
}

impl fmt::Display for KernelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::DuplicateName { name } => write!(f, "`{name}` is already declared")?,
            Kind::Unbound { var } => write!(f, "unknown variable `{var}`")?,
            Kind::TypeMismatch { expected, found } => {
                write!(f, "type mismatch: expected `{expected}`, found `{found}`")?
            }
            Kind::NotPs(e) => write!(f, "{e}")?,
            Kind::CohTypeIsObj => {
                write!(f, "a coherence type must be a hom type, not `*`")?
            }
            Kind::SideCondition(r) => {
                write!(f, "side conditions not met:")?;
                write!(
                    f,
                    " as a coherence, the source leaves {} unused and the target leaves {} unused",
                    fmt_vars(&r.coh_src.missing),
                    fmt_vars(&r.coh_tgt.missing),
                )?;
                if !r.coh_src.extra.is_empty() || !r.coh_tgt.extra.is_empty() {
                    write!(
                        f,
                        " (extra: {} / {})",
                        fmt_vars(&r.coh_src.extra),
                        fmt_vars(&r.coh_tgt.extra)
                    )?;
                }
                match &r.op {
                    Some((s, t)) => write!(
                        f,
                        "; as a composition, the source misses {} and uses {} outside the source boundary, the target misses {} and uses {} outside the target boundary",
                        fmt_vars(&s.missing),
                        fmt_vars(&s.extra),
                        fmt_vars(&t.missing),
                        fmt_vars(&t.extra),
                    )?,
                    None => write!(f, "; the composition rule does not apply in dimension 0")?,
                }
            }
            Kind::ArityMismatch { expected, found } => write!(
                f,
                "substitution has {found} entries where {expected} are required"
            )?,
            Kind::DomainMismatch { expected, found } => write!(
                f,
                "substitution entry `{found}` does not match the context variable `{expected}`"
            )?,
            Kind::Calc(e) => write!(f, "{e}")?,
            Kind::BadShape { detail } => write!(f, "{detail}")?,
            Kind::KindMismatch { .. } => {
                write!(f, "coherence key does not derive its claimed rule")?
            }
        }
        for frame in &self.trail {
            write!(f, "\n  {frame}")?;
        }
        Ok(())
    }
}

impl core::error::Error for KernelError {}

/// Context formation: distinct names, every type checking over its prefix.
pub fn check_ctx(env: &Environment, ctx: &Context) -> Result<(), KernelError> {
    let mut seen: BTreeSet<&Ident> = BTreeSet::new();
    let mut prefix = Context::empty();
    for (x, a) in ctx.entries() {
        if !seen.insert(x) {
            return Err(KernelError::new(Kind::DuplicateName { name: x.clone() }));
        }
        check_type(env, &prefix, a).map_err(|e| e.frame(format!("in the type of `{x}`")))?;
        prefix.push(x.clone(), a.clone());
    }
    Ok(())
}

/// Type formation: `*` always; a hom type needs both endpoints to infer a
/// type equal to the base.
pub fn check_type(env: &Environment, ctx: &Context, a: &RawType) -> Result<(), KernelError> {
    match a {
        RawType::Obj => Ok(()),
        RawType::Arr { base, src, tgt } => {
            check_type(env, ctx, base)?;
            for t in [src, tgt] {
                let found = infer_term(env, ctx, t)?;
                if found != **base {
                    return Err(KernelError::new(Kind::TypeMismatch {
                        expected: pretty_type(base, env),
                        found: pretty_type(&found, env),
                    })
                    .frame(format!("for the endpoint `{}`", pretty_term(t, env))));
                }
            }
            Ok(())
        }
    }
}

/// Term inference. Variables read their declared type; an application checks
/// its substitution against the key's context and returns the instantiated
/// coherence type.
pub fn infer_term(env: &Environment, ctx: &Context, t: &RawTerm) -> Result<RawType, KernelError> {
    match t {
        RawTerm::Var(x) => match ctx.lookup(x) {
            Some(a) => Ok(a.clone()),
            None => Err(KernelError::new(Kind::Unbound { var: x.clone() })),
        },
        RawTerm::CohApp { key, sub } => {
            if !env.knows_key(key) {
                let (kind, _) = check_coh_decl(env, key.ctx(), key.ty())
                    .map_err(|e| e.frame(String::from("while re-deriving a coherence key")))?;
                if kind != key.kind() {
                    return Err(KernelError::new(Kind::KindMismatch {
                        claimed: key.kind(),
                        derived: kind,
                    }));
                }
            }
            check_sub(env, ctx, sub, key.ctx())
                .map_err(|e| e.frame(format!("in the arguments of `{}`", head_name(env, key))))?;
            Ok(apply_type(key.ty(), sub)?)
        }
    }
}

fn head_name(env: &Environment, key: &CohKey) -> String {
    match env.name_of_key(key) {
        Some(n) => String::from(n.as_str()),
        None => String::from("<coherence>"),
    }
}

/// Substitution formation `Δ ⊢ γ : Γ`: one entry per Γ-variable, in order,
/// each image inferring the instantiated declared type.
pub fn check_sub(
    env: &Environment,
    delta: &Context,
    sub: &Substitution,
    gamma: &Context,
) -> Result<(), KernelError> {
    check_ctx(env, delta)?;
    check_ctx(env, gamma)?;
    if sub.len() != gamma.len() {
        return Err(KernelError::new(Kind::ArityMismatch {
            expected: gamma.len(),
            found: sub.len(),
        }));
    }
    let mut prefix = Substitution::empty();
    for ((x, a), (dx, t)) in gamma.entries().iter().zip(sub.entries()) {
        if dx != x {
            return Err(KernelError::new(Kind::DomainMismatch {
                expected: x.clone(),
                found: dx.clone(),
            }));
        }
        let expected = apply_type(a, &prefix)?;
        let found = infer_term(env, delta, t)?;
        if found != expected {
            return Err(KernelError::new(Kind::TypeMismatch {
                expected: pretty_type(&expected, env),
                found: pretty_type(&found, env),
            })
            .frame(format!("at the image of `{x}`")));
        }
        prefix.push(x.clone(), t.clone());
    }
    Ok(())
}

/// Checks a coherence declaration `Γ ⊢ A` and decides which rule introduces
/// it. `Γ` must be a ps-context and `A = Hom B t u` with:
///
/// * `Coh` when `t` and `u` both use all of `Γ` (`Var{t:B} = Var Γ`), or
/// * `Op` when `dim Γ ≥ 1`, `t` checks in the source of `Γ` using all of it,
///   and `u` checks in the target using all of it.
///
/// The two conditions are mutually exclusive; a declaration matching neither
/// is rejected with the per-side variable report.
pub fn check_coh_decl(
    env: &Environment,
    ctx: &Context,
    a: &RawType,
) -> Result<(CohKind, PsContext), KernelError> {
    check_ctx(env, ctx)?;
    let ps = check_ps(ctx).map_err(|e| KernelError::new(Kind::NotPs(e)))?;
    let (base, t, u) = a.as_arr().ok_or_else(|| KernelError::new(Kind::CohTypeIsObj))?;

    // Both endpoints must check over the full scheme at the base type;
    // op-side checks in the boundary are refinements of this.
    for (side, tm) in [("source", t), ("target", u)] {
        let found = infer_term(env, ctx, tm)
            .map_err(|e| e.frame(format!("in the {side} of the coherence type")))?;
        if found != *base {
            return Err(KernelError::new(Kind::TypeMismatch {
                expected: pretty_type(base, env),
                found: pretty_type(&found, env),
            })
            .frame(format!("in the {side} of the coherence type")));
        }
    }

    let vt = var_union(t, base);
    let vu = var_union(u, base);

    let coh_src = diff(&vt, ctx);
    let coh_tgt = diff(&vu, ctx);
    let coh_ok = coh_src.is_exact() && coh_tgt.is_exact();

    let op = if ps.dim() >= 1 {
        let src = pasting::source(&ps).expect("dim >= 1");
        let tgt = pasting::target(&ps).expect("dim >= 1");
        let op_src = diff(&vt, &src);
        let op_tgt = diff(&vu, &tgt);
        Some((op_src, op_tgt, src, tgt))
    } else {
        None
    };
    let op_ok = match &op {
        Some((s, t, _, _)) => s.is_exact() && t.is_exact(),
        None => false,
    };

    match (coh_ok, op_ok) {
        (true, false) => Ok((CohKind::Coh, ps)),
        (false, true) => {
            // the boundary premises: t and u actually check in the sub-telescopes
            let (_, _, src, tgt) = op.as_ref().expect("op candidate");
            for (side, tm, bctx) in [("source", t, src), ("target", u, tgt)] {
                let found = infer_term(env, bctx, tm)
                    .map_err(|e| e.frame(format!("in the {side} boundary of the scheme")))?;
                if found != *base {
                    return Err(KernelError::new(Kind::TypeMismatch {
                        expected: pretty_type(base, env),
                        found: pretty_type(&found, env),
                    })
                    .frame(format!("in the {side} boundary of the scheme")));
                }
            }
            Ok((CohKind::Op, ps))
        }
        (false, false) => Err(KernelError::new(Kind::SideCondition(Box::new(SideReport {
            coh_src,
            coh_tgt,
            op: op.map(|(s, t, _, _)| (s, t)),
        })))),
        // Var(src Γ) is a strict subset of Var Γ in dimension ≥ 1, so the two
        // conditions can never hold together.
        (true, true) => unreachable!("coh and op side conditions are mutually exclusive"),
    }
}

/// `used` compared against the variables of `required`; missing names are
/// listed in context order.
fn diff(used: &BTreeSet<Ident>, required: &Context) -> VarDiff {
    let required_set = required.var_set();
    VarDiff {
        missing: required
            .vars()
            .filter(|x| !used.contains(*x))
            .cloned()
            .collect(),
        extra: used.difference(&required_set).cloned().collect(),
    }
}

impl VarDiff {
    fn is_exact(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty()
    }
}

fn dvar(i: u64) -> Ident {
    Ident::new(&format!("d{i}")).expect("disk variable name")
}

/// The type `U_n` of the top cell of the `n`-disk.
fn u_type(n: u64) -> RawType {
    if n == 0 {
        RawType::Obj
    } else {
        RawType::arr(
            u_type(n - 1),
            RawTerm::Var(dvar(2 * n - 2)),
            RawTerm::Var(dvar(2 * n - 1)),
        )
    }
}

/// The disk context `D^n = (d0 : U_0, d1 : U_0, …, d_{2n} : U_n)`.
pub fn disk(n: u64) -> Context {
    let mut ctx = Context::empty();
    for j in 0..=n {
        ctx.push(dvar(2 * j), u_type(j));
        if j < n {
            ctx.push(dvar(2 * j + 1), u_type(j));
        }
    }
    ctx
}

/// The sphere context `S^k` for `k ≥ −1`; `S^{-1}` is the empty context.
pub fn sphere(k: i64) -> Context {
    if k < 0 {
        return Context::empty();
    }
    let mut ctx = disk(k as u64);
    ctx.push(dvar(2 * k as u64 + 1), u_type(k as u64));
    ctx
}

/// The characteristic substitution of a type: a type of dimension `n-1` over
/// `Γ` corresponds to a substitution `Γ → S^{n-1}`; types are familially
/// represented by the spheres.
pub fn encode_type(
    env: &Environment,
    ctx: &Context,
    a: &RawType,
) -> Result<Substitution, KernelError> {
    match a {
        RawType::Obj => Ok(Substitution::empty()),
        RawType::Arr { base: _, src, tgt } => {
            let n = dim_type(a) as u64;
            let mut sub = encode_term(env, ctx, src)?;
            sub.push(dvar(2 * n + 1), tgt.clone());
            Ok(sub)
        }
    }
}

/// The characteristic substitution of a term: a term of dimension `n` over
/// `Γ` corresponds to a substitution `Γ → D^n`.
pub fn encode_term(
    env: &Environment,
    ctx: &Context,
    t: &RawTerm,
) -> Result<Substitution, KernelError> {
    let a = infer_term(env, ctx, t)?;
    let n = (dim_type(&a) + 1) as u64;
    let mut sub = encode_type(env, ctx, &a)?;
    sub.push(dvar(2 * n), t.clone());
    Ok(sub)
}

/// Inverse of [`encode_type`]: reads a type back from a substitution into a
/// sphere context, as `U_n[γ]`.
pub fn decode_type(
    env: &Environment,
    ctx: &Context,
    sub: &Substitution,
) -> Result<RawType, KernelError> {
    if !sub.len().is_multiple_of(2) {
        return Err(KernelError::new(Kind::BadShape {
            detail: format!(
                "a sphere substitution has an even number of entries, found {}",
                sub.len()
            ),
        }));
    }
    let n = (sub.len() / 2) as u64;
    check_sub(env, ctx, sub, &sphere(n as i64 - 1))
        .map_err(|e| e.frame(String::from("against the sphere context")))?;
    Ok(apply_type(&u_type(n), sub)?)
}

/// Inverse of [`encode_term`]: reads a term back from a substitution into a
/// disk context, as `d_{2n}[γ]`.
pub fn decode_term(
    env: &Environment,
    ctx: &Context,
    sub: &Substitution,
) -> Result<RawTerm, KernelError> {
    if sub.len().is_multiple_of(2) {
        return Err(KernelError::new(Kind::BadShape {
            detail: format!(
                "a disk substitution has an odd number of entries, found {}",
                sub.len()
            ),
        }));
    }
    let n = (sub.len() / 2) as u64;
    check_sub(env, ctx, sub, &disk(n))
        .map_err(|e| e.frame(String::from("against the disk context")))?;
    Ok(apply_term(&RawTerm::Var(dvar(2 * n)), sub)?)
}
