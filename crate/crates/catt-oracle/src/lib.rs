//! Brute-force oracles and generators for the property suites.
//!
//! Everything here exists to check the checker: the peeling recognizer and
//! the ◁ closure are implemented from scratch (no calls into
//! `catt_core::pasting`'s closure or scanner), so agreement between the two
//! routes is meaningful. This crate is a test-surface dependency only; the
//! shipping checker never links it.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use catt_core::calculus::apply_type;
use catt_core::frontend::process_source;
use catt_core::kernel::Declaration;
use catt_core::pasting::{CellRef, GlobSet};
use catt_core::syntax::{CohKey, Context, Ident, RawTerm, RawType, Substitution};
use catt_core::Environment;

/// The standard prelude: identities, composition, unitors, associators, and
/// the compositions of 2-cells, plus the `sq` definition.
pub const PRELUDE: &str = include_str!("../../../prelude.catt");

/// An environment holding the checked prelude.
pub fn corpus_env() -> Environment {
    let mut env = Environment::new();
    process_source(&mut env, PRELUDE).expect("the prelude checks");
    env
}

// ---------------------------------------------------------------------------
// exhaustive enumeration of globular contexts

/// Enumerates every globular context with at most `max_cells` variables and
/// cell dimension at most `max_dim`, up to canonical renaming (variables are
/// named positionally `v0, v1, …`). Each context is yielded exactly once;
/// distinct variable orders of the same globular set are distinct contexts.
pub fn enum_globular_contexts(max_cells: usize, max_dim: i64) -> GlobCtxIter {
    let mut stack = Vec::new();
    if max_cells >= 1 && max_dim >= 0 {
        stack.push(Context::from_entries(vec![(
            Ident::positional(0),
            RawType::Obj,
        )]));
    }
    GlobCtxIter { stack, max_cells, max_dim }
}

pub struct GlobCtxIter {
    stack: Vec<Context>,
    max_cells: usize,
    max_dim: i64,
}

impl Iterator for GlobCtxIter {
    type Item = Context;

    fn next(&mut self) -> Option<Context> {
        let ctx = self.stack.pop()?;
        if ctx.len() < self.max_cells {
            // extensions pushed in reverse so the iteration order is stable
            let mut exts = extensions(&ctx, self.max_dim);
            exts.reverse();
            self.stack.extend(exts);
        }
        Some(ctx)
    }
}

fn extensions(ctx: &Context, max_dim: i64) -> Vec<Context> {
    let new_var = Ident::positional(ctx.len());
    let mut out = Vec::new();
    let mut push = |ty: RawType| {
        let mut ext = ctx.clone();
        ext.push(new_var.clone(), ty);
        out.push(ext);
    };
    push(RawType::Obj);
    let entries = ctx.entries();
    for (s, sa) in entries {
        // a new cell between parallel cells of equal declared type
        if catt_core::calculus::dim_type(sa) + 2 > max_dim {
            continue;
        }
        for (t, ta) in entries {
            if sa == ta {
                push(RawType::arr(
                    sa.clone(),
                    RawTerm::Var(s.clone()),
                    RawTerm::Var(t.clone()),
                ));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// independent peeling recognizer

#[derive(Clone)]
struct OCell {
    name: Ident,
    dim: usize,
    src: Option<Ident>,
    tgt: Option<Ident>,
    ty: RawType,
}

fn snapshot(g: &GlobSet) -> Vec<OCell> {
    g.cells()
        .map(|c| OCell {
            name: g.name(c).clone(),
            dim: c.dim,
            src: g.src(c).map(|s| g.name(s).clone()),
            tgt: g.tgt(c).map(|t| g.name(t).clone()),
            ty: cell_type(g, c),
        })
        .collect()
}

fn cell_type(g: &GlobSet, c: CellRef) -> RawType {
    match (g.src(c), g.tgt(c)) {
        (Some(s), Some(t)) => RawType::arr(
            cell_type(g, s),
            RawTerm::Var(g.name(s).clone()),
            RawTerm::Var(g.name(t).clone()),
        ),
        _ => RawType::Obj,
    }
}

/// Transitive closure of `s(x) ◁ x ◁ t(x)` over a cell snapshot. Kept local
/// to this crate on purpose.
fn closure(cells: &[OCell]) -> Vec<bool> {
    let n = cells.len();
    let idx: BTreeMap<&Ident, usize> = cells.iter().enumerate().map(|(i, c)| (&c.name, i)).collect();
    let mut mat = vec![false; n * n];
    for (i, c) in cells.iter().enumerate() {
        if let (Some(s), Some(t)) = (&c.src, &c.tgt) {
            mat[idx[s] * n + i] = true;
            mat[i * n + idx[t]] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if mat[i * n + k] {
                for j in 0..n {
                    if mat[k * n + j] {
                        mat[i * n + j] = true;
                    }
                }
            }
        }
    }
    mat
}

/// Rebuilds the unique candidate ps-context of a globular set by peeling:
/// repeatedly remove the ◁-greatest locally maximal cell together with its
/// target, recursing until a single point remains. Returns `None` whenever a
/// step has no safe move, which happens exactly on non-pasting-schemes.
pub fn reconstruct_ps(g: &GlobSet) -> Option<Context> {
    let mut cells = snapshot(g);
    let mut pairs: Vec<((Ident, RawType), (Ident, RawType))> = Vec::new();
    loop {
        if cells.is_empty() {
            return None;
        }
        if cells.len() == 1 {
            if cells[0].dim != 0 {
                return None;
            }
            let mut entries = vec![(cells[0].name.clone(), RawType::Obj)];
            for ((y, ay), (f, af)) in pairs.into_iter().rev() {
                entries.push((y, ay));
                entries.push((f, af));
            }
            return Some(Context::from_entries(entries));
        }

        let mat = closure(&cells);
        let n = cells.len();
        for i in 0..n {
            if mat[i * n + i] {
                return None; // a cycle; certainly not a scheme
            }
        }
        // locally maximal = not on the boundary of any cell
        let loc_max: Vec<usize> = (0..n)
            .filter(|&i| {
                let name = &cells[i].name;
                !cells
                    .iter()
                    .any(|c| c.src.as_ref() == Some(name) || c.tgt.as_ref() == Some(name))
            })
            .collect();
        // the greatest among them under ◁
        let mut greatest = None;
        'cand: for &a in &loc_max {
            for &b in &loc_max {
                if b != a && !(mat[b * n + a] && !mat[a * n + b]) {
                    continue 'cand;
                }
            }
            greatest = Some(a);
            break;
        }
        let a = greatest?;
        if cells[a].dim == 0 {
            return None; // a second component; points only peel when alone
        }
        let t_name = cells[a].tgt.clone().expect("positive dimension");
        let a_name = cells[a].name.clone();
        // removing t(a) must strand no other cell
        let t_used_elsewhere = cells.iter().any(|c| {
            c.name != a_name
                && (c.src.as_ref() == Some(&t_name) || c.tgt.as_ref() == Some(&t_name))
        });
        if t_used_elsewhere {
            return None;
        }
        let t_idx = cells.iter().position(|c| c.name == t_name)?;
        pairs.push((
            (cells[t_idx].name.clone(), cells[t_idx].ty.clone()),
            (cells[a].name.clone(), cells[a].ty.clone()),
        ));
        let mut keep = Vec::with_capacity(cells.len() - 2);
        for (i, c) in cells.iter().enumerate() {
            if i != a && i != t_idx {
                keep.push(c.clone());
            }
        }
        cells = keep;
    }
}

/// Whether the peeling procedure recognizes `g` as a pasting scheme.
/// Independent of `check_ps` and of `is_linear`.
pub fn ps_by_peeling(g: &GlobSet) -> bool {
    reconstruct_ps(g).is_some()
}

// ---------------------------------------------------------------------------
// globular-set morphisms

/// All globular-set morphisms `g → h`: dimension-preserving cell maps
/// commuting with source and target.
pub fn enum_morphisms(g: &GlobSet, h: &GlobSet) -> Vec<BTreeMap<CellRef, CellRef>> {
    let cells: Vec<CellRef> = g.cells().collect();
    let mut out = Vec::new();
    let mut partial: BTreeMap<CellRef, CellRef> = BTreeMap::new();
    assign(g, h, &cells, 0, &mut partial, &mut out);
    out
}

fn assign(
    g: &GlobSet,
    h: &GlobSet,
    cells: &[CellRef],
    at: usize,
    partial: &mut BTreeMap<CellRef, CellRef>,
    out: &mut Vec<BTreeMap<CellRef, CellRef>>,
) {
    if at == cells.len() {
        out.push(partial.clone());
        return;
    }
    let c = cells[at];
    for i in 0..h.cells_of_dim(c.dim) {
        let img = CellRef { dim: c.dim, idx: i };
        let ok = match (g.src(c), g.tgt(c)) {
            (Some(s), Some(t)) => h.src(img) == Some(partial[&s]) && h.tgt(img) == Some(partial[&t]),
            _ => true,
        };
        if ok {
            partial.insert(c, img);
            assign(g, h, cells, at + 1, partial, out);
            partial.remove(&c);
        }
    }
}

// ---------------------------------------------------------------------------
// derivable-term generators

/// A pool of kernel-derivable terms over one context, grouped by their
/// inferred type.
pub struct TermPool {
    pub ctx: Context,
    pub by_type: BTreeMap<RawType, Vec<RawTerm>>,
}

impl TermPool {
    pub fn terms(&self) -> impl Iterator<Item = (&RawType, &RawTerm)> {
        self.by_type
            .iter()
            .flat_map(|(ty, ts)| ts.iter().map(move |t| (ty, t)))
    }

    pub fn pick(&self, rng: &mut impl Rng) -> Option<(&RawType, &RawTerm)> {
        let all: Vec<_> = self.terms().collect();
        all.choose(rng).copied()
    }
}

/// Seeds a pool with the context's variables and grows it by randomly
/// instantiating environment coherences: `rounds` sampling rounds of
/// `attempts` tries each, keeping at most `cap` terms per type (small
/// buckets keep exact-type matching likely for later draws).
pub fn term_pool(
    env: &Environment,
    ctx: &Context,
    rounds: usize,
    attempts: usize,
    cap: usize,
    rng: &mut impl Rng,
) -> TermPool {
    let mut by_type: BTreeMap<RawType, BTreeSet<RawTerm>> = BTreeMap::new();
    for (x, a) in ctx.entries() {
        by_type
            .entry(a.clone())
            .or_default()
            .insert(RawTerm::Var(x.clone()));
    }
    let keys: Vec<_> = env.coherences().map(|(_, _, _, key)| key.clone()).collect();
    for _ in 0..rounds {
        for _ in 0..attempts {
            let Some(key) = keys.as_slice().choose(rng) else { break };
            if let Some((ty, tm)) = try_instantiate(key, &by_type, rng) {
                let bucket = by_type.entry(ty).or_default();
                if bucket.len() < cap {
                    bucket.insert(tm);
                }
            }
        }
    }
    TermPool {
        ctx: ctx.clone(),
        by_type: by_type
            .into_iter()
            .map(|(ty, set)| (ty, set.into_iter().collect()))
            .collect(),
    }
}

fn try_instantiate(
    key: &std::sync::Arc<CohKey>,
    by_type: &BTreeMap<RawType, BTreeSet<RawTerm>>,
    rng: &mut impl Rng,
) -> Option<(RawType, RawTerm)> {
    let mut sub = Substitution::empty();
    for (x, a) in key.ctx().entries() {
        let target = apply_type(a, &sub).ok()?;
        let candidates = by_type.get(&target)?;
        let pick = rng.gen_range(0..candidates.len());
        let tm = candidates.iter().nth(pick)?.clone();
        sub.push(x.clone(), tm);
    }
    let ty = apply_type(key.ty(), &sub).ok()?;
    Some((
        ty,
        RawTerm::CohApp {
            key: key.clone(),
            sub,
        },
    ))
}

/// A random substitution `pool.ctx → gamma` drawn from the pool, when the
/// pool has terms of every required type.
pub fn random_sub(
    pool: &TermPool,
    gamma: &Context,
    rng: &mut impl Rng,
) -> Option<Substitution> {
    let mut sub = Substitution::empty();
    for (x, a) in gamma.entries() {
        let target = apply_type(a, &sub).ok()?;
        let candidates = pool.by_type.get(&target)?;
        let pick = candidates.as_slice().choose(rng)?.clone();
        sub.push(x.clone(), pick);
    }
    Some(sub)
}

// ---------------------------------------------------------------------------
// exhaustive closed-term search

/// Every term of depth at most `max_depth` that can be written in the empty
/// context from the environment's coherences: substitutions are enumerated
/// from smaller closed terms, exhaustively. (The theory proves this is empty;
/// the search is the oracle for that fact.)
pub fn closed_terms_up_to_depth(env: &Environment, max_depth: u64) -> Vec<RawTerm> {
    let mut found: Vec<RawTerm> = Vec::new(); // every closed term seen so far
    for _depth in 1..=max_depth {
        let mut new_terms = Vec::new();
        for (_, _, _, key) in env.coherences() {
            enumerate_subs(key, &found, &mut new_terms);
        }
        for t in new_terms {
            if !found.contains(&t) {
                found.push(t);
            }
        }
    }
    found
}

fn enumerate_subs(key: &std::sync::Arc<CohKey>, pool: &[RawTerm], out: &mut Vec<RawTerm>) {
    let arity = key.ctx().len();
    // no closed term can fill a nonempty telescope from an empty pool
    let mut picks = vec![0usize; arity];
    if arity > 0 && pool.is_empty() {
        return;
    }
    loop {
        let sub = Substitution::from_entries(
            key.ctx()
                .vars()
                .cloned()
                .zip(picks.iter().map(|&i| pool[i].clone()))
                .collect(),
        );
        let env = Environment::new();
        let candidate = RawTerm::CohApp {
            key: key.clone(),
            sub,
        };
        if catt_core::kernel::infer_term(&env, &Context::empty(), &candidate).is_ok() {
            out.push(candidate);
        }
        // next index vector
        let mut i = 0;
        loop {
            if i == arity {
                return;
            }
            picks[i] += 1;
            if picks[i] < pool.len() {
                break;
            }
            picks[i] = 0;
            i += 1;
        }
        if arity == 0 {
            return;
        }
    }
}

/// The globular set of a context, or `None` when the context is not
/// globular. Convenience for the agreement suites.
pub fn globset_of(ctx: &Context) -> Option<GlobSet> {
    catt_core::pasting::to_globset(ctx).ok()
}

/// The declared coherences of an environment with their contexts, handy for
/// iterating the corpus.
pub fn corpus_coherences(env: &Environment) -> Vec<(Ident, Context, RawType)> {
    env.coherences()
        .map(|(name, ps, ty, _)| (name.clone(), ps.ctx().clone(), ty.clone()))
        .collect()
}

/// Collects every type and term reachable from the checked declarations of
/// an environment: declaration types, their endpoint terms, let bodies, and
/// recursively the images of every substitution inside them.
pub fn harvest(env: &Environment) -> Vec<(Context, Vec<RawType>, Vec<RawTerm>)> {
    let mut out = Vec::new();
    for (_, decl) in env.iter() {
        let (ctx, tys, tms) = match decl {
            Declaration::Coherence { ps, ty, .. } => {
                let mut tys = Vec::new();
                let mut tms = Vec::new();
                walk_type(ty, &mut tys, &mut tms);
                for (_, a) in ps.ctx().entries() {
                    walk_type(a, &mut tys, &mut tms);
                }
                (ps.ctx().clone(), tys, tms)
            }
            Declaration::LetDef { ctx, body, ty } => {
                let mut tys = Vec::new();
                let mut tms = Vec::new();
                walk_type(ty, &mut tys, &mut tms);
                walk_term(body, &mut tms);
                (ctx.clone(), tys, tms)
            }
        };
        out.push((ctx, tys, tms));
    }
    out
}

fn walk_type(a: &RawType, tys: &mut Vec<RawType>, tms: &mut Vec<RawTerm>) {
    if !tys.contains(a) {
        tys.push(a.clone());
    }
    if let RawType::Arr { base, src, tgt } = a {
        walk_type(base, tys, tms);
        walk_term(src, tms);
        walk_term(tgt, tms);
    }
}

fn walk_term(t: &RawTerm, tms: &mut Vec<RawTerm>) {
    if !tms.contains(t) {
        tms.push(t.clone());
    }
    if let RawTerm::CohApp { sub, .. } = t {
        for u in sub.images() {
            walk_term(u, tms);
        }
    }
}


/// The globular sets of every small pasting scheme, for the morphism lemmas.
pub fn small_pasting_schemes(max_cells: usize, max_dim: i64) -> Vec<GlobSet> {
    enum_globular_contexts(max_cells, max_dim)
        .filter(|ctx| catt_core::pasting::check_ps(ctx).is_ok())
        .map(|ctx| catt_core::pasting::to_globset(&ctx).expect("ps-contexts are globular"))
        .collect()
}
