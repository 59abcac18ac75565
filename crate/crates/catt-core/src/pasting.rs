//! Pasting schemes.
//!
//! A ps-context is recognized by a deterministic left-to-right scan that
//! maintains the *dangling variable*: the first entry starts the scheme
//! (`pss`), each further pair `(y : A)(f : x -> y)` extends the dangling cell
//! `x : A` (`pse`), and when no pair matches the focus moves to the target of
//! the dangling cell (`psd`). The derivation of a ps-context is unique, so no
//! backtracking is ever needed.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::calculus::{dim_type, free_vars_type};
use crate::syntax::{pretty_type, Context, Ident, NoNames, RawTerm, RawType};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PsError {
    EmptyContext,
    /// the first variable of a pasting scheme must be a point
    BaseNotObj { var: Ident },
    /// no rule applies at this entry
    Shape {
        var: Ident,
        dangling: Ident,
        expected: String,
    },
    /// duplicate names or a type out of scope; not a valid context at all
    InvalidContext { var: Ident },
    /// a type mentions a coherence application, so the context is not globular
    NonGlobular { var: Ident },
    /// boundary index 0 is not exposed; use `source`/`target`
    IndexZero,
    /// a 0-dimensional pasting scheme has no source or target
    NoBoundary,
}

impl fmt::Display for PsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsError::EmptyContext => write!(f, "the empty context is not a pasting scheme"),
            PsError::BaseNotObj { var } => {
                write!(f, "not a pasting scheme: first variable `{var}` must have type *")
            }
            PsError::Shape {
                var,
                dangling,
                expected,
            } => write!(
                f,
                "not a pasting scheme: at `{var}`, expected {expected} extending the dangling cell `{dangling}`"
            ),
            PsError::InvalidContext { var } => {
                write!(f, "malformed context at `{var}`")
            }
            PsError::NonGlobular { var } => write!(
                f,
                "context is not globular: the type of `{var}` mentions a coherence application"
            ),
            PsError::IndexZero => write!(f, "boundary index must be positive"),
            PsError::NoBoundary => {
                write!(f, "a 0-dimensional pasting scheme has no source or target")
            }
        }
    }
}

impl core::error::Error for PsError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsRule {
    Pss,
    Psd,
    Pse,
    Ps,
}

/// One step of the derivation: the rule applied and the dangling judgment
/// `x : A` it leaves in focus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub rule: PsRule,
    pub var: Ident,
    pub ty: RawType,
}

/// The peak/gluing profile of a pasting scheme seen as a globular sum of
/// disks: `top[k]` is the dimension of the `k`-th locally maximal cell,
/// `glue[k]` the dimension along which peaks `k` and `k+1` are glued.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimTable {
    pub top: Vec<u64>,
    pub glue: Vec<u64>,
}

/// A context recognized as a pasting scheme, with its derivation data cached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PsContext {
    ctx: Context,
    dim: u64,
    trace: Vec<TraceStep>,
    loc_max: Vec<Ident>,
    table: DimTable,
}

impl PsContext {
    pub fn ctx(&self) -> &Context {
        &self.ctx
    }

    /// Dimension of the scheme: the largest cell dimension.
    pub fn dim(&self) -> u64 {
        self.dim
    }

    pub fn trace(&self) -> &[TraceStep] {
        &self.trace
    }

    /// The locally maximal variables — the peaks of the derivation — in
    /// context order. These are the only arguments a user must supply.
    pub fn locally_max(&self) -> &[Ident] {
        &self.loc_max
    }

    pub fn dim_table(&self) -> &DimTable {
        &self.table
    }

    /// Positions of the locally maximal variables within the context.
    pub fn implicit_positions(&self) -> Vec<usize> {
        self.loc_max
            .iter()
            .map(|x| {
                self.ctx
                    .entries()
                    .iter()
                    .position(|(y, _)| y == x)
                    .expect("locally maximal variable is in the context")
            })
            .collect()
    }
}

/// Runs the ps-context judgment on a context. Deterministic: accepted
/// contexts get their unique derivation trace, locally maximal variables and
/// table of dimensions.
pub fn check_ps(ctx: &Context) -> Result<PsContext, PsError> {
    validate_telescope(ctx)?;
    let entries = ctx.entries();
    let (x0, a0) = entries.first().ok_or(PsError::EmptyContext)?;
    if *a0 != RawType::Obj {
        return Err(PsError::BaseNotObj { var: x0.clone() });
    }

    let mut dangling_var = x0.clone();
    let mut dangling_ty = RawType::Obj;
    let mut trace = vec![TraceStep {
        rule: PsRule::Pss,
        var: dangling_var.clone(),
        ty: RawType::Obj,
    }];
    let mut last = PsRule::Pss;
    let mut loc_max: Vec<Ident> = Vec::new();
    let mut top: Vec<u64> = Vec::new();
    let mut glue: Vec<u64> = Vec::new();

    let cell_dim = |ty: &RawType| (dim_type(ty) + 1) as u64;

    let mut i = 1;
    while i < entries.len() {
        if i + 1 >= entries.len() {
            return Err(PsError::Shape {
                var: entries[i].0.clone(),
                dangling: dangling_var.clone(),
                expected: String::from("a pair of entries `(y : A)(f : x -> y)`"),
            });
        }
        let (y, ay) = &entries[i];
        let (fv, af) = &entries[i + 1];
        loop {
            let extends = *ay == dangling_ty
                && match af.as_arr() {
                    Some((base, src, tgt)) => {
                        *base == dangling_ty
                            && *src == RawTerm::Var(dangling_var.clone())
                            && *tgt == RawTerm::Var(y.clone())
                    }
                    None => false,
                };
            if extends {
                if last == PsRule::Psd {
                    // climbing out of a valley: record the gluing dimension
                    glue.push(cell_dim(&dangling_ty));
                }
                dangling_var = fv.clone();
                dangling_ty = af.clone();
                trace.push(TraceStep {
                    rule: PsRule::Pse,
                    var: dangling_var.clone(),
                    ty: dangling_ty.clone(),
                });
                last = PsRule::Pse;
                i += 2;
                break;
            }
            match step_down(
                &mut dangling_var,
                &mut dangling_ty,
                &mut trace,
                &mut last,
                &mut loc_max,
                &mut top,
            ) {
                Ok(()) => continue,
                Err(()) => {
                    return Err(PsError::Shape {
                        var: fv.clone(),
                        dangling: dangling_var.clone(),
                        expected: format!(
                            "`({y} : {})({fv} : {dangling_var} -> {y})`",
                            pretty_type(&dangling_ty, &NoNames),
                        ),
                    });
                }
            }
        }
    }

    // descend to a point and close with the ps rule
    while matches!(dangling_ty, RawType::Arr { .. }) {
        let _ = step_down(
            &mut dangling_var,
            &mut dangling_ty,
            &mut trace,
            &mut last,
            &mut loc_max,
            &mut top,
        );
    }
    if last == PsRule::Pss {
        // single-variable scheme: the point itself is the peak
        loc_max.push(dangling_var.clone());
        top.push(0);
    }
    trace.push(TraceStep {
        rule: PsRule::Ps,
        var: dangling_var,
        ty: RawType::Obj,
    });

    let dim = *top.iter().max().expect("at least one peak");
    Ok(PsContext {
        ctx: ctx.clone(),
        dim,
        trace,
        loc_max,
        table: DimTable { top, glue },
    })
}

/// One psd step; records a peak when descending right after a climb.
/// Fails (for the caller to report) when the dangling cell is a point.
fn step_down(
    dangling_var: &mut Ident,
    dangling_ty: &mut RawType,
    trace: &mut Vec<TraceStep>,
    last: &mut PsRule,
    loc_max: &mut Vec<Ident>,
    top: &mut Vec<u64>,
) -> Result<(), ()> {
    let (base, _, tgt) = match dangling_ty.as_arr() {
        Some(parts) => parts,
        None => return Err(()),
    };
    if *last == PsRule::Pse || *last == PsRule::Pss {
        loc_max.push(dangling_var.clone());
        top.push((dim_type(dangling_ty) + 1) as u64);
    }
    let tgt_var = match tgt {
        RawTerm::Var(v) => v.clone(),
        // dangling types are built from pse matches, whose endpoints are variables
        RawTerm::CohApp { .. } => unreachable!("dangling type endpoints are variables"),
    };
    let base = base.clone();
    *dangling_var = tgt_var;
    *dangling_ty = base;
    trace.push(TraceStep {
        rule: PsRule::Psd,
        var: dangling_var.clone(),
        ty: dangling_ty.clone(),
    });
    *last = PsRule::Psd;
    Ok(())
}

/// Distinct names, and every type scoped over the earlier entries.
fn validate_telescope(ctx: &Context) -> Result<(), PsError> {
    let mut seen = alloc::collections::BTreeSet::new();
    for (i, (x, a)) in ctx.entries().iter().enumerate() {
        if !seen.insert(x.clone()) {
            return Err(PsError::InvalidContext { var: x.clone() });
        }
        for v in free_vars_type(a) {
            if !ctx.entries()[..i].iter().any(|(y, _)| *y == v) {
                return Err(PsError::InvalidContext { var: x.clone() });
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Src,
    Tgt,
}

/// The boundary recursion over telescope blocks, defined for every level ≥ 0.
/// `source`/`target` use level `dim - 1`; the public `src_ctx`/`tgt_ctx`
/// expose positive levels only.
fn boundary_at(ps: &PsContext, level: i64, side: Side) -> Context {
    let entries = ps.ctx.entries();
    let mut out: Vec<(Ident, RawType)> = vec![entries[0].clone()];
    let mut k = 1;
    while k + 1 < entries.len() {
        let (y, ay) = &entries[k];
        let (fv, af) = &entries[k + 1];
        let d = dim_type(ay);
        match side {
            Side::Src => {
                if d < level - 1 {
                    out.push((y.clone(), ay.clone()));
                    out.push((fv.clone(), af.clone()));
                }
            }
            Side::Tgt => {
                if d == level - 1 {
                    out.pop();
                    out.push((y.clone(), ay.clone()));
                } else if d < level - 1 {
                    out.push((y.clone(), ay.clone()));
                    out.push((fv.clone(), af.clone()));
                }
            }
        }
        k += 2;
    }
    Context::from_entries(out)
}

/// The `i`-source `∂⁻ᵢ` of a pasting scheme, for `i ≥ 1`.
pub fn src_ctx(ps: &PsContext, i: u64) -> Result<Context, PsError> {
    if i == 0 {
        return Err(PsError::IndexZero);
    }
    Ok(boundary_at(ps, i as i64, Side::Src))
}

/// The `i`-target `∂⁺ᵢ` of a pasting scheme, for `i ≥ 1`.
pub fn tgt_ctx(ps: &PsContext, i: u64) -> Result<Context, PsError> {
    if i == 0 {
        return Err(PsError::IndexZero);
    }
    Ok(boundary_at(ps, i as i64, Side::Tgt))
}

/// The source of a scheme of dimension ≥ 1, `∂⁻ at level dim - 1`.
pub fn source(ps: &PsContext) -> Result<Context, PsError> {
    if ps.dim == 0 {
        return Err(PsError::NoBoundary);
    }
    Ok(boundary_at(ps, ps.dim as i64 - 1, Side::Src))
}

/// The target of a scheme of dimension ≥ 1, `∂⁺ at level dim - 1`.
pub fn target(ps: &PsContext) -> Result<Context, PsError> {
    if ps.dim == 0 {
        return Err(PsError::NoBoundary);
    }
    Ok(boundary_at(ps, ps.dim as i64 - 1, Side::Tgt))
}

/// A finite globular set with labeled cells. Source/target maps are stored
/// per cell; the globular relations hold by construction (`add_cell` rejects
/// non-parallel boundaries).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GlobSet {
    dims: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Cell {
    name: Ident,
    src: usize,
    tgt: usize,
}

/// A cell reference: dimension and index within that dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellRef {
    pub dim: usize,
    pub idx: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GlobError {
    DuplicateCell { name: Ident },
    DimMismatch { name: Ident },
    NotParallel { name: Ident },
    NoSuchCell,
}

impl fmt::Display for GlobError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GlobError::DuplicateCell { name } => write!(f, "cell `{name}` already exists"),
            GlobError::DimMismatch { name } => {
                write!(f, "source and target of `{name}` have different dimensions")
            }
            GlobError::NotParallel { name } => {
                write!(f, "source and target of `{name}` are not parallel")
            }
            GlobError::NoSuchCell => write!(f, "boundary cell does not exist"),
        }
    }
}

impl core::error::Error for GlobError {}

impl GlobSet {
    pub fn new() -> Self {
        GlobSet::default()
    }

    pub fn add_point(&mut self, name: Ident) -> Result<CellRef, GlobError> {
        self.check_fresh(&name)?;
        if self.dims.is_empty() {
            self.dims.push(Vec::new());
        }
        self.dims[0].push(Cell { name, src: 0, tgt: 0 });
        Ok(CellRef {
            dim: 0,
            idx: self.dims[0].len() - 1,
        })
    }

    pub fn add_cell(&mut self, name: Ident, src: CellRef, tgt: CellRef) -> Result<CellRef, GlobError> {
        self.check_fresh(&name)?;
        if src.dim != tgt.dim {
            return Err(GlobError::DimMismatch { name });
        }
        if !self.valid(src) || !self.valid(tgt) {
            return Err(GlobError::NoSuchCell);
        }
        if src.dim >= 1 {
            let parallel = self.src(src) == self.src(tgt) && self.tgt(src) == self.tgt(tgt);
            if !parallel {
                return Err(GlobError::NotParallel { name });
            }
        }
        let d = src.dim + 1;
        while self.dims.len() <= d {
            self.dims.push(Vec::new());
        }
        self.dims[d].push(Cell {
            name,
            src: src.idx,
            tgt: tgt.idx,
        });
        Ok(CellRef {
            dim: d,
            idx: self.dims[d].len() - 1,
        })
    }

    fn check_fresh(&self, name: &Ident) -> Result<(), GlobError> {
        if self.find(name.as_str()).is_some() {
            return Err(GlobError::DuplicateCell { name: name.clone() });
        }
        Ok(())
    }

    fn valid(&self, c: CellRef) -> bool {
        c.dim < self.dims.len() && c.idx < self.dims[c.dim].len()
    }

    pub fn cell_count(&self) -> usize {
        self.dims.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.cell_count() == 0
    }

    /// Largest dimension with a cell; −1 when empty.
    pub fn dim(&self) -> i64 {
        (0..self.dims.len())
            .rev()
            .find(|&d| !self.dims[d].is_empty())
            .map(|d| d as i64)
            .unwrap_or(-1)
    }

    pub fn cells(&self) -> impl Iterator<Item = CellRef> + '_ {
        self.dims
            .iter()
            .enumerate()
            .flat_map(|(d, cs)| (0..cs.len()).map(move |i| CellRef { dim: d, idx: i }))
    }

    pub fn cells_of_dim(&self, d: usize) -> usize {
        self.dims.get(d).map(Vec::len).unwrap_or(0)
    }

    pub fn name(&self, c: CellRef) -> &Ident {
        &self.dims[c.dim][c.idx].name
    }

    pub fn src(&self, c: CellRef) -> Option<CellRef> {
        (c.dim > 0).then(|| CellRef {
            dim: c.dim - 1,
            idx: self.dims[c.dim][c.idx].src,
        })
    }

    pub fn tgt(&self, c: CellRef) -> Option<CellRef> {
        (c.dim > 0).then(|| CellRef {
            dim: c.dim - 1,
            idx: self.dims[c.dim][c.idx].tgt,
        })
    }

    pub fn find(&self, name: &str) -> Option<CellRef> {
        self.cells().find(|&c| self.name(c).as_str() == name)
    }
}

/// Reads a globular context as a globular set: one cell per variable, graded
/// by dimension, sources and targets read off the hom types. Fails on
/// non-globular contexts (a type mentioning a coherence application).
pub fn to_globset(ctx: &Context) -> Result<GlobSet, PsError> {
    validate_telescope(ctx)?;
    let mut g = GlobSet::new();
    for (x, a) in ctx.entries() {
        match a {
            RawType::Obj => {
                g.add_point(x.clone())
                    .map_err(|_| PsError::InvalidContext { var: x.clone() })?;
            }
            RawType::Arr { base, src, tgt } => {
                let (s, t) = match (src, tgt) {
                    (RawTerm::Var(s), RawTerm::Var(t)) => (s, t),
                    _ => return Err(PsError::NonGlobular { var: x.clone() }),
                };
                if free_vars_type(base).is_empty() && **base != RawType::Obj {
                    return Err(PsError::NonGlobular { var: x.clone() });
                }
                // boundary variables must be declared with exactly the base type
                for v in [s, t] {
                    match ctx.lookup(v) {
                        Some(ty) if ty == &**base => {}
                        _ => return Err(PsError::InvalidContext { var: x.clone() }),
                    }
                }
                if contains_coh_type(base) {
                    return Err(PsError::NonGlobular { var: x.clone() });
                }
                let sc = g.find(s.as_str()).ok_or(PsError::InvalidContext { var: x.clone() })?;
                let tc = g.find(t.as_str()).ok_or(PsError::InvalidContext { var: x.clone() })?;
                g.add_cell(x.clone(), sc, tc)
                    .map_err(|_| PsError::InvalidContext { var: x.clone() })?;
            }
        }
    }
    Ok(g)
}

fn contains_coh_type(a: &RawType) -> bool {
    match a {
        RawType::Obj => false,
        RawType::Arr { base, src, tgt } => {
            contains_coh_type(base) || contains_coh_term(src) || contains_coh_term(tgt)
        }
    }
}

fn contains_coh_term(t: &RawTerm) -> bool {
    matches!(t, RawTerm::CohApp { .. })
}

/// The ◁ relation of a finite globular set, fully closed.
pub struct TriangleOrder {
    order: Vec<CellRef>,
    n: usize,
    mat: Vec<bool>,
}

impl TriangleOrder {
    pub fn cells(&self) -> &[CellRef] {
        &self.order
    }

    fn index(&self, c: CellRef) -> usize {
        self.order
            .iter()
            .position(|&d| d == c)
            .expect("cell belongs to the globular set")
    }

    pub fn lt(&self, a: CellRef, b: CellRef) -> bool {
        self.mat[self.index(a) * self.n + self.index(b)]
    }
}

/// Transitive closure of `s(x) ◁ x ◁ t(x)`, as a boolean matrix.
/// All-pairs closure is cubic; the inputs are desk-scale.
pub fn triangle_closure(g: &GlobSet) -> TriangleOrder {
    let order: Vec<CellRef> = g.cells().collect();
    let n = order.len();
    let idx = |c: CellRef| order.iter().position(|&d| d == c).unwrap();
    let mut mat = vec![false; n * n];
    for &c in &order {
        if let (Some(s), Some(t)) = (g.src(c), g.tgt(c)) {
            mat[idx(s) * n + idx(c)] = true;
            mat[idx(c) * n + idx(t)] = true;
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
    TriangleOrder { order, n, mat }
}

/// Whether ◁ is total and anti-symmetric: for distinct cells exactly one of
/// `x ◁ y`, `y ◁ x`, and never `x ◁ x`. Pasting schemes are the nonempty
/// globular sets with this property; the empty set is rejected.
pub fn is_linear(g: &GlobSet) -> bool {
    if g.is_empty() {
        return false;
    }
    let rel = triangle_closure(g);
    let n = rel.n;
    for i in 0..n {
        if rel.mat[i * n + i] {
            return false;
        }
        for j in (i + 1)..n {
            if rel.mat[i * n + j] == rel.mat[j * n + i] {
                return false;
            }
        }
    }
    true
}
