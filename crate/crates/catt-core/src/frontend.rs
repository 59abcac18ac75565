//! Surface language: lexer, parser, and elaborator.
//!
//! Grammar:
//!
//! ```text
//! file ::= { decl }
//! decl ::= "coh" ident tele ":" ty | "let" ident tele "=" tm
//! tele ::= { "(" ident ":" ty ")" }
//! ty   ::= "*" | tm "->" tm
//! tm   ::= atom { atom }
//! atom ::= ident | "(" tm ")"
//! ```
//!
//! `#` starts a line comment; whitespace is otherwise insignificant. An
//! identifier is a maximal run of `[A-Za-z][A-Za-z0-9_'-]*`, except that
//! scanning stops before a `-` immediately followed by `>`, so both `unitl-`
//! and `x->y` tokenize as intended.
//!
//! A coherence may be applied either to one argument per context variable, or
//! to its locally maximal variables only; in the latter case the full
//! substitution is reconstructed by first-order matching of the declared
//! types against the inferred argument types.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::calculus::apply_term;
use crate::kernel::{
    check_sub, infer_term, Declaration, Environment, KernelError, Kind,
};
use crate::syntax::{
    pretty_ctx, pretty_term, pretty_type, Context, Ident, RawTerm, RawType, Substitution,
};

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

/// Stable diagnostic codes, rendered as `E01`…`E07`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    Syntax,
    Scope,
    TypeMismatch,
    NotPsContext,
    SideCondition,
    Arity,
    Duplicate,
}

impl ErrorCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorCode::Syntax => "E01",
            ErrorCode::Scope => "E02",
            ErrorCode::TypeMismatch => "E03",
            ErrorCode::NotPsContext => "E04",
            ErrorCode::SideCondition => "E05",
            ErrorCode::Arity => "E06",
            ErrorCode::Duplicate => "E07",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A diagnostic from any stage of the pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckError {
    pub span: Option<Span>,
    pub code: ErrorCode,
    pub message: String,
}

impl CheckError {
    fn new(code: ErrorCode, message: String) -> Self {
        CheckError { span: None, code, message }
    }

    fn at(span: Span, code: ErrorCode, message: String) -> Self {
        CheckError { span: Some(span), code, message }
    }

    pub fn with_default_span(mut self, span: Span) -> Self {
        self.span.get_or_insert(span);
        self
    }
}

impl fmt::Display for CheckError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.code, self.message)
    }
}

impl core::error::Error for CheckError {}

impl From<KernelError> for CheckError {
    fn from(e: KernelError) -> Self {
        let code = match &e.kind {
            Kind::DuplicateName { .. } => ErrorCode::Duplicate,
            Kind::Unbound { .. } | Kind::Calc(_) => ErrorCode::Scope,
            Kind::TypeMismatch { .. } | Kind::BadShape { .. } | Kind::KindMismatch { .. } => {
                ErrorCode::TypeMismatch
            }
            Kind::NotPs(_) => ErrorCode::NotPsContext,
            Kind::CohTypeIsObj | Kind::SideCondition(_) => ErrorCode::SideCondition,
            Kind::ArityMismatch { .. } | Kind::DomainMismatch { .. } => ErrorCode::Arity,
        };
        CheckError::new(code, e.to_string())
    }
}

// ---------------------------------------------------------------------------
// lexing

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    KwCoh,
    KwLet,
    Star,
    Arrow,
    LParen,
    RParen,
    Colon,
    Equal,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::KwCoh => write!(f, "`coh`"),
            Tok::KwLet => write!(f, "`let`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Equal => write!(f, "`=`"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, CheckError> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let span = Span { line, col };
        let mut bump = |chars: &mut core::iter::Peekable<core::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump(&mut chars);
            }
            '#' => {
                while let Some(&c2) = chars.peek() {
                    if c2 == '\n' {
                        break;
                    }
                    bump(&mut chars);
                }
            }
            '*' => {
                bump(&mut chars);
                out.push((Tok::Star, span));
            }
            '(' => {
                bump(&mut chars);
                out.push((Tok::LParen, span));
            }
            ')' => {
                bump(&mut chars);
                out.push((Tok::RParen, span));
            }
            ':' => {
                bump(&mut chars);
                out.push((Tok::Colon, span));
            }
            '=' => {
                bump(&mut chars);
                out.push((Tok::Equal, span));
            }
            '-' => {
                bump(&mut chars);
                if chars.peek() == Some(&'>') {
                    bump(&mut chars);
                    out.push((Tok::Arrow, span));
                } else {
                    return Err(CheckError::at(
                        span,
                        ErrorCode::Syntax,
                        String::from("stray `-`; expected `->`"),
                    ));
                }
            }
            c if c.is_ascii_alphabetic() => {
                let mut name = String::new();
                name.push(bump(&mut chars));
                loop {
                    match chars.peek() {
                        Some(&d)
                            if d.is_ascii_alphanumeric() || d == '_' || d == '\'' =>
                        {
                            name.push(bump(&mut chars));
                        }
                        Some(&'-') => {
                            // stop before `->` so `x->y` splits but `unitl-` does not
                            let mut ahead = chars.clone();
                            ahead.next();
                            if ahead.peek() == Some(&'>') {
                                break;
                            }
                            name.push(bump(&mut chars));
                        }
                        _ => break,
                    }
                }
                let tok = match name.as_str() {
                    "coh" => Tok::KwCoh,
                    "let" => Tok::KwLet,
                    _ => Tok::Ident(name),
                };
                out.push((tok, span));
            }
            other => {
                return Err(CheckError::at(
                    span,
                    ErrorCode::Syntax,
                    format!("unexpected character `{other}`"),
                ));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// parsing

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SurfaceType {
    Star,
    Arrow(SurfaceTerm, SurfaceTerm),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SurfaceTerm {
    Name(Ident),
    App(Ident, Vec<SurfaceTerm>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeclBody {
    Coh(SurfaceType),
    Let(SurfaceTerm),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurfaceDecl {
    pub name: Ident,
    pub telescope: Vec<(Ident, SurfaceType)>,
    pub body: DeclBody,
    pub span: Span,
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&(Tok, Span)> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<(Tok, Span)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn here(&self) -> Span {
        self.peek()
            .map(|&(_, s)| s)
            .or_else(|| self.toks.last().map(|&(_, s)| s))
            .unwrap_or(Span { line: 1, col: 1 })
    }

    fn err(&self, msg: String) -> CheckError {
        CheckError::at(self.here(), ErrorCode::Syntax, msg)
    }

    fn expect(&mut self, tok: Tok) -> Result<Span, CheckError> {
        match self.next() {
            Some((t, s)) if t == tok => Ok(s),
            Some((t, s)) => Err(CheckError::at(
                s,
                ErrorCode::Syntax,
                format!("expected {tok}, found {t}"),
            )),
            None => Err(self.err(format!("expected {tok}, found end of input"))),
        }
    }

    fn expect_ident(&mut self) -> Result<(Ident, Span), CheckError> {
        match self.next() {
            Some((Tok::Ident(s), span)) => {
                let id = Ident::new(&s)
                    .map_err(|e| CheckError::at(span, ErrorCode::Syntax, e.to_string()))?;
                Ok((id, span))
            }
            Some((t, s)) => Err(CheckError::at(
                s,
                ErrorCode::Syntax,
                format!("expected an identifier, found {t}"),
            )),
            None => Err(self.err(String::from("expected an identifier, found end of input"))),
        }
    }

    fn decl(&mut self) -> Result<SurfaceDecl, CheckError> {
        let (kw, span) = self.next().expect("caller checked for a token");
        let is_coh = match kw {
            Tok::KwCoh => true,
            Tok::KwLet => false,
            t => {
                return Err(CheckError::at(
                    span,
                    ErrorCode::Syntax,
                    format!("expected `coh` or `let`, found {t}"),
                ))
            }
        };
        let (name, _) = self.expect_ident()?;
        let mut telescope = Vec::new();
        while matches!(self.peek(), Some((Tok::LParen, _))) {
            self.next();
            let (x, _) = self.expect_ident()?;
            self.expect(Tok::Colon)?;
            let ty = self.ty()?;
            self.expect(Tok::RParen)?;
            telescope.push((x, ty));
        }
        let body = if is_coh {
            self.expect(Tok::Colon)?;
            DeclBody::Coh(self.ty()?)
        } else {
            self.expect(Tok::Equal)?;
            DeclBody::Let(self.tm()?)
        };
        Ok(SurfaceDecl { name, telescope, body, span })
    }

    fn ty(&mut self) -> Result<SurfaceType, CheckError> {
        if matches!(self.peek(), Some((Tok::Star, _))) {
            self.next();
            return Ok(SurfaceType::Star);
        }
        let src = self.tm()?;
        self.expect(Tok::Arrow)?;
        let tgt = self.tm()?;
        Ok(SurfaceType::Arrow(src, tgt))
    }

    fn tm(&mut self) -> Result<SurfaceTerm, CheckError> {
        let first_span = self.here();
        let first = self.atom()?;
        let mut args = Vec::new();
        while matches!(self.peek(), Some((Tok::Ident(_), _)) | Some((Tok::LParen, _))) {
            args.push(self.atom()?);
        }
        if args.is_empty() {
            return Ok(first);
        }
        match first {
            SurfaceTerm::Name(h) => Ok(SurfaceTerm::App(h, args)),
            SurfaceTerm::App(..) => Err(CheckError::at(
                first_span,
                ErrorCode::Syntax,
                String::from("application head must be an identifier"),
            )),
        }
    }

    fn atom(&mut self) -> Result<SurfaceTerm, CheckError> {
        match self.next() {
            Some((Tok::Ident(s), span)) => {
                let id = Ident::new(&s)
                    .map_err(|e| CheckError::at(span, ErrorCode::Syntax, e.to_string()))?;
                Ok(SurfaceTerm::Name(id))
            }
            Some((Tok::LParen, _)) => {
                let t = self.tm()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Some((t, s)) => Err(CheckError::at(
                s,
                ErrorCode::Syntax,
                format!("expected a term, found {t}"),
            )),
            None => Err(self.err(String::from("expected a term, found end of input"))),
        }
    }
}

/// Parses a `.catt` source file into surface declarations.
pub fn parse(src: &str) -> Result<Vec<SurfaceDecl>, CheckError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let mut out = Vec::new();
    while p.peek().is_some() {
        out.push(p.decl()?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// elaboration

/// The base of a surface arrow `src -> tgt` is the common inferred type of
/// its endpoints.
pub fn infer_arrow_base(
    env: &Environment,
    ctx: &Context,
    src: &RawTerm,
    tgt: &RawTerm,
) -> Result<RawType, CheckError> {
    let a = infer_term(env, ctx, src).map_err(CheckError::from)?;
    let b = infer_term(env, ctx, tgt).map_err(CheckError::from)?;
    if a != b {
        return Err(CheckError::new(
            ErrorCode::TypeMismatch,
            format!(
                "arrow endpoints have different types: `{}` has type `{}` but `{}` has type `{}`",
                pretty_term(src, env),
                pretty_type(&a, env),
                pretty_term(tgt, env),
                pretty_type(&b, env),
            ),
        ));
    }
    Ok(a)
}

pub fn elaborate_type(
    env: &Environment,
    ctx: &Context,
    sty: &SurfaceType,
) -> Result<RawType, CheckError> {
    match sty {
        SurfaceType::Star => Ok(RawType::Obj),
        SurfaceType::Arrow(s, t) => {
            let src = elaborate_term(env, ctx, s)?;
            let tgt = elaborate_term(env, ctx, t)?;
            let base = infer_arrow_base(env, ctx, &src, &tgt)?;
            Ok(RawType::arr(base, src, tgt))
        }
    }
}

pub fn elaborate_term(
    env: &Environment,
    ctx: &Context,
    stm: &SurfaceTerm,
) -> Result<RawTerm, CheckError> {
    match stm {
        SurfaceTerm::Name(x) => {
            if ctx.contains(x) {
                Ok(RawTerm::Var(x.clone()))
            } else if env.get(x).is_some() {
                Err(CheckError::new(
                    ErrorCode::Arity,
                    format!("`{x}` is a declaration and must be applied to arguments"),
                ))
            } else {
                Err(CheckError::new(
                    ErrorCode::Scope,
                    format!("unknown variable `{x}`"),
                ))
            }
        }
        SurfaceTerm::App(head, sargs) => {
            if ctx.contains(head) {
                return Err(CheckError::new(
                    ErrorCode::Arity,
                    format!("variable `{head}` cannot be applied to arguments"),
                ));
            }
            let mut args = Vec::with_capacity(sargs.len());
            for s in sargs {
                args.push(elaborate_term(env, ctx, s)?);
            }
            elaborate_app(env, ctx, head, args)
        }
    }
}

/// Builds the application of a declaration head to already-elaborated
/// arguments.
///
/// For a coherence over the scheme `Θ`: with `|Θ|` arguments the substitution
/// is taken as given; with one argument per locally maximal variable the rest
/// is reconstructed by matching each peak's declared type against the
/// argument's inferred type. Let definitions take full arity and expand
/// transparently.
pub fn elaborate_app(
    env: &Environment,
    ctx: &Context,
    head: &Ident,
    args: Vec<RawTerm>,
) -> Result<RawTerm, CheckError> {
    match env.get(head) {
        None => Err(CheckError::new(
            ErrorCode::Scope,
            format!("unknown identifier `{head}`"),
        )),
        Some(Declaration::LetDef { ctx: lctx, body, .. }) => {
            if args.len() != lctx.len() {
                return Err(CheckError::new(
                    ErrorCode::Arity,
                    format!(
                        "`{head}` expects {} arguments (definitions take full arity), got {}",
                        lctx.len(),
                        args.len()
                    ),
                ));
            }
            let sub = Substitution::from_entries(
                lctx.vars().cloned().zip(args).collect(),
            );
            check_sub(env, ctx, &sub, lctx)
                .map_err(|e| CheckError::from(e.frame(format!("in the arguments of `{head}`"))))?;
            // definitions are macros: substitute the body and move on
            apply_term(body, &sub).map_err(|e| CheckError::from(KernelError::from(e)))
        }
        Some(Declaration::Coherence { ps, key, .. }) => {
            let theta = ps.ctx();
            let loc_max = ps.locally_max();
            let images: Vec<RawTerm> = if args.len() == theta.len() {
                args
            } else if args.len() == loc_max.len() {
                reconstruct_images(env, ctx, head, ps.ctx(), loc_max, &args)?
            } else {
                return Err(CheckError::new(
                    ErrorCode::Arity,
                    format!(
                        "`{head}` expects {} explicit or {} locally-maximal arguments, got {}",
                        theta.len(),
                        loc_max.len(),
                        args.len()
                    ),
                ));
            };
            let sub = Substitution::from_entries(
                key.ctx().vars().cloned().zip(images).collect(),
            );
            check_sub(env, ctx, &sub, key.ctx())
                .map_err(|e| CheckError::from(e.frame(format!("in the arguments of `{head}`"))))?;
            Ok(RawTerm::CohApp { key: key.clone(), sub })
        }
    }
}

/// First-order matching: for each locally maximal variable in order, match
/// its declared type against the supplied argument's inferred type, binding
/// the iterated sources and targets, then bind the peak to the argument.
/// Scheme types are variable-built, so patterns only ever bind variables.
fn reconstruct_images(
    env: &Environment,
    ctx: &Context,
    head: &Ident,
    theta: &Context,
    loc_max: &[Ident],
    args: &[RawTerm],
) -> Result<Vec<RawTerm>, CheckError> {
    let mut binding: BTreeMap<Ident, RawTerm> = BTreeMap::new();
    for (peak, arg) in loc_max.iter().zip(args) {
        let declared = theta.lookup(peak).expect("peak is in the scheme");
        let actual = infer_term(env, ctx, arg).map_err(CheckError::from)?;
        match_type(env, declared, &actual, &mut binding)
            .map_err(|e| annotate(e, head, peak, arg, env))?;
        bind(env, &mut binding, peak, arg.clone()).map_err(|e| annotate(e, head, peak, arg, env))?;
    }
    theta
        .vars()
        .map(|x| {
            binding.get(x).cloned().ok_or_else(|| {
                CheckError::new(
                    ErrorCode::TypeMismatch,
                    format!("cannot infer the argument `{x}` of `{head}`"),
                )
            })
        })
        .collect()
}

fn annotate(e: CheckError, head: &Ident, peak: &Ident, arg: &RawTerm, env: &Environment) -> CheckError {
    CheckError {
        message: format!(
            "{}\n  while matching argument `{}` against `{peak}` of `{head}`",
            e.message,
            pretty_term(arg, env)
        ),
        ..e
    }
}

fn match_type(
    env: &Environment,
    pat: &RawType,
    actual: &RawType,
    binding: &mut BTreeMap<Ident, RawTerm>,
) -> Result<(), CheckError> {
    match (pat, actual) {
        (RawType::Obj, RawType::Obj) => Ok(()),
        (
            RawType::Arr { base: pb, src: ps, tgt: pt },
            RawType::Arr { base: ab, src: as_, tgt: at },
        ) => {
            match_type(env, pb, ab, binding)?;
            match_term(env, ps, as_, binding)?;
            match_term(env, pt, at, binding)
        }
        _ => Err(CheckError::new(
            ErrorCode::TypeMismatch,
            format!(
                "argument type `{}` does not have the shape `{}`",
                pretty_type(actual, env),
                pretty_type(pat, env),
            ),
        )),
    }
}

fn match_term(
    env: &Environment,
    pat: &RawTerm,
    actual: &RawTerm,
    binding: &mut BTreeMap<Ident, RawTerm>,
) -> Result<(), CheckError> {
    match pat {
        RawTerm::Var(x) => bind(env, binding, x, actual.clone()),
        // scheme types never contain applications
        RawTerm::CohApp { .. } => Err(CheckError::new(
            ErrorCode::TypeMismatch,
            String::from("unsupported pattern in implicit-argument matching"),
        )),
    }
}

fn bind(
    env: &Environment,
    binding: &mut BTreeMap<Ident, RawTerm>,
    x: &Ident,
    t: RawTerm,
) -> Result<(), CheckError> {
    match binding.get(x) {
        Some(prev) if *prev != t => Err(CheckError::new(
            ErrorCode::TypeMismatch,
            format!(
                "conflicting images for `{x}`: `{}` vs `{}`",
                pretty_term(prev, env),
                pretty_term(&t, env),
            ),
        )),
        Some(_) => Ok(()),
        None => {
            binding.insert(x.clone(), t);
            Ok(())
        }
    }
}

/// Elaborates and checks one declaration against the environment, extending
/// it on success. Errors are decorated with the declaration's span.
pub fn process_decl(env: &mut Environment, d: &SurfaceDecl) -> Result<(), CheckError> {
    process_decl_inner(env, d).map_err(|e| e.with_default_span(d.span))
}

fn process_decl_inner(env: &mut Environment, d: &SurfaceDecl) -> Result<(), CheckError> {
    if env.get(&d.name).is_some() {
        return Err(CheckError::new(
            ErrorCode::Duplicate,
            format!("`{}` is already declared", d.name),
        ));
    }
    let mut ctx = Context::empty();
    for (x, sty) in &d.telescope {
        if ctx.contains(x) {
            return Err(CheckError::new(
                ErrorCode::Duplicate,
                format!("telescope variable `{x}` is declared twice"),
            ));
        }
        let a = elaborate_type(env, &ctx, sty)?;
        ctx.push(x.clone(), a);
    }
    match &d.body {
        DeclBody::Coh(sty) => {
            let ty = elaborate_type(env, &ctx, sty)?;
            env.declare_coherence(d.name.clone(), ctx, ty)?;
        }
        DeclBody::Let(stm) => {
            let body = elaborate_term(env, &ctx, stm)?;
            env.declare_let(d.name.clone(), ctx, body)?;
        }
    }
    Ok(())
}

/// Prints a checked declaration back in the surface syntax.
pub fn render_decl(env: &Environment, name: &Ident) -> Option<String> {
    match env.get(name)? {
        Declaration::Coherence { ps, ty, .. } => Some(format!(
            "coh {name} {} : {}",
            pretty_ctx(ps.ctx(), env),
            pretty_type(ty, env)
        )),
        Declaration::LetDef { ctx, body, .. } => Some(format!(
            "let {name} {} = {}",
            pretty_ctx(ctx, env),
            pretty_term(body, env)
        )),
    }
}

/// Convenience for tests and the driver: parse a whole source string and
/// process every declaration in order.
pub fn process_source(env: &mut Environment, src: &str) -> Result<Vec<Ident>, CheckError> {
    let decls = parse(src)?;
    let mut names = Vec::with_capacity(decls.len());
    for d in &decls {
        process_decl(env, d)?;
        names.push(d.name.clone());
    }
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::free_vars_term;
    use alloc::vec;

    fn id(s: &str) -> Ident {
        Ident::new(s).unwrap()
    }

    fn v(s: &str) -> RawTerm {
        RawTerm::Var(id(s))
    }

    const BASE: &str = "coh id (x:*) : x -> x\ncoh comp (x:*)(y:*)(f:x->y)(z:*)(g:y->z) : x -> z\n";

    fn base_env() -> Environment {
        let mut env = Environment::new();
        process_source(&mut env, BASE).unwrap();
        env
    }

    #[test]
    fn lex_arrow_vs_dash_idents() {
        let toks = lex("unitl- x->y").unwrap();
        let kinds: Vec<Tok> = toks.into_iter().map(|(t, _)| t).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Ident("unitl-".into()),
                Tok::Ident("x".into()),
                Tok::Arrow,
                Tok::Ident("y".into()),
            ]
        );
    }

    #[test]
    fn lex_comments_and_spans() {
        let toks = lex("# hello\ncoh").unwrap();
        assert_eq!(toks.len(), 1);
        assert_eq!(toks[0].1, Span { line: 2, col: 1 });
    }

    #[test]
    fn parse_coh_decl() {
        let ds = parse("coh id (x:*) : x -> x").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].name, id("id"));
        assert_eq!(ds[0].telescope.len(), 1);
        assert!(matches!(ds[0].body, DeclBody::Coh(_)));
    }

    #[test]
    fn parse_let_decl() {
        let ds = parse("let sq (x:*)(f:x->x) = comp f f").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].telescope.len(), 2);
        match &ds[0].body {
            DeclBody::Let(SurfaceTerm::App(h, args)) => {
                assert_eq!(*h, id("comp"));
                assert_eq!(args.len(), 2);
            }
            b => panic!("unexpected body {b:?}"),
        }
    }

    #[test]
    fn parse_incomplete_decl_fails() {
        let e = parse("coh bad (x:*) : x ->").unwrap_err();
        assert_eq!(e.code, ErrorCode::Syntax);
    }

    #[test]
    fn parse_rejects_compound_head() {
        let e = parse("let a (x:*) = (comp f) g").unwrap_err();
        assert_eq!(e.code, ErrorCode::Syntax);
    }

    #[test]
    fn elaborate_full_substitution_for_implicit_comp() {
        let mut env = base_env();
        process_source(&mut env, "let sq (x:*)(f:x->x) = comp f f").unwrap();
        match env.get(&id("sq")).unwrap() {
            Declaration::LetDef { body, ty, .. } => {
                let RawTerm::CohApp { sub, .. } = body else {
                    panic!("body is an application")
                };
                let images: Vec<&RawTerm> = sub.images().collect();
                assert_eq!(images, vec![&v("x"), &v("x"), &v("f"), &v("x"), &v("f")]);
                assert_eq!(*ty, RawType::arr(RawType::Obj, v("x"), v("x")));
            }
            _ => panic!("sq is a let"),
        }
    }

    #[test]
    fn implicit_and_explicit_agree() {
        let mut e1 = base_env();
        process_source(&mut e1, "let a (p:*)(q:*)(h:p->q) = comp (id p) h").unwrap();
        let mut e2 = base_env();
        process_source(&mut e2, "let a (p:*)(q:*)(h:p->q) = comp p p (id p) q h").unwrap();
        let b1 = match e1.get(&id("a")).unwrap() {
            Declaration::LetDef { body, .. } => body.clone(),
            _ => unreachable!(),
        };
        let b2 = match e2.get(&id("a")).unwrap() {
            Declaration::LetDef { body, .. } => body.clone(),
            _ => unreachable!(),
        };
        assert_eq!(b1, b2);
    }

    #[test]
    fn matching_conflict_reported() {
        let mut env = base_env();
        // f : p -> q and h : r -> s do not compose
        let e = process_source(
            &mut env,
            "let bad (p:*)(q:*)(r:*)(s:*)(f:p->q)(h:r->s) = comp f h",
        )
        .unwrap_err();
        assert_eq!(e.code, ErrorCode::TypeMismatch);
        assert!(e.message.contains("conflicting images"));
    }

    #[test]
    fn arity_errors() {
        let mut env = base_env();
        let e = process_source(&mut env, "let bad (x:*) = comp (id x)").unwrap_err();
        assert_eq!(e.code, ErrorCode::Arity);
        let e = process_source(&mut env, "let bad2 (x:*)(f:x->x) = f x").unwrap_err();
        assert_eq!(e.code, ErrorCode::Arity);
    }

    #[test]
    fn unknown_names() {
        let mut env = base_env();
        let e = process_source(&mut env, "let bad (x:*) = wat x").unwrap_err();
        assert_eq!(e.code, ErrorCode::Scope);
        let e = process_source(&mut env, "let bad (x:*) = y").unwrap_err();
        assert_eq!(e.code, ErrorCode::Scope);
    }

    #[test]
    fn redeclaration_rejected() {
        let mut env = base_env();
        let e = process_source(&mut env, "coh id (x:*) : x -> x").unwrap_err();
        assert_eq!(e.code, ErrorCode::Duplicate);
        // lets may not shadow coherences either
        let e = process_source(&mut env, "let id (x:*) = id x").unwrap_err();
        assert_eq!(e.code, ErrorCode::Duplicate);
    }

    #[test]
    fn proj_side_condition() {
        let mut env = base_env();
        let e = process_source(&mut env, "coh proj (x:*)(y:*)(f:x->y) : x -> x").unwrap_err();
        assert_eq!(e.code, ErrorCode::SideCondition);
        assert!(e.message.contains("{y, f}"), "message: {}", e.message);
    }

    #[test]
    fn infer_arrow_base_mismatch() {
        let env = base_env();
        let ctx = Context::from_entries(vec![
            (id("x"), RawType::Obj),
            (id("y"), RawType::Obj),
            (id("f"), RawType::arr(RawType::Obj, v("x"), v("y"))),
        ]);
        let e = infer_arrow_base(&env, &ctx, &v("x"), &v("f")).unwrap_err();
        assert_eq!(e.code, ErrorCode::TypeMismatch);
        assert!(e.message.contains('*') && e.message.contains("x -> y"));
    }

    #[test]
    fn let_expansion_is_transparent() {
        let mut env = base_env();
        process_source(&mut env, "let sq (x:*)(f:x->x) = comp f f").unwrap();
        process_source(&mut env, "let quad (y:*)(g:y->y) = sq y (sq y g)").unwrap();
        match env.get(&id("quad")).unwrap() {
            Declaration::LetDef { body, .. } => {
                // the body is comp applied to comp: no `sq` node survives
                assert!(matches!(body, RawTerm::CohApp { .. }));
                assert_eq!(free_vars_term(body), [id("y"), id("g")].into_iter().collect());
                assert_eq!(crate::calculus::depth_term(body), 2);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn render_round_trips() {
        let mut env = base_env();
        process_source(&mut env, "let sq (x:*)(f:x->x) = comp f f").unwrap();
        let mut env2 = Environment::new();
        for name in ["id", "comp", "sq"] {
            let rendered = render_decl(&env, &id(name)).unwrap();
            process_source(&mut env2, &rendered).unwrap();
        }
        let b1 = match env.get(&id("sq")).unwrap() {
            Declaration::LetDef { body, .. } => body.clone(),
            _ => unreachable!(),
        };
        let b2 = match env2.get(&id("sq")).unwrap() {
            Declaration::LetDef { body, .. } => body.clone(),
            _ => unreachable!(),
        };
        assert_eq!(b1, b2);
    }
}
