use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::ast::*;

/// Parenthesis/NOT nesting limit. Deeper input is rejected instead of
/// exhausting the stack.
pub const MAX_NESTING: usize = 128;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
    /// Tokens that would have been accepted at the error position.
    pub expected: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical(String),
    Syntax(String),
    UnboundVariable(String),
    DuplicateVariable(String),
    ViewpointOnObjective,
    BareEventFunction(String),
    TooDeep,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.line, self.column)?;
        match &self.kind {
            ParseErrorKind::Lexical(m) | ParseErrorKind::Syntax(m) => f.write_str(m)?,
            ParseErrorKind::UnboundVariable(v) => write!(f, "unbound variable {v}")?,
            ParseErrorKind::DuplicateVariable(v) => write!(f, "variable {v} declared more than once")?,
            ParseErrorKind::ViewpointOnObjective => f.write_str("viewpoint qualifier on objective atom")?,
            ParseErrorKind::BareEventFunction(n) => write!(f, "event function {n}() must be compared to a value")?,
            ParseErrorKind::TooDeep => write!(f, "expression nested deeper than {MAX_NESTING} levels")?,
        }
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl ParseError {
    /// Multi-line diagnostic with the offending source line and a caret.
    pub fn diagnostic(&self, source: &str) -> String {
        let line = source.lines().nth(self.line.saturating_sub(1)).unwrap_or("");
        let pad: String =
            line.chars().take(self.column.saturating_sub(1)).map(|c| if c == '\t' { '\t' } else { ' ' }).collect();
        format!("error: {self}\n  | {line}\n  | {pad}^")
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Kw(&'static str),
    Ident(String),
    Str(String),
    Int(i64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Cmp(Comparator),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Kw(k) => (*k).to_owned(),
            Tok::Ident(i) => format!("identifier `{i}`"),
            Tok::Str(_) => "string".into(),
            Tok::Int(_) => "integer".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Cmp(c) => format!("`{}`", c.symbol()),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

struct Cursor<'a> {
    src: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&mut self) -> Option<(usize, char)> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, column: usize, msg: String) -> ParseError {
        ParseError { line, column, kind: ParseErrorKind::Lexical(msg), expected: vec![] }
    }
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut cur = Cursor { src, chars: src.char_indices().peekable(), line: 1, column: 1 };

    while let Some((i, c)) = cur.peek() {
        let (line, column) = (cur.line, cur.column);
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut end = i;
            while let Some((j, d)) = cur.peek() {
                if d.is_ascii_alphanumeric() || d == '_' {
                    end = j + d.len_utf8();
                    cur.bump();
                } else {
                    break;
                }
            }
            let word = &cur.src[i..end];
            match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word.to_owned()),
            }
        } else if c.is_ascii_digit() || c == '-' {
            cur.bump();
            let mut text = String::from(c);
            while let Some((_, d)) = cur.peek() {
                if d.is_ascii_digit() {
                    text.push(d);
                    cur.bump();
                } else {
                    break;
                }
            }
            if text == "-" {
                return Err(cur.error(line, column, "expected digits after `-`".into()));
            }
            match text.parse::<i64>() {
                Ok(n) => Tok::Int(n),
                Err(_) => return Err(cur.error(line, column, format!("integer `{text}` out of range"))),
            }
        } else if c == '"' {
            cur.bump();
            let mut s = String::new();
            loop {
                let Some(d) = cur.bump() else {
                    return Err(cur.error(line, column, "unterminated string literal".into()));
                };
                match d {
                    '"' => break,
                    '\\' => {
                        let (el, ec) = (cur.line, cur.column);
                        let Some(e) = cur.bump() else {
                            return Err(cur.error(line, column, "unterminated string literal".into()));
                        };
                        s.push(match e {
                            '"' => '"',
                            '\\' => '\\',
                            'n' => '\n',
                            't' => '\t',
                            'r' => '\r',
                            other => return Err(cur.error(el, ec, format!("unknown escape `\\{other}`"))),
                        });
                    }
                    d => s.push(d),
                }
            }
            Tok::Str(s)
        } else {
            cur.bump();
            let next = cur.peek().map(|(_, d)| d);
            let two = |cur: &mut Cursor<'_>, t| {
                cur.bump();
                t
            };
            match (c, next) {
                ('(', _) => Tok::LParen,
                (')', _) => Tok::RParen,
                ('{', _) => Tok::LBrace,
                ('}', _) => Tok::RBrace,
                (',', _) => Tok::Comma,
                ('=', _) => Tok::Cmp(Comparator::Eq),
                ('!', Some('=')) => two(&mut cur, Tok::Cmp(Comparator::Ne)),
                ('<', Some('=')) => two(&mut cur, Tok::Cmp(Comparator::Le)),
                ('>', Some('=')) => two(&mut cur, Tok::Cmp(Comparator::Ge)),
                ('<', _) => Tok::Cmp(Comparator::Lt),
                ('>', _) => Tok::Cmp(Comparator::Gt),
                (other, _) => {
                    return Err(cur.error(line, column, format!("unexpected character `{}`", other.escape_debug())))
                }
            }
        };
        out.push(Spanned { tok, line, column });
    }
    out.push(Spanned { tok: Tok::Eof, line: cur.line, column: cur.column });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    depth: usize,
    binds: BTreeSet<String>,
}

/// Parses prototype text into an AST.
///
/// Variables must be declared with `BIND`; a string argument names an entity;
/// `_` as an argument means "some participant".
pub fn parse(text: &str) -> Result<PrototypeAst, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, depth: 0, binds: BTreeSet::new() };
    p.prototype()
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, at: &Spanned, kind: ParseErrorKind, expected: &[&str]) -> ParseError {
        ParseError {
            line: at.line,
            column: at.column,
            kind,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let at = self.peek();
        self.error_at(at, ParseErrorKind::Syntax(format!("unexpected {}", at.tok.describe())), expected)
    }

    fn expect_kw(&mut self, kw: &'static str) -> Result<(), ParseError> {
        if self.peek().tok == Tok::Kw(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[kw]))
        }
    }

    fn expect(&mut self, tok: Tok, desc: &str) -> Result<(), ParseError> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[desc]))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match &self.peek().tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn prototype(&mut self) -> Result<PrototypeAst, ParseError> {
        self.expect_kw("MATCH")?;
        let pattern = match self.peek().tok {
            Tok::Kw("EVENT") => {
                self.bump();
                EventPattern::ByEvent(self.ident()?)
            }
            Tok::Kw("TYPE") => {
                self.bump();
                EventPattern::ByType(self.ident()?)
            }
            Tok::Kw("SUPERTYPE") => {
                self.bump();
                EventPattern::BySupertype(self.ident()?)
            }
            _ => return Err(self.unexpected(&["EVENT", "TYPE", "SUPERTYPE"])),
        };
        let mut binds = Vec::new();
        if self.peek().tok == Tok::Kw("BIND") {
            self.bump();
            loop {
                let at = self.peek().clone();
                let v = self.ident()?;
                if v == "_" {
                    return Err(self.error_at(
                        &at,
                        ParseErrorKind::Syntax("`_` cannot be bound".into()),
                        &["identifier"],
                    ));
                }
                if !self.binds.insert(v.clone()) {
                    return Err(self.error_at(&at, ParseErrorKind::DuplicateVariable(v), &[]));
                }
                binds.push(v);
                if self.peek().tok == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        if self.peek().tok != Tok::Kw("WHERE") {
            let expected: &[&str] = if binds.is_empty() { &["BIND", "WHERE"] } else { &["`,`", "WHERE"] };
            return Err(self.unexpected(expected));
        }
        self.bump();
        let refinement = self.expr()?;
        if self.peek().tok != Tok::Eof {
            return Err(self.unexpected(&["AND", "OR", "end of input"]));
        }
        Ok(PrototypeAst { pattern, binds, refinement })
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(self.error_at(self.peek(), ParseErrorKind::TooDeep, &[]));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while self.peek().tok == Tok::Kw("OR") {
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while self.peek().tok == Tok::Kw("AND") {
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        match self.peek().tok {
            Tok::Kw("NOT") => {
                self.bump();
                self.enter()?;
                let inner = self.factor()?;
                self.depth -= 1;
                Ok(Expr::not(inner))
            }
            Tok::LParen => {
                self.bump();
                self.enter()?;
                let inner = self.expr()?;
                self.depth -= 1;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(_) => Ok(Expr::Atom(self.atom()?)),
            _ => Err(self.unexpected(&["NOT", "`(`", "identifier"])),
        }
    }

    fn term_arg(&mut self) -> Result<Term, ParseError> {
        let at = self.peek().clone();
        match &at.tok {
            Tok::Ident(s) if s == "_" => {
                self.bump();
                Ok(Term::Wildcard)
            }
            Tok::Ident(s) => {
                if !self.binds.contains(s) {
                    return Err(self.error_at(&at, ParseErrorKind::UnboundVariable(s.clone()), &[]));
                }
                self.bump();
                Ok(Term::Var(s.clone()))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Term::Entity(s.clone()))
            }
            _ => Err(self.unexpected(&["identifier", "string", "`_`"])),
        }
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        let lit = match &self.peek().tok {
            Tok::Str(s) => Literal::Str(s.clone()),
            Tok::Int(i) => Literal::Int(*i),
            Tok::Ident(s) if s == "true" => Literal::Bool(true),
            Tok::Ident(s) if s == "false" => Literal::Bool(false),
            Tok::Ident(s) if s != "_" => Literal::Ident(s.clone()),
            _ => return Err(self.unexpected(&["string", "integer", "identifier"])),
        };
        self.bump();
        Ok(lit)
    }

    fn atom(&mut self) -> Result<RefinementAtom, ParseError> {
        let start = self.peek().clone();
        let name = self.ident()?;
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.peek().tok != Tok::RParen {
            loop {
                args.push(self.term_arg()?);
                if self.peek().tok == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, if args.is_empty() { "`)`" } else { "`,` or `)`" })?;
        let wildcards = args.iter().filter(|a| **a == Term::Wildcard).count();
        if wildcards > 1 {
            return Err(self.error_at(&start, ParseErrorKind::Syntax("at most one `_` per atom".into()), &[]));
        }

        let atom = if let Tok::Cmp(op) = self.peek().tok {
            self.bump();
            let lit_at = self.peek().clone();
            let value = self.literal()?;
            let atom = if name == "role" {
                let [subject] = <[Term; 1]>::try_from(args).map_err(|_| {
                    self.error_at(&start, ParseErrorKind::Syntax("role() takes exactly one argument".into()), &[])
                })?;
                if !matches!(op, Comparator::Eq | Comparator::Ne) {
                    return Err(self.error_at(
                        &lit_at,
                        ParseErrorKind::Syntax("roles compare only with = or !=".into()),
                        &[],
                    ));
                }
                let role = match value {
                    Literal::Ident(s) | Literal::Str(s) => s,
                    _ => {
                        return Err(self.error_at(
                            &lit_at,
                            ParseErrorKind::Syntax("expected a role label".into()),
                            &["identifier"],
                        ))
                    }
                };
                RefinementAtom::RoleBinding { subject, op, role }
            } else if let Some(func) = EventFunction::from_name(&name) {
                if !args.is_empty() {
                    return Err(self.error_at(
                        &start,
                        ParseErrorKind::Syntax(format!("{name}() takes no arguments")),
                        &[],
                    ));
                }
                RefinementAtom::AttributeTest { target: AttributeTarget::Event(func), op, value }
            } else {
                let [subject] = <[Term; 1]>::try_from(args).map_err(|_| {
                    self.error_at(
                        &start,
                        ParseErrorKind::Syntax(format!("attribute {name}() takes exactly one argument")),
                        &[],
                    )
                })?;
                RefinementAtom::AttributeTest {
                    target: AttributeTarget::Entity { attribute: name, subject },
                    op,
                    value,
                }
            };
            if self.peek().tok == Tok::Kw("FROM") {
                return Err(self.error_at(self.peek(), ParseErrorKind::ViewpointOnObjective, &[]));
            }
            atom
        } else {
            if name == "role" || EventFunction::from_name(&name).is_some() {
                return Err(self.error_at(&start, ParseErrorKind::BareEventFunction(name), &["comparator"]));
            }
            let viewpoints = if self.peek().tok == Tok::Kw("FROM") {
                self.bump();
                self.expect(Tok::LBrace, "`{`")?;
                let mut vs: Vec<String> = Vec::new();
                loop {
                    let at = self.peek().clone();
                    let v = self.ident()?;
                    if vs.contains(&v) {
                        return Err(self.error_at(
                            &at,
                            ParseErrorKind::Syntax(format!("viewpoint {v} listed twice")),
                            &[],
                        ));
                    }
                    vs.push(v);
                    if self.peek().tok == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RBrace, "`,` or `}`")?;
                Some(vs)
            } else {
                None
            };
            RefinementAtom::Attribution { name, args, viewpoints }
        };
        Ok(if wildcards == 1 { RefinementAtom::ExistsParticipant(Box::new(atom)) } else { atom })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DVG: &str = "MATCH SUPERTYPE conflict BIND p WHERE role(p) = winner AND is_underdog(p)";
    const RVU: &str = r#"MATCH EVENT RUC22 BIND x WHERE name(x) = "Russia" AND is_aggressor(x) FROM {US, UK}"#;

    #[test]
    fn parses_dvg() {
        let ast = parse(DVG).unwrap();
        assert_eq!(ast.pattern, EventPattern::BySupertype("conflict".into()));
        assert_eq!(ast.binds, ["p"]);
        let want = Expr::and(
            Expr::Atom(RefinementAtom::RoleBinding {
                subject: Term::Var("p".into()),
                op: Comparator::Eq,
                role: "winner".into(),
            }),
            Expr::Atom(RefinementAtom::Attribution {
                name: "is_underdog".into(),
                args: vec![Term::Var("p".into())],
                viewpoints: None,
            }),
        );
        assert_eq!(ast.refinement, want);
    }

    #[test]
    fn parses_rvu() {
        let ast = parse(RVU).unwrap();
        assert_eq!(ast.pattern, EventPattern::ByEvent("RUC22".into()));
        let atoms = ast.refinement.atoms();
        assert_eq!(
            atoms[0],
            &RefinementAtom::AttributeTest {
                target: AttributeTarget::Entity { attribute: "name".into(), subject: Term::Var("x".into()) },
                op: Comparator::Eq,
                value: Literal::Str("Russia".into()),
            }
        );
        assert_eq!(
            atoms[1],
            &RefinementAtom::Attribution {
                name: "is_aggressor".into(),
                args: vec![Term::Var("x".into())],
                viewpoints: Some(vec!["US".into(), "UK".into()]),
            }
        );
    }

    #[test]
    fn unbound_variable() {
        let err = parse("MATCH SUPERTYPE conflict WHERE is_underdog(p)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnboundVariable("p".into()));
        assert!(err.to_string().contains("unbound variable p"));
        assert_eq!((err.line, err.column), (1, 44));
    }

    #[test]
    fn duplicate_variable() {
        let err = parse("MATCH TYPE war BIND p, p WHERE f(p)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DuplicateVariable("p".into()));
    }

    #[test]
    fn from_on_comparison_rejected() {
        let err = parse("MATCH TYPE war BIND p WHERE role(p) = winner FROM {US}").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::ViewpointOnObjective);
    }

    #[test]
    fn bare_event_function_rejected() {
        let err = parse("MATCH TYPE war WHERE participant_count()").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::BareEventFunction(_)));
    }

    #[test]
    fn wildcard_becomes_exists() {
        let ast = parse("MATCH TYPE war WHERE is_aggressor(_)").unwrap();
        assert!(matches!(ast.refinement, Expr::Atom(RefinementAtom::ExistsParticipant(_))));
        assert_eq!(render(&ast), "MATCH TYPE war WHERE is_aggressor(_)");
    }

    #[test]
    fn precedence_not_and_or() {
        let ast = parse("MATCH TYPE t WHERE NOT a() AND b() OR c()").unwrap();
        let a = || Expr::Atom(RefinementAtom::Attribution { name: "a".into(), args: vec![], viewpoints: None });
        let b = || Expr::Atom(RefinementAtom::Attribution { name: "b".into(), args: vec![], viewpoints: None });
        let c = || Expr::Atom(RefinementAtom::Attribution { name: "c".into(), args: vec![], viewpoints: None });
        assert_eq!(ast.refinement, Expr::or(Expr::and(Expr::not(a()), b()), c()));
    }

    #[test]
    fn syntax_error_position_and_expected() {
        let err = parse("MATCH\n  BATCH war WHERE a()").unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
        assert_eq!(err.expected, ["EVENT", "TYPE", "SUPERTYPE"]);
        let diag = err.diagnostic("MATCH\n  BATCH war WHERE a()");
        assert!(diag.ends_with("  |   ^"), "{diag}");
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let text = format!("MATCH TYPE t WHERE {}a(){}", "(".repeat(100_000), ")".repeat(100_000));
        assert_eq!(parse(&text).unwrap_err().kind, ParseErrorKind::TooDeep);
        let text = format!("MATCH TYPE t WHERE {}a()", "NOT ".repeat(100_000));
        assert_eq!(parse(&text).unwrap_err().kind, ParseErrorKind::TooDeep);
    }

    #[test]
    fn canonical_render_normalizes_whitespace() {
        let messy = "MATCH   SUPERTYPE conflict\n BIND p\tWHERE role( p )=winner AND   is_underdog(p)";
        assert_eq!(render(&parse(messy).unwrap()), DVG);
        assert_eq!(render(&parse(DVG).unwrap()), DVG);
        assert_eq!(render(&parse(RVU).unwrap()), RVU);
    }

    #[test]
    fn string_escapes_round_trip() {
        let text = r#"MATCH TYPE t BIND x WHERE name(x) = "a \"q\" \\ b""#;
        let ast = parse(text).unwrap();
        assert_eq!(parse(&render(&ast)).unwrap(), ast);
        assert!(parse(r#"MATCH TYPE t WHERE name("x) = 1"#).is_err());
    }

    #[test]
    fn literals() {
        let ast =
            parse(r#"MATCH TYPE t WHERE participant_count() >= -2 AND start_date() < "2000-01-01" AND f("E") = true"#)
                .unwrap();
        let atoms = ast.refinement.atoms();
        assert!(matches!(atoms[0], RefinementAtom::AttributeTest { value: Literal::Int(-2), op: Comparator::Ge, .. }));
        assert!(matches!(atoms[2], RefinementAtom::AttributeTest { value: Literal::Bool(true), .. }));
    }
}
