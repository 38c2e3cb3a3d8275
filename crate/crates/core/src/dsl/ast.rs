use std::fmt;

/// A parsed narrative prototype: an event pattern plus a refinement expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PrototypeAst {
    pub pattern: EventPattern,
    /// Participant variables, in declaration order.
    pub binds: Vec<String>,
    pub refinement: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum EventPattern {
    ByEvent(String),
    ByType(String),
    BySupertype(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Or(Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Atom(RefinementAtom),
}

impl Expr {
    pub fn and(l: Expr, r: Expr) -> Expr {
        Expr::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Expr, r: Expr) -> Expr {
        Expr::Or(Box::new(l), Box::new(r))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    /// Visits every atom, left to right.
    pub fn atoms(&self) -> Vec<&RefinementAtom> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            match e {
                Expr::Or(l, r) | Expr::And(l, r) => {
                    stack.push(r);
                    stack.push(l);
                }
                Expr::Not(x) => stack.push(x),
                Expr::Atom(a) => out.push(a),
            }
        }
        out
    }
}

/// Argument of an attribution or entity function.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    /// A declared participant variable.
    Var(String),
    /// An entity named by id or name, written as a string literal.
    Entity(String),
    /// `_`: some participant of the event. Only appears inside [`RefinementAtom::ExistsParticipant`].
    Wildcard,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            Comparator::Eq => ord == Equal,
            Comparator::Ne => ord != Equal,
            Comparator::Lt => ord == Less,
            Comparator::Le => ord != Greater,
            Comparator::Gt => ord == Greater,
            Comparator::Ge => ord != Less,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Literal {
    Str(String),
    Int(i64),
    Bool(bool),
    Ident(String),
}

/// Zero-argument functions of the candidate event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventFunction {
    ParticipantCount,
    EventType,
    Location,
    StartDate,
    EndDate,
}

impl EventFunction {
    pub const ALL: [EventFunction; 5] = [
        EventFunction::ParticipantCount,
        EventFunction::EventType,
        EventFunction::Location,
        EventFunction::StartDate,
        EventFunction::EndDate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EventFunction::ParticipantCount => "participant_count",
            EventFunction::EventType => "event_type",
            EventFunction::Location => "location",
            EventFunction::StartDate => "start_date",
            EventFunction::EndDate => "end_date",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AttributeTarget {
    /// `attribute(subject)`, read from the entity's attributes at the event's time.
    /// `name(x)` reads the entity name.
    Entity {
        attribute: String,
        subject: Term,
    },
    Event(EventFunction),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RefinementAtom {
    /// A call to a named attribution. Whether it is objective or subjective is
    /// decided at planning time from the attribution schema; a `FROM` clause
    /// can only be valid on a subjective one.
    Attribution {
        name: String,
        args: Vec<Term>,
        viewpoints: Option<Vec<String>>,
    },
    /// `role(x) = label`.
    RoleBinding {
        subject: Term,
        op: Comparator,
        role: String,
    },
    AttributeTest {
        target: AttributeTarget,
        op: Comparator,
        value: Literal,
    },
    /// The inner atom holds for at least one participant substituted for `_`.
    ExistsParticipant(Box<RefinementAtom>),
}

impl RefinementAtom {
    pub fn terms(&self) -> Vec<&Term> {
        match self {
            RefinementAtom::Attribution { args, .. } => args.iter().collect(),
            RefinementAtom::RoleBinding { subject, .. } => vec![subject],
            RefinementAtom::AttributeTest { target: AttributeTarget::Entity { subject, .. }, .. } => vec![subject],
            RefinementAtom::AttributeTest { .. } => vec![],
            RefinementAtom::ExistsParticipant(inner) => inner.terms(),
        }
    }
}

pub(crate) const KEYWORDS: [&str; 10] =
    ["MATCH", "EVENT", "TYPE", "SUPERTYPE", "BIND", "WHERE", "AND", "OR", "NOT", "FROM"];

pub(crate) fn is_plain_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&s)
        && s != "_"
        && s != "true"
        && s != "false"
}

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Entity(e) => f.write_str(&quote(e)),
            Term::Wildcard => f.write_str("_"),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Str(s) => f.write_str(&quote(s)),
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Ident(s) => f.write_str(s),
        }
    }
}

impl fmt::Display for RefinementAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RefinementAtom::Attribution { name, args, viewpoints } => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")?;
                if let Some(vs) = viewpoints {
                    write!(f, " FROM {{{}}}", vs.join(", "))?;
                }
                Ok(())
            }
            RefinementAtom::RoleBinding { subject, op, role } => {
                let role = if is_plain_ident(role) { role.clone() } else { quote(role) };
                write!(f, "role({subject}) {} {role}", op.symbol())
            }
            RefinementAtom::AttributeTest { target, op, value } => {
                match target {
                    AttributeTarget::Entity { attribute, subject } => write!(f, "{attribute}({subject})")?,
                    AttributeTarget::Event(func) => write!(f, "{}()", func.name())?,
                }
                write!(f, " {} {value}", op.symbol())
            }
            RefinementAtom::ExistsParticipant(inner) => write!(f, "{inner}"),
        }
    }
}

impl Expr {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let (prec, open) = match self {
            Expr::Or(..) => (1, min > 1),
            Expr::And(..) => (2, min > 2),
            Expr::Not(..) => (3, min > 3),
            Expr::Atom(_) => (4, false),
        };
        if open {
            f.write_str("(")?;
        }
        match self {
            Expr::Or(l, r) => {
                l.fmt_prec(f, prec)?;
                f.write_str(" OR ")?;
                r.fmt_prec(f, prec + 1)?;
            }
            Expr::And(l, r) => {
                l.fmt_prec(f, prec)?;
                f.write_str(" AND ")?;
                r.fmt_prec(f, prec + 1)?;
            }
            Expr::Not(x) => {
                f.write_str("NOT ")?;
                x.fmt_prec(f, prec)?;
            }
            Expr::Atom(a) => write!(f, "{a}")?,
        }
        if open {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl fmt::Display for EventPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventPattern::ByEvent(x) => write!(f, "EVENT {x}"),
            EventPattern::ByType(x) => write!(f, "TYPE {x}"),
            EventPattern::BySupertype(x) => write!(f, "SUPERTYPE {x}"),
        }
    }
}

impl fmt::Display for PrototypeAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MATCH {}", self.pattern)?;
        if !self.binds.is_empty() {
            write!(f, " BIND {}", self.binds.join(", "))?;
        }
        write!(f, " WHERE {}", self.refinement)
    }
}

/// Canonical text of a prototype. `parse(&render(a))` is structurally equal to `a`.
pub fn render(ast: &PrototypeAst) -> String {
    ast.to_string()
}
