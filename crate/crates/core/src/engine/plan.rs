use std::fmt;

use chrono::NaiveDate;

use crate::config::Config;
use crate::dsl::{
    AttributeTarget, Comparator, EventFunction, EventPattern, Expr, Literal, PrototypeAst, RefinementAtom, Term,
};
use crate::graph::KnowledgeGraph;
use crate::index::AttributionIndexSet;
use crate::model::{AttrValue, AttributionKind};
use crate::witness::QuestionTemplate;

/// Everything wrong with a prototype against a schema, reported together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanError {
    pub problems: Vec<String>,
}

impl fmt::Display for PlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cannot plan query: {}", self.problems.join("; "))
    }
}

impl std::error::Error for PlanError {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Subject {
    /// Index into the plan's bind list.
    Var(usize),
    Entity(String),
    /// Some participant of the event.
    Any,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventValue {
    Count(i64),
    Date(NaiveDate),
    Year(i32),
    Name(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ObjectiveCheck {
    Attribution { name: String, kind: AttributionKind, subject: Option<Subject> },
    Role { subject: Subject, negated: bool, role: String },
    EntityName { subject: Subject, op: Comparator, value: String },
    EntityAttribute { subject: Subject, attribute: String, op: Comparator, value: AttrValue },
    Event { function: EventFunction, op: Comparator, value: EventValue },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViewpointScope {
    /// No `FROM`: true if the attribution holds in at least one viewpoint.
    AnyOf(Vec<String>),
    /// `FROM {..}`: must hold in every listed viewpoint.
    EachOf(Vec<String>),
}

impl ViewpointScope {
    pub fn viewpoints(&self) -> &[String] {
        match self {
            ViewpointScope::AnyOf(v) | ViewpointScope::EachOf(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubjectiveCheck {
    pub attribution: String,
    pub kind: AttributionKind,
    /// `None` for event attributions.
    pub subject: Option<Subject>,
    pub scope: ViewpointScope,
    pub template: QuestionTemplate,
    /// An index covering the attribution was available at planning time.
    pub index_prunable: bool,
}

impl SubjectiveCheck {
    /// Entity constant named by the atom, if any.
    pub fn constant(&self) -> Option<&str> {
        match &self.subject {
            Some(Subject::Entity(e)) => Some(e),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Check {
    Objective(ObjectiveCheck),
    Subjective(SubjectiveCheck),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlannedAtom {
    pub id: usize,
    /// Source text of the atom.
    pub text: String,
    pub check: Check,
    /// Static cost estimate; subjective atoms are re-ranked per event by document count.
    pub cost: u32,
}

impl PlannedAtom {
    pub fn is_subjective(&self) -> bool {
        matches!(self.check, Check::Subjective(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlanExpr {
    And(Vec<PlanExpr>),
    Or(Vec<PlanExpr>),
    Not(Box<PlanExpr>),
    Atom(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CandidateSource {
    Event(String),
    Type { ty: String, include_subtypes: bool },
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryPlan {
    pub text: String,
    pub source: CandidateSource,
    pub binds: Vec<String>,
    pub atoms: Vec<PlannedAtom>,
    pub refinement: PlanExpr,
    /// Objective atom ids, cheapest first.
    pub objective_order: Vec<usize>,
    /// Subjective atom ids, by static cost.
    pub subjective_order: Vec<usize>,
}

impl QueryPlan {
    pub fn objective_count(&self) -> usize {
        self.objective_order.len()
    }

    pub fn subjective_count(&self) -> usize {
        self.subjective_order.len()
    }

    pub fn subjective(&self, id: usize) -> Option<&SubjectiveCheck> {
        match &self.atoms[id].check {
            Check::Subjective(s) => Some(s),
            Check::Objective(_) => None,
        }
    }
}

struct Planner<'a> {
    kg: &'a KnowledgeGraph,
    config: &'a Config,
    index: Option<&'a AttributionIndexSet>,
    binds: &'a [String],
    atoms: Vec<PlannedAtom>,
    problems: Vec<String>,
}

pub fn plan(
    ast: &PrototypeAst,
    kg: &KnowledgeGraph,
    config: &Config,
    index: Option<&AttributionIndexSet>,
) -> Result<QueryPlan, PlanError> {
    let mut p = Planner { kg, config, index, binds: &ast.binds, atoms: Vec::new(), problems: Vec::new() };
    let source = match &ast.pattern {
        EventPattern::ByEvent(label) => {
            if kg.event(label).is_err() {
                p.problems.push(format!("unknown event `{label}`"));
            }
            CandidateSource::Event(label.clone())
        }
        EventPattern::ByType(ty) | EventPattern::BySupertype(ty) => {
            if !kg.taxonomy().contains(ty) {
                p.problems.push(format!("unknown event type `{ty}`"));
            }
            CandidateSource::Type {
                ty: ty.clone(),
                include_subtypes: matches!(ast.pattern, EventPattern::BySupertype(_)),
            }
        }
    };
    let refinement = p.expr(&ast.refinement);
    if !p.problems.is_empty() {
        return Err(PlanError { problems: p.problems });
    }
    let mut objective_order: Vec<usize> = p.atoms.iter().filter(|a| !a.is_subjective()).map(|a| a.id).collect();
    objective_order.sort_by_key(|&id| (p.atoms[id].cost, id));
    let mut subjective_order: Vec<usize> = p.atoms.iter().filter(|a| a.is_subjective()).map(|a| a.id).collect();
    subjective_order.sort_by_key(|&id| (p.atoms[id].cost, id));
    Ok(QueryPlan {
        text: crate::dsl::render(ast),
        source,
        binds: ast.binds.clone(),
        atoms: p.atoms,
        refinement,
        objective_order,
        subjective_order,
    })
}

fn flatten<'e>(e: &'e Expr, and: bool, out: &mut Vec<&'e Expr>) {
    let mut stack = vec![e];
    while let Some(e) = stack.pop() {
        match e {
            Expr::And(l, r) if and => {
                stack.push(r);
                stack.push(l);
            }
            Expr::Or(l, r) if !and => {
                stack.push(r);
                stack.push(l);
            }
            other => out.push(other),
        }
    }
}

impl Planner<'_> {
    fn expr(&mut self, e: &Expr) -> PlanExpr {
        match e {
            Expr::And(..) | Expr::Or(..) => {
                let and = matches!(e, Expr::And(..));
                let mut parts = Vec::new();
                flatten(e, and, &mut parts);
                let children = parts.into_iter().map(|c| self.expr(c)).collect();
                if and {
                    PlanExpr::And(children)
                } else {
                    PlanExpr::Or(children)
                }
            }
            Expr::Not(x) => PlanExpr::Not(Box::new(self.expr(x))),
            Expr::Atom(a) => {
                let id = self.atoms.len();
                let (check, cost) = self.atom(a);
                self.atoms.push(PlannedAtom { id, text: a.to_string(), check, cost });
                PlanExpr::Atom(id)
            }
        }
    }

    fn subject(&mut self, t: &Term) -> Subject {
        match t {
            Term::Var(v) => Subject::Var(self.binds.iter().position(|b| b == v).unwrap_or(0)),
            Term::Wildcard => Subject::Any,
            Term::Entity(name) => match self.kg.resolve_entity(name) {
                Some(e) => Subject::Entity(e.id().to_owned()),
                None => {
                    self.problems.push(format!("unknown entity `{name}`"));
                    Subject::Entity(name.clone())
                }
            },
        }
    }

    fn atom(&mut self, a: &RefinementAtom) -> (Check, u32) {
        let (check, cost) = match a {
            RefinementAtom::ExistsParticipant(inner) => return self.atom(inner),
            RefinementAtom::Attribution { name, args, viewpoints } => {
                self.attribution(name, args, viewpoints.as_deref())
            }
            RefinementAtom::RoleBinding { subject, op, role } => {
                if !self.kg.taxonomy().has_role(role) {
                    self.problems.push(format!("unknown role `{role}`"));
                }
                if !matches!(op, Comparator::Eq | Comparator::Ne) {
                    self.problems.push(format!("role comparison `{}` must be = or !=", op.symbol()));
                }
                let subject = self.subject(subject);
                (
                    Check::Objective(ObjectiveCheck::Role {
                        subject,
                        negated: *op == Comparator::Ne,
                        role: role.clone(),
                    }),
                    1,
                )
            }
            RefinementAtom::AttributeTest { target: AttributeTarget::Entity { attribute, subject }, op, value } => {
                let subject = self.subject(subject);
                if attribute == "name" {
                    let value = match value {
                        Literal::Str(s) | Literal::Ident(s) => s.clone(),
                        other => {
                            self.problems.push(format!("name(..) compares with a string, not `{other}`"));
                            String::new()
                        }
                    };
                    (Check::Objective(ObjectiveCheck::EntityName { subject, op: *op, value }), 1)
                } else {
                    if !self.kg.entities().any(|e| e.attributes().iter().any(|x| &x.name == attribute)) {
                        self.problems.push(format!("unknown entity attribute `{attribute}`"));
                    }
                    let value = match value {
                        Literal::Str(s) | Literal::Ident(s) => AttrValue::Text(s.clone()),
                        Literal::Int(i) => AttrValue::Int(*i),
                        Literal::Bool(b) => AttrValue::Bool(*b),
                    };
                    let check =
                        ObjectiveCheck::EntityAttribute { subject, attribute: attribute.clone(), op: *op, value };
                    (Check::Objective(check), 2)
                }
            }
            RefinementAtom::AttributeTest { target: AttributeTarget::Event(function), op, value } => {
                let value = self.event_value(*function, *op, value);
                (Check::Objective(ObjectiveCheck::Event { function: *function, op: *op, value }), 0)
            }
        };
        let any = a.terms().iter().any(|t| matches!(t, Term::Wildcard));
        (check, cost + u32::from(any))
    }

    fn event_value(&mut self, f: EventFunction, op: Comparator, value: &Literal) -> EventValue {
        let equality = matches!(op, Comparator::Eq | Comparator::Ne);
        let mut bad = |msg: String| {
            self.problems.push(msg);
            EventValue::Count(0)
        };
        match (f, value) {
            (EventFunction::ParticipantCount, Literal::Int(i)) => EventValue::Count(*i),
            (EventFunction::StartDate | EventFunction::EndDate, Literal::Int(y)) => match i32::try_from(*y) {
                Ok(y) => EventValue::Year(y),
                Err(_) => bad(format!("year {y} out of range")),
            },
            (EventFunction::StartDate | EventFunction::EndDate, Literal::Str(s)) => match s.parse::<NaiveDate>() {
                Ok(d) => EventValue::Date(d),
                Err(_) => bad(format!("`{s}` is not a YYYY-MM-DD date")),
            },
            (EventFunction::EventType, Literal::Str(s) | Literal::Ident(s)) if equality => {
                if !self.kg.taxonomy().contains(s) {
                    self.problems.push(format!("unknown event type `{s}`"));
                }
                EventValue::Name(s.clone())
            }
            (EventFunction::Location, Literal::Str(s) | Literal::Ident(s)) if equality => {
                if !self.kg.has_location(s) {
                    self.problems.push(format!("unknown location `{s}`"));
                }
                EventValue::Name(s.clone())
            }
            (f, v) => bad(format!("{}() cannot be compared with `{} {v}`", f.name(), op.symbol())),
        }
    }

    fn attribution(&mut self, name: &str, args: &[Term], viewpoints: Option<&[String]>) -> (Check, u32) {
        let Some(sig) = self.kg.attribution(name).cloned() else {
            self.problems.push(format!("unknown attribution `{name}`"));
            for t in args {
                self.subject(t);
            }
            return (
                Check::Objective(ObjectiveCheck::Attribution {
                    name: name.into(),
                    kind: AttributionKind::Event,
                    subject: None,
                }),
                3,
            );
        };
        let want = if sig.kind == AttributionKind::Event { 0 } else { 1 };
        if args.len() != want {
            self.problems.push(format!("`{name}` takes {want} argument(s), got {}", args.len()));
        }
        let subject = args.first().map(|t| self.subject(t)).filter(|_| want == 1);
        if !sig.is_subjective() {
            if viewpoints.is_some() {
                self.problems.push(format!("`{name}` is objective and cannot take FROM"));
            }
            return (Check::Objective(ObjectiveCheck::Attribution { name: name.into(), kind: sig.kind, subject }), 3);
        }
        let scope = match viewpoints {
            Some(vs) => {
                for v in vs {
                    if !self.kg.has_viewpoint(v) {
                        self.problems.push(format!("unknown viewpoint `{v}`"));
                    }
                }
                let mut vs = vs.to_vec();
                vs.sort();
                vs.dedup();
                ViewpointScope::EachOf(vs)
            }
            None => ViewpointScope::AnyOf(self.kg.viewpoints().map(|v| v.id.clone()).collect()),
        };
        let cost = 1000 + scope.viewpoints().len() as u32;
        let check = SubjectiveCheck {
            attribution: name.into(),
            kind: sig.kind,
            subject,
            scope,
            template: self.config.template(name),
            index_prunable: self.index.is_some_and(|i| i.covers(name)),
        };
        (Check::Subjective(check), cost)
    }
}
