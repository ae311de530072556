use super::ast::{BindTargets, Diagnostic, DiagnosticKind, GraphDecl, Item, NodeDecl, Pos, RelationDecl, RuleDocument};
use super::lexer::{tokenize, Tok, Token};
use crate::engine::{
    Action, Call, Category, CondStep, Direction, Event, EventPattern, EvolutionRule, Expr, Mode, Param,
    PropagationStrategy, RelationOptions, Value,
};
use crate::id::{ClassId, ClassKind};
use crate::schema::{Cardinality, Member, MemberKind, Nature, RelationDescriptor, Side};

/// Nesting limit for expressions and action blocks.
const MAX_NESTING: usize = 64;

type PResult<T> = Result<T, Diagnostic>;

/// Parses a whole document. Only syntax is checked here; names are
/// resolved separately.
pub fn parse_document(src: &str) -> Result<RuleDocument, Vec<Diagnostic>> {
    let tokens = tokenize(src).map_err(|d| vec![d])?;
    let mut p = Parser { toks: tokens, i: 0, nesting: 0 };
    p.document().map_err(|d| vec![d])
}

/// Parses an event expression such as `delete-node(C2)` or
/// `modify-node(C1, efferent, RC1)`.
pub fn parse_event(src: &str) -> Result<Event, Diagnostic> {
    let tokens = tokenize(src)?;
    let mut p = Parser { toks: tokens, i: 0, nesting: 0 };
    let (name, _) = p.ident()?;
    p.expect("(")?;
    let mut args = Vec::new();
    if !p.eat(")") {
        loop {
            args.push(p.literal()?);
            if p.eat(")") {
                break;
            }
            p.expect(",")?;
        }
    }
    p.expect_eof()?;
    let pos = p.toks[0].pos;
    let mut args = args.into_iter();
    let target = match args.next() {
        Some(Value::Class(c)) => c,
        _ => return Err(Diagnostic::new(pos, DiagnosticKind::SyntaxError, "an event needs a target class as its first argument")),
    };
    Ok(Event { name, target, args: args.collect() })
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    nesting: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.i + n).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i < self.toks.len() - 1 {
            self.i += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::new(self.pos(), DiagnosticKind::SyntaxError, msg))
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.error(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> PResult<()> {
        if self.eat(s) {
            Ok(())
        } else {
            self.unexpected(&format!("`{s}`"))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Eof => Ok(()),
            _ => self.unexpected("end of input"),
        }
    }

    fn ident(&mut self) -> PResult<(String, Pos)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let pos = self.pos();
                self.bump();
                Ok((s, pos))
            }
            _ => self.unexpected("a name"),
        }
    }

    /// A name that may not carry a version suffix.
    fn plain_name(&mut self, what: &str) -> PResult<String> {
        let pos = self.pos();
        let (s, _) = self.ident()?;
        if s.contains('@') {
            return Err(Diagnostic::new(pos, DiagnosticKind::SyntaxError, format!("{what} names cannot carry a version")));
        }
        Ok(s)
    }

    fn class_id(&mut self) -> PResult<ClassId> {
        let (s, pos) = self.ident()?;
        s.parse().map_err(|_| Diagnostic::new(pos, DiagnosticKind::SyntaxError, format!("invalid class name `{s}`")))
    }

    fn kind(&mut self) -> PResult<ClassKind> {
        match self.peek() {
            Tok::Ident(s) => match ClassKind::parse(s) {
                Some(k) => {
                    self.bump();
                    Ok(k)
                }
                None => self.unexpected("`graph`, `node` or `relation`"),
            },
            _ => self.unexpected("`graph`, `node` or `relation`"),
        }
    }

    fn text(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) | Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("a name or string"),
        }
    }

    fn list<T>(&mut self, mut item: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        self.expect("[")?;
        let mut out = Vec::new();
        if self.eat("]") {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.eat("]") {
                return Ok(out);
            }
            self.expect(",")?;
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            return self.error(format!("nesting deeper than {MAX_NESTING}"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.nesting -= 1;
    }

    // ---- items -------------------------------------------------------------

    fn document(&mut self) -> PResult<RuleDocument> {
        let mut doc = RuleDocument::default();
        loop {
            let pos = self.pos();
            let item = match self.peek().clone() {
                Tok::Eof => return Ok(doc),
                Tok::Ident(kw) => match kw.as_str() {
                    "event" => self.event_decl()?,
                    "node" => self.node_decl()?,
                    "relation" => self.relation_decl()?,
                    "graph" => self.graph_decl()?,
                    "rule" => self.rule_def()?,
                    "strategy" => self.strategy_def()?,
                    "bind" => self.bind_stmt()?,
                    "lineage" => self.lineage_stmt()?,
                    _ => return self.unexpected("a declaration"),
                },
                _ => return self.unexpected("a declaration"),
            };
            doc.items.push(item);
            doc.positions.push(pos);
        }
    }

    fn event_decl(&mut self) -> PResult<Item> {
        self.expect_kw("event")?;
        let name = self.plain_name("event")?;
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.eat(")") {
            loop {
                params.push(self.plain_name("parameter")?);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        self.expect(";")?;
        Ok(Item::Event { name, params })
    }

    fn members_block(&mut self) -> PResult<Vec<Member>> {
        let mut members = Vec::new();
        if self.eat(";") {
            return Ok(members);
        }
        self.expect("{")?;
        while !self.eat("}") {
            members.push(self.member()?);
        }
        Ok(members)
    }

    fn member(&mut self) -> PResult<Member> {
        let member_kind = if self.eat_kw("attribute") {
            MemberKind::Attribute
        } else if self.eat_kw("method") {
            MemberKind::Method
        } else {
            return self.unexpected("`attribute`, `method` or `}`");
        };
        let name = self.text()?;
        let signature = if self.eat(":") {
            match self.bump().tok {
                Tok::Str(s) => s,
                _ => return self.error("expected a signature string"),
            }
        } else {
            String::new()
        };
        self.expect(";")?;
        Ok(Member { member_kind, name, signature })
    }

    fn node_decl(&mut self) -> PResult<Item> {
        self.expect_kw("node")?;
        let id = self.class_id()?;
        let versionable = !self.eat_kw("unversionable");
        let members = self.members_block()?;
        Ok(Item::Node(NodeDecl { id, versionable, members }))
    }

    fn cardinality(&mut self) -> PResult<Cardinality> {
        match self.peek().clone() {
            Tok::Int(n) if (0..=u32::MAX as i64).contains(&n) => {
                self.bump();
                Ok(Cardinality::Count(n as u32))
            }
            Tok::Ident(s) if s == "n" => {
                self.bump();
                Ok(Cardinality::Many)
            }
            _ => self.unexpected("a cardinality (integer or `n`)"),
        }
    }

    fn relation_decl(&mut self) -> PResult<Item> {
        self.expect_kw("relation")?;
        let id = self.class_id()?;
        self.expect(":")?;
        let nature = Nature::parse(&self.text()?);
        self.expect("(")?;
        let source = self.class_id()?;
        self.expect("->")?;
        let destination = self.class_id()?;
        self.expect(")")?;
        let mut d = RelationDescriptor { nature, exclusive: false, ..RelationDescriptor::default() };
        loop {
            if self.eat_kw("exclusive") {
                d.exclusive = true;
            } else if self.eat_kw("dependent") {
                d.dependent = true;
            } else if self.eat_kw("predominant") {
                d.predominant = true;
            } else if self.eat_kw("card") {
                self.expect("=")?;
                d.card = self.cardinality()?;
            } else if self.eat_kw("reverse-card") {
                self.expect("=")?;
                d.reverse_card = self.cardinality()?;
            } else {
                break;
            }
        }
        d.members = self.members_block()?;
        Ok(Item::Relation(RelationDecl { id, source, destination, descriptor: d }))
    }

    fn graph_decl(&mut self) -> PResult<Item> {
        self.expect_kw("graph")?;
        let id = self.class_id()?;
        let mut g = GraphDecl { id, nodes: Vec::new(), relations: Vec::new(), members: Vec::new() };
        self.expect("{")?;
        while !self.eat("}") {
            if self.eat_kw("nodes") {
                self.expect("=")?;
                g.nodes.extend(self.list(Self::class_id)?);
                self.expect(";")?;
            } else if self.eat_kw("relations") {
                self.expect("=")?;
                g.relations.extend(self.list(Self::class_id)?);
                self.expect(";")?;
            } else {
                g.members.push(self.member()?);
            }
        }
        Ok(Item::Graph(g))
    }

    fn rule_def(&mut self) -> PResult<Item> {
        self.expect_kw("rule")?;
        let id = self.plain_name("rule")?;
        self.expect(":")?;
        let applies_to = self.kind()?;
        let mut opts = RelationOptions::default();
        loop {
            let pos = self.pos();
            if self.eat_kw("direction") {
                self.expect("=")?;
                let (s, p) = self.ident()?;
                opts.direction = Direction::parse(&s)
                    .ok_or_else(|| Diagnostic::new(p, DiagnosticKind::SyntaxError, format!("unknown direction `{s}`")))?;
            } else if self.eat_kw("mode") {
                self.expect("=")?;
                let (s, p) = self.ident()?;
                opts.mode = Mode::parse(&s)
                    .ok_or_else(|| Diagnostic::new(p, DiagnosticKind::SyntaxError, format!("unknown mode `{s}`")))?;
            } else {
                break;
            }
            if applies_to != ClassKind::Relation {
                return Err(Diagnostic::new(pos, DiagnosticKind::SyntaxError, "direction and mode apply to relation rules only"));
            }
        }
        let relation = (applies_to == ClassKind::Relation).then_some(opts);

        self.expect("{")?;
        self.expect_kw("on")?;
        let name = self.plain_name("event")?;
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.eat(")") {
            loop {
                let pname = self.plain_name("parameter")?;
                let kind = if self.eat(":") { Some(self.kind()?) } else { None };
                params.push(Param { name: pname, kind });
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        let mut condition = Vec::new();
        loop {
            if self.eat_kw("when") {
                condition.push(CondStep::When(self.expr()?));
            } else if self.eat_kw("let") {
                let var = self.plain_name("variable")?;
                self.expect("=")?;
                condition.push(CondStep::Let(var, self.expr()?));
            } else {
                break;
            }
        }
        self.expect_kw("do")?;
        let actions = self.block()?;
        self.expect("}")?;
        Ok(Item::Rule(EvolutionRule {
            id,
            applies_to,
            relation,
            pattern: EventPattern { name, params },
            condition,
            actions,
        }))
    }

    fn block(&mut self) -> PResult<Vec<Action>> {
        self.enter()?;
        self.expect("{")?;
        let mut actions = Vec::new();
        while !self.eat("}") {
            actions.push(self.action()?);
        }
        self.leave();
        Ok(actions)
    }

    fn call(&mut self) -> PResult<Call> {
        let name = self.plain_name("event or primitive")?;
        self.expect("(")?;
        let mut args = Vec::new();
        if !self.eat(")") {
            loop {
                args.push(self.expr()?);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        Ok(Call { name, args })
    }

    fn action(&mut self) -> PResult<Action> {
        if self.eat_kw("raise") {
            let call = self.call()?;
            self.expect(";")?;
            Ok(Action::Raise(call))
        } else if self.eat_kw("exec") {
            let call = self.call()?;
            self.expect(";")?;
            Ok(Action::Exec(call))
        } else if self.eat_kw("for") {
            let var = self.plain_name("variable")?;
            self.expect_kw("in")?;
            let iter = self.expr()?;
            let body = self.block()?;
            Ok(Action::For { var, iter, body })
        } else if self.eat_kw("if") {
            let cond = self.expr()?;
            let then = self.block()?;
            let otherwise = if self.eat_kw("else") { self.block()? } else { Vec::new() };
            Ok(Action::If { cond, then, otherwise })
        } else {
            self.unexpected("`raise`, `exec`, `for`, `if` or `}`")
        }
    }

    fn strategy_def(&mut self) -> PResult<Item> {
        self.expect_kw("strategy")?;
        let id = self.plain_name("strategy")?;
        self.expect(":")?;
        let kind = self.kind()?;
        let mut s = PropagationStrategy::new(id, kind);
        let mut seen = Vec::new();
        self.expect("{")?;
        while !self.eat("}") {
            let pos = self.pos();
            let (word, _) = self.ident()?;
            let Some(category) = Category::parse(&word) else {
                return Err(Diagnostic::new(pos, DiagnosticKind::SyntaxError, format!("expected `creation`, `destruction` or `modification`, found `{word}`")));
            };
            if seen.contains(&category) {
                return Err(Diagnostic::new(pos, DiagnosticKind::SyntaxError, format!("{category} rules listed twice")));
            }
            seen.push(category);
            self.expect_kw("rules")?;
            self.expect("=")?;
            *s.rules_mut(category) = self.list(|p| p.plain_name("rule"))?;
            self.expect(";")?;
        }
        Ok(Item::Strategy(s))
    }

    fn bind_stmt(&mut self) -> PResult<Item> {
        self.expect_kw("bind")?;
        let strategy = self.plain_name("strategy")?;
        self.expect_kw("to")?;
        let kind_follows = matches!(self.peek_at(1), Tok::Ident(k) if ClassKind::parse(k).is_some());
        let targets = if self.is_kw("kind") && kind_follows {
            self.bump();
            BindTargets::Kind(self.kind()?)
        } else {
            let mut ids = vec![self.class_id()?];
            while self.eat(",") {
                ids.push(self.class_id()?);
            }
            BindTargets::Classes(ids)
        };
        self.expect(";")?;
        Ok(Item::Bind { strategy, targets })
    }

    fn lineage_stmt(&mut self) -> PResult<Item> {
        self.expect_kw("lineage")?;
        let parent = self.class_id()?;
        self.expect("->")?;
        let child = self.class_id()?;
        self.expect(";")?;
        Ok(Item::Lineage { parent, child })
    }

    // ---- expressions -------------------------------------------------------

    fn expr(&mut self) -> PResult<Expr> {
        self.enter()?;
        let e = self.or_expr();
        self.leave();
        e
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut e = self.and_expr()?;
        while self.eat_kw("or") {
            e = Expr::Or(Box::new(e), Box::new(self.and_expr()?));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut e = self.not_expr()?;
        while self.eat_kw("and") {
            e = Expr::And(Box::new(e), Box::new(self.not_expr()?));
        }
        Ok(e)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_kw("not") {
            self.enter()?;
            let inner = self.not_expr();
            self.leave();
            return Ok(Expr::Not(Box::new(inner?)));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let left = self.postfix()?;
        if self.eat("==") {
            Ok(Expr::Eq(Box::new(left), Box::new(self.postfix()?)))
        } else if self.eat("!=") {
            Ok(Expr::Ne(Box::new(left), Box::new(self.postfix()?)))
        } else {
            Ok(left)
        }
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.eat(".") {
            let field = self.plain_name("field")?;
            e = Expr::Field(Box::new(e), field);
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Sym("[") => Ok(Expr::List(self.list(Self::expr)?)),
            Tok::Ident(name) => {
                if matches!(self.peek_at(1), Tok::Sym("(")) {
                    let call = self.call()?;
                    return Ok(Expr::Call(call.name, call.args));
                }
                if is_reserved(&name) {
                    return self.unexpected("an expression");
                }
                self.bump();
                Ok(match name.as_str() {
                    "true" => Expr::Bool(true),
                    "false" => Expr::Bool(false),
                    _ => match Side::parse(&name) {
                        Some(side) => Expr::Side(side),
                        None if name.contains('@') => {
                            return Err(Diagnostic::new(self.toks[self.i - 1].pos, DiagnosticKind::SyntaxError, "variables cannot carry a version"));
                        }
                        None => Expr::Var(name),
                    },
                })
            }
            _ => self.unexpected("an expression"),
        }
    }

    /// A literal event argument.
    fn literal(&mut self) -> PResult<Value> {
        let pos = self.pos();
        match self.bump().tok {
            Tok::Int(n) => Ok(Value::Int(n)),
            Tok::Str(s) => Ok(Value::Str(s)),
            Tok::Ident(s) => Ok(match s.as_str() {
                "true" => Value::Bool(true),
                "false" => Value::Bool(false),
                _ => match Side::parse(&s) {
                    Some(side) => Value::Side(side),
                    None => Value::Class(s.parse().map_err(|_| {
                        Diagnostic::new(pos, DiagnosticKind::SyntaxError, format!("invalid class name `{s}`"))
                    })?),
                },
            }),
            other => Err(Diagnostic::new(pos, DiagnosticKind::SyntaxError, format!("expected an argument, found {}", other.describe()))),
        }
    }
}

/// Words that cannot be used as variables.
pub fn is_reserved(word: &str) -> bool {
    matches!(word, "and" | "or" | "not" | "when" | "let" | "do" | "on" | "in" | "raise" | "exec" | "for" | "if" | "else")
}
