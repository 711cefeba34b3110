//! Lexer and untyped parser for the formula surface syntax.
//!
//! The same grammar serves classical formulas, script right-hand sides and,
//! with temporal keywords enabled, CTL* formulas. Sorts are assigned later
//! by the elaborator.

use std::fmt;

use crate::json::JsonType;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormulaError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { message: String, pos: Pos },
    #[error("sort error at {pos}: {message}")]
    Sort { message: String, pos: Pos },
    #[error("unknown symbol `{name}` at {pos}")]
    Unknown { name: String, pos: Pos },
}

impl FormulaError {
    pub fn pos(&self) -> Pos {
        match self {
            FormulaError::Syntax { pos, .. }
            | FormulaError::Sort { pos, .. }
            | FormulaError::Unknown { pos, .. } => *pos,
        }
    }
}

pub(crate) fn syntax(message: impl Into<String>, pos: Pos) -> FormulaError {
    FormulaError::Syntax { message: message.into(), pos }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Int(i64),
    Str(String),
    Word(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    Colon,
    Semi,
    Plus,
    Minus,
    Star,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Not,
    And,
    Or,
    Implies,
    Iff,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Int(i) => return write!(f, "{i}"),
            Tok::Str(s) => return write!(f, "{s:?}"),
            Tok::Word(w) => return write!(f, "`{w}`"),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrack => "[",
            Tok::RBrack => "]",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Colon => ":",
            Tok::Semi => ";",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Eq => "=",
            Tok::Ne => "<>",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Not => "~",
            Tok::And => "&&",
            Tok::Or => "||",
            Tok::Implies => "=>",
            Tok::Iff => "<=>",
            Tok::Eof => "end of input",
        };
        write!(f, "`{s}`")
    }
}

pub fn tokenize(text: &str) -> Result<Vec<(Tok, Pos)>, FormulaError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let sym = [
            ("<=>", Tok::Iff),
            ("=>", Tok::Implies),
            ("==", Tok::Eq),
            ("<>", Tok::Ne),
            ("!=", Tok::Ne),
            ("<=", Tok::Le),
            (">=", Tok::Ge),
            ("&&", Tok::And),
            ("||", Tok::Or),
            ("<", Tok::Lt),
            (">", Tok::Gt),
            ("=", Tok::Eq),
            ("~", Tok::Not),
            ("!", Tok::Not),
            ("(", Tok::LParen),
            (")", Tok::RParen),
            ("[", Tok::LBrack),
            ("]", Tok::RBrack),
            (",", Tok::Comma),
            (".", Tok::Dot),
            (":", Tok::Colon),
            (";", Tok::Semi),
            ("+", Tok::Plus),
            ("-", Tok::Minus),
            ("*", Tok::Star),
        ]
        .into_iter()
        .find(|(s, _)| rest.starts_with(s));
        if let Some((s, tok)) = sym {
            out.push((tok, pos));
            advance(&mut i, &mut line, &mut col, s.chars().count());
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            col += i - start;
            let n = digits
                .parse::<i64>()
                .map_err(|_| syntax(format!("integer literal {digits} out of range"), pos))?;
            out.push((Tok::Int(n), pos));
        } else if c == '"' {
            let start = i;
            let mut j = i + 1;
            while j < chars.len() && chars[j] != '"' {
                j += if chars[j] == '\\' { 2 } else { 1 };
            }
            if j >= chars.len() {
                return Err(syntax("unterminated string literal", pos));
            }
            let raw: String = chars[start..=j].iter().collect();
            let s: String = serde_json::from_str(&raw)
                .map_err(|e| syntax(format!("bad string literal: {e}"), pos))?;
            out.push((Tok::Str(s), pos));
            advance(&mut i, &mut line, &mut col, j + 1 - start);
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push((Tok::Word(chars[start..i].iter().collect()), pos));
        } else {
            return Err(syntax(format!("unexpected character {c:?}"), pos));
        }
    }
    out.push((Tok::Eof, Pos { line, column: col }));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoolOp {
    And,
    Or,
    Implies,
    Iff,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TempOp {
    Until,
    Release,
    WeakUntil,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unary {
    /// Path quantifier `A`.
    All,
    /// Path quantifier `E`.
    Some,
    Next,
    WeakNext,
    Globally,
    Finally,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Int(i64),
    Str(String),
    Bool(bool),
    Null,
    List(Vec<Expr>),
    Ident(String),
    Field(Box<Expr>, String),
    Index(Box<Expr>, Box<Expr>),
    Append(Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    Neg(Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    Bool2(BoolOp, Box<Expr>, Box<Expr>),
    Quant { forall: bool, vars: Vec<(String, JsonType)>, body: Box<Expr> },
    Temporal(Unary, Box<Expr>),
    Temporal2(TempOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    fn new(kind: ExprKind, pos: Pos) -> Expr {
        Expr { kind, pos }
    }

    /// True if a temporal operator or path quantifier occurs anywhere.
    pub fn is_temporal(&self) -> bool {
        use ExprKind::*;
        match &self.kind {
            Temporal(..) | Temporal2(..) => true,
            Int(_) | Str(_) | Bool(_) | Null | Ident(_) => false,
            List(es) | Call(_, es) => es.iter().any(Expr::is_temporal),
            Field(e, _) | Neg(e) | Not(e) => e.is_temporal(),
            Quant { body, .. } => body.is_temporal(),
            Index(a, b) | Append(a, b) | Arith(_, a, b) | Cmp(_, a, b) | Bool2(_, a, b) => {
                a.is_temporal() || b.is_temporal()
            }
        }
    }
}

const TEMPORAL_WORDS: [&str; 9] = ["A", "E", "X", "WX", "U", "R", "W", "G", "F"];

/// Recursive-descent parser over a token stream.
///
/// Precedence from loosest to tightest: `<=>`, `=>` (right associative),
/// `||`, `&&`, the binary temporal operators `U`, `R`, `W` (right
/// associative), prefix operators, comparisons and `in`, `+` `-`, `*`,
/// unary minus, postfix selectors. Quantifier bodies extend as far right as
/// possible.
pub struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    temporal: bool,
}

impl Parser {
    pub fn new(text: &str, temporal: bool) -> Result<Parser, FormulaError> {
        Ok(Parser { toks: tokenize(text)?, at: 0, temporal })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    pub fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok) -> Result<Pos, FormulaError> {
        let (t, pos) = self.bump();
        if &t == tok {
            Ok(pos)
        } else {
            Err(syntax(format!("expected {tok}, found {t}"), pos))
        }
    }

    pub fn at_end(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub fn expect_end(&mut self) -> Result<(), FormulaError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(syntax(format!("unexpected {}", self.peek()), self.pos()))
        }
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Word(x) if x == w)
    }

    fn is_keyword(&self, w: &str) -> bool {
        matches!(w, "forall" | "exists" | "true" | "false" | "null" | "in")
            || (self.temporal && TEMPORAL_WORDS.contains(&w))
    }

    /// Parses a complete expression.
    pub fn expr(&mut self) -> Result<Expr, FormulaError> {
        self.iff()
    }

    fn iff(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.implies()?;
        while self.peek() == &Tok::Iff {
            let pos = self.bump().1;
            let rhs = self.implies()?;
            lhs = Expr::new(ExprKind::Bool2(BoolOp::Iff, Box::new(lhs), Box::new(rhs)), pos);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Expr, FormulaError> {
        let lhs = self.or()?;
        if self.peek() == &Tok::Implies {
            let pos = self.bump().1;
            let rhs = self.implies()?;
            return Ok(Expr::new(ExprKind::Bool2(BoolOp::Implies, Box::new(lhs), Box::new(rhs)), pos));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.and()?;
        while self.peek() == &Tok::Or {
            let pos = self.bump().1;
            let rhs = self.and()?;
            lhs = Expr::new(ExprKind::Bool2(BoolOp::Or, Box::new(lhs), Box::new(rhs)), pos);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.until()?;
        while self.peek() == &Tok::And {
            let pos = self.bump().1;
            let rhs = self.until()?;
            lhs = Expr::new(ExprKind::Bool2(BoolOp::And, Box::new(lhs), Box::new(rhs)), pos);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Expr, FormulaError> {
        let lhs = self.unary()?;
        if self.temporal {
            let op = match self.peek() {
                Tok::Word(w) if w == "U" => Some(TempOp::Until),
                Tok::Word(w) if w == "R" => Some(TempOp::Release),
                Tok::Word(w) if w == "W" => Some(TempOp::WeakUntil),
                _ => None,
            };
            if let Some(op) = op {
                let pos = self.bump().1;
                let rhs = self.until()?;
                return Ok(Expr::new(ExprKind::Temporal2(op, Box::new(lhs), Box::new(rhs)), pos));
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, FormulaError> {
        let pos = self.pos();
        if self.eat(&Tok::Not) {
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Not(Box::new(e)), pos));
        }
        if self.is_word("forall") || self.is_word("exists") {
            let forall = self.is_word("forall");
            self.bump();
            let mut vars = Vec::new();
            loop {
                let name = self.ident()?;
                self.expect(&Tok::Colon)?;
                let ty = self.type_expr()?;
                vars.push((name, ty));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::Dot)?;
            let body = self.expr()?;
            return Ok(Expr::new(ExprKind::Quant { forall, vars, body: Box::new(body) }, pos));
        }
        if self.temporal {
            let op = match self.peek() {
                Tok::Word(w) => match w.as_str() {
                    "A" => Some(Unary::All),
                    "E" => Some(Unary::Some),
                    "X" => Some(Unary::Next),
                    "WX" => Some(Unary::WeakNext),
                    "G" => Some(Unary::Globally),
                    "F" => Some(Unary::Finally),
                    _ => None,
                },
                _ => None,
            };
            if let Some(op) = op {
                self.bump();
                let e = self.unary()?;
                return Ok(Expr::new(ExprKind::Temporal(op, Box::new(e)), pos));
            }
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, FormulaError> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            Tok::Word(w) if w == "in" => CmpOp::In,
            _ => return Ok(lhs),
        };
        let pos = self.bump().1;
        let rhs = self.additive()?;
        Ok(Expr::new(ExprKind::Cmp(op, Box::new(lhs), Box::new(rhs)), pos))
    }

    /// Parses an arithmetic-level expression; script statements use this
    /// for their target path so that `=` is left for the assignment.
    pub fn additive(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            let pos = self.bump().1;
            let rhs = self.multiplicative()?;
            lhs = Expr::new(ExprKind::Arith(op, Box::new(lhs), Box::new(rhs)), pos);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.negation()?;
        while self.peek() == &Tok::Star {
            let pos = self.bump().1;
            let rhs = self.negation()?;
            lhs = Expr::new(ExprKind::Arith(ArithOp::Mul, Box::new(lhs), Box::new(rhs)), pos);
        }
        Ok(lhs)
    }

    fn negation(&mut self) -> Result<Expr, FormulaError> {
        let pos = self.pos();
        if self.eat(&Tok::Minus) {
            if let Tok::Int(n) = *self.peek() {
                self.bump();
                let e = Expr::new(ExprKind::Int(-n), pos);
                return self.postfix_from(e);
            }
            let e = self.negation()?;
            return Ok(Expr::new(ExprKind::Neg(Box::new(e)), pos));
        }
        self.postfix()
    }

    pub fn postfix(&mut self) -> Result<Expr, FormulaError> {
        let e = self.primary()?;
        self.postfix_from(e)
    }

    fn postfix_from(&mut self, mut e: Expr) -> Result<Expr, FormulaError> {
        loop {
            let pos = self.pos();
            if self.eat(&Tok::Dot) {
                let name = match self.bump() {
                    (Tok::Word(w), _) => w,
                    (t, p) => return Err(syntax(format!("expected field name, found {t}"), p)),
                };
                if name == "append" && self.peek() == &Tok::LParen {
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(&Tok::RParen)?;
                    e = Expr::new(ExprKind::Append(Box::new(e), Box::new(arg)), pos);
                } else {
                    e = Expr::new(ExprKind::Field(Box::new(e), name), pos);
                }
            } else if self.eat(&Tok::LBrack) {
                let idx = self.expr()?;
                self.expect(&Tok::RBrack)?;
                e = Expr::new(ExprKind::Index(Box::new(e), Box::new(idx)), pos);
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, FormulaError> {
        let (tok, pos) = self.bump();
        let kind = match tok {
            Tok::Int(n) => ExprKind::Int(n),
            Tok::Str(s) => ExprKind::Str(s),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                return Ok(e);
            }
            Tok::LBrack => {
                let mut items = Vec::new();
                if !self.eat(&Tok::RBrack) {
                    loop {
                        items.push(self.expr()?);
                        if self.eat(&Tok::RBrack) {
                            break;
                        }
                        self.expect(&Tok::Comma)?;
                    }
                }
                ExprKind::List(items)
            }
            Tok::Word(w) if w == "true" => ExprKind::Bool(true),
            Tok::Word(w) if w == "false" => ExprKind::Bool(false),
            Tok::Word(w) if w == "null" => ExprKind::Null,
            Tok::Word(w) if !self.is_keyword(&w) => {
                if self.eat(&Tok::LParen) {
                    let mut args = Vec::new();
                    if !self.eat(&Tok::RParen) {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(&Tok::RParen) {
                                break;
                            }
                            self.expect(&Tok::Comma)?;
                        }
                    }
                    ExprKind::Call(w, args)
                } else {
                    ExprKind::Ident(w)
                }
            }
            t => return Err(syntax(format!("unexpected {t}"), pos)),
        };
        Ok(Expr::new(kind, pos))
    }

    fn ident(&mut self) -> Result<String, FormulaError> {
        match self.bump() {
            (Tok::Word(w), _) if !self.is_keyword(&w) => Ok(w),
            (t, p) => Err(syntax(format!("expected identifier, found {t}"), p)),
        }
    }

    fn type_expr(&mut self) -> Result<JsonType, FormulaError> {
        let (tok, pos) = self.bump();
        let Tok::Word(w) = tok else {
            return Err(syntax(format!("expected a type, found {tok}"), pos));
        };
        Ok(match w.as_str() {
            "Integer" | "Int" | "Z" => JsonType::Integer,
            "Bool" | "Boolean" => JsonType::Bool,
            "String" => JsonType::String,
            "List" | "Option" => {
                self.expect(&Tok::LBrack)?;
                let inner = Box::new(self.type_expr()?);
                self.expect(&Tok::RBrack)?;
                if w == "List" {
                    JsonType::List(inner)
                } else {
                    JsonType::Option(inner)
                }
            }
            _ => JsonType::Named(w),
        })
    }
}

/// Parses a complete classical or temporal expression.
pub fn parse_expr(text: &str, temporal: bool) -> Result<Expr, FormulaError> {
    let mut p = Parser::new(text, temporal)?;
    let e = p.expr()?;
    p.expect_end()?;
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(text: &str) -> ExprKind {
        parse_expr(text, true).unwrap().kind
    }

    #[test]
    fn lexes_multi_char_operators() {
        let toks: Vec<Tok> = tokenize("a<=>b => c <= d <> e").unwrap().into_iter().map(|t| t.0).collect();
        assert_eq!(toks[1], Tok::Iff);
        assert_eq!(toks[3], Tok::Implies);
        assert_eq!(toks[5], Tok::Le);
        assert_eq!(toks[7], Tok::Ne);
    }

    #[test]
    fn quantifier_body_extends_right() {
        let ExprKind::Quant { forall, vars, body } = kind("forall s:Status . completed(s) <=> s.paid = true") else {
            panic!()
        };
        assert!(forall);
        assert_eq!(vars, vec![("s".to_string(), JsonType::Named("Status".into()))]);
        assert!(matches!(body.kind, ExprKind::Bool2(BoolOp::Iff, ..)));
    }

    #[test]
    fn implication_is_right_associative() {
        let ExprKind::Bool2(BoolOp::Implies, a, _) = kind("p => q => r") else { panic!() };
        assert_eq!(a.kind, ExprKind::Ident("p".into()));
    }

    #[test]
    fn and_binds_tighter_than_or() {
        let ExprKind::Bool2(BoolOp::Or, _, b) = kind("p || q && r") else { panic!() };
        assert!(matches!(b.kind, ExprKind::Bool2(BoolOp::And, ..)));
    }

    #[test]
    fn postfix_chain() {
        let ExprKind::Field(inner, f) = kind("db.stock[0].available") else { panic!() };
        assert_eq!(f, "available");
        assert!(matches!(inner.kind, ExprKind::Index(..)));
    }

    #[test]
    fn temporal_keywords_only_in_temporal_mode() {
        assert!(matches!(kind("E F x = 1"), ExprKind::Temporal(Unary::Some, _)));
        let classical = parse_expr("F", false).unwrap();
        assert_eq!(classical.kind, ExprKind::Ident("F".into()));
        // Field names may coincide with keywords.
        assert!(matches!(kind("db.F = 1"), ExprKind::Cmp(CmpOp::Eq, ..)));
    }

    #[test]
    fn weak_until_binds_tighter_than_implication() {
        let ExprKind::Bool2(BoolOp::Implies, _, rhs) = kind("g = false => s = false W p = true") else { panic!() };
        assert!(matches!(rhs.kind, ExprKind::Temporal2(TempOp::WeakUntil, ..)));
    }

    #[test]
    fn negative_literals_and_positions() {
        assert_eq!(kind("-3"), ExprKind::Int(-3));
        let err = parse_expr("x +\n  )", false).unwrap_err();
        assert_eq!(err.pos(), Pos { line: 2, column: 3 });
    }

    #[test]
    fn append_and_lists() {
        assert!(matches!(kind("db.order.append(3)"), ExprKind::Append(..)));
        assert!(matches!(kind("[1, 2]"), ExprKind::List(v) if v.len() == 2));
        assert!(parse_expr("[1,", false).is_err());
    }
}
