use super::ast::{BinOp, Builtin, Expr, ExprKind, Span, UnOp};
use super::lexer::{lex, Tok};
use super::ExprDiagnostic;

/// Parse a complete program.
pub fn parse(src: &str) -> Result<Expr, ExprDiagnostic> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    match p.peek() {
        Tok::Eof => Ok(e),
        other => Err(p.error(format!("unexpected {} after expression", other.describe()))),
    }
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

type Parsed = Result<Expr, ExprDiagnostic>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: String) -> ExprDiagnostic {
        ExprDiagnostic::new(self.span(), "syntax-error", message)
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<Span, ExprDiagnostic> {
        if self.peek() == want {
            Ok(self.bump().1)
        } else {
            Err(self.error(format!("expected {what}, found {}", self.peek().describe())))
        }
    }

    fn expect_sym(&mut self, sym: &'static str) -> Result<Span, ExprDiagnostic> {
        self.expect(&Tok::Sym(sym), &format!("`{sym}`"))
    }

    fn expr(&mut self) -> Parsed {
        let span = self.span();
        match self.peek() {
            Tok::Let => {
                self.bump();
                let name = match self.bump() {
                    (Tok::Ident(n), _) => n,
                    (t, s) => {
                        return Err(ExprDiagnostic::new(
                            s,
                            "syntax-error",
                            format!("expected a variable name after `let`, found {}", t.describe()),
                        ))
                    }
                };
                self.expect_sym("=")?;
                let value = self.expr()?;
                self.expect(&Tok::In, "`in`")?;
                let body = self.expr()?;
                Ok(Expr::new(
                    ExprKind::Let(name, Box::new(value), Box::new(body)),
                    span,
                ))
            }
            Tok::If => {
                self.bump();
                let c = self.expr()?;
                self.expect(&Tok::Then, "`then`")?;
                let a = self.expr()?;
                self.expect(&Tok::Else, "`else`")?;
                let b = self.expr()?;
                Ok(Expr::new(
                    ExprKind::If(Box::new(c), Box::new(a), Box::new(b)),
                    span,
                ))
            }
            _ => self.binary(1),
        }
    }

    fn binop(&self) -> Option<BinOp> {
        let Tok::Sym(s) = self.peek() else { return None };
        Some(match *s {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Rem,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Parsed {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let span = self.bump().1;
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
            if op.is_comparison() {
                if let Some(next) = self.binop().filter(|o| o.is_comparison()) {
                    return Err(self.error(format!(
                        "comparison operators do not chain; parenthesize before `{}`",
                        next.symbol()
                    )));
                }
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Parsed {
        let span = self.span();
        let op = match self.peek() {
            Tok::Sym("-") => UnOp::Neg,
            Tok::Sym("!") => UnOp::Not,
            _ => return self.postfix(),
        };
        self.bump();
        let e = self.unary()?;
        Ok(Expr::new(ExprKind::Unary(op, Box::new(e)), span))
    }

    fn postfix(&mut self) -> Parsed {
        let mut e = self.primary()?;
        while self.peek() == &Tok::Sym(".") {
            let span = self.bump().1;
            let name = match self.peek().clone() {
                Tok::Ident(n) | Tok::Str(n) => n,
                Tok::Let | Tok::In | Tok::If | Tok::Then | Tok::Else | Tok::True | Tok::False
                | Tok::Msg => format!("{:?}", self.peek()).to_lowercase(),
                other => {
                    return Err(self.error(format!(
                        "expected field name after `.`, found {}",
                        other.describe()
                    )))
                }
            };
            self.bump();
            e = Expr::new(ExprKind::Field(Box::new(e), name), span);
        }
        Ok(e)
    }

    fn primary(&mut self) -> Parsed {
        let (tok, span) = self.bump();
        let kind = match tok {
            Tok::Int(i) => ExprKind::Int(i),
            Tok::Num(n) => ExprKind::Num(n),
            Tok::Str(s) => ExprKind::Str(s),
            Tok::True => ExprKind::Bool(true),
            Tok::False => ExprKind::Bool(false),
            Tok::Msg => ExprKind::Msg,
            Tok::Ident(name) => {
                if self.peek() != &Tok::Sym("(") {
                    ExprKind::Var(name)
                } else {
                    let f = Builtin::from_name(&name).ok_or_else(|| {
                        ExprDiagnostic::new(span, "unknown-function", format!("unknown function `{name}`"))
                    })?;
                    self.bump();
                    let args = self.list(")")?;
                    ExprKind::Call(f, args)
                }
            }
            Tok::Sym("(") => {
                let e = self.expr()?;
                self.expect_sym(")")?;
                return Ok(e);
            }
            Tok::Sym("[") => ExprKind::Array(self.list("]")?),
            Tok::Sym("{") => {
                let mut fields = Vec::new();
                if self.peek() != &Tok::Sym("}") {
                    loop {
                        let key = match self.bump() {
                            (Tok::Ident(k) | Tok::Str(k), _) => k,
                            (t, s) => {
                                return Err(ExprDiagnostic::new(
                                    s,
                                    "syntax-error",
                                    format!("expected a field name, found {}", t.describe()),
                                ))
                            }
                        };
                        self.expect_sym(":")?;
                        fields.push((key, self.expr()?));
                        if self.peek() == &Tok::Sym(",") {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect_sym("}")?;
                ExprKind::Object(fields)
            }
            other => {
                return Err(ExprDiagnostic::new(
                    span,
                    "syntax-error",
                    format!("expected an expression, found {}", other.describe()),
                ))
            }
        };
        Ok(Expr::new(kind, span))
    }

    fn list(&mut self, close: &'static str) -> Result<Vec<Expr>, ExprDiagnostic> {
        let mut items = Vec::new();
        if self.peek() != &Tok::Sym(close) {
            loop {
                items.push(self.expr()?);
                if self.peek() == &Tok::Sym(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect_sym(close)?;
        Ok(items)
    }
}
