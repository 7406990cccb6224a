//! Candidate-model definition files.
//!
//! A flat key-value text format defining a three-particle hidden-variable
//! candidate through four expression strings:
//!
//! ```text
//! # comments start with '#'
//! name  = uniform-product
//! rho1  = 1 / (4 * pi)
//! rho23 = 1 / (16 * pi * pi)
//! pi    = ind(dot(lambda1, (0, 0, 1))) * ind(dot(lambda2, (0, 0, 1)))
//! c     = sgn(dot(lambda3, c))
//! ```
//!
//! Expressions are arithmetic (`+ - * /`, parentheses, numeric literals,
//! the constant `pi`) over `dot(<vector>, <vector>)`, `sgn(...)` and the
//! indicator `ind(...)` (1 where the argument is positive, else 0).
//! Vectors are the hidden points `lambda1`..`lambda3`, the state axis `n`,
//! the measurement setting `c`, or a literal `(x, y, z)` triple of
//! constants. Each key sees only its own variables: `rho1` may use
//! `lambda1` and `n`; `rho23` uses `lambda2`, `lambda3`; `pi` uses
//! `lambda1`, `lambda2`; `c` uses `lambda3` and the setting `c`. Unknown
//! identifiers are hard errors. No code is ever executed.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::hv::{sgn_response, TpCandidate};
use crate::spinor::Direction;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unknown identifier '{name}'")]
    UnknownIdentifier { line: usize, name: String },

    #[error("line {line}: '{var}' is not available in the '{key}' expression (allowed: {allowed})")]
    OutOfScope {
        line: usize,
        var: String,
        key: String,
        allowed: String,
    },

    #[error("missing required key '{0}'")]
    MissingKey(&'static str),

    #[error("line {line}: duplicate key '{key}'")]
    DuplicateKey { line: usize, key: String },

    #[error("line {line}: unknown key '{key}' (expected name, rho1, rho23, pi, c)")]
    UnknownKey { line: usize, key: String },
}

type MfResult<T> = std::result::Result<T, ModelFileError>;

/// Vector-valued variables an expression can reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VecRef {
    Lambda1,
    Lambda2,
    Lambda3,
    StateAxis,
    Setting,
}

impl VecRef {
    fn name(self) -> &'static str {
        match self {
            VecRef::Lambda1 => "lambda1",
            VecRef::Lambda2 => "lambda2",
            VecRef::Lambda3 => "lambda3",
            VecRef::StateAxis => "n",
            VecRef::Setting => "c",
        }
    }
}

#[derive(Clone, Debug)]
enum VecOperand {
    Ref(VecRef),
    Const([f64; 3]),
}

#[derive(Clone, Debug)]
enum Expr {
    Num(f64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Sgn(Box<Expr>),
    Ind(Box<Expr>),
    Dot(VecOperand, VecOperand),
}

/// Values bound to the vector variables during evaluation.
#[derive(Clone, Copy, Default)]
struct Bindings {
    lambda1: Option<Direction>,
    lambda2: Option<Direction>,
    lambda3: Option<Direction>,
    state_axis: Option<Direction>,
    setting: Option<Direction>,
}

impl Bindings {
    fn resolve(&self, r: VecRef) -> Direction {
        let v = match r {
            VecRef::Lambda1 => self.lambda1,
            VecRef::Lambda2 => self.lambda2,
            VecRef::Lambda3 => self.lambda3,
            VecRef::StateAxis => self.state_axis,
            VecRef::Setting => self.setting,
        };
        // scope checking at parse time guarantees the binding exists
        v.unwrap_or_else(|| panic!("unbound vector variable {}", r.name()))
    }
}

impl Expr {
    fn eval(&self, env: &Bindings) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Add(a, b) => a.eval(env) + b.eval(env),
            Expr::Sub(a, b) => a.eval(env) - b.eval(env),
            Expr::Mul(a, b) => a.eval(env) * b.eval(env),
            Expr::Div(a, b) => a.eval(env) / b.eval(env),
            Expr::Neg(a) => -a.eval(env),
            Expr::Sgn(a) => sgn_response(a.eval(env)),
            Expr::Ind(a) => (1.0 + sgn_response(a.eval(env))) / 2.0,
            Expr::Dot(u, v) => {
                let resolve = |op: &VecOperand| -> (f64, f64, f64) {
                    match op {
                        VecOperand::Ref(r) => {
                            let d = env.resolve(*r);
                            (d.x, d.y, d.z)
                        }
                        VecOperand::Const(c) => (c[0], c[1], c[2]),
                    }
                };
                let (ux, uy, uz) = resolve(u);
                let (vx, vy, vz) = resolve(v);
                ux * vx + uy * vy + uz * vz
            }
        }
    }

    fn references(&self, out: &mut Vec<VecRef>) {
        match self {
            Expr::Num(_) => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.references(out);
                b.references(out);
            }
            Expr::Neg(a) | Expr::Sgn(a) | Expr::Ind(a) => a.references(out),
            Expr::Dot(u, v) => {
                for op in [u, v] {
                    if let VecOperand::Ref(r) = op {
                        out.push(*r);
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
}

fn tokenize(line_no: usize, text: &str) -> MfResult<Vec<Token>> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        match ch {
            ' ' | '\t' => i += 1,
            '+' => {
                tokens.push(Token::Plus);
                i += 1;
            }
            '-' => {
                tokens.push(Token::Minus);
                i += 1;
            }
            '*' => {
                tokens.push(Token::Star);
                i += 1;
            }
            '/' => {
                tokens.push(Token::Slash);
                i += 1;
            }
            '(' => {
                tokens.push(Token::LParen);
                i += 1;
            }
            ')' => {
                tokens.push(Token::RParen);
                i += 1;
            }
            ',' => {
                tokens.push(Token::Comma);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_digit()
                        || chars[i] == '.'
                        || chars[i] == 'e'
                        || chars[i] == 'E'
                        || ((chars[i] == '+' || chars[i] == '-')
                            && i > start
                            && (chars[i - 1] == 'e' || chars[i - 1] == 'E')))
                {
                    i += 1;
                }
                let lit: String = chars[start..i].iter().collect();
                let v = lit.parse::<f64>().map_err(|_| ModelFileError::Syntax {
                    line: line_no,
                    message: format!("bad number literal '{lit}'"),
                })?;
                tokens.push(Token::Num(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                tokens.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => {
                return Err(ModelFileError::Syntax {
                    line: line_no,
                    message: format!("unexpected character '{other}'"),
                })
            }
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    line: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Token, what: &str) -> MfResult<()> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            other => Err(ModelFileError::Syntax {
                line: self.line,
                message: format!("expected {what}, found {other:?}"),
            }),
        }
    }

    fn expr(&mut self) -> MfResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.next();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.next();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> MfResult<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.next();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Token::Slash) => {
                    self.next();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> MfResult<Expr> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Expr::Num(v)),
            Some(Token::Minus) => Ok(Expr::Neg(Box::new(self.factor()?))),
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(Token::RParen, "')'")?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                "sgn" | "ind" => {
                    self.expect(Token::LParen, "'(' after function name")?;
                    let arg = self.expr()?;
                    self.expect(Token::RParen, "')'")?;
                    Ok(if name == "sgn" {
                        Expr::Sgn(Box::new(arg))
                    } else {
                        Expr::Ind(Box::new(arg))
                    })
                }
                "dot" => {
                    self.expect(Token::LParen, "'(' after dot")?;
                    let u = self.vec_operand()?;
                    self.expect(Token::Comma, "',' between dot arguments")?;
                    let v = self.vec_operand()?;
                    self.expect(Token::RParen, "')'")?;
                    Ok(Expr::Dot(u, v))
                }
                other => Err(ModelFileError::UnknownIdentifier {
                    line: self.line,
                    name: other.to_string(),
                }),
            },
            other => Err(ModelFileError::Syntax {
                line: self.line,
                message: format!("expected a value, found {other:?}"),
            }),
        }
    }

    fn vec_operand(&mut self) -> MfResult<VecOperand> {
        match self.next() {
            Some(Token::Ident(name)) => {
                let r = match name.as_str() {
                    "lambda1" => VecRef::Lambda1,
                    "lambda2" => VecRef::Lambda2,
                    "lambda3" => VecRef::Lambda3,
                    "n" => VecRef::StateAxis,
                    "c" => VecRef::Setting,
                    other => {
                        return Err(ModelFileError::UnknownIdentifier {
                            line: self.line,
                            name: other.to_string(),
                        })
                    }
                };
                Ok(VecOperand::Ref(r))
            }
            Some(Token::LParen) => {
                let x = self.const_scalar()?;
                self.expect(Token::Comma, "',' in vector literal")?;
                let y = self.const_scalar()?;
                self.expect(Token::Comma, "',' in vector literal")?;
                let z = self.const_scalar()?;
                self.expect(Token::RParen, "')' closing vector literal")?;
                Ok(VecOperand::Const([x, y, z]))
            }
            other => Err(ModelFileError::Syntax {
                line: self.line,
                message: format!("expected a vector (lambda1..3, n, c or a literal triple), found {other:?}"),
            }),
        }
    }

    /// A constant scalar expression (vector literal component): full
    /// arithmetic but no vector references.
    fn const_scalar(&mut self) -> MfResult<f64> {
        let e = self.expr()?;
        let mut refs = Vec::new();
        e.references(&mut refs);
        if let Some(r) = refs.first() {
            return Err(ModelFileError::Syntax {
                line: self.line,
                message: format!(
                    "vector literal components must be constants, found '{}'",
                    r.name()
                ),
            });
        }
        Ok(e.eval(&Bindings::default()))
    }
}

fn parse_expr(line_no: usize, text: &str) -> MfResult<Expr> {
    let tokens = tokenize(line_no, text)?;
    if tokens.is_empty() {
        return Err(ModelFileError::Syntax {
            line: line_no,
            message: "empty expression".into(),
        });
    }
    let mut parser = Parser {
        tokens: &tokens,
        pos: 0,
        line: line_no,
    };
    let expr = parser.expr()?;
    if parser.pos != tokens.len() {
        return Err(ModelFileError::Syntax {
            line: line_no,
            message: format!("trailing input after expression: {:?}", tokens[parser.pos]),
        });
    }
    Ok(expr)
}

fn check_scope(
    expr: &Expr,
    key: &'static str,
    allowed: &[VecRef],
    line: usize,
) -> MfResult<()> {
    let mut refs = Vec::new();
    expr.references(&mut refs);
    for r in refs {
        if !allowed.contains(&r) {
            return Err(ModelFileError::OutOfScope {
                line,
                var: r.name().to_string(),
                key: key.to_string(),
                allowed: allowed
                    .iter()
                    .map(|a| a.name())
                    .collect::<Vec<_>>()
                    .join(", "),
            });
        }
    }
    Ok(())
}

/// Parse candidate-model text into a [`TpCandidate`].
pub fn parse_candidate_str(text: &str, default_name: &str) -> MfResult<TpCandidate> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ModelFileError::Syntax {
                line: line_no,
                message: "expected 'key = expression'".into(),
            });
        };
        let key = key.trim().to_string();
        if !matches!(key.as_str(), "name" | "rho1" | "rho23" | "pi" | "c") {
            return Err(ModelFileError::UnknownKey { line: line_no, key });
        }
        if entries.contains_key(&key) {
            return Err(ModelFileError::DuplicateKey { line: line_no, key });
        }
        entries.insert(key, (line_no, value.trim().to_string()));
    }

    let name = entries
        .remove("name")
        .map(|(_, v)| v)
        .unwrap_or_else(|| default_name.to_string());

    let mut take = |key: &'static str, allowed: &[VecRef]| -> MfResult<Expr> {
        let (line, text) = entries
            .remove(key)
            .ok_or(ModelFileError::MissingKey(key))?;
        let expr = parse_expr(line, &text)?;
        check_scope(&expr, key, allowed, line)?;
        Ok(expr)
    };

    let rho1 = take("rho1", &[VecRef::Lambda1, VecRef::StateAxis])?;
    let rho23 = take("rho23", &[VecRef::Lambda2, VecRef::Lambda3])?;
    let pi = take("pi", &[VecRef::Lambda1, VecRef::Lambda2])?;
    let c_resp = take("c", &[VecRef::Lambda3, VecRef::Setting])?;

    let rho1 = Arc::new(rho1);
    let rho23 = Arc::new(rho23);
    let pi = Arc::new(pi);
    let c_resp = Arc::new(c_resp);

    let rho1_cl = Arc::clone(&rho1);
    let rho23_cl = Arc::clone(&rho23);
    let pi_cl = Arc::clone(&pi);
    let c_cl = Arc::clone(&c_resp);

    Ok(TpCandidate::new(
        name,
        move |lambda, n| {
            rho1_cl.eval(&Bindings {
                lambda1: Some(*lambda),
                state_axis: Some(*n),
                ..Default::default()
            })
        },
        move |l2, l3| {
            rho23_cl.eval(&Bindings {
                lambda2: Some(*l2),
                lambda3: Some(*l3),
                ..Default::default()
            })
        },
        move |l1, l2, _label| {
            pi_cl.eval(&Bindings {
                lambda1: Some(*l1),
                lambda2: Some(*l2),
                ..Default::default()
            })
        },
        move |l3, setting| {
            c_cl.eval(&Bindings {
                lambda3: Some(*l3),
                setting: Some(*setting),
                ..Default::default()
            })
        },
    ))
}

/// Load a candidate-model file from disk.
pub fn load_candidate_file(path: &Path) -> MfResult<TpCandidate> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let default_name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "candidate".to_string());
    parse_candidate_str(&text, &default_name)
}
