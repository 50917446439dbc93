//! The parenthesized notation used in case-study tables:
//! `((sent19 & sent23) & sent17) & ((sent7 & sent8) & sent3)`.
//!
//! Every group of two or more operands becomes one step. Intermediates are
//! numbered in left-to-right postorder from 1 and the outermost expression
//! concludes `hypothesis`.

use std::collections::HashMap;

use super::{NodeId, ProofError, ProofGraph, ProofStep};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    And,
    Arrow,
    Word(String),
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' => {
                chars.next();
                tokens.push(Token::Open);
            }
            ')' => {
                chars.next();
                tokens.push(Token::Close);
            }
            '&' => {
                chars.next();
                tokens.push(Token::And);
            }
            '→' => {
                chars.next();
                tokens.push(Token::Arrow);
            }
            '-' => {
                chars.next();
                if chars.peek() == Some(&'>') {
                    chars.next();
                    tokens.push(Token::Arrow);
                } else {
                    tokens.push(Token::Word("-".into()));
                }
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || "()&-→".contains(c) {
                        break;
                    }
                    word.push(c);
                    chars.next();
                }
                tokens.push(Token::Word(word));
            }
        }
    }
    tokens
}

#[derive(Debug)]
enum Expr {
    Leaf(NodeId),
    Group(Vec<Expr>),
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr, ProofError> {
        let mut terms = vec![self.term()?];
        while self.peek() == Some(&Token::And) {
            self.next();
            terms.push(self.term()?);
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Expr::Group(terms) })
    }

    fn term(&mut self) -> Result<Expr, ProofError> {
        match self.next() {
            Some(Token::Open) => {
                let inner = self.expr()?;
                match self.next() {
                    Some(Token::Close) => Ok(inner),
                    None => Err(ProofError::UnbalancedParens),
                    Some(other) => Err(unexpected(&other)),
                }
            }
            Some(Token::Word(w)) => {
                let node: NodeId = w.parse()?;
                if node.is_sentence() {
                    Ok(Expr::Leaf(node))
                } else {
                    Err(ProofError::BadNode(w))
                }
            }
            Some(Token::Close) => Err(ProofError::UnbalancedParens),
            Some(other) => Err(unexpected(&other)),
            None => Err(ProofError::UnexpectedEnd),
        }
    }
}

fn unexpected(token: &Token) -> ProofError {
    let text = match token {
        Token::Open => "(".to_string(),
        Token::Close => ")".to_string(),
        Token::And => "&".to_string(),
        Token::Arrow => "->".to_string(),
        Token::Word(w) => w.clone(),
    };
    ProofError::UnexpectedToken(text)
}

/// Parses the nested notation into a proof graph.
pub fn parse_nested_proof(text: &str) -> Result<ProofGraph, ProofError> {
    let mut parser = Parser { tokens: tokenize(text), pos: 0 };
    if parser.peek().is_none() {
        return Err(ProofError::UnexpectedEnd);
    }
    let root = parser.expr()?;
    if parser.peek() == Some(&Token::Arrow) {
        parser.next();
        match parser.next() {
            Some(Token::Word(w)) if w.parse::<NodeId>().ok() == Some(NodeId::Hypothesis) => {}
            Some(other) => return Err(unexpected(&other)),
            None => return Err(ProofError::UnexpectedEnd),
        }
    }
    match parser.next() {
        None => {}
        Some(Token::Close) => return Err(ProofError::UnbalancedParens),
        Some(other) => return Err(unexpected(&other)),
    }
    let Expr::Group(_) = root else {
        return Err(ProofError::EmptyProof);
    };
    let mut steps = Vec::new();
    let mut counter = 0;
    emit(&root, true, &mut counter, &mut steps)?;
    ProofGraph::new(steps)
}

fn emit(
    expr: &Expr,
    is_root: bool,
    counter: &mut u32,
    steps: &mut Vec<ProofStep>,
) -> Result<NodeId, ProofError> {
    match expr {
        Expr::Leaf(node) => Ok(*node),
        Expr::Group(children) => {
            let premises = children
                .iter()
                .map(|c| emit(c, false, counter, steps))
                .collect::<Result<Vec<_>, _>>()?;
            let conclusion = if is_root {
                NodeId::Hypothesis
            } else {
                *counter += 1;
                NodeId::Intermediate(*counter)
            };
            steps.push(ProofStep::new(premises, conclusion, "")?);
            Ok(conclusion)
        }
    }
}

/// Renders a tree-shaped graph in nested notation. Returns `None` when the
/// graph cannot be written that way: no `hypothesis` step, an intermediate
/// consumed zero or several times, or a single-premise step.
pub fn serialize_nested(graph: &ProofGraph) -> Option<String> {
    let root = graph.step_for(NodeId::Hypothesis)?;
    let mut uses: HashMap<NodeId, usize> = HashMap::new();
    for step in graph.steps() {
        if step.premises().len() < 2 {
            return None;
        }
        for p in step.premises().iter().filter(|p| p.is_intermediate()) {
            *uses.entry(*p).or_default() += 1;
        }
    }
    let tree = graph
        .steps()
        .iter()
        .filter(|s| s.conclusion().is_intermediate())
        .all(|s| uses.get(&s.conclusion()) == Some(&1));
    if !tree {
        return None;
    }
    fn render(graph: &ProofGraph, node: NodeId) -> String {
        match graph.step_for(node) {
            Some(step) if node.is_intermediate() => format!("({})", join(graph, step)),
            _ => node.to_string(),
        }
    }
    fn join(graph: &ProofGraph, step: &ProofStep) -> String {
        step.premises().iter().map(|&p| render(graph, p)).collect::<Vec<_>>().join(" & ")
    }
    Some(join(graph, root))
}
