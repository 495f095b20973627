//! Architecture strings in the parenthesized-width notation.
//!
//! ```text
//! (6,7)(8,(1,1))            classical actor: 6 → 7 → 8 → mean/log-std heads
//! (8,64)(64,64)(64,1)       classical critic: 8 → 64 → 64 → 1
//! (6,VQA(4 layers),(1,1))   hybrid actor: 6-qubit circuit feeding the heads
//! (8,VQA(20 layers),8,1)    hybrid critic: 8 → dense 8 → 8-qubit circuit → 1
//! ```
//!
//! Groups are concatenated and a width repeated across a group boundary
//! (`…,64)(64,…`) is one layer boundary, not two. `(1,1)` is the pair of
//! Gaussian heads, each of the action dimension. In a hybrid actor the
//! circuit readout feeds the heads directly and any widths written after the
//! `VQA` token only mark the output end. In a hybrid critic the width after
//! the `VQA` token is the register size, reached by a linear projection.

use crate::error::{Error, Result};
use crate::nn::Activation;
use crate::quantum::{CircuitSpec, EncodingWeights};

pub const OBS_DIM: usize = 6;
pub const ACTION_DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkKind {
    Classical,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Actor,
    Critic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl DenseSpec {
    fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            activation,
        }
    }

    pub fn n_params(&self) -> usize {
        self.in_dim * self.out_dim + self.out_dim
    }
}

/// Layer layout of one actor or critic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchitectureConfig {
    pub role: Role,
    pub kind: NetworkKind,
    pub pre_layers: Vec<DenseSpec>,
    pub vqc: Option<CircuitSpec>,
    pub post_layers: Vec<DenseSpec>,
    pub obs_dim: usize,
    pub action_dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Token {
    Width(usize),
    Vqa(usize),
    Heads,
}

#[derive(Debug)]
enum Node {
    Width(usize),
    Vqa(usize),
    Group(Vec<Node>),
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Configuration(format!(
            "architecture `{}`: {msg} at column {}",
            self.src,
            self.pos + 1
        ))
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += self.src[self.pos..].chars().next().map_or(1, char::len_utf8);
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected `{c}`")))
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_ws();
        let digits: String = self.src[self.pos..].chars().take_while(char::is_ascii_digit).collect();
        if digits.is_empty() {
            return Err(self.err("expected a number"));
        }
        self.pos += digits.len();
        digits.parse().map_err(|_| self.err("number out of range"))
    }

    fn item(&mut self) -> Result<Node> {
        match self.peek() {
            Some('(') => self.group(),
            Some(c) if c.is_ascii_digit() => Ok(Node::Width(self.number()?)),
            Some(_) if self.src[self.pos..].starts_with("VQA") => {
                self.pos += 3;
                self.expect('(')?;
                let k = self.number()?;
                self.skip_ws();
                for word in ["layers", "layer"] {
                    if self.src[self.pos..].starts_with(word) {
                        self.pos += word.len();
                        break;
                    }
                }
                self.expect(')')?;
                Ok(Node::Vqa(k))
            }
            _ => Err(self.err("expected a width, `VQA(k layers)` or a group")),
        }
    }

    fn group(&mut self) -> Result<Node> {
        self.expect('(')?;
        let mut items = vec![self.item()?];
        while self.peek() == Some(',') {
            self.pos += 1;
            items.push(self.item()?);
        }
        self.expect(')')?;
        Ok(Node::Group(items))
    }

    fn tokens(mut self) -> Result<Vec<Token>> {
        let mut out: Vec<Token> = Vec::new();
        while self.peek().is_some() {
            let Node::Group(items) = self.group()? else {
                unreachable!()
            };
            let mut group = Vec::new();
            for item in items {
                group.push(match item {
                    Node::Width(w) => Token::Width(w),
                    Node::Vqa(k) => Token::Vqa(k),
                    Node::Group(inner) => match inner.as_slice() {
                        [Node::Width(1), Node::Width(1)] => Token::Heads,
                        _ => return Err(self.err("only `(1,1)` may be nested")),
                    },
                });
            }
            if let (Some(Token::Width(a)), Some(Token::Width(b))) = (out.last(), group.first()) {
                if a == b {
                    group.remove(0);
                }
            }
            out.extend(group);
        }
        if out.is_empty() {
            return Err(self.err("empty architecture"));
        }
        Ok(out)
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    Parser { src, pos: 0 }.tokens()
}

fn bad(src: &str, msg: &str) -> Error {
    Error::Configuration(format!("architecture `{src}`: {msg}"))
}

fn dense_chain(widths: &[usize], last: Activation) -> Vec<DenseSpec> {
    let n = widths.len().saturating_sub(1);
    widths
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let act = if i + 1 == n { last } else { Activation::Relu };
            DenseSpec::new(w[0], w[1], act)
        })
        .collect()
}

fn vqc(qubits: usize, layers: usize, encoding: EncodingWeights) -> Result<CircuitSpec> {
    Ok(CircuitSpec::new(qubits, layers)?.with_encoding_weights(encoding))
}

impl ArchitectureConfig {
    /// Parses an actor (`role = Actor`) or critic string.
    pub fn parse(role: Role, src: &str, encoding: EncodingWeights) -> Result<Self> {
        let tokens = tokenize(src)?;
        let input = match role {
            Role::Actor => OBS_DIM,
            Role::Critic => OBS_DIM + ACTION_DIM,
        };
        if tokens[0] != Token::Width(input) {
            return Err(bad(src, &format!("must start with the input width {input}")));
        }
        let widths = |ts: &[Token]| -> Result<Vec<usize>> {
            ts.iter()
                .map(|t| match t {
                    Token::Width(w) if *w > 0 => Ok(*w),
                    _ => Err(bad(src, "expected only positive widths here")),
                })
                .collect()
        };
        let vqa_at = tokens.iter().position(|t| matches!(t, Token::Vqa(_)));
        let mut cfg = Self {
            role,
            kind: NetworkKind::Classical,
            pre_layers: Vec::new(),
            vqc: None,
            post_layers: Vec::new(),
            obs_dim: OBS_DIM,
            action_dim: ACTION_DIM,
        };
        match (role, vqa_at) {
            (Role::Actor, None) => {
                let Some((Token::Heads, body)) = tokens.split_last() else {
                    return Err(bad(src, "actor must end with the `(1,1)` heads"));
                };
                cfg.post_layers = dense_chain(&widths(body)?, Activation::Relu);
            }
            (Role::Actor, Some(at)) => {
                if at != 1 {
                    return Err(bad(src, "hybrid actor circuit must follow the input"));
                }
                let Token::Vqa(layers) = tokens[1] else { unreachable!() };
                match &tokens[2..] {
                    [Token::Heads] => {}
                    [rest @ .., Token::Width(1)] if rest.iter().all(|t| matches!(t, Token::Width(_))) => {}
                    _ => return Err(bad(src, "hybrid actor must end with `(1,1)` or `…,1`")),
                }
                cfg.kind = NetworkKind::Hybrid;
                cfg.vqc = Some(vqc(input, layers, encoding)?);
            }
            (Role::Critic, None) => {
                let ws = widths(&tokens)?;
                if ws.last() != Some(&1) || ws.len() < 2 {
                    return Err(bad(src, "critic must end with width 1"));
                }
                cfg.post_layers = dense_chain(&ws, Activation::Linear);
            }
            (Role::Critic, Some(at)) => {
                let Token::Vqa(layers) = tokens[at] else { unreachable!() };
                let before = widths(&tokens[..at])?;
                let after = widths(&tokens[at + 1..])?;
                if after.len() < 2 || after.last() != Some(&1) {
                    return Err(bad(src, "hybrid critic needs `VQA(k), register, …, 1`"));
                }
                let qubits = after[0];
                let mut pre = dense_chain(&before, Activation::Relu);
                pre.push(DenseSpec::new(*before.last().unwrap(), qubits, Activation::Linear));
                cfg.kind = NetworkKind::Hybrid;
                cfg.pre_layers = pre;
                cfg.vqc = Some(vqc(qubits, layers, encoding)?);
                cfg.post_layers = dense_chain(&after, Activation::Linear);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn input_dim(&self) -> usize {
        match self.role {
            Role::Actor => self.obs_dim,
            Role::Critic => self.obs_dim + self.action_dim,
        }
    }

    /// Width of the trunk output (before the heads, for an actor).
    pub fn trunk_dim(&self) -> usize {
        if let Some(last) = self.post_layers.last() {
            last.out_dim
        } else if let Some(v) = &self.vqc {
            v.n_qubits
        } else if let Some(last) = self.pre_layers.last() {
            last.out_dim
        } else {
            self.input_dim()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut width = self.input_dim();
        let chain_err = |w: usize, d: &DenseSpec| {
            Error::Configuration(format!("layer {}→{} does not follow width {w}", d.in_dim, d.out_dim))
        };
        for d in &self.pre_layers {
            if d.in_dim != width {
                return Err(chain_err(width, d));
            }
            width = d.out_dim;
        }
        if let Some(v) = &self.vqc {
            v.validate()?;
            if v.n_qubits != width {
                return Err(Error::Configuration(format!(
                    "circuit of {} qubits fed with width {width}",
                    v.n_qubits
                )));
            }
        }
        for d in &self.post_layers {
            if d.in_dim != width {
                return Err(chain_err(width, d));
            }
            width = d.out_dim;
        }
        if self.role == Role::Critic && width != 1 {
            return Err(Error::Configuration(format!("critic output width {width}, expected 1")));
        }
        Ok(())
    }

    /// Learnable scalar count, every dense layer carrying a bias.
    pub fn n_params(&self) -> usize {
        let dense: usize = self.pre_layers.iter().chain(&self.post_layers).map(DenseSpec::n_params).sum();
        let circuit = self.vqc.as_ref().map_or(0, CircuitSpec::n_params);
        let heads = match self.role {
            Role::Actor => 2 * DenseSpec::new(self.trunk_dim(), self.action_dim, Activation::Linear).n_params(),
            Role::Critic => 0,
        };
        dense + circuit + heads
    }

    /// Count of hidden-layer weight matrices only (no biases, no output layer).
    ///
    /// This reproduces the critic sizes printed for the dense critics of the
    /// reference configurations (e.g. 4608 for 8→64→64→1).
    pub fn hidden_weight_count(&self) -> usize {
        let dense: Vec<&DenseSpec> = self.pre_layers.iter().chain(&self.post_layers).collect();
        let hidden = match self.role {
            Role::Critic => &dense[..dense.len().saturating_sub(1)],
            Role::Actor => &dense[..],
        };
        hidden.iter().map(|d| d.in_dim * d.out_dim).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn actor(s: &str) -> ArchitectureConfig {
        ArchitectureConfig::parse(Role::Actor, s, EncodingWeights::PerLayer).unwrap()
    }

    fn critic(s: &str) -> ArchitectureConfig {
        ArchitectureConfig::parse(Role::Critic, s, EncodingWeights::PerLayer).unwrap()
    }

    #[test]
    fn classical_actor_layout() {
        let a = actor("(6,7)(8,(1,1))");
        assert_eq!(a.kind, NetworkKind::Classical);
        let dims: Vec<_> = a.post_layers.iter().map(|d| (d.in_dim, d.out_dim)).collect();
        assert_eq!(dims, vec![(6, 7), (7, 8)]);
        assert!(a.post_layers.iter().all(|d| d.activation == Activation::Relu));
        // 6→7 (49) + 7→8 (64) + two 8→2 heads (18 each)
        assert_eq!(a.n_params(), 49 + 64 + 18 + 18);
        assert_eq!(a.n_params(), 149);
    }

    #[test]
    fn classical_critic_layouts() {
        let flat = critic("(8,64,64,1)");
        let grouped = critic("(8,64)(64,64)(64,1)");
        assert_eq!(flat, grouped);
        assert_eq!(flat.n_params(), 576 + 4160 + 65);
        assert_eq!(flat.hidden_weight_count(), 4608);
        assert_eq!(critic("(8,16)(16,16)(16,1)").hidden_weight_count(), 384);
        assert_eq!(flat.post_layers.last().unwrap().activation, Activation::Linear);
    }

    #[test]
    fn hybrid_layouts() {
        let a = ArchitectureConfig::parse(Role::Actor, "(6,VQA(4 layers),(1,1))", EncodingWeights::Shared).unwrap();
        assert_eq!(a.kind, NetworkKind::Hybrid);
        assert_eq!(a.vqc.as_ref().unwrap().n_layers, 4);
        assert_eq!(a.n_params(), 6 + 66 + 28);

        let c = critic("(8,VQA(20 layers),8,1)");
        assert_eq!(c.pre_layers, vec![DenseSpec::new(8, 8, Activation::Linear)]);
        assert_eq!(c.vqc.as_ref().unwrap().n_qubits, 8);
        assert_eq!(c.post_layers, vec![DenseSpec::new(8, 1, Activation::Linear)]);
        assert_eq!(c.n_params(), 72 + 160 + 472 + 9);

        let full = ArchitectureConfig::parse(Role::Actor, "(6,VQA(5 layers),8,1)", EncodingWeights::Shared).unwrap();
        assert_eq!(full.vqc.as_ref().unwrap().n_layers, 5);
        assert_eq!(full.trunk_dim(), 6);
    }

    #[test]
    fn malformed_strings_rejected() {
        for s in ["", "(6,7", "(6,7)(8,(2,2))", "(5,7)(8,(1,1))", "(6,x)", "(6,7)(8)"] {
            assert!(ArchitectureConfig::parse(Role::Actor, s, EncodingWeights::PerLayer).is_err(), "{s}");
        }
        for s in ["(8,64,64,2)", "(8,VQA(3 layers))", "(6,64,1)"] {
            assert!(ArchitectureConfig::parse(Role::Critic, s, EncodingWeights::PerLayer).is_err(), "{s}");
        }
    }
}
