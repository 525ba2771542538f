//! Plain-text matrix format for policies, transition models and losses.
//!
//! A file is a sequence of blocks. Each block opens with a header line
//!
//! ```text
//! <kind> <num_states> <num_actions>
//! ```
//!
//! where `kind` is `policy`, `model` or `loss`, followed by rows of
//! whitespace-separated decimal floats:
//!
//! * `policy`: `|X|` rows of `|A|` entries, row `x` is `pi(.|x)`;
//! * `loss`: `|X|` rows of `|A|` entries, row `x` is `l(x, .)`;
//! * `model`: `|X| * |A|` rows of `|X|` entries, ordered `(x, a)` with `x`
//!   outermost, row `(x, a)` is `m(.|x, a)`.
//!
//! Blank lines and anything after `#` are ignored. Probability rows read from
//! text may be off from 1 by up to [`TEXT_SUM_TOL`] (hand-typed thirds and
//! the like); rows off by more than rounding noise are rescaled to sum to 1.
//! Writers emit Rust's shortest round-trip decimal form, so write-then-read
//! is lossless.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mdp::{LossFunction, Policy, ProblemShape, TransitionModel, STOCHASTIC_TOL};

pub const TEXT_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    Policy(Policy),
    Model(TransitionModel),
    Loss(LossFunction),
}

impl Block {
    pub fn shape(&self) -> ProblemShape {
        match self {
            Block::Policy(p) => p.shape(),
            Block::Model(m) => m.shape(),
            Block::Loss(l) => l.shape(),
        }
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Non-empty content lines as `(1-based line number, tokens)`.
fn content_lines(text: &str) -> Vec<(usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let body = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = body.split_whitespace().collect();
            (!tokens.is_empty()).then_some((i + 1, tokens))
        })
        .collect()
}

fn rescale_row(row: &mut [f64], line: usize) -> Result<()> {
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > TEXT_SUM_TOL {
        return Err(parse_error(line, format!("row sums to {sum}, expected 1")));
    }
    if row.iter().any(|&p| p < 0.0) {
        return Err(parse_error(line, "negative probability"));
    }
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        for p in row.iter_mut() {
            *p /= sum;
        }
    }
    Ok(())
}

/// Parses every block in `text`.
pub fn parse_blocks(text: &str) -> Result<Vec<Block>> {
    let lines = content_lines(text);
    let mut blocks = Vec::new();
    let mut cursor = 0;
    while cursor < lines.len() {
        let (header_line, header) = &lines[cursor];
        let header_line = *header_line;
        cursor += 1;
        if header.len() != 3 {
            return Err(parse_error(
                header_line,
                "expected header `<policy|model|loss> <num_states> <num_actions>`",
            ));
        }
        let dim = |tok: &str, name: &str| {
            tok.parse::<usize>()
                .map_err(|_| parse_error(header_line, format!("bad {name} {tok:?}")))
        };
        let n = dim(header[1], "num_states")?;
        let k = dim(header[2], "num_actions")?;
        let shape = ProblemShape::new(n, k).map_err(|e| parse_error(header_line, e.to_string()))?;
        let (rows, width, stochastic) = match header[0] {
            "policy" => (n, k, true),
            "loss" => (n, k, false),
            "model" => (n * k, n, true),
            other => return Err(parse_error(header_line, format!("unknown block kind {other:?}"))),
        };
        if cursor + rows > lines.len() {
            return Err(parse_error(
                header_line,
                format!("{} block needs {rows} rows, found {}", header[0], lines.len() - cursor),
            ));
        }
        let mut values = Vec::with_capacity(rows * width);
        for (line, tokens) in &lines[cursor..cursor + rows] {
            if tokens.len() != width {
                return Err(parse_error(*line, format!("expected {width} entries, got {}", tokens.len())));
            }
            let mut row = Vec::with_capacity(width);
            for tok in tokens {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| parse_error(*line, format!("bad number {tok:?}")))?;
                if !v.is_finite() {
                    return Err(parse_error(*line, format!("non-finite number {tok:?}")));
                }
                row.push(v);
            }
            if stochastic {
                rescale_row(&mut row, *line)?;
            }
            values.extend(row);
        }
        cursor += rows;
        let wrap = |e: Error| parse_error(header_line, e.to_string());
        blocks.push(match header[0] {
            "policy" => Block::Policy(Policy::new(shape, values).map_err(wrap)?),
            "loss" => Block::Loss(LossFunction::new(shape, values).map_err(wrap)?),
            _ => Block::Model(TransitionModel::new(shape, values).map_err(wrap)?),
        });
    }
    Ok(blocks)
}

fn expect_all<T>(
    text: &str,
    kind: &str,
    pick: impl Fn(Block) -> Option<T>,
) -> Result<Vec<T>> {
    let blocks = parse_blocks(text)?;
    if blocks.is_empty() {
        return Err(parse_error(0, format!("no {kind} blocks found")));
    }
    blocks
        .into_iter()
        .enumerate()
        .map(|(i, b)| pick(b).ok_or_else(|| parse_error(0, format!("block {i} is not a {kind}"))))
        .collect()
}

pub fn parse_policies(text: &str) -> Result<Vec<Policy>> {
    expect_all(text, "policy", |b| match b {
        Block::Policy(p) => Some(p),
        _ => None,
    })
}

pub fn parse_models(text: &str) -> Result<Vec<TransitionModel>> {
    expect_all(text, "model", |b| match b {
        Block::Model(m) => Some(m),
        _ => None,
    })
}

pub fn parse_losses(text: &str) -> Result<Vec<LossFunction>> {
    expect_all(text, "loss", |b| match b {
        Block::Loss(l) => Some(l),
        _ => None,
    })
}

fn write_rows(out: &mut String, header: &str, shape: ProblemShape, values: &[f64], width: usize) {
    let _ = writeln!(out, "{header} {} {}", shape.num_states(), shape.num_actions());
    for row in values.chunks(width) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
}

pub fn write_policy(out: &mut String, policy: &Policy) {
    write_rows(out, "policy", policy.shape(), policy.as_slice(), policy.shape().num_actions());
}

pub fn write_model(out: &mut String, model: &TransitionModel) {
    write_rows(out, "model", model.shape(), model.as_slice(), model.shape().num_states());
}

pub fn write_loss(out: &mut String, loss: &LossFunction) {
    write_rows(out, "loss", loss.shape(), loss.as_slice(), loss.shape().num_actions());
}

pub fn write_block(out: &mut String, block: &Block) {
    match block {
        Block::Policy(p) => write_policy(out, p),
        Block::Model(m) => write_model(out, m),
        Block::Loss(l) => write_loss(out, l),
    }
}
