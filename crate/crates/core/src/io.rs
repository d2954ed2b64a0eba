//! Text formats for models, polynomials and tensors.
//!
//! # Model files (TOML)
//!
//! ```toml
//! n = 4
//! h = [0.0, 0.1, 0.0, -0.1]          # optional, defaults to zeros
//! J = [[0, 1, 0.333], [1, 2, 0.333]] # [i, j, value], 0-based, i ≠ j
//! ```
//!
//! Each triplet sets both `J_ij` and `J_ji`. Listing a pair twice is allowed
//! only with the same value; diagonal entries are rejected.
//!
//! # Polynomial files
//!
//! ```text
//! # comment
//! n = 5
//! 1,2 : 0.5        # coefficient of x1 x2 (1-based indices)
//! {2,4,5} : -1
//! {} : 3           # constant term (also ` : 3`)
//! ```
//!
//! # Tensor files (TOML or JSON)
//!
//! `{ order, n, entries: [[i_1, …, i_d, value], …] }` with 0-based indices;
//! each entry is copied to all permutations of its index tuple.

use serde::Deserialize;
use toml::Spanned;

use crate::model::IsingModel;
use crate::{Error, Result, SymmetricTensor, TetrahedralPolynomial};

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

fn toml_error(src: &str, e: toml::de::Error) -> Error {
    let line = e.span().map_or(1, |s| line_of(src, s.start));
    Error::Parse {
        line,
        msg: e.message().to_string(),
    }
}

#[derive(Deserialize)]
struct ModelFile {
    n: Spanned<i64>,
    #[serde(default)]
    h: Option<Spanned<Vec<f64>>>,
    #[serde(rename = "J", default)]
    j: Vec<Spanned<Vec<f64>>>,
}

fn as_index(v: f64, n: usize, line: usize) -> Result<usize> {
    if v.fract() != 0.0 || v < 0.0 || v >= n as f64 {
        return Err(Error::Parse {
            line,
            msg: format!("index {v} is not an integer in 0..{n}"),
        });
    }
    Ok(v as usize)
}

/// Parses a model file; errors carry the offending line.
pub fn parse_model(src: &str) -> Result<IsingModel> {
    let file: ModelFile = toml::from_str(src).map_err(|e| toml_error(src, e))?;
    let n_line = line_of(src, file.n.span().start);
    let n = usize::try_from(*file.n.get_ref())
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::Parse {
            line: n_line,
            msg: "n must be a positive integer".into(),
        })?;
    let h = match file.h {
        Some(h) => {
            let line = line_of(src, h.span().start);
            let h = h.into_inner();
            if h.len() != n {
                return Err(Error::Parse {
                    line,
                    msg: format!("h has {} entries, expected {n}", h.len()),
                });
            }
            h
        }
        None => vec![0.0; n],
    };
    let mut j = vec![0.0; n * n];
    let mut set = vec![false; n * n];
    for triplet in &file.j {
        let line = line_of(src, triplet.span().start);
        let t = triplet.get_ref();
        if t.len() != 3 {
            return Err(Error::Parse {
                line,
                msg: format!("coupling entry must be [i, j, value], got {} numbers", t.len()),
            });
        }
        let (a, b, v) = (as_index(t[0], n, line)?, as_index(t[1], n, line)?, t[2]);
        if a == b {
            return Err(Error::Parse {
                line,
                msg: format!("diagonal coupling J[{a}][{a}] is not allowed"),
            });
        }
        if !v.is_finite() {
            return Err(Error::Parse {
                line,
                msg: "coupling must be finite".into(),
            });
        }
        if set[a * n + b] && j[a * n + b] != v {
            return Err(Error::Parse {
                line,
                msg: format!("J[{a}][{b}] given twice with different values"),
            });
        }
        j[a * n + b] = v;
        j[b * n + a] = v;
        set[a * n + b] = true;
        set[b * n + a] = true;
    }
    IsingModel::new(n, j, h).map_err(|e| Error::Parse {
        line: 1,
        msg: e.to_string(),
    })
}

/// Serialises a model in the format read by [`parse_model`].
pub fn model_to_toml(model: &IsingModel) -> String {
    let n = model.n();
    let mut out = format!("n = {n}\n");
    let h: Vec<String> = model.field().iter().map(|v| format!("{v:?}")).collect();
    out.push_str(&format!("h = [{}]\n", h.join(", ")));
    out.push_str("J = [\n");
    for a in 0..n {
        for b in (a + 1)..n {
            let v = model.coupling(a, b);
            if v != 0.0 {
                out.push_str(&format!("  [{a}, {b}, {v:?}],\n"));
            }
        }
    }
    out.push_str("]\n");
    out
}

/// Parses a polynomial file.
pub fn parse_polynomial(src: &str) -> Result<TetrahedralPolynomial> {
    let mut poly: Option<TetrahedralPolynomial> = None;
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in src.lines().enumerate() {
        let line = idx + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line, msg };
        let Some(p) = poly.as_mut() else {
            let n = text
                .strip_prefix('n')
                .and_then(|r| r.trim_start().strip_prefix('='))
                .and_then(|r| r.trim().parse::<usize>().ok())
                .filter(|&n| (1..64).contains(&n))
                .ok_or_else(|| err(format!("expected `n = <1..63>`, got {text:?}")))?;
            poly = Some(TetrahedralPolynomial::zero(n));
            continue;
        };
        let (lhs, rhs) = text
            .split_once(':')
            .ok_or_else(|| err(format!("expected `S : coefficient`, got {text:?}")))?;
        let coef: f64 = rhs
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| err(format!("bad coefficient {:?}", rhs.trim())))?;
        let lhs = lhs.trim();
        let inner = match lhs.strip_prefix('{') {
            Some(r) => r
                .strip_suffix('}')
                .ok_or_else(|| err(format!("unbalanced braces in {lhs:?}")))?,
            None => lhs,
        };
        let mut mask = 0u64;
        let mut last = 0usize;
        for tok in inner.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let i: usize = tok.parse().map_err(|_| err(format!("bad index {tok:?}")))?;
            if i < 1 || i > p.n() {
                return Err(err(format!("index {i} outside 1..={}", p.n())));
            }
            if i <= last {
                return Err(err("indices must be strictly increasing".into()));
            }
            last = i;
            mask |= 1 << (i - 1);
        }
        if !seen.insert(mask) {
            return Err(err(format!("subset {lhs:?} listed twice")));
        }
        p.add_term(mask, coef).map_err(|e| err(e.to_string()))?;
    }
    poly.ok_or(Error::Parse {
        line: src.lines().count().max(1),
        msg: "missing `n = <int>` header".into(),
    })
}

/// Serialises a polynomial in the format read by [`parse_polynomial`].
pub fn polynomial_to_text(poly: &TetrahedralPolynomial) -> String {
    let mut out = format!("n = {}\n", poly.n());
    for (mask, c) in poly.terms() {
        let idx: Vec<String> = (0..poly.n())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| (i + 1).to_string())
            .collect();
        out.push_str(&format!("{{{}}} : {c:?}\n", idx.join(",")));
    }
    out
}

#[derive(Deserialize)]
struct TensorFile {
    order: usize,
    n: usize,
    entries: Vec<Vec<f64>>,
}

/// Parses a tensor file; JSON when the first non-blank character is `{`,
/// TOML otherwise.
pub fn parse_tensor(src: &str) -> Result<SymmetricTensor> {
    let file: TensorFile = if src.trim_start().starts_with('{') {
        serde_json::from_str(src).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?
    } else {
        toml::from_str(src).map_err(|e| toml_error(src, e))?
    };
    if file.order == 0 || file.order > crate::boolfn::MAX_TENSOR_ORDER || file.n == 0 {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "order must be in 1..={} and n positive",
                crate::boolfn::MAX_TENSOR_ORDER
            ),
        });
    }
    let mut tensor = SymmetricTensor::zeros(file.order, file.n);
    let mut set = std::collections::HashMap::new();
    for (k, e) in file.entries.iter().enumerate() {
        let bad = |msg: String| Error::Parse {
            line: 1,
            msg: format!("entry {k}: {msg}"),
        };
        if e.len() != file.order + 1 {
            return Err(bad(format!("expected {} indices and a value", file.order)));
        }
        let mut idx = Vec::with_capacity(file.order);
        for &v in &e[..file.order] {
            if v.fract() != 0.0 || v < 0.0 || v >= file.n as f64 {
                return Err(bad(format!("index {v} outside 0..{}", file.n)));
            }
            idx.push(v as usize);
        }
        let value = e[file.order];
        let mut key = idx.clone();
        key.sort_unstable();
        if let Some(prev) = set.insert(key, value) {
            if prev != value {
                return Err(bad("conflicting values for the same index set".into()));
            }
        }
        tensor.set_symmetric(&idx, value);
    }
    Ok(tensor)
}
