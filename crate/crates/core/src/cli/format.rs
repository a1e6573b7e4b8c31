//! Self-describing JSON documents for games and strategies.
//!
//! Output is canonical: keys sorted, two-space indentation, one matrix row
//! per line, and floats in shortest round-trip form. Loading a canonical
//! file and saving it again reproduces it byte for byte.

use serde_json::{Map, Number, Value};
use thiserror::Error;

use crate::adapt::{AdaptationReceipt, Scale};
use crate::linalg::{ComplexMatrix, C64};
use crate::model::{ENLGStrategy, ExtendedGame, ModelError, QCGame, QCStrategy, QcDims};

pub const KIND_QC: &str = "qc";
pub const KIND_ENLG: &str = "enlg";
pub const KIND_QC_STRATEGY: &str = "qc-strategy";
pub const KIND_ENLG_STRATEGY: &str = "enlg-strategy";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Schema(String),
    #[error("inconsistent object: {0}")]
    Model(#[from] ModelError),
    #[error("cannot serialize non-finite number")]
    NonFinite,
}

fn schema<T>(msg: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError::Schema(msg.into()))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metadata {
    pub name: String,
    pub description: String,
}

impl Metadata {
    pub fn new(name: impl Into<String>, description: impl Into<String>) -> Self {
        Metadata {
            name: name.into(),
            description: description.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Game {
    Qc(QCGame),
    Enlg(ExtendedGame),
}

#[derive(Debug, Clone)]
pub struct GameFile {
    pub metadata: Metadata,
    pub game: Game,
}

#[derive(Debug, Clone)]
pub enum Strategy {
    Qc(QCStrategy),
    Enlg(ENLGStrategy),
}

#[derive(Debug, Clone)]
pub struct StrategyFile {
    pub metadata: Metadata,
    pub strategy: Strategy,
    pub receipt: Option<AdaptationReceipt>,
}

#[derive(Debug, Clone)]
pub enum Document {
    Game(GameFile),
    Strategy(StrategyFile),
}

// ---- writing ----

fn number(x: f64) -> Result<Value, FormatError> {
    Number::from_f64(x).map(Value::Number).ok_or(FormatError::NonFinite)
}

fn pair(v: (usize, usize)) -> Value {
    Value::from(vec![v.0, v.1])
}

pub fn matrix_to_value(m: &ComplexMatrix) -> Result<Value, FormatError> {
    let mut rows = Vec::with_capacity(m.rows());
    for r in 0..m.rows() {
        let mut row = Vec::with_capacity(m.cols());
        for c in 0..m.cols() {
            let z = m[(r, c)];
            row.push(Value::Array(vec![number(z.re)?, number(z.im)?]));
        }
        rows.push(Value::Array(row));
    }
    Ok(Value::Array(rows))
}

fn matrices_to_value(ms: &[ComplexMatrix]) -> Result<Value, FormatError> {
    Ok(Value::Array(ms.iter().map(matrix_to_value).collect::<Result<_, _>>()?))
}

fn metadata_to_value(meta: &Metadata) -> Value {
    let mut m = Map::new();
    m.insert("description".into(), Value::from(meta.description.clone()));
    m.insert("name".into(), Value::from(meta.name.clone()));
    Value::Object(m)
}

fn receipt_to_value(r: &AdaptationReceipt) -> Result<Value, FormatError> {
    let mut scale = Map::new();
    scale.insert("den".into(), Value::from(r.scale.den));
    scale.insert("num".into(), Value::from(r.scale.num));
    let mut m = Map::new();
    m.insert("residual".into(), number(r.residual)?);
    m.insert("scale".into(), Value::Object(scale));
    m.insert("source_loss".into(), number(r.source_loss)?);
    m.insert("target_loss".into(), number(r.target_loss)?);
    Ok(Value::Object(m))
}

pub fn game_to_value(file: &GameFile) -> Result<Value, FormatError> {
    let mut m = Map::new();
    m.insert("metadata".into(), metadata_to_value(&file.metadata));
    match &file.game {
        Game::Qc(g) => {
            let QcDims { n, s, m: dm } = g.dims();
            let mut dims = Map::new();
            dims.insert("m".into(), Value::from(dm));
            dims.insert("n".into(), Value::from(n));
            dims.insert("s".into(), Value::from(s));
            m.insert("kind".into(), Value::from(KIND_QC));
            m.insert("dims".into(), Value::Object(dims));
            m.insert("answers".into(), pair(g.answers()));
            m.insert("rho".into(), matrix_to_value(g.rho())?);
            m.insert("win_ops".into(), matrices_to_value(g.win_ops())?);
        }
        Game::Enlg(h) => {
            m.insert("kind".into(), Value::from(KIND_ENLG));
            m.insert("questions".into(), pair(h.questions()));
            m.insert("answers".into(), pair(h.answers()));
            m.insert("ref_dim".into(), Value::from(h.ref_dim()));
            let dist = h.distribution().iter().map(|&p| number(p)).collect::<Result<_, _>>()?;
            m.insert("distribution".into(), Value::Array(dist));
            m.insert("ref_ops".into(), matrices_to_value(h.ref_ops())?);
        }
    }
    Ok(Value::Object(m))
}

pub fn strategy_to_value(file: &StrategyFile) -> Result<Value, FormatError> {
    let mut m = Map::new();
    m.insert("metadata".into(), metadata_to_value(&file.metadata));
    match &file.strategy {
        Strategy::Qc(s) => {
            m.insert("kind".into(), Value::from(KIND_QC_STRATEGY));
            m.insert("ancilla".into(), pair(s.ancilla));
            m.insert("sigma".into(), matrix_to_value(&s.sigma)?);
            m.insert("alice".into(), matrices_to_value(&s.alice)?);
            m.insert("bob".into(), matrices_to_value(&s.bob)?);
        }
        Strategy::Enlg(s) => {
            m.insert("kind".into(), Value::from(KIND_ENLG_STRATEGY));
            m.insert("dims".into(), Value::from(vec![s.dims.0, s.dims.1, s.dims.2]));
            m.insert("sigma".into(), matrix_to_value(&s.sigma)?);
            let povms = |ps: &[Vec<ComplexMatrix>]| -> Result<Value, FormatError> {
                Ok(Value::Array(ps.iter().map(|p| matrices_to_value(p)).collect::<Result<_, _>>()?))
            };
            m.insert("alice".into(), povms(&s.alice)?);
            m.insert("bob".into(), povms(&s.bob)?);
        }
    }
    if let Some(r) = &file.receipt {
        m.insert("receipt".into(), receipt_to_value(r)?);
    }
    Ok(Value::Object(m))
}

/// Nesting depth of arrays; `[[re, im], ...]` has depth 2.
fn array_depth(v: &Value) -> usize {
    match v {
        Value::Array(items) => 1 + items.iter().map(array_depth).max().unwrap_or(0),
        _ => 0,
    }
}

fn write_canonical(v: &Value, indent: usize, out: &mut String) {
    let pad = |k: usize| "  ".repeat(k);
    match v {
        Value::Array(items) if !items.is_empty() && array_depth(v) > 2 => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_canonical(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::from(k.as_str()).to_string());
                out.push_str(": ");
                write_canonical(item, indent + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// Canonical text of a JSON value, newline-terminated.
pub fn to_canonical_string(v: &Value) -> String {
    let mut out = String::new();
    write_canonical(v, 0, &mut out);
    out.push('\n');
    out
}

pub fn game_to_string(file: &GameFile) -> Result<String, FormatError> {
    Ok(to_canonical_string(&game_to_value(file)?))
}

pub fn strategy_to_string(file: &StrategyFile) -> Result<String, FormatError> {
    Ok(to_canonical_string(&strategy_to_value(file)?))
}

// ---- reading ----

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value, FormatError> {
    obj.get(key)
        .ok_or_else(|| FormatError::Schema(format!("missing field `{key}`")))
}

fn as_usize(v: &Value, what: &str) -> Result<usize, FormatError> {
    match v.as_u64() {
        Some(k) => usize::try_from(k).or_else(|_| schema(format!("`{what}` is too large"))),
        None => schema(format!("`{what}` must be a non-negative integer")),
    }
}

fn as_f64(v: &Value, what: &str) -> Result<f64, FormatError> {
    v.as_f64()
        .ok_or_else(|| FormatError::Schema(format!("`{what}` must be a number")))
}

fn as_array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>, FormatError> {
    v.as_array()
        .ok_or_else(|| FormatError::Schema(format!("`{what}` must be an array")))
}

fn usize_list(v: &Value, what: &str, len: usize) -> Result<Vec<usize>, FormatError> {
    let items = as_array(v, what)?;
    if items.len() != len {
        return schema(format!("`{what}` must have {len} entries"));
    }
    items.iter().map(|x| as_usize(x, what)).collect()
}

fn usize_pair(v: &Value, what: &str) -> Result<(usize, usize), FormatError> {
    let l = usize_list(v, what, 2)?;
    Ok((l[0], l[1]))
}

pub fn matrix_from_value(v: &Value, what: &str) -> Result<ComplexMatrix, FormatError> {
    let rows = as_array(v, what)?;
    let n = rows.len();
    let mut data = Vec::with_capacity(n * n);
    for row in rows {
        let row = as_array(row, what)?;
        if row.len() != n {
            return schema(format!("`{what}` must be a square matrix"));
        }
        for entry in row {
            let z = as_array(entry, what)?;
            if z.len() != 2 {
                return schema(format!("`{what}` entries must be [re, im] pairs"));
            }
            data.push(C64::new(as_f64(&z[0], what)?, as_f64(&z[1], what)?));
        }
    }
    ComplexMatrix::from_vec(n, n, data).or_else(|e| schema(format!("`{what}`: {e}")))
}

fn matrices_from_value(v: &Value, what: &str) -> Result<Vec<ComplexMatrix>, FormatError> {
    as_array(v, what)?
        .iter()
        .map(|m| matrix_from_value(m, what))
        .collect()
}

fn metadata_from(obj: &Map<String, Value>) -> Result<Metadata, FormatError> {
    let Some(meta) = obj.get("metadata") else {
        return Ok(Metadata::default());
    };
    let text = |key: &str| -> Result<String, FormatError> {
        match meta.get(key) {
            None => Ok(String::new()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => schema(format!("`metadata.{key}` must be a string")),
        }
    };
    if !meta.is_object() {
        return schema("`metadata` must be an object");
    }
    Ok(Metadata {
        name: text("name")?,
        description: text("description")?,
    })
}

fn receipt_from(v: &Value) -> Result<AdaptationReceipt, FormatError> {
    let obj = v
        .as_object()
        .ok_or_else(|| FormatError::Schema("`receipt` must be an object".into()))?;
    let scale = field(obj, "scale")?
        .as_object()
        .ok_or_else(|| FormatError::Schema("`receipt.scale` must be an object".into()))?;
    Ok(AdaptationReceipt {
        source_loss: as_f64(field(obj, "source_loss")?, "receipt.source_loss")?,
        target_loss: as_f64(field(obj, "target_loss")?, "receipt.target_loss")?,
        scale: Scale {
            num: as_usize(field(scale, "num")?, "receipt.scale.num")?,
            den: as_usize(field(scale, "den")?, "receipt.scale.den")?,
        },
        residual: as_f64(field(obj, "residual")?, "receipt.residual")?,
    })
}

fn qc_game_from(obj: &Map<String, Value>) -> Result<QCGame, FormatError> {
    let dims = field(obj, "dims")?;
    let dim = |key: &str| -> Result<usize, FormatError> {
        as_usize(dims.get(key).ok_or_else(|| FormatError::Schema(format!("missing `dims.{key}`")))?, key)
    };
    let dims = QcDims {
        n: dim("n")?,
        s: dim("s")?,
        m: dim("m")?,
    };
    let answers = usize_pair(field(obj, "answers")?, "answers")?;
    let rho = matrix_from_value(field(obj, "rho")?, "rho")?;
    let win_ops = matrices_from_value(field(obj, "win_ops")?, "win_ops")?;
    Ok(QCGame::new(rho, dims, answers, win_ops)?)
}

fn enlg_from(obj: &Map<String, Value>) -> Result<ExtendedGame, FormatError> {
    let questions = usize_pair(field(obj, "questions")?, "questions")?;
    let answers = usize_pair(field(obj, "answers")?, "answers")?;
    let ref_dim = as_usize(field(obj, "ref_dim")?, "ref_dim")?;
    let pi = as_array(field(obj, "distribution")?, "distribution")?
        .iter()
        .map(|p| as_f64(p, "distribution"))
        .collect::<Result<_, _>>()?;
    let ref_ops = matrices_from_value(field(obj, "ref_ops")?, "ref_ops")?;
    Ok(ExtendedGame::new(pi, questions, answers, ref_dim, ref_ops)?)
}

fn qc_strategy_from(obj: &Map<String, Value>) -> Result<QCStrategy, FormatError> {
    let ancilla = usize_pair(field(obj, "ancilla")?, "ancilla")?;
    let s = QCStrategy {
        sigma: matrix_from_value(field(obj, "sigma")?, "sigma")?,
        ancilla,
        alice: matrices_from_value(field(obj, "alice")?, "alice")?,
        bob: matrices_from_value(field(obj, "bob")?, "bob")?,
    };
    if s.sigma.rows() != ancilla.0 * ancilla.1 {
        return schema(format!(
            "`sigma` is {0}x{0} but ancilla {ancilla:?} needs {1}",
            s.sigma.rows(),
            ancilla.0 * ancilla.1
        ));
    }
    Ok(s)
}

fn enlg_strategy_from(obj: &Map<String, Value>) -> Result<ENLGStrategy, FormatError> {
    let d = usize_list(field(obj, "dims")?, "dims", 3)?;
    let povms = |key: &str| -> Result<Vec<Vec<ComplexMatrix>>, FormatError> {
        as_array(field(obj, key)?, key)?
            .iter()
            .map(|p| matrices_from_value(p, key))
            .collect()
    };
    let s = ENLGStrategy {
        sigma: matrix_from_value(field(obj, "sigma")?, "sigma")?,
        dims: (d[0], d[1], d[2]),
        alice: povms("alice")?,
        bob: povms("bob")?,
    };
    if s.sigma.rows() != d[0] * d[1] * d[2] {
        return schema(format!(
            "`sigma` is {0}x{0} but dims {d:?} need {1}",
            s.sigma.rows(),
            d[0] * d[1] * d[2]
        ));
    }
    Ok(s)
}

/// Parses any game or strategy document. Structural problems are errors;
/// validation against the model invariants is left to the caller.
pub fn parse_document(text: &str) -> Result<Document, FormatError> {
    let v: Value = serde_json::from_str(text)?;
    let Some(obj) = v.as_object() else {
        return schema("top level must be an object");
    };
    let kind = match obj.get("kind") {
        Some(Value::String(k)) => k.as_str(),
        _ => return schema("missing string field `kind`"),
    };
    let metadata = metadata_from(obj)?;
    let receipt = obj.get("receipt").map(receipt_from).transpose()?;
    let strategy = |strategy| {
        Document::Strategy(StrategyFile {
            metadata: metadata.clone(),
            strategy,
            receipt,
        })
    };
    Ok(match kind {
        KIND_QC => Document::Game(GameFile {
            metadata,
            game: Game::Qc(qc_game_from(obj)?),
        }),
        KIND_ENLG => Document::Game(GameFile {
            metadata,
            game: Game::Enlg(enlg_from(obj)?),
        }),
        KIND_QC_STRATEGY => strategy(Strategy::Qc(qc_strategy_from(obj)?)),
        KIND_ENLG_STRATEGY => strategy(Strategy::Enlg(enlg_strategy_from(obj)?)),
        other => return schema(format!("unknown kind `{other}`")),
    })
}

pub fn document_to_string(doc: &Document) -> Result<String, FormatError> {
    match doc {
        Document::Game(g) => game_to_string(g),
        Document::Strategy(s) => strategy_to_string(s),
    }
}
