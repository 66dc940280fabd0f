//! Trace, sample and report serialization.
//!
//! Point walks are written as CSV (`index,phase,coord_0,...`) or JSON lines
//! with a `coords` array; sparse walks as JSON lines with an `entries`
//! object. Exact coordinates are written as full decimal expansions.

use std::io::{BufRead, Write};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::analysis::LimitEstimate;
use crate::error::{Error, Result};
use crate::scalar::{Dyadic, Scalar};
use crate::vector::{NormKind, Point, SparseVec, Vector};
use crate::walk::{build_xwalk, Walk};

/// Vectors that can appear in a trace.
pub trait TraceVector: Vector {
    /// The JSON fragment after `"index":n,"phase":p,` without braces.
    fn json_body(&self) -> String;
    /// Parses one JSON line's payload.
    fn from_json(v: &Value) -> Result<Self>;
    /// Estimate-report rendering.
    fn to_value(&self) -> Value;
    /// Default norm for traces of this kind.
    fn default_norm() -> NormKind;
}

fn render_scalars(s: impl Iterator<Item = Scalar>) -> Vec<String> {
    s.map(Scalar::render).collect()
}

impl TraceVector for Point {
    fn json_body(&self) -> String {
        format!("\"coords\":[{}]", render_scalars(self.scalars().into_iter()).join(","))
    }

    fn from_json(v: &Value) -> Result<Self> {
        let coords = v
            .get("coords")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("missing coords array".into()))?;
        let xs = coords
            .iter()
            .map(|c| c.as_f64().ok_or_else(|| Error::Parse("coordinate is not a number".into())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Point::float(&xs))
    }

    fn to_value(&self) -> Value {
        json!(self.to_f64s())
    }

    fn default_norm() -> NormKind {
        NormKind::Euclidean
    }
}

impl TraceVector for SparseVec {
    fn json_body(&self) -> String {
        let entries: Vec<String> = self.iter().map(|(i, v)| format!("\"{i}\":{}", v.render())).collect();
        format!("\"entries\":{{{}}}", entries.join(","))
    }

    fn from_json(v: &Value) -> Result<Self> {
        let entries = v
            .get("entries")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Parse("missing entries object".into()))?;
        let mut out = Vec::with_capacity(entries.len());
        for (k, x) in entries {
            let i: usize = k.parse().map_err(|_| Error::Parse(format!("bad entry index {k:?}")))?;
            if i == 0 {
                return Err(Error::Parse("entry indices are 1-based".into()));
            }
            let x = x.as_f64().ok_or_else(|| Error::Parse(format!("entry {k} is not a number")))?;
            out.push((i, Scalar::Float(x)));
        }
        Ok(SparseVec::from_entries(out))
    }

    fn to_value(&self) -> Value {
        let m: Map<String, Value> = self.iter().map(|(i, v)| (i.to_string(), json!(v.to_f64()))).collect();
        Value::Object(m)
    }

    fn default_norm() -> NormKind {
        NormKind::Sup
    }
}

/// Phase (1-based) of every sum.
fn phases_of<V: Vector>(w: &Walk<V>) -> Vec<usize> {
    let mut out = Vec::with_capacity(w.len());
    for p in 1..=w.phase_count() {
        out.extend(std::iter::repeat_n(p, w.phase_range(p).len()));
    }
    out
}

/// CSV trace of a point walk. Coordinates are padded to the largest
/// dimension.
pub fn write_trace_csv<W: Write>(w: &Walk<Point>, out: W) -> Result<()> {
    let dim = w.dim();
    let mut wr = csv::Writer::from_writer(out);
    let mut header = vec!["index".to_string(), "phase".to_string()];
    header.extend((0..dim).map(|i| format!("coord_{i}")));
    wr.write_record(&header)?;
    for (i, (s, p)) in w.sums.iter().zip(phases_of(w)).enumerate() {
        let mut rec = vec![i.to_string(), p.to_string()];
        rec.extend(render_scalars(s.scalars().into_iter()));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

/// JSON-lines trace, one `{"index":n,"phase":p,...}` object per sum.
pub fn write_trace_jsonl<V: TraceVector, W: Write>(w: &Walk<V>, mut out: W) -> Result<()> {
    for (i, (s, p)) in w.sums.iter().zip(phases_of(w)).enumerate() {
        writeln!(out, "{{\"index\":{i},\"phase\":{p},{}}}", s.json_body())?;
    }
    Ok(())
}

/// Rebuilds a walk from its sums and per-sum phase labels.
///
/// When the phases have the out-and-back shape the palindromic walk is
/// recovered; otherwise each phase becomes a plain group.
pub fn walk_from_phases<V: Vector>(sums: Vec<V>, phases: &[usize], norm: NormKind) -> Result<Walk<V>> {
    if sums.is_empty() {
        return Err(Error::EmptySample);
    }
    if phases.len() != sums.len() {
        return Err(Error::invalid("phase column length differs from sum count"));
    }
    let mut groups: Vec<usize> = Vec::new();
    let mut last = 0;
    for &p in phases {
        if p == last {
            *groups.last_mut().unwrap() += 1;
        } else if p == last + 1 {
            groups.push(1);
            last = p;
        } else {
            return Err(Error::Parse(format!("phase labels must start at 1 and increase by 1, found {p} after {last}")));
        }
    }
    if let Some(w) = as_xwalk(&sums, &groups, norm) {
        return Ok(w);
    }
    Walk::from_groups(sums, &groups, norm)
}

fn as_xwalk<V: Vector>(sums: &[V], groups: &[usize], norm: NormKind) -> Option<Walk<V>> {
    if groups[0] % 2 == 0 || groups[1..].iter().any(|g| g % 2 == 1) {
        return None;
    }
    let mut schedule = Vec::with_capacity(groups.len());
    let n1 = groups[0].div_ceil(2);
    schedule.push(sums[..n1].to_vec());
    let mut start = groups[0];
    for &g in &groups[1..] {
        let mut chain = vec![sums[0].clone()];
        chain.extend(sums[start..start + g / 2].iter().cloned());
        schedule.push(chain);
        start += g;
    }
    let w = build_xwalk(&schedule, norm).ok()?;
    (w.sums == sums).then_some(w)
}

/// Reads a CSV trace written by [`write_trace_csv`].
pub fn read_trace_csv<R: std::io::Read>(input: R, norm: NormKind) -> Result<Walk<Point>> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers()?.clone();
    if headers.get(0) != Some("index") || headers.get(1) != Some("phase") || headers.len() < 3 {
        return Err(Error::Parse("trace header must be index,phase,coord_0,...".into()));
    }
    let mut sums = Vec::new();
    let mut phases = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("").trim();
        let index: usize = field(0).parse().map_err(|_| Error::Parse(format!("row {}: bad index", row + 1)))?;
        if index != row {
            return Err(Error::Parse(format!("row {}: index {index} out of sequence", row + 1)));
        }
        phases.push(field(1).parse().map_err(|_| Error::Parse(format!("row {}: bad phase", row + 1)))?);
        let coords = (2..rec.len())
            .map(|i| field(i).parse::<f64>().map_err(|_| Error::Parse(format!("row {}: bad coordinate", row + 1))))
            .collect::<Result<Vec<_>>>()?;
        sums.push(Point::float(&coords));
    }
    walk_from_phases(sums, &phases, norm)
}

/// Reads a JSON-lines trace written by [`write_trace_jsonl`].
pub fn read_trace_jsonl<V: TraceVector, R: BufRead>(input: R, norm: NormKind) -> Result<Walk<V>> {
    let mut sums = Vec::new();
    let mut phases = Vec::new();
    for (row, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line)?;
        let index = v.get("index").and_then(Value::as_u64);
        if index != Some(sums.len() as u64) {
            return Err(Error::Parse(format!("line {}: index out of sequence", row + 1)));
        }
        let phase = v
            .get("phase")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse(format!("line {}: missing phase", row + 1)))?;
        phases.push(phase as usize);
        sums.push(V::from_json(&v)?);
    }
    walk_from_phases(sums, &phases, norm)
}

/// Reads a point sample from CSV: one point per row, every column numeric.
/// A header row is skipped when present; trace files (with `index,phase`
/// columns) are accepted and those columns dropped.
pub fn read_sample_csv<R: std::io::Read>(input: R) -> Result<Vec<Point>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut points = Vec::new();
    let mut skip = 0;
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        if row == 0 && rec.get(0).is_some_and(|f| f.trim().parse::<f64>().is_err()) {
            if rec.get(0).map(str::trim) == Some("index") {
                skip = 2;
            }
            continue;
        }
        let coords = rec
            .iter()
            .skip(skip)
            .map(|f| f.trim().parse::<f64>().map_err(|_| Error::Parse(format!("row {}: bad number {f:?}", row + 1))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = points.first().map(|p: &Point| p.dim()) {
            if first != coords.len() {
                return Err(Error::DimensionMismatch { expected: first, got: coords.len() });
            }
        }
        points.push(Point::float(&coords));
    }
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(points)
}

/// Estimate report `{resolution, window, points, hit_counts, verdicts}`.
pub fn estimate_report<V: TraceVector>(est: &LimitEstimate<V>, verdicts: Map<String, Value>) -> Value {
    json!({
        "resolution": est.resolution,
        "window": [est.window.0, est.window.1],
        "points": est.points.iter().map(TraceVector::to_value).collect::<Vec<_>>(),
        "hit_counts": est.hit_counts,
        "verdicts": Value::Object(verdicts),
    })
}

/// Provenance written next to every output.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    pub seed: u64,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: Vec<String>, seed: u64, outputs: Vec<String>) -> Self {
        Manifest {
            tool: "serwalk",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            outputs,
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Reads a list of dense vectors from JSON: either an array of rows or an
/// object with a `vectors` array.
pub fn read_vectors_json(text: &str) -> Result<Vec<Vec<f64>>> {
    let v: Value = serde_json::from_str(text)?;
    let rows = match &v {
        Value::Array(a) => a,
        Value::Object(o) => o
            .get("vectors")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("expected a `vectors` array".into()))?,
        _ => return Err(Error::Parse("expected an array of vectors".into())),
    };
    let out = rows
        .iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| Error::Parse("vector is not an array".into()))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| Error::Parse("vector entry is not a number".into())))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(out)
}

/// Writes sparse vectors as dense JSON rows `{"dim":d,"vectors":[[...]]}`
/// with exact decimals.
pub fn write_vectors_json<W: Write>(vectors: &[SparseVec], mut out: W) -> Result<()> {
    let dim = vectors.iter().map(|v| v.dense_len()).max().unwrap_or(0);
    let zero = Scalar::Exact(Dyadic::ZERO);
    let rows: Vec<String> = vectors
        .iter()
        .map(|v| {
            let cells: Vec<String> = (1..=dim)
                .map(|i| {
                    let x = v.get(i);
                    if x.is_zero() { zero.render() } else { x.render() }
                })
                .collect();
            format!("[{}]", cells.join(","))
        })
        .collect();
    writeln!(out, "{{\"dim\":{dim},\"vectors\":[{}]}}", rows.join(","))?;
    Ok(())
}
