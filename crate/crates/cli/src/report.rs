//! Result records and their JSON-lines / CSV encodings.

use std::io::{self, Write};

use serde::{Serialize, Serializer};

use locsums::expsums::value::fmt_sig;
use locsums::hhat::{BoundCertificate, HhatQuery, HhatValue, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Twelve significant digits on the wire.
pub fn sig<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(fmt_sig(*x).parse().expect("fmt_sig output parses"))
}

pub fn sig_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => sig(v, s),
        None => s.serialize_none(),
    }
}

/// One line of output. `re`, `im` are `gamma hat H` (the root number
/// `gamma` of a supercuspidal prime is not computed); `abs` is `|hat H|`.
#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub query: String,
    pub branch: String,
    #[serde(serialize_with = "sig")]
    pub re: f64,
    #[serde(serialize_with = "sig")]
    pub im: f64,
    #[serde(serialize_with = "sig")]
    pub abs: f64,
    #[serde(serialize_with = "sig_opt")]
    pub bound: Option<f64>,
    #[serde(serialize_with = "sig_opt")]
    pub slack: Option<f64>,
    pub verdict: Option<Verdict>,
}

impl Record {
    fn base(q: &HhatQuery, v: &HhatValue) -> Self {
        let z = v.tilde_value() / (v.p as f64).powf(v.d as f64 / 2.0);
        Record {
            query: q.label(),
            branch: v.branch.tag().to_string(),
            re: z.re,
            im: z.im,
            abs: v.abs(),
            bound: None,
            slack: None,
            verdict: None,
        }
    }

    /// A value with its tightest certificate, if any applies.
    pub fn value(q: &HhatQuery, v: &HhatValue, certs: &[BoundCertificate]) -> Self {
        let mut r = Record::base(q, v);
        if let Some(c) = certs.iter().min_by(|a, b| a.bound.total_cmp(&b.bound)) {
            r.bound = Some(c.bound);
            r.slack = Some(c.slack);
            // any violated certificate marks the value
            r.verdict = Some(if certs.iter().all(|c| c.ok()) {
                Verdict::Ok
            } else {
                Verdict::Violated
            });
        }
        r
    }

    /// One record per certificate; the branch column names the bound.
    pub fn certificate(q: &HhatQuery, v: &HhatValue, c: &BoundCertificate) -> Self {
        let mut r = Record::base(q, v);
        r.branch = format!("{}:{}", v.branch.tag(), c.kind.tag());
        r.bound = Some(c.bound);
        r.slack = Some(c.slack);
        r.verdict = Some(c.verdict);
        r
    }

    pub fn violated(&self) -> bool {
        self.verdict == Some(Verdict::Violated)
    }
}

/// JSON lines, or CSV with a header even when `rows` is empty.
pub fn emit<T: Serialize, W: Write>(rows: &[T], header: &[&str], format: Format, out: W) -> io::Result<()> {
    match format {
        Format::Json => {
            let mut out = io::BufWriter::new(out);
            for r in rows {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
            out.flush()
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            if rows.is_empty() {
                w.write_record(header)?;
            }
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()
        }
    }
}

pub const RECORD_HEADER: &[&str] = &["query", "branch", "re", "im", "abs", "bound", "slack", "verdict"];
