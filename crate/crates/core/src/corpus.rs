//! Credential-corpus pipeline.
//!
//! Each record is treated as a distinct user with a deterministic strategy
//! (a point distribution on their password). The omniscient environment
//! weights every user by `1/N`; an attribute abstraction groups users into
//! blocks by attribute value. Hypers are held sparsely so corpora far
//! larger than the dense representation allows can still be analyzed;
//! dense conversions exist for cross-checking on small corpora.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::IndexedRandom;
use serde::Serialize;
use serde_json::json;

use crate::abstraction::{apply_aggregation, AggregationMatrix};
use crate::dist::{Distribution, SecretSpace};
use crate::envanalysis::bits;
use crate::error::{QifError, Result};
use crate::hyper::Hyper;
use crate::measures::VulnerabilityMeasure;
use crate::numfmt::{round_json, sig12};
use crate::testkit::rng_from;

/// Block label for records that lack a value for the attribute.
pub const UNKNOWN_BLOCK: &str = "unknown";

pub const FIRST_YEAR: u32 = 1917;
pub const LAST_YEAR: u32 = 1995;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusRecord {
    pub secret: String,
    pub attributes: BTreeMap<String, String>,
}

#[derive(Clone, Debug)]
pub struct CorpusSchema {
    pub secret_col: String,
    pub attr_cols: Vec<String>,
    /// `None` autodetects comma or tab from the header line.
    pub delimiter: Option<u8>,
    pub max_bad_rows: usize,
    /// Without a header every line is one secret and there are no
    /// attributes.
    pub has_header: bool,
}

impl CorpusSchema {
    pub fn new(secret_col: &str, attr_cols: &[&str]) -> Self {
        CorpusSchema {
            secret_col: secret_col.to_string(),
            attr_cols: attr_cols.iter().map(|s| s.to_string()).collect(),
            delimiter: None,
            max_bad_rows: usize::MAX,
            has_header: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Ingested {
    pub records: Vec<CorpusRecord>,
    /// Rows with the wrong number of fields or an empty secret.
    pub malformed: usize,
}

pub fn detect_delimiter(header: &str) -> u8 {
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

pub fn ingest(path: impl AsRef<Path>, schema: &CorpusSchema) -> Result<Ingested> {
    let mut reader = BufReader::new(File::open(path)?);
    if !schema.has_header {
        return ingest_lines(reader, schema);
    }
    let delimiter = match schema.delimiter {
        Some(d) => d,
        None => detect_delimiter(std::str::from_utf8(reader.fill_buf()?).unwrap_or("")),
    };
    ingest_reader(reader, schema, delimiter)
}

/// One secret per line. Empty and non-UTF-8 lines are malformed.
pub fn ingest_lines<R: BufRead>(reader: R, schema: &CorpusSchema) -> Result<Ingested> {
    let mut records = Vec::new();
    let mut malformed = 0;
    for line in reader.split(b'\n') {
        let mut line = line?;
        if line.last() == Some(&b'\r') {
            line.pop();
        }
        match String::from_utf8(line) {
            Ok(secret) if !secret.is_empty() => records.push(CorpusRecord {
                secret,
                attributes: BTreeMap::new(),
            }),
            _ => {
                malformed += 1;
                if malformed > schema.max_bad_rows {
                    return Err(QifError::TooManyMalformed {
                        bad: malformed,
                        limit: schema.max_bad_rows,
                    });
                }
            }
        }
    }
    Ok(Ingested { records, malformed })
}

/// Single streaming pass. Empty attribute values are treated as missing.
pub fn ingest_reader<R: Read>(reader: R, schema: &CorpusSchema, delimiter: u8) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| QifError::SchemaMismatch(format!("no column `{name}` in header")))
    };
    let secret_idx = col(&schema.secret_col)?;
    let attr_idx = schema
        .attr_cols
        .iter()
        .map(|a| Ok((a.clone(), col(a)?)))
        .collect::<Result<Vec<_>>>()?;
    let width = headers.len();

    let mut records = Vec::new();
    let mut malformed = 0;
    for row in rdr.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) if matches!(e.kind(), csv::ErrorKind::Utf8 { .. }) => {
                malformed += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let secret = row.get(secret_idx).unwrap_or("");
        if row.len() != width || secret.is_empty() {
            malformed += 1;
            if malformed > schema.max_bad_rows {
                return Err(QifError::TooManyMalformed {
                    bad: malformed,
                    limit: schema.max_bad_rows,
                });
            }
            continue;
        }
        let attributes = attr_idx
            .iter()
            .filter_map(|(name, i)| {
                let v = row.get(*i).unwrap_or("").trim();
                (!v.is_empty()).then(|| (name.clone(), v.to_string()))
            })
            .collect();
        records.push(CorpusRecord {
            secret: secret.to_string(),
            attributes,
        });
    }
    Ok(Ingested { records, malformed })
}

/// Leftmost four-digit substring naming a year in 1917..=1995.
pub fn extract_year(secret: &str) -> Option<&str> {
    let b = secret.as_bytes();
    (0..b.len().saturating_sub(3)).find_map(|i| {
        let w = &b[i..i + 4];
        if w.iter().all(u8::is_ascii_digit) {
            let y: u32 = std::str::from_utf8(w).ok()?.parse().ok()?;
            ((FIRST_YEAR..=LAST_YEAR).contains(&y)).then(|| &secret[i..i + 4])
        } else {
            None
        }
    })
}

/// Keeps only records whose secret contains a year and stores that year
/// under `attribute`.
pub fn attach_year(records: Vec<CorpusRecord>, attribute: &str) -> Vec<CorpusRecord> {
    records
        .into_iter()
        .filter_map(|mut r| {
            let year = extract_year(&r.secret)?.to_string();
            r.attributes.insert(attribute.to_string(), year);
            Some(r)
        })
        .collect()
}

/// Assigns each record a value drawn uniformly from `values`,
/// independently of its secret.
pub fn attach_random(records: &mut [CorpusRecord], attribute: &str, values: &[&str], seed: u64) {
    let mut rng = rng_from(seed);
    for r in records {
        let v = values.choose(&mut rng).expect("non-empty value set");
        r.attributes.insert(attribute.to_string(), v.to_string());
    }
}

/// A hyper with sparse inners: `(secret index, probability)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseHyper {
    pub outer: Vec<f64>,
    pub inners: Vec<Vec<(usize, f64)>>,
}

impl SparseHyper {
    pub fn to_dense(&self, space: &SecretSpace) -> Result<Hyper> {
        let inners = self
            .inners
            .iter()
            .map(|inner| {
                let mut p = vec![0.0; space.len()];
                for &(i, v) in inner {
                    p[i] += v;
                }
                Distribution::new(space.clone(), p)
            })
            .collect::<Result<Vec<_>>>()?;
        Hyper::new(space.clone(), inners, self.outer.clone())
    }

    pub fn prior(&self, n: usize) -> Vec<f64> {
        let mut p = vec![0.0; n];
        for (w, inner) in self.outer.iter().zip(&self.inners) {
            for &(i, v) in inner {
                p[i] += w * v;
            }
        }
        p
    }

    pub fn environmental(&self, measure: &VulnerabilityMeasure) -> f64 {
        self.outer
            .iter()
            .zip(&self.inners)
            .map(|(w, inner)| w * sparse_vulnerability(measure, inner))
            .sum()
    }
}

fn sparse_vulnerability(measure: &VulnerabilityMeasure, inner: &[(usize, f64)]) -> f64 {
    match measure {
        VulnerabilityMeasure::Bayes => inner.iter().map(|&(_, v)| v).fold(0.0, f64::max),
        VulnerabilityMeasure::Gain(g) => g
            .gain()
            .rows()
            .into_iter()
            .map(|row| inner.iter().map(|&(i, v)| row[i] * v).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

/// An attribute abstraction: a deterministic aggregation of users into
/// blocks.
#[derive(Clone, Debug)]
pub struct Abstraction {
    pub name: String,
    pub block_labels: Vec<String>,
    /// Block of each record.
    pub assignment: Vec<usize>,
    pub hyper: SparseHyper,
}

impl Abstraction {
    pub fn aggregation_matrix(&self) -> Result<AggregationMatrix> {
        AggregationMatrix::deterministic(&self.assignment, self.block_labels.len())
    }
}

#[derive(Clone, Debug)]
pub struct EnvironmentBundle {
    space: SecretSpace,
    records: Vec<CorpusRecord>,
    secret_of: Vec<usize>,
    counts: Vec<u64>,
    attributes: Vec<String>,
    abstractions: Vec<Abstraction>,
}

/// Seeds a bundle with the omniscient environment: one point strategy per
/// record. Attribute names are collected from the records.
pub fn build_omniscient(records: Vec<CorpusRecord>) -> Result<EnvironmentBundle> {
    let mut attributes: Vec<String> = records
        .iter()
        .flat_map(|r| r.attributes.keys().cloned())
        .collect();
    attributes.sort();
    attributes.dedup();
    EnvironmentBundle::new(records, attributes)
}

impl EnvironmentBundle {
    pub fn new(records: Vec<CorpusRecord>, attributes: Vec<String>) -> Result<Self> {
        if records.is_empty() {
            return Err(QifError::EmptyCorpus);
        }
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut labels: Vec<String> = Vec::new();
        let mut secret_of = Vec::with_capacity(records.len());
        for r in &records {
            let next = labels.len();
            let i = *index.entry(r.secret.as_str()).or_insert_with(|| {
                labels.push(r.secret.clone());
                next
            });
            secret_of.push(i);
        }
        let mut counts = vec![0u64; labels.len()];
        for &i in &secret_of {
            counts[i] += 1;
        }
        drop(index);
        Ok(EnvironmentBundle {
            space: SecretSpace::new(labels)?,
            records,
            secret_of,
            counts,
            attributes,
            abstractions: Vec::new(),
        })
    }

    pub fn space(&self) -> &SecretSpace {
        &self.space
    }

    pub fn records(&self) -> &[CorpusRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Occurrences of each distinct secret, in space order.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn abstractions(&self) -> &[Abstraction] {
        &self.abstractions
    }

    pub fn prior(&self) -> Distribution {
        let n = self.len() as f64;
        let p = self.counts.iter().map(|&c| c as f64 / n).collect();
        Distribution::new(self.space.clone(), p).expect("relative frequencies")
    }

    pub fn omniscient(&self) -> SparseHyper {
        let w = 1.0 / self.len() as f64;
        SparseHyper {
            outer: vec![w; self.len()],
            inners: self.secret_of.iter().map(|&i| vec![(i, 1.0)]).collect(),
        }
    }

    /// Dense omniscient hyper with `N` point inners. Memory is `N` times
    /// the number of distinct secrets.
    pub fn omniscient_dense(&self) -> Hyper {
        let w = 1.0 / self.len() as f64;
        let inners = self
            .secret_of
            .iter()
            .map(|&i| Distribution::point_at(self.space.clone(), i))
            .collect();
        Hyper::new(self.space.clone(), inners, vec![w; self.len()]).expect("uniform outer")
    }

    /// Groups users into blocks by the value of `attribute`. Blocks are
    /// ordered by value; users without a value go to [`UNKNOWN_BLOCK`].
    pub fn abstract_by(&self, attribute: &str) -> Result<Abstraction> {
        if !self.attributes.iter().any(|a| a == attribute) {
            return Err(QifError::UnknownAttribute(attribute.to_string()));
        }
        let values: Vec<&str> = self
            .records
            .iter()
            .map(|r| r.attributes.get(attribute).map_or(UNKNOWN_BLOCK, String::as_str))
            .collect();
        let mut block_of: BTreeMap<&str, usize> = values.iter().map(|&v| (v, 0)).collect();
        for (k, slot) in block_of.values_mut().enumerate() {
            *slot = k;
        }
        let block_labels: Vec<String> = block_of.keys().map(|s| s.to_string()).collect();
        let assignment: Vec<usize> = values.iter().map(|v| block_of[v]).collect();

        let mut block_counts: Vec<HashMap<usize, u64>> = vec![HashMap::new(); block_labels.len()];
        let mut sizes = vec![0u64; block_labels.len()];
        for (&b, &s) in assignment.iter().zip(&self.secret_of) {
            *block_counts[b].entry(s).or_default() += 1;
            sizes[b] += 1;
        }
        let n = self.len() as f64;
        let outer = sizes.iter().map(|&c| c as f64 / n).collect();
        let inners = block_counts
            .into_iter()
            .zip(&sizes)
            .map(|(counts, &size)| {
                let mut v: Vec<(usize, f64)> = counts
                    .into_iter()
                    .map(|(s, c)| (s, c as f64 / size as f64))
                    .collect();
                v.sort_unstable_by_key(|&(s, _)| s);
                v
            })
            .collect();
        Ok(Abstraction {
            name: attribute.to_string(),
            block_labels,
            assignment,
            hyper: SparseHyper { outer, inners },
        })
    }

    /// Computes and stores the abstraction for `attribute`.
    pub fn add_abstraction(&mut self, attribute: &str) -> Result<&Abstraction> {
        let a = self.abstract_by(attribute)?;
        self.abstractions.retain(|x| x.name != attribute);
        self.abstractions.push(a);
        Ok(self.abstractions.last().expect("just pushed"))
    }

    /// Dense `(hyper, aggregation matrix)` of an abstraction, with the hyper
    /// computed by aggregating the dense omniscient environment.
    pub fn dense_abstraction(&self, abstraction: &Abstraction) -> Result<(Hyper, AggregationMatrix)> {
        let a = abstraction.aggregation_matrix()?;
        let h = apply_aggregation(&self.omniscient_dense(), &a)?;
        Ok((h, a))
    }
}

/// Convenience: [`EnvironmentBundle::abstract_by`] in dense form.
pub fn abstract_by(bundle: &EnvironmentBundle, attribute: &str) -> Result<(Hyper, AggregationMatrix)> {
    let a = bundle.abstract_by(attribute)?;
    bundle.dense_abstraction(&a)
}

#[derive(Clone, Copy, Debug)]
pub struct ReportOptions {
    /// Use `V_E = 1` for the omniscient row under Bayes instead of
    /// iterating its point inners.
    pub point_inner_shortcut: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            point_inner_shortcut: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub name: String,
    /// `V(prior)`, identical on every row.
    pub perceived: f64,
    /// `V_E(M)`.
    pub by_strategy: f64,
    /// `V(prior) / V_E(M)`.
    pub by_aggregation: f64,
    /// `V_E(M) / V_E(omniscient)`.
    pub given_abstraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionTable {
    pub measure: String,
    pub records: usize,
    pub distinct_secrets: usize,
    pub rows: Vec<ReportRow>,
}

fn power_cell(v: f64) -> String {
    let b = bits(v);
    format!("2^-{:.3}", if b.abs() < 5e-4 { 0.0 } else { b })
}

impl DecompositionTable {
    pub fn row(&self, name: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Aligned text: powers of two, then the linear values.
    pub fn render(&self) -> String {
        let w = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(11);
        let mut out = String::new();
        out.push_str(&format!(
            "measure {}  records {}  distinct secrets {}\n",
            self.measure, self.records, self.distinct_secrets
        ));
        out.push_str(&format!(
            "{:<w$}  {:>11}   {:>11}   {:>11}\n",
            "abstraction", "V(prior)", "V_E(M)", "V_S(M)"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<w$}  {:>11} = {:>11} x {:>11}\n",
                r.name,
                power_cell(r.perceived),
                power_cell(r.by_strategy),
                power_cell(r.by_aggregation)
            ));
        }
        out.push('\n');
        out.push_str(&format!(
            "{:<w$}  {:>20} {:>20} {:>20} {:>20}\n",
            "abstraction", "perceived", "by_strategy", "by_aggregation", "given_abstraction"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<w$}  {:>20} {:>20} {:>20} {:>20}\n",
                r.name,
                sig12(r.perceived),
                sig12(r.by_strategy),
                sig12(r.by_aggregation),
                sig12(r.given_abstraction)
            ));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<_> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    "name": r.name,
                    "perceived": r.perceived,
                    "by_strategy": r.by_strategy,
                    "by_aggregation": r.by_aggregation,
                    "given_abstraction": r.given_abstraction,
                    "bits": {
                        "perceived": bits(r.perceived),
                        "by_strategy": bits(r.by_strategy),
                        "by_aggregation": bits(r.by_aggregation),
                    },
                })
            })
            .collect();
        let mut v = json!({
            "schema": "hyperqif/1",
            "measure": self.measure,
            "records": self.records,
            "distinct_secrets": self.distinct_secrets,
            "rows": rows,
        });
        round_json(&mut v);
        v
    }
}

/// One row per abstraction: `Omni`, the stored attribute abstractions in
/// insertion order, then `Prior`.
pub fn decomposition_report(
    bundle: &EnvironmentBundle,
    measure: &VulnerabilityMeasure,
    options: ReportOptions,
) -> Result<DecompositionTable> {
    measure.check_space(bundle.space())?;
    let prior = bundle.prior();
    let perceived = measure.vulnerability(&prior)?;
    let omni_v = match measure {
        VulnerabilityMeasure::Bayes if options.point_inner_shortcut => 1.0,
        _ => bundle.omniscient().environmental(measure),
    };
    if omni_v <= 0.0 {
        return Err(QifError::ZeroEnvironmentalVulnerability);
    }
    let mut rows = Vec::new();
    let mut push = |name: &str, env_v: f64| -> Result<()> {
        if env_v <= 0.0 {
            return Err(QifError::ZeroEnvironmentalVulnerability);
        }
        rows.push(ReportRow {
            name: name.to_string(),
            perceived,
            by_strategy: env_v,
            by_aggregation: perceived / env_v,
            given_abstraction: env_v / omni_v,
        });
        Ok(())
    };
    push("Omni", omni_v)?;
    for a in bundle.abstractions() {
        push(&a.name, a.hyper.environmental(measure))?;
    }
    push("Prior", perceived)?;
    Ok(DecompositionTable {
        measure: measure.name().to_string(),
        records: bundle.len(),
        distinct_secrets: bundle.space().len(),
        rows,
    })
}

/// Rank/probability series per strategy, most probable first, at most
/// `top` ranks each. Strategies are the Prior's single inner (`all`) and the
/// blocks of every stored abstraction.
pub fn write_plot_data<W: Write>(bundle: &EnvironmentBundle, top: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["abstraction", "strategy", "rank", "probability"])?;
    let mut series = |abstraction: &str, strategy: &str, mut probs: Vec<f64>| -> Result<()> {
        probs.sort_by(|a, b| b.total_cmp(a));
        for (rank, p) in probs.into_iter().take(top).enumerate() {
            w.write_record([abstraction, strategy, &(rank + 1).to_string(), &sig12(p)])?;
        }
        Ok(())
    };
    series(
        "Prior",
        "all",
        bundle
            .prior()
            .probs()
            .iter()
            .copied()
            .filter(|&p| p > 0.0)
            .collect(),
    )?;
    for a in bundle.abstractions() {
        for (label, inner) in a.block_labels.iter().zip(&a.hyper.inners) {
            series(&a.name, label, inner.iter().map(|&(_, p)| p).collect())?;
        }
    }
    w.flush()?;
    Ok(())
}
