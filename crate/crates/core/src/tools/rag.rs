//! T2: lexical retrieval over a bundled documentation corpus.
//!
//! Chunks are split at markdown headings and scored by cosine similarity of
//! raw term-frequency vectors (lowercased alphanumeric tokens, no stop-word
//! removal). Retrieval quality is deliberately simple; what matters is that
//! the agent picks this tool for documentation questions.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Tool, ToolArgs, ToolContext, ToolResult};
use crate::domain::{FieldKind, InputField, ToolId, ToolSpec};

pub const DEFAULT_K: usize = 3;
pub const LOW_CONFIDENCE: &str = "low confidence: no chunk shares a term with the query";

const BUNDLED: [(&str, &str); 5] = [
    ("installing-operator", include_str!("../../resources/docs/installing-operator.md")),
    ("data-science-projects", include_str!("../../resources/docs/data-science-projects.md")),
    ("workbenches", include_str!("../../resources/docs/workbenches.md")),
    ("model-serving", include_str!("../../resources/docs/model-serving.md")),
    ("pipelines", include_str!("../../resources/docs/pipelines.md")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub id: String,
    pub score: f64,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    chunks: Vec<Chunk>,
    vectors: Vec<HashMap<String, f64>>,
}

pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

fn term_frequencies(text: &str) -> HashMap<String, f64> {
    let mut tf = HashMap::new();
    for tok in tokenize(text) {
        *tf.entry(tok).or_insert(0.0) += 1.0;
    }
    tf
}

fn norm(v: &HashMap<String, f64>) -> f64 {
    v.values().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn cosine(a: &HashMap<String, f64>, b: &HashMap<String, f64>) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: f64 = small.iter().filter_map(|(k, x)| large.get(k).map(|y| x * y)).sum();
    let n = norm(a) * norm(b);
    if n == 0.0 {
        0.0
    } else {
        dot / n
    }
}

/// Splits a markdown document into chunks, starting a new chunk at every
/// heading line. Blank chunks are dropped.
pub fn split_markdown(stem: &str, text: &str) -> Vec<Chunk> {
    let mut parts: Vec<String> = Vec::new();
    let mut current = String::new();
    for line in text.lines() {
        if line.starts_with('#') && !current.trim().is_empty() {
            parts.push(std::mem::take(&mut current));
        }
        current.push_str(line);
        current.push('\n');
    }
    parts.push(current);
    parts
        .into_iter()
        .map(|p| p.trim().to_string())
        .filter(|p| !p.is_empty())
        .enumerate()
        .map(|(i, text)| Chunk {
            id: format!("{stem}#{i}"),
            text,
        })
        .collect()
}

impl Corpus {
    pub fn from_chunks(chunks: Vec<Chunk>) -> Corpus {
        let vectors = chunks.iter().map(|c| term_frequencies(&c.text)).collect();
        Corpus { chunks, vectors }
    }

    /// `(stem, markdown)` pairs.
    pub fn from_documents<'a>(docs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Corpus {
        Corpus::from_chunks(docs.into_iter().flat_map(|(s, t)| split_markdown(s, t)).collect())
    }

    pub fn bundled() -> Corpus {
        Corpus::from_documents(BUNDLED)
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    /// Top-`k` chunks by score (descending, ties by id); `k` is clamped to
    /// the corpus size.
    pub fn search(&self, query: &str, k: usize) -> Result<Vec<Hit>, String> {
        if self.chunks.is_empty() {
            return Err("documentation corpus is empty".into());
        }
        let q = term_frequencies(query);
        let mut scored: Vec<(f64, &Chunk)> = self
            .chunks
            .iter()
            .zip(&self.vectors)
            .map(|(c, v)| (cosine(&q, v), c))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.id.cmp(&b.1.id)));
        Ok(scored
            .into_iter()
            .take(k.max(1).min(self.chunks.len()))
            .map(|(score, c)| Hit {
                id: c.id.clone(),
                score,
                text: c.text.clone(),
            })
            .collect())
    }
}

/// Hits formatted as the Observation text.
pub fn render_hits(hits: &[Hit]) -> String {
    let mut out = String::new();
    if hits.iter().all(|h| h.score == 0.0) {
        out.push_str(LOW_CONFIDENCE);
        out.push_str("\n\n");
    }
    let blocks: Vec<String> = hits
        .iter()
        .map(|h| format!("[{}] (score {:.3})\n{}", h.id, h.score, h.text))
        .collect();
    out.push_str(&blocks.join("\n\n"));
    out
}

/// T2.
pub struct RagTool {
    spec: ToolSpec,
    corpus: Arc<Corpus>,
}

impl RagTool {
    pub fn new(corpus: Arc<Corpus>) -> Self {
        RagTool {
            spec: ToolSpec {
                tool_id: ToolId::T2,
                action_name: "Search_OpenShift_AI_Documentation".into(),
                description: "Searches the Red Hat OpenShift AI operator documentation and returns the most relevant passages for a question about how to install, configure or use OpenShift AI.".into(),
                inputs: vec![
                    InputField::required("query", FieldKind::String),
                    InputField::optional("k", FieldKind::Integer),
                ],
                output_doc: "matching documentation passages".into(),
            },
            corpus,
        }
    }
}

impl Tool for RagTool {
    fn spec(&self) -> &ToolSpec {
        &self.spec
    }

    fn call(&self, args: &ToolArgs, _ctx: &ToolContext<'_>) -> ToolResult {
        let query = match args.req_str("query") {
            Ok(q) => q,
            Err(e) => return ToolResult::error(e.to_string()),
        };
        let k = match args.integer("k") {
            Ok(None) => DEFAULT_K,
            Ok(Some(k)) if k >= 1 => k as usize,
            Ok(Some(_)) => return ToolResult::error("k must be at least 1"),
            Err(e) => return ToolResult::error(e.to_string()),
        };
        match self.corpus.search(&query, k) {
            Ok(hits) => {
                let structured = serde_json::to_value(&hits).expect("serializable");
                ToolResult::ok(render_hits(&hits), structured)
            }
            Err(e) => ToolResult::error(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_science_project_question_hits_the_procedure() {
        let corpus = Corpus::bundled();
        let phrase: Vec<_> = corpus
            .chunks()
            .iter()
            .filter(|c| c.text.contains("Data Science Project"))
            .map(|c| c.id.clone())
            .collect();
        assert_eq!(phrase, vec!["data-science-projects#0"]);
        let hits = corpus.search("How can I create a Data Science Project?", 3).unwrap();
        assert_eq!(hits[0].id, "data-science-projects#0");
        assert!(hits[0].text.contains("Click Create data science project."));
        // Independent check: recompute the ranking with a naive scorer.
        let q: Vec<String> = tokenize("How can I create a Data Science Project?").collect();
        let naive = |text: &str| {
            let d: Vec<String> = tokenize(text).collect();
            let mut vocab: Vec<&String> = q.iter().chain(d.iter()).collect();
            vocab.sort();
            vocab.dedup();
            let count = |v: &Vec<String>, w: &String| v.iter().filter(|x| *x == w).count() as f64;
            let dot: f64 = vocab.iter().map(|w| count(&q, w) * count(&d, w)).sum();
            let nq: f64 = vocab.iter().map(|w| count(&q, w).powi(2)).sum::<f64>().sqrt();
            let nd: f64 = vocab.iter().map(|w| count(&d, w).powi(2)).sum::<f64>().sqrt();
            dot / (nq * nd)
        };
        let best = corpus
            .chunks()
            .iter()
            .max_by(|a, b| naive(&a.text).total_cmp(&naive(&b.text)))
            .unwrap();
        assert_eq!(best.id, hits[0].id);
        assert!((naive(&best.text) - hits[0].score).abs() < 1e-12);
    }

    #[test]
    fn unknown_terms_give_low_confidence_but_deterministic_results() {
        let corpus = Corpus::bundled();
        let hits = corpus.search("zzzqqq xxyyzz", 3).unwrap();
        assert!(hits.iter().all(|h| h.score == 0.0));
        let mut ids: Vec<_> = corpus.chunks().iter().map(|c| c.id.clone()).collect();
        ids.sort();
        assert_eq!(hits.iter().map(|h| h.id.clone()).collect::<Vec<_>>(), ids[..3].to_vec());
        assert!(render_hits(&hits).starts_with(LOW_CONFIDENCE));
    }

    #[test]
    fn k_clamped_and_empty_corpus_errors() {
        let corpus = Corpus::bundled();
        assert_eq!(corpus.search("operator", 1000).unwrap().len(), corpus.len());
        assert!(Corpus::from_chunks(vec![]).search("x", 3).is_err());
    }

    #[test]
    fn headings_start_chunks() {
        let chunks = split_markdown("d", "# A\nalpha\n## B\nbeta\n\n# C\n");
        let ids: Vec<_> = chunks.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, vec!["d#0", "d#1", "d#2"]);
        assert_eq!(chunks[1].text, "## B\nbeta");
    }
}
