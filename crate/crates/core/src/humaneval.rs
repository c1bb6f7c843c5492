//! Blind pairwise headline comparison: task export and vote aggregation.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Article;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Choice {
    Model,
    Human,
    Draw,
}

impl Choice {
    pub fn as_str(self) -> &'static str {
        match self {
            Choice::Model => "MODEL",
            Choice::Human => "HUMAN",
            Choice::Draw => "DRAW",
        }
    }

    /// MODEL and HUMAN exchanged, DRAW unchanged.
    pub fn swapped(self) -> Self {
        match self {
            Choice::Model => Choice::Human,
            Choice::Human => Choice::Model,
            Choice::Draw => Choice::Draw,
        }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Choice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "MODEL" => Ok(Choice::Model),
            "HUMAN" => Ok(Choice::Human),
            "DRAW" => Ok(Choice::Draw),
            other => Err(Error::InvalidChoice(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub item_id: String,
    pub annotator_id: String,
    pub choice: Choice,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub item_id: String,
    pub article_text: String,
    pub headline_left: String,
    pub headline_right: String,
}

/// Which system produced the left headline of a task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyEntry {
    pub item_id: String,
    pub left_origin: Choice,
}

fn tsv_field(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Pairs each reference headline with the model headline in seeded-random
/// left/right order. The returned key is the only place origins are recorded.
pub fn export_tasks(
    articles: &[Article],
    model_headlines: &[String],
    seed: u64,
) -> Result<(Vec<Task>, Vec<KeyEntry>)> {
    if articles.len() != model_headlines.len() {
        return Err(Error::Misaligned {
            left: articles.len(),
            right: model_headlines.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tasks = Vec::with_capacity(articles.len());
    let mut key = Vec::with_capacity(articles.len());
    for (article, model) in articles.iter().zip(model_headlines) {
        let model_left: bool = rng.random();
        let (left, right, left_origin) = if model_left {
            (model.clone(), article.title.clone(), Choice::Model)
        } else {
            (article.title.clone(), model.clone(), Choice::Human)
        };
        tasks.push(Task {
            item_id: article.id.clone(),
            article_text: article.text.clone(),
            headline_left: left,
            headline_right: right,
        });
        key.push(KeyEntry {
            item_id: article.id.clone(),
            left_origin,
        });
    }
    Ok((tasks, key))
}

/// Recovers (model headline, human headline) per item from a task and its key.
pub fn unblind(tasks: &[Task], key: &[KeyEntry]) -> Result<Vec<(String, String)>> {
    let lookup: BTreeMap<&str, Choice> = key
        .iter()
        .map(|k| (k.item_id.as_str(), k.left_origin))
        .collect();
    tasks
        .iter()
        .map(|t| match lookup.get(t.item_id.as_str()) {
            Some(Choice::Model) => Ok((t.headline_left.clone(), t.headline_right.clone())),
            Some(Choice::Human) => Ok((t.headline_right.clone(), t.headline_left.clone())),
            _ => Err(Error::Config(format!("no key entry for item `{}`", t.item_id))),
        })
        .collect()
}

pub fn write_tasks(path: impl AsRef<Path>, tasks: &[Task]) -> Result<()> {
    let mut body = String::from("item_id\tarticle_text\theadline_left\theadline_right\n");
    for t in tasks {
        body.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            tsv_field(&t.item_id),
            tsv_field(&t.article_text),
            tsv_field(&t.headline_left),
            tsv_field(&t.headline_right)
        ));
    }
    write_file(path.as_ref(), &body)
}

pub fn write_key(path: impl AsRef<Path>, key: &[KeyEntry]) -> Result<()> {
    let mut body = String::from("item_id\tleft_origin\n");
    for k in key {
        body.push_str(&format!("{}\t{}\n", tsv_field(&k.item_id), k.left_origin));
    }
    write_file(path.as_ref(), &body)
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
}

fn read_rows(path: &Path, columns: usize) -> Result<Vec<Vec<String>>> {
    let data = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (idx, line) in data.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(String::from).collect();
        if fields.len() != columns {
            return Err(Error::Malformed {
                line: idx + 1,
                reason: format!("expected {columns} tab-separated fields, got {}", fields.len()),
            });
        }
        rows.push(fields);
    }
    Ok(rows)
}

pub fn read_tasks(path: impl AsRef<Path>) -> Result<Vec<Task>> {
    Ok(read_rows(path.as_ref(), 4)?
        .into_iter()
        .map(|mut f| Task {
            headline_right: f.pop().unwrap(),
            headline_left: f.pop().unwrap(),
            article_text: f.pop().unwrap(),
            item_id: f.pop().unwrap(),
        })
        .collect())
}

pub fn read_key(path: impl AsRef<Path>) -> Result<Vec<KeyEntry>> {
    read_rows(path.as_ref(), 2)?
        .into_iter()
        .map(|f| {
            Ok(KeyEntry {
                left_origin: f[1].parse()?,
                item_id: f[0].clone(),
            })
        })
        .collect()
}

/// Reads a votes TSV with header `item_id annotator_id choice`.
pub fn read_votes(path: impl AsRef<Path>) -> Result<Vec<VoteRecord>> {
    read_rows(path.as_ref(), 3)?
        .into_iter()
        .map(|f| {
            Ok(VoteRecord {
                choice: f[2].parse()?,
                item_id: f[0].clone(),
                annotator_id: f[1].clone(),
            })
        })
        .collect()
}

/// How an item's votes turn into a single outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "threshold")]
pub enum OutcomeRule {
    /// Most-voted label; any tie for first place is a draw.
    Plurality,
    /// MODEL or HUMAN only with at least this many votes, otherwise a draw.
    Threshold(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub item_id: String,
    pub model: usize,
    pub human: usize,
    pub draw: usize,
    pub outcome: Choice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub n_items: usize,
    pub model_win_rate: f64,
    pub draw_rate: f64,
    pub human_win_rate: f64,
    pub model_supermajority_rate: f64,
    pub human_supermajority_rate: f64,
    /// Vote-level shares pooled over all included items (MODEL, DRAW, HUMAN).
    pub pooled_model_rate: f64,
    pub pooled_draw_rate: f64,
    pub pooled_human_rate: f64,
    pub quorum: usize,
    pub supermajority: usize,
    pub rule: OutcomeRule,
    /// Items left out because their vote count differs from the quorum.
    pub excluded: Vec<(String, usize)>,
    pub items: Vec<ItemOutcome>,
}

impl EvalSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

fn decide(model: usize, human: usize, draw: usize, rule: OutcomeRule) -> Choice {
    match rule {
        OutcomeRule::Plurality => {
            let top = model.max(human).max(draw);
            let leaders = [model, human, draw].iter().filter(|&&c| c == top).count();
            if leaders > 1 || draw == top {
                Choice::Draw
            } else if model == top {
                Choice::Model
            } else {
                Choice::Human
            }
        }
        OutcomeRule::Threshold(k) => {
            if model >= k && model > human {
                Choice::Model
            } else if human >= k && human > model {
                Choice::Human
            } else {
                Choice::Draw
            }
        }
    }
}

/// Per-item outcomes and win/draw/supermajority rates over items that have
/// exactly `quorum` votes. Items are reported in ascending id order.
pub fn aggregate(
    votes: &[VoteRecord],
    quorum: usize,
    supermajority: usize,
    rule: OutcomeRule,
) -> Result<EvalSummary> {
    let mut seen = HashSet::new();
    let mut tallies: BTreeMap<&str, [usize; 3]> = BTreeMap::new();
    for v in votes {
        if !seen.insert((v.item_id.as_str(), v.annotator_id.as_str())) {
            return Err(Error::DuplicateVote {
                item: v.item_id.clone(),
                annotator: v.annotator_id.clone(),
            });
        }
        let slot = match v.choice {
            Choice::Model => 0,
            Choice::Human => 1,
            Choice::Draw => 2,
        };
        tallies.entry(v.item_id.as_str()).or_default()[slot] += 1;
    }

    let mut items = Vec::new();
    let mut excluded = Vec::new();
    for (id, [model, human, draw]) in tallies {
        let total = model + human + draw;
        if total != quorum {
            excluded.push((id.to_string(), total));
            continue;
        }
        items.push(ItemOutcome {
            item_id: id.to_string(),
            model,
            human,
            draw,
            outcome: decide(model, human, draw, rule),
        });
    }

    let n = items.len();
    let share = |count: usize| if n == 0 { 0.0 } else { count as f64 / n as f64 };
    let count = |c: Choice| items.iter().filter(|i| i.outcome == c).count();
    let votes_total = (n * quorum) as f64;
    let pooled = |f: fn(&ItemOutcome) -> usize| {
        if n == 0 {
            0.0
        } else {
            items.iter().map(f).sum::<usize>() as f64 / votes_total
        }
    };
    Ok(EvalSummary {
        n_items: n,
        model_win_rate: share(count(Choice::Model)),
        draw_rate: share(count(Choice::Draw)),
        human_win_rate: share(count(Choice::Human)),
        model_supermajority_rate: share(items.iter().filter(|i| i.model >= supermajority).count()),
        human_supermajority_rate: share(items.iter().filter(|i| i.human >= supermajority).count()),
        pooled_model_rate: pooled(|i| i.model),
        pooled_draw_rate: pooled(|i| i.draw),
        pooled_human_rate: pooled(|i| i.human),
        quorum,
        supermajority,
        rule,
        excluded,
        items,
    })
}
