//! Text memories and task templates, parsed from tab-separated files.
//!
//! Corpus lines: `id \t category \t designation \t sentence` (designation
//! `-` when none). Task lines: `id \t phase1_weight \t phase2_weight \t
//! keyword_sets \t query`, where keyword sets are separated by `|` and the
//! tokens within a set by spaces. `#` starts a comment line.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use super::{tokenize, TextError};

pub const BUILTIN_CORPUS: &str = include_str!("../../data/corpus_v1.tsv");
pub const BUILTIN_TASKS: &str = include_str!("../../data/tasks_v1.tsv");

/// Number of memories in an Exp-5 corpus.
pub const CORPUS_SIZE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Geography,
    Python,
    Science,
}

impl FromStr for Category {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "geography" => Ok(Category::Geography),
            "python" => Ok(Category::Python),
            "science" => Ok(Category::Science),
            other => Err(format!("unknown category `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Designation {
    Stale,
    Specialist,
    Hitchhiker,
    Control,
}

impl Designation {
    pub const ALL: [Designation; 4] = [
        Designation::Stale,
        Designation::Specialist,
        Designation::Hitchhiker,
        Designation::Control,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Designation::Stale => "stale",
            Designation::Specialist => "specialist",
            Designation::Hitchhiker => "hitchhiker",
            Designation::Control => "control",
        }
    }
}

impl fmt::Display for Designation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Designation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Designation::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown designation `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextMemory {
    pub id: String,
    pub category: Category,
    pub designation: Option<Designation>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskTemplate {
    pub id: String,
    pub query_text: String,
    pub phase_weights: (f64, f64),
    pub success_keywords: Vec<Vec<String>>,
}

impl TaskTemplate {
    pub fn weight(&self, phase: Phase) -> f64 {
        match phase {
            Phase::One => self.phase_weights.0,
            Phase::Two => self.phase_weights.1,
        }
    }

    /// `true` iff every keyword of at least one set occurs as a whole token
    /// in `tokens`.
    pub fn is_satisfied(&self, tokens: &HashSet<String>) -> bool {
        self.success_keywords
            .iter()
            .any(|set| set.iter().all(|kw| tokens.contains(kw)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    One,
    Two,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub memories: Vec<TextMemory>,
    pub tasks: Vec<TaskTemplate>,
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn parse_err(line: usize, msg: impl Into<String>) -> TextError {
    TextError::Parse { line, msg: msg.into() }
}

pub fn parse_memories(text: &str) -> Result<Vec<TextMemory>, TextError> {
    data_lines(text)
        .map(|(n, line)| {
            let cols: Vec<&str> = line.splitn(4, '\t').collect();
            if cols.len() != 4 {
                return Err(parse_err(n, "expected 4 tab-separated columns"));
            }
            let designation = match cols[2] {
                "-" | "" => None,
                d => Some(d.parse().map_err(|e: String| parse_err(n, e))?),
            };
            Ok(TextMemory {
                id: cols[0].to_owned(),
                category: cols[1].parse().map_err(|e: String| parse_err(n, e))?,
                designation,
                text: cols[3].to_owned(),
            })
        })
        .collect()
}

pub fn parse_tasks(text: &str) -> Result<Vec<TaskTemplate>, TextError> {
    data_lines(text)
        .map(|(n, line)| {
            let cols: Vec<&str> = line.splitn(5, '\t').collect();
            if cols.len() != 5 {
                return Err(parse_err(n, "expected 5 tab-separated columns"));
            }
            let weight = |s: &str| -> Result<f64, TextError> {
                let w: f64 = s.parse().map_err(|_| parse_err(n, format!("bad weight `{s}`")))?;
                if w >= 0.0 && w.is_finite() {
                    Ok(w)
                } else {
                    Err(parse_err(n, format!("weight {w} must be >= 0")))
                }
            };
            let success_keywords: Vec<Vec<String>> = cols[3]
                .split('|')
                .map(|set| set.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>())
                .filter(|set| !set.is_empty())
                .collect();
            if success_keywords.is_empty() {
                return Err(parse_err(n, "at least one keyword set is required"));
            }
            Ok(TaskTemplate {
                id: cols[0].to_owned(),
                phase_weights: (weight(cols[1])?, weight(cols[2])?),
                success_keywords,
                query_text: cols[4].to_owned(),
            })
        })
        .collect()
}

impl Corpus {
    pub fn parse(memories: &str, tasks: &str) -> Result<Self, TextError> {
        let corpus = Corpus { memories: parse_memories(memories)?, tasks: parse_tasks(tasks)? };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn builtin() -> Self {
        Corpus::parse(BUILTIN_CORPUS, BUILTIN_TASKS).expect("built-in corpus is valid")
    }

    fn validate(&self) -> Result<(), TextError> {
        let invalid = |m: String| Err(TextError::InvalidCorpus(m));
        if self.memories.len() != CORPUS_SIZE {
            return invalid(format!("expected {CORPUS_SIZE} memories, found {}", self.memories.len()));
        }
        let mut ids = BTreeSet::new();
        for id in self.memories.iter().map(|m| &m.id).chain(self.tasks.iter().map(|t| &t.id)) {
            if !ids.insert(id.as_str()) {
                return invalid(format!("duplicate id `{id}`"));
            }
        }
        for d in Designation::ALL {
            let n = self.memories.iter().filter(|m| m.designation == Some(d)).count();
            if n != 1 {
                return invalid(format!("expected exactly one {d} memory, found {n}"));
            }
        }
        for phase in [Phase::One, Phase::Two] {
            if self.tasks.iter().all(|t| t.weight(phase) == 0.0) {
                return invalid(format!("no task template has weight in {phase:?}"));
            }
        }
        for m in &self.memories {
            if tokenize(&m.text).is_empty() {
                return invalid(format!("memory `{}` has no tokens", m.id));
            }
        }
        Ok(())
    }

    /// Index of the memory with the given designation.
    pub fn designated(&self, d: Designation) -> usize {
        self.memories
            .iter()
            .position(|m| m.designation == Some(d))
            .expect("validated corpus has every designation")
    }

    /// All ids, memories first, then tasks.
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.memories
            .iter()
            .map(|m| m.id.as_str())
            .chain(self.tasks.iter().map(|t| t.id.as_str()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_corpus_shape() {
        let c = Corpus::builtin();
        assert_eq!(c.memories.len(), 20);
        for cat in [Category::Geography, Category::Python, Category::Science] {
            assert!(c.memories.iter().any(|m| m.category == cat));
        }
        let stale = &c.memories[c.designated(Designation::Stale)];
        assert!(stale.text.contains("Czechoslovakia"));
        let specialist = &c.memories[c.designated(Designation::Specialist)];
        assert!(specialist.text.to_lowercase().contains("reverse"));
    }

    #[test]
    fn phase_mix() {
        let c = Corpus::builtin();
        let share = |phase: Phase, pred: &dyn Fn(&TaskTemplate) -> bool| -> f64 {
            let total: f64 = c.tasks.iter().map(|t| t.weight(phase)).sum();
            c.tasks.iter().filter(|t| pred(t)).map(|t| t.weight(phase)).sum::<f64>() / total
        };
        let is = |prefix: &'static str| move |t: &TaskTemplate| t.id.starts_with(prefix);
        assert!((share(Phase::One, &is("q_cs_")) - 0.60).abs() < 1e-12);
        assert!((share(Phase::One, &is("q_py_")) - 0.20).abs() < 1e-12);
        assert!((share(Phase::Two, &is("q_dis_")) - 0.30).abs() < 1e-12);
        assert!((share(Phase::Two, &is("q_py_")) - 0.35).abs() < 1e-12);
        assert!((share(Phase::Two, &is("q_sci_")) - 0.35).abs() < 1e-12);
    }

    /// Phase-1 geography is answerable from the stale memory alone; the
    /// dissolution questions are not.
    #[test]
    fn stale_answers_phase_one_only() {
        let c = Corpus::builtin();
        let stale = &c.memories[c.designated(Designation::Stale)];
        let tokens: HashSet<String> = tokenize(&stale.text).into_iter().collect();
        for t in c.tasks.iter().filter(|t| t.id.starts_with("q_cs_")) {
            assert!(t.is_satisfied(&tokens), "{}", t.id);
        }
        let all: HashSet<String> = c.memories.iter().flat_map(|m| tokenize(&m.text)).collect();
        for t in c.tasks.iter().filter(|t| t.id.starts_with("q_dis_")) {
            assert!(!t.is_satisfied(&all), "{}", t.id);
        }
    }

    #[test]
    fn every_other_task_is_answerable() {
        let c = Corpus::builtin();
        let all: HashSet<String> = c.memories.iter().flat_map(|m| tokenize(&m.text)).collect();
        for t in c.tasks.iter().filter(|t| !t.id.starts_with("q_dis_")) {
            assert!(t.is_satisfied(&all), "{}", t.id);
        }
    }

    #[test]
    fn queries_are_not_substrings_of_memories() {
        let c = Corpus::builtin();
        for t in &c.tasks {
            let q = t.query_text.to_lowercase();
            for m in &c.memories {
                assert!(!m.text.to_lowercase().contains(&q), "{} inside {}", t.id, m.id);
            }
        }
    }

    #[test]
    fn reversal_tasks_need_the_specialist_not_the_hitchhiker() {
        let c = Corpus::builtin();
        let tok = |d| -> HashSet<String> { tokenize(&c.memories[c.designated(d)].text).into_iter().collect() };
        let reverse = c.tasks.iter().find(|t| t.id == "q_py_reverse").unwrap();
        assert!(reverse.is_satisfied(&tok(Designation::Specialist)));
        assert!(!reverse.is_satisfied(&tok(Designation::Hitchhiker)));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_memories("a\tgeography\n"), Err(TextError::Parse { line: 1, .. })));
        assert!(parse_memories("a\tmusic\t-\ttext").is_err());
        assert!(parse_tasks("t\t1\t-2\tfoo\tq").is_err());
        assert!(parse_tasks("t\t1\t1\t | \tq").is_err());
        let mut one = BUILTIN_CORPUS.to_owned();
        one = one.replace("\thitchhiker\t", "\t-\t");
        assert!(matches!(Corpus::parse(&one, BUILTIN_TASKS), Err(TextError::InvalidCorpus(_))));
    }

    #[test]
    fn keyword_sets() {
        let t = parse_tasks("t\t1\t0\tczech republic|slovakia\tq").unwrap().remove(0);
        let set = |w: &[&str]| w.iter().map(|s| s.to_string()).collect::<HashSet<_>>();
        assert!(t.is_satisfied(&set(&["slovakia"])));
        assert!(t.is_satisfied(&set(&["czech", "republic"])));
        assert!(!t.is_satisfied(&set(&["czech"])));
    }
}
