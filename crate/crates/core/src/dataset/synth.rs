//! Synthetic evaluation corpus.
//!
//! Every question comes from a two-fact policy template. The context states
//! both facts plus one distractor sentence. Three responses are written per
//! question, one sentence per fact:
//!
//! * correct restates both facts,
//! * partial restates the first fact and contradicts the second,
//! * wrong contradicts both.
//!
//! True values rotate through each template's value pools with the seed and
//! the question's round, so seed 1 opens with the canonical store-hours
//! example. Contradicting values are drawn from a seeded RNG.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DatasetManifest, Label, LabeledTriple};
use crate::scorer::MockTable;

pub const DEFAULT_QUESTIONS: usize = 120;

/// Sites; index 0 reads as the bare "the store".
const SITES: &[&str] = &[
    "the store",
    "the Harbour City store",
    "the Causeway Bay store",
    "the Central flagship",
    "the Times Square store",
    "the Pacific Place store",
    "the Kowloon Bay warehouse",
    "the Tsim Sha Tsui store",
    "the IFC store",
    "the Shatin outlet",
    "the Beijing flagship",
    "the Shanghai store",
    "the Chengdu store",
    "the Festival Walk store",
    "the Elements store",
    "the Repulse Bay boutique",
    "the Stanley outlet",
    "the Tai Koo store",
    "the Mong Kok store",
    "the Sheung Wan studio",
    "the Wan Chai office",
    "the Aberdeen depot",
    "the Kwun Tong office",
    "the Lantau outlet",
];

struct Template {
    topic: &'static str,
    pools: [&'static [&'static str]; 2],
    question: fn(&str) -> String,
    context: fn(&str, &str, &str) -> String,
    statements: [fn(&str, &str) -> String; 2],
}

fn cap(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

fn at(site: &str) -> String {
    if site == SITES[0] {
        String::new()
    } else {
        format!(" at {site}")
    }
}

const TEMPLATES: &[Template] = &[
    Template {
        topic: "working hours",
        pools: [
            &["9 AM to 5 PM", "10 AM to 6 PM", "8 AM to 4 PM", "11 AM to 7 PM", "10 AM to 9 PM", "7 AM to 3 PM"],
            &[
                "Sunday to Saturday",
                "Monday to Friday",
                "Monday to Saturday",
                "Tuesday to Sunday",
                "Wednesday to Monday",
            ],
        ],
        question: |s| format!("What are the working hours{}?", at(s)),
        context: |s, a, b| {
            format!("{} operates from {a}, from {b}. There should be at least three shopkeepers to run a shop.", cap(s))
        },
        statements: [
            |s, v| format!("The working hours{} are {v}.", at(s)),
            |s, v| format!("{} is open from {v}.", cap(s)),
        ],
    },
    Template {
        topic: "leave",
        pools: [&["12", "14", "15", "18", "20", "21"], &["two", "three", "four", "one", "six"]],
        question: |s| format!("How much annual leave do staff{} get, and how early must it be requested?", at(s)),
        context: |s, a, b| {
            format!(
                "Full-time staff{} are entitled to {a} days of paid annual leave per year. Leave requests must be submitted {b} weeks in advance. Unused leave may be carried over with manager approval.",
                at(s)
            )
        },
        statements: [
            |s, v| format!("Staff{} get {v} days of paid annual leave per year.", at(s)),
            |s, v| format!("Leave requests{} must be submitted {v} weeks in advance.", at(s)),
        ],
    },
    Template {
        topic: "probation",
        pools: [&["three", "six", "four", "two", "five"], &["7", "14", "30", "3", "21"]],
        question: |s| format!("How does probation work for new employees{}?", at(s)),
        context: |s, a, b| {
            format!(
                "New employees{} serve a probation period of {a} months. During probation, either party may end employment with {b} days of notice. Probation reviews are held by the line manager.",
                at(s)
            )
        },
        statements: [
            |s, v| format!("The probation period{} is {v} months.", at(s)),
            |s, v| format!("During probation{}, employment can be ended with {v} days of notice.", at(s)),
        ],
    },
    Template {
        topic: "salary",
        pools: [
            &["25th", "last working day", "28th", "15th", "1st"],
            &["bank transfer", "cheque", "payroll card", "cash"],
        ],
        question: |s| format!("When and how are salaries paid{}?", at(s)),
        context: |s, a, b| {
            format!(
                "Salaries{} are paid on the {a} of each month. Payment is made by {b}. Payslips are available on the staff portal.",
                at(s)
            )
        },
        statements: [
            |s, v| format!("Salaries{} are paid on the {v} of each month.", at(s)),
            |s, v| format!("Staff{} receive their salary by {v}.", at(s)),
        ],
    },
    Template {
        topic: "uniform",
        pools: [
            &["black", "navy", "grey", "white", "burgundy"],
            &["on every shift", "on weekdays only", "during events only", "on weekends only"],
        ],
        question: |s| format!("What is the uniform policy for sales staff{}?", at(s)),
        context: |s, a, b| {
            format!(
                "Sales staff{} must wear the {a} uniform. The uniform is required {b}. Name badges must be visible at all times.",
                at(s)
            )
        },
        statements: [
            |s, v| format!("Sales staff{} wear the {v} uniform.", at(s)),
            |s, v| format!("The uniform{} is required {v}.", at(s)),
        ],
    },
    Template {
        topic: "personal devices",
        pools: [
            &["in the staff room", "at the service desk", "on the shop floor", "in the stockroom"],
            &["3", "5", "7", "10", "14"],
        ],
        question: |s| format!("Can staff{} use personal devices at work?", at(s)),
        context: |s, a, b| {
            format!(
                "Personal devices{} may only be used {a}. Any personal device used for work email must be registered with IT within {b} days. Lost devices must be reported immediately.",
                at(s)
            )
        },
        statements: [
            |s, v| format!("Personal devices{} may only be used {v}.", at(s)),
            |s, v| format!("Devices used for work email{} must be registered with IT within {v} days.", at(s)),
        ],
    },
    Template {
        topic: "media requests",
        pools: [
            &["the communications team", "the legal team", "the store manager", "the regional director"],
            &["24", "48", "12", "72"],
        ],
        question: |s| format!("How should staff{} handle media requests?", at(s)),
        context: |s, a, b| {
            format!(
                "All media requests{} must be referred to {a}. Staff must forward the request within {b} hours. Staff must not comment on company matters.",
                at(s)
            )
        },
        statements: [
            |s, v| format!("Media requests{} must be referred to {v}.", at(s)),
            |s, v| format!("Staff{} must forward media requests within {v} hours.", at(s)),
        ],
    },
];

/// Ground truth for one response sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimAnnotation {
    pub record_id: String,
    pub sentence: String,
    pub entailed: bool,
}

/// Synthetic manifest together with per-sentence fact bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticCorpus {
    pub manifest: DatasetManifest,
    pub claims: Vec<ClaimAnnotation>,
}

fn site_name(index: usize) -> String {
    let base = SITES[index % SITES.len()];
    match index / SITES.len() {
        0 => base.to_string(),
        cycle => format!("{base} (branch {})", cycle + 1),
    }
}

/// `n_questions × 3` records plus the truth value of every response sentence.
pub fn synthesize_annotated(seed: u64, n_questions: usize) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = seed.wrapping_sub(1) as usize;
    let mut records = Vec::with_capacity(n_questions * 3);
    let mut claims = Vec::with_capacity(n_questions * 6);

    for q in 0..n_questions {
        let t = &TEMPLATES[q % TEMPLATES.len()];
        let round = q / TEMPLATES.len();
        let site = site_name(offset.wrapping_add(round) % (SITES.len() * 64));
        let truth: [&str; 2] = [0, 1].map(|slot| {
            let pool = t.pools[slot];
            pool[offset.wrapping_add(round * (slot + 1)) % pool.len()]
        });
        let false_value: [&str; 2] = [0, 1].map(|slot| {
            let others: Vec<&str> = t.pools[slot].iter().copied().filter(|v| *v != truth[slot]).collect();
            *others.choose(&mut rng).expect("pools hold at least two values")
        });

        let question = (t.question)(&site);
        let context = (t.context)(&site, truth[0], truth[1]);
        let stmt = |slot: usize, entailed: bool| {
            let v = if entailed { truth[slot] } else { false_value[slot] };
            ((t.statements[slot])(&site, v), entailed)
        };
        let variants = [
            (Label::Correct, [stmt(0, true), stmt(1, true)]),
            (Label::Partial, [stmt(0, true), stmt(1, false)]),
            (Label::Wrong, [stmt(0, false), stmt(1, false)]),
        ];
        for (label, sentences) in variants {
            let id = format!("syn{seed}-q{q:04}-{label}");
            let response = sentences.iter().map(|(s, _)| s.as_str()).collect::<Vec<_>>().join(" ");
            for (sentence, entailed) in &sentences {
                claims.push(ClaimAnnotation { record_id: id.clone(), sentence: sentence.clone(), entailed: *entailed });
            }
            records.push(LabeledTriple {
                id,
                question: question.clone(),
                context: context.clone(),
                response,
                label,
                topic: Some(t.topic.to_string()),
            });
        }
    }
    SyntheticCorpus { manifest: DatasetManifest::new(records), claims }
}

pub fn synthesize_dataset(seed: u64, n_questions: usize) -> DatasetManifest {
    synthesize_annotated(seed, n_questions).manifest
}

/// Beta parameters for a mock scorer that separates entailed from
/// contradicted sentences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationParams {
    pub entailed: (f64, f64),
    pub contradicted: (f64, f64),
}

impl Default for SeparationParams {
    fn default() -> Self {
        Self { entailed: (6.0, 2.0), contradicted: (2.0, 6.0) }
    }
}

/// Mock table for a corpus: entailed sentences draw from the high Beta,
/// contradicted ones from the low Beta. Each full response is also keyed,
/// at the mean of its sentence values, for whole-response scoring.
pub fn separation_mock_table(corpus: &SyntheticCorpus, params: SeparationParams, seed: u64) -> MockTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let high = Beta::new(params.entailed.0, params.entailed.1).expect("valid Beta parameters");
    let low = Beta::new(params.contradicted.0, params.contradicted.1).expect("valid Beta parameters");

    let truth: BTreeMap<&str, bool> = corpus.claims.iter().map(|c| (c.sentence.as_str(), c.entailed)).collect();
    let mut table = MockTable::with_default(0.5);
    for (sentence, entailed) in truth {
        let v: f64 = if entailed { high.sample(&mut rng) } else { low.sample(&mut rng) };
        table.insert(sentence, v);
    }
    let mut per_record: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for c in &corpus.claims {
        per_record.entry(&c.record_id).or_default().push(table.table[&c.sentence]);
    }
    for r in &corpus.manifest.records {
        if let Some(vals) = per_record.get(r.id.as_str()) {
            table.insert(r.response.clone(), vals.iter().sum::<f64>() / vals.len() as f64);
        }
    }
    table
}

/// Copy of `table` with Gaussian noise of standard deviation `sigma` added
/// to every entry, clamped to [0, 1].
pub fn with_noise(table: &MockTable, sigma: f64, seed: u64) -> MockTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("finite sigma");
    let mut out = table.clone();
    for v in out.table.values_mut() {
        *v = (*v + noise.sample(&mut rng)).clamp(0.0, 1.0);
    }
    out
}
