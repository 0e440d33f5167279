//! Deterministic synthetic data: a balanced 100-comment corpus, matching
//! mock provider recordings and simulated participants.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{import_marked, Comment, Corpus, Label, SpanKind, OFFENSIVE_MARKER, TARGET_MARKER};
use crate::curation::{build_span_prompt, EmbeddingFixture, GenerationFixture, PromptKind};
use crate::experiment::{
    task_order, ClientEvent, Decision, ExperimentError, Gender, Participant, Session, SessionArchive, SessionInit,
    SurveyKind, MEDITATION_SECONDS, SESSION_FORMAT,
};
use crate::measures::{Instruments, Polarity, SurveyResponse, INSTRUMENT_V1};
use crate::modification::{render, Condition, RevealState};

pub const CORPUS_SOURCE: &str = "synthetic-v1";
const SHUFFLE_SEED: u64 = 20_240_501;

const HATE_TARGETS: [&str; 16] = [
    "feminists", "housewives", "young males", "old ladies",
    "the ruling party", "leftists", "conservatives", "lawmakers",
    "southerners", "islanders", "rural folks", "northerners",
    "migrant workers", "refugees", "tourists", "exchange students",
];
const HATE_TOPICS: [&str; 4] = ["gender", "politics", "region", "foreigners"];

const OFFENSIVE: [(&str, [&str; 3]); 10] = [
    ("parasites", ["dependents", "heavy burdens", "people relying on aid"]),
    ("trash", ["disappointing", "a letdown", "not great"]),
    ("vermin", ["unwelcome", "a nuisance", "troublesome"]),
    ("idiots", ["misguided", "poorly informed", "careless"]),
    ("a disgrace", ["an embarrassment", "a disappointment", "regrettable"]),
    ("garbage", ["low quality", "subpar", "unconvincing"]),
    ("leeches", ["freeloading", "overly dependent", "reliant on others"]),
    ("scum", ["bad actors", "unpleasant people", "troublemakers"]),
    ("brain-dead", ["thoughtless", "unreasonable", "short-sighted"]),
    ("clowns", ["unserious", "hard to take seriously", "amateurish"]),
];

const HATE_TEMPLATES: [&str; 6] = [
    "Honestly §{T}§ are ※{O}※ and everyone knows it.",
    "Why does the news keep covering §{T}§? They are ※{O}※.",
    "Every time I read about §{T}§ I am reminded they are ※{O}※.",
    "§{T}§ are ※{O}※, end of discussion.",
    "Nobody should listen to §{T}§ because they are ※{O}※.",
    "§{T}§ are ※{O}※ and ※{P}※ at the same time.",
];

const NORMAL_SUBJECTS: [&str; 8] = [
    "the city council", "local farmers", "the school board", "bus drivers",
    "the weather service", "hospital staff", "the library", "young voters",
];
const NORMAL_TOPICS: [&str; 4] = ["local", "economy", "education", "weather"];

const KEYWORDS: [(&str, [&str; 3]); 8] = [
    ("budget plan", ["spending proposal", "financial plan", "funding outline"]),
    ("harvest festival", ["autumn fair", "seasonal celebration", "farm celebration"]),
    ("new timetable", ["revised schedule", "updated schedule", "changed routes"]),
    ("road repairs", ["street maintenance", "pavement work", "roadworks"]),
    ("heavy rain", ["strong showers", "a downpour", "wet weather"]),
    ("opening hours", ["service times", "business hours", "visiting times"]),
    ("exam results", ["test scores", "grades", "assessment outcomes"]),
    ("recycling rules", ["waste sorting guidelines", "disposal rules", "sorting policy"]),
];

const NORMAL_TEMPLATES: [&str; 5] = [
    "§{T}§ announced the ※{O}※ this morning.",
    "I think §{T}§ handled the ※{O}※ quite well.",
    "Good to see §{T}§ talking about the ※{O}※ again.",
    "Does anyone know when §{T}§ will publish the ※{O}※?",
    "Thanks to §{T}§ for explaining the ※{O}※ so clearly.",
];

/// Hand-written entries, including multibyte text.
const EXTRA_HATE: [(&str, &str, [&str; 3]); 3] = [
    ("gender", "§Women§ will bring the ※downfall※ of this country.", ["embarrassing moment", "setback", "low point"]),
    ("gender", "§여자들§ 때문에 나라가 ※망신※을 당한다.", ["부끄러운 일", "난처한 상황", "아쉬운 순간"]),
    ("region", "§시골 사람들§은 정말 ※무식하다※.", ["잘 모른다", "정보가 부족하다", "익숙하지 않다"]),
];
const EXTRA_NORMAL: [(&str, &str, [&str; 3]); 2] = [
    ("economy", "§시장 상인들§이 ※물가 상승※을 걱정한다.", ["가격 인상", "생활비 증가", "높은 물가"]),
    ("weather", "§기상청§이 ※장마 예보※를 발표했다.", ["우기 전망", "비 소식", "강수 예보"]),
];

fn build(id: String, label: Label, topic: &str, marked: &str, alts: &[&[&str; 3]]) -> Comment {
    let (text, spans) =
        import_marked(marked, &[(TARGET_MARKER, SpanKind::Target), (OFFENSIVE_MARKER, SpanKind::Offensive)])
            .expect("template markers are balanced");
    let mut alternatives = BTreeMap::new();
    for (span, a) in spans.iter().filter(|s| s.kind == SpanKind::Offensive).zip(alts) {
        alternatives.insert(span.id.clone(), a.iter().map(|s| s.to_string()).collect());
    }
    Comment { id, text, label, topic: topic.to_string(), spans, alternatives }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().collect::<String>() + c.as_str()).unwrap_or_default()
}

/// The balanced fixture corpus: 50 hate and 50 normal comments with three
/// alternatives per offensive span, in a fixed shuffled order.
pub fn fixture_corpus() -> Corpus {
    let mut comments = Vec::with_capacity(100);
    for (i, (topic, marked, alts)) in EXTRA_HATE.iter().enumerate() {
        comments.push(build(format!("h{:03}", i + 1), Label::Hate, topic, marked, &[alts]));
    }
    for i in EXTRA_HATE.len()..50 {
        let t = HATE_TARGETS[i % HATE_TARGETS.len()];
        let template = HATE_TEMPLATES[i % HATE_TEMPLATES.len()];
        let (o, oa) = OFFENSIVE[(i * 3) % OFFENSIVE.len()];
        let (p, pa) = OFFENSIVE[(i * 3 + 1) % OFFENSIVE.len()];
        let t = if template.starts_with('§') { capitalize(t) } else { t.to_string() };
        let marked = template.replace("{T}", &t).replace("{O}", o).replace("{P}", p);
        let topic = HATE_TOPICS[(i % HATE_TARGETS.len()) / 4];
        comments.push(build(format!("h{:03}", i + 1), Label::Hate, topic, &marked, &[&oa, &pa]));
    }
    for (i, (topic, marked, alts)) in EXTRA_NORMAL.iter().enumerate() {
        comments.push(build(format!("n{:03}", i + 1), Label::Normal, topic, marked, &[alts]));
    }
    for i in EXTRA_NORMAL.len()..50 {
        let s = NORMAL_SUBJECTS[i % NORMAL_SUBJECTS.len()];
        let template = NORMAL_TEMPLATES[i % NORMAL_TEMPLATES.len()];
        let (k, ka) = KEYWORDS[(i * 5 + i / 8) % KEYWORDS.len()];
        let s = if template.starts_with('§') { capitalize(s) } else { s.to_string() };
        let marked = template.replace("{T}", &s).replace("{O}", k);
        let topic = NORMAL_TOPICS[(i / 2) % NORMAL_TOPICS.len()];
        comments.push(build(format!("n{:03}", i + 1), Label::Normal, topic, &marked, &[&ka]));
    }
    comments.shuffle(&mut ChaCha8Rng::seed_from_u64(SHUFFLE_SEED));
    Corpus::new(CORPUS_SOURCE, comments).expect("synthetic corpus is valid")
}

/// Same comments with every alternatives list removed.
pub fn strip_alternatives(corpus: &Corpus) -> Corpus {
    let comments = corpus
        .comments()
        .iter()
        .map(|c| Comment { alternatives: BTreeMap::new(), ..c.clone() })
        .collect();
    Corpus::new(corpus.metadata().source.clone(), comments).expect("stripping keeps validity")
}

/// Similarity planted for each recorded candidate slot. `None` marks the
/// deliberately unaligned candidate; `Some(0.7)` is the exact-boundary one.
const PLAN: [(Slot, Option<f64>); 10] = [
    (Slot::Alt(2), Some(0.88)),
    (Slot::Filler(0), Some(0.52)),
    (Slot::Alt(0), Some(0.95)),
    (Slot::Filler(1), Some(0.7)),
    (Slot::Filler(2), Some(0.74)),
    (Slot::Unaligned, None),
    (Slot::Alt(1), Some(0.91)),
    (Slot::Alt(0), Some(0.95)),
    (Slot::Filler(3), Some(0.66)),
    (Slot::Filler(4), Some(0.72)),
];

#[derive(Clone, Copy)]
enum Slot {
    Alt(usize),
    Filler(usize),
    Unaligned,
}

const FILLERS: [&str; 5] = ["hard to judge", "sort of odd", "somewhat unclear", "not ideal", "an open question"];

fn unit_vector(similarity: f64) -> Vec<f64> {
    if similarity == 0.7 {
        // integer norms keep the cosine exactly 0.7 against (1, 0, 0, 0)
        vec![7.0, 7.0, 1.0, 1.0]
    } else {
        vec![similarity, (1.0 - similarity * similarity).sqrt(), 0.0, 0.0]
    }
}

/// Recorded generations and embeddings from which curation of
/// `strip_alternatives(corpus)` reproduces the alternatives of `corpus`.
///
/// Each span gets ten candidates: its three alternatives (similarities 0.95,
/// 0.91, 0.88), a duplicate of the best, one candidate at exactly 0.70,
/// four fillers on either side of the threshold and one that rewrites text
/// outside the span.
pub fn mock_fixtures(corpus: &Corpus) -> (Vec<GenerationFixture>, Vec<EmbeddingFixture>) {
    let mut gens = Vec::new();
    let mut embs: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut put = |text: String, v: Vec<f64>| {
        if let Some(prev) = embs.insert(text.clone(), v.clone()) {
            assert_eq!(prev, v, "conflicting embedding for {text:?}");
        }
    };
    for c in corpus.comments() {
        put(c.text.clone(), vec![1.0, 0.0, 0.0, 0.0]);
        for span in c.sorted_spans().into_iter().filter(|s| s.kind == SpanKind::Offensive) {
            let alts = c.alternatives_for(&span.id);
            let prompt = build_span_prompt(c, &span.id, PromptKind::from(c.label)).expect("offensive span");
            let mut outputs = Vec::with_capacity(PLAN.len());
            for (slot, sim) in PLAN {
                let replacement = match slot {
                    Slot::Alt(i) => alts[i].clone(),
                    Slot::Filler(i) => FILLERS[i].to_string(),
                    Slot::Unaligned => alts[0].clone(),
                };
                let full = c.with_span_replaced(&span.id, &replacement).expect("span in range");
                match sim {
                    Some(s) => {
                        put(full.clone(), unit_vector(s));
                        outputs.push(full);
                    }
                    None if span.start > 0 => outputs.push(format!("Well, {full}")),
                    None => outputs.push(format!("{full} Really.")),
                }
            }
            gens.push(GenerationFixture {
                comment_id: c.id.clone(),
                span_id: span.id.clone(),
                prompt: Some(prompt),
                output: outputs.join("$"),
            });
        }
    }
    let embs = embs.into_iter().map(|(text, vector)| EmbeddingFixture { text, vector }).collect();
    (gens, embs)
}

/// Checks that no hidden surface leaks into any other rendered piece of its
/// comment under any condition. Returns the offending comment ids.
pub fn leak_report(corpus: &Corpus) -> Vec<String> {
    let mut bad = Vec::new();
    for c in corpus.comments() {
        for cond in [Condition::Anonymizing, Condition::Paraphrasing, Condition::Revealing] {
            let Ok(r) = render(c, cond, &RevealState::default()) else {
                bad.push(c.id.clone());
                continue;
            };
            let shown = r.concat();
            let hidden: Vec<String> = c
                .spans
                .iter()
                .filter(|s| match s.kind {
                    SpanKind::Target => cond.masks_targets(),
                    SpanKind::Offensive => cond.paraphrases(),
                })
                .map(|s| c.surface(s))
                .collect();
            if hidden.iter().any(|h| shown.contains(h.as_str())) {
                bad.push(c.id.clone());
            }
        }
    }
    bad.dedup();
    bad
}

/// `n` participants with screening-derived sensitivities.
pub fn participants(n: usize, seed: u64) -> Vec<Participant> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let ratings: Vec<u8> = (0..8).map(|_| rng.gen_range(2..=5)).collect();
            let gender = [Gender::Female, Gender::Male, Gender::Undisclosed][rng.gen_range(0..3usize)];
            Participant {
                id: format!("p{:03}", i + 1),
                pseudonym: format!("P-{:03}", i + 1),
                age: rng.gen_range(19..=45),
                gender,
                sensitivity_score: crate::experiment::compute_hate_sensitivity(&ratings).expect("valid ratings"),
            }
        })
        .collect()
}

/// Behaviour of a simulated participant in one condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BotProfile {
    /// Probability of the correct decision.
    pub accuracy: f64,
    /// Mean seconds per comment.
    pub mean_seconds: f64,
    /// Probability of each optional interaction on a span.
    pub explore: f64,
    /// Shift applied to post-survey SPANE positive and negative items.
    pub affect_shift: i8,
}

/// Profiles with mild, condition-dependent effects.
pub fn bot_profile(cond: Condition) -> BotProfile {
    match cond {
        Condition::Control => BotProfile { accuracy: 0.86, mean_seconds: 10.0, explore: 0.0, affect_shift: -1 },
        Condition::Anonymizing => BotProfile { accuracy: 0.88, mean_seconds: 10.5, explore: 0.0, affect_shift: 0 },
        Condition::Paraphrasing => BotProfile { accuracy: 0.84, mean_seconds: 12.0, explore: 0.3, affect_shift: 0 },
        Condition::Revealing => BotProfile { accuracy: 0.9, mean_seconds: 13.5, explore: 0.4, affect_shift: 1 },
    }
}

/// What a bot does on one comment.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskPlan {
    /// Optional interactions, submitted before the decision.
    pub interactions: Vec<ClientEvent>,
    pub severity: u8,
    pub decision: Decision,
    pub millis: i64,
}

pub fn plan_task(rng: &mut impl Rng, c: &Comment, cond: Condition, p: &BotProfile) -> TaskPlan {
    let mut interactions = Vec::new();
    for s in &c.spans {
        let roll = rng.gen_bool(p.explore);
        match s.kind {
            SpanKind::Offensive if roll && cond.allows_cycle() && !c.alternatives_for(&s.id).is_empty() => {
                for _ in 0..rng.gen_range(1..=3) {
                    interactions.push(ClientEvent::CycleAlternative { comment_id: c.id.clone(), span_id: s.id.clone() });
                }
                if cond.allows_reveal() && rng.gen_bool(0.5) {
                    interactions.push(ClientEvent::RevealOriginal { comment_id: c.id.clone(), span_id: s.id.clone() });
                }
            }
            SpanKind::Target if roll && cond.allows_reveal() => {
                interactions.push(ClientEvent::RevealTarget { comment_id: c.id.clone(), span_id: s.id.clone() });
            }
            _ => {}
        }
    }
    let correct = rng.gen_bool(p.accuracy);
    let hate = c.label == Label::Hate;
    let decision = if hate == correct { Decision::Delete } else { Decision::Keep };
    let severity = if hate { rng.gen_range(3..=5) } else { rng.gen_range(1..=3) };
    interactions.push(ClientEvent::SeveritySet { comment_id: c.id.clone(), severity });
    let jitter: f64 = rng.gen_range(0.5..1.5);
    let millis = (p.mean_seconds * jitter * 1000.0).round() as i64;
    TaskPlan { interactions, severity, decision, millis }
}

/// A valid survey; `shift` nudges about a third of the SPANE positive
/// items up and negative items down.
pub fn bot_survey(rng: &mut impl Rng, inst: &Instruments, shift: i8) -> SurveyResponse {
    let spane = inst
        .spane
        .iter()
        .map(|item| {
            let base: i8 = rng.gen_range(2..=4);
            let s = if rng.gen_bool(0.35) { shift } else { 0 };
            let v = if item.polarity == Polarity::Positive { base + s } else { base - s };
            v.clamp(1, 5) as u8
        })
        .collect();
    let mfsi = (0..inst.mfsi.len()).map(|_| rng.gen_range(1..=4)).collect();
    SurveyResponse { spane, mfsi }
}

/// Runs a complete session in-process, starting at `init.created_at`.
pub fn simulate_session(corpus: &Corpus, init: SessionInit, seed: u64) -> Result<SessionArchive, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profile = bot_profile(init.condition);
    let inst = Instruments::builtin(&init.instrument_version)?;
    let mut now = init.created_at;
    let mut s = Session::new(init, corpus)?;
    let tick = |now: &mut DateTime<Utc>, ms: i64| *now += Duration::milliseconds(ms);
    s.advance_phase(corpus, now)?;
    tick(&mut now, MEDITATION_SECONDS * 1000);
    s.advance_phase(corpus, now)?;
    tick(&mut now, 30_000);
    s.submit_survey(SurveyKind::Pre, bot_survey(&mut rng, inst, 0), corpus, now)?;
    s.advance_phase(corpus, now)?;
    tick(&mut now, 20_000);
    s.advance_phase(corpus, now)?;
    while s.cursor() < s.total() {
        let view = s.next_task(corpus, now)?;
        let c = corpus.get(&view.comment_id).ok_or_else(|| ExperimentError::UnknownComment(view.comment_id.clone()))?;
        let plan = plan_task(&mut rng, c, s.condition(), &profile);
        let step = plan.millis / (plan.interactions.len() as i64 + 1);
        for ev in plan.interactions {
            tick(&mut now, step);
            s.record_event(ev, corpus, now)?;
        }
        tick(&mut now, step);
        s.submit_decision(&c.id, plan.severity, plan.decision, corpus, now)?;
    }
    s.advance_phase(corpus, now)?;
    tick(&mut now, 30_000);
    s.submit_survey(SurveyKind::Post, bot_survey(&mut rng, inst, profile.affect_shift), corpus, now)?;
    s.advance_phase(corpus, now)?;
    s.export(corpus)
}

/// `per_group` simulated sessions in every condition, session ids `s001..`.
pub fn simulate_study(corpus: &Corpus, per_group: usize, seed: u64) -> Vec<SessionArchive> {
    let people = participants(per_group * Condition::ALL.len(), seed);
    let t0 = Utc.with_ymd_and_hms(2024, 5, 1, 9, 0, 0).single().expect("valid date");
    people
        .into_iter()
        .enumerate()
        .map(|(i, participant)| {
            let condition = Condition::ALL[i % Condition::ALL.len()];
            let init = SessionInit {
                format: SESSION_FORMAT,
                session_id: format!("s{:03}", i + 1),
                participant,
                condition,
                task_order: task_order(corpus, Some(seed + i as u64)),
                corpus_digest: corpus.digest(),
                instrument_version: INSTRUMENT_V1.into(),
                shuffle_seed: Some(seed + i as u64),
                created_at: t0 + Duration::hours(i as i64),
            };
            simulate_session(corpus, init, seed ^ (i as u64 + 1)).expect("bot follows the protocol")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_valid_and_leak_free() {
        let c = fixture_corpus();
        assert_eq!(c.len(), 100);
        assert_eq!((c.metadata().hate, c.metadata().normal), (50, 50));
        assert!(leak_report(&c).is_empty(), "{:?}", leak_report(&c));
        assert_eq!(fixture_corpus().to_jsonl(), c.to_jsonl());
    }

    #[test]
    fn includes_the_downfall_example() {
        let c = fixture_corpus();
        let h = c.get("h001").unwrap();
        assert_eq!(h.text, "Women will bring the downfall of this country.");
        assert_eq!(h.alternatives_for("o1")[0], "embarrassing moment");
    }

    #[test]
    fn fixtures_cover_every_offensive_span() {
        let c = fixture_corpus();
        let (gens, embs) = mock_fixtures(&c);
        let spans: usize = c.comments().iter().map(|c| c.spans_of(SpanKind::Offensive).count()).sum();
        assert_eq!(gens.len(), spans);
        assert!(gens.iter().all(|g| g.output.split('$').count() == 10));
        assert!(embs.iter().any(|e| e.vector == vec![7.0, 7.0, 1.0, 1.0]));
    }
}
