use chrono::{DateTime, Duration, TimeZone, Utc};
use hsmod_core::corpus::Corpus;
use hsmod_core::experiment::{
    parse_log, encode_log_line, task_order, ClientEvent, Decision, EventBody, ExperimentError, Phase, Session,
    SessionArchive, SessionInit, SurveyKind, SESSION_FORMAT,
};
use hsmod_core::measures::{SurveyResponse, INSTRUMENT_V1};
use hsmod_core::modification::{Condition, ModificationError, SegmentStyle};
use hsmod_core::synthetic;

fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 5, 1, 10, 0, 0).unwrap()
}

fn init(corpus: &Corpus, condition: Condition) -> SessionInit {
    SessionInit {
        format: SESSION_FORMAT,
        session_id: "s1".into(),
        participant: synthetic::participants(1, 3).remove(0),
        condition,
        task_order: task_order(corpus, None),
        corpus_digest: corpus.digest(),
        instrument_version: INSTRUMENT_V1.into(),
        shuffle_seed: None,
        created_at: t0(),
    }
}

fn survey() -> SurveyResponse {
    SurveyResponse { spane: vec![3; 12], mfsi: vec![2; 18] }
}

/// Intro through practice, landing in `main` at t0 + 2 min.
fn to_main(s: &mut Session, corpus: &Corpus) {
    s.advance_phase(corpus, t0() + Duration::seconds(5)).unwrap();
    s.advance_phase(corpus, t0() + Duration::seconds(70)).unwrap();
    s.submit_survey(SurveyKind::Pre, survey(), corpus, t0() + Duration::seconds(90)).unwrap();
    s.advance_phase(corpus, t0() + Duration::seconds(100)).unwrap();
    s.advance_phase(corpus, t0() + Duration::seconds(120)).unwrap();
    assert_eq!(s.phase(), Phase::Main);
}

#[test]
fn meditation_gate_is_sixty_seconds() {
    let corpus = synthetic::fixture_corpus();
    let mut s = Session::new(init(&corpus, Condition::Control), &corpus).unwrap();
    s.advance_phase(&corpus, t0()).unwrap();
    let early = s.advance_phase(&corpus, t0() + Duration::seconds(59));
    assert!(matches!(early, Err(ExperimentError::TooEarly { .. })));
    assert_eq!(s.events().len(), 1);
    s.advance_phase(&corpus, t0() + Duration::seconds(60)).unwrap();
    assert_eq!(s.phase(), Phase::PreSurvey);
    assert_eq!(s.advance_phase(&corpus, t0() + Duration::seconds(61)), Err(ExperimentError::MissingSurvey(SurveyKind::Pre)));
}

#[test]
fn full_control_session_round_trips() {
    let corpus = synthetic::fixture_corpus();
    let mut s = Session::new(init(&corpus, Condition::Control), &corpus).unwrap();
    to_main(&mut s, &corpus);
    let mut now = t0() + Duration::seconds(120);
    let first = s.next_task(&corpus, now).unwrap();
    assert_eq!(first.comment_id, corpus.ids()[0]);
    assert_eq!(first.rendered.concat(), corpus.get(&first.comment_id).unwrap().text);
    // a second fetch does not restart the clock
    s.next_task(&corpus, now + Duration::seconds(3)).unwrap();
    assert_eq!(s.current().unwrap().started_at, now);

    let ids = corpus.ids();
    assert!(matches!(
        s.submit_decision(&ids[1], 3, Decision::Keep, &corpus, now),
        Err(ExperimentError::OutOfOrder { .. })
    ));
    assert_eq!(s.submit_decision(&ids[0], 0, Decision::Keep, &corpus, now), Err(ExperimentError::InvalidSeverity(0)));
    for (i, id) in ids.iter().enumerate() {
        if i > 0 {
            s.next_task(&corpus, now).unwrap();
        }
        now += Duration::seconds(12);
        s.submit_decision(id, 3, Decision::Delete, &corpus, now).unwrap();
        if i == 0 {
            assert_eq!(
                s.submit_decision(id, 3, Decision::Delete, &corpus, now),
                Err(ExperimentError::DuplicateSubmission(id.clone()))
            );
        }
    }
    assert_eq!(s.next_task(&corpus, now), Err(ExperimentError::Exhausted));
    assert!(matches!(s.export(&corpus), Err(ExperimentError::NotFinished(Phase::Main))));
    s.advance_phase(&corpus, now).unwrap();
    s.submit_survey(SurveyKind::Post, survey(), &corpus, now).unwrap();
    s.advance_phase(&corpus, now).unwrap();
    assert_eq!(s.phase(), Phase::Done);
    assert_eq!(s.advance_phase(&corpus, now), Err(ExperimentError::TerminalPhase));

    let archive = s.export(&corpus).unwrap();
    assert_eq!(archive.records.len(), 100);
    let total_ms: i64 = archive.records.iter().map(|r| r.duration_ms()).sum();
    // the first task was started 12 s before its submission like every other
    assert_eq!(total_ms, 100 * 12_000);
    let json = archive.to_json();
    let back = SessionArchive::from_json(&json).unwrap();
    assert_eq!(back.to_json(), json);
    back.verify(&corpus).unwrap();

    let mut log = encode_log_line(s.init());
    for e in s.events() {
        log.push_str(&encode_log_line(e));
    }
    let (i2, ev2) = parse_log(&log).unwrap();
    assert_eq!(Session::replay(i2, &ev2, &corpus).unwrap(), s);
    let (_, truncated) = parse_log(&log[..log.len() - 5]).unwrap();
    assert_eq!(truncated.len(), ev2.len() - 1);
}

#[test]
fn condition_isolation() {
    let corpus = synthetic::fixture_corpus();
    for cond in Condition::ALL {
        let mut s = Session::new(init(&corpus, cond), &corpus).unwrap();
        to_main(&mut s, &corpus);
        let now = t0() + Duration::seconds(130);
        let task = s.next_task(&corpus, now).unwrap();
        let c = corpus.get(&task.comment_id).unwrap();
        let t = c.spans.iter().find(|s| s.kind == hsmod_core::corpus::SpanKind::Target).unwrap().id.clone();
        let o = c.spans.iter().find(|s| s.kind == hsmod_core::corpus::SpanKind::Offensive).unwrap().id.clone();
        let cid = task.comment_id.clone();
        let reveal = s.record_event(ClientEvent::RevealTarget { comment_id: cid.clone(), span_id: t }, &corpus, now);
        let cycle = s.record_event(ClientEvent::CycleAlternative { comment_id: cid.clone(), span_id: o.clone() }, &corpus, now);
        match cond {
            Condition::Revealing => {
                assert!(reveal.is_ok() && cycle.is_ok());
                let view = s.next_task(&corpus, now).unwrap();
                assert!(view.rendered.segments.iter().any(|g| g.style == SegmentStyle::TargetHighlight));
                assert_eq!(view.rendered.segment(&o).unwrap().counter.unwrap().index, 2);
            }
            Condition::Paraphrasing => {
                assert!(matches!(reveal, Err(ExperimentError::Modification(ModificationError::FeatureNotInCondition { .. }))));
                assert!(cycle.is_ok());
            }
            _ => {
                assert!(matches!(reveal, Err(ExperimentError::Modification(ModificationError::FeatureNotInCondition { .. }))));
                assert!(cycle.is_err());
            }
        }
        s.submit_decision(&cid, 4, Decision::Delete, &corpus, now).unwrap();
        let r = &s.records()[0];
        let (rt, cc) = if cond == Condition::Revealing { (1, 1) } else if cond == Condition::Paraphrasing { (0, 1) } else { (0, 0) };
        assert_eq!((r.reveal_count_target, r.cycle_count), (rt, cc));
    }
}

#[test]
fn sequencing_and_tamper_detection() {
    let corpus = synthetic::fixture_corpus();
    let mut s = Session::new(init(&corpus, Condition::Control), &corpus).unwrap();
    let e1 = s.advance_phase(&corpus, t0()).unwrap();
    let e2 = s.advance_phase(&corpus, t0() + Duration::seconds(61)).unwrap();
    assert_eq!((e1.seq, e2.seq), (1, 2));
    assert!(matches!(e1.body, EventBody::PhaseChange { from: Phase::Intro, to: Phase::Meditation }));
    let mut forged = e2.clone();
    forged.timestamp = t0() + Duration::seconds(30);
    assert!(matches!(Session::replay(s.init().clone(), &[e1.clone(), forged], &corpus), Err(ExperimentError::TooEarly { .. })));
    assert!(matches!(Session::replay(s.init().clone(), &[e2], &corpus), Err(ExperimentError::SequenceGap { .. })));
    let mut other = init(&corpus, Condition::Control);
    other.corpus_digest = "0".repeat(64);
    assert!(matches!(Session::new(other, &corpus), Err(ExperimentError::CorpusMismatch { .. })));
}

#[test]
fn paraphrasing_requires_alternatives() {
    let corpus = synthetic::strip_alternatives(&synthetic::fixture_corpus());
    assert!(Session::new(init(&corpus, Condition::Control), &corpus).is_ok());
    assert!(matches!(
        Session::new(init(&corpus, Condition::Paraphrasing), &corpus),
        Err(ExperimentError::Unrenderable { .. })
    ));
}

#[test]
fn event_wire_form() {
    let corpus = synthetic::fixture_corpus();
    let mut s = Session::new(init(&corpus, Condition::Control), &corpus).unwrap();
    let e = s.advance_phase(&corpus, t0()).unwrap();
    let v: serde_json::Value = serde_json::to_value(&e).unwrap();
    assert_eq!(v["kind"], "phase_change");
    assert_eq!(v["payload"]["to"], "meditation");
    assert_eq!(v["seq"], 1);
    let ce: ClientEvent =
        serde_json::from_str(r#"{"kind":"severity_set","payload":{"comment_id":"h001","severity":3}}"#).unwrap();
    assert!(matches!(ce, ClientEvent::SeveritySet { severity: 3, .. }));
    assert!(serde_json::from_str::<ClientEvent>(r#"{"kind":"phase_change","payload":{}}"#).is_err());
}
