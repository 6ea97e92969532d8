use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BackendMode, BehaviourSource, ExperimentError, ExperimentPlan};
use crate::code_analysis::{
    extract_behaviour, extract_code_block, isolate_method, normalize, BehaviourSpec, CodeUnit, Language,
};
use crate::corpus::{TaskInstance, TaskKind};
use crate::llm_gateway::{
    extract_via_llm, send_individual, BackendError, ChatBackend, ChatTranscript, ExtractedFact, FixtureStore,
    GatewayError, HttpBackend, RecordingBackend, ReplayBackend, RequestContext, SendError, SessionManager,
    SessionMode,
};
use crate::metrics::{bleu, corpus_score_detailed, MetricReport, SubScores};
use crate::prompt_forge::{ExtractionKind, Level, PromptBundle};

/// What one instance went through in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: String,
    pub recipe: String,
    pub prompt: String,
    pub session_id: String,
    pub raw_response: String,
    pub extracted_code: String,
    /// The code that was scored.
    pub normalized_code: String,
    pub reference: String,
    pub notes: Vec<String>,
    /// Smoothed sentence-level BLEU, for inspection only.
    pub sentence_bleu: f64,
    pub sub_scores: SubScores,
    pub codebleu: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundResult {
    /// 1-based.
    pub round: u32,
    pub label: String,
    pub report: MetricReport,
    pub instances: Vec<InstanceRecord>,
    pub skipped: Vec<SkipRecord>,
    pub transcripts: Vec<ChatTranscript>,
}

pub struct RunInputs<'a> {
    pub instances: &'a [TaskInstance],
    /// Required when the variant is at the behaviour level.
    pub behaviours: Option<&'a BTreeMap<String, BehaviourSpec>>,
}

/// Builds the backend the plan asks for. Live and record modes read the
/// credential from the configured environment variable.
pub fn open_backend(plan: &ExperimentPlan) -> Result<Box<dyn ChatBackend>, ExperimentError> {
    let fixtures = || {
        plan.backend
            .fixtures
            .clone()
            .ok_or_else(|| ExperimentError::Plan("backend.fixtures is not set".into()))
    };
    Ok(match plan.backend.mode {
        BackendMode::Live => Box::new(HttpBackend::new(&plan.backend.connection)?),
        BackendMode::Record => Box::new(RecordingBackend::new(
            HttpBackend::new(&plan.backend.connection)?,
            FixtureStore::create(fixtures()?)?,
            plan.backend.connection.retry,
        )),
        BackendMode::Replay => Box::new(ReplayBackend::new(FixtureStore::open(fixtures()?)?)),
    })
}

fn context(plan: &ExperimentPlan, round: u32) -> RequestContext {
    RequestContext {
        model: plan.backend.connection.model_name.clone(),
        controls: plan.backend.connection.controls.clone(),
        round,
        retry: match plan.backend.mode {
            // The recorder retries on its own.
            BackendMode::Record => crate::llm_gateway::RetryPolicy::none(),
            _ => plan.backend.connection.retry,
        },
    }
}

fn static_spec(instance: &TaskInstance) -> BehaviourSpec {
    let unit = CodeUnit::parse(Language::Java, instance.ground_truth.as_str());
    extract_behaviour(&unit).unwrap_or_else(|e| {
        log::warn!("{}: no behaviour spec from ground truth ({e}); using an empty one", instance.id);
        BehaviourSpec::default()
    })
}

fn replay_miss(id: &str, err: &GatewayError) -> Option<ExperimentError> {
    let source = match err {
        GatewayError::Send(SendError { source, .. }) => source,
        GatewayError::Backend(source) => source,
        _ => return None,
    };
    match source {
        BackendError::ReplayMiss { key } => Some(ExperimentError::ReplayMiss {
            instance: id.to_string(),
            key: key.clone(),
        }),
        _ => None,
    }
}

/// Behaviour specs per instance id, plus the extraction transcripts when
/// the model was asked. Extraction prompts run in individual sessions in
/// round 0, apart from generation rounds.
pub fn prepare_behaviours(
    plan: &ExperimentPlan,
    instances: &[TaskInstance],
    backend: &dyn ChatBackend,
) -> Result<(BTreeMap<String, BehaviourSpec>, Vec<ChatTranscript>), ExperimentError> {
    let mut specs = BTreeMap::new();
    let mut transcripts = Vec::new();
    match plan.behaviour_source {
        BehaviourSource::Static => {
            for inst in instances {
                specs.insert(inst.id.clone(), static_spec(inst));
            }
        }
        BehaviourSource::Llm => {
            let ctx = context(plan, 0);
            for inst in instances {
                let mut names = None;
                let mut exceptions = None;
                for (kind, tag) in [(ExtractionKind::ApiList, "api"), (ExtractionKind::ExceptionHandling, "exc")] {
                    let session = format!("extract-{}-{tag}", inst.id);
                    match extract_via_llm(backend, &ctx, &session, kind, &inst.ground_truth) {
                        Ok((fact, transcript)) => {
                            transcripts.push(transcript);
                            match fact {
                                ExtractedFact::ApiNames(n) => names = Some(n),
                                ExtractedFact::UsesExceptions(b) => exceptions = Some(b),
                            }
                        }
                        Err(e) => {
                            if let Some(miss) = replay_miss(&inst.id, &e) {
                                return Err(miss);
                            }
                            log::warn!("{}: model extraction failed ({e}); using the static extractor", inst.id);
                        }
                    }
                }
                let fallback = static_spec(inst);
                let spec = BehaviourSpec::new(
                    names.unwrap_or_else(|| fallback.api_names().to_vec()),
                    exceptions.unwrap_or(fallback.uses_exceptions),
                );
                specs.insert(inst.id.clone(), spec);
            }
        }
    }
    Ok((specs, transcripts))
}

/// Runs every round of `plan` over `inputs`.
pub fn run(
    plan: &ExperimentPlan,
    inputs: &RunInputs<'_>,
    backend: &dyn ChatBackend,
) -> Result<Vec<RoundResult>, ExperimentError> {
    plan.validate()?;
    if inputs.instances.is_empty() {
        return Err(ExperimentError::EmptyCorpus);
    }
    let templates = plan.templates()?;
    let bundles = inputs
        .instances
        .iter()
        .map(|inst| {
            let spec = match plan.variant.level {
                Level::Behaviour => Some(
                    inputs
                        .behaviours
                        .and_then(|b| b.get(&inst.id))
                        .ok_or_else(|| ExperimentError::Plan(format!("no behaviour spec for instance {}", inst.id)))?,
                ),
                _ => None,
            };
            Ok(templates.assemble(plan.variant, plan.task, inst, spec)?)
        })
        .collect::<Result<Vec<PromptBundle>, ExperimentError>>()?;
    log::info!(
        "{}: {} instances, {} round(s), session policy {}",
        plan.label(),
        bundles.len(),
        plan.rounds,
        plan.policy
    );
    (1..=plan.rounds)
        .map(|round| run_round(plan, inputs.instances, &bundles, backend, round))
        .collect()
}

type Outcome = Result<(String, String), SendError>;

fn dispatch(
    plan: &ExperimentPlan,
    bundles: &[PromptBundle],
    backend: &dyn ChatBackend,
    round: u32,
) -> Result<(Vec<Outcome>, Vec<ChatTranscript>), ExperimentError> {
    let ctx = context(plan, round);
    let label = plan.label();
    match plan.policy.mode {
        SessionMode::Individual => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(plan.jobs)
                .build()
                .map_err(|e| ExperimentError::Plan(format!("worker pool: {e}")))?;
            let results: Vec<Result<(String, ChatTranscript), SendError>> = pool.install(|| {
                bundles
                    .par_iter()
                    .enumerate()
                    .map(|(i, b)| send_individual(backend, &ctx, &format!("{label}-r{round}-i{i:04}"), &b.message()))
                    .collect()
            });
            let mut outcomes = Vec::with_capacity(results.len());
            let mut transcripts = Vec::new();
            for r in results {
                outcomes.push(r.map(|(text, t)| {
                    let id = t.session_id.clone();
                    transcripts.push(t);
                    (text, id)
                }));
            }
            Ok((outcomes, transcripts))
        }
        SessionMode::Continuous => {
            let mut manager = SessionManager::new(backend, plan.policy, ctx, label);
            let outcomes = bundles
                .iter()
                .map(|b| {
                    manager.send(b).map(|text| {
                        let id = manager.current_session_id().unwrap_or_default().to_string();
                        (text, id)
                    })
                })
                .collect();
            Ok((outcomes, manager.finish()))
        }
    }
}

/// Response text to the unit that gets scored, with notes on fallbacks.
fn postprocess(task: TaskKind, instance: &TaskInstance, response: &str) -> (String, CodeUnit, Vec<String>) {
    let mut notes = Vec::new();
    let extracted = extract_code_block(response);
    let unit = CodeUnit::parse(Language::Java, extracted.as_str());
    let class_name = instance.environment().map(|e| e.class_name.as_str());
    let isolated = match isolate_method(&unit, class_name) {
        Ok(iso) => {
            if iso.ambiguous {
                notes.push(format!("kept the first method; dropped {}", iso.discarded.join(", ")));
            }
            iso.unit
        }
        Err(e) => {
            notes.push(format!("method isolation failed ({e}); scoring the extracted code"));
            unit
        }
    };
    let scored = match normalize(&isolated, task) {
        Ok(n) => {
            for c in &n.collisions {
                notes.push(format!("generated name {c} already in use; numbering skipped it"));
            }
            n.unit
        }
        Err(e) => {
            notes.push(format!("normalization failed ({e}); scoring unnormalized code"));
            isolated
        }
    };
    (extracted, scored, notes)
}

fn run_round(
    plan: &ExperimentPlan,
    instances: &[TaskInstance],
    bundles: &[PromptBundle],
    backend: &dyn ChatBackend,
    round: u32,
) -> Result<RoundResult, ExperimentError> {
    let (outcomes, transcripts) = dispatch(plan, bundles, backend, round)?;
    let mut answered = Vec::new();
    let mut skipped = Vec::new();
    for ((inst, bundle), outcome) in instances.iter().zip(bundles).zip(outcomes) {
        match outcome {
            Ok((text, session)) => answered.push((inst, bundle, text, session)),
            Err(e) => match e.source {
                BackendError::ReplayMiss { key } => {
                    return Err(ExperimentError::ReplayMiss {
                        instance: inst.id.clone(),
                        key,
                    })
                }
                ref source if source.is_transport() || matches!(source, BackendError::MalformedResponse { .. }) => {
                    log::warn!("round {round}: skipping {}: {source}", inst.id);
                    skipped.push(SkipRecord {
                        id: inst.id.clone(),
                        reason: source.to_string(),
                    });
                }
                source => return Err(source.into()),
            },
        }
    }
    if answered.is_empty() {
        return Err(ExperimentError::AllSkipped { round });
    }

    let processed: Vec<(String, CodeUnit, Vec<String>, CodeUnit)> = answered
        .par_iter()
        .map(|(inst, _, text, _)| {
            let (extracted, unit, notes) = postprocess(plan.task, inst, text);
            let reference = CodeUnit::parse(Language::Java, inst.ground_truth.as_str());
            (extracted, unit, notes, reference)
        })
        .collect();
    let pairs: Vec<(&CodeUnit, &CodeUnit)> = processed.iter().map(|(_, c, _, r)| (c, r)).collect();
    let config = plan.metrics.bleu_config();
    let keywords = plan.metrics.keywords()?;
    let (report, records) = corpus_score_detailed(&pairs, &config, &plan.metrics.weights, &keywords)?;

    let instances = answered
        .into_iter()
        .zip(processed)
        .zip(records)
        .map(|(((inst, bundle, text, session), (extracted, unit, notes, reference)), rec)| {
            let sentence_bleu = bleu(&unit.lexemes(), &reference.lexemes(), &config).unwrap_or(0.0);
            InstanceRecord {
                id: inst.id.clone(),
                recipe: bundle.recipe(),
                prompt: bundle.message(),
                session_id: session,
                raw_response: text,
                extracted_code: extracted,
                normalized_code: unit.text().to_string(),
                reference: reference.text().to_string(),
                notes,
                sentence_bleu,
                sub_scores: rec.sub_scores,
                codebleu: rec.codebleu,
            }
        })
        .collect();
    Ok(RoundResult {
        round,
        label: plan.label(),
        report,
        instances,
        skipped,
        transcripts,
    })
}
