//! Feedback-directed random generation.

use std::collections::BTreeSet;

use rand::Rng;

use super::builder::{fallback_order, Target, TestBuilder};
use super::sequence::next_method;
use super::{module_rng, GenConfig, SynthError};
use crate::model::{ApiId, KnowledgeBase, Value};
use crate::oracle::check_statement;
use crate::suite::{Backend, Statement, TestCase, TestSuite};
use crate::usage::PatternIndex;

const ARCHIVE_LIMIT: usize = 64;

/// Literal values from accepted tests, offered again to later ones.
#[derive(Clone, Debug, Default)]
pub struct Archive {
    values: Vec<Value>,
}

impl Archive {
    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn record(&mut self, statements: &[Statement]) {
        for s in statements {
            if let Statement::AssignLiteral { value, .. } = s {
                if !self.values.contains(value) {
                    self.values.push(value.clone());
                }
            }
        }
        let excess = self.values.len().saturating_sub(ARCHIVE_LIMIT);
        self.values.drain(..excess);
    }
}

/// Extends `b` by one call. Candidates are tried in the order
/// `next_method` suggests, then the fallback order; an extension whose call
/// violates a constraint of `target.kb` is discarded. Each attempt spends
/// one step and failed attempts count against `rejections`.
#[allow(clippy::too_many_arguments)]
pub fn extend_once<R: Rng>(
    b: &mut TestBuilder,
    target: &Target,
    patterns: &PatternIndex,
    archive: &Archive,
    rng: &mut R,
    cfg: &GenConfig,
    steps: &mut u64,
    limit: u64,
    rejections: &mut usize,
) -> Result<bool, SynthError> {
    let candidates: Vec<ApiId> = if b.call_count() == 0 {
        let roots: Vec<ApiId> = target.constructors.iter().map(|s| s.api_id.clone()).collect();
        if roots.is_empty() {
            target.functions.iter().map(|s| s.api_id.clone()).collect()
        } else {
            roots
        }
    } else {
        b.candidates(target)
    };
    let calls = b.calls();
    let fallback = fallback_order(&candidates, &calls, rng);
    let Some(first) = next_method(&calls, &candidates, patterns, &fallback) else {
        return Ok(false);
    };
    let order = std::iter::once(first.clone()).chain(fallback.into_iter().filter(|c| *c != first));
    for api in order {
        if *steps >= limit || *rejections >= cfg.max_rejections {
            return Ok(false);
        }
        *steps += 1;
        let mut next = b.clone();
        let index = match next.extend(&api, target, archive.values(), rng, cfg) {
            Ok(i) => i,
            Err(SynthError::Contradiction(msg)) => {
                log::warn!("{api}: {msg}");
                *rejections += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        if violates(&next, index, target.kb) {
            *rejections += 1;
            continue;
        }
        *b = next;
        return Ok(true);
    }
    Ok(false)
}

fn violates(b: &TestBuilder, index: usize, kb: &KnowledgeBase) -> bool {
    let probe = TestCase {
        id: String::new(),
        statements: b.statements.clone(),
        seed: 0,
        backend: Backend::Random,
    };
    check_statement(&probe, index, kb).is_some_and(|(v, _)| !v.is_empty())
}

/// Builds one test of up to a random target length. Returns `None` when not
/// even the first call could be placed.
pub fn random_test<R: Rng>(
    target: &Target,
    patterns: &PatternIndex,
    archive: &Archive,
    rng: &mut R,
    cfg: &GenConfig,
    steps: &mut u64,
    limit: u64,
) -> Result<Option<TestBuilder>, SynthError> {
    let length = rng.gen_range(1..=cfg.max_sequence_length);
    let mut b = TestBuilder::new();
    let mut rejections = 0;
    while b.call_count() < length {
        if !extend_once(&mut b, target, patterns, archive, rng, cfg, steps, limit, &mut rejections)? {
            break;
        }
    }
    Ok((b.call_count() > 0).then_some(b))
}

/// Generates tests for `module` until the step budget or `max_tests` is
/// reached. Duplicate tests are dropped.
pub fn gen_random_suite(
    kb: &KnowledgeBase,
    patterns: &PatternIndex,
    module: &str,
    cfg: &GenConfig,
) -> Result<TestSuite, SynthError> {
    let target = Target::new(kb, module)?;
    let mut suite = TestSuite::new(module, Backend::Random, cfg.seed, true);
    let mut rng = module_rng(cfg.seed, module);
    let limit = cfg.budget_steps();
    let mut steps = 0;
    let mut archive = Archive::default();
    let mut seen = BTreeSet::new();
    while steps < limit && suite.tests.len() < cfg.max_tests {
        let before = steps;
        let Some(b) = random_test(&target, patterns, &archive, &mut rng, cfg, &mut steps, limit)? else {
            if steps == before {
                break;
            }
            continue;
        };
        let test = TestCase {
            id: format!("{:04}", suite.tests.len()),
            statements: b.finish(),
            seed: cfg.seed,
            backend: Backend::Random,
        };
        if seen.insert(test.fingerprint()) {
            archive.record(&test.statements);
            suite.tests.push(test);
        }
    }
    Ok(suite)
}
