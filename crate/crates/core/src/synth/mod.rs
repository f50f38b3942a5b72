//! Test synthesis: argument generation, call-sequence construction and the
//! two generation backends.

pub mod builder;
pub mod feedback;
pub mod input;
pub mod random;
pub mod search;
pub mod sequence;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use builder::{repair_sequence, Target, TestBuilder};
pub use feedback::{CoverageFeedback, FeedbackError, PriorRun};
pub use input::{generate_value, random_primitive, synth_input, SynthArg};
pub use random::gen_random_suite;
pub use search::gen_search_suite;
pub use sequence::next_method;

use crate::model::KnowledgeBase;
use crate::oracle::ProxyWeights;
use crate::suite::{Backend, TestSuite};
use crate::usage::PatternIndex;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("contradictory constraint: {0}")]
    Contradiction(String),
    #[error("module {0} has no constructor or free function in the knowledge base")]
    EmptyApiSet(String),
    #[error("{0} is not in the knowledge base")]
    UnknownApi(String),
    #[error("{0} needs an instance of its class, but none was constructed")]
    NoReceiver(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Feedback(#[from] FeedbackError),
}

/// Generation settings. The budget is counted in virtual steps,
/// `budget_seconds * steps_per_second`, so that runs are reproducible
/// regardless of machine speed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub budget_seconds: u64,
    pub steps_per_second: u64,
    pub seed: u64,
    pub backend: Backend,
    /// When false, generation sees only signatures and no usage patterns.
    pub guided: bool,
    pub max_sequence_length: usize,
    pub max_tests: usize,
    /// Failed extension attempts tolerated per test before it is closed.
    pub max_rejections: usize,
    pub population_size: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub p_use_default: f64,
    pub p_include_optional: f64,
    pub p_reuse_archive: f64,
    pub int_range: (i64, i64),
    pub float_range: (f64, f64),
    pub string_alphabet: String,
    pub string_max_len: usize,
    pub dim_range: (usize, usize),
    /// Whether the search proxy rewards realized usage rules.
    pub patterns_in_fitness: bool,
    pub proxy_weights: ProxyWeights,
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig {
            budget_seconds: 300,
            steps_per_second: 100,
            seed: 0,
            backend: Backend::Random,
            guided: true,
            max_sequence_length: 12,
            max_tests: 100,
            max_rejections: 10,
            population_size: 20,
            mutation_rate: 0.3,
            crossover_rate: 0.75,
            p_use_default: 0.25,
            p_include_optional: 0.5,
            p_reuse_archive: 0.5,
            int_range: (-100, 100_000),
            float_range: (-100.0, 100.0),
            string_alphabet: "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789".into(),
            string_max_len: 12,
            dim_range: (1, 6),
            patterns_in_fitness: false,
            proxy_weights: ProxyWeights::default(),
        }
    }
}

impl GenConfig {
    pub fn budget_steps(&self) -> u64 {
        self.budget_seconds.saturating_mul(self.steps_per_second)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Config(m));
        for (name, p) in [
            ("mutation_rate", self.mutation_rate),
            ("crossover_rate", self.crossover_rate),
            ("p_use_default", self.p_use_default),
            ("p_include_optional", self.p_include_optional),
            ("p_reuse_archive", self.p_reuse_archive),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if self.int_range.0 > self.int_range.1 {
            return bad(format!("int_range {:?} is empty", self.int_range));
        }
        if !(self.float_range.0 <= self.float_range.1) || !self.float_range.0.is_finite() || !self.float_range.1.is_finite() {
            return bad(format!("float_range {:?} is empty", self.float_range));
        }
        if self.string_alphabet.is_empty() || self.string_max_len == 0 {
            return bad("string alphabet and length must be nonempty".into());
        }
        if self.dim_range.0 == 0 || self.dim_range.0 > self.dim_range.1 {
            return bad(format!("dim_range {:?} must be nonempty and start at 1 or more", self.dim_range));
        }
        if self.max_sequence_length == 0 {
            return bad("max_sequence_length must be at least 1".into());
        }
        if self.population_size == 0 {
            return bad("population_size must be at least 1".into());
        }
        let w = self.proxy_weights;
        if [w.satisfied, w.apis, w.transitions].iter().any(|x| !x.is_finite() || *x < 0.0) {
            return bad("proxy weights must be finite and non-negative".into());
        }
        Ok(())
    }
}

/// Per-module random stream: the same seed gives independent sequences for
/// different modules.
pub fn module_rng(seed: u64, module: &str) -> ChaCha8Rng {
    let digest = Sha256::digest(module.as_bytes());
    let mut stream = [0u8; 8];
    stream.copy_from_slice(&digest[..8]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from_le_bytes(stream));
    rng
}

/// The knowledge generation actually gets to see.
pub fn visible_knowledge(kb: &KnowledgeBase, patterns: &PatternIndex, guided: bool) -> (KnowledgeBase, PatternIndex) {
    if guided {
        (kb.clone(), patterns.clone())
    } else {
        (kb.signatures_only(), PatternIndex::empty())
    }
}

/// Runs the configured backend.
pub fn generate(
    kb: &KnowledgeBase,
    patterns: &PatternIndex,
    module: &str,
    cfg: &GenConfig,
    feedback: Option<&feedback::PriorRun>,
) -> Result<TestSuite, SynthError> {
    cfg.validate()?;
    let (kb, patterns) = visible_knowledge(kb, patterns, cfg.guided);
    let mut suite = match cfg.backend {
        Backend::Random => gen_random_suite(&kb, &patterns, module, cfg)?,
        Backend::Search => gen_search_suite(&kb, &patterns, module, cfg, feedback)?,
    };
    suite.guided = cfg.guided;
    Ok(suite)
}
